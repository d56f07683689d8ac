#pragma once

#include "fixlay/fe/assembly.hpp"

#include <json.hpp>

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace fixlay::fe {

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string lower(std::string s) {
    for (auto& c : s)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

} // namespace detail

/// Write K in Matrix Market coordinate/symmetric form (lower triangle,
/// 1-based) and F_g as one decimal per line. Values round-trip exactly.
inline void save_system(const GlobalSystem& sys, const std::string& k_path,
                        const std::string& fg_path) {
    {
        std::ofstream out(k_path);
        if (!out)
            throw parse_error("cannot open " + k_path + " for writing");
        std::vector<std::string> lines;
        long long nnz = 0;
        std::ostringstream body;
        for (int col = 0; col < sys.K.outerSize(); ++col) {
            for (SpMat::InnerIterator it(sys.K, col); it; ++it) {
                if (it.row() < it.col())
                    continue; // store lower triangle only
                body << (it.row() + 1) << ' ' << (it.col() + 1) << ' '
                     << detail::fmt_double(it.value()) << '\n';
                ++nnz;
            }
        }
        out << "%%MatrixMarket matrix coordinate real symmetric\n";
        out << sys.K.rows() << ' ' << sys.K.cols() << ' ' << nnz << '\n';
        out << body.str();
    }
    {
        std::ofstream out(fg_path);
        if (!out)
            throw parse_error("cannot open " + fg_path + " for writing");
        for (Eigen::Index i = 0; i < sys.F_g.size(); ++i)
            out << detail::fmt_double(sys.F_g(i)) << '\n';
    }
}

inline SpMat load_matrix_market(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw parse_error("cannot open " + path);
    std::string line;
    int lineno = 0;

    if (!std::getline(in, line))
        throw parse_error(path + ":1: empty file");
    ++lineno;
    {
        std::istringstream hdr(detail::lower(line));
        std::string banner, object, format, field, symmetry;
        hdr >> banner >> object >> format >> field >> symmetry;
        if (banner != "%%matrixmarket" || object != "matrix")
            throw parse_error(path + ":1: not a MatrixMarket matrix header");
        if (format != "coordinate" || field != "real")
            throw parse_error(path + ":1: expected 'coordinate real' format");
        if (symmetry != "symmetric" && symmetry != "general")
            throw parse_error(path + ":1: unsupported symmetry '" + symmetry + "'");
        const bool symmetric = (symmetry == "symmetric");

        long long rows = -1, cols = -1, nnz = -1;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty() || line[0] == '%')
                continue;
            std::istringstream sz(line);
            if (!(sz >> rows >> cols >> nnz))
                throw parse_error(path + ":" + std::to_string(lineno) + ": bad size line");
            break;
        }
        if (rows < 0)
            throw parse_error(path + ": missing size line");
        if (rows != cols)
            throw dimension_mismatch_error(path + ": matrix is not square (" +
                                           std::to_string(rows) + "x" + std::to_string(cols) + ")");

        std::map<std::pair<int, int>, double> entries;
        long long seen = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty() || line[0] == '%')
                continue;
            std::istringstream es(line);
            long long i, j;
            double v;
            if (!(es >> i >> j >> v))
                throw parse_error(path + ":" + std::to_string(lineno) + ": bad entry line");
            if (i < 1 || i > rows || j < 1 || j > cols)
                throw parse_error(path + ":" + std::to_string(lineno) + ": index out of range");
            const auto key = std::make_pair(static_cast<int>(i - 1), static_cast<int>(j - 1));
            if (!entries.emplace(key, v).second)
                throw parse_error(path + ":" + std::to_string(lineno) + ": duplicate entry");
            ++seen;
        }
        if (seen != nnz)
            throw parse_error(path + ": entry count " + std::to_string(seen) +
                              " does not match header nnz " + std::to_string(nnz));

        std::vector<Triplet> trips;
        trips.reserve(entries.size() * 2);
        if (symmetric) {
            for (const auto& [ij, v] : entries) {
                trips.emplace_back(ij.first, ij.second, v);
                if (ij.first != ij.second)
                    trips.emplace_back(ij.second, ij.first, v);
            }
        } else {
            // a general file must carry an exactly symmetric matrix
            for (const auto& [ij, v] : entries) {
                if (ij.first == ij.second)
                    continue;
                auto it = entries.find(std::make_pair(ij.second, ij.first));
                if (it == entries.end() || it->second != v)
                    throw symmetry_violation_error(path + ": entry (" +
                                                   std::to_string(ij.first + 1) + "," +
                                                   std::to_string(ij.second + 1) +
                                                   ") has no matching transpose value");
            }
            for (const auto& [ij, v] : entries)
                trips.emplace_back(ij.first, ij.second, v);
        }
        SpMat k(static_cast<int>(rows), static_cast<int>(cols));
        k.setFromTriplets(trips.begin(), trips.end());
        k.makeCompressed();
        return k;
    }
}

inline Vec load_vector(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw parse_error("cannot open " + path);
    std::vector<double> vals;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::istringstream ls(line);
        double v;
        if (!(ls >> v))
            throw parse_error(path + ":" + std::to_string(lineno) + ": bad value");
        std::string extra;
        if (ls >> extra)
            throw parse_error(path + ":" + std::to_string(lineno) + ": trailing data");
        vals.push_back(v);
    }
    return Eigen::Map<Vec>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

inline GlobalSystem load_system(const std::string& k_path, const std::string& fg_path) {
    GlobalSystem sys;
    sys.K = load_matrix_market(k_path);
    sys.F_g = load_vector(fg_path);
    if (sys.F_g.size() != sys.K.rows())
        throw dimension_mismatch_error("F_g has " + std::to_string(sys.F_g.size()) +
                                       " entries but K is " + std::to_string(sys.K.rows()) + "x" +
                                       std::to_string(sys.K.cols()));
    if (sys.K.rows() % 6 != 0)
        throw dimension_mismatch_error("system dimension " + std::to_string(sys.K.rows()) +
                                       " is not a multiple of 6");
    return sys;
}

inline nlohmann::ordered_json to_json(const FrameSpec& spec) {
    return nlohmann::ordered_json{{"n_rings", spec.n_rings},
                                  {"n_stringers", spec.n_stringers},
                                  {"radius", spec.radius},
                                  {"length", spec.length},
                                  {"E", spec.section.E},
                                  {"G", spec.section.G},
                                  {"A", spec.section.A},
                                  {"Iy", spec.section.Iy},
                                  {"Iz", spec.section.Iz},
                                  {"J", spec.section.J},
                                  {"rho", spec.section.rho},
                                  {"gravity", {spec.gravity.x(), spec.gravity.y(), spec.gravity.z()}}};
}

inline FrameSpec frame_spec_from_json(const nlohmann::json& j) {
    FrameSpec spec;
    try {
        spec.n_rings = j.at("n_rings").get<int>();
        spec.n_stringers = j.at("n_stringers").get<int>();
        spec.radius = j.at("radius").get<double>();
        spec.length = j.at("length").get<double>();
        spec.section.E = j.at("E").get<double>();
        spec.section.G = j.at("G").get<double>();
        spec.section.A = j.at("A").get<double>();
        spec.section.Iy = j.at("Iy").get<double>();
        spec.section.Iz = j.at("Iz").get<double>();
        spec.section.J = j.at("J").get<double>();
        spec.section.rho = j.at("rho").get<double>();
        const auto& g = j.at("gravity");
        if (!g.is_array() || g.size() != 3)
            throw parse_error("gravity must be a 3-array");
        spec.gravity = Vector3d(g[0].get<double>(), g[1].get<double>(), g[2].get<double>());
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("bad frame spec: ") + e.what());
    }
    return spec;
}

} // namespace fixlay::fe
