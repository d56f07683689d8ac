#pragma once

#include "fixlay/conic/cones.hpp"

#include <json.hpp>

#include <numeric>

namespace fixlay::conic {

/// Standard-form conic program
///     minimize    c'x
///     subject to  A x = b,  x in K
/// where K is the product of the listed cone blocks, in order, partitioning
/// the variable vector. PSD blocks live in svec coordinates.
struct ConicProgram {
    Vec c;
    SpMat A;
    Vec b;
    std::vector<Cone> cones;

    int num_vars() const { return static_cast<int>(c.size()); }
    int num_rows() const { return static_cast<int>(b.size()); }
    int degree() const {
        return std::accumulate(cones.begin(), cones.end(), 0,
                               [](int acc, const Cone& k) { return acc + k.degree(); });
    }
};

inline void validate(const ConicProgram& p) {
    int total = 0;
    for (const auto& k : p.cones) {
        if (k.size <= 0)
            throw invalid_spec_error("cone block with nonpositive size");
        total += k.dim();
    }
    if (total != p.num_vars())
        throw dimension_mismatch_error("cone sizes sum to " + std::to_string(total) +
                                       " but the program has " + std::to_string(p.num_vars()) +
                                       " variables");
    if (p.A.rows() != p.b.size() || p.A.cols() != p.c.size())
        throw dimension_mismatch_error("A is " + std::to_string(p.A.rows()) + "x" +
                                       std::to_string(p.A.cols()) + ", expected " +
                                       std::to_string(p.b.size()) + "x" +
                                       std::to_string(p.c.size()));
}

struct Residuals {
    double primal = 0;
    double dual = 0;
    double gap = 0;
};

/// Relative KKT residuals of a candidate primal-dual triple:
/// primal ||Ax-b||/(1+||b||), dual ||A'y+s-c||/(1+||c||),
/// gap |c'x-b'y|/(1+|c'x|+|b'y|).
inline Residuals residuals(const ConicProgram& p, const Vec& x, const Vec& y, const Vec& s) {
    Residuals r;
    r.primal = (p.A * x - p.b).norm() / (1.0 + p.b.norm());
    r.dual = (p.A.transpose() * y + s - p.c).norm() / (1.0 + p.c.norm());
    const double cx = p.c.dot(x);
    const double by = p.b.dot(y);
    r.gap = std::abs(cx - by) / (1.0 + std::abs(cx) + std::abs(by));
    return r;
}

/// Debug dump of the program data for cross-checking against an external
/// solver. Schema: {"num_vars", "num_rows", "c", "b",
/// "A": {"triplets": [[row, col, value], ...]},
/// "cones": [{"kind": "zero|nonneg|soc|psd", "size": n}, ...]}.
inline nlohmann::ordered_json to_json(const ConicProgram& p) {
    nlohmann::ordered_json j;
    j["num_vars"] = p.num_vars();
    j["num_rows"] = p.num_rows();
    j["c"] = std::vector<double>(p.c.data(), p.c.data() + p.c.size());
    j["b"] = std::vector<double>(p.b.data(), p.b.data() + p.b.size());
    auto trips = nlohmann::ordered_json::array();
    for (int col = 0; col < p.A.outerSize(); ++col)
        for (SpMat::InnerIterator it(p.A, col); it; ++it)
            trips.push_back({it.row(), it.col(), it.value()});
    j["A"] = {{"triplets", std::move(trips)}};
    auto cones = nlohmann::ordered_json::array();
    for (const auto& k : p.cones)
        cones.push_back({{"kind", to_string(k.kind)}, {"size", k.size}});
    j["cones"] = std::move(cones);
    return j;
}

} // namespace fixlay::conic
