#include <catch2/catch_amalgamated.hpp>

#include "fixlay/fe/io.hpp"
#include "support/instances.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace fixlay;
using namespace fixlay::fe;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("fixlay_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

} // namespace

TEST_CASE("save/load round trip is bit exact") {
    auto spec = testsupport::small_frame_spec();
    spec.gravity = Vector3d(0.1, -9.81, 0.0);
    const GlobalSystem sys = assemble_system(build_frame_model(spec));

    TempDir dir;
    save_system(sys, dir.file("K.mtx"), dir.file("Fg.txt"));
    const GlobalSystem back = load_system(dir.file("K.mtx"), dir.file("Fg.txt"));

    REQUIRE(back.K.rows() == sys.K.rows());
    REQUIRE((back.K - sys.K).norm() == 0.0);
    REQUIRE(back.F_g == sys.F_g);
}

TEST_CASE("matrix market headers: symmetric accepted, asymmetric general rejected") {
    TempDir dir;
    {
        std::ofstream out(dir.file("sym.mtx"));
        out << "%%MatrixMarket matrix coordinate real symmetric\n";
        out << "12 12 2\n";
        out << "1 1 4.0\n2 1 -1.0\n";
    }
    const SpMat k = load_matrix_market(dir.file("sym.mtx"));
    REQUIRE(k.coeff(0, 1) == -1.0); // mirrored
    REQUIRE(k.coeff(1, 0) == -1.0);

    {
        std::ofstream out(dir.file("gen.mtx"));
        out << "%%MatrixMarket matrix coordinate real general\n";
        out << "12 12 3\n";
        out << "1 1 4.0\n1 2 -1.0\n2 1 -2.0\n";
    }
    REQUIRE_THROWS_AS(load_matrix_market(dir.file("gen.mtx")), symmetry_violation_error);

    {
        std::ofstream out(dir.file("gen_ok.mtx"));
        out << "%%MatrixMarket matrix coordinate real general\n";
        out << "12 12 3\n";
        out << "1 1 4.0\n1 2 -1.0\n2 1 -1.0\n";
    }
    const SpMat g = load_matrix_market(dir.file("gen_ok.mtx"));
    REQUIRE(g.coeff(0, 1) == -1.0);
}

TEST_CASE("load_system rejects mismatched vector length") {
    auto spec = testsupport::small_frame_spec();
    spec.gravity = Vector3d(0.0, -1.0, 0.0);
    const GlobalSystem sys = assemble_system(build_frame_model(spec));
    TempDir dir;
    save_system(sys, dir.file("K.mtx"), dir.file("Fg.txt"));

    // drop the last line of F_g
    {
        std::ifstream in(dir.file("Fg.txt"));
        std::vector<std::string> lines;
        std::string line;
        while (std::getline(in, line))
            lines.push_back(line);
        std::ofstream out(dir.file("Fg_short.txt"));
        for (std::size_t i = 0; i + 1 < lines.size(); ++i)
            out << lines[i] << '\n';
    }
    REQUIRE_THROWS_AS(load_system(dir.file("K.mtx"), dir.file("Fg_short.txt")),
                      dimension_mismatch_error);
}

TEST_CASE("parse errors carry line numbers") {
    TempDir dir;
    {
        std::ofstream out(dir.file("bad.mtx"));
        out << "%%MatrixMarket matrix coordinate real symmetric\n";
        out << "6 6 1\n";
        out << "1 oops 3.5\n";
    }
    try {
        load_matrix_market(dir.file("bad.mtx"));
        FAIL("expected parse_error");
    } catch (const parse_error& e) {
        REQUIRE(std::string(e.what()).find(":3:") != std::string::npos);
    }

    {
        std::ofstream out(dir.file("bad_vec.txt"));
        out << "1.5\nnot_a_number\n";
    }
    try {
        load_vector(dir.file("bad_vec.txt"));
        FAIL("expected parse_error");
    } catch (const parse_error& e) {
        REQUIRE(std::string(e.what()).find(":2:") != std::string::npos);
    }
}

TEST_CASE("frame spec JSON round trip") {
    const FrameSpec spec = default_frame_spec();
    const auto j = to_json(spec);
    const FrameSpec back = frame_spec_from_json(j);
    REQUIRE(back.n_rings == spec.n_rings);
    REQUIRE(back.n_stringers == spec.n_stringers);
    REQUIRE(back.radius == spec.radius);
    REQUIRE(back.length == spec.length);
    REQUIRE(back.section.E == spec.section.E);
    REQUIRE(back.section.rho == spec.section.rho);
    REQUIRE(back.gravity == spec.gravity);

    nlohmann::json missing = j;
    missing.erase("rho");
    REQUIRE_THROWS_AS(frame_spec_from_json(missing), parse_error);
}
