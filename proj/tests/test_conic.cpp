#include <catch2/catch_amalgamated.hpp>

#include "fixlay/conic/solver.hpp"

#include <random>

using namespace fixlay;
using namespace fixlay::conic;

namespace {

Vec random_interior(ConeKind kind, int size, std::mt19937_64& rng) {
    auto u01 = [&rng] { return fixlay::detail::uniform01(rng); };
    switch (kind) {
    case ConeKind::NonNeg: {
        Vec v(size);
        for (int i = 0; i < size; ++i)
            v(i) = 0.1 + 2.0 * u01();
        return v;
    }
    case ConeKind::SecondOrder: {
        Vec v(size);
        for (int i = 1; i < size; ++i)
            v(i) = 2.0 * u01() - 1.0;
        v(0) = v.tail(size - 1).norm() + 0.1 + u01();
        return v;
    }
    case ConeKind::Psd: {
        Mat g(size, size);
        for (int i = 0; i < size; ++i)
            for (int j = 0; j < size; ++j)
                g(i, j) = 2.0 * u01() - 1.0;
        Mat x = g * g.transpose() + 0.1 * Mat::Identity(size, size);
        return svec(x);
    }
    default:
        return Vec::Zero(size);
    }
}

SpMat from_triplets(int rows, int cols, const std::vector<Triplet>& trips) {
    SpMat a(rows, cols);
    a.setFromTriplets(trips.begin(), trips.end());
    return a;
}

} // namespace

TEST_CASE("svec round trip preserves inner products") {
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        const int p = 2 + static_cast<int>(rng() % 6);
        Mat a(p, p), b(p, p);
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j) {
                a(i, j) = fixlay::detail::uniform01(rng) - 0.5;
                b(i, j) = fixlay::detail::uniform01(rng) - 0.5;
            }
        a = Mat(0.5 * (a + a.transpose()));
        b = Mat(0.5 * (b + b.transpose()));
        REQUIRE(smat(svec(a), p).isApprox(a, 1e-14));
        const double dot_svec = svec(a).dot(svec(b));
        const double dot_frob = (a.array() * b.array()).sum();
        REQUIRE(dot_svec == Catch::Approx(dot_frob).margin(1e-12));
    }
}

TEST_CASE("NT scaling satisfies lambda = W^{-1} x = W s and H s = x") {
    std::mt19937_64 rng(42);
    const std::vector<std::pair<ConeKind, int>> blocks = {
        {ConeKind::NonNeg, 5}, {ConeKind::SecondOrder, 4}, {ConeKind::Psd, 4}};
    for (const auto& [kind, size] : blocks) {
        for (int rep = 0; rep < 10; ++rep) {
            const Vec x = random_interior(kind, size, rng);
            const Vec s = random_interior(kind, size, rng);
            const auto sc = conic::detail::compute_scaling(kind, 0, size, x, s);
            const Vec l1 = conic::detail::scale_Winv(sc, x);
            const Vec l2 = conic::detail::scale_W(sc, s);
            REQUIRE((l1 - l2).norm() <= 1e-9 * (1.0 + l1.norm()));
            REQUIRE((l1 - sc.lambda).norm() <= 1e-9 * (1.0 + l1.norm()));
            // H s = x
            const Vec hs = conic::detail::scale_H(sc, s);
            REQUIRE((hs - x).norm() <= 1e-9 * (1.0 + x.norm()));
            // the s-side back map undoes the s-side scaling
            const Vec rt = conic::detail::scale_Winv_sadj(sc, conic::detail::scale_W(sc, s));
            REQUIRE((rt - s).norm() <= 1e-9 * (1.0 + s.norm()));
        }
    }
}

TEST_CASE("SOC max step matches boundary") {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 50; ++rep) {
        const Vec u = random_interior(ConeKind::SecondOrder, 5, rng);
        Vec d(5);
        for (int i = 0; i < 5; ++i)
            d(i) = 2.0 * fixlay::detail::uniform01(rng) - 1.0;
        const double a = soc_max_step(u, d);
        if (std::isfinite(a)) {
            const Vec ub = u + a * d;
            REQUIRE(std::abs(soc_quad(ub)) <= 1e-8 * (1.0 + u.squaredNorm() + d.squaredNorm()));
            const Vec uin = u + 0.99 * a * d;
            REQUIRE(soc_quad(uin) >= 0);
            REQUIRE(uin(0) >= 0);
        } else {
            // direction never leaves: big steps stay inside
            const Vec far = u + 1e6 * d;
            REQUIRE(soc_quad(far) >= -1e-6 * far.squaredNorm());
        }
    }
}

TEST_CASE("SOC norm problem solves to 5") {
    // min t  s.t.  (t, z1, z2) in SOC, z1 = 3, z2 = 4
    ConicProgram p;
    p.c = Vec::Zero(3);
    p.c(0) = 1.0;
    p.b = Vec(2);
    p.b << 3.0, 4.0;
    p.A = from_triplets(2, 3, {{0, 1, 1.0}, {1, 2, 1.0}});
    p.cones = {{ConeKind::SecondOrder, 3}};

    const auto sol = conic::solve(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    REQUIRE(sol.x(0) == Catch::Approx(5.0).epsilon(1e-6));
    REQUIRE(sol.residuals.primal <= 1e-8);
    REQUIRE(sol.residuals.dual <= 1e-8);
    REQUIRE(sol.residuals.gap <= 1e-8);
    REQUIRE(sol.solve_seconds < 1.0);
}

TEST_CASE("2x2 trace minimization SDP") {
    // min tr(X) s.t. X11 = 1, X psd  ->  optimum 1 at X = e1 e1'
    ConicProgram p;
    p.c = Vec::Zero(3);
    p.c(svec_index(0, 0)) = 1.0;
    p.c(svec_index(1, 1)) = 1.0;
    p.b = Vec(1);
    p.b << 1.0;
    p.A = from_triplets(1, 3, {{0, svec_index(0, 0), 1.0}});
    p.cones = {{ConeKind::Psd, 2}};

    const auto sol = conic::solve(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    const Mat x = smat(sol.x, 2);
    REQUIRE(x.trace() == Catch::Approx(1.0).epsilon(1e-6));
    REQUIRE(x(0, 0) == Catch::Approx(1.0).epsilon(1e-6));
    REQUIRE(std::abs(x(1, 1)) <= 1e-6);
    REQUIRE(sol.residuals.primal <= 1e-8);
    REQUIRE(sol.residuals.dual <= 1e-8);
    REQUIRE(sol.residuals.gap <= 1e-8);
    REQUIRE(sol.solve_seconds < 1.0);
}

TEST_CASE("infeasible LP yields a primal infeasibility certificate") {
    // min x  s.t.  x = -1, x >= 0
    ConicProgram p;
    p.c = Vec::Ones(1);
    p.b = Vec(1);
    p.b << -1.0;
    p.A = from_triplets(1, 1, {{0, 0, 1.0}});
    p.cones = {{ConeKind::NonNeg, 1}};

    const auto sol = conic::solve(p);
    REQUIRE(sol.status == SolveStatus::PrimalInfeasible);
    // certificate: A'y + s = 0, s >= 0, b'y > 0
    REQUIRE(p.b.dot(sol.y) > 0);
    REQUIRE((p.A.transpose() * sol.y + sol.s).norm() <= 1e-6);
}

TEST_CASE("unbounded LP yields a dual infeasibility certificate") {
    // min -x1 s.t. x1 - x2 = 0, x >= 0  (unbounded along (1,1))
    ConicProgram p;
    p.c = Vec(2);
    p.c << -1.0, 0.0;
    p.b = Vec::Zero(1);
    p.A = from_triplets(1, 2, {{0, 0, 1.0}, {0, 1, -1.0}});
    p.cones = {{ConeKind::NonNeg, 2}};

    const auto sol = conic::solve(p);
    REQUIRE(sol.status == SolveStatus::DualInfeasible);
    // certificate: x in cone, Ax = 0, c'x < 0
    REQUIRE(p.c.dot(sol.x) < 0);
    REQUIRE((p.A * sol.x).norm() <= 1e-6);
}

TEST_CASE("zero cone blocks pin variables") {
    // min x2 s.t. x1 + x2 = 2, x1 in Zero -> x1 = 0, x2 = 2
    ConicProgram p;
    p.c = Vec(2);
    p.c << 0.0, 1.0;
    p.b = Vec(1);
    p.b << 2.0;
    p.A = from_triplets(1, 2, {{0, 0, 1.0}, {0, 1, 1.0}});
    p.cones = {{ConeKind::Zero, 1}, {ConeKind::NonNeg, 1}};

    const auto sol = conic::solve(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    REQUIRE(sol.x(0) == 0.0);
    REQUIRE(sol.x(1) == Catch::Approx(2.0).epsilon(1e-7));
}

TEST_CASE("residuals are exact on analytic solutions and sensitive to noise") {
    ConicProgram p;
    p.c = Vec::Zero(3);
    p.c(0) = 1.0;
    p.b = Vec(2);
    p.b << 3.0, 4.0;
    p.A = from_triplets(2, 3, {{0, 1, 1.0}, {1, 2, 1.0}});
    p.cones = {{ConeKind::SecondOrder, 3}};

    // analytic optimum: x = (5,3,4); dual y = (3,4)/5, s = c - A'y = (1, -3/5, -4/5)
    Vec x(3), y(2), s(3);
    x << 5, 3, 4;
    y << 0.6, 0.8;
    s << 1.0, -0.6, -0.8;
    const auto r = residuals(p, x, y, s);
    REQUIRE(r.primal <= 1e-12);
    REQUIRE(r.dual <= 1e-12);
    REQUIRE(r.gap <= 1e-12);

    Vec xp = x;
    xp(1) += 1e-3;
    const auto rp = residuals(p, xp, y, s);
    REQUIRE(rp.primal == Catch::Approx(1e-3 / (1.0 + p.b.norm())).epsilon(1e-6));

    // gap on a random feasible point equals the direct duality-gap formula
    Vec xr(3);
    xr << 9.0, 3.0, 4.0;
    const auto rg = residuals(p, xr, y, s);
    const double cx = p.c.dot(xr), by = p.b.dot(y);
    REQUIRE(rg.gap == Catch::Approx(std::abs(cx - by) / (1.0 + std::abs(cx) + std::abs(by))));
}

TEST_CASE("weak duality holds along the iterate trace") {
    ConicProgram p;
    p.c = Vec::Zero(3);
    p.c(svec_index(0, 0)) = 1.0;
    p.c(svec_index(1, 1)) = 2.0;
    p.b = Vec(2);
    p.b << 1.0, 0.4;
    p.A = from_triplets(2, 3, {{0, svec_index(0, 0), 1.0}, {1, svec_index(0, 1), 1.0}});
    p.cones = {{ConeKind::Psd, 2}};

    const auto sol = conic::solve(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    for (const auto& st : sol.trace)
        if (st.primal < 1e-6 && st.dual < 1e-6)
            REQUIRE(st.obj_primal - st.obj_dual >= -1e-6 * (1.0 + std::abs(st.obj_primal)));
}

TEST_CASE("solutions satisfy cone membership at tolerance") {
    std::mt19937_64 rng(11);
    // random feasibility-guaranteed program: pick interior x0, build b = A x0
    const int n = 3 + 1 + 6; // soc(3) + nonneg(1) + psd(3)
    std::vector<Cone> cones = {{ConeKind::SecondOrder, 3}, {ConeKind::NonNeg, 1}, {ConeKind::Psd, 3}};
    Vec x0(n);
    x0 << random_interior(ConeKind::SecondOrder, 3, rng), random_interior(ConeKind::NonNeg, 1, rng),
        random_interior(ConeKind::Psd, 3, rng);
    std::vector<Triplet> trips;
    for (int r = 0; r < 4; ++r)
        for (int cidx = 0; cidx < n; ++cidx)
            if (rng() % 3 == 0)
                trips.emplace_back(r, cidx, 2.0 * fixlay::detail::uniform01(rng) - 1.0);
    ConicProgram p;
    p.A = from_triplets(4, n, trips);
    p.b = p.A * x0;
    p.c = Vec::Ones(n);
    p.cones = cones;

    const auto sol = conic::solve(p);
    // random degenerate programs may stop at the conditioning wall slightly
    // above the 1e-8 target; the returned point must still be near-optimal
    const double worst = std::max({sol.residuals.primal, sol.residuals.dual, sol.residuals.gap});
    REQUIRE(worst <= 1e-6);
    REQUIRE(sol.x.segment(0, 3)(0) >= sol.x.segment(1, 2).norm() - 1e-7);
    REQUIRE(sol.x(3) >= -1e-7);
    Eigen::SelfAdjointEigenSolver<Mat> eig(smat(sol.x.segment(4, 6), 3));
    REQUIRE(eig.eigenvalues().minCoeff() >= -1e-7 * std::max(1.0, eig.eigenvalues().maxCoeff()));
}

TEST_CASE("solver is deterministic") {
    ConicProgram p;
    p.c = Vec::Zero(3);
    p.c(0) = 1.0;
    p.b = Vec(2);
    p.b << 3.0, 4.0;
    p.A = from_triplets(2, 3, {{0, 1, 1.0}, {1, 2, 1.0}});
    p.cones = {{ConeKind::SecondOrder, 3}};
    const auto s1 = conic::solve(p);
    const auto s2 = conic::solve(p);
    REQUIRE(s1.x == s2.x);
    REQUIRE(s1.iterations == s2.iterations);
}
