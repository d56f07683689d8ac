#pragma once

#include "fixlay/conic/program.hpp"

#include <algorithm>
#include <chrono>

namespace fixlay::conic {

enum class SolveStatus { Optimal, PrimalInfeasible, DualInfeasible, IterLimit, NumericalFailure };

inline const char* to_string(SolveStatus s) {
    switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::PrimalInfeasible: return "primal_infeasible";
    case SolveStatus::DualInfeasible: return "dual_infeasible";
    case SolveStatus::IterLimit: return "iter_limit";
    case SolveStatus::NumericalFailure: return "numerical_failure";
    }
    return "?";
}

struct Settings {
    double tol_feas = 1e-8;
    double tol_gap = 1e-8;
    int max_iter = 200;
    double step_fraction = 0.99;
    bool collect_trace = true;
};

struct IterStats {
    double primal = 0, dual = 0, gap = 0;
    double mu = 0, step = 0;
    double obj_primal = 0, obj_dual = 0;
};

struct ConicSolution {
    Vec x, y, s;
    SolveStatus status = SolveStatus::NumericalFailure;
    Residuals residuals;
    int iterations = 0;
    std::vector<IterStats> trace;
    double solve_seconds = 0;
};

namespace detail {

// Nesterov-Todd scaling data for one cone block. lambda = W^{-1} x = W s
// is the scaled point; H = W^2 satisfies H s = x.
struct BlockScaling {
    ConeKind kind = ConeKind::NonNeg;
    int offset = 0; ///< first coordinate of the block in the variable vector
    int dim = 0;    ///< coordinate count (svec length for PSD)
    int side = 0;   ///< matrix side for PSD

    Vec w;       // NonNeg: W = diag(w)
    double eta = 1.0;
    Vec v;       // SOC half-vector, W = eta (2 v v' - J)
    Vec wbar;    // SOC scaling point, H = eta^2 (2 wbar wbar' - J)
    Mat R, Rinv; // PSD: lambda = R^{-1} X R^{-T} = R' S R  (diagonal)
    Mat T;       // PSD: T = R R', H(V) = T V T
    Vec d;       // PSD: diagonal of lambda

    Vec lambda;  // scaled point for this block
};

inline Vec j_apply(const Vec& u) {
    Vec r = -u;
    r(0) = u(0);
    return r;
}

inline BlockScaling compute_scaling(ConeKind kind, int offset, int size, const Vec& xb,
                                    const Vec& sb) {
    BlockScaling sc;
    sc.kind = kind;
    sc.offset = offset;
    switch (kind) {
    case ConeKind::Zero:
        throw numerical_error("zero blocks must be eliminated before scaling");
    case ConeKind::NonNeg: {
        sc.dim = size;
        sc.w = (xb.array() / sb.array()).sqrt();
        sc.lambda = (xb.array() * sb.array()).sqrt();
        break;
    }
    case ConeKind::SecondOrder: {
        sc.dim = size;
        const double qx = soc_quad(xb);
        const double qs = soc_quad(sb);
        if (qx <= 0 || qs <= 0)
            throw numerical_error("SOC iterate left the cone interior");
        const double alpha = std::sqrt(qx);
        const double beta = std::sqrt(qs);
        const Vec xt = xb / alpha;
        const Vec st = sb / beta;
        const double gamma = std::sqrt((1.0 + xt.dot(st)) / 2.0);
        sc.wbar = (xt + j_apply(st)) / (2.0 * gamma);
        Vec vh = sc.wbar;
        vh(0) += 1.0;
        sc.v = vh / std::sqrt(2.0 * vh(0));
        sc.eta = std::sqrt(alpha / beta);
        // lambda = W s
        sc.lambda = sc.eta * (2.0 * sc.v * sc.v.dot(sb) - j_apply(sb));
        break;
    }
    case ConeKind::Psd: {
        sc.side = size;
        sc.dim = svec_len(size);
        const Mat X = smat(xb, size);
        const Mat S = smat(sb, size);
        Eigen::LLT<Mat> llt(S);
        if (llt.info() != Eigen::Success)
            throw numerical_error("PSD dual iterate lost definiteness");
        const Mat L = llt.matrixL();
        const Mat M = L.transpose() * X * L;
        Eigen::SelfAdjointEigenSolver<Mat> eig(M);
        if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0)
            throw numerical_error("PSD primal iterate lost definiteness");
        const Vec lam = eig.eigenvalues();
        const Mat U = eig.eigenvectors();
        const Vec q4 = lam.array().pow(0.25);
        // R = L^{-T} U diag(q4); Rinv = diag(1/q4) U' L'
        sc.R = L.transpose().triangularView<Eigen::Upper>().solve(Mat(U * q4.asDiagonal()));
        sc.Rinv = q4.cwiseInverse().asDiagonal() * U.transpose() * L.transpose();
        sc.T = sc.R * sc.R.transpose();
        sc.d = lam.array().sqrt();
        Mat lam_mat = Mat::Zero(size, size);
        lam_mat.diagonal() = sc.d;
        sc.lambda = svec(lam_mat);
        break;
    }
    }
    return sc;
}

inline Vec scale_W(const BlockScaling& sc, const Vec& u) {
    switch (sc.kind) {
    case ConeKind::NonNeg:
        return sc.w.cwiseProduct(u);
    case ConeKind::SecondOrder:
        return sc.eta * (2.0 * sc.v * sc.v.dot(u) - j_apply(u));
    case ConeKind::Psd:
        return svec(sc.R.transpose() * smat(u, sc.side) * sc.R);
    default:
        throw numerical_error("scale_W on zero block");
    }
}

inline Vec scale_Winv(const BlockScaling& sc, const Vec& u) {
    switch (sc.kind) {
    case ConeKind::NonNeg:
        return u.cwiseQuotient(sc.w);
    case ConeKind::SecondOrder: {
        const Vec jv = j_apply(sc.v);
        return (2.0 * jv * jv.dot(u) - j_apply(u)) / sc.eta;
    }
    case ConeKind::Psd: {
        const Mat X = smat(u, sc.side);
        return svec(sc.Rinv * X * sc.Rinv.transpose());
    }
    default:
        throw numerical_error("scale_Winv on zero block");
    }
}

/// Inverse of the s-side scaling map: takes a scaled-space matrix back to
/// an s-like object. Coincides with scale_Winv except on PSD blocks, where
/// the x-side and s-side congruences differ.
inline Vec scale_Winv_sadj(const BlockScaling& sc, const Vec& u) {
    if (sc.kind == ConeKind::Psd) {
        const Mat X = smat(u, sc.side);
        return svec(sc.Rinv.transpose() * X * sc.Rinv);
    }
    return scale_Winv(sc, u);
}

/// H = W^2 as a symmetric operator: H s = x at the scaling point.
inline Vec scale_H(const BlockScaling& sc, const Vec& u) {
    switch (sc.kind) {
    case ConeKind::NonNeg:
        return sc.w.array().square().matrix().cwiseProduct(u);
    case ConeKind::SecondOrder: {
        const double e2 = sc.eta * sc.eta;
        return e2 * (2.0 * sc.wbar * sc.wbar.dot(u) - j_apply(u));
    }
    case ConeKind::Psd: {
        const Mat X = smat(u, sc.side);
        return svec(sc.T * X * sc.T);
    }
    default:
        throw numerical_error("scale_H on zero block");
    }
}

inline Vec jordan_product(const BlockScaling& sc, const Vec& u, const Vec& v) {
    switch (sc.kind) {
    case ConeKind::NonNeg:
        return u.cwiseProduct(v);
    case ConeKind::SecondOrder:
        return soc_product(u, v);
    case ConeKind::Psd: {
        const Mat U = smat(u, sc.side);
        const Mat V = smat(v, sc.side);
        const Mat P = 0.5 * (U * V + V * U);
        return svec(P);
    }
    default:
        throw numerical_error("jordan_product on zero block");
    }
}

/// Solve lambda o r = u for r, with this block's (diagonalized) lambda.
inline Vec divide_by_lambda(const BlockScaling& sc, const Vec& u) {
    switch (sc.kind) {
    case ConeKind::NonNeg:
        return u.cwiseQuotient(sc.lambda);
    case ConeKind::SecondOrder:
        return soc_divide(sc.lambda, u);
    case ConeKind::Psd: {
        Mat U = smat(u, sc.side);
        for (int i = 0; i < sc.side; ++i)
            for (int j = 0; j < sc.side; ++j)
                U(i, j) = 2.0 * U(i, j) / (sc.d(i) + sc.d(j));
        return svec(U);
    }
    default:
        throw numerical_error("divide_by_lambda on zero block");
    }
}

inline Vec cone_identity(const Cone& k) {
    switch (k.kind) {
    case ConeKind::NonNeg:
        return Vec::Ones(k.size);
    case ConeKind::SecondOrder: {
        Vec e = Vec::Zero(k.size);
        e(0) = 1.0;
        return e;
    }
    case ConeKind::Psd:
        return svec(Mat::Identity(k.size, k.size));
    default:
        return Vec::Zero(k.size);
    }
}

/// Largest feasible step for u + alpha d within the block's cone.
inline double block_max_step(const Cone& k, const Vec& u, const Vec& d) {
    const double inf = std::numeric_limits<double>::infinity();
    switch (k.kind) {
    case ConeKind::NonNeg: {
        double best = inf;
        for (Eigen::Index i = 0; i < u.size(); ++i)
            if (d(i) < 0)
                best = std::min(best, -u(i) / d(i));
        return best;
    }
    case ConeKind::SecondOrder:
        return soc_max_step(u, d);
    case ConeKind::Psd: {
        const Mat U = smat(u, k.size);
        const Mat D = smat(d, k.size);
        Eigen::LLT<Mat> llt(U);
        if (llt.info() != Eigen::Success)
            return 0.0;
        const Mat L = llt.matrixL();
        Mat G = L.triangularView<Eigen::Lower>().solve(D);
        G = L.triangularView<Eigen::Lower>().solve(Mat(G.transpose()));
        Eigen::SelfAdjointEigenSolver<Mat> eig(G, Eigen::EigenvaluesOnly);
        const double lmin = eig.eigenvalues().minCoeff();
        return lmin >= 0 ? inf : -1.0 / lmin;
    }
    default:
        return inf;
    }
}

// H = W^2 applied to a sparse coefficient row; only the blocks the row
// touches are evaluated. PSD parts whose support is confined to one matrix
// row/column use a rank-two congruence instead of the dense one.
struct HApplier {
    const std::vector<Cone>* cones;
    const std::vector<BlockScaling>* scalings;
    std::vector<int> offsets;

    void init(const std::vector<Cone>& ks) {
        cones = &ks;
        offsets.assign(ks.size(), 0);
        int off = 0;
        for (std::size_t i = 0; i < ks.size(); ++i) {
            offsets[i] = off;
            off += ks[i].dim();
        }
    }

    /// out += H(row) where row is given as sorted (index, value) pairs; out
    /// is a dense n-vector. Returns the list of touched blocks.
    void apply_sparse(const std::vector<std::pair<int, double>>& entries, Vec& out,
                      std::vector<int>& touched) const {
        touched.clear();
        std::size_t pos = 0;
        for (std::size_t bi = 0; bi < cones->size(); ++bi) {
            const int off = offsets[bi];
            const int dim = (*cones)[bi].dim();
            if (pos >= entries.size())
                break;
            if (entries[pos].first >= off + dim)
                continue;
            // gather this block's entries
            std::vector<std::pair<int, double>> local;
            while (pos < entries.size() && entries[pos].first < off + dim) {
                local.emplace_back(entries[pos].first - off, entries[pos].second);
                ++pos;
            }
            touched.push_back(static_cast<int>(bi));
            apply_block((*scalings)[bi], (*cones)[bi], local, out, off);
        }
    }

    static void apply_block(const BlockScaling& sc, const Cone& k,
                            const std::vector<std::pair<int, double>>& local, Vec& out, int off) {
        switch (k.kind) {
        case ConeKind::NonNeg:
            for (const auto& [i, v] : local)
                out(off + i) += sc.w(i) * sc.w(i) * v;
            return;
        case ConeKind::SecondOrder: {
            // H u = eta^2 (2 wbar (wbar.u) - J u)
            double wu = 0;
            for (const auto& [i, v] : local)
                wu += sc.wbar(i) * v;
            const double e2 = sc.eta * sc.eta;
            out.segment(off, k.size) += e2 * 2.0 * wu * sc.wbar;
            for (const auto& [i, v] : local)
                out(off + i) += e2 * (i == 0 ? -v : v);
            return;
        }
        case ConeKind::Psd: {
            const int p = k.size;
            // decode svec entries into (i, j, matrix value)
            struct MEntry { int i, j; double v; };
            std::vector<MEntry> ments;
            ments.reserve(local.size());
            // candidate pivot: a matrix row/col containing every entry
            int c0 = -1, c1 = -1;
            bool first = true;
            for (const auto& [idx, val] : local) {
                // invert svec_index: find j with j(j+1)/2 <= idx
                int j = static_cast<int>((std::sqrt(8.0 * idx + 1.0) - 1.0) / 2.0);
                while (j * (j + 1) / 2 > idx)
                    --j;
                while ((j + 1) * (j + 2) / 2 <= idx)
                    ++j;
                const int i = idx - j * (j + 1) / 2;
                const double mv = (i == j) ? val : val / kSqrt2;
                ments.push_back({i, j, mv});
                if (first) {
                    c0 = i;
                    c1 = (j == i) ? -1 : j;
                    first = false;
                } else {
                    if (c0 != i && c0 != j)
                        c0 = -1;
                    if (c1 != i && c1 != j)
                        c1 = -1;
                    if (c0 < 0) {
                        c0 = c1;
                        c1 = -1;
                    }
                }
            }
            Mat Out(p, p);
            if (c0 >= 0) {
                // U = e_l a' + a e_l' with l = c0
                const int l = c0;
                Vec a = Vec::Zero(p);
                for (const auto& me : ments) {
                    if (me.i == l && me.j == l)
                        a(l) += 0.5 * me.v;
                    else if (me.i == l)
                        a(me.j) += me.v;
                    else
                        a(me.i) += me.v;
                }
                const Vec tl = sc.T.col(l);
                const Vec b = sc.T * a;
                Out.noalias() = tl * b.transpose();
                Out += b * tl.transpose();
            } else {
                Mat U = Mat::Zero(p, p);
                for (const auto& me : ments) {
                    U(me.i, me.j) = me.v;
                    U(me.j, me.i) = me.v;
                }
                Out.noalias() = sc.T * U * sc.T;
            }
            // accumulate svec(Out)
            int idx = 0;
            for (int j = 0; j < p; ++j)
                for (int i = 0; i <= j; ++i, ++idx)
                    out(off + idx) += (i == j) ? Out(i, j) : kSqrt2 * Out(i, j);
            return;
        }
        default:
            return;
        }
    }
};

} // namespace detail

/// Primal-dual path-following interior-point solve of a standard-form conic
/// program via the homogeneous self-dual embedding, with Nesterov-Todd
/// scaling and a Mehrotra predictor-corrector. Deterministic for fixed
/// inputs.
inline ConicSolution solve(const ConicProgram& input, const Settings& settings = {}) {
    const auto t_start = std::chrono::steady_clock::now();
    validate(input);

    ConicSolution sol;
    auto finish = [&](SolveStatus st) -> ConicSolution& {
        sol.status = st;
        sol.solve_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        return sol;
    };

    // ----- presolve: strip Zero blocks, drop zero / duplicate rows --------
    std::vector<Cone> cones;
    std::vector<int> keep_cols;
    {
        int off = 0;
        for (const auto& k : input.cones) {
            if (k.kind != ConeKind::Zero) {
                cones.push_back(k);
                for (int i = 0; i < k.dim(); ++i)
                    keep_cols.push_back(off + i);
            }
            off += k.dim();
        }
    }
    const int n = static_cast<int>(keep_cols.size());
    if (n == 0)
        throw invalid_spec_error("program has no free cone variables");

    Vec c(n);
    for (int i = 0; i < n; ++i)
        c(i) = input.c(keep_cols[i]);

    // row compaction on the column-reduced matrix
    Eigen::SparseMatrix<double, Eigen::RowMajor> a_rows;
    Vec b;
    {
        std::vector<int> col_of_full(input.num_vars(), -1);
        for (int i = 0; i < n; ++i)
            col_of_full[keep_cols[i]] = i;
        std::vector<std::vector<std::pair<int, double>>> rows(input.num_rows());
        for (int col = 0; col < input.A.outerSize(); ++col)
            for (SpMat::InnerIterator it(input.A, col); it; ++it)
                if (col_of_full[col] >= 0 && it.value() != 0.0)
                    rows[it.row()].emplace_back(col_of_full[col], it.value());
        for (auto& r : rows)
            std::sort(r.begin(), r.end());

        std::vector<int> keep_rows;
        for (int r = 0; r < input.num_rows(); ++r) {
            if (rows[r].empty()) {
                if (std::abs(input.b(r)) > 1e-14 * (1.0 + input.b.cwiseAbs().maxCoeff()))
                    return finish(SolveStatus::PrimalInfeasible);
                continue; // redundant zero row
            }
            bool dup = false;
            for (int q : keep_rows) {
                if (rows[q] == rows[r]) {
                    if (input.b(q) != input.b(r))
                        return finish(SolveStatus::PrimalInfeasible);
                    dup = true;
                    break;
                }
            }
            if (!dup)
                keep_rows.push_back(r);
        }
        const int m = static_cast<int>(keep_rows.size());
        b.resize(m);
        std::vector<Triplet> trips;
        for (int q = 0; q < m; ++q) {
            const int r = keep_rows[q];
            // equilibrate each row to unit infinity norm
            double scale = 0;
            for (const auto& [cidx, v] : rows[r])
                scale = std::max(scale, std::abs(v));
            if (scale <= 0)
                scale = 1;
            for (const auto& [cidx, v] : rows[r])
                trips.emplace_back(q, cidx, v / scale);
            b(q) = input.b(keep_rows[q]) / scale;
        }
        a_rows.resize(m, n);
        a_rows.setFromTriplets(trips.begin(), trips.end());
        a_rows.makeCompressed();
    }
    const int m = static_cast<int>(b.size());
    const SpMat A = a_rows; // column-major copy for products

    // ----- homogeneous self-dual state -------------------------------------
    Vec x(n), s(n);
    {
        int off = 0;
        for (const auto& k : cones) {
            const Vec e = detail::cone_identity(k);
            x.segment(off, k.dim()) = e;
            s.segment(off, k.dim()) = e;
            off += k.dim();
        }
    }
    Vec y = Vec::Zero(m);
    double tau = 1.0, kappa = 1.0;
    const int deg = std::accumulate(cones.begin(), cones.end(), 0,
                                    [](int acc, const Cone& k) { return acc + k.degree(); });

    detail::HApplier happ;
    happ.init(cones);
    std::vector<detail::BlockScaling> scalings(cones.size());
    happ.scalings = &scalings;

    // re-embed a candidate into the original variable space
    auto embed = [&](const Vec& xr, const Vec& yr, const Vec& sr) {
        Vec xf = Vec::Zero(input.num_vars());
        Vec sf = input.c;
        const Vec aty = input.A.transpose() * yr;
        sf -= aty;
        for (int i = 0; i < n; ++i) {
            xf(keep_cols[i]) = xr(i);
            sf(keep_cols[i]) = sr(i);
        }
        return std::make_pair(xf, sf);
    };
    // rows were renumbered and scaled during presolve; reconstruct the
    // mapping so dual multipliers land on the original rows
    std::vector<std::pair<int, double>> row_map; // original row, scale
    {
        std::vector<int> col_of_full(input.num_vars(), -1);
        for (int i = 0; i < n; ++i)
            col_of_full[keep_cols[i]] = i;
        std::vector<std::vector<std::pair<int, double>>> rows(input.num_rows());
        for (int col = 0; col < input.A.outerSize(); ++col)
            for (SpMat::InnerIterator it(input.A, col); it; ++it)
                if (col_of_full[col] >= 0 && it.value() != 0.0)
                    rows[it.row()].emplace_back(col_of_full[col], it.value());
        for (auto& r : rows)
            std::sort(r.begin(), r.end());
        std::vector<int> kept;
        for (int r = 0; r < input.num_rows(); ++r) {
            if (rows[r].empty())
                continue;
            bool dup = false;
            for (int q : kept)
                if (rows[q] == rows[r]) {
                    dup = true;
                    break;
                }
            if (dup)
                continue;
            kept.push_back(r);
            double scale = 0;
            for (const auto& [cidx, v] : rows[r])
                scale = std::max(scale, std::abs(v));
            row_map.emplace_back(r, scale <= 0 ? 1.0 : scale);
        }
    }
    auto embed_y = [&](const Vec& yr) {
        Vec yf = Vec::Zero(input.num_rows());
        for (int q = 0; q < m; ++q)
            yf(row_map[q].first) = yr(q) / row_map[q].second;
        return yf;
    };

    Vec dx(n), dy(m), ds(n);
    double dtau = 0, dkappa = 0;
    Mat aha(m, m);
    Vec hrow(n);

    // best de-homogenized candidate seen so far
    Vec best_x, best_y, best_s;
    Residuals best_res;
    double best_score = std::numeric_limits<double>::infinity();
    int no_improve = 0;

    int stall = 0;
    for (int iter = 0; iter < settings.max_iter; ++iter) {
        sol.iterations = iter;

        // residuals of the homogeneous model
        const Vec r_p = b * tau - A * x;
        const Vec r_d = c * tau - A.transpose() * y - s;
        const double r_g = kappa + c.dot(x) - b.dot(y);
        const double mu = (x.dot(s) + tau * kappa) / (deg + 1);

        // ----- termination on the de-homogenized point ---------------------
        {
            const auto [xf, sf] = embed(x / tau, y / tau, s / tau);
            const Vec yf = embed_y(y / tau);
            const Residuals res = residuals(input, xf, yf, sf);
            if (settings.collect_trace) {
                IterStats st;
                st.primal = res.primal;
                st.dual = res.dual;
                st.gap = res.gap;
                st.mu = mu;
                st.obj_primal = input.c.dot(xf);
                st.obj_dual = input.b.dot(yf);
                sol.trace.push_back(st);
            }
            if (res.primal <= settings.tol_feas && res.dual <= settings.tol_feas &&
                res.gap <= settings.tol_gap) {
                sol.x = xf;
                sol.y = yf;
                sol.s = sf;
                sol.residuals = res;
                return finish(SolveStatus::Optimal);
            }
            const double score = std::max({res.primal, res.dual, res.gap});
            if (score < best_score) {
                best_score = score;
                best_x = xf;
                best_y = yf;
                best_s = sf;
                best_res = res;
                no_improve = 0;
            } else if (++no_improve >= 8) {
                break; // conditioning wall: the best point is behind us
            }
        }
        // infeasibility certificates
        {
            const double by = b.dot(y);
            if (by > 0) {
                const double cert = (A.transpose() * y + s).norm() / (1.0 + c.norm());
                if (cert <= settings.tol_feas * by) {
                    const auto [xf, sf] = embed(Vec::Zero(n), y / by, s / by);
                    sol.x = Vec::Zero(input.num_vars());
                    sol.y = embed_y(y / by);
                    sol.s = sf;
                    sol.residuals = residuals(input, sol.x, sol.y, sol.s);
                    return finish(SolveStatus::PrimalInfeasible);
                }
            }
            const double cx = c.dot(x);
            if (cx < 0) {
                const double cert = (A * x).norm() / (1.0 + b.norm());
                if (cert <= settings.tol_feas * (-cx)) {
                    const auto [xf, sf] = embed(x / (-cx), Vec::Zero(m), Vec::Zero(n));
                    sol.x = xf;
                    sol.y = Vec::Zero(input.num_rows());
                    sol.s = Vec::Zero(input.num_vars());
                    sol.residuals = residuals(input, sol.x, sol.y, sol.s);
                    return finish(SolveStatus::DualInfeasible);
                }
            }
        }

        // ----- NT scaling ---------------------------------------------------
        Vec lambda(n);
        try {
            int off = 0;
            for (std::size_t bi = 0; bi < cones.size(); ++bi) {
                const int dim = cones[bi].dim();
                scalings[bi] = detail::compute_scaling(cones[bi].kind, off,
                                                       cones[bi].size, x.segment(off, dim),
                                                       s.segment(off, dim));
                lambda.segment(off, dim) = scalings[bi].lambda;
                off += dim;
            }
        } catch (const numerical_error&) {
            break;
        }

        // ----- KKT normal-equations matrix A H A' ---------------------------
        {
            std::vector<std::pair<int, double>> entries;
            std::vector<int> touched;
            aha.setZero();
            for (int r = 0; r < m; ++r) {
                entries.clear();
                for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(a_rows, r); it;
                     ++it)
                    entries.emplace_back(static_cast<int>(it.col()), it.value());
                hrow.setZero();
                happ.apply_sparse(entries, hrow, touched);
                // lower triangle of A (H a_r)
                for (int q = r; q < m; ++q) {
                    double acc = 0;
                    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(a_rows, q);
                         it; ++it)
                        acc += it.value() * hrow(it.col());
                    aha(q, r) = acc;
                }
            }
            for (int r = 0; r < m; ++r)
                for (int q = r + 1; q < m; ++q)
                    aha(r, q) = aha(q, r);
        }

        Eigen::LLT<Mat> kkt(aha);
        if (kkt.info() != Eigen::Success) {
            double jitter = 1e-12 * std::max(1.0, aha.trace() / std::max(1, m));
            bool ok = false;
            for (int attempt = 0; attempt < 3 && !ok; ++attempt, jitter *= 100) {
                Mat reg = aha + jitter * Mat::Identity(m, m);
                kkt.compute(reg);
                ok = kkt.info() == Eigen::Success;
            }
            if (!ok)
                break;
        }

        auto apply_H = [&](const Vec& u) {
            Vec out(n);
            int off = 0;
            for (std::size_t bi = 0; bi < cones.size(); ++bi) {
                const int dim = cones[bi].dim();
                out.segment(off, dim) = detail::scale_H(scalings[bi], u.segment(off, dim));
                off += dim;
            }
            return out;
        };
        auto block_op = [&](const Vec& u, auto&& fn) {
            Vec out(n);
            int off = 0;
            for (std::size_t bi = 0; bi < cones.size(); ++bi) {
                const int dim = cones[bi].dim();
                out.segment(off, dim) = fn(scalings[bi], u.segment(off, dim));
                off += dim;
            }
            return out;
        };

        auto kkt_solve = [&](const Vec& p, const Vec& q) {
            // M [u; v] = [p; q] with M = [-H^{-1} A'; A 0]
            const Vec rhs = q + A * apply_H(p);
            Vec v = kkt.solve(rhs);
            Vec u = apply_H(Vec(A.transpose() * v - p));
            // refine against the true composition so A u = q holds tightly
            for (int round = 0; round < 2; ++round) {
                const Vec resid = q - A * u;
                if (resid.norm() <= 1e-14 * (1.0 + q.norm()))
                    break;
                v += kkt.solve(resid);
                u = apply_H(Vec(A.transpose() * v - p));
            }
            return std::make_pair(u, v);
        };

        const auto [u1, v1] = kkt_solve(c, b);

        auto direction = [&](const Vec& d_comp, double d_tk, const Vec& rhs_d, const Vec& rhs_p,
                             double rhs_g) {
            const Vec backmapped = block_op(d_comp, [](const detail::BlockScaling& sc, const Vec& u) {
                return detail::scale_Winv_sadj(sc, detail::divide_by_lambda(sc, u));
            });
            const Vec rtilde = rhs_d - backmapped;
            const auto [u2, v2] = kkt_solve(rtilde, rhs_p);
            const double denom = kappa / tau - c.dot(u1) + b.dot(v1);
            const double dt = (rhs_g + d_tk / tau + c.dot(u2) - b.dot(v2)) / denom;
            dx = u2 + dt * u1;
            dy = v2 + dt * v1;
            ds = rhs_d + c * dt - A.transpose() * dy;
            dtau = dt;
            dkappa = (d_tk - kappa * dt) / tau;
        };

        auto max_step_all = [&](const Vec& ddx, const Vec& dds, double ddt, double ddk) {
            double a = std::numeric_limits<double>::infinity();
            int off = 0;
            for (const auto& k : cones) {
                const int dim = k.dim();
                a = std::min(a, detail::block_max_step(k, x.segment(off, dim), ddx.segment(off, dim)));
                a = std::min(a, detail::block_max_step(k, s.segment(off, dim), dds.segment(off, dim)));
                off += dim;
            }
            if (ddt < 0)
                a = std::min(a, -tau / ddt);
            if (ddk < 0)
                a = std::min(a, -kappa / ddk);
            return a;
        };

        // predictor (affine) direction
        const Vec lam_sq = block_op(lambda, [](const detail::BlockScaling& sc, const Vec& u) {
            return detail::jordan_product(sc, u, u);
        });
        direction(-lam_sq, -tau * kappa, r_d, r_p, r_g);
        const double alpha_aff = std::min(1.0, max_step_all(dx, ds, dtau, dkappa));
        const double mu_aff = ((x + alpha_aff * dx).dot(s + alpha_aff * ds) +
                               (tau + alpha_aff * dtau) * (kappa + alpha_aff * dkappa)) /
                              (deg + 1);
        double sigma = std::pow(std::max(0.0, mu_aff / mu), 3.0);
        sigma = std::min(1.0, std::max(0.0, sigma));

        // corrector (combined) direction
        const Vec wdx = block_op(dx, [](const detail::BlockScaling& sc, const Vec& u) {
            return detail::scale_Winv(sc, u);
        });
        const Vec wds = block_op(ds, [](const detail::BlockScaling& sc, const Vec& u) {
            return detail::scale_W(sc, u);
        });
        Vec d_comp(n);
        {
            int off = 0;
            for (std::size_t bi = 0; bi < cones.size(); ++bi) {
                const int dim = cones[bi].dim();
                const Vec e = detail::cone_identity(cones[bi]);
                d_comp.segment(off, dim) =
                    sigma * mu * e - lam_sq.segment(off, dim) -
                    detail::jordan_product(scalings[bi], wdx.segment(off, dim),
                                           wds.segment(off, dim));
                off += dim;
            }
        }
        const double d_tk = sigma * mu - tau * kappa - dtau * dkappa;
        direction(d_comp, d_tk, (1.0 - sigma) * r_d, (1.0 - sigma) * r_p, (1.0 - sigma) * r_g);

        double alpha = settings.step_fraction * max_step_all(dx, ds, dtau, dkappa);
        alpha = std::min(1.0, alpha);
        if (!(alpha > 1e-10)) {
            if (++stall >= 3)
                break;
        } else {
            stall = 0;
        }
        x += alpha * dx;
        y += alpha * dy;
        s += alpha * ds;
        tau += alpha * dtau;
        kappa += alpha * dkappa;
        if (settings.collect_trace && !sol.trace.empty())
            sol.trace.back().step = alpha;

        if (!(tau > 1e-14) || !std::isfinite(mu) || kappa > 1e14)
            break;
        // the model is positively homogeneous: renormalize to tau = 1 so the
        // iterate cannot drift along the scale-invariance ray
        x /= tau;
        y /= tau;
        s /= tau;
        kappa /= tau;
        tau = 1.0;
    }

    // return the best de-homogenized point seen
    if (best_x.size() > 0) {
        sol.x = best_x;
        sol.y = best_y;
        sol.s = best_s;
        sol.residuals = best_res;
    } else {
        const double t = std::max(tau, 1e-300);
        const auto [xf, sf] = embed(x / t, y / t, s / t);
        sol.x = xf;
        sol.y = embed_y(y / t);
        sol.s = sf;
        sol.residuals = residuals(input, sol.x, sol.y, sol.s);
    }
    return finish(sol.iterations + 1 >= settings.max_iter ? SolveStatus::IterLimit
                                                          : SolveStatus::NumericalFailure);
}

} // namespace fixlay::conic
