#pragma once

#include "fixlay/conic/solver.hpp"
#include "fixlay/design/evaluate.hpp"

namespace fixlay::design {

/// Variable layout of the assembled conic program. Forces live inside the
/// per-node second-order cones (t_i; f_i), the deformation epigraph is one
/// second-order cone (w0, w1, v) with w0 + w1 = 1 and q = w0 - w1, and S2
/// occupies one PSD block in svec coordinates.
struct RelaxationEncoding {
    int n_pt = 0;  ///< potential node count
    int p = 0;     ///< 3 * n_pt
    int side = 0;  ///< p + 1, the S2 side
    int n_w = 0;   ///< W-mask size
    int idx_epi = 0;
    int idx_svec = 0;
    int num_vars = 0;
    int num_rows = 0;
    double force_scale = 1.0;  ///< F = force_scale * F_hat
    double deform_scale = 1.0; ///< masked deformation = deform_scale * v_hat

    int idx_t(int i) const { return 4 * i; }
    int idx_f(int l) const { return 4 * (l / 3) + 1 + l % 3; }
    int idx_w0() const { return idx_epi; }
    int idx_w1() const { return idx_epi + 1; }
    int idx_v(int j) const { return idx_epi + 2 + j; }

    /// Count of the mathematical variables (F, t, q, svec(S2)); the program
    /// itself additionally carries the epigraph split and the masked
    /// deformation copies inside the epigraph cone.
    int conceptual_variable_count() const {
        return p + n_pt + 1 + conic::svec_len(side);
    }
};

struct RelaxedProgram {
    conic::ConicProgram program;
    RelaxationEncoding enc;
    double lambda = 0;
    double mu = 0;
};

/// Build the convex relaxation as a standard-form conic program:
/// minimize q + lambda * sum_i t_i + mu * tr(S2) over the cone blocks
/// described by RelaxationEncoding, subject to the lifted slackness rows,
/// the S2 border pinning and the epigraph coupling.
///
/// The program is assembled in normalized variables: forces are divided by
/// the clamp-all reaction scale and deformations by the gravity-sag scale,
/// so the solver sees O(1) data for any unit system. The solution maps back
/// through the scales recorded in the encoding.
inline RelaxedProgram assemble_relaxation(const FixtureDesignProblem& prob, double lambda,
                                          double mu) {
    if (lambda < 0 || mu < 0)
        throw invalid_spec_error("penalty weights must be nonnegative");

    RelaxedProgram out;
    out.lambda = lambda;
    out.mu = mu;
    RelaxationEncoding& enc = out.enc;
    enc.n_pt = prob.n_pt();
    enc.p = 3 * enc.n_pt;
    enc.side = enc.p + 1;
    enc.n_w = static_cast<int>(prob.w_mask.size());
    enc.idx_epi = 4 * enc.n_pt;
    enc.idx_svec = enc.idx_epi + 2 + enc.n_w;
    enc.num_vars = enc.idx_svec + conic::svec_len(enc.side);
    enc.num_rows = 1 + enc.n_w + enc.p + enc.p + 1;

    double u_scale = 0;
    for (int d : prob.w_mask)
        u_scale = std::max(u_scale, std::abs(prob.reduced->u_g(d)));
    double f_scale = 0;
    if (u_scale > 0) {
        const Vec clamp_all = prob.G.partialPivLu().solve(Vec(-prob.c));
        f_scale = clamp_all.cwiseAbs().maxCoeff();
    }
    if (!(u_scale > 0))
        u_scale = 1.0;
    if (!(f_scale > 0))
        f_scale = 1.0;
    enc.force_scale = f_scale;
    enc.deform_scale = u_scale;
    const double obj_scale = u_scale * u_scale; // delta^2 in normalized units

    conic::ConicProgram& pr = out.program;
    pr.c = Vec::Zero(enc.num_vars);
    for (int i = 0; i < enc.n_pt; ++i)
        pr.c(enc.idx_t(i)) = lambda * f_scale / obj_scale;
    pr.c(enc.idx_w0()) = 1.0;
    pr.c(enc.idx_w1()) = -1.0;
    for (int d = 0; d < enc.side; ++d)
        pr.c(enc.idx_svec + conic::svec_index(d, d)) = mu * f_scale * f_scale / obj_scale;

    for (int i = 0; i < enc.n_pt; ++i)
        pr.cones.push_back({conic::ConeKind::SecondOrder, 4});
    pr.cones.push_back({conic::ConeKind::SecondOrder, 2 + enc.n_w});
    pr.cones.push_back({conic::ConeKind::Psd, enc.side});

    pr.b = Vec::Zero(enc.num_rows);
    std::vector<Triplet> trips;
    int row = 0;

    // epigraph normalization: w0 + w1 = 1
    trips.emplace_back(row, enc.idx_w0(), 1.0);
    trips.emplace_back(row, enc.idx_w1(), 1.0);
    pr.b(row) = 1.0;
    ++row;

    // deformation copies: v_j - (B F)(d_j) / u_scale = u_g(d_j) / u_scale
    for (int j = 0; j < enc.n_w; ++j, ++row) {
        const int d = prob.w_mask[j];
        trips.emplace_back(row, enc.idx_v(j), 1.0);
        for (int l = 0; l < enc.p; ++l) {
            const double coeff = prob.B(d, l) * f_scale / u_scale;
            if (coeff != 0.0)
                trips.emplace_back(row, enc.idx_f(l), -coeff);
        }
        pr.b(row) = prob.reduced->u_g(d) / u_scale;
    }

    // lifted slackness rows: c_l F_l + <M_l, S2> = 0 where
    // <M_l, S1> = sum_k G(l,k) S1(l,k); expressed in the normalized
    // variables and scaled to unit row magnitude
    for (int l = 0; l < enc.p; ++l, ++row) {
        double row_scale = std::abs(prob.c(l)) / f_scale;
        for (int k = 0; k < enc.p; ++k)
            row_scale = std::max(row_scale, std::abs(prob.G(l, k)));
        if (row_scale <= 0)
            row_scale = 1.0;
        if (prob.c(l) != 0.0)
            trips.emplace_back(row, enc.idx_f(l), prob.c(l) / f_scale / row_scale);
        for (int k = 0; k < enc.p; ++k) {
            const double g = prob.G(l, k) / row_scale;
            if (g == 0.0)
                continue;
            if (k == l)
                trips.emplace_back(row, enc.idx_svec + conic::svec_index(l, l), g);
            else
                trips.emplace_back(row,
                                   enc.idx_svec + conic::svec_index(std::min(l, k), std::max(l, k)),
                                   g / conic::kSqrt2);
        }
    }

    // border pinning: S2(k, p) = F_k (both normalized)
    for (int k = 0; k < enc.p; ++k, ++row) {
        trips.emplace_back(row, enc.idx_svec + conic::svec_index(k, enc.p), 1.0 / conic::kSqrt2);
        trips.emplace_back(row, enc.idx_f(k), -1.0);
    }

    // corner: S2(p, p) = 1
    trips.emplace_back(row, enc.idx_svec + conic::svec_index(enc.p, enc.p), 1.0);
    pr.b(row) = 1.0;
    ++row;

    pr.A.resize(enc.num_rows, enc.num_vars);
    pr.A.setFromTriplets(trips.begin(), trips.end());
    pr.A.makeCompressed();
    conic::validate(pr);
    return out;
}

struct ObjectiveTerms {
    double deformation = 0; ///< delta^2 at the recovered forces
    double lasso = 0;       ///< lambda * sum_i ||f_i||
    double trace = 0;       ///< mu * tr(S2)
};

struct RelaxationSolution {
    Vec F; ///< recovered potential-node forces, length 3*N_PT
    Vec t; ///< per-node group epigraphs, length N_PT
    double q = 0;
    Mat S1, S2;
    ObjectiveTerms objective_terms;
    conic::SolveStatus solver_status = conic::SolveStatus::NumericalFailure;
    conic::Residuals solver_residuals;
    int iterations = 0;
    double solve_seconds = 0;

    double group_norm(int i) const { return F.segment<3>(3 * i).norm(); }
    double max_group_norm() const {
        double g = 0;
        for (int i = 0; i < t.size(); ++i)
            g = std::max(g, group_norm(i));
        return g;
    }
};

inline RelaxationSolution extract_solution(const FixtureDesignProblem& prob,
                                           const RelaxedProgram& rp,
                                           const conic::ConicSolution& cs) {
    const RelaxationEncoding& enc = rp.enc;
    const double fs = enc.force_scale;
    RelaxationSolution sol;
    sol.F.resize(enc.p);
    for (int l = 0; l < enc.p; ++l)
        sol.F(l) = fs * cs.x(enc.idx_f(l));
    sol.t.resize(enc.n_pt);
    for (int i = 0; i < enc.n_pt; ++i)
        sol.t(i) = fs * cs.x(enc.idx_t(i));
    sol.q = (cs.x(enc.idx_w0()) - cs.x(enc.idx_w1())) * enc.deform_scale * enc.deform_scale;
    sol.S2 = conic::smat(cs.x.segment(enc.idx_svec, conic::svec_len(enc.side)), enc.side);
    sol.S2.topLeftCorner(enc.p, enc.p) *= fs * fs;
    sol.S2.topRightCorner(enc.p, 1) *= fs;
    sol.S2.bottomLeftCorner(1, enc.p) *= fs;
    sol.S1 = sol.S2.topLeftCorner(enc.p, enc.p);
    sol.objective_terms.deformation = delta_sq_of_forces(prob, sol.F);
    double lasso = 0;
    for (int i = 0; i < enc.n_pt; ++i)
        lasso += sol.group_norm(i);
    sol.objective_terms.lasso = rp.lambda * lasso;
    sol.objective_terms.trace = rp.mu * sol.S2.trace();
    sol.solver_status = cs.status;
    sol.solver_residuals = cs.residuals;
    sol.iterations = cs.iterations;
    sol.solve_seconds = cs.solve_seconds;
    return sol;
}

inline RelaxationSolution solve_relaxation(const FixtureDesignProblem& prob, double lambda,
                                           double mu, const conic::Settings& settings = {}) {
    const RelaxedProgram rp = assemble_relaxation(prob, lambda, mu);
    const conic::ConicSolution cs = conic::solve(rp.program, settings);
    return extract_solution(prob, rp, cs);
}

/// Pre-solve assumption screen: every potential DOF must see a nonzero
/// gravity deflection.
inline bool check_assumption_pre(const FixtureDesignProblem& prob) {
    const double cmax = prob.c.cwiseAbs().maxCoeff();
    if (cmax <= 0)
        return false;
    return prob.c.cwiseAbs().minCoeff() > 1e-12 * cmax;
}

/// Post-solve assumption screen: some recovered force must pair with a
/// nonzero gravity deflection.
inline bool check_assumption_post(const FixtureDesignProblem& prob,
                                  const RelaxationSolution& sol) {
    const double fmax = sol.F.cwiseAbs().maxCoeff();
    const double cmax = prob.c.cwiseAbs().maxCoeff();
    if (fmax <= 0 || cmax <= 0)
        return false;
    const double tol = 1e-10 * fmax * cmax;
    return (sol.F.array() * prob.c.array()).abs().maxCoeff() > tol;
}

struct RankCertificate {
    bool is_rank_one = false;
    double rho_sq = 0;            ///< (v'F)^2 / ||F||^4 with S1 ~ v v'
    double parallel_residual = 0; ///< ||S1 - F F'||_F / max(1, ||F F'||_F)
    double eig_ratio = 0;         ///< lambda2 / lambda1 of S1
};

/// Certify that the lifted matrix collapsed onto the recovered forces:
/// S1 is numerically rank one with its factor parallel to F and unit
/// scaling ratio.
inline RankCertificate certify_rank_one(const RelaxationSolution& sol,
                                        double eig_ratio_tol = 1e-6) {
    if (sol.max_group_norm() <= 1e-12)
        throw not_applicable_error("recovered forces vanish; rank certificate undefined");
    Eigen::SelfAdjointEigenSolver<Mat> eig(sol.S1);
    const Vec ev = eig.eigenvalues();
    const int p = static_cast<int>(ev.size());
    const double l1 = ev(p - 1);
    const double l2 = p >= 2 ? std::abs(ev(p - 2)) : 0.0;

    RankCertificate cert;
    cert.eig_ratio = l1 > 0 ? l2 / l1 : std::numeric_limits<double>::infinity();
    cert.is_rank_one = l1 > 0 && cert.eig_ratio <= eig_ratio_tol;
    const Vec v = std::sqrt(std::max(0.0, l1)) * eig.eigenvectors().col(p - 1);
    const double f_norm_sq = sol.F.squaredNorm();
    cert.rho_sq = (v.dot(sol.F) * v.dot(sol.F)) / (f_norm_sq * f_norm_sq);
    const Mat ff = sol.F * sol.F.transpose();
    cert.parallel_residual = (sol.S1 - ff).norm() / std::max(1.0, ff.norm());
    return cert;
}

/// Complementary-slackness residual of the recovered forces:
/// max_l |U*(m(l)) F_l| normalized by the solution scale.
inline double slackness_residual(const FixtureDesignProblem& prob, const RelaxationSolution& sol) {
    const Vec u = prob.reduced->u_g + prob.B * sol.F;
    double worst = 0;
    for (int l = 0; l < sol.F.size(); ++l)
        worst = std::max(worst, std::abs(u(prob.m[l]) * sol.F(l)));
    const double umax = u.cwiseAbs().maxCoeff();
    const double fmax = sol.F.cwiseAbs().maxCoeff();
    return worst / (1.0 + umax * fmax);
}

/// Threshold the per-node force magnitudes into a layout. Nodes above
/// rel_threshold times the largest magnitude are selected; if more than n_a
/// qualify, the n_a largest survive with ties broken toward lower node ids.
inline FixtureLayout extract_layout(const FixtureDesignProblem& prob,
                                    const RelaxationSolution& sol, double rel_threshold = 1e-3) {
    const double gmax = sol.max_group_norm();
    if (gmax <= 1e-12)
        throw empty_layout_error("all force magnitudes below the absolute floor");
    std::vector<std::pair<double, NodeId>> mags; // (-magnitude, node) for stable ordering
    for (int i = 0; i < prob.n_pt(); ++i) {
        const double g = sol.group_norm(i);
        if (g > rel_threshold * gmax)
            mags.emplace_back(-g, prob.potential[i]);
    }
    std::sort(mags.begin(), mags.end());
    if (static_cast<int>(mags.size()) > prob.n_a)
        mags.resize(prob.n_a);
    FixtureLayout layout;
    for (const auto& [neg_g, id] : mags)
        layout.selected.push_back(id);
    std::sort(layout.selected.begin(), layout.selected.end());
    return layout;
}

} // namespace fixlay::design
