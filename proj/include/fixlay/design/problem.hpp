#pragma once

#include "fixlay/fe/reduction.hpp"

#include <algorithm>
#include <memory>

namespace fixlay::design {

/// Index map from packed potential-DOF indices l = 0..3*N_PT-1 to reduced
/// DOF indices: l covers the three translational components of each
/// potential node in order.
inline std::vector<int> dof_index_map(const std::vector<NodeId>& potential,
                                      const fe::DofMap& dof_map) {
    std::vector<int> m(potential.size() * 3);
    for (std::size_t l = 0; l < m.size(); ++l) {
        const NodeId node = potential[l / 3];
        m[l] = dof_map.dof(node, static_cast<int>(l % 3));
    }
    return m;
}

/// The fixture-design data: influence columns B = A*[:, m(l)], the
/// gravity deflections c_l = u_g(m(l)) at potential DOFs, and the coupling
/// matrix G(l,k) = A*(m(l), m(k)). The quadratic objective, its lifted
/// constraint rows and all certification checks read from here.
struct FixtureDesignProblem {
    std::shared_ptr<const fe::ReducedSystem> reduced;
    std::vector<NodeId> potential; ///< sorted candidate nodes
    int n_a = 0;                   ///< fixture budget
    std::vector<int> w_mask;       ///< reduced translational DOFs selected by W
    std::vector<int> m;            ///< l -> reduced DOF index
    Mat B;                         ///< dim x 3*N_PT
    Vec c;                         ///< 3*N_PT
    Mat G;                         ///< 3*N_PT x 3*N_PT

    int n_pt() const { return static_cast<int>(potential.size()); }
    int num_force_vars() const { return 3 * n_pt(); }
};

inline FixtureDesignProblem build_problem(std::shared_ptr<const fe::ReducedSystem> reduced,
                                          std::vector<NodeId> potential, int n_a,
                                          std::vector<NodeId> w_nodes = {}) {
    if (!reduced)
        throw invalid_spec_error("missing reduced system");
    std::sort(potential.begin(), potential.end());
    potential.erase(std::unique(potential.begin(), potential.end()), potential.end());
    if (potential.empty())
        throw invalid_potential_error("potential set is empty");
    for (NodeId id : potential)
        if (std::find(reduced->prespecified.begin(), reduced->prespecified.end(), id) !=
            reduced->prespecified.end())
            throw invalid_potential_error("potential node " + std::to_string(id) +
                                          " is a pre-specified fixture");
    if (n_a < 1 || n_a > static_cast<int>(potential.size()))
        throw invalid_spec_error("fixture budget " + std::to_string(n_a) +
                                 " outside [1, N_PT]");

    FixtureDesignProblem p;
    p.reduced = std::move(reduced);
    p.potential = std::move(potential);
    p.n_a = n_a;
    p.m = dof_index_map(p.potential, p.reduced->dof_map);

    if (w_nodes.empty())
        w_nodes = p.reduced->dof_map.kept_nodes;
    std::sort(w_nodes.begin(), w_nodes.end());
    w_nodes.erase(std::unique(w_nodes.begin(), w_nodes.end()), w_nodes.end());
    p.w_mask.reserve(w_nodes.size() * 3);
    for (NodeId id : w_nodes)
        for (int cmp = 0; cmp < 3; ++cmp)
            p.w_mask.push_back(p.reduced->dof_map.dof(id, cmp));
    std::sort(p.w_mask.begin(), p.w_mask.end());

    p.B = fe::apply_inverse_columns(*p.reduced, p.m);
    const int np3 = p.num_force_vars();
    p.c.resize(np3);
    p.G.resize(np3, np3);
    for (int l = 0; l < np3; ++l) {
        p.c(l) = p.reduced->u_g(p.m[l]);
        for (int k = 0; k < np3; ++k)
            p.G(l, k) = p.B(p.m[l], k);
    }
    return p;
}

/// delta^2(F) = || (u_g + B F) restricted to the W mask ||^2
inline double delta_sq_of_forces(const FixtureDesignProblem& p, const Vec& forces) {
    const Vec u = p.reduced->u_g + p.B * forces;
    double acc = 0;
    for (int d : p.w_mask)
        acc += u(d) * u(d);
    return acc;
}

/// Gradient of delta^2 with respect to the potential forces:
/// 2 B' W (u_g + B F).
inline Vec delta_sq_gradient(const FixtureDesignProblem& p, const Vec& forces) {
    const Vec u = p.reduced->u_g + p.B * forces;
    Vec masked = Vec::Zero(u.size());
    for (int d : p.w_mask)
        masked(d) = u(d);
    return 2.0 * p.B.transpose() * masked;
}

/// Residuals of the quadratic complementary-slackness constraint
/// c_l F_l + F_l * sum_k G(l,k) F_k = 0.
inline Vec slackness_quadratic_residual(const FixtureDesignProblem& p, const Vec& forces) {
    const Vec gf = p.G * forces;
    Vec r(p.num_force_vars());
    for (int l = 0; l < r.size(); ++l)
        r(l) = p.c(l) * forces(l) + forces(l) * gf(l);
    return r;
}

/// Residuals of the lifted linear constraint
/// c_l F_l + sum_k G(l,k) S1(l,k) = 0.
inline Vec slackness_lifted_residual(const FixtureDesignProblem& p, const Vec& forces,
                                     const Mat& s1) {
    Vec r(p.num_force_vars());
    for (int l = 0; l < r.size(); ++l)
        r(l) = p.c(l) * forces(l) + p.G.row(l).dot(s1.row(l));
    return r;
}

} // namespace fixlay::design
