#pragma once

#include "fixlay/fe/assembly.hpp"

#include <algorithm>
#include <array>

namespace fixlay::fe {

/// Bijection between reduced DOF indices and (node, component) pairs after
/// the pre-specified nodes are removed. Kept nodes preserve their original
/// relative order; node i's block is rows [6*pos(i), 6*pos(i)+6).
struct DofMap {
    std::vector<NodeId> kept_nodes;       ///< reduced position -> node id
    std::vector<int> reduced_pos_of_node; ///< node id -> reduced position, -1 if removed

    int reduced_pos(NodeId node) const {
        if (node < 0 || node >= static_cast<int>(reduced_pos_of_node.size()) ||
            reduced_pos_of_node[node] < 0)
            throw invalid_spec_error("node " + std::to_string(node) + " is not a reduced node");
        return reduced_pos_of_node[node];
    }
    int dof(NodeId node, int component) const { return 6 * reduced_pos(node) + component; }
    int num_reduced_nodes() const { return static_cast<int>(kept_nodes.size()); }
};

/// Invertible system obtained by clamping the three pre-specified fixture
/// nodes (all six DOFs each). Holds the K* factorization, the reduced
/// gravity load F_g* and the gravity-only deflection u_g = A* F_g*.
/// The inverse A* is never formed; callers get columns of it on demand.
struct ReducedSystem {
    Eigen::LLT<Mat> kstar_factor;
    Mat kstar; // dense K*, kept for constrained re-solves and reactions
    Vec F_g_star;
    Vec u_g;
    DofMap dof_map;
    std::array<NodeId, 3> prespecified{};

    int dim() const { return static_cast<int>(F_g_star.size()); }
};

inline bool collinear(const Vector3d& a, const Vector3d& b, const Vector3d& c) {
    const Vector3d u = b - a;
    const Vector3d v = c - a;
    const double scale = std::max({u.norm(), v.norm(), 1e-300});
    return u.cross(v).norm() <= 1e-9 * scale * scale;
}

/// Reduction without geometry: used when K/F_g come from files and node
/// coordinates are unknown. The collinearity screen is skipped; mechanisms
/// surface as factorization failures.
inline ReducedSystem reduce_system(const GlobalSystem& sys, const std::array<NodeId, 3>& prespecified) {
    const int n = sys.num_nodes();
    for (NodeId id : prespecified)
        if (id < 0 || id >= n)
            throw invalid_spec_error("pre-specified node " + std::to_string(id) + " out of range");
    if (prespecified[0] == prespecified[1] || prespecified[0] == prespecified[2] ||
        prespecified[1] == prespecified[2])
        throw invalid_spec_error("pre-specified nodes must be distinct");

    ReducedSystem red;
    red.prespecified = prespecified;
    red.dof_map.reduced_pos_of_node.assign(n, -1);
    for (NodeId i = 0; i < n; ++i) {
        if (std::find(prespecified.begin(), prespecified.end(), i) != prespecified.end())
            continue;
        red.dof_map.reduced_pos_of_node[i] = static_cast<int>(red.dof_map.kept_nodes.size());
        red.dof_map.kept_nodes.push_back(i);
    }

    const int n1 = red.dof_map.num_reduced_nodes();
    std::vector<int> keep(6 * n1);
    for (int p = 0; p < n1; ++p)
        for (int c = 0; c < 6; ++c)
            keep[6 * p + c] = 6 * red.dof_map.kept_nodes[p] + c;
    std::vector<int> reduced_of_full(sys.dim(), -1);
    for (std::size_t r = 0; r < keep.size(); ++r)
        reduced_of_full[keep[r]] = static_cast<int>(r);

    Mat kstar = Mat::Zero(6 * n1, 6 * n1);
    for (int col = 0; col < sys.K.outerSize(); ++col) {
        const int rc = reduced_of_full[col];
        if (rc < 0)
            continue;
        for (SpMat::InnerIterator it(sys.K, col); it; ++it) {
            const int rr = reduced_of_full[it.row()];
            if (rr >= 0)
                kstar(rr, rc) = it.value();
        }
    }
    red.F_g_star.resize(6 * n1);
    for (int r = 0; r < 6 * n1; ++r)
        red.F_g_star(r) = sys.F_g(keep[r]);

    red.kstar_factor.compute(kstar);
    if (red.kstar_factor.info() != Eigen::Success)
        throw singular_system_error("K* factorization failed: structure still has a mechanism");
    red.kstar = std::move(kstar);
    red.u_g = red.kstar_factor.solve(red.F_g_star);
    return red;
}

inline ReducedSystem reduce_system(const GlobalSystem& sys, const MeshModel& model,
                                   const std::array<NodeId, 3>& prespecified) {
    const int n = sys.num_nodes();
    for (NodeId id : prespecified)
        if (id < 0 || id >= n)
            throw invalid_spec_error("pre-specified node " + std::to_string(id) + " out of range");
    if (prespecified[0] == prespecified[1] || prespecified[0] == prespecified[2] ||
        prespecified[1] == prespecified[2])
        throw invalid_spec_error("pre-specified nodes must be distinct");
    if (collinear(model.nodes[prespecified[0]], model.nodes[prespecified[1]],
                  model.nodes[prespecified[2]]))
        throw singular_system_error("pre-specified fixture nodes are collinear; clamp set does "
                                    "not stabilize the structure");
    return reduce_system(sys, prespecified);
}

/// Columns of A* = (K*)^-1 at the requested reduced DOFs, computed by one
/// multi-RHS solve. Column j satisfies K* b = e_{dof_indices[j]}.
inline Mat apply_inverse_columns(const ReducedSystem& reduced, const std::vector<int>& dof_indices) {
    Mat rhs = Mat::Zero(reduced.dim(), static_cast<Eigen::Index>(dof_indices.size()));
    for (std::size_t j = 0; j < dof_indices.size(); ++j) {
        const int d = dof_indices[j];
        if (d < 0 || d >= reduced.dim())
            throw invalid_spec_error("reduced DOF index " + std::to_string(d) + " out of range");
        rhs(d, static_cast<Eigen::Index>(j)) = 1.0;
    }
    if (dof_indices.empty())
        return rhs;
    return reduced.kstar_factor.solve(rhs);
}

} // namespace fixlay::fe
