#pragma once

#include "fixlay/design/problem.hpp"

#include <json.hpp>

namespace fixlay::design {

struct FixtureLayout {
    std::vector<NodeId> selected; ///< sorted, no duplicates

    int cardinality() const { return static_cast<int>(selected.size()); }
};

struct Reaction {
    NodeId node;
    double fx, fy, fz;
};

/// Exact response of a layout: clamp the three translational DOFs of every
/// selected node, re-solve under gravity, and report the deformation
/// metrics plus the fixture reaction forces.
struct LayoutEvaluation {
    Vec U; ///< reduced displacement, zeros at constrained DOFs
    double delta_sq = 0;
    double max_node_deformation = 0;
    std::vector<Reaction> reactions;
};

namespace detail {

inline std::vector<int> layout_dofs(const fe::ReducedSystem& red, const FixtureLayout& layout) {
    std::vector<int> elim;
    elim.reserve(layout.selected.size() * 3);
    for (NodeId id : layout.selected)
        for (int cmp = 0; cmp < 3; ++cmp)
            elim.push_back(red.dof_map.dof(id, cmp));
    std::sort(elim.begin(), elim.end());
    return elim;
}

inline LayoutEvaluation finish_evaluation(const fe::ReducedSystem& red, const FixtureLayout& layout,
                                          const std::vector<int>& w_mask, Vec u,
                                          const std::vector<int>& elim) {
    LayoutEvaluation ev;
    // exact zeros at constrained DOFs
    for (int d : elim)
        u(d) = 0.0;
    ev.U = std::move(u);
    for (int d : w_mask)
        ev.delta_sq += ev.U(d) * ev.U(d);
    for (int pnode = 0; pnode < red.dof_map.num_reduced_nodes(); ++pnode)
        ev.max_node_deformation =
            std::max(ev.max_node_deformation, ev.U.segment<3>(6 * pnode).norm());
    const Vec residual_force = red.kstar * ev.U - red.F_g_star;
    for (NodeId id : layout.selected) {
        const int pos = red.dof_map.reduced_pos(id);
        ev.reactions.push_back({id, residual_force(6 * pos), residual_force(6 * pos + 1),
                                residual_force(6 * pos + 2)});
    }
    return ev;
}

} // namespace detail

/// Constrained solve by DOF elimination: delete the clamped rows/columns of
/// K*, solve the remaining system, and re-embed zeros.
inline LayoutEvaluation evaluate_layout(const fe::ReducedSystem& red, const FixtureLayout& layout,
                                        const std::vector<int>& w_mask) {
    for (std::size_t i = 1; i < layout.selected.size(); ++i)
        if (layout.selected[i] == layout.selected[i - 1])
            throw invalid_spec_error("layout contains duplicate nodes");
    const std::vector<int> elim = detail::layout_dofs(red, layout);
    if (elim.empty())
        return detail::finish_evaluation(red, layout, w_mask, red.u_g, elim);

    const int dim = red.dim();
    std::vector<char> is_elim(dim, 0);
    for (int d : elim)
        is_elim[d] = 1;
    std::vector<int> keep;
    keep.reserve(dim - elim.size());
    for (int d = 0; d < dim; ++d)
        if (!is_elim[d])
            keep.push_back(d);

    const int nk = static_cast<int>(keep.size());
    Mat kk(nk, nk);
    Vec fk(nk);
    for (int r = 0; r < nk; ++r) {
        fk(r) = red.F_g_star(keep[r]);
        for (int cidx = 0; cidx < nk; ++cidx)
            kk(r, cidx) = red.kstar(keep[r], keep[cidx]);
    }
    Eigen::LLT<Mat> llt(kk);
    if (llt.info() != Eigen::Success)
        throw singular_system_error("constrained system lost definiteness");
    const Vec uk = llt.solve(fk);

    Vec u = Vec::Zero(dim);
    for (int r = 0; r < nk; ++r)
        u(keep[r]) = uk(r);
    return detail::finish_evaluation(red, layout, w_mask, std::move(u), elim);
}

/// Independent evaluation route: solve for the fixture reactions r with
/// U(m) = 0 through the Schur complement of A* on the fixture DOFs, then
/// U = u_g + B_sel r. Used as the physics oracle against evaluate_layout.
inline LayoutEvaluation evaluate_layout_via_reactions(const fe::ReducedSystem& red,
                                                      const FixtureLayout& layout,
                                                      const std::vector<int>& w_mask) {
    const std::vector<int> elim = detail::layout_dofs(red, layout);
    if (elim.empty())
        return detail::finish_evaluation(red, layout, w_mask, red.u_g, elim);

    const Mat b_sel = fe::apply_inverse_columns(red, elim);
    const int ns = static_cast<int>(elim.size());
    Mat a_ss(ns, ns);
    Vec u_s(ns);
    for (int r = 0; r < ns; ++r) {
        u_s(r) = red.u_g(elim[r]);
        for (int cidx = 0; cidx < ns; ++cidx)
            a_ss(r, cidx) = b_sel(elim[r], cidx);
    }
    Eigen::LLT<Mat> llt(a_ss);
    if (llt.info() != Eigen::Success)
        throw singular_system_error("fixture Schur block lost definiteness");
    const Vec reactions = llt.solve(Vec(-u_s));
    Vec u = red.u_g + b_sel * reactions;

    LayoutEvaluation ev = detail::finish_evaluation(red, layout, w_mask, std::move(u), elim);
    // reactions computed directly; overwrite the K*U - F_g* extraction,
    // which is identical up to roundoff
    for (std::size_t i = 0; i < layout.selected.size(); ++i)
        ev.reactions[i] = {layout.selected[i], reactions(3 * i), reactions(3 * i + 1),
                           reactions(3 * i + 2)};
    return ev;
}

inline nlohmann::ordered_json to_json(const FixtureLayout& layout, const LayoutEvaluation& ev) {
    nlohmann::ordered_json j;
    j["selected"] = layout.selected;
    j["delta_sq"] = ev.delta_sq;
    j["max_node_deformation"] = ev.max_node_deformation;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : ev.reactions)
        arr.push_back({{"node", r.node}, {"fx", r.fx}, {"fy", r.fy}, {"fz", r.fz}});
    j["reactions"] = std::move(arr);
    return j;
}

} // namespace fixlay::design
