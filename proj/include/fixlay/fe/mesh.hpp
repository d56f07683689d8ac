#pragma once

#include "fixlay/common.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace fixlay::fe {

/// Material / cross-section bundle for a beam element group.
struct Section {
    double E = 0;   ///< Young's modulus [force/area]
    double G = 0;   ///< shear modulus [force/area]
    double A = 0;   ///< cross-section area
    double Iy = 0;  ///< bending inertia about local y
    double Iz = 0;  ///< bending inertia about local z
    double J = 0;   ///< torsion constant
    double rho = 0; ///< density [mass/volume]
};

struct Element {
    NodeId a = -1;
    NodeId b = -1;
    int section = 0;
};

/// Beam-frame mesh: nodes, elements, section table and the gravity vector
/// used to build the self-weight load. Node ids are 0-based positions into
/// `nodes`.
struct MeshModel {
    std::vector<Vector3d> nodes;
    std::vector<Element> elements;
    std::vector<Section> sections;
    Vector3d gravity = Vector3d::Zero();

    int num_nodes() const { return static_cast<int>(nodes.size()); }
    int num_elements() const { return static_cast<int>(elements.size()); }

    double element_length(const Element& e) const {
        return (nodes[e.b] - nodes[e.a]).norm();
    }
};

inline void validate(const MeshModel& m) {
    const int n = m.num_nodes();
    if (n < 4)
        throw invalid_spec_error("mesh must have at least 4 nodes, got " + std::to_string(n));
    if (m.sections.empty())
        throw invalid_spec_error("mesh has no section table");
    for (const auto& s : m.sections) {
        if (!(s.E > 0 && s.G > 0 && s.A > 0 && s.Iy > 0 && s.Iz > 0 && s.J > 0 && s.rho > 0))
            throw invalid_spec_error("all section/material scalars must be strictly positive");
    }
    for (std::size_t i = 0; i < m.elements.size(); ++i) {
        const auto& e = m.elements[i];
        if (e.a < 0 || e.a >= n || e.b < 0 || e.b >= n || e.a == e.b)
            throw invalid_spec_error("element " + std::to_string(i) + " references invalid nodes");
        if (e.section < 0 || e.section >= static_cast<int>(m.sections.size()))
            throw invalid_spec_error("element " + std::to_string(i) + " references missing section");
        if (m.element_length(e) <= 1e-12)
            throw invalid_spec_error("element " + std::to_string(i) + " has zero length");
    }
}

/// Parameters of the generated half-cylinder beam grid: `n_rings`
/// semicircular arcs of `n_stringers` nodes each, chained by longitudinal
/// beams. The arc spans angles [0, pi] in the x-y plane (opening down, so
/// the two straight boundary edges sit at y = 0); rings are spaced evenly
/// along z.
struct FrameSpec {
    int n_rings = 15;
    int n_stringers = 5;
    double radius = 1.0;
    double length = 2.8;
    Section section;
    Vector3d gravity = Vector3d::Zero();
};

/// Bundled demo spec: a compliant half-shell surrogate sized so the two
/// straight edges carry 30 candidate nodes. The section and density are
/// expressed in scaled units that put the clamp-all reaction magnitude at
/// O(1); the default penalty weights of the relaxation are calibrated
/// against this scale.
inline FrameSpec default_frame_spec() {
    FrameSpec spec;
    spec.n_rings = 15;
    spec.n_stringers = 5;
    spec.radius = 1.0;
    spec.length = 2.8;
    spec.section = Section{15.0, 6.0, 1.0e-4, 2.0e-6, 2.0e-6, 4.0e-6, 531.0};
    spec.gravity = Vector3d(0.0, -9.8, 0.0);
    return spec;
}

/// Node id of ring r, stringer s under the ring-major ordering.
inline NodeId frame_node_id(const FrameSpec& spec, int ring, int stringer) {
    return ring * spec.n_stringers + stringer;
}

inline MeshModel build_frame_model(const FrameSpec& spec) {
    if (spec.n_rings < 2)
        throw invalid_spec_error("n_rings must be >= 2, got " + std::to_string(spec.n_rings));
    if (spec.n_stringers < 3)
        throw invalid_spec_error("n_stringers must be >= 3, got " + std::to_string(spec.n_stringers));
    if (!(spec.radius > 0))
        throw invalid_spec_error("radius must be positive");
    if (!(spec.length > 0))
        throw invalid_spec_error("length must be positive");

    MeshModel m;
    m.sections.push_back(spec.section);
    m.gravity = spec.gravity;

    const int R = spec.n_rings;
    const int S = spec.n_stringers;
    m.nodes.reserve(static_cast<std::size_t>(R) * S);
    for (int r = 0; r < R; ++r) {
        const double z = (R == 1) ? 0.0 : spec.length * r / (R - 1);
        for (int s = 0; s < S; ++s) {
            const double theta = std::numbers::pi * s / (S - 1);
            m.nodes.emplace_back(spec.radius * std::cos(theta), spec.radius * std::sin(theta), z);
        }
    }
    // arc elements within each ring
    for (int r = 0; r < R; ++r)
        for (int s = 0; s + 1 < S; ++s)
            m.elements.push_back({frame_node_id(spec, r, s), frame_node_id(spec, r, s + 1), 0});
    // longitudinal elements between adjacent rings
    for (int r = 0; r + 1 < R; ++r)
        for (int s = 0; s < S; ++s)
            m.elements.push_back({frame_node_id(spec, r, s), frame_node_id(spec, r + 1, s), 0});

    validate(m);
    return m;
}

/// Nodes on the two straight edges of the half-cylinder (theta = 0 and
/// theta = pi), ordered edge-by-edge along the axis. These are the natural
/// candidate fixture sites of the generated geometry.
inline std::vector<NodeId> frame_edge_nodes(const FrameSpec& spec) {
    std::vector<NodeId> out;
    out.reserve(2 * static_cast<std::size_t>(spec.n_rings));
    for (int r = 0; r < spec.n_rings; ++r)
        out.push_back(frame_node_id(spec, r, 0));
    for (int r = 0; r < spec.n_rings; ++r)
        out.push_back(frame_node_id(spec, r, spec.n_stringers - 1));
    return out;
}

} // namespace fixlay::fe
