#pragma once

#include "fixlay/fe/beam.hpp"

namespace fixlay::fe {

/// Assembled free-free system K U = F_g + F_r. K is stored with full
/// symmetric sparsity; F_g is the lumped self-weight load (no nodal
/// torques).
struct GlobalSystem {
    SpMat K;
    Vec F_g;

    int dim() const { return static_cast<int>(K.rows()); }
    int num_nodes() const { return dim() / 6; }
};

inline GlobalSystem assemble_system(const MeshModel& m) {
    validate(m);
    const int n = m.num_nodes();
    std::vector<Triplet> trips;
    trips.reserve(m.elements.size() * 144);
    Vec fg = Vec::Zero(6 * n);

    for (const auto& e : m.elements) {
        const auto ke = beam_element_stiffness(m, e);
        const int base[2] = {6 * e.a, 6 * e.b};
        for (int r = 0; r < 12; ++r) {
            const int gr = base[r / 6] + r % 6;
            for (int c = 0; c < 12; ++c) {
                const double v = ke(r, c);
                if (v != 0.0)
                    trips.emplace_back(gr, base[c / 6] + c % 6, v);
            }
        }
        // lumped gravity: half the element weight to each end node, forces only
        const Section& s = m.sections[e.section];
        const double half_mass = 0.5 * s.rho * s.A * m.element_length(e);
        for (int end = 0; end < 2; ++end)
            fg.segment<3>(base[end]) += half_mass * m.gravity;
    }

    GlobalSystem sys;
    sys.K.resize(6 * n, 6 * n);
    sys.K.setFromTriplets(trips.begin(), trips.end());
    sys.K.makeCompressed();
    sys.F_g = std::move(fg);
    return sys;
}

/// Six rigid-body motion vectors of the free structure: three unit
/// translations and three linearized unit rotations about the origin.
inline std::vector<Vec> rigid_body_modes(const MeshModel& m) {
    const int n = m.num_nodes();
    std::vector<Vec> modes;
    for (int axis = 0; axis < 3; ++axis) {
        Vec t = Vec::Zero(6 * n);
        for (int i = 0; i < n; ++i)
            t(6 * i + axis) = 1.0;
        modes.push_back(std::move(t));
    }
    for (int axis = 0; axis < 3; ++axis) {
        Vector3d omega = Vector3d::Zero();
        omega(axis) = 1.0;
        Vec t = Vec::Zero(6 * n);
        for (int i = 0; i < n; ++i) {
            t.segment<3>(6 * i) = omega.cross(m.nodes[i]);
            t.segment<3>(6 * i + 3) = omega;
        }
        modes.push_back(std::move(t));
    }
    return modes;
}

} // namespace fixlay::fe
