#pragma once

// Shared model builders for the unit and acceptance suites.

#include "fixlay/fe/assembly.hpp"
#include "fixlay/fe/mesh.hpp"
#include "fixlay/fe/reduction.hpp"

#include <array>

namespace testsupport {

using namespace fixlay;

/// Straight chain of `n_elems` beam elements along +x with two off-axis stub
/// nodes at the root. Clamping {root, stub_a, stub_b} cantilevers the chain
/// exactly (the stubs connect clamped nodes only), which gives closed-form
/// Euler-Bernoulli behavior at the tip.
struct Cantilever {
    fe::MeshModel model;
    double length;
    fe::Section section;
    NodeId root, tip, stub_a, stub_b;
    std::array<NodeId, 3> clamps;
};

inline Cantilever make_cantilever(int n_elems, double length = 2.0,
                                  fe::Section section = {200.0, 80.0, 0.3, 0.02, 0.02, 0.03, 1.0},
                                  Vector3d gravity = Vector3d::Zero()) {
    Cantilever c;
    c.length = length;
    c.section = section;
    auto& m = c.model;
    m.sections.push_back(section);
    m.gravity = gravity;
    for (int i = 0; i <= n_elems; ++i)
        m.nodes.emplace_back(length * i / n_elems, 0.0, 0.0);
    for (int i = 0; i < n_elems; ++i)
        m.elements.push_back({i, i + 1, 0});
    c.root = 0;
    c.tip = n_elems;
    c.stub_a = n_elems + 1;
    c.stub_b = n_elems + 2;
    m.nodes.emplace_back(0.0, 0.7, 0.0);
    m.nodes.emplace_back(0.0, 0.0, 0.7);
    m.elements.push_back({c.root, c.stub_a, 0});
    m.elements.push_back({c.root, c.stub_b, 0});
    c.clamps = {c.root, c.stub_a, c.stub_b};
    return c;
}

/// Small half-cylinder frame for quick tests.
inline fe::FrameSpec small_frame_spec(int n_rings = 3, int n_stringers = 4) {
    fe::FrameSpec spec = fe::default_frame_spec();
    spec.n_rings = n_rings;
    spec.n_stringers = n_stringers;
    spec.length = 1.0 * (n_rings - 1);
    return spec;
}

} // namespace testsupport
