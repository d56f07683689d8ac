#pragma once

#include "fixlay/fe/mesh.hpp"

namespace fixlay::fe {

/// Rotation from global to local element axes. Local x runs along the
/// element; the reference vector picks local z (global Z unless the element
/// is nearly axial with it, then global Y).
inline Eigen::Matrix3d element_rotation(const Vector3d& pa, const Vector3d& pb) {
    const Vector3d dx = pb - pa;
    const double len = dx.norm();
    if (len <= 1e-12)
        throw degenerate_element_error("element endpoints coincide");
    const Vector3d ex = dx / len;
    Vector3d ref = Vector3d::UnitZ();
    if (std::abs(ex.dot(ref)) > 0.999)
        ref = Vector3d::UnitY();
    const Vector3d ey = ref.cross(ex).normalized();
    const Vector3d ez = ex.cross(ey);
    Eigen::Matrix3d t;
    t.row(0) = ex;
    t.row(1) = ey;
    t.row(2) = ez;
    return t;
}

/// 12x12 local stiffness of a 3D Euler-Bernoulli space-frame element.
/// DOF order per node: [ux, uy, uz, rx, ry, rz].
inline Eigen::Matrix<double, 12, 12> beam_local_stiffness(const Section& s, double length) {
    if (length <= 1e-12)
        throw degenerate_element_error("element length below tolerance");
    const double L = length;
    const double ax = s.E * s.A / L;
    const double tr = s.G * s.J / L;
    const double bz1 = 12.0 * s.E * s.Iz / (L * L * L);
    const double bz2 = 6.0 * s.E * s.Iz / (L * L);
    const double bz3 = 4.0 * s.E * s.Iz / L;
    const double bz4 = 2.0 * s.E * s.Iz / L;
    const double by1 = 12.0 * s.E * s.Iy / (L * L * L);
    const double by2 = 6.0 * s.E * s.Iy / (L * L);
    const double by3 = 4.0 * s.E * s.Iy / L;
    const double by4 = 2.0 * s.E * s.Iy / L;

    Eigen::Matrix<double, 12, 12> k = Eigen::Matrix<double, 12, 12>::Zero();
    auto set = [&k](int i, int j, double v) {
        k(i, j) = v;
        k(j, i) = v;
    };
    // axial
    set(0, 0, ax); set(0, 6, -ax); set(6, 6, ax);
    // torsion
    set(3, 3, tr); set(3, 9, -tr); set(9, 9, tr);
    // bending in x-y plane (uy, rz)
    set(1, 1, bz1); set(1, 5, bz2); set(1, 7, -bz1); set(1, 11, bz2);
    set(5, 5, bz3); set(5, 7, -bz2); set(5, 11, bz4);
    set(7, 7, bz1); set(7, 11, -bz2);
    set(11, 11, bz3);
    // bending in x-z plane (uz, ry)
    set(2, 2, by1); set(2, 4, -by2); set(2, 8, -by1); set(2, 10, -by2);
    set(4, 4, by3); set(4, 8, by2); set(4, 10, by4);
    set(8, 8, by1); set(8, 10, by2);
    set(10, 10, by3);
    return k;
}

/// Global-frame 12x12 element stiffness. Symmetric PSD with exactly six
/// zero eigenvalues (the rigid-body modes).
inline Eigen::Matrix<double, 12, 12> beam_element_stiffness(const Section& s, double length,
                                                            const Eigen::Matrix3d& rotation) {
    const Eigen::Matrix<double, 12, 12> kl = beam_local_stiffness(s, length);
    Eigen::Matrix<double, 12, 12> lam = Eigen::Matrix<double, 12, 12>::Zero();
    for (int b = 0; b < 4; ++b)
        lam.block<3, 3>(3 * b, 3 * b) = rotation;
    Eigen::Matrix<double, 12, 12> kg = lam.transpose() * kl * lam;
    // exact symmetric storage: average the off-diagonal rounding
    Eigen::Matrix<double, 12, 12> kgt = kg.transpose();
    return 0.5 * (kg + kgt);
}

inline Eigen::Matrix<double, 12, 12> beam_element_stiffness(const MeshModel& m, const Element& e) {
    const Vector3d& pa = m.nodes[e.a];
    const Vector3d& pb = m.nodes[e.b];
    return beam_element_stiffness(m.sections[e.section], (pb - pa).norm(), element_rotation(pa, pb));
}

} // namespace fixlay::fe
