#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace fixlay {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using Eigen::Vector3d;

using NodeId = int;

// Error taxonomy shared by all modules. Every failure mode a caller is
// expected to handle gets its own type; messages carry the offending
// values so CLI output stays actionable.
struct invalid_spec_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct dimension_mismatch_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct symmetry_violation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct degenerate_element_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct singular_system_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct invalid_potential_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct empty_layout_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct not_applicable_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct too_large_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct budget_unreachable_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct rank_not_achieved_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct monotonicity_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct missing_input_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// Deterministic xoshiro-style helpers on top of std::mt19937_64.
// std::uniform_*_distribution is implementation-defined, which would break
// the byte-for-byte reproducibility contract, so we roll our own mapping.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
    // inclusive range, rejection-free modulo is fine for our small ranges
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<std::int64_t>(rng() % span);
}

} // namespace detail

} // namespace fixlay
