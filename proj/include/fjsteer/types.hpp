#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstddef>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>

namespace fjsteer {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

/// 1-based agent identifier, as used in configs and reports.
struct AgentId {
    int value = 0;

    constexpr AgentId() = default;
    constexpr explicit AgentId(int v) : value(v) {}

    friend constexpr auto operator<=>(AgentId, AgentId) = default;
    friend std::ostream& operator<<(std::ostream& os, AgentId id) { return os << id.value; }
};

/// Row sums of stochastic matrices are checked against this absolute tolerance.
inline constexpr double kStochasticTolerance = 1e-12;

/// Bad input: malformed configs, inconsistent dimensions, graph precondition
/// violations. The CLI maps this to exit code 2.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical breakdown during a run (singular systems, NaNs). Exit code 3.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace fjsteer

template <>
struct std::hash<fjsteer::AgentId> {
    std::size_t operator()(fjsteer::AgentId id) const noexcept { return std::hash<int>{}(id.value); }
};
