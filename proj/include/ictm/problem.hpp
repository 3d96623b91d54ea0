#pragma once

#include <concepts>
#include <cstddef>
#include <optional>
#include <vector>

#include "ictm/indicator.hpp"

namespace ictm {

/// Continuous parameters of a problem, flattened. Layout is problem-defined.
using ParameterState = std::vector<double>;

/// How the parameter block is updated between assignment updates.
enum class ThetaMode {
    exact,               ///< closed-form argmin over S
    projected_gradient,  ///< one projected gradient step
    none,                ///< the problem has no parameters
};

/// An objective of the form h(theta) + sum_ij u_ij f_ij(theta) + g(u), with g concave.
///
/// `energy` and `gradient_u` accept relaxed assignments as well as binary ones.
template <class P>
concept Problem = requires(const P& problem, const PhaseField& u, const ParameterState& theta) {
    { problem.phases() } -> std::convertible_to<std::size_t>;
    { problem.points() } -> std::convertible_to<std::size_t>;
    { problem.theta_mode() } -> std::same_as<ThetaMode>;
    { problem.energy(u, theta) } -> std::convertible_to<double>;
    { problem.gradient_u(u, theta) } -> std::same_as<PhaseField>;
};

/// Problems with a closed-form parameter update. `previous` lets the problem
/// keep values that the assignment leaves undetermined (e.g. empty phases).
template <class P>
concept ExactThetaProblem =
    Problem<P> && requires(const P& problem, const IndicatorField& u, const ParameterState& previous) {
        { problem.solve_theta(u, previous) } -> std::same_as<ParameterState>;
    };

/// Problems whose parameter block can be updated by projected gradient steps.
template <class P>
concept GradientThetaProblem =
    Problem<P> && requires(const P& problem, const PhaseField& u, const ParameterState& theta) {
        { problem.gradient_theta(u, theta) } -> std::same_as<ParameterState>;
        { problem.project_theta(theta) } -> std::same_as<ParameterState>;
    };

/// Lipschitz constant of the parameter gradient, when the problem knows one.
template <Problem P>
std::optional<double> lipschitz_theta(const P& problem) {
    if constexpr (requires { { problem.lipschitz_theta() } -> std::convertible_to<std::optional<double>>; }) {
        return problem.lipschitz_theta();
    } else {
        return std::nullopt;
    }
}

template <Problem P>
double energy(const P& problem, const IndicatorField& u, const ParameterState& theta) {
    return problem.energy(u.dense(), theta);
}

}  // namespace ictm
