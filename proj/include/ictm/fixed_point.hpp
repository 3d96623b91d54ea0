#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "ictm/enumerate.hpp"
#include "ictm/problem.hpp"
#include "ictm/solver.hpp"

namespace ictm {

enum class FixedPointMode {
    global,  ///< u a global minimizer over C, no minimizer improvable in theta
    local,   ///< same with radius-r local minimizers
};

struct FixedPointReport {
    /// u minimizes Phi(., theta) globally (global mode) or over its radius-r ball (local mode).
    bool u_condition = false;
    /// No (radius-r) minimizer can lower the energy below Phi(u, theta) by re-solving theta.
    bool theta_condition = false;
    /// False when the minimizer set was too large to enumerate (local mode only).
    bool theta_condition_evaluated = false;
    double phi = 0.0;
    std::size_t minimizers = 0;
    /// Assignment violating one of the conditions.
    std::optional<IndicatorField> witness;

    [[nodiscard]] bool holds() const noexcept { return u_condition && theta_condition && theta_condition_evaluated; }
};

namespace detail {

inline bool energy_leq(double a, double b) { return a <= b + 1e-12 * std::max(1.0, std::abs(b)); }

// min over theta of Phi(u, theta), starting from `start`.
template <Problem P>
double minimize_over_theta(const P& problem, const IndicatorField& u, const ParameterState& start) {
    switch (problem.theta_mode()) {
        case ThetaMode::none:
            return energy(problem, u, start);
        case ThetaMode::exact:
            if constexpr (ExactThetaProblem<P>) return energy(problem, u, problem.solve_theta(u, start));
            break;
        case ThetaMode::projected_gradient:
            if constexpr (GradientThetaProblem<P>) {
                const auto lip = lipschitz_theta(problem);
                SolverConfig config;
                config.alpha_theta = lip ? 1.0 / *lip : 1e-3;
                ParameterState theta = start;
                for (int step = 0; step < 100000; ++step) {
                    ParameterState next = theta_update(problem, u, theta, config);
                    const double moved = distance(next, theta);
                    theta = std::move(next);
                    if (moved <= 1e-13) break;
                }
                return energy(problem, u, theta);
            }
            break;
    }
    throw ConfigError("problem cannot minimize over theta in its declared mode");
}

template <Problem P>
bool is_local_min(const P& problem, const IndicatorField& u, const ParameterState& theta, std::size_t r, double phi,
                  std::uint64_t cap) {
    bool ok = true;
    for_each_in_ball(
        u, r,
        [&](const IndicatorField& v) {
            if (ok && !energy_leq(phi, energy(problem, v, theta))) ok = false;
        },
        cap);
    return ok;
}

}  // namespace detail

/// Checks the stopping conditions of the global (exhaustive) or radius-r alternating schemes.
///
/// Global mode enumerates all of C and throws CapabilityError beyond `cap`.
/// Local mode always checks the radius-r ball around u; the theta condition
/// needs every radius-r minimizer in C and is skipped beyond `cap`.
template <Problem P>
FixedPointReport check_fixed_point_conditions(const P& problem, const IndicatorField& u, const ParameterState& theta,
                                              FixedPointMode mode, std::size_t radius = 1,
                                              std::uint64_t cap = default_enumeration_cap) {
    FixedPointReport report;
    report.phi = energy(problem, u, theta);
    const std::size_t n = problem.phases();
    const std::size_t p = problem.points();

    std::vector<IndicatorField> minimizers;
    if (mode == FixedPointMode::global) {
        require_enumerable(n, p, cap);
        double best = report.phi;
        for_each_assignment(
            n, p,
            [&](const IndicatorField& v) {
                const double e = energy(problem, v, theta);
                if (e < best) best = e;
            },
            cap);
        report.u_condition = detail::energy_leq(report.phi, best);
        for_each_assignment(
            n, p,
            [&](const IndicatorField& v) {
                if (detail::energy_leq(energy(problem, v, theta), best)) minimizers.push_back(v);
            },
            cap);
        if (!report.u_condition) report.witness = minimizers.front();
    } else {
        report.u_condition = detail::is_local_min(problem, u, theta, radius, report.phi, cap);
        if (!report.u_condition) {
            for_each_in_ball(u, radius, [&](const IndicatorField& v) {
                if (!report.witness && !detail::energy_leq(report.phi, energy(problem, v, theta))) report.witness = v;
            });
        }
        if (!assignment_count(n, p, cap)) return report;
        for_each_assignment(
            n, p,
            [&](const IndicatorField& v) {
                if (detail::is_local_min(problem, v, theta, radius, energy(problem, v, theta), cap)) {
                    minimizers.push_back(v);
                }
            },
            cap);
    }

    report.minimizers = minimizers.size();
    report.theta_condition_evaluated = true;
    report.theta_condition = true;
    for (const auto& v : minimizers) {
        if (!detail::energy_leq(report.phi, detail::minimize_over_theta(problem, v, theta))) {
            report.theta_condition = false;
            if (!report.witness) report.witness = v;
            break;
        }
    }
    return report;
}

}  // namespace ictm
