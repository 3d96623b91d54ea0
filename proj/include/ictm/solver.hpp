#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ictm/errors.hpp"
#include "ictm/indicator.hpp"
#include "ictm/problem.hpp"

namespace ictm {

/// Which block is updated first inside one outer iteration.
enum class UpdateOrder {
    u_first,      ///< assignment, then parameters
    theta_first,  ///< parameters from the current assignment, then assignment
};

struct SolverConfig {
    /// Step for the assignment update; nullopt means thresholding (infinite step).
    std::optional<double> alpha_u;
    /// Step for projected-gradient parameter updates.
    double alpha_theta = 1.0;
    /// Convergence: changed assignment entries <= tol_u and ||theta step|| <= tol_theta.
    double tol_u = 0.0;
    double tol_theta = 1e-8;
    int max_iter = 100;
    /// Cap on inner assignment steps per outer iteration; 0 means the point count.
    std::size_t max_inner = 0;
    UpdateOrder order = UpdateOrder::u_first;
    /// 1 adds single-point reassignment descent after each inner fixed point
    /// (exhaustive over the Hamming ball of radius 1, so desk scale only).
    int local_search_radius = 0;
    /// Allowed absolute energy increase before a ConsistencyError.
    double energy_slack = 1e-10;
};

struct TraceRecord {
    int iter = 0;
    double phi = 0.0;
    /// Energy after the first block update of the iteration.
    double phi_half = 0.0;
    std::size_t u_changes = 0;
    double theta_delta = 0.0;
    std::size_t inner_steps = 0;
    /// Points whose final gradient column has a tied minimum.
    std::size_t ties = 0;
};

/// Per-iteration energy record; entry 0 is the initial state.
struct EnergyTrace {
    std::vector<TraceRecord> records;

    [[nodiscard]] bool monotone(double slack = 1e-10) const noexcept {
        for (std::size_t k = 1; k < records.size(); ++k) {
            if (records[k].phi > records[k - 1].phi + slack) return false;
            if (records[k].phi_half > records[k - 1].phi + slack) return false;
            if (records[k].phi > records[k].phi_half + slack) return false;
        }
        return true;
    }
    [[nodiscard]] double final_energy() const { return records.back().phi; }
};

template <class Field>
struct SolveResult {
    Field u;
    ParameterState theta;
    EnergyTrace trace;
    bool converged = false;
    int iterations = 0;
};

namespace detail {

inline void require_finite(const PhaseField& g) {
    for (std::size_t i = 0; i < g.phases(); ++i) {
        for (std::size_t j = 0; j < g.points(); ++j) {
            if (!std::isfinite(g(i, j))) {
                throw NumericError("non-finite gradient at phase " + std::to_string(i) + ", point " +
                                   std::to_string(j));
            }
        }
    }
}

inline double distance(const ParameterState& a, const ParameterState& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
}

}  // namespace detail

/// Column-wise lowest-index argmin of a gradient field.
inline IndicatorField threshold_gradient(const PhaseField& gradient) {
    detail::require_finite(gradient);
    std::vector<std::uint32_t> labels(gradient.points(), 0);
    for (std::size_t j = 0; j < gradient.points(); ++j) {
        double best = gradient(0, j);
        for (std::size_t i = 1; i < gradient.phases(); ++i) {
            if (gradient(i, j) < best) {
                best = gradient(i, j);
                labels[j] = static_cast<std::uint32_t>(i);
            }
        }
    }
    return {gradient.phases(), std::move(labels)};
}

/// Number of columns whose minimum is attained by more than one phase.
inline std::size_t count_gradient_ties(const PhaseField& gradient) {
    std::size_t ties = 0;
    for (std::size_t j = 0; j < gradient.points(); ++j) {
        double best = std::numeric_limits<double>::infinity();
        int hits = 0;
        for (std::size_t i = 0; i < gradient.phases(); ++i) {
            const double g = gradient(i, j);
            if (g < best) {
                best = g;
                hits = 1;
            } else if (g == best) {
                ++hits;
            }
        }
        ties += hits > 1 ? 1 : 0;
    }
    return ties;
}

/// Thresholding update: each point moves to the phase with the smallest partial derivative.
template <Problem P>
IndicatorField u_update_threshold(const P& problem, const IndicatorField& u, const ParameterState& theta) {
    return threshold_gradient(problem.gradient_u(u.dense(), theta));
}

/// One projected gradient step onto the binary assignment set.
template <Problem P>
IndicatorField u_update_pg(const P& problem, const IndicatorField& u, const ParameterState& theta, double alpha_u) {
    if (!(alpha_u > 0.0)) throw ConfigError("alpha_u must be positive");
    const PhaseField gradient = problem.gradient_u(u.dense(), theta);
    detail::require_finite(gradient);
    PhaseField v = u.dense();
    for (std::size_t i = 0; i < v.phases(); ++i) {
        for (std::size_t j = 0; j < v.points(); ++j) v(i, j) -= alpha_u * gradient(i, j);
    }
    return project_to_C(v);
}

/// Parameter update according to the problem's mode.
template <Problem P>
ParameterState theta_update(const P& problem, const IndicatorField& u, const ParameterState& previous,
                            const SolverConfig& config) {
    switch (problem.theta_mode()) {
        case ThetaMode::none:
            return previous;
        case ThetaMode::exact:
            if constexpr (ExactThetaProblem<P>) {
                return problem.solve_theta(u, previous);
            } else {
                throw ConfigError("problem declares exact parameter updates but has no solve_theta");
            }
        case ThetaMode::projected_gradient:
            if constexpr (GradientThetaProblem<P>) {
                if (!(config.alpha_theta > 0.0)) throw ConfigError("alpha_theta must be positive");
                if (const auto lip = lipschitz_theta(problem); lip && config.alpha_theta >= 2.0 / *lip) {
                    throw ConfigError("alpha_theta must be below 2/L_theta = " + std::to_string(2.0 / *lip));
                }
                const ParameterState gradient = problem.gradient_theta(u.dense(), previous);
                ParameterState stepped(previous);
                for (std::size_t k = 0; k < stepped.size(); ++k) stepped[k] -= config.alpha_theta * gradient[k];
                return problem.project_theta(stepped);
            } else {
                throw ConfigError("problem declares gradient parameter updates but has no gradient_theta");
            }
    }
    return previous;
}

/// Best single-point reassignment descent until no move lowers the energy.
template <Problem P>
IndicatorField local_search_radius1(const P& problem, IndicatorField u, const ParameterState& theta,
                                    std::size_t* moves = nullptr) {
    double current = energy(problem, u, theta);
    bool improved = true;
    while (improved) {
        improved = false;
        for (std::size_t j = 0; j < u.points(); ++j) {
            const std::uint32_t original = u.label(j);
            std::uint32_t best_label = original;
            double best = current;
            for (std::uint32_t m = 0; m < u.phases(); ++m) {
                if (m == original) continue;
                u.set_label(j, m);
                const double e = energy(problem, u, theta);
                if (e < best) {
                    best = e;
                    best_label = m;
                }
            }
            u.set_label(j, best_label);
            if (best_label != original) {
                current = best;
                improved = true;
                if (moves) ++*moves;
            }
        }
    }
    return u;
}

namespace detail {

// Inner assignment loop with the parameters frozen, run to an exact fixed point.
template <Problem P>
IndicatorField u_inner_loop(const P& problem, IndicatorField u, const ParameterState& theta,
                            const SolverConfig& config, std::size_t& steps, std::size_t& ties) {
    const std::size_t cap = config.max_inner > 0 ? config.max_inner : std::max<std::size_t>(u.points(), 1);
    double current = energy(problem, u, theta);
    for (;;) {
        steps = 0;
        for (; steps < cap; ++steps) {
            const PhaseField gradient = problem.gradient_u(u.dense(), theta);
            require_finite(gradient);
            IndicatorField next;
            if (config.alpha_u) {
                PhaseField v = u.dense();
                for (std::size_t i = 0; i < v.phases(); ++i) {
                    for (std::size_t j = 0; j < v.points(); ++j) v(i, j) -= *config.alpha_u * gradient(i, j);
                }
                next = project_to_C(v);
            } else {
                next = threshold_gradient(gradient);
            }
            if (next == u) {
                ties = count_gradient_ties(gradient);
                break;
            }
            const double e = energy(problem, next, theta);
            if (e > current + config.energy_slack) {
                throw ConsistencyError("assignment step increased the energy from " + std::to_string(current) +
                                       " to " + std::to_string(e));
            }
            current = e;
            u = std::move(next);
        }
        if (config.local_search_radius < 1) return u;
        std::size_t moves = 0;
        u = local_search_radius1(problem, std::move(u), theta, &moves);
        if (moves == 0) return u;
        current = energy(problem, u, theta);
    }
}

}  // namespace detail

/// Alternating minimization: assignment to an inner fixed point, then parameters.
///
/// Stops when the assignment and parameters both stabilize (see SolverConfig)
/// or after max_iter outer iterations. Throws ConsistencyError if any block
/// update raises the energy by more than config.energy_slack.
template <Problem P>
SolveResult<IndicatorField> run_alternating(const P& problem, IndicatorField u0, ParameterState theta0,
                                            const SolverConfig& config) {
    if (u0.phases() != problem.phases() || u0.points() != problem.points()) {
        throw ConfigError("initial assignment does not match the problem size");
    }
    if (config.max_iter < 1) throw ConfigError("max_iter must be positive");

    SolveResult<IndicatorField> result{std::move(u0), std::move(theta0), {}, false, 0};
    auto& u = result.u;
    auto& theta = result.theta;
    double phi = energy(problem, u, theta);
    result.trace.records.push_back({0, phi, phi, 0, 0.0, 0, 0});

    auto check = [&](double before, double after, const char* what) {
        if (after > before + config.energy_slack) {
            throw ConsistencyError(std::string(what) + " increased the energy from " + std::to_string(before) +
                                   " to " + std::to_string(after));
        }
    };

    for (int k = 1; k <= config.max_iter; ++k) {
        TraceRecord record;
        record.iter = k;
        IndicatorField next_u;
        ParameterState next_theta;
        if (config.order == UpdateOrder::u_first) {
            next_u = detail::u_inner_loop(problem, u, theta, config, record.inner_steps, record.ties);
            record.phi_half = energy(problem, next_u, theta);
            check(phi, record.phi_half, "assignment update");
            next_theta = theta_update(problem, next_u, theta, config);
            record.phi = energy(problem, next_u, next_theta);
            check(record.phi_half, record.phi, "parameter update");
        } else {
            next_theta = theta_update(problem, u, theta, config);
            record.phi_half = energy(problem, u, next_theta);
            check(phi, record.phi_half, "parameter update");
            next_u = detail::u_inner_loop(problem, u, next_theta, config, record.inner_steps, record.ties);
            record.phi = energy(problem, next_u, next_theta);
            check(record.phi_half, record.phi, "assignment update");
        }
        record.u_changes = u.changed_entries(next_u);
        record.theta_delta = detail::distance(theta, next_theta);
        result.trace.records.push_back(record);
        result.iterations = k;

        u = std::move(next_u);
        theta = std::move(next_theta);
        phi = record.phi;
        if (static_cast<double>(record.u_changes) <= config.tol_u && record.theta_delta <= config.tol_theta) {
            result.converged = true;
            break;
        }
    }
    return result;
}

}  // namespace ictm
