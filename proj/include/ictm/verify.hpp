#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ictm/enumerate.hpp"
#include "ictm/indicator.hpp"
#include "ictm/problem.hpp"

namespace ictm {

enum class CertificateStatus {
    pass,
    fail,
    /// Descent ended at a non-binary point whose projected gradient vanishes.
    stalled,
    /// The claim's precondition does not hold for this instance.
    hypothesis_unmet,
};

inline const char* to_string(CertificateStatus s) {
    switch (s) {
        case CertificateStatus::pass: return "pass";
        case CertificateStatus::fail: return "fail";
        case CertificateStatus::stalled: return "stalled";
        case CertificateStatus::hypothesis_unmet: return "hypothesis_unmet";
    }
    return "unknown";
}

/// Counterexample attached to a failed certificate.
struct Witness {
    std::vector<PhaseField> fields;
    std::optional<double> t;
    std::vector<double> values;
    std::string note;
};

struct CertificateReport {
    std::string claim;
    std::string instance;
    CertificateStatus status = CertificateStatus::pass;
    std::optional<Witness> witness;
    std::size_t trials = 0;

    [[nodiscard]] bool passed() const noexcept { return status == CertificateStatus::pass; }
};

/// Global minimizer over C at fixed theta and its energy; the first minimizer
/// in lexicographic order wins ties.
template <Problem P>
std::pair<IndicatorField, double> brute_force_min_u(const P& problem, const ParameterState& theta,
                                                    std::uint64_t cap = default_enumeration_cap) {
    std::optional<IndicatorField> best;
    double best_energy = 0.0;
    for_each_assignment(
        problem.phases(), problem.points(),
        [&](const IndicatorField& u) {
            const double e = energy(problem, u, theta);
            if (!best || e < best_energy) {
                best = u;
                best_energy = e;
            }
        },
        cap);
    return {std::move(*best), best_energy};
}

namespace detail {

inline std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
    return std::mt19937_64(seq);
}

// Random point in the interior of the relaxed set.
inline PhaseField random_relaxed(std::size_t n, std::size_t p, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(0.05, 1.0);
    PhaseField u(n, p);
    for (std::size_t j = 0; j < p; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += (u(i, j) = dist(rng));
        for (std::size_t i = 0; i < n; ++i) u(i, j) /= s;
    }
    return u;
}

inline PhaseField mix(const PhaseField& u, const PhaseField& v, double t) {
    PhaseField w(u.phases(), u.points());
    for (std::size_t k = 0; k < w.values().size(); ++k) w.values()[k] = t * u.values()[k] + (1.0 - t) * v.values()[k];
    return w;
}

}  // namespace detail

/// Phi(t u + (1-t) v) - [t Phi(u) + (1-t) Phi(v)]; positive on a strictly concave segment.
/// The part of Phi that is affine in u cancels, so this measures the concave term.
template <Problem P>
double concavity_gap(const P& problem, const ParameterState& theta, const PhaseField& u, const PhaseField& v,
                     double t) {
    return problem.energy(detail::mix(u, v, t), theta) -
           (t * problem.energy(u, theta) + (1.0 - t) * problem.energy(v, theta));
}

/// Samples random segments in the relaxed set and requires a strictly positive concavity gap.
template <Problem P>
CertificateReport strict_concavity_probe(const P& problem, const ParameterState& theta, std::size_t samples,
                                         std::uint64_t seed, double margin = 1e-10) {
    CertificateReport report{"strict_concavity", "n=" + std::to_string(problem.phases()) + " p=" +
                                                     std::to_string(problem.points()),
                             CertificateStatus::pass, std::nullopt, samples};
    std::uniform_real_distribution<double> tdist(0.05, 0.95);
    for (std::size_t s = 0; s < samples; ++s) {
        auto rng = detail::trial_rng(seed, s);
        const PhaseField u = detail::random_relaxed(problem.phases(), problem.points(), rng);
        const PhaseField v = detail::random_relaxed(problem.phases(), problem.points(), rng);
        const double t = tdist(rng);
        const double gap = concavity_gap(problem, theta, u, v, t);
        if (!(gap > margin)) {
            report.status = CertificateStatus::fail;
            report.witness = Witness{{u, v}, t, {gap}, "concavity gap not strictly positive"};
            break;
        }
    }
    return report;
}

struct DescentOptions {
    std::size_t steps = 500;
    /// Step at iteration t is step_scale / (t + 1).
    double step_scale = 10.0;
    double binary_tolerance = 1e-6;
    double stall_tolerance = 1e-8;
    std::size_t concavity_samples = 16;
};

/// Projected gradient descent over the relaxed set from random interior points,
/// with diminishing steps; every terminal point must be binary.
template <Problem P>
CertificateReport relaxation_exactness_check(const P& problem, const ParameterState& theta, std::size_t trials,
                                             std::uint64_t seed, DescentOptions options = {}) {
    CertificateReport report{"relaxation_exactness", "n=" + std::to_string(problem.phases()) + " p=" +
                                                         std::to_string(problem.points()),
                             CertificateStatus::pass, std::nullopt, trials};
    if (!strict_concavity_probe(problem, theta, options.concavity_samples, seed).passed()) {
        report.status = CertificateStatus::hypothesis_unmet;
        return report;
    }
    for (std::size_t trial = 0; trial < trials; ++trial) {
        auto rng = detail::trial_rng(seed, trial);
        PhaseField u = detail::random_relaxed(problem.phases(), problem.points(), rng);
        for (std::size_t t = 0; t < options.steps && !u.near_binary(options.binary_tolerance); ++t) {
            const PhaseField g = problem.gradient_u(u, theta);
            const double step = options.step_scale / static_cast<double>(t + 1);
            for (std::size_t k = 0; k < u.values().size(); ++k) u.values()[k] -= step * g.values()[k];
            project_columns_to_simplex(u);
        }
        if (u.near_binary(options.binary_tolerance)) continue;

        // Non-binary: distinguish a vanishing projected gradient from a failure.
        PhaseField probe = u;
        const PhaseField g = problem.gradient_u(u, theta);
        for (std::size_t k = 0; k < probe.values().size(); ++k) probe.values()[k] -= g.values()[k];
        project_columns_to_simplex(probe);
        double residual = 0.0;
        for (std::size_t k = 0; k < probe.values().size(); ++k) {
            residual = std::max(residual, std::abs(probe.values()[k] - u.values()[k]));
        }
        const bool stalled = residual <= options.stall_tolerance;
        if (!stalled || report.status == CertificateStatus::pass) {
            report.status = stalled ? CertificateStatus::stalled : CertificateStatus::fail;
            report.witness = Witness{{u}, std::nullopt, {residual, static_cast<double>(trial)},
                                     stalled ? "descent stalled at an interior stationary point"
                                             : "terminal point is not binary"};
        }
        if (!stalled) break;
    }
    return report;
}

/// Phi(u) <= Phi(v) for every v within Hamming radius r of u.
template <Problem P>
CertificateReport local_min_certificate(const P& problem, const IndicatorField& u, const ParameterState& theta,
                                        std::size_t radius, std::uint64_t cap = default_enumeration_cap) {
    CertificateReport report{"local_min_r" + std::to_string(radius),
                             "n=" + std::to_string(problem.phases()) + " p=" + std::to_string(problem.points()),
                             CertificateStatus::pass, std::nullopt, 1};
    const double phi = energy(problem, u, theta);
    const double tol = 1e-12 * std::max(1.0, std::abs(phi));
    std::optional<IndicatorField> best;
    double best_energy = phi - tol;
    for_each_in_ball(
        u, radius,
        [&](const IndicatorField& v) {
            const double e = energy(problem, v, theta);
            if (e < best_energy) {
                best_energy = e;
                best = v;
            }
        },
        cap);
    if (best) {
        report.status = CertificateStatus::fail;
        report.witness = Witness{{best->dense()}, std::nullopt, {phi, best_energy}, "lower energy inside the ball"};
    }
    return report;
}

}  // namespace ictm
