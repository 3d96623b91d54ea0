#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "ictm/errors.hpp"
#include "ictm/indicator.hpp"
#include "ictm/problem.hpp"

namespace ictm {

/// Concave assignment term of a DenseProblem.
enum class ConcaveTerm {
    kernel,           ///< gamma * sum_i <1 - u_i, K u_i> with a dense Gaussian ring kernel
    negative_square,  ///< -gamma * ||u||^2
    zero,             ///< g = 0
    linear,           ///< sum_ij w_ij u_ij
};

/// Normalized periodic Gaussian on p points of a unit-spaced ring, as a dense p x p matrix.
inline std::vector<double> ring_kernel(std::size_t p, double tau) {
    std::vector<double> weights(p);
    double mass = 0.0;
    for (std::size_t k = 0; k < p; ++k) {
        const double d = static_cast<double>(std::min(k, p - k));
        weights[k] = std::exp(-d * d / (4.0 * tau));
        mass += weights[k];
    }
    std::vector<double> matrix(p * p);
    for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = 0; b < p; ++b) matrix[a * p + b] = weights[(a + p - b) % p] / mass;
    }
    return matrix;
}

struct DenseOptions {
    double gamma = 0.5;
    double eta = 0.1;
    double ring_tau = 0.25;
    ConcaveTerm concave = ConcaveTerm::kernel;
    ThetaMode mode = ThetaMode::exact;
};

/// Small explicit instance of h(theta) + sum_ij u_ij f_ij(theta) + g(u) for exhaustive checks.
///
/// theta has one entry per phase, f_ij(theta) = a_ij (theta_i - c_ij)^2 + b_ij and
/// h(theta) = eta ||theta||^2, so the exact theta-update is a weighted mean.
class DenseProblem {
public:
    using Options = DenseOptions;

    DenseProblem(std::size_t phases, std::size_t points, std::vector<double> a, std::vector<double> c,
                 std::vector<double> b, Options options)
        : n_(phases), p_(points), a_(std::move(a)), c_(std::move(c)), b_(std::move(b)), options_(options) {
        if (a_.size() != n_ * p_ || c_.size() != n_ * p_ || b_.size() != n_ * p_) {
            throw ConfigError("coefficient arrays must have n*p entries");
        }
        if (options_.concave == ConcaveTerm::kernel) kernel_ = ring_kernel(p_, options_.ring_tau);
        if (options_.concave == ConcaveTerm::linear) linear_.assign(n_ * p_, options_.gamma);
    }

    /// Random convex quadratics and a ring-kernel concave term; bit-reproducible from the seed.
    static DenseProblem random(std::size_t phases, std::size_t points, std::uint64_t seed, Options options = {}) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> curvature(0.5, 2.0);
        std::uniform_real_distribution<double> center(0.0, 1.0);
        std::uniform_real_distribution<double> offset(-0.5, 0.5);
        std::vector<double> a(phases * points), c(phases * points), b(phases * points);
        for (std::size_t k = 0; k < a.size(); ++k) {
            a[k] = curvature(rng);
            c[k] = center(rng);
            b[k] = offset(rng);
        }
        DenseProblem problem(phases, points, std::move(a), std::move(c), std::move(b), options);
        if (options.concave == ConcaveTerm::linear) {
            for (double& w : problem.linear_) w = offset(rng);
        }
        return problem;
    }

    [[nodiscard]] std::size_t phases() const noexcept { return n_; }
    [[nodiscard]] std::size_t points() const noexcept { return p_; }
    [[nodiscard]] ThetaMode theta_mode() const noexcept { return options_.mode; }
    [[nodiscard]] const Options& options() const noexcept { return options_; }
    [[nodiscard]] const std::vector<double>& kernel_matrix() const noexcept { return kernel_; }

    [[nodiscard]] double f(std::size_t i, std::size_t j, const ParameterState& theta) const {
        const double r = theta[i] - c_[i * p_ + j];
        return a_[i * p_ + j] * r * r + b_[i * p_ + j];
    }

    /// The concave term alone.
    [[nodiscard]] double concave_part(const PhaseField& u) const {
        double g = 0.0;
        switch (options_.concave) {
            case ConcaveTerm::kernel:
                for (std::size_t i = 0; i < n_; ++i) {
                    const auto ku = apply_kernel(u.row(i));
                    for (std::size_t j = 0; j < p_; ++j) g += (1.0 - u(i, j)) * ku[j];
                }
                return options_.gamma * g;
            case ConcaveTerm::negative_square:
                for (double v : u.values()) g -= v * v;
                return options_.gamma * g;
            case ConcaveTerm::zero:
                return 0.0;
            case ConcaveTerm::linear:
                for (std::size_t k = 0; k < n_ * p_; ++k) g += linear_[k] * u.values()[k];
                return g;
        }
        return g;
    }

    [[nodiscard]] double energy(const PhaseField& u, const ParameterState& theta) const {
        check_theta(theta);
        double e = 0.0;
        for (double t : theta) e += options_.eta * t * t;
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j < p_; ++j) e += u(i, j) * f(i, j, theta);
        }
        return e + concave_part(u);
    }

    [[nodiscard]] PhaseField gradient_u(const PhaseField& u, const ParameterState& theta) const {
        check_theta(theta);
        PhaseField g(n_, p_);
        for (std::size_t i = 0; i < n_; ++i) {
            std::vector<double> smoothed;
            if (options_.concave == ConcaveTerm::kernel) {
                std::vector<double> w(p_);
                for (std::size_t j = 0; j < p_; ++j) w[j] = 1.0 - 2.0 * u(i, j);
                smoothed = apply_kernel(w);
            }
            for (std::size_t j = 0; j < p_; ++j) {
                double d = f(i, j, theta);
                switch (options_.concave) {
                    case ConcaveTerm::kernel: d += options_.gamma * smoothed[j]; break;
                    case ConcaveTerm::negative_square: d -= 2.0 * options_.gamma * u(i, j); break;
                    case ConcaveTerm::zero: break;
                    case ConcaveTerm::linear: d += linear_[i * p_ + j]; break;
                }
                g(i, j) = d;
            }
        }
        return g;
    }

    [[nodiscard]] ParameterState solve_theta(const IndicatorField& u, const ParameterState&) const {
        ParameterState theta(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            double num = 0.0;
            double den = options_.eta;
            for (std::size_t j = 0; j < p_; ++j) {
                if (u.label(j) != i) continue;
                num += a_[i * p_ + j] * c_[i * p_ + j];
                den += a_[i * p_ + j];
            }
            theta[i] = num / den;
        }
        return theta;
    }

    [[nodiscard]] ParameterState gradient_theta(const PhaseField& u, const ParameterState& theta) const {
        check_theta(theta);
        ParameterState g(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            double d = 2.0 * options_.eta * theta[i];
            for (std::size_t j = 0; j < p_; ++j) d += 2.0 * u(i, j) * a_[i * p_ + j] * (theta[i] - c_[i * p_ + j]);
            g[i] = d;
        }
        return g;
    }

    [[nodiscard]] ParameterState project_theta(const ParameterState& theta) const { return theta; }

    /// Valid for every u in the relaxed set.
    [[nodiscard]] std::optional<double> lipschitz_theta() const {
        double worst = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < p_; ++j) s += a_[i * p_ + j];
            worst = std::max(worst, s);
        }
        return 2.0 * (worst + options_.eta);
    }

private:
    void check_theta(const ParameterState& theta) const {
        if (theta.size() != n_) throw ConfigError("theta must have one entry per phase");
    }

    [[nodiscard]] std::vector<double> apply_kernel(std::span<const double> v) const {
        std::vector<double> out(p_, 0.0);
        for (std::size_t a = 0; a < p_; ++a) {
            for (std::size_t b = 0; b < p_; ++b) out[a] += kernel_[a * p_ + b] * v[b];
        }
        return out;
    }

    std::size_t n_;
    std::size_t p_;
    std::vector<double> a_, c_, b_;
    std::vector<double> kernel_;
    std::vector<double> linear_;
    Options options_;
};

}  // namespace ictm
