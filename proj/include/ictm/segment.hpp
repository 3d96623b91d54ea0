#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ictm/detail/sum.hpp"
#include "ictm/errors.hpp"
#include "ictm/grid.hpp"
#include "ictm/image.hpp"
#include "ictm/indicator.hpp"
#include "ictm/kernel.hpp"
#include "ictm/problem.hpp"

namespace ictm {

namespace detail {

inline void require_image_kernel(const Image& image, const KernelOperator& kernel) {
    if (kernel.grid().points() != image.pixels() || kernel.grid().dim() != 2 ||
        kernel.grid().size(0) != image.height() || kernel.grid().size(1) != image.width()) {
        throw ConfigError("kernel grid does not match the image");
    }
}

inline void require_assignment(const PhaseField& u, std::size_t n, std::size_t p) {
    if (u.phases() != n || u.points() != p) {
        throw ConfigError("assignment is " + std::to_string(u.phases()) + " x " + std::to_string(u.points()) +
                          ", expected " + std::to_string(n) + " x " + std::to_string(p));
    }
}

// lambda * sqrt(pi/tau) * h^d * K(1 - 2 u_i) added to every row of `field`.
inline void add_curvature(PhaseField& field, const PhaseField& u, double lambda, const KernelOperator& kernel) {
    if (lambda == 0.0) return;
    const double c = lambda * kernel.perimeter_scale() * kernel.grid().cell_volume();
    std::vector<double> w(u.points());
    for (std::size_t i = 0; i < u.phases(); ++i) {
        const auto ui = u.row(i);
        for (std::size_t j = 0; j < w.size(); ++j) w[j] = 1.0 - 2.0 * ui[j];
        kernel.apply(w, w);
        auto fi = field.row(i);
        for (std::size_t j = 0; j < w.size(); ++j) fi[j] += c * w[j];
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Chan-Vese

/// theta[i * channels + c] is the mean of channel c over phase i.
inline ParameterState cv_initial_theta(const Image& image, std::size_t phases) {
    ParameterState theta(phases * image.channels());
    for (std::size_t c = 0; c < image.channels(); ++c) {
        const double mean = detail::sum(image.channel(c)) / static_cast<double>(image.pixels());
        for (std::size_t i = 0; i < phases; ++i) {
            theta[i * image.channels() + c] = mean + static_cast<double>(i) / static_cast<double>(phases);
        }
    }
    return theta;
}

/// Per-phase channel means; an empty phase keeps its previous value.
inline ParameterState cv_theta_update(const IndicatorField& u, const Image& image, const ParameterState& previous) {
    const std::size_t n = u.phases();
    const std::size_t d = image.channels();
    if (u.points() != image.pixels()) throw ConfigError("assignment does not match the image");
    if (previous.size() != n * d) throw ConfigError("CV parameters must have phases x channels entries");
    std::vector<detail::Accumulator> sums(n * d);
    std::vector<std::size_t> counts(n, 0);
    for (std::size_t j = 0; j < u.points(); ++j) {
        const std::uint32_t i = u.label(j);
        ++counts[i];
        for (std::size_t c = 0; c < d; ++c) sums[i * d + c].add(image(c, j));
    }
    ParameterState theta(previous);
    for (std::size_t i = 0; i < n; ++i) {
        if (counts[i] == 0) continue;
        for (std::size_t c = 0; c < d; ++c) theta[i * d + c] = sums[i * d + c].value() / static_cast<double>(counts[i]);
    }
    return theta;
}

/// sum_c (theta_ic - I_jc)^2 + lambda sqrt(pi/tau) h^d K(1 - 2 u_i)_j, the derivative of cv_energy.
inline PhaseField cv_threshold_field(const PhaseField& u, const ParameterState& theta, const Image& image,
                                     double lambda, const KernelOperator& kernel) {
    const std::size_t n = u.phases();
    const std::size_t d = image.channels();
    detail::require_image_kernel(image, kernel);
    detail::require_assignment(u, n, image.pixels());
    if (theta.size() != n * d) throw ConfigError("CV parameters must have phases x channels entries");
    PhaseField field(n, image.pixels(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < d; ++c) {
            const auto ic = image.channel(c);
            const double t = theta[i * d + c];
            for (std::size_t j = 0; j < ic.size(); ++j) field(i, j) += (t - ic[j]) * (t - ic[j]);
        }
    }
    detail::add_curvature(field, u, lambda, kernel);
    return field;
}

/// sum_ij u_ij |theta_i - I_j|^2 + lambda * perimeter_estimate(u).
inline double cv_energy(const PhaseField& u, const ParameterState& theta, const Image& image, double lambda,
                        const KernelOperator& kernel) {
    const std::size_t n = u.phases();
    const std::size_t d = image.channels();
    detail::require_image_kernel(image, kernel);
    detail::require_assignment(u, n, image.pixels());
    if (theta.size() != n * d) throw ConfigError("CV parameters must have phases x channels entries");
    detail::Accumulator fidelity;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < d; ++c) {
            const auto ic = image.channel(c);
            const double t = theta[i * d + c];
            for (std::size_t j = 0; j < ic.size(); ++j) fidelity.add(u(i, j) * (t - ic[j]) * (t - ic[j]));
        }
    }
    const double perimeter = lambda == 0.0 ? 0.0 : lambda * perimeter_estimate(u, kernel);
    return fidelity.value() + perimeter;
}

inline double cv_energy(const IndicatorField& u, const ParameterState& theta, const Image& image, double lambda,
                        const KernelOperator& kernel) {
    return cv_energy(u.dense(), theta, image, lambda, kernel);
}

/// Multiphase piecewise-constant segmentation.
class ChanVeseProblem {
public:
    ChanVeseProblem(Image image, std::size_t phases, double lambda, double tau, ThetaMode mode = ThetaMode::exact)
        : image_(std::move(image)), n_(phases), lambda_(lambda), kernel_(image_.grid(), tau), mode_(mode) {
        if (n_ < 2) throw ConfigError("Chan-Vese needs at least two phases");
        if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) throw ConfigError("lambda must be nonnegative");
    }

    [[nodiscard]] std::size_t phases() const noexcept { return n_; }
    [[nodiscard]] std::size_t points() const noexcept { return image_.pixels(); }
    [[nodiscard]] ThetaMode theta_mode() const noexcept { return mode_; }
    [[nodiscard]] const Image& image() const noexcept { return image_; }
    [[nodiscard]] const KernelOperator& kernel() const noexcept { return kernel_; }
    [[nodiscard]] double lambda() const noexcept { return lambda_; }

    [[nodiscard]] double energy(const PhaseField& u, const ParameterState& theta) const {
        return cv_energy(u, theta, image_, lambda_, kernel_);
    }
    [[nodiscard]] PhaseField gradient_u(const PhaseField& u, const ParameterState& theta) const {
        return cv_threshold_field(u, theta, image_, lambda_, kernel_);
    }
    [[nodiscard]] ParameterState solve_theta(const IndicatorField& u, const ParameterState& previous) const {
        return cv_theta_update(u, image_, previous);
    }

    [[nodiscard]] ParameterState gradient_theta(const PhaseField& u, const ParameterState& theta) const {
        detail::require_assignment(u, n_, points());
        const std::size_t d = image_.channels();
        ParameterState g(n_ * d);
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t c = 0; c < d; ++c) {
                const auto ic = image_.channel(c);
                detail::Accumulator acc;
                for (std::size_t j = 0; j < ic.size(); ++j) acc.add(2.0 * u(i, j) * (theta[i * d + c] - ic[j]));
                g[i * d + c] = acc.value();
            }
        }
        return g;
    }
    [[nodiscard]] ParameterState project_theta(const ParameterState& theta) const { return theta; }
    [[nodiscard]] std::optional<double> lipschitz_theta() const { return 2.0 * static_cast<double>(points()); }

    [[nodiscard]] ParameterState initial_theta() const { return cv_initial_theta(image_, n_); }

private:
    Image image_;
    std::size_t n_;
    double lambda_;
    KernelOperator kernel_;
    ThetaMode mode_;
};

// ---------------------------------------------------------------------------
// Local intensity fitting (two phases)

struct LifParameters {
    double tau = 5.0;
    double lambda = 1.0;
    double mu = 50.0;
    double sigma = 3.0;
    double epsilon = 1e-6;
};

/// Named parameter sets (tau, lambda, mu, sigma): p1 ... p5.
inline LifParameters lif_preset(const std::string& name) {
    static const double table[5][4] = {{5, 1, 150, 3}, {3, 1, 245, 3}, {10, 1, 110, 3}, {2, 1, 90, 3}, {5, 1, 50, 3}};
    if (name.size() == 2 && name[0] == 'p' && name[1] >= '1' && name[1] <= '5') {
        const auto& row = table[name[1] - '1'];
        return {row[0], row[1], row[2], row[3], 1e-6};
    }
    throw ConfigError("unknown LIF preset '" + name + "' (expected p1 ... p5)");
}

namespace detail {

inline std::size_t lif_index(std::size_t i, std::size_t c, std::size_t channels, std::size_t p) {
    return (i * channels + c) * p;
}

inline void require_lif(const PhaseField& u, const ParameterState& theta, const Image& image) {
    require_assignment(u, 2, image.pixels());
    if (theta.size() != 2 * image.channels() * image.pixels()) {
        throw ConfigError("LIF parameters must have 2 x channels x pixels entries");
    }
}

}  // namespace detail

/// theta_i = (K_sigma(u_i I) + eps) / (K_sigma u_i + eps), per channel.
inline ParameterState lif_theta_update(const PhaseField& u, const Image& image, const KernelOperator& kernel_sigma,
                                       double epsilon) {
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    detail::require_image_kernel(image, kernel_sigma);
    detail::require_assignment(u, 2, image.pixels());
    const std::size_t p = image.pixels();
    const std::size_t d = image.channels();
    ParameterState theta(2 * d * p);
    std::vector<double> masked(p);
    for (std::size_t i = 0; i < 2; ++i) {
        const auto smoothed_mask = kernel_sigma.apply(u.row(i));
        for (std::size_t c = 0; c < d; ++c) {
            const auto ic = image.channel(c);
            for (std::size_t j = 0; j < p; ++j) masked[j] = u(i, j) * ic[j];
            const auto smoothed = kernel_sigma.apply(masked);
            double* out = theta.data() + detail::lif_index(i, c, d, p);
            for (std::size_t j = 0; j < p; ++j) out[j] = (smoothed[j] + epsilon) / (smoothed_mask[j] + epsilon);
        }
    }
    return theta;
}

inline ParameterState lif_theta_update(const IndicatorField& u, const Image& image, const KernelOperator& kernel_sigma,
                                       double epsilon) {
    return lif_theta_update(u.dense(), image, kernel_sigma, epsilon);
}

/// psi_i = mu [K_sigma(theta_i^2 + I^2) - 2 I K_sigma theta_i] + lambda sqrt(pi/tau) K_tau(1 - 2 u_i).
inline PhaseField lif_threshold_field(const PhaseField& u, const ParameterState& theta, const Image& image,
                                      double lambda, double mu, const KernelOperator& kernel_tau,
                                      const KernelOperator& kernel_sigma) {
    detail::require_image_kernel(image, kernel_tau);
    detail::require_image_kernel(image, kernel_sigma);
    detail::require_lif(u, theta, image);
    const std::size_t p = image.pixels();
    const std::size_t d = image.channels();
    PhaseField field(2, p, 0.0);
    std::vector<double> w(p);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t c = 0; c < d; ++c) {
            const auto ic = image.channel(c);
            const double* t = theta.data() + detail::lif_index(i, c, d, p);
            for (std::size_t j = 0; j < p; ++j) w[j] = t[j] * t[j] + ic[j] * ic[j];
            const auto squares = kernel_sigma.apply(w);
            const auto fit = kernel_sigma.apply(std::span<const double>(t, p));
            for (std::size_t j = 0; j < p; ++j) field(i, j) += mu * (squares[j] - 2.0 * ic[j] * fit[j]);
        }
    }
    detail::add_curvature(field, u, lambda, kernel_tau);
    return field;
}

/// lambda * perimeter_estimate(u) + mu sum_i (<u_i, K_sigma(theta_i^2 + I^2)> - 2 <u_i I, K_sigma theta_i>).
inline double lif_energy(const PhaseField& u, const ParameterState& theta, const Image& image, double lambda,
                         double mu, const KernelOperator& kernel_tau, const KernelOperator& kernel_sigma) {
    detail::require_image_kernel(image, kernel_tau);
    detail::require_image_kernel(image, kernel_sigma);
    detail::require_lif(u, theta, image);
    const std::size_t p = image.pixels();
    const std::size_t d = image.channels();
    detail::Accumulator fidelity;
    std::vector<double> w(p), masked(p);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t c = 0; c < d; ++c) {
            const auto ic = image.channel(c);
            const double* t = theta.data() + detail::lif_index(i, c, d, p);
            for (std::size_t j = 0; j < p; ++j) {
                w[j] = t[j] * t[j] + ic[j] * ic[j];
                masked[j] = u(i, j) * ic[j];
            }
            const auto squares = kernel_sigma.apply(w);
            const auto fit = kernel_sigma.apply(std::span<const double>(t, p));
            fidelity.add(detail::dot(u.row(i), squares));
            fidelity.add(-2.0 * detail::dot(masked, fit));
        }
    }
    const double perimeter = lambda == 0.0 ? 0.0 : lambda * perimeter_estimate(u, kernel_tau);
    return mu * fidelity.value() + perimeter;
}

/// Two-phase segmentation with spatially varying fits; theta[(i * channels + c) * p + j].
class LifProblem {
public:
    LifProblem(Image image, LifParameters params)
        : image_(std::move(image)),
          params_(params),
          kernel_tau_(image_.grid(), params.tau),
          kernel_sigma_(image_.grid(), params.sigma) {
        if (!(params_.lambda >= 0.0) || !(params_.mu >= 0.0)) throw ConfigError("lambda and mu must be nonnegative");
        if (!(params_.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    }

    [[nodiscard]] std::size_t phases() const noexcept { return 2; }
    [[nodiscard]] std::size_t points() const noexcept { return image_.pixels(); }
    [[nodiscard]] ThetaMode theta_mode() const noexcept { return ThetaMode::exact; }
    [[nodiscard]] const Image& image() const noexcept { return image_; }
    [[nodiscard]] const LifParameters& parameters() const noexcept { return params_; }
    [[nodiscard]] const KernelOperator& kernel_tau() const noexcept { return kernel_tau_; }
    [[nodiscard]] const KernelOperator& kernel_sigma() const noexcept { return kernel_sigma_; }

    [[nodiscard]] double energy(const PhaseField& u, const ParameterState& theta) const {
        return lif_energy(u, theta, image_, params_.lambda, params_.mu, kernel_tau_, kernel_sigma_);
    }
    [[nodiscard]] PhaseField gradient_u(const PhaseField& u, const ParameterState& theta) const {
        return lif_threshold_field(u, theta, image_, params_.lambda, params_.mu, kernel_tau_, kernel_sigma_);
    }
    [[nodiscard]] ParameterState solve_theta(const IndicatorField& u, const ParameterState&) const {
        return lif_theta_update(u, image_, kernel_sigma_, params_.epsilon);
    }

    /// Derivative of the energy in theta: 2 mu (theta K_sigma u_i - K_sigma(u_i I)).
    [[nodiscard]] ParameterState gradient_theta(const PhaseField& u, const ParameterState& theta) const {
        detail::require_lif(u, theta, image_);
        const std::size_t p = image_.pixels();
        const std::size_t d = image_.channels();
        ParameterState g(theta.size());
        std::vector<double> masked(p);
        for (std::size_t i = 0; i < 2; ++i) {
            const auto smoothed_mask = kernel_sigma_.apply(u.row(i));
            for (std::size_t c = 0; c < d; ++c) {
                const auto ic = image_.channel(c);
                for (std::size_t j = 0; j < p; ++j) masked[j] = u(i, j) * ic[j];
                const auto smoothed = kernel_sigma_.apply(masked);
                const std::size_t base = detail::lif_index(i, c, d, p);
                for (std::size_t j = 0; j < p; ++j) {
                    g[base + j] = 2.0 * params_.mu * (theta[base + j] * smoothed_mask[j] - smoothed[j]);
                }
            }
        }
        return g;
    }
    [[nodiscard]] ParameterState project_theta(const ParameterState& theta) const { return theta; }

private:
    Image image_;
    LifParameters params_;
    KernelOperator kernel_tau_;
    KernelOperator kernel_sigma_;
};

// ---------------------------------------------------------------------------
// Initial masks

/// Rectangle (columns [x, x+w), rows [y, y+h)) or disk (center column cx, row cy, radius r), in pixels.
struct InitRegion {
    enum class Shape { rect, disk };
    Shape shape = Shape::rect;
    double x = 0, y = 0, w = 0, h = 0;
    double cx = 0, cy = 0, r = 0;

    static InitRegion rect(double x, double y, double w, double h) { return {Shape::rect, x, y, w, h, 0, 0, 0}; }
    static InitRegion disk(double cx, double cy, double r) { return {Shape::disk, 0, 0, 0, 0, cx, cy, r}; }
};

/// Region k goes to phase k; later regions override earlier ones; the rest is phase n-1.
inline IndicatorField init_mask(const std::vector<InitRegion>& regions, std::size_t phases, std::size_t width,
                                std::size_t height) {
    if (phases < 2) throw ConfigError("need at least two phases");
    if (regions.empty()) throw ConfigError("need at least one initial region");
    if (regions.size() > phases - 1) {
        throw ConfigError(std::to_string(regions.size()) + " initial regions for " + std::to_string(phases) +
                          " phases (at most n-1)");
    }
    const double W = static_cast<double>(width), H = static_cast<double>(height);
    IndicatorField u(phases, width * height, static_cast<std::uint32_t>(phases - 1));
    for (std::size_t k = 0; k < regions.size(); ++k) {
        const auto& g = regions[k];
        if (g.shape == InitRegion::Shape::rect) {
            if (!(g.w > 0.0) || !(g.h > 0.0)) throw ConfigError("initial rectangle has zero area");
            if (g.x < 0.0 || g.y < 0.0 || g.x + g.w > W || g.y + g.h > H) {
                throw ConfigError("initial rectangle lies outside the image");
            }
        } else {
            if (!(g.r > 0.0)) throw ConfigError("initial disk has zero area");
            if (g.cx - g.r < -0.5 || g.cy - g.r < -0.5 || g.cx + g.r > W - 0.5 || g.cy + g.r > H - 0.5) {
                throw ConfigError("initial disk lies outside the image");
            }
        }
        std::size_t covered = 0;
        for (std::size_t row = 0; row < height; ++row) {
            for (std::size_t col = 0; col < width; ++col) {
                const double c = static_cast<double>(col), r = static_cast<double>(row);
                bool inside;
                if (g.shape == InitRegion::Shape::rect) {
                    inside = c >= g.x && c < g.x + g.w && r >= g.y && r < g.y + g.h;
                } else {
                    inside = (c - g.cx) * (c - g.cx) + (r - g.cy) * (r - g.cy) <= g.r * g.r;
                }
                if (inside) {
                    u.set_label(row * width + col, static_cast<std::uint32_t>(k));
                    ++covered;
                }
            }
        }
        if (covered == 0) throw ConfigError("initial region covers no pixel");
    }
    return u;
}

}  // namespace ictm
