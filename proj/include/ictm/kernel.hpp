#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "ictm/detail/sum.hpp"
#include "ictm/errors.hpp"
#include "ictm/grid.hpp"
#include "ictm/indicator.hpp"

namespace ictm {

namespace detail {

// FFTW planning is not thread-safe; execution on caller-owned arrays is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct PlanDeleter {
    void operator()(fftw_plan_s* plan) const noexcept {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
};
using PlanHandle = std::unique_ptr<fftw_plan_s, PlanDeleter>;

// Forward/backward real transforms of one grid shape.
class RealTransform {
public:
    explicit RealTransform(const Grid& grid) : points_(grid.points()) {
        std::vector<int> dims(grid.sizes().begin(), grid.sizes().end());
        half_ = points_ / grid.sizes().back() * (grid.sizes().back() / 2 + 1);
        std::vector<double> real(points_);
        std::vector<std::complex<double>> spectrum(half_);
        auto* c = reinterpret_cast<fftw_complex*>(spectrum.data());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        std::lock_guard lock(fftw_planner_mutex());
        forward_.reset(fftw_plan_dft_r2c(static_cast<int>(dims.size()), dims.data(), real.data(), c, flags));
        backward_.reset(fftw_plan_dft_c2r(static_cast<int>(dims.size()), dims.data(), c, real.data(), flags));
        if (!forward_ || !backward_) throw ConfigError("FFT planning failed");
    }

    [[nodiscard]] std::size_t points() const noexcept { return points_; }
    [[nodiscard]] std::size_t half_points() const noexcept { return half_; }

    void forward(std::vector<double>& in, std::vector<std::complex<double>>& out) const {
        fftw_execute_dft_r2c(forward_.get(), in.data(), reinterpret_cast<fftw_complex*>(out.data()));
    }
    // Destroys `in`. Output is scaled by the point count (FFTW convention).
    void backward(std::vector<std::complex<double>>& in, std::vector<double>& out) const {
        fftw_execute_dft_c2r(backward_.get(), reinterpret_cast<fftw_complex*>(in.data()), out.data());
    }

private:
    std::size_t points_ = 0;
    std::size_t half_ = 0;
    PlanHandle forward_;
    PlanHandle backward_;
};

}  // namespace detail

/// Unnormalized heat kernel (4 pi tau)^(-d/2) exp(-r^2 / (4 tau)).
inline double heat_kernel(double r2, double tau, std::size_t dim) {
    return std::pow(4.0 * std::numbers::pi * tau, -0.5 * static_cast<double>(dim)) * std::exp(-r2 / (4.0 * tau));
}

/// Circular convolution with a sampled, unit-mass Gaussian on a periodic grid.
///
/// The spectral multiplier is computed once at construction. The operator is
/// immutable and may be applied concurrently from several threads.
class KernelOperator {
public:
    /// Entries below this are reported as a definiteness violation.
    static constexpr double psd_tolerance = 1e-12;

    KernelOperator(Grid grid, double tau) : grid_(std::move(grid)), tau_(tau) {
        if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("kernel time parameter tau must be positive");
        transform_ = std::make_shared<const detail::RealTransform>(grid_);

        const std::size_t p = grid_.points();
        samples_.resize(p);
        detail::Accumulator mass;
        for (std::size_t k = 0; k < p; ++k) {
            const auto idx = grid_.unravel(k);
            double r2 = 0.0;
            for (std::size_t a = 0; a < grid_.dim(); ++a) {
                const std::size_t n = grid_.size(a);
                const double offset = static_cast<double>(std::min(idx[a], n - idx[a])) * grid_.spacing(a);
                r2 += offset * offset;
            }
            samples_[k] = heat_kernel(r2, tau_, grid_.dim());
            mass.add(samples_[k]);
        }
        raw_mass_ = mass.value();
        for (double& s : samples_) s /= raw_mass_;

        std::vector<double> scratch(samples_);
        std::vector<std::complex<double>> spectrum(transform_->half_points());
        transform_->forward(scratch, spectrum);
        half_multiplier_.resize(spectrum.size());
        for (std::size_t k = 0; k < spectrum.size(); ++k) half_multiplier_[k] = spectrum[k].real();

        // Expand the half spectrum to all p frequencies (the kernel is real and even).
        multiplier_.resize(p);
        const std::size_t last = grid_.sizes().back();
        const std::size_t half_last = last / 2 + 1;
        for (std::size_t k = 0; k < p; ++k) {
            auto idx = grid_.unravel(k);
            if (idx[grid_.dim() - 1] >= half_last) {
                for (std::size_t a = 0; a < grid_.dim(); ++a) idx[a] = (grid_.size(a) - idx[a]) % grid_.size(a);
            }
            std::size_t h = 0;
            for (std::size_t a = 0; a + 1 < grid_.dim(); ++a) h = h * grid_.size(a) + idx[a];
            h = h * half_last + idx[grid_.dim() - 1];
            multiplier_[k] = half_multiplier_[h];
        }
        min_multiplier_ = *std::min_element(multiplier_.begin(), multiplier_.end());
    }

    [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
    [[nodiscard]] double tau() const noexcept { return tau_; }

    /// Spectral symbol at every frequency, row-major like the grid.
    [[nodiscard]] std::span<const double> multiplier() const noexcept { return multiplier_; }
    /// Normalized kernel samples at every grid offset (sum to 1).
    [[nodiscard]] std::span<const double> samples() const noexcept { return samples_; }
    /// Sum of the samples before normalization.
    [[nodiscard]] double raw_mass() const noexcept { return raw_mass_; }
    [[nodiscard]] double min_multiplier() const noexcept { return min_multiplier_; }
    /// False when some multiplier is below -psd_tolerance.
    [[nodiscard]] bool definite() const noexcept { return min_multiplier_ >= -psd_tolerance; }

    /// sqrt(pi / tau), the prefactor that turns kernel overlaps into interface measure.
    [[nodiscard]] double perimeter_scale() const noexcept { return std::sqrt(std::numbers::pi / tau_); }

    void apply(std::span<const double> in, std::span<double> out) const {
        const std::size_t p = grid_.points();
        if (in.size() != p || out.size() != p) {
            throw ConfigError("convolution input has " + std::to_string(in.size()) + " values, grid has " +
                              std::to_string(p));
        }
        std::vector<double> real(in.begin(), in.end());
        std::vector<std::complex<double>> spectrum(transform_->half_points());
        transform_->forward(real, spectrum);
        const double scale = 1.0 / static_cast<double>(p);
        for (std::size_t k = 0; k < spectrum.size(); ++k) spectrum[k] *= half_multiplier_[k] * scale;
        transform_->backward(spectrum, real);
        std::copy(real.begin(), real.end(), out.begin());
    }

    [[nodiscard]] std::vector<double> apply(std::span<const double> in) const {
        std::vector<double> out(in.size());
        apply(in, out);
        return out;
    }

private:
    Grid grid_;
    double tau_ = 0.0;
    std::shared_ptr<const detail::RealTransform> transform_;
    std::vector<double> samples_;
    std::vector<double> half_multiplier_;
    std::vector<double> multiplier_;
    double raw_mass_ = 0.0;
    double min_multiplier_ = 0.0;
};

inline KernelOperator build_kernel(const Grid& grid, double tau) { return {grid, tau}; }

inline ScalarField convolve(const KernelOperator& kernel, const ScalarField& f) {
    if (!(f.grid() == kernel.grid())) throw ConfigError("field and kernel live on different grids");
    ScalarField out(f.grid());
    kernel.apply(f.values(), out.values());
    return out;
}

/// Heat-kernel estimate of sum_i lambda_i |boundary of phase i|.
///
/// Each interface between two phases is counted once from each side, so a
/// two-phase split with interface length L returns (lambda_1 + lambda_2) L.
inline double perimeter_estimate(const PhaseField& u, const KernelOperator& kernel, std::span<const double> lambdas) {
    if (lambdas.size() != u.phases()) {
        throw ConfigError("perimeter weights: " + std::to_string(lambdas.size()) + " given for " +
                          std::to_string(u.phases()) + " phases");
    }
    if (u.points() != kernel.grid().points()) throw ConfigError("indicator field does not match kernel grid");
    detail::Accumulator total;
    std::vector<double> complement(u.points());
    std::vector<double> smoothed(u.points());
    for (std::size_t i = 0; i < u.phases(); ++i) {
        if (lambdas[i] < 0.0) throw ConfigError("perimeter weights must be nonnegative");
        if (lambdas[i] == 0.0) continue;
        const auto ui = u.row(i);
        for (std::size_t j = 0; j < ui.size(); ++j) complement[j] = 1.0 - ui[j];
        kernel.apply(complement, smoothed);
        total.add(lambdas[i] * detail::dot(ui, smoothed));
    }
    return kernel.perimeter_scale() * kernel.grid().cell_volume() * total.value();
}

inline double perimeter_estimate(const IndicatorField& u, const KernelOperator& kernel,
                                 std::span<const double> lambdas) {
    return perimeter_estimate(u.dense(), kernel, lambdas);
}

/// Unit weights on every phase.
inline double perimeter_estimate(const PhaseField& u, const KernelOperator& kernel) {
    const std::vector<double> ones(u.phases(), 1.0);
    return perimeter_estimate(u, kernel, ones);
}

}  // namespace ictm
