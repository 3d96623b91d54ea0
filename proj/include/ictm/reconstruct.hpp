#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ictm/detail/sum.hpp"
#include "ictm/errors.hpp"
#include "ictm/grid.hpp"
#include "ictm/indicator.hpp"
#include "ictm/kernel.hpp"
#include "ictm/problem.hpp"
#include "ictm/solver.hpp"

namespace ictm {

/// Points in physical coordinates; unused trailing coordinates are zero.
struct PointCloud {
    std::size_t dim = 2;
    std::vector<std::array<double, 3>> points;

    [[nodiscard]] std::size_t size() const noexcept { return points.size(); }
};

inline void validate_cloud(const PointCloud& cloud) {
    if (cloud.dim != 2 && cloud.dim != 3) throw ConfigError("point cloud dimension must be 2 or 3");
    if (cloud.points.empty()) throw ConfigError("point cloud is empty");
    for (const auto& q : cloud.points) {
        for (std::size_t a = 0; a < cloud.dim; ++a) {
            if (!std::isfinite(q[a])) throw ConfigError("point cloud has a non-finite coordinate");
        }
    }
}

/// N samples of r = 1 + amplitude * sin(folds * theta), theta_i = 2 pi i / N.
inline PointCloud generate_flower(std::size_t count = 200, int folds = 5, double amplitude = 0.5) {
    if (count < 3) throw ConfigError("flower cloud needs at least 3 points");
    PointCloud cloud;
    cloud.points.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(count);
        const double r = 1.0 + amplitude * std::sin(folds * t);
        cloud.points.push_back({r * std::cos(t), r * std::sin(t), 0.0});
    }
    return cloud;
}

/// Affine map of the cloud's bounding box into the central `fraction` of the grid extent.
///
/// One uniform scale is used for all axes so shapes are not distorted.
inline PointCloud normalize_cloud(const PointCloud& cloud, const Grid& grid, double fraction = 0.7) {
    validate_cloud(cloud);
    if (cloud.dim != grid.dim()) throw ConfigError("point cloud and grid dimensions differ");
    std::array<double, 3> lo{}, hi{};
    for (std::size_t a = 0; a < cloud.dim; ++a) {
        lo[a] = std::numeric_limits<double>::infinity();
        hi[a] = -std::numeric_limits<double>::infinity();
        for (const auto& q : cloud.points) {
            lo[a] = std::min(lo[a], q[a]);
            hi[a] = std::max(hi[a], q[a]);
        }
    }
    double scale = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < cloud.dim; ++a) {
        if (hi[a] > lo[a]) scale = std::min(scale, fraction * grid.extent()[a] / (hi[a] - lo[a]));
    }
    if (!std::isfinite(scale)) scale = 1.0;

    PointCloud out{cloud.dim, {}};
    out.points.reserve(cloud.size());
    for (const auto& q : cloud.points) {
        std::array<double, 3> x{0.0, 0.0, 0.0};
        for (std::size_t a = 0; a < cloud.dim; ++a) {
            x[a] = 0.5 * grid.extent()[a] + scale * (q[a] - 0.5 * (lo[a] + hi[a]));
        }
        out.points.push_back(x);
    }
    return out;
}

namespace detail {

inline double squared_distance(const std::array<double, 3>& x, const std::array<double, 3>& q, std::size_t dim) {
    double r2 = 0.0;
    for (std::size_t a = 0; a < dim; ++a) {
        const double d = x[a] - q[a];
        r2 += d * d;
    }
    return r2;
}

inline double apply_exponent(double r2, double s) {
    const double r = std::sqrt(r2);
    return s == 1.0 ? r : std::pow(r, s);
}

// Uniform bins over the cloud's bounding box, about one point per bin.
class PointBins {
public:
    PointBins(const PointCloud& cloud) : cloud_(cloud) {
        const std::size_t dim = cloud.dim;
        for (std::size_t a = 0; a < 3; ++a) {
            lo_[a] = 0.0;
            width_[a] = 1.0;
            count_[a] = 1;
        }
        double volume = 1.0;
        for (std::size_t a = 0; a < dim; ++a) {
            double lo = cloud.points.front()[a], hi = lo;
            for (const auto& q : cloud.points) {
                lo = std::min(lo, q[a]);
                hi = std::max(hi, q[a]);
            }
            lo_[a] = lo;
            width_[a] = std::max(hi - lo, 1e-12);
            volume *= width_[a];
        }
        const double cell = std::pow(volume / static_cast<double>(cloud.size()), 1.0 / static_cast<double>(dim));
        for (std::size_t a = 0; a < dim; ++a) {
            count_[a] = std::clamp<std::size_t>(static_cast<std::size_t>(width_[a] / std::max(cell, 1e-12)), 1, 1024);
            width_[a] /= static_cast<double>(count_[a]);
        }
        bins_.resize(count_[0] * count_[1] * count_[2]);
        for (std::size_t k = 0; k < cloud.size(); ++k) bins_[flat(bin_of(cloud.points[k]))].push_back(k);
    }

    // Exact minimum squared distance from x to the cloud.
    [[nodiscard]] double nearest_squared(const std::array<double, 3>& x) const {
        const std::size_t dim = cloud_.dim;
        const auto center = bin_of(x);
        double best = std::numeric_limits<double>::infinity();
        const std::size_t max_ring = std::max({count_[0], count_[1], count_[2]});
        for (std::size_t ring = 0; ring <= max_ring; ++ring) {
            visit_ring(center, ring, [&](std::size_t b) {
                for (std::size_t k : bins_[b]) best = std::min(best, squared_distance(x, cloud_.points[k], dim));
            });
            // Every point outside the visited block is at least this far away.
            double reach = std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < dim; ++a) {
                if (center[a] >= ring + 1) {
                    const double lo = lo_[a] + static_cast<double>(center[a] - ring) * width_[a];
                    reach = std::min(reach, std::max(0.0, x[a] - lo - 1e-9 * width_[a]));
                }
                if (center[a] + ring + 1 < count_[a]) {
                    const double hi = lo_[a] + static_cast<double>(center[a] + ring + 1) * width_[a];
                    reach = std::min(reach, std::max(0.0, hi - x[a] - 1e-9 * width_[a]));
                }
            }
            if (reach * reach >= best) break;
        }
        return best;
    }

private:
    [[nodiscard]] std::array<std::size_t, 3> bin_of(const std::array<double, 3>& x) const {
        std::array<std::size_t, 3> b{0, 0, 0};
        for (std::size_t a = 0; a < cloud_.dim; ++a) {
            const double t = std::floor((x[a] - lo_[a]) / width_[a]);
            b[a] = static_cast<std::size_t>(std::clamp(t, 0.0, static_cast<double>(count_[a] - 1)));
        }
        return b;
    }

    [[nodiscard]] std::size_t flat(const std::array<std::size_t, 3>& b) const {
        return (b[0] * count_[1] + b[1]) * count_[2] + b[2];
    }

    template <class Visit>
    void visit_ring(const std::array<std::size_t, 3>& c, std::size_t ring, Visit&& visit) const {
        const auto r = static_cast<std::ptrdiff_t>(ring);
        std::array<std::ptrdiff_t, 3> lo{}, hi{};
        for (std::size_t a = 0; a < 3; ++a) {
            lo[a] = std::max<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(c[a]) - r, 0);
            hi[a] = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(c[a]) + r,
                                             static_cast<std::ptrdiff_t>(count_[a]) - 1);
        }
        for (std::ptrdiff_t i = lo[0]; i <= hi[0]; ++i) {
            for (std::ptrdiff_t j = lo[1]; j <= hi[1]; ++j) {
                for (std::ptrdiff_t k = lo[2]; k <= hi[2]; ++k) {
                    const std::ptrdiff_t cheb = std::max({std::abs(i - static_cast<std::ptrdiff_t>(c[0])),
                                                          std::abs(j - static_cast<std::ptrdiff_t>(c[1])),
                                                          std::abs(k - static_cast<std::ptrdiff_t>(c[2]))});
                    if (cheb != r) continue;
                    visit(flat({static_cast<std::size_t>(i), static_cast<std::size_t>(j), static_cast<std::size_t>(k)}));
                }
            }
        }
    }

    const PointCloud& cloud_;
    std::array<double, 3> lo_{};
    std::array<double, 3> width_{};
    std::array<std::size_t, 3> count_{};
    std::vector<std::vector<std::size_t>> bins_;
};

}  // namespace detail

/// (distance to the nearest cloud point)^s at every grid point, by binned search.
inline ScalarField distance_field(const PointCloud& cloud, const Grid& grid, double s = 1.0) {
    validate_cloud(cloud);
    if (cloud.dim != grid.dim()) throw ConfigError("point cloud and grid dimensions differ");
    if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("distance exponent must be positive");
    const detail::PointBins bins(cloud);
    ScalarField d(grid);
    for (std::size_t k = 0; k < grid.points(); ++k) {
        d[k] = detail::apply_exponent(bins.nearest_squared(grid.coordinate(k)), s);
    }
    return d;
}

/// O(p N) reference for distance_field.
inline ScalarField distance_field_brute_force(const PointCloud& cloud, const Grid& grid, double s = 1.0) {
    validate_cloud(cloud);
    if (cloud.dim != grid.dim()) throw ConfigError("point cloud and grid dimensions differ");
    if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("distance exponent must be positive");
    ScalarField d(grid);
    for (std::size_t k = 0; k < grid.points(); ++k) {
        const auto x = grid.coordinate(k);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : cloud.points) best = std::min(best, detail::squared_distance(x, q, cloud.dim));
        d[k] = detail::apply_exponent(best, s);
    }
    return d;
}

namespace detail {

inline void require_same_grid(const ScalarField& d, const KernelOperator& kernel, std::size_t points) {
    if (!(d.grid() == kernel.grid())) throw ConfigError("distance field and kernel live on different grids");
    if (points != d.size()) throw ConfigError("indicator does not match the distance field grid");
}

}  // namespace detail

/// sqrt(pi/tau) * <d (1 - u), K (d u)> * cell volume, for a relaxed inside-indicator u.
inline double isc_energy(std::span<const double> u, const ScalarField& d, const KernelOperator& kernel) {
    detail::require_same_grid(d, kernel, u.size());
    const std::size_t p = u.size();
    std::vector<double> inside(p), outside(p);
    for (std::size_t j = 0; j < p; ++j) {
        inside[j] = d[j] * u[j];
        outside[j] = d[j] * (1.0 - u[j]);
    }
    const auto smoothed = kernel.apply(inside);
    return kernel.perimeter_scale() * d.grid().cell_volume() * detail::dot(outside, smoothed);
}

/// Labels are the inside indicator: phase 1 inside, phase 0 outside.
inline double isc_energy(const IndicatorField& u, const ScalarField& d, const KernelOperator& kernel) {
    return isc_energy(u.row(1), d, kernel);
}

enum class IscGradient {
    surrogate,  ///< sqrt(pi/tau) K(d (1 - 2u))
    exact,      ///< cell volume * d * surrogate, the derivative of isc_energy
};

inline ScalarField isc_gradient(std::span<const double> u, const ScalarField& d, const KernelOperator& kernel,
                                IscGradient kind = IscGradient::surrogate) {
    detail::require_same_grid(d, kernel, u.size());
    ScalarField w(d.grid());
    for (std::size_t j = 0; j < u.size(); ++j) w[j] = d[j] * (1.0 - 2.0 * u[j]);
    kernel.apply(w.values(), w.values());
    const double c = kernel.perimeter_scale();
    const double h = d.grid().cell_volume();
    for (std::size_t j = 0; j < u.size(); ++j) {
        w[j] *= kind == IscGradient::exact ? c * h * d[j] : c;
    }
    return w;
}

inline ScalarField isc_gradient(const IndicatorField& u, const ScalarField& d, const KernelOperator& kernel,
                                IscGradient kind = IscGradient::surrogate) {
    return isc_gradient(u.row(1), d, kernel, kind);
}

/// Inside where K(d (1 - 2u)) < 0, outside otherwise.
inline IndicatorField isc_threshold_step(const IndicatorField& u, const ScalarField& d, const KernelOperator& kernel) {
    const ScalarField v = isc_gradient(u, d, kernel);
    IndicatorField next(2, u.points(), 0);
    for (std::size_t j = 0; j < u.points(); ++j) {
        if (v[j] < 0.0) next.set_label(j, 1);
    }
    return next;
}

/// Rounds u - alpha * gradient to {0, 1}; a value of exactly 1/2 rounds to 0.
inline IndicatorField isc_pg_step(const IndicatorField& u, const ScalarField& d, const KernelOperator& kernel,
                                  double alpha_u) {
    if (!(alpha_u > 0.0)) throw ConfigError("alpha_u must be positive");
    const ScalarField g = isc_gradient(u, d, kernel);
    IndicatorField next(2, u.points(), 0);
    for (std::size_t j = 0; j < u.points(); ++j) {
        if (static_cast<double>(u.label(j)) - alpha_u * g[j] > 0.5) next.set_label(j, 1);
    }
    return next;
}

/// Centered disk (ball) of radius fraction * (smallest half extent).
inline IndicatorField init_disk(const Grid& grid, double fraction = 0.8) {
    double radius = std::numeric_limits<double>::infinity();
    for (double e : grid.extent()) radius = std::min(radius, 0.5 * e);
    radius *= fraction;
    IndicatorField u(2, grid.points(), 0);
    for (std::size_t k = 0; k < grid.points(); ++k) {
        const auto x = grid.coordinate(k);
        double r2 = 0.0;
        for (std::size_t a = 0; a < grid.dim(); ++a) {
            const double t = x[a] - 0.5 * grid.extent()[a];
            r2 += t * t;
        }
        if (r2 <= radius * radius) u.set_label(k, 1);
    }
    return u;
}

/// The reconstruction energy as a two-phase problem with no parameters.
///
/// Row 0 is outside and row 1 inside. gradient_u returns rows whose
/// difference is the selected ISC gradient, so thresholding agrees with
/// isc_threshold_step.
class IscProblem {
public:
    IscProblem(ScalarField distance, KernelOperator kernel, IscGradient kind = IscGradient::exact)
        : d_(std::move(distance)), kernel_(std::move(kernel)), kind_(kind) {
        detail::require_same_grid(d_, kernel_, d_.size());
    }

    [[nodiscard]] std::size_t phases() const noexcept { return 2; }
    [[nodiscard]] std::size_t points() const noexcept { return d_.size(); }
    [[nodiscard]] ThetaMode theta_mode() const noexcept { return ThetaMode::none; }
    [[nodiscard]] const ScalarField& distance() const noexcept { return d_; }
    [[nodiscard]] const KernelOperator& kernel() const noexcept { return kernel_; }

    [[nodiscard]] double energy(const PhaseField& u, const ParameterState&) const {
        check(u);
        const std::size_t p = points();
        std::vector<double> inside(p), outside(p);
        for (std::size_t j = 0; j < p; ++j) {
            inside[j] = d_[j] * u(1, j);
            outside[j] = d_[j] * u(0, j);
        }
        return kernel_.perimeter_scale() * d_.grid().cell_volume() * detail::dot(outside, kernel_.apply(inside));
    }

    [[nodiscard]] PhaseField gradient_u(const PhaseField& u, const ParameterState&) const {
        check(u);
        const std::size_t p = points();
        const double c = kernel_.perimeter_scale() * (kind_ == IscGradient::exact ? d_.grid().cell_volume() : 1.0);
        PhaseField g(2, p);
        for (std::size_t i = 0; i < 2; ++i) {
            std::vector<double> other(p);
            for (std::size_t j = 0; j < p; ++j) other[j] = d_[j] * u(1 - i, j);
            const auto smoothed = kernel_.apply(other);
            for (std::size_t j = 0; j < p; ++j) {
                g(i, j) = c * smoothed[j] * (kind_ == IscGradient::exact ? d_[j] : 1.0);
            }
        }
        return g;
    }

private:
    void check(const PhaseField& u) const {
        if (u.phases() != 2 || u.points() != points()) throw ConfigError("ISC assignment must be 2 x grid points");
    }

    ScalarField d_;
    KernelOperator kernel_;
    IscGradient kind_;
};

struct IscConfig {
    /// nullopt: thresholding.
    std::optional<double> alpha_u;
    int max_iter = 100;
    double energy_slack = 1e-10;
};

/// Iterates the ISC step until u repeats; one trace record per step, record 0 the initial state.
inline SolveResult<IndicatorField> run_isc(const ScalarField& d, const KernelOperator& kernel, IndicatorField u0,
                                           const IscConfig& config) {
    if (u0.phases() != 2 || u0.points() != d.size()) throw ConfigError("initial indicator does not match the grid");
    if (config.max_iter < 1) throw ConfigError("max_iter must be positive");
    if (config.alpha_u && !(*config.alpha_u > 0.0)) throw ConfigError("alpha_u must be positive");

    SolveResult<IndicatorField> result{std::move(u0), {}, {}, false, 0};
    double phi = isc_energy(result.u, d, kernel);
    result.trace.records.push_back({0, phi, phi, 0, 0.0, 0, 0});
    for (int k = 1; k <= config.max_iter; ++k) {
        IndicatorField next = config.alpha_u ? isc_pg_step(result.u, d, kernel, *config.alpha_u)
                                             : isc_threshold_step(result.u, d, kernel);
        const double e = isc_energy(next, d, kernel);
        if (e > phi + config.energy_slack) {
            throw ConsistencyError("ISC step increased the energy from " + std::to_string(phi) + " to " +
                                   std::to_string(e));
        }
        TraceRecord record;
        record.iter = k;
        record.phi = e;
        record.phi_half = e;
        record.u_changes = result.u.changed_entries(next);
        record.inner_steps = 1;
        result.trace.records.push_back(record);
        result.iterations = k;
        phi = e;
        const bool fixed = next == result.u;
        result.u = std::move(next);
        if (fixed) {
            result.converged = true;
            break;
        }
    }
    return result;
}

}  // namespace ictm
