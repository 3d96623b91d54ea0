#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ictm/errors.hpp"

namespace ictm {

/// Periodic uniform grid in 2 or 3 dimensions.
///
/// Points are stored in row-major axis order (axis 0 varies slowest), and the
/// physical coordinate of index k along axis a is k * spacing(a).
class Grid {
public:
    Grid() = default;

    Grid(std::vector<std::size_t> sizes, std::vector<double> extent)
        : sizes_(std::move(sizes)), extent_(std::move(extent)) {
        if (sizes_.size() != 2 && sizes_.size() != 3) {
            throw ConfigError("grid dimension must be 2 or 3, got " + std::to_string(sizes_.size()));
        }
        if (extent_.size() != sizes_.size()) {
            throw ConfigError("grid extent has " + std::to_string(extent_.size()) + " entries for a " +
                              std::to_string(sizes_.size()) + "-d grid");
        }
        for (std::size_t a = 0; a < sizes_.size(); ++a) {
            if (sizes_[a] < 4) throw ConfigError("grid sizes must be >= 4");
            if (!(extent_[a] > 0.0) || !std::isfinite(extent_[a])) {
                throw ConfigError("grid extents must be positive and finite");
            }
            spacing_.push_back(extent_[a] / static_cast<double>(sizes_[a]));
        }
        points_ = std::accumulate(sizes_.begin(), sizes_.end(), std::size_t{1}, std::multiplies<>());
    }

    [[nodiscard]] std::size_t dim() const noexcept { return sizes_.size(); }
    [[nodiscard]] std::size_t points() const noexcept { return points_; }
    [[nodiscard]] const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
    [[nodiscard]] const std::vector<double>& extent() const noexcept { return extent_; }
    [[nodiscard]] const std::vector<double>& spacing() const noexcept { return spacing_; }
    [[nodiscard]] std::size_t size(std::size_t axis) const { return sizes_.at(axis); }
    [[nodiscard]] double spacing(std::size_t axis) const { return spacing_.at(axis); }

    [[nodiscard]] double cell_volume() const noexcept {
        return std::accumulate(spacing_.begin(), spacing_.end(), 1.0, std::multiplies<>());
    }

    /// Multi-index of a flat point index.
    [[nodiscard]] std::array<std::size_t, 3> unravel(std::size_t flat) const noexcept {
        std::array<std::size_t, 3> idx{0, 0, 0};
        for (std::size_t a = dim(); a-- > 0;) {
            idx[a] = flat % sizes_[a];
            flat /= sizes_[a];
        }
        return idx;
    }

    [[nodiscard]] std::size_t ravel(const std::array<std::size_t, 3>& idx) const noexcept {
        std::size_t flat = 0;
        for (std::size_t a = 0; a < dim(); ++a) flat = flat * sizes_[a] + idx[a];
        return flat;
    }

    /// Physical coordinates of a flat point index.
    [[nodiscard]] std::array<double, 3> coordinate(std::size_t flat) const noexcept {
        const auto idx = unravel(flat);
        std::array<double, 3> x{0.0, 0.0, 0.0};
        for (std::size_t a = 0; a < dim(); ++a) x[a] = static_cast<double>(idx[a]) * spacing_[a];
        return x;
    }

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.sizes_ == b.sizes_ && a.extent_ == b.extent_;
    }

private:
    std::vector<std::size_t> sizes_;
    std::vector<double> extent_;
    std::vector<double> spacing_;
    std::size_t points_ = 0;
};

/// Validating factory; throws ConfigError on any mismatch.
inline Grid build_grid(std::size_t dim, std::vector<std::size_t> sizes, std::vector<double> extent) {
    if (dim != 2 && dim != 3) throw ConfigError("grid dimension must be 2 or 3");
    if (sizes.size() != dim) {
        throw ConfigError("expected " + std::to_string(dim) + " sizes, got " + std::to_string(sizes.size()));
    }
    return Grid(std::move(sizes), std::move(extent));
}

/// Real values on every point of a grid.
class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(Grid grid, double fill = 0.0) : grid_(std::move(grid)), values_(grid_.points(), fill) {}
    ScalarField(Grid grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
        if (values_.size() != grid_.points()) {
            throw ConfigError("field has " + std::to_string(values_.size()) + " values for a grid of " +
                              std::to_string(grid_.points()) + " points");
        }
    }

    [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::span<double> values() noexcept { return values_; }
    [[nodiscard]] std::vector<double>& data() noexcept { return values_; }
    [[nodiscard]] const std::vector<double>& data() const noexcept { return values_; }

    double& operator[](std::size_t i) noexcept { return values_[i]; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

    [[nodiscard]] bool finite() const noexcept {
        for (double v : values_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

private:
    Grid grid_;
    std::vector<double> values_;
};

}  // namespace ictm
