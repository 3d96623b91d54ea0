#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ictm/errors.hpp"
#include "ictm/grid.hpp"

namespace ictm {

/// Planar image with values in [0, 1]; pixel j = row * width + col.
class Image {
public:
    Image() = default;
    Image(std::size_t width, std::size_t height, std::size_t channels, double fill = 0.0)
        : width_(width), height_(height), channels_(channels), values_(width * height * channels, clamp(fill)) {
        validate();
    }
    Image(std::size_t width, std::size_t height, std::size_t channels, std::vector<double> values)
        : width_(width), height_(height), channels_(channels), values_(std::move(values)) {
        validate();
        if (values_.size() != width_ * height_ * channels_) throw ConfigError("image data has the wrong length");
        for (double& v : values_) {
            if (!std::isfinite(v)) throw ConfigError("image has a non-finite value");
            v = clamp(v);
        }
    }

    [[nodiscard]] std::size_t width() const noexcept { return width_; }
    [[nodiscard]] std::size_t height() const noexcept { return height_; }
    [[nodiscard]] std::size_t channels() const noexcept { return channels_; }
    [[nodiscard]] std::size_t pixels() const noexcept { return width_ * height_; }

    [[nodiscard]] std::span<const double> channel(std::size_t c) const {
        return {values_.data() + c * pixels(), pixels()};
    }
    [[nodiscard]] double operator()(std::size_t c, std::size_t j) const noexcept { return values_[c * pixels() + j]; }
    [[nodiscard]] double at(std::size_t c, std::size_t row, std::size_t col) const noexcept {
        return values_[c * pixels() + row * width_ + col];
    }
    void set(std::size_t c, std::size_t j, double v) { values_[c * pixels() + j] = clamp(v); }

    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }

    /// Unit-spaced grid of height x width points.
    [[nodiscard]] Grid grid() const {
        return build_grid(2, {height_, width_}, {static_cast<double>(height_), static_cast<double>(width_)});
    }

private:
    static double clamp(double v) { return std::clamp(v, 0.0, 1.0); }

    void validate() const {
        if (channels_ != 1 && channels_ != 3) throw ConfigError("image must have 1 or 3 channels");
        if (width_ < 4 || height_ < 4) throw ConfigError("image must be at least 4 x 4 pixels");
    }

    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::size_t channels_ = 1;
    std::vector<double> values_;
};

}  // namespace ictm
