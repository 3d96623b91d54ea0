#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "ictm/image.hpp"
#include "ictm/indicator.hpp"

namespace ictm::synthetic {

/// Foreground mask: a disk and a rectangle, both well inside the frame.
inline std::vector<std::uint8_t> two_shape_mask(std::size_t width, std::size_t height) {
    std::vector<std::uint8_t> mask(width * height, 0);
    const double W = static_cast<double>(width), H = static_cast<double>(height);
    const double cx = 0.33 * W, cy = 0.38 * H, r = 0.2 * std::min(W, H);
    for (std::size_t row = 0; row < height; ++row) {
        for (std::size_t col = 0; col < width; ++col) {
            const double x = static_cast<double>(col), y = static_cast<double>(row);
            const bool disk = (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r;
            const bool rect = x >= 0.58 * W && x < 0.85 * W && y >= 0.55 * H && y < 0.85 * H;
            mask[row * width + col] = (disk || rect) ? 1 : 0;
        }
    }
    return mask;
}

/// Piecewise-constant image: `high` on the mask, `low` elsewhere, in every channel.
inline Image two_tone(const std::vector<std::uint8_t>& mask, std::size_t width, std::size_t height, double low = 0.2,
                      double high = 0.8, std::size_t channels = 1) {
    std::vector<double> values(width * height * channels);
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t j = 0; j < width * height; ++j) values[c * width * height + j] = mask[j] ? high : low;
    }
    return Image(width, height, channels, std::move(values));
}

/// Adds N(0, sigma^2) noise per pixel and channel, then clamps to [0, 1].
inline Image add_gaussian_noise(const Image& image, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    std::vector<double> values = image.values();
    for (double& v : values) v += noise(rng);
    return Image(image.width(), image.height(), image.channels(), std::move(values));
}

/// Smooth multiplicative gain in [lo, hi]: a horizontal ramp with a gentle vertical bend.
inline std::vector<double> gain_field(std::size_t width, std::size_t height, double lo = 0.3, double hi = 1.0) {
    std::vector<double> gain(width * height);
    for (std::size_t row = 0; row < height; ++row) {
        for (std::size_t col = 0; col < width; ++col) {
            const double s = static_cast<double>(col) / static_cast<double>(width - 1);
            const double t = static_cast<double>(row) / static_cast<double>(height - 1);
            const double shape = 0.8 * s + 0.2 * (0.5 - 0.5 * std::cos(std::numbers::pi * t));
            gain[row * width + col] = lo + (hi - lo) * shape;
        }
    }
    return gain;
}

/// gain x two-tone image.
inline Image inhomogeneous(const std::vector<std::uint8_t>& mask, std::size_t width, std::size_t height,
                           double low = 0.3, double high = 0.9) {
    const auto gain = gain_field(width, height);
    std::vector<double> values(width * height);
    for (std::size_t j = 0; j < values.size(); ++j) values[j] = gain[j] * (mask[j] ? high : low);
    return Image(width, height, 1, std::move(values));
}

/// Fraction of pixels where u agrees with the mask, maximized over the two phase labelings.
inline double two_phase_accuracy(const IndicatorField& u, const std::vector<std::uint8_t>& mask) {
    std::size_t same = 0;
    for (std::size_t j = 0; j < mask.size(); ++j) same += (u.label(j) == 1) == (mask[j] == 1);
    const double a = static_cast<double>(same) / static_cast<double>(mask.size());
    return std::max(a, 1.0 - a);
}

}  // namespace ictm::synthetic
