#pragma once

#include <png.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "ictm/errors.hpp"
#include "ictm/image.hpp"
#include "ictm/indicator.hpp"

namespace ictm::io {

namespace detail {

inline std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

inline std::string lower_extension(const std::string& path) {
    const auto dot = path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return ext;
}

// Skips whitespace and comments between header tokens.
inline std::size_t pnm_token(std::istream& in, const std::string& path) {
    int c = in.peek();
    while (c != EOF && (std::isspace(c) || c == '#')) {
        if (c == '#') {
            std::string rest;
            std::getline(in, rest);
        } else {
            in.get();
        }
        c = in.peek();
    }
    std::size_t v = 0;
    if (!(in >> v)) throw IoError("'" + path + "': malformed PNM header");
    return v;
}

/// 8-bit RGB palette shared by masks and overlays.
inline std::array<std::uint8_t, 3> palette(std::size_t i) {
    static constexpr std::array<std::array<std::uint8_t, 3>, 8> colors{{{230, 25, 75},
                                                                         {60, 180, 75},
                                                                         {0, 130, 200},
                                                                         {255, 225, 25},
                                                                         {145, 30, 180},
                                                                         {245, 130, 48},
                                                                         {70, 240, 240},
                                                                         {128, 128, 128}}};
    return colors[i % colors.size()];
}

}  // namespace detail

/// Binary P5 (gray) or P6 (RGB) with maxval below 256.
inline Image read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image '" + path + "'");
    std::string magic(2, '\0');
    in.read(magic.data(), 2);
    if (magic != "P5" && magic != "P6") throw IoError("'" + path + "' is not a binary PGM/PPM");
    const std::size_t channels = magic == "P5" ? 1 : 3;
    const std::size_t width = detail::pnm_token(in, path);
    const std::size_t height = detail::pnm_token(in, path);
    const std::size_t maxval = detail::pnm_token(in, path);
    if (maxval == 0 || maxval > 255) throw IoError("'" + path + "': only 8-bit PNM is supported");
    in.get();
    std::vector<std::uint8_t> bytes(width * height * channels);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!in) throw IoError("'" + path + "': truncated pixel data");
    const std::size_t p = width * height;
    std::vector<double> values(p * channels);
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t c = 0; c < channels; ++c) {
            values[c * p + j] = static_cast<double>(bytes[j * channels + c]) / static_cast<double>(maxval);
        }
    }
    return Image(width, height, channels, std::move(values));
}

inline void write_pnm(const std::string& path, const Image& image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    const std::size_t d = image.channels(), p = image.pixels();
    out << (d == 1 ? "P5" : "P6") << '\n' << image.width() << ' ' << image.height() << "\n255\n";
    std::vector<std::uint8_t> bytes(p * d);
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t c = 0; c < d; ++c) bytes[j * d + c] = detail::to_byte(image(c, j));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + path + "'");
}

/// 8-bit gray PGM of a 0/1 indicator (255 where `label` is set).
inline void write_indicator_pgm(const std::string& path, const IndicatorField& u, std::uint32_t label,
                                std::size_t width, std::size_t height) {
    if (u.points() != width * height) throw ConfigError("indicator does not match the image size");
    std::vector<double> v(u.points());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = u.label(j) == label ? 1.0 : 0.0;
    write_pnm(path, Image(width, height, 1, std::move(v)));
}

/// Gray or RGB PNG; alpha is composited onto black and 16-bit data reduced to 8 bits.
inline Image read_png(const std::string& path) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.c_str())) {
        throw IoError("cannot read PNG '" + path + "': " + png.message);
    }
    const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
    png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const std::size_t channels = color ? 3 : 1;
    std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, bytes.data(), 0, nullptr)) {
        png_image_free(&png);
        throw IoError("cannot decode PNG '" + path + "': " + png.message);
    }
    const std::size_t w = png.width, h = png.height, p = w * h;
    std::vector<double> values(p * channels);
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t c = 0; c < channels; ++c) values[c * p + j] = bytes[j * channels + c] / 255.0;
    }
    return Image(w, h, channels, std::move(values));
}

inline void write_png(const std::string& path, const Image& image) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width());
    png.height = static_cast<png_uint_32>(image.height());
    png.format = image.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const std::size_t d = image.channels(), p = image.pixels();
    std::vector<std::uint8_t> bytes(p * d);
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t c = 0; c < d; ++c) bytes[j * d + c] = detail::to_byte(image(c, j));
    }
    if (!png_image_write_to_file(&png, path.c_str(), 0, bytes.data(), 0, nullptr)) {
        throw IoError("cannot write PNG '" + path + "': " + png.message);
    }
}

/// PNG or binary PGM/PPM, chosen by extension.
inline Image read_image(const std::string& path) {
    const auto ext = detail::lower_extension(path);
    if (ext == "png") return read_png(path);
    if (ext == "pgm" || ext == "ppm" || ext == "pnm") return read_pnm(path);
    throw IoError("unsupported image format '" + path + "' (expected .png, .pgm or .ppm)");
}

/// Indexed PNG whose pixel values are phase labels; the palette colors the phases.
inline void write_mask_png(const std::string& path, const IndicatorField& u, std::size_t width, std::size_t height) {
    if (u.points() != width * height) throw ConfigError("mask does not match the image size");
    if (u.phases() > 256) throw ConfigError("indexed PNG supports at most 256 phases");
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(width);
    png.height = static_cast<png_uint_32>(height);
    png.format = PNG_FORMAT_RGB_COLORMAP;
    png.colormap_entries = static_cast<png_uint_32>(u.phases());
    std::vector<std::uint8_t> colormap(3 * u.phases());
    for (std::size_t i = 0; i < u.phases(); ++i) {
        const auto rgb = detail::palette(i);
        std::copy(rgb.begin(), rgb.end(), colormap.begin() + static_cast<std::ptrdiff_t>(3 * i));
    }
    std::vector<std::uint8_t> indices(u.points());
    for (std::size_t j = 0; j < indices.size(); ++j) indices[j] = static_cast<std::uint8_t>(u.label(j));
    if (!png_image_write_to_file(&png, path.c_str(), 0, indices.data(), 0, colormap.data())) {
        throw IoError("cannot write PNG '" + path + "': " + png.message);
    }
}

/// Labels stored by write_mask_png, recovered from the palette indices.
inline std::vector<std::uint32_t> read_mask_png(const std::string& path, std::size_t& width, std::size_t& height) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.c_str())) {
        throw IoError("cannot read PNG '" + path + "': " + png.message);
    }
    png.format = PNG_FORMAT_RGB_COLORMAP;
    std::vector<std::uint8_t> indices(PNG_IMAGE_SIZE(png));
    std::vector<std::uint8_t> colormap(PNG_IMAGE_COLORMAP_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, indices.data(), 0, colormap.data())) {
        png_image_free(&png);
        throw IoError("cannot decode PNG '" + path + "': " + png.message);
    }
    width = png.width;
    height = png.height;
    // libpng may reorder the colormap; map entries back through the palette.
    std::vector<std::uint32_t> remap(png.colormap_entries, 0);
    for (std::size_t e = 0; e < remap.size(); ++e) {
        for (std::uint32_t i = 0; i < 256; ++i) {
            const auto rgb = detail::palette(i);
            if (rgb[0] == colormap[3 * e] && rgb[1] == colormap[3 * e + 1] && rgb[2] == colormap[3 * e + 2]) {
                remap[e] = i;
                break;
            }
        }
    }
    std::vector<std::uint32_t> labels(indices.size());
    for (std::size_t j = 0; j < labels.size(); ++j) labels[j] = remap[indices[j]];
    return labels;
}

/// The input image in RGB with phase boundaries drawn as 1-pixel outlines.
inline Image render_overlay(const Image& image, const IndicatorField& u) {
    if (u.points() != image.pixels()) throw ConfigError("mask does not match the image size");
    const std::size_t w = image.width(), h = image.height(), p = image.pixels();
    std::vector<double> rgb(3 * p);
    for (std::size_t c = 0; c < 3; ++c) {
        const std::size_t src = image.channels() == 3 ? c : 0;
        for (std::size_t j = 0; j < p; ++j) rgb[c * p + j] = image(src, j);
    }
    for (std::size_t row = 0; row < h; ++row) {
        for (std::size_t col = 0; col < w; ++col) {
            const std::size_t j = row * w + col;
            const bool edge = (col + 1 < w && u.label(j + 1) != u.label(j)) ||
                              (row + 1 < h && u.label(j + w) != u.label(j));
            if (!edge) continue;
            const auto color = detail::palette(u.label(j));
            for (std::size_t c = 0; c < 3; ++c) rgb[c * p + j] = color[c] / 255.0;
        }
    }
    return Image(w, h, 3, std::move(rgb));
}

}  // namespace ictm::io
