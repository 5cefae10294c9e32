/**
 * @file imaging.cpp
 * @brief Containers, sRGB -> CIELAB conversion and feature extraction.
 */

#include <sparsematte/error.hpp>
#include <sparsematte/imaging.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace sparsematte {

namespace {

// sRGB (D65) to XYZ.
constexpr double kRgbToXyz[3][3] = {
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
};

constexpr double kWhiteX = 0.95047;
constexpr double kWhiteY = 1.00000;
constexpr double kWhiteZ = 1.08883;

double srgb_decode(double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
    constexpr double delta = 6.0 / 29.0;
    if (t > delta * delta * delta) {
        return std::cbrt(t);
    }
    return t / (3.0 * delta * delta) + 4.0 / 29.0;
}

void require_extent(int width, int height, std::size_t actual, const char* what) {
    if (width < 1 || height < 1) {
        throw InvalidArgument(std::string(what) + ": dimensions must be at least 1x1, got " +
                              std::to_string(width) + "x" + std::to_string(height));
    }
    const auto expected = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (actual != expected) {
        throw InvalidArgument(std::string(what) + ": expected " + std::to_string(expected) +
                              " values, got " + std::to_string(actual));
    }
}

}  // namespace

// =============================================================================
// Containers
// =============================================================================

RasterImage::RasterImage(int width, int height, std::vector<Rgb> rgb)
    : extent_{width, height}, rgb_(std::move(rgb)) {
    require_extent(width, height, rgb_.size(), "RasterImage");
    for (const auto& c : rgb_) {
        for (int k = 0; k < 3; ++k) {
            if (!(c[k] >= 0.0 && c[k] <= 1.0)) {
                throw InvalidArgument("RasterImage: channel value outside [0,1]");
            }
        }
    }
}

RasterImage::RasterImage(int width, int height, const Rgb& fill)
    : RasterImage(width, height,
                  std::vector<Rgb>(static_cast<std::size_t>(std::max(width, 0)) *
                                       static_cast<std::size_t>(std::max(height, 0)),
                                   fill)) {}

Trimap::Trimap(int width, int height, std::vector<Label> labels)
    : extent_{width, height}, labels_(std::move(labels)) {
    require_extent(width, height, labels_.size(), "Trimap");
}

std::size_t Trimap::count(Label label) const {
    return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), label));
}

void Trimap::require_both_known_labels() const {
    if (count(Label::Foreground) == 0) {
        throw InvalidArgument("trimap has no Foreground pixels");
    }
    if (count(Label::Background) == 0) {
        throw InvalidArgument("trimap has no Background pixels");
    }
}

Matte::Matte(int width, int height, double fill)
    : Matte(width, height,
            std::vector<double>(static_cast<std::size_t>(std::max(width, 0)) *
                                    static_cast<std::size_t>(std::max(height, 0)),
                                fill)) {}

Matte::Matte(int width, int height, std::vector<double> alpha)
    : extent_{width, height}, alpha_(std::move(alpha)) {
    require_extent(width, height, alpha_.size(), "Matte");
}

PixelMask::PixelMask(int width, int height, bool fill)
    : extent_{width, height},
      bits_(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)),
            fill ? 1 : 0) {
    require_extent(width, height, bits_.size(), "PixelMask");
}

std::size_t PixelMask::count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

PixelMask PixelMask::from_trimap(const Trimap& trimap, Label label) {
    PixelMask mask(trimap.width(), trimap.height());
    for (std::size_t i = 0; i < trimap.size(); ++i) {
        if (trimap[i] == label) {
            mask.set(i);
        }
    }
    return mask;
}

// =============================================================================
// Color conversion
// =============================================================================

Rgb srgb_to_lab(const Rgb& rgb) {
    const double r = srgb_decode(rgb[0]);
    const double g = srgb_decode(rgb[1]);
    const double b = srgb_decode(rgb[2]);

    const double x = kRgbToXyz[0][0] * r + kRgbToXyz[0][1] * g + kRgbToXyz[0][2] * b;
    const double y = kRgbToXyz[1][0] * r + kRgbToXyz[1][1] * g + kRgbToXyz[1][2] * b;
    const double z = kRgbToXyz[2][0] * r + kRgbToXyz[2][1] * g + kRgbToXyz[2][2] * b;

    const double fx = lab_f(x / kWhiteX);
    const double fy = lab_f(y / kWhiteY);
    const double fz = lab_f(z / kWhiteZ);

    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

Rgb rgb_to_lab(const Rgb& rgb) {
    const Rgb lab = srgb_to_lab(rgb);
    return {lab[0] / 100.0, (lab[1] + 128.0) / 255.0, (lab[2] + 128.0) / 255.0};
}

Feature6 feature_of(const Rgb& rgb) {
    Feature6 v = Feature6::Zero();
    if (rgb.isZero(0.0)) {
        return v;
    }
    v.head<3>() = rgb;
    v.tail<3>() = rgb_to_lab(rgb);
    return v / v.norm();
}

Feature6 feature_at(const RasterImage& image, Pixel p) {
    if (!image.extent().contains(p)) {
        throw InvalidArgument("feature_at: pixel (" + std::to_string(p.x) + "," +
                              std::to_string(p.y) + ") out of bounds");
    }
    return feature_of(image.at(p));
}

std::vector<Feature6> feature_image(const RasterImage& image) {
    std::vector<Feature6> out(image.size());
    for (std::size_t i = 0; i < image.size(); ++i) {
        out[i] = feature_of(image[i]);
    }
    return out;
}

}  // namespace sparsematte
