/**
 * @file imaging.hpp
 * @brief Raster containers, trimap/matte I/O and the 6-D color feature.
 */
#pragma once

#include <Eigen/Core>

#include <compare>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace sparsematte {

using Rgb = Eigen::Vector3d;
using Feature6 = Eigen::Matrix<double, 6, 1>;

struct Pixel {
    int x = 0;
    int y = 0;
    friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

enum class Label : std::uint8_t { Background = 0, Unknown = 1, Foreground = 2 };

/// Width/height pair shared by every per-pixel container.
struct Extent {
    int width = 0;
    int height = 0;

    [[nodiscard]] std::size_t size() const {
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }
    [[nodiscard]] bool contains(Pixel p) const {
        return p.x >= 0 && p.y >= 0 && p.x < width && p.y < height;
    }
    [[nodiscard]] std::size_t index(Pixel p) const {
        return static_cast<std::size_t>(p.y) * static_cast<std::size_t>(width) +
               static_cast<std::size_t>(p.x);
    }
    [[nodiscard]] Pixel pixel(std::size_t idx) const {
        return {static_cast<int>(idx % static_cast<std::size_t>(width)),
                static_cast<int>(idx / static_cast<std::size_t>(width))};
    }
    friend bool operator==(const Extent&, const Extent&) = default;
};

/// H x W RGB image with channels normalized to [0,1] (sRGB-encoded values).
class RasterImage {
public:
    /// Throws InvalidArgument on zero dimensions, size mismatch or channels outside [0,1].
    RasterImage(int width, int height, std::vector<Rgb> rgb);
    /// Uniform image.
    RasterImage(int width, int height, const Rgb& fill);

    [[nodiscard]] int width() const { return extent_.width; }
    [[nodiscard]] int height() const { return extent_.height; }
    [[nodiscard]] const Extent& extent() const { return extent_; }
    [[nodiscard]] std::size_t size() const { return rgb_.size(); }

    [[nodiscard]] const Rgb& at(Pixel p) const { return rgb_[extent_.index(p)]; }
    [[nodiscard]] const Rgb& operator[](std::size_t idx) const { return rgb_[idx]; }
    [[nodiscard]] const std::vector<Rgb>& data() const { return rgb_; }

private:
    Extent extent_;
    std::vector<Rgb> rgb_;
};

class Trimap {
public:
    Trimap(int width, int height, std::vector<Label> labels);

    [[nodiscard]] int width() const { return extent_.width; }
    [[nodiscard]] int height() const { return extent_.height; }
    [[nodiscard]] const Extent& extent() const { return extent_; }
    [[nodiscard]] std::size_t size() const { return labels_.size(); }

    [[nodiscard]] Label at(Pixel p) const { return labels_[extent_.index(p)]; }
    [[nodiscard]] Label operator[](std::size_t idx) const { return labels_[idx]; }
    [[nodiscard]] const std::vector<Label>& labels() const { return labels_; }

    [[nodiscard]] std::size_t count(Label label) const;
    [[nodiscard]] bool has_both_known_labels() const {
        return count(Label::Foreground) > 0 && count(Label::Background) > 0;
    }
    /// Throws InvalidArgument unless at least one Foreground and one Background pixel exist.
    void require_both_known_labels() const;

    friend bool operator==(const Trimap&, const Trimap&) = default;

private:
    Extent extent_;
    std::vector<Label> labels_;
};

/// Per-pixel opacity in [0,1].
class Matte {
public:
    Matte(int width, int height, double fill = 0.0);
    Matte(int width, int height, std::vector<double> alpha);

    [[nodiscard]] int width() const { return extent_.width; }
    [[nodiscard]] int height() const { return extent_.height; }
    [[nodiscard]] const Extent& extent() const { return extent_; }
    [[nodiscard]] std::size_t size() const { return alpha_.size(); }

    [[nodiscard]] double at(Pixel p) const { return alpha_[extent_.index(p)]; }
    double& at(Pixel p) { return alpha_[extent_.index(p)]; }
    [[nodiscard]] double operator[](std::size_t idx) const { return alpha_[idx]; }
    double& operator[](std::size_t idx) { return alpha_[idx]; }
    [[nodiscard]] const std::vector<double>& data() const { return alpha_; }

private:
    Extent extent_;
    std::vector<double> alpha_;
};

/// Binary per-pixel mask.
class PixelMask {
public:
    PixelMask(int width, int height, bool fill = false);

    [[nodiscard]] int width() const { return extent_.width; }
    [[nodiscard]] int height() const { return extent_.height; }
    [[nodiscard]] const Extent& extent() const { return extent_; }

    [[nodiscard]] bool at(Pixel p) const { return bits_[extent_.index(p)] != 0; }
    void set(Pixel p, bool v = true) { bits_[extent_.index(p)] = v ? 1 : 0; }
    [[nodiscard]] bool operator[](std::size_t idx) const { return bits_[idx] != 0; }
    void set(std::size_t idx, bool v = true) { bits_[idx] = v ? 1 : 0; }

    [[nodiscard]] std::size_t count() const;
    [[nodiscard]] bool empty() const { return count() == 0; }

    static PixelMask from_trimap(const Trimap& trimap, Label label);

private:
    Extent extent_;
    std::vector<std::uint8_t> bits_;
};

// -----------------------------------------------------------------------------
// Color and features
// -----------------------------------------------------------------------------

/// CIELAB (D65, 2 deg observer) of an sRGB-encoded color, in natural units:
/// L in [0,100], a and b roughly in [-128,127].
Rgb srgb_to_lab(const Rgb& rgb);

/// CIELAB rescaled to [0,1]: (L/100, (a+128)/255, (b+128)/255).
Rgb rgb_to_lab(const Rgb& rgb);

/// [R G B L a b] of a color, unit-normalized; black maps to the zero vector.
Feature6 feature_of(const Rgb& rgb);

/// feature_of() at an image pixel. Throws InvalidArgument when p is out of bounds.
Feature6 feature_at(const RasterImage& image, Pixel p);

/// feature_of() for every pixel, row-major.
std::vector<Feature6> feature_image(const RasterImage& image);

// -----------------------------------------------------------------------------
// File I/O (PNG 8/16-bit, binary PPM/PGM)
// -----------------------------------------------------------------------------

/// Decodes a PNG or binary PPM/PGM; gray inputs are replicated to RGB.
RasterImage load_image(const std::filesystem::path& path);

/// Gray < 85 -> Background, gray > 170 -> Foreground, else Unknown (8-bit scale).
/// Throws InvalidArgument on a dimension mismatch or a missing known label.
Trimap load_trimap(const std::filesystem::path& path, const RasterImage& image);

/// Same thresholds applied to normalized gray values, without the label check.
Trimap trimap_from_gray(int width, int height, const std::vector<double>& gray);

/// Writes a grayscale PNG, round(alpha * (2^depth - 1)). depth is 8 or 16.
void save_matte(const Matte& matte, const std::filesystem::path& path, int depth = 8);

/// Reads a grayscale (or RGB, first channel) image as a matte in [0,1].
Matte load_matte(const std::filesystem::path& path);

/// Writes an RGB PNG.
void save_image(const RasterImage& image, const std::filesystem::path& path, int depth = 8);

/// Writes a trimap as a 0/128/255 grayscale PNG.
void save_trimap(const Trimap& trimap, const std::filesystem::path& path);

}  // namespace sparsematte
