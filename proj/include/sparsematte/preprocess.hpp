/**
 * @file preprocess.hpp
 * @brief Known-region expansion, boundary band, masked SLIC and the universal sample set.
 */
#pragma once

#include <sparsematte/imaging.hpp>

#include <Eigen/Core>

#include <limits>
#include <vector>

namespace sparsematte {

/// Superpixel-mean color sample harvested from the known regions.
struct Sample {
    Label label = Label::Foreground;
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();  // (x, y) in pixels
    Feature6 feature = Feature6::Zero();                 // unit length or zero
    Rgb mean_rgb = Rgb::Zero();
    int frame = 0;
};

/// The universal set: every F and B sample available for dictionary construction.
class SampleBank {
public:
    SampleBank() = default;
    explicit SampleBank(std::vector<Sample> samples) : samples_(std::move(samples)) {}

    [[nodiscard]] const std::vector<Sample>& samples() const { return samples_; }
    [[nodiscard]] const Sample& operator[](std::size_t i) const { return samples_[i]; }
    [[nodiscard]] std::size_t size() const { return samples_.size(); }
    [[nodiscard]] bool empty() const { return samples_.empty(); }
    [[nodiscard]] std::size_t count(Label label) const;
    [[nodiscard]] bool has_both_labels() const {
        return count(Label::Foreground) > 0 && count(Label::Background) > 0;
    }
    /// Throws InvalidArgument when either label is absent.
    void require_both_labels() const;

    void append(const Sample& s) { samples_.push_back(s); }

private:
    std::vector<Sample> samples_;
};

struct ExpansionParams {
    double e_thr = 12.0;  // spatial threshold, pixels
    double c_thr = 4.0;   // color budget, [0,255] RGB units
};

/// Single pass over the original labels: an Unknown pixel i becomes Foreground when some
/// Foreground j has D(i,j) < e_thr and |I_i - I_j| <= c_thr - D(i,j); Background likewise.
/// Pixels satisfying both rules stay Unknown.
Trimap expand_known_regions(const RasterImage& image, const Trimap& trimap, const ExpansionParams& params = {});

/// Chessboard distance from every pixel to the nearest pixel carrying `label`
/// (max int when the label is absent).
std::vector<int> chebyshev_distance(const Trimap& trimap, Label label);

struct BandMasks {
    PixelMask foreground;
    PixelMask background;
};

/// Known pixels within Chebyshev distance `width` of an Unknown pixel, split by label.
/// May return empty masks.
BandMasks band_masks(const Trimap& trimap, int width = 40);

/// band_masks() that throws InvalidArgument when either side of the band is empty.
BandMasks extract_band(const Trimap& trimap, int width = 40);

struct SlicParams {
    int region_size = 10;
    double compactness = 10.0;
    int iterations = 10;
};

using Cluster = std::vector<Pixel>;

/// SLIC restricted to `mask`: k-means over [L a b x*s y*s], s = compactness / region_size,
/// one seed per grid cell that intersects the mask, followed by connectivity enforcement.
/// The returned clusters are connected and partition the masked pixels exactly.
std::vector<Cluster> slic_superpixels(const RasterImage& image, const PixelMask& mask, const SlicParams& params = {});

/// One Sample per cluster, no label requirement.
std::vector<Sample> cluster_samples(const RasterImage& image, const std::vector<Cluster>& clusters, Label label,
                                    int frame = 0);

/// Throws InvalidArgument when either cluster list is empty.
SampleBank build_sample_bank(const RasterImage& image, const std::vector<Cluster>& f_clusters,
                             const std::vector<Cluster>& b_clusters, int frame = 0);

struct PreprocessParams {
    ExpansionParams expansion;
    int band_width = 40;
    SlicParams slic;
};

/// Band + superpixels + bank on an already expanded trimap; tolerates an empty side.
std::vector<Sample> frame_samples(const RasterImage& image, const Trimap& expanded, const PreprocessParams& params,
                                  int frame = 0);

/// Band + superpixels + bank on an already expanded trimap. Throws on a degenerate band.
SampleBank universal_sample_set(const RasterImage& image, const Trimap& expanded, const PreprocessParams& params = {});

}  // namespace sparsematte
