/**
 * @file certainty.hpp
 * @brief Non-parametric foreground probability and low/high certainty classification.
 */
#pragma once

#include <sparsematte/imaging.hpp>
#include <sparsematte/preprocess.hpp>

#include <optional>
#include <span>
#include <vector>

namespace sparsematte {

/// Bank indices ordered by centroid distance to `point` (ties broken by index).
/// Restricted to `label` when given; at most `count` entries.
std::vector<std::size_t> nearest_samples(const SampleBank& bank, const Eigen::Vector2d& point, std::size_t count,
                                         std::optional<Label> label = std::nullopt);

/// exp(-sum_k |c - c(f_k)|^2 / (m * delta)) over the first min(m, samples.size()) samples.
/// Throws InvalidArgument on an empty sample list.
double color_affinity(const Rgb& pixel_rgb, std::span<const Sample> samples, int m = 10, double delta = 0.1);

struct ProbabilityParams {
    int m = 10;
    double delta = 0.1;
};

/// Foreground probability, defined on the Unknown pixels of the trimap it was computed for.
struct ProbabilityMap {
    Extent extent;
    std::vector<double> p;             // 0 where undefined
    std::vector<std::uint8_t> defined;

    [[nodiscard]] bool is_defined(std::size_t i) const { return defined[i] != 0; }
};

/// p = p_f / (p_f + p_b) on every Unknown pixel; 0.5 when both affinities underflow.
ProbabilityMap foreground_probability(const RasterImage& image, const Trimap& trimap, const SampleBank& bank,
                                      const ProbabilityParams& params = {});

/// Single-pixel evaluation of foreground_probability().
double pixel_probability(const Rgb& rgb, Pixel p, const SampleBank& bank, const ProbabilityParams& params = {});

enum class Certainty : std::uint8_t { None = 0, Low = 1, High = 2 };

struct CertaintyParams {
    int window = 7;
    double band_lo = 0.3;
    double band_hi = 0.7;
    int count_thr = 35;
};

struct CertaintyMask {
    Extent extent;
    std::vector<Certainty> flags;  // None outside the probability map's domain

    [[nodiscard]] Certainty at(Pixel p) const { return flags[extent.index(p)]; }
    [[nodiscard]] std::size_t count(Certainty c) const;
};

/// Low iff more than count_thr defined pixels of the (border-truncated) window have p in
/// [band_lo, band_hi]; High otherwise.
CertaintyMask classify_certainty(const ProbabilityMap& pmap, const CertaintyParams& params = {});

}  // namespace sparsematte
