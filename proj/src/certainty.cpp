/**
 * @file certainty.cpp
 * @brief Foreground probability map and certainty mask.
 */

#include <sparsematte/certainty.hpp>
#include <sparsematte/error.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sparsematte {

std::vector<std::size_t> nearest_samples(const SampleBank& bank, const Eigen::Vector2d& point, std::size_t count,
                                         std::optional<Label> label) {
    std::vector<std::pair<double, std::size_t>> ranked;
    ranked.reserve(bank.size());
    for (std::size_t i = 0; i < bank.size(); ++i) {
        if (label && bank[i].label != *label) {
            continue;
        }
        ranked.emplace_back((bank[i].centroid - point).squaredNorm(), i);
    }
    const std::size_t k = std::min(count, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end());
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) {
        out[i] = ranked[i].second;
    }
    return out;
}

double color_affinity(const Rgb& pixel_rgb, std::span<const Sample> samples, int m, double delta) {
    if (samples.empty()) {
        throw InvalidArgument("color_affinity: empty sample list");
    }
    const std::size_t used = std::min(samples.size(), static_cast<std::size_t>(std::max(m, 1)));
    double sum = 0.0;
    for (std::size_t k = 0; k < used; ++k) {
        sum += (pixel_rgb - samples[k].mean_rgb).squaredNorm();
    }
    return std::exp(-sum / (static_cast<double>(used) * delta));
}

double pixel_probability(const Rgb& rgb, Pixel p, const SampleBank& bank, const ProbabilityParams& params) {
    const Eigen::Vector2d at(p.x, p.y);
    auto affinity = [&](Label label) {
        const auto idx = nearest_samples(bank, at, static_cast<std::size_t>(params.m), label);
        std::vector<Sample> chosen;
        chosen.reserve(idx.size());
        for (std::size_t i : idx) {
            chosen.push_back(bank[i]);
        }
        return color_affinity(rgb, chosen, params.m, params.delta);
    };
    const double pf = affinity(Label::Foreground);
    const double pb = affinity(Label::Background);
    const double denom = pf + pb;
    if (!(denom > 0.0)) {
        return 0.5;
    }
    return std::clamp(pf / denom, 0.0, 1.0);
}

ProbabilityMap foreground_probability(const RasterImage& image, const Trimap& trimap, const SampleBank& bank,
                                      const ProbabilityParams& params) {
    if (image.extent() != trimap.extent()) {
        throw InvalidArgument("foreground_probability: image and trimap dimensions differ");
    }
    bank.require_both_labels();
    ProbabilityMap pmap{image.extent(), std::vector<double>(image.size(), 0.0),
                        std::vector<std::uint8_t>(image.size(), 0)};
    for (std::size_t i = 0; i < image.size(); ++i) {
        if (trimap[i] != Label::Unknown) {
            continue;
        }
        pmap.p[i] = pixel_probability(image[i], image.extent().pixel(i), bank, params);
        pmap.defined[i] = 1;
    }
    return pmap;
}

std::size_t CertaintyMask::count(Certainty c) const {
    return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), c));
}

CertaintyMask classify_certainty(const ProbabilityMap& pmap, const CertaintyParams& params) {
    const Extent& ext = pmap.extent;
    const int w = ext.width;
    const int h = ext.height;

    // Summed-area table of in-band indicators.
    std::vector<int> integral(static_cast<std::size_t>(w + 1) * (h + 1), 0);
    auto at = [&](int x, int y) -> int& { return integral[static_cast<std::size_t>(y) * (w + 1) + x]; };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const int in_band = pmap.is_defined(i) && pmap.p[i] >= params.band_lo && pmap.p[i] <= params.band_hi;
            at(x + 1, y + 1) = in_band + at(x, y + 1) + at(x + 1, y) - at(x, y);
        }
    }

    const int r = params.window / 2;
    CertaintyMask mask{ext, std::vector<Certainty>(ext.size(), Certainty::None)};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            if (!pmap.is_defined(i)) {
                continue;
            }
            const int x0 = std::max(0, x - r);
            const int y0 = std::max(0, y - r);
            const int x1 = std::min(w, x + r + 1);
            const int y1 = std::min(h, y + r + 1);
            const int count = at(x1, y1) - at(x0, y1) - at(x1, y0) + at(x0, y0);
            mask.flags[i] = count > params.count_thr ? Certainty::Low : Certainty::High;
        }
    }
    return mask;
}

}  // namespace sparsematte
