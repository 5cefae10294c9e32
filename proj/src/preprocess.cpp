/**
 * @file preprocess.cpp
 * @brief Known-region expansion, band extraction, masked SLIC, sample bank.
 */

#include <sparsematte/error.hpp>
#include <sparsematte/preprocess.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <queue>

namespace sparsematte {

std::size_t SampleBank::count(Label label) const {
    return static_cast<std::size_t>(
        std::count_if(samples_.begin(), samples_.end(), [label](const Sample& s) { return s.label == label; }));
}

void SampleBank::require_both_labels() const {
    if (count(Label::Foreground) == 0) {
        throw InvalidArgument("sample bank has no Foreground samples");
    }
    if (count(Label::Background) == 0) {
        throw InvalidArgument("sample bank has no Background samples");
    }
}

// =============================================================================
// Known-region expansion
// =============================================================================

Trimap expand_known_regions(const RasterImage& image, const Trimap& trimap, const ExpansionParams& params) {
    if (image.extent() != trimap.extent()) {
        throw InvalidArgument("expand_known_regions: image and trimap dimensions differ");
    }
    // |I_i - I_j| >= 0 restricts candidates to D <= c_thr as well as D < e_thr.
    struct Offset {
        int dx;
        int dy;
        double dist;
    };
    std::vector<Offset> offsets;
    const int radius = static_cast<int>(std::ceil(std::min(params.e_thr, std::max(params.c_thr, 0.0))));
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            const double d = std::hypot(dx, dy);
            if (d < params.e_thr && d <= params.c_thr) {
                offsets.push_back({dx, dy, d});
            }
        }
    }

    const Extent& ext = trimap.extent();
    std::vector<Label> out = trimap.labels();
    for (int y = 0; y < ext.height; ++y) {
        for (int x = 0; x < ext.width; ++x) {
            const Pixel p{x, y};
            if (trimap.at(p) != Label::Unknown) {
                continue;
            }
            const Rgb ci = image.at(p) * 255.0;
            bool fg = false;
            bool bg = false;
            for (const auto& o : offsets) {
                const Pixel q{x + o.dx, y + o.dy};
                if (!ext.contains(q)) {
                    continue;
                }
                const Label lq = trimap.at(q);
                if (lq == Label::Unknown || (lq == Label::Foreground && fg) || (lq == Label::Background && bg)) {
                    continue;
                }
                const double color_dist = (ci - image.at(q) * 255.0).norm();
                if (color_dist <= params.c_thr - o.dist) {
                    (lq == Label::Foreground ? fg : bg) = true;
                }
                if (fg && bg) {
                    break;
                }
            }
            if (fg != bg) {
                out[ext.index(p)] = fg ? Label::Foreground : Label::Background;
            }
        }
    }
    return Trimap(ext.width, ext.height, std::move(out));
}

// =============================================================================
// Band extraction
// =============================================================================

std::vector<int> chebyshev_distance(const Trimap& trimap, Label label) {
    constexpr int inf = std::numeric_limits<int>::max();
    const Extent& ext = trimap.extent();
    const int w = ext.width;
    const int h = ext.height;
    std::vector<int> d(ext.size(), inf);
    for (std::size_t i = 0; i < ext.size(); ++i) {
        if (trimap[i] == label) {
            d[i] = 0;
        }
    }
    auto relax = [&](int x, int y, int nx, int ny) {
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) {
            return;
        }
        const int nd = d[static_cast<std::size_t>(ny) * w + nx];
        auto& cur = d[static_cast<std::size_t>(y) * w + x];
        if (nd != inf && nd + 1 < cur) {
            cur = nd + 1;
        }
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            relax(x, y, x - 1, y);
            relax(x, y, x - 1, y - 1);
            relax(x, y, x, y - 1);
            relax(x, y, x + 1, y - 1);
        }
    }
    for (int y = h - 1; y >= 0; --y) {
        for (int x = w - 1; x >= 0; --x) {
            relax(x, y, x + 1, y);
            relax(x, y, x + 1, y + 1);
            relax(x, y, x, y + 1);
            relax(x, y, x - 1, y + 1);
        }
    }
    return d;
}

BandMasks band_masks(const Trimap& trimap, int width) {
    const std::vector<int> dist = chebyshev_distance(trimap, Label::Unknown);
    BandMasks band{PixelMask(trimap.width(), trimap.height()), PixelMask(trimap.width(), trimap.height())};
    for (std::size_t i = 0; i < trimap.size(); ++i) {
        if (dist[i] > width) {
            continue;
        }
        if (trimap[i] == Label::Foreground) {
            band.foreground.set(i);
        } else if (trimap[i] == Label::Background) {
            band.background.set(i);
        }
    }
    return band;
}

BandMasks extract_band(const Trimap& trimap, int width) {
    BandMasks band = band_masks(trimap, width);
    if (band.foreground.empty()) {
        throw InvalidArgument("extract_band: no Foreground pixels within the boundary band");
    }
    if (band.background.empty()) {
        throw InvalidArgument("extract_band: no Background pixels within the boundary band");
    }
    return band;
}

// =============================================================================
// Masked SLIC
// =============================================================================

namespace {

struct SlicCenter {
    Rgb lab;
    double x;
    double y;
};

/// Relabels 4-connected components so every cluster is connected. Fragments smaller than
/// `min_size` join the already-finalized neighbor sharing the longest boundary.
std::vector<Cluster> enforce_connectivity(const Extent& ext, const PixelMask& mask, const std::vector<int>& labels,
                                          std::size_t min_size) {
    const int w = ext.width;
    const int h = ext.height;
    std::vector<int> final_label(ext.size(), -1);
    std::vector<Cluster> clusters;
    constexpr std::array<int, 4> dx = {-1, 1, 0, 0};
    constexpr std::array<int, 4> dy = {0, 0, -1, 1};

    for (std::size_t start = 0; start < ext.size(); ++start) {
        if (!mask[start] || final_label[start] >= 0) {
            continue;
        }
        const int raw = labels[start];
        Cluster component;
        std::queue<std::size_t> todo;
        final_label[start] = -2;  // visiting
        todo.push(start);
        while (!todo.empty()) {
            const std::size_t cur = todo.front();
            todo.pop();
            const Pixel p = ext.pixel(cur);
            component.push_back(p);
            for (int k = 0; k < 4; ++k) {
                const Pixel q{p.x + dx[k], p.y + dy[k]};
                if (q.x < 0 || q.y < 0 || q.x >= w || q.y >= h) {
                    continue;
                }
                const std::size_t qi = ext.index(q);
                if (mask[qi] && final_label[qi] == -1 && labels[qi] == raw) {
                    final_label[qi] = -2;
                    todo.push(qi);
                }
            }
        }

        int target = -1;
        if (component.size() < min_size) {
            std::map<int, int> boundary;
            for (const Pixel& p : component) {
                for (int k = 0; k < 4; ++k) {
                    const Pixel q{p.x + dx[k], p.y + dy[k]};
                    if (q.x < 0 || q.y < 0 || q.x >= w || q.y >= h) {
                        continue;
                    }
                    const int fl = final_label[ext.index(q)];
                    if (fl >= 0) {
                        ++boundary[fl];
                    }
                }
            }
            int best = 0;
            for (const auto& [label, len] : boundary) {
                if (len > best) {
                    best = len;
                    target = label;
                }
            }
        }
        if (target < 0) {
            target = static_cast<int>(clusters.size());
            clusters.emplace_back();
        }
        for (const Pixel& p : component) {
            final_label[ext.index(p)] = target;
            clusters[static_cast<std::size_t>(target)].push_back(p);
        }
    }
    for (auto& c : clusters) {
        std::sort(c.begin(), c.end(), [](const Pixel& a, const Pixel& b) {
            return a.y != b.y ? a.y < b.y : a.x < b.x;
        });
    }
    return clusters;
}

}  // namespace

std::vector<Cluster> slic_superpixels(const RasterImage& image, const PixelMask& mask, const SlicParams& params) {
    if (image.extent() != mask.extent()) {
        throw InvalidArgument("slic_superpixels: image and mask dimensions differ");
    }
    if (params.region_size < 1) {
        throw InvalidArgument("slic_superpixels: region_size must be positive");
    }
    const Extent& ext = image.extent();
    const int w = ext.width;
    const int h = ext.height;
    const int step = params.region_size;
    const double s = params.compactness / static_cast<double>(step);
    const double s2 = s * s;

    std::vector<Rgb> lab(ext.size());
    for (std::size_t i = 0; i < ext.size(); ++i) {
        if (mask[i]) {
            lab[i] = srgb_to_lab(image[i]);
        }
    }

    // One seed per grid cell: the masked pixel closest to the cell center.
    std::vector<SlicCenter> centers;
    for (int y0 = 0; y0 < h; y0 += step) {
        for (int x0 = 0; x0 < w; x0 += step) {
            const int x1 = std::min(x0 + step, w);
            const int y1 = std::min(y0 + step, h);
            const double cx = x0 + (x1 - x0 - 1) / 2.0;
            const double cy = y0 + (y1 - y0 - 1) / 2.0;
            double best = std::numeric_limits<double>::infinity();
            Pixel seed{-1, -1};
            for (int y = y0; y < y1; ++y) {
                for (int x = x0; x < x1; ++x) {
                    if (!mask.at({x, y})) {
                        continue;
                    }
                    const double d = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                    if (d < best) {
                        best = d;
                        seed = {x, y};
                    }
                }
            }
            if (seed.x >= 0) {
                centers.push_back({lab[ext.index(seed)], static_cast<double>(seed.x), static_cast<double>(seed.y)});
            }
        }
    }
    if (centers.empty()) {
        return {};
    }

    std::vector<int> labels(ext.size(), -1);
    std::vector<double> dist(ext.size());
    for (int iter = 0; iter < std::max(params.iterations, 1); ++iter) {
        std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
        for (std::size_t k = 0; k < centers.size(); ++k) {
            const auto& c = centers[k];
            const int xlo = std::max(0, static_cast<int>(std::floor(c.x - step)));
            const int xhi = std::min(w - 1, static_cast<int>(std::ceil(c.x + step)));
            const int ylo = std::max(0, static_cast<int>(std::floor(c.y - step)));
            const int yhi = std::min(h - 1, static_cast<int>(std::ceil(c.y + step)));
            for (int y = ylo; y <= yhi; ++y) {
                for (int x = xlo; x <= xhi; ++x) {
                    const std::size_t i = static_cast<std::size_t>(y) * w + x;
                    if (!mask[i]) {
                        continue;
                    }
                    const double dxy = (x - c.x) * (x - c.x) + (y - c.y) * (y - c.y);
                    const double d = (lab[i] - c.lab).squaredNorm() + s2 * dxy;
                    if (d < dist[i]) {
                        dist[i] = d;
                        labels[i] = static_cast<int>(k);
                    }
                }
            }
        }
        // Pixels no window reached this round keep their previous assignment.
        std::vector<SlicCenter> sums(centers.size(), SlicCenter{Rgb::Zero(), 0.0, 0.0});
        std::vector<std::size_t> counts(centers.size(), 0);
        for (std::size_t i = 0; i < ext.size(); ++i) {
            if (!mask[i] || labels[i] < 0) {
                continue;
            }
            const auto k = static_cast<std::size_t>(labels[i]);
            const Pixel p = ext.pixel(i);
            sums[k].lab += lab[i];
            sums[k].x += p.x;
            sums[k].y += p.y;
            ++counts[k];
        }
        for (std::size_t k = 0; k < centers.size(); ++k) {
            if (counts[k] > 0) {
                const double inv = 1.0 / static_cast<double>(counts[k]);
                centers[k] = {sums[k].lab * inv, sums[k].x * inv, sums[k].y * inv};
            }
        }
    }

    const std::size_t min_size = std::max<std::size_t>(1, static_cast<std::size_t>(step * step) / 4);
    return enforce_connectivity(ext, mask, labels, min_size);
}

// =============================================================================
// Sample bank
// =============================================================================

std::vector<Sample> cluster_samples(const RasterImage& image, const std::vector<Cluster>& clusters, Label label,
                                    int frame) {
    std::vector<Sample> out;
    out.reserve(clusters.size());
    for (const Cluster& cluster : clusters) {
        if (cluster.empty()) {
            continue;
        }
        Sample s;
        s.label = label;
        s.frame = frame;
        Feature6 feature = Feature6::Zero();
        for (const Pixel& p : cluster) {
            s.centroid += Eigen::Vector2d(p.x, p.y);
            s.mean_rgb += image.at(p);
            feature += feature_at(image, p);
        }
        const double inv = 1.0 / static_cast<double>(cluster.size());
        s.centroid *= inv;
        s.mean_rgb *= inv;
        const double norm = feature.norm();
        s.feature = norm > 0.0 ? Feature6(feature / norm) : Feature6::Zero();
        out.push_back(s);
    }
    return out;
}

SampleBank build_sample_bank(const RasterImage& image, const std::vector<Cluster>& f_clusters,
                             const std::vector<Cluster>& b_clusters, int frame) {
    if (f_clusters.empty()) {
        throw InvalidArgument("build_sample_bank: no Foreground clusters");
    }
    if (b_clusters.empty()) {
        throw InvalidArgument("build_sample_bank: no Background clusters");
    }
    std::vector<Sample> samples = cluster_samples(image, f_clusters, Label::Foreground, frame);
    std::vector<Sample> bg = cluster_samples(image, b_clusters, Label::Background, frame);
    samples.insert(samples.end(), bg.begin(), bg.end());
    SampleBank bank(std::move(samples));
    bank.require_both_labels();
    return bank;
}

std::vector<Sample> frame_samples(const RasterImage& image, const Trimap& expanded, const PreprocessParams& params,
                                  int frame) {
    const BandMasks band = band_masks(expanded, params.band_width);
    std::vector<Sample> samples;
    if (!band.foreground.empty()) {
        samples = cluster_samples(image, slic_superpixels(image, band.foreground, params.slic), Label::Foreground,
                                  frame);
    }
    if (!band.background.empty()) {
        const auto bg = cluster_samples(image, slic_superpixels(image, band.background, params.slic),
                                        Label::Background, frame);
        samples.insert(samples.end(), bg.begin(), bg.end());
    }
    return samples;
}

SampleBank universal_sample_set(const RasterImage& image, const Trimap& expanded, const PreprocessParams& params) {
    const BandMasks band = extract_band(expanded, params.band_width);
    return build_sample_bank(image, slic_superpixels(image, band.foreground, params.slic),
                             slic_superpixels(image, band.background, params.slic));
}

}  // namespace sparsematte
