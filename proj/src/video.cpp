/**
 * @file video.cpp
 * @brief Block sample banks, cross-frame KNN graph and the block solve.
 */

#include <sparsematte/error.hpp>
#include <sparsematte/video.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>

namespace sparsematte {

void FrameBlock::validate(int max_frames) const {
    if (frames.empty() || frames.size() != trimaps.size()) {
        throw InvalidArgument("FrameBlock: need one trimap per frame and at least one frame");
    }
    if (size() > max_frames) {
        throw InvalidArgument("FrameBlock: " + std::to_string(size()) + " frames exceed the maximum of " +
                              std::to_string(max_frames));
    }
    for (std::size_t f = 0; f < frames.size(); ++f) {
        if (frames[f].extent() != frames.front().extent() || trimaps[f].extent() != frames.front().extent()) {
            throw InvalidArgument("FrameBlock: frame " + std::to_string(f) + " has different dimensions");
        }
    }
}

std::size_t temporal_quota(std::size_t base, int dt) {
    const int shift = std::abs(dt);
    if (shift >= 63) {
        return base > 0 ? 1 : 0;
    }
    const std::size_t div = std::size_t{1} << shift;
    return (base + div - 1) / div;
}

SampleBank block_sample_bank(const std::vector<std::vector<Sample>>& frame_samples, const Trimap& target_trimap,
                             int target, std::optional<std::size_t> base) {
    if (target < 0 || target >= static_cast<int>(frame_samples.size())) {
        throw InvalidArgument("block_sample_bank: target frame out of range");
    }
    const std::vector<int> dist = chebyshev_distance(target_trimap, Label::Unknown);
    const Extent& ext = target_trimap.extent();
    auto distance_to_unknown = [&](const Sample& s) {
        const int x = std::clamp(static_cast<int>(std::lround(s.centroid.x())), 0, ext.width - 1);
        const int y = std::clamp(static_cast<int>(std::lround(s.centroid.y())), 0, ext.height - 1);
        return dist[ext.index({x, y})];
    };
    const auto& own = frame_samples[static_cast<std::size_t>(target)];

    // Exact duplicates of a sample already in the bank add no atom the coder can use.
    using Key = std::array<double, 9>;
    auto key_of = [](const Sample& s) {
        Key k{static_cast<double>(s.label), s.centroid.x(), s.centroid.y()};
        std::copy(s.feature.data(), s.feature.data() + 6, k.begin() + 3);
        return k;
    };
    std::set<Key> seen;
    for (const Sample& s : own) {
        seen.insert(key_of(s));
    }

    SampleBank bank;
    for (int f = 0; f < static_cast<int>(frame_samples.size()); ++f) {
        const auto& samples = frame_samples[static_cast<std::size_t>(f)];
        std::vector<std::size_t> keep;
        for (Label label : {Label::Foreground, Label::Background}) {
            const std::size_t own_count = static_cast<std::size_t>(
                std::count_if(own.begin(), own.end(), [label](const Sample& s) { return s.label == label; }));
            const std::size_t quota = temporal_quota(base.value_or(own_count), f - target);
            std::vector<std::pair<int, std::size_t>> ranked;
            for (std::size_t i = 0; i < samples.size(); ++i) {
                if (samples[i].label == label) {
                    ranked.emplace_back(distance_to_unknown(samples[i]), i);
                }
            }
            std::sort(ranked.begin(), ranked.end());
            for (std::size_t r = 0; r < std::min(quota, ranked.size()); ++r) {
                keep.push_back(ranked[r].second);
            }
        }
        // Selected samples keep their per-frame order.
        std::sort(keep.begin(), keep.end());
        for (std::size_t i : keep) {
            if (f != target && seen.count(key_of(samples[i])) > 0) {
                continue;
            }
            seen.insert(key_of(samples[i]));
            Sample s = samples[i];
            s.frame = f;
            bank.append(s);
        }
    }
    bank.require_both_labels();
    return bank;
}

SparseMatrix block_knn_weights(const FrameBlock& block, const std::vector<std::size_t>& nodes, int K) {
    block.validate(std::numeric_limits<int>::max());
    const std::size_t n = block.frames.front().size();
    std::vector<Feature5> features;
    features.reserve(nodes.size());
    for (std::size_t g : nodes) {
        const RasterImage& frame = block.frames.at(g / n);
        features.push_back(knn_feature(frame, frame.extent().pixel(g % n)));
    }
    return knn_affinity(features, K);
}

BlockResult solve_block(const FrameBlock& block, const VideoParams& params) {
    block.validate(params.max_frames);
    const MattingParams& mp = params.matting;
    const int M = block.size();
    const Extent ext = block.frames.front().extent();
    const std::size_t n = ext.size();

    std::vector<Trimap> expanded;
    std::vector<std::vector<Sample>> samples;
    for (int f = 0; f < M; ++f) {
        const auto fu = static_cast<std::size_t>(f);
        expanded.push_back(expand_known_regions(block.frames[fu], block.trimaps[fu], mp.preprocess.expansion));
        samples.push_back(frame_samples(block.frames[fu], expanded.back(), mp.preprocess, f));
    }

    std::vector<EstimateMap> estimates;
    estimates.reserve(static_cast<std::size_t>(M));
    for (int t = 0; t < M; ++t) {
        const auto tu = static_cast<std::size_t>(t);
        const RasterImage& image = block.frames[tu];
        if (expanded[tu].count(Label::Unknown) == 0) {
            const ProbabilityMap empty{ext, std::vector<double>(n, 0.0), std::vector<std::uint8_t>(n, 0)};
            const CertaintyMask none{ext, std::vector<Certainty>(n, Certainty::None)};
            estimates.push_back(estimate_all(image, expanded[tu], SampleBank{}, none, empty, mp.estimate));
            continue;
        }
        const SampleBank bank = block_sample_bank(samples, expanded[tu], t, params.base_quota);
        const ProbabilityMap pmap = foreground_probability(image, expanded[tu], bank, mp.probability);
        const CertaintyMask mask = classify_certainty(pmap, mp.certainty);
        estimates.push_back(estimate_all(image, expanded[tu], bank, mask, pmap, mp.estimate));
    }

    std::vector<std::size_t> nodes;
    for (int f = 0; f < M; ++f) {
        for (std::size_t p : graph_nodes(expanded[static_cast<std::size_t>(f)])) {
            nodes.push_back(static_cast<std::size_t>(f) * n + p);
        }
    }
    const auto n_nodes = static_cast<Eigen::Index>(nodes.size());
    SparseMatrix pairwise(n_nodes, n_nodes);
    const int K = std::min<int>(mp.graph.K, static_cast<int>(nodes.size()) - 1);
    if (mp.graph.use_knn && K >= 1) {
        pairwise = block_knn_weights(block, nodes, K);
    }
    const auto undirected = static_cast<std::size_t>(pairwise.nonZeros()) / 2;
    const std::size_t budget = nodes.size() * static_cast<std::size_t>(std::max(K, 0) + 2);
    if (undirected + nodes.size() > budget) {
        throw Error("solve_block: graph exceeds its memory budget");
    }

    std::vector<const Trimap*> trimap_ptrs;
    std::vector<const EstimateMap*> estimate_ptrs;
    for (int f = 0; f < M; ++f) {
        trimap_ptrs.push_back(&expanded[static_cast<std::size_t>(f)]);
        estimate_ptrs.push_back(&estimates[static_cast<std::size_t>(f)]);
    }
    BlockResult result;
    result.nonzeros = static_cast<std::size_t>(pairwise.nonZeros());
    const MatteSystem system =
        make_system(ext, trimap_ptrs, estimate_ptrs, std::move(nodes), std::move(pairwise), mp.graph.lambda);
    MatteSolution solution = solve_matte(system, mp.solve);
    result.mattes = std::move(solution.mattes);
    result.solve = solution.stats;
    for (const auto& e : estimates) {
        result.initial.push_back(estimate_matte(e));
    }
    return result;
}

std::vector<std::pair<int, int>> partition_blocks(int frame_count, int M) {
    if (frame_count <= 0) {
        throw InvalidArgument("partition_blocks: no frames");
    }
    if (M < 1) {
        throw InvalidArgument("partition_blocks: block size must be positive");
    }
    std::vector<std::pair<int, int>> blocks;
    for (int start = 0; start < frame_count; start += M) {
        blocks.emplace_back(start, std::min(M, frame_count - start));
    }
    return blocks;
}

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw IoError("not a directory: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) {
            continue;
        }
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png" || ext == ".ppm" || ext == ".pgm") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

SequenceReport run_sequence(const std::filesystem::path& frames_dir, const std::filesystem::path& trimaps_dir,
                            const std::filesystem::path& out_dir, int M, const VideoParams& params, int depth) {
    const auto frames = list_images(frames_dir);
    const auto trimaps = list_images(trimaps_dir);
    if (frames.empty()) {
        throw InvalidArgument("run_sequence: no frames in " + frames_dir.string());
    }
    if (frames.size() != trimaps.size()) {
        throw InvalidArgument("run_sequence: " + std::to_string(frames.size()) + " frames but " +
                              std::to_string(trimaps.size()) + " trimaps");
    }
    std::filesystem::create_directories(out_dir);

    SequenceReport report;
    report.blocks = partition_blocks(static_cast<int>(frames.size()), M);
    VideoParams block_params = params;
    block_params.max_frames = std::max(params.max_frames, M);
    for (const auto& [start, length] : report.blocks) {
        FrameBlock block;
        block.frame_index_offset = start;
        for (int f = start; f < start + length; ++f) {
            block.frames.push_back(load_image(frames[static_cast<std::size_t>(f)]));
            block.trimaps.push_back(load_trimap(trimaps[static_cast<std::size_t>(f)], block.frames.back()));
        }
        const BlockResult result = solve_block(block, block_params);
        report.all_converged = report.all_converged && result.solve.converged;
        for (int f = 0; f < length; ++f) {
            const auto out = out_dir / frames[static_cast<std::size_t>(start + f)].filename().replace_extension(".png");
            save_matte(result.mattes[static_cast<std::size_t>(f)], out, depth);
            report.written.push_back(out);
        }
    }
    return report;
}

}  // namespace sparsematte
