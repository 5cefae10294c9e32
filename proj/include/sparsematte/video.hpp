/**
 * @file video.hpp
 * @brief Multi-frame matting: cross-frame sample banks, cross-frame KNN graph and a
 *        simultaneous solve over a block of consecutive frames.
 */
#pragma once

#include <sparsematte/graph.hpp>
#include <sparsematte/pipeline.hpp>

#include <filesystem>
#include <optional>
#include <vector>

namespace sparsematte {

struct FrameBlock {
    std::vector<RasterImage> frames;
    std::vector<Trimap> trimaps;
    int frame_index_offset = 0;

    [[nodiscard]] int size() const { return static_cast<int>(frames.size()); }
    /// Throws InvalidArgument unless 1 <= M <= max_frames and all frames/trimaps share dimensions.
    void validate(int max_frames = 8) const;
};

/// Union of per-frame samples for `target`: frame f contributes at most
/// ceil(base * 2^-|f - target|) samples per label, taken by closeness of their centroids to the
/// target's Unknown region. `base` defaults to the target frame's own per-label count.
/// Throws InvalidArgument when the union lacks a label.
SampleBank block_sample_bank(const std::vector<std::vector<Sample>>& frame_samples, const Trimap& target_trimap,
                             int target, std::optional<std::size_t> base = std::nullopt);

/// Per-label quota of frame distance dt.
std::size_t temporal_quota(std::size_t base, int dt);

/// knn_affinity() over nodes drawn from every frame of the block; `nodes` holds global
/// indices frame * n + pixel and the feature carries no temporal coordinate.
SparseMatrix block_knn_weights(const FrameBlock& block, const std::vector<std::size_t>& nodes, int K = 12);

struct VideoParams {
    MattingParams matting;  // graph.use_laplacian is ignored: the block graph is KNN only
    std::optional<std::size_t> base_quota;
    int max_frames = 8;
};

struct BlockResult {
    std::vector<Matte> mattes;
    std::vector<Matte> initial;
    SolveStats solve;
    std::size_t nonzeros = 0;
};

BlockResult solve_block(const FrameBlock& block, const VideoParams& params = {});

/// Consecutive non-overlapping [start, length) blocks of at most M frames.
std::vector<std::pair<int, int>> partition_blocks(int frame_count, int M);

struct SequenceReport {
    std::vector<std::pair<int, int>> blocks;
    std::vector<std::filesystem::path> written;
    bool all_converged = true;
};

/// Pairs frames and trimaps by lexicographic file order, solves each block and writes one
/// matte per frame into out_dir under the frame's file name.
SequenceReport run_sequence(const std::filesystem::path& frames_dir, const std::filesystem::path& trimaps_dir,
                            const std::filesystem::path& out_dir, int M = 4, const VideoParams& params = {},
                            int depth = 8);

/// Sorted image files (png, ppm, pgm) of a directory.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

}  // namespace sparsematte
