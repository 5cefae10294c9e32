#include "oracles.hpp"
#include "test_util.hpp"

#include <sparsematte/error.hpp>
#include <sparsematte/synthetic.hpp>
#include <sparsematte/video.hpp>

#include <gtest/gtest.h>

using namespace sparsematte;

namespace {

FrameBlock block_of(const std::vector<SyntheticImage>& clip) {
    FrameBlock b;
    for (const auto& f : clip) {
        b.frames.push_back(f.composite);
        b.trimaps.push_back(f.trimap);
    }
    return b;
}

bool same_sample(const Sample& a, const Sample& b) {
    return a.label == b.label && a.centroid == b.centroid && a.feature == b.feature && a.mean_rgb == b.mean_rgb;
}

}  // namespace

TEST(TemporalQuota, HalvesPerFrameRoundingUp) {
    EXPECT_EQ(temporal_quota(40, 0), 40U);
    EXPECT_EQ(temporal_quota(40, 1), 20U);
    EXPECT_EQ(temporal_quota(40, -2), 10U);
    EXPECT_EQ(temporal_quota(40, 3), 5U);
    EXPECT_EQ(temporal_quota(5, 1), 3U);
    EXPECT_EQ(temporal_quota(1, 7), 1U);
    EXPECT_EQ(temporal_quota(0, 1), 0U);
}

TEST(BlockBank, SingleFrameEqualsImageBank) {
    const auto clip = translating_disc(1, 40, 10.0, 4.0, 1.0);
    const PreprocessParams pp;
    const Trimap expanded = expand_known_regions(clip[0].composite, clip[0].trimap, pp.expansion);
    const SampleBank single = universal_sample_set(clip[0].composite, expanded, pp);
    const SampleBank block = block_sample_bank({frame_samples(clip[0].composite, expanded, pp)}, expanded, 0);
    ASSERT_EQ(single.size(), block.size());
    for (std::size_t i = 0; i < single.size(); ++i) {
        EXPECT_TRUE(same_sample(single[i], block[i])) << i;
    }
}

TEST(BlockBank, FrameWithoutBandAddsNothing) {
    const auto clip = translating_disc(1, 40, 10.0, 4.0, 1.0);
    const PreprocessParams pp;
    const Trimap expanded = expand_known_regions(clip[0].composite, clip[0].trimap, pp.expansion);
    const auto own = frame_samples(clip[0].composite, expanded, pp);
    const Trimap all_fg(40, 40, std::vector<Label>(1600, Label::Foreground));
    const auto none = frame_samples(clip[0].composite, all_fg, pp);
    EXPECT_TRUE(none.empty());
    EXPECT_EQ(block_sample_bank({own, none}, expanded, 0).size(), own.size());
}

TEST(BlockBank, NeighborFramesRespectQuota) {
    const auto clip = translating_disc(3, 40, 10.0, 4.0, 1.0);
    const PreprocessParams pp;
    std::vector<std::vector<Sample>> samples;
    std::vector<Trimap> expanded;
    for (int f = 0; f < 3; ++f) {
        expanded.push_back(expand_known_regions(clip[static_cast<std::size_t>(f)].composite,
                                                clip[static_cast<std::size_t>(f)].trimap, pp.expansion));
        samples.push_back(frame_samples(clip[static_cast<std::size_t>(f)].composite, expanded.back(), pp, f));
    }
    const SampleBank bank = block_sample_bank(samples, expanded[0], 0, 4);
    std::size_t per_frame_label[3][3] = {};
    for (const Sample& s : bank.samples()) {
        ++per_frame_label[s.frame][static_cast<int>(s.label)];
    }
    for (Label l : {Label::Foreground, Label::Background}) {
        EXPECT_LE(per_frame_label[0][static_cast<int>(l)], 4U);
        EXPECT_LE(per_frame_label[1][static_cast<int>(l)], 2U);
        EXPECT_LE(per_frame_label[2][static_cast<int>(l)], 1U);
        EXPECT_GE(per_frame_label[0][static_cast<int>(l)], 1U);
    }
    EXPECT_THROW(block_sample_bank(samples, expanded[0], 3), InvalidArgument);
}

TEST(BlockKnn, StaticClipMatchesBruteForce) {
    const auto clip = static_disc(4, 5, 1.5, 1.0);
    const FrameBlock block = block_of(clip);
    std::vector<std::size_t> nodes;
    std::vector<Feature5> features;
    for (std::size_t f = 0; f < 4; ++f) {
        for (std::size_t p = 0; p < 25; ++p) {
            nodes.push_back(f * 25 + p);
            features.push_back(knn_feature(block.frames[f], block.frames[f].extent().pixel(p)));
        }
    }
    const Eigen::MatrixXd got = Eigen::MatrixXd(block_knn_weights(block, nodes, 12));
    EXPECT_LT((got - oracle::dense_knn_affinity(features, 12)).cwiseAbs().maxCoeff(), 1e-12);
    // The same pixel in two frames has identical features.
    EXPECT_DOUBLE_EQ(got(3, 28), 1.0);
}

TEST(SolveBlock, SingleFrameMatchesImagePathWithoutLaplacian) {
    const auto clip = translating_disc(1, 32, 8.0, 3.0, 1.0);
    MattingParams mp;
    mp.graph.use_laplacian = false;
    const MattingResult image = matte_image(clip[0].composite, clip[0].trimap, mp);
    VideoParams vp;
    vp.matting = mp;
    const BlockResult block = solve_block(block_of(clip), vp);
    ASSERT_EQ(block.mattes.size(), 1U);
    EXPECT_EQ(block.mattes[0].data(), image.matte.data());
    EXPECT_EQ(block.initial[0].data(), image.initial.data());
}

TEST(SolveBlock, StaticClipFramesAgree) {
    const auto clip = static_disc(3, 32, 8.0, 3.0);
    const BlockResult r = solve_block(block_of(clip));
    ASSERT_EQ(r.mattes.size(), 3U);
    for (std::size_t f = 1; f < 3; ++f) {
        for (std::size_t i = 0; i < r.mattes[0].size(); ++i) {
            EXPECT_NEAR(r.mattes[f][i], r.mattes[0][i], 1e-6);
        }
    }
}

TEST(FrameBlockValidate, RejectsBadBlocks) {
    const auto clip = static_disc(3, 16, 4.0, 2.0);
    FrameBlock b = block_of(clip);
    EXPECT_NO_THROW(b.validate());
    EXPECT_THROW(b.validate(2), InvalidArgument);
    b.frames[1] = RasterImage(8, 8, Rgb(0.5, 0.5, 0.5));
    EXPECT_THROW(b.validate(), InvalidArgument);
    EXPECT_THROW(FrameBlock{}.validate(), InvalidArgument);
}

TEST(PartitionBlocks, ConsecutiveNonOverlapping) {
    using Blocks = std::vector<std::pair<int, int>>;
    EXPECT_EQ(partition_blocks(8, 4), (Blocks{{0, 4}, {4, 4}}));
    EXPECT_EQ(partition_blocks(9, 4), (Blocks{{0, 4}, {4, 4}, {8, 1}}));
    EXPECT_EQ(partition_blocks(3, 1), (Blocks{{0, 1}, {1, 1}, {2, 1}}));
    EXPECT_THROW(partition_blocks(0, 4), InvalidArgument);
    EXPECT_THROW(partition_blocks(4, 0), InvalidArgument);
}

TEST(RunSequence, WritesOneMattePerFrame) {
    const auto clip = translating_disc(3, 24, 6.0, 2.0, 1.0);
    testutil::ScratchDir dir("sequence");
    std::filesystem::create_directories(dir / "frames");
    std::filesystem::create_directories(dir / "trimaps");
    for (int f = 0; f < 3; ++f) {
        const std::string name = "f" + std::to_string(f) + ".png";
        save_image(clip[static_cast<std::size_t>(f)].composite, dir / "frames" / name);
        save_trimap(clip[static_cast<std::size_t>(f)].trimap, dir / "trimaps" / name);
    }
    const SequenceReport rep = run_sequence(dir / "frames", dir / "trimaps", dir / "out", 2);
    EXPECT_EQ(rep.blocks, (std::vector<std::pair<int, int>>{{0, 2}, {2, 1}}));
    ASSERT_EQ(rep.written.size(), 3U);
    for (const auto& p : rep.written) {
        const Matte m = load_matte(p);
        EXPECT_EQ(m.width(), 24);
    }
    EXPECT_EQ(rep.written[2].filename(), "f2.png");

    std::filesystem::remove(dir / "trimaps" / "f2.png");
    EXPECT_THROW(run_sequence(dir / "frames", dir / "trimaps", dir / "out", 2), InvalidArgument);
    EXPECT_THROW(run_sequence(dir / "missing", dir / "trimaps", dir / "out", 2), IoError);
}
