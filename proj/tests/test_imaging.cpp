#include "test_util.hpp"

#include <sparsematte/error.hpp>
#include <sparsematte/imaging.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

using namespace sparsematte;

namespace {

std::filesystem::path data_dir() { return std::filesystem::path(SPARSEMATTE_TEST_DATA); }

}  // namespace

TEST(RasterImage, RejectsInvalidContents) {
    EXPECT_THROW(RasterImage(0, 3, Rgb::Zero()), InvalidArgument);
    EXPECT_THROW(RasterImage(2, 2, std::vector<Rgb>(3, Rgb::Zero())), InvalidArgument);
    EXPECT_THROW(RasterImage(1, 1, std::vector<Rgb>{Rgb(1.5, 0, 0)}), InvalidArgument);
    EXPECT_THROW(RasterImage(1, 1, std::vector<Rgb>{Rgb(-0.1, 0, 0)}), InvalidArgument);
}

TEST(Trimap, RequiresBothKnownLabels) {
    EXPECT_NO_THROW(testutil::trimap_from_rows({"FUB"}).require_both_known_labels());
    EXPECT_THROW(testutil::trimap_from_rows({"FUU"}).require_both_known_labels(), InvalidArgument);
    EXPECT_THROW(testutil::trimap_from_rows({"UUB"}).require_both_known_labels(), InvalidArgument);
}

TEST(LoadImage, NormalizesPngExtremes) {
    testutil::ScratchDir dir("img");
    save_image(RasterImage(1, 1, Rgb(1, 1, 1)), dir / "white.png");
    save_image(RasterImage(1, 1, Rgb(0, 0, 0)), dir / "black.png", 16);
    EXPECT_EQ(load_image(dir / "white.png")[0], Rgb(1, 1, 1));
    EXPECT_EQ(load_image(dir / "black.png")[0], Rgb(0, 0, 0));
}

TEST(LoadImage, DecodesBinaryPpm) {
    testutil::ScratchDir dir("ppm");
    std::string bytes = "P6\n# comment\n2 2\n255\n";
    for (int i = 0; i < 4; ++i) {
        bytes += std::string{static_cast<char>(128), static_cast<char>(64), static_cast<char>(32)};
    }
    testutil::write_bytes(dir / "px.ppm", bytes);
    const RasterImage img = load_image(dir / "px.ppm");
    ASSERT_EQ(img.width(), 2);
    ASSERT_EQ(img.height(), 2);
    for (std::size_t i = 0; i < img.size(); ++i) {
        EXPECT_DOUBLE_EQ(img[i][0], 128.0 / 255.0);
        EXPECT_DOUBLE_EQ(img[i][1], 64.0 / 255.0);
        EXPECT_DOUBLE_EQ(img[i][2], 32.0 / 255.0);
    }
}

TEST(LoadImage, DecodesSixteenBitPgm) {
    testutil::ScratchDir dir("pgm");
    std::string bytes = "P5 1 1 65535\n";
    bytes += std::string{static_cast<char>(0x80), static_cast<char>(0x00)};
    testutil::write_bytes(dir / "g.pgm", bytes);
    const RasterImage img = load_image(dir / "g.pgm");
    EXPECT_DOUBLE_EQ(img[0][0], 32768.0 / 65535.0);
    EXPECT_DOUBLE_EQ(img[0][2], 32768.0 / 65535.0);
}

TEST(LoadImage, ReportsIoErrors) {
    testutil::ScratchDir dir("bad");
    EXPECT_THROW(load_image(dir / "missing.png"), IoError);
    testutil::write_bytes(dir / "junk.png", "not an image at all");
    EXPECT_THROW(load_image(dir / "junk.png"), IoError);
    testutil::write_bytes(dir / "empty.ppm", "P6\n0 0\n255\n");
    EXPECT_THROW(load_image(dir / "empty.ppm"), Error);
}

TEST(LoadTrimap, AppliesGrayThresholds) {
    testutil::ScratchDir dir("tri");
    const Matte gray(4, 1, std::vector<double>{0.0, 1.0, 128.0 / 255.0, 84.0 / 255.0});
    save_matte(gray, dir / "t.png");
    const Trimap t = load_trimap(dir / "t.png", RasterImage(4, 1, Rgb::Zero()));
    EXPECT_EQ(t[0], Label::Background);
    EXPECT_EQ(t[1], Label::Foreground);
    EXPECT_EQ(t[2], Label::Unknown);
    EXPECT_EQ(t[3], Label::Background);
}

TEST(LoadTrimap, RejectsMismatchAndMissingLabels) {
    testutil::ScratchDir dir("tri2");
    save_matte(Matte(2, 1, std::vector<double>{0.0, 1.0}), dir / "ok.png");
    EXPECT_THROW(load_trimap(dir / "ok.png", RasterImage(3, 1, Rgb::Zero())), InvalidArgument);
    save_matte(Matte(2, 1, std::vector<double>{0.5, 1.0}), dir / "no_bg.png");
    EXPECT_THROW(load_trimap(dir / "no_bg.png", RasterImage(2, 1, Rgb::Zero())), InvalidArgument);
}

TEST(Lab, KnownColors) {
    const Rgb black = rgb_to_lab(Rgb(0, 0, 0));
    EXPECT_NEAR(black[0], 0.0, 1e-12);
    EXPECT_NEAR(black[1], 128.0 / 255.0, 1e-9);
    EXPECT_NEAR(black[2], 128.0 / 255.0, 1e-9);
    const Rgb white = rgb_to_lab(Rgb(1, 1, 1));
    EXPECT_NEAR(white[0], 1.0, 1e-6);
    EXPECT_NEAR(white[1], 128.0 / 255.0, 1e-3);
    EXPECT_NEAR(white[2], 128.0 / 255.0, 1e-3);
}

// Reference values produced by an independent colorimetry library (sRGB, D65, 2 degree).
TEST(Lab, MatchesFrozenReference) {
    std::ifstream in(data_dir() / "lab_reference.csv");
    ASSERT_TRUE(in) << "missing lab_reference.csv";
    std::string line;
    std::getline(in, line);
    int rows = 0;
    double worst = 0.0;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        double v[6];
        char comma;
        ss >> v[0] >> comma >> v[1] >> comma >> v[2] >> comma >> v[3] >> comma >> v[4] >> comma >> v[5];
        const Rgb got = rgb_to_lab(Rgb(v[0], v[1], v[2]));
        const Rgb want(v[3] / 100.0, (v[4] + 128.0) / 255.0, (v[5] + 128.0) / 255.0);
        worst = std::max(worst, (got - want).cwiseAbs().maxCoeff());
        ++rows;
    }
    EXPECT_EQ(rows, 1000);
    EXPECT_LT(worst, 1e-3);
}

TEST(Features, BlackIsZeroVector) {
    EXPECT_EQ(feature_of(Rgb(0, 0, 0)), Feature6::Zero());
}

TEST(Features, WhiteMatchesHandNormalization) {
    const Rgb lab = rgb_to_lab(Rgb(1, 1, 1));
    Feature6 want;
    want << 1, 1, 1, lab[0], lab[1], lab[2];
    want /= want.norm();
    const Feature6 got = feature_at(RasterImage(1, 1, Rgb(1, 1, 1)), {0, 0});
    EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-12);
    // Proportional to [1,1,1,1,0.502,0.502] to within the white point's residual a,b.
    Feature6 approx;
    approx << 1, 1, 1, 1, 128.0 / 255.0, 128.0 / 255.0;
    EXPECT_LT((got - approx.normalized()).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Features, UnitOrZeroAndPositionIndependent) {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const Rgb c(u(rng), u(rng), u(rng));
        EXPECT_NEAR(feature_of(c).norm(), 1.0, 1e-9);
    }
    const RasterImage img(3, 2, Rgb(0.3, 0.6, 0.2));
    EXPECT_EQ(feature_at(img, {0, 0}), feature_at(img, {2, 1}));
    EXPECT_THROW(feature_at(img, {3, 0}), InvalidArgument);
    EXPECT_THROW(feature_at(img, {0, -1}), InvalidArgument);
}

TEST(SaveMatte, RoundsHalfUp) {
    testutil::ScratchDir dir("matte");
    const Matte m(3, 1, std::vector<double>{1.0, 0.5, 0.0});
    save_matte(m, dir / "m8.png", 8);
    save_matte(m, dir / "m16.png", 16);
    const Matte r8 = load_matte(dir / "m8.png");
    const Matte r16 = load_matte(dir / "m16.png");
    EXPECT_DOUBLE_EQ(r8[0] * 255.0, 255.0);
    EXPECT_DOUBLE_EQ(r8[1] * 255.0, 128.0);
    EXPECT_DOUBLE_EQ(r16[1] * 65535.0, 32768.0);
    EXPECT_DOUBLE_EQ(r16[2], 0.0);
}

TEST(SaveMatte, RoundTripWithinHalfStep) {
    testutil::ScratchDir dir("rt");
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> a(64);
    for (double& v : a) {
        v = u(rng);
    }
    const Matte m(8, 8, a);
    for (int depth : {8, 16}) {
        const auto path = dir / ("m" + std::to_string(depth) + ".png");
        save_matte(m, path, depth);
        const Matte back = load_matte(path);
        const double half = 1.0 / (2.0 * (std::pow(2.0, depth) - 1.0));
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_LE(std::abs(back[i] - a[i]), half + 1e-12);
        }
    }
}

TEST(SaveMatte, UnwritablePathIsIoError) {
    EXPECT_THROW(save_matte(Matte(1, 1), "/nonexistent-dir/x.png"), IoError);
    EXPECT_THROW(save_matte(Matte(1, 1), "/tmp/x.png", 12), InvalidArgument);
}
