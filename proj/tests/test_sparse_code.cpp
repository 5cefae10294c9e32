#include "oracles.hpp"

#include <sparsematte/error.hpp>
#include <sparsematte/sparse_code.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace sparsematte;

namespace {

Sample make_sample(Label label, double x, double y, const Rgb& rgb) {
    Sample s;
    s.label = label;
    s.centroid = Eigen::Vector2d(x, y);
    s.mean_rgb = rgb;
    s.feature = feature_of(rgb);
    return s;
}

SampleBank line_bank(int n_f, int n_b) {
    std::vector<Sample> s;
    for (int i = 0; i < n_f; ++i) {
        s.push_back(make_sample(Label::Foreground, i, 0, Rgb(0.9, 0.1, 0.1)));
    }
    for (int i = 0; i < n_b; ++i) {
        s.push_back(make_sample(Label::Background, 1000 + i, 0, Rgb(0.1, 0.1, 0.9)));
    }
    return SampleBank(s);
}

Feature6 random_unit(std::mt19937& rng, bool nonneg) {
    std::normal_distribution<double> g(0.0, 1.0);
    Feature6 v;
    for (auto& c : v) {
        c = nonneg ? std::abs(g(rng)) : g(rng);
    }
    return v.normalized();
}

double objective(const Feature6& v, const AtomMatrix& D, const Eigen::VectorXd& b) { return (v - D * b).squaredNorm(); }

}  // namespace

// --- dictionaries ---------------------------------------------------------------------------------

TEST(Dictionary, HighCertaintyTakesEverySampleOfSmallBank) {
    const Dictionary d = build_dictionary(Pixel{0, 0}, Certainty::High, line_bank(10, 10));
    EXPECT_EQ(d.f_count, 10U);
    EXPECT_EQ(d.b_count, 10U);
    EXPECT_EQ(d.atoms.cols(), 20);
}

TEST(Dictionary, HighCertaintyCapsEachLabel) {
    const Dictionary d = build_dictionary(Pixel{0, 0}, Certainty::High, line_bank(60, 50));
    EXPECT_EQ(d.f_count, 40U);
    EXPECT_EQ(d.b_count, 40U);
    // Nearest F samples first: centroids 0..39.
    EXPECT_EQ(d.source_indices.front(), 0U);
    EXPECT_EQ(d.source_indices[39], 39U);
}

TEST(Dictionary, LowCertaintyUsesThirdOfBank) {
    const Dictionary d = build_dictionary(Pixel{0, 0}, Certainty::Low, line_bank(150, 150));
    EXPECT_EQ(d.size(), 100U);
    EXPECT_GE(d.f_count, 1U);
    EXPECT_GE(d.b_count, 1U);
}

TEST(Dictionary, LowCertaintyInsertsMissingLabel) {
    const Dictionary d = build_dictionary(Pixel{0, 0}, Certainty::Low, line_bank(99, 1));
    EXPECT_EQ(d.size(), 34U);
    EXPECT_EQ(d.f_count, 33U);
    EXPECT_EQ(d.b_count, 1U);
    EXPECT_EQ(d.source_indices.back(), 99U);
}

TEST(Dictionary, AtomsAreFThenB) {
    const Dictionary d = build_dictionary(Pixel{500, 0}, Certainty::High, line_bank(3, 3));
    for (std::size_t j = 0; j < d.size(); ++j) {
        EXPECT_EQ(j < d.f_count, d.atom_rgb[j].x() > 0.5);
    }
    EXPECT_THROW(build_dictionary(Pixel{0, 0}, Certainty::High, line_bank(3, 0)), InvalidArgument);
}

// --- projection and solver ---------------------------------------------------------------------------

TEST(Projection, CappedSimplex) {
    Eigen::VectorXd y(3);
    y << 0.2, -0.5, 0.3;
    EXPECT_TRUE(project_capped_simplex(y).isApprox(Eigen::Vector3d(0.2, 0.0, 0.3)));
    y << 2.0, 1.0, -1.0;
    EXPECT_TRUE(project_capped_simplex(y).isApprox(Eigen::Vector3d(1.0, 0.0, 0.0)));
    y << 0.7, 0.7, 0.0;
    EXPECT_TRUE(project_capped_simplex(y).isApprox(Eigen::Vector3d(0.5, 0.5, 0.0)));
}

TEST(SolveCode, AtomItselfIsCodedExactly) {
    std::mt19937 rng(1);
    const std::vector<Feature6> f{random_unit(rng, true), random_unit(rng, true)};
    const std::vector<Feature6> b{random_unit(rng, true)};
    const Dictionary d = make_dictionary(f, b);
    const SparseCode c = solve_code(f[1], d);
    EXPECT_TRUE(c.converged);
    EXPECT_NEAR(c.beta[1], 1.0, 1e-4);
    EXPECT_LT(c.objective, 1e-6);
    EXPECT_NEAR(alpha_from_code(normalize_code(c), d), 1.0, 1e-4);
}

TEST(SolveCode, ZeroTargetGivesZeroCode) {
    std::mt19937 rng(2);
    const Dictionary d = make_dictionary({random_unit(rng, true)}, {random_unit(rng, true)});
    const SparseCode c = solve_code(Feature6::Zero(), d);
    EXPECT_EQ(c.beta.sum(), 0.0);
    EXPECT_TRUE(normalize_code(c).degenerate);
}

TEST(SolveCode, MidpointOfTwoAtoms) {
    Feature6 a = Feature6::Zero();
    Feature6 b = Feature6::Zero();
    a[0] = 1.0;
    b[1] = 1.0;
    const Dictionary d = make_dictionary({a}, {b});
    const SparseCode c = solve_code((a + b) / 2.0, d);
    EXPECT_NEAR(c.beta[0], 0.5, 1e-6);
    EXPECT_NEAR(c.beta[1], 0.5, 1e-6);
}

TEST(SolveCode, MatchesEnumerationOracle) {
    std::mt19937 rng(99);
    std::uniform_int_distribution<int> size(2, 10);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = size(rng);
        const bool nonneg = trial % 2 == 0;
        AtomMatrix D(6, n);
        for (int j = 0; j < n; ++j) {
            D.col(j) = random_unit(rng, nonneg);
        }
        const Feature6 v = random_unit(rng, nonneg);
        const SparseCode c = solve_code(v, D);
        const oracle::QpSolution ref = oracle::constrained_lasso(v, D);
        ASSERT_GE(c.beta.minCoeff(), 0.0) << trial;
        ASSERT_LE(c.beta.sum(), 1.0 + 1e-12) << trial;
        EXPECT_NEAR(c.objective, objective(v, D, c.beta), 1e-12) << trial;
        EXPECT_LE(c.objective - ref.objective, 1e-6) << trial;
        EXPECT_GE(c.objective - ref.objective, -1e-9) << trial;
        EXPECT_GE(c.gap, c.objective - ref.objective - 1e-9) << trial;
    }
}

TEST(SolveCode, PermutingAtomsPermutesObjectiveOnly) {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        AtomMatrix D(6, 8);
        for (int j = 0; j < 8; ++j) {
            D.col(j) = random_unit(rng, true);
        }
        const Feature6 v = random_unit(rng, true);
        AtomMatrix P(6, 8);
        for (int j = 0; j < 8; ++j) {
            P.col(j) = D.col(7 - j);
        }
        EXPECT_NEAR(solve_code(v, D).objective, solve_code(v, P).objective, 1e-6);
    }
}

// --- normalization, alpha, confidence ---------------------------------------------------------------

TEST(NormalizeCode, RescalesToOne) {
    SparseCode c;
    c.beta = Eigen::Vector3d(0.2, 0.1, 0.1);
    const SparseCode n = normalize_code(c);
    EXPECT_FALSE(n.degenerate);
    EXPECT_DOUBLE_EQ(n.beta.sum(), 1.0);
    EXPECT_DOUBLE_EQ(n.beta[0], 0.5);
    c.beta = Eigen::Vector3d::Zero();
    EXPECT_TRUE(normalize_code(c).degenerate);
}

TEST(AlphaFromCode, SumsForegroundBlock) {
    const Dictionary d = make_dictionary({Feature6::Unit(0), Feature6::Unit(1)}, {Feature6::Unit(2)});
    SparseCode c;
    c.beta = Eigen::Vector3d(0.25, 0.35, 0.4);
    EXPECT_NEAR(alpha_from_code(c, d), 0.6, 1e-15);
    c.beta = Eigen::Vector3d(0.0, 0.0, 1.0);
    EXPECT_EQ(alpha_from_code(c, d), 0.0);
}

TEST(Confidence, PerfectReconstructionIsOne) {
    Dictionary d = make_dictionary({Feature6::Unit(0)}, {Feature6::Unit(1)});
    d.atom_rgb = {Rgb(1, 0, 0), Rgb(0, 0, 1)};
    SparseCode c;
    c.beta = Eigen::Vector2d(0.5, 0.5);
    c.residual = 0.0;
    const Confidence k = confidence(Feature6::Zero(), Rgb(0.5, 0, 0.5), c, d, 0.5);
    EXPECT_DOUBLE_EQ(k.sprec, 1.0);
    EXPECT_NEAR(k.colrec, 1.0, 1e-15);
    EXPECT_NEAR(k.gamma, 1.0, 1e-15);
}

TEST(Confidence, HandComputedExample) {
    Dictionary d = make_dictionary({Feature6::Unit(0)}, {Feature6::Unit(1)});
    d.atom_rgb = {Rgb(1, 0, 0), Rgb(0, 0, 1)};
    SparseCode c;
    c.beta = Eigen::Vector2d(0.25, 0.75);
    c.residual = 0.5;
    // composite = (0.25, 0, 0.75); pixel (0.5, 0, 0.5) differs by 0.25 in two channels.
    const Confidence k = confidence(Feature6::Zero(), Rgb(0.5, 0, 0.5), c, d, 0.25);
    EXPECT_NEAR(k.sprec, std::exp(-0.25), 1e-15);
    EXPECT_NEAR(k.colrec, std::exp(-0.125), 1e-15);
    EXPECT_NEAR(k.gamma, std::exp(-0.375), 1e-15);
}

TEST(PairwiseAlpha, ProjectsAndClamps) {
    const Rgb F(1, 0, 0);
    const Rgb B(0, 0, 1);
    EXPECT_NEAR(*pairwise_alpha(Rgb(0.3, 0, 0.7), F, B), 0.3, 1e-15);
    EXPECT_EQ(*pairwise_alpha(Rgb(2, 0, -1), F, B), 1.0);
    EXPECT_EQ(*pairwise_alpha(Rgb(-1, 0, 2), F, B), 0.0);
    EXPECT_FALSE(pairwise_alpha(Rgb(0.3, 0.3, 0.3), F, F).has_value());
}

// --- whole-image estimate ----------------------------------------------------------------------------

namespace {

struct Fixture {
    RasterImage image;
    Trimap trimap;
    SampleBank bank;
};

Fixture strip(double mix) {
    // Red left block, blue right block, middle column pair blended.
    const int w = 12;
    const int h = 6;
    std::vector<Rgb> px;
    std::vector<Label> labels;
    const Rgb red(0.9, 0.1, 0.1);
    const Rgb blue(0.1, 0.1, 0.9);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (x < 5) {
                px.push_back(red);
                labels.push_back(Label::Foreground);
            } else if (x > 6) {
                px.push_back(blue);
                labels.push_back(Label::Background);
            } else {
                px.push_back(mix * red + (1.0 - mix) * blue);
                labels.push_back(Label::Unknown);
            }
        }
    }
    RasterImage image(w, h, px);
    Trimap trimap(w, h, labels);
    SampleBank bank({make_sample(Label::Foreground, 2, 2.5, red), make_sample(Label::Background, 9, 2.5, blue)});
    return {std::move(image), std::move(trimap), std::move(bank)};
}

}  // namespace

TEST(EstimateAll, BlendedStripRecoversMix) {
    const Fixture fx = strip(0.5);
    const ProbabilityMap pm = foreground_probability(fx.image, fx.trimap, fx.bank);
    const CertaintyMask cm = classify_certainty(pm);
    const EstimateMap est = estimate_all(fx.image, fx.trimap, fx.bank, cm, pm);
    EXPECT_EQ(est.diagnostics.coded, 12U);
    for (std::size_t i = 0; i < fx.image.size(); ++i) {
        const PixelEstimate& e = est.pixels[i];
        if (fx.trimap[i] == Label::Foreground) {
            EXPECT_EQ(e.alpha_hat, 1.0);
            EXPECT_EQ(e.gamma, 1.0);
        } else if (fx.trimap[i] == Label::Background) {
            EXPECT_EQ(e.alpha_hat, 0.0);
        } else {
            EXPECT_NEAR(e.alpha_hat, 0.5, 0.05);
            EXPECT_GT(e.gamma, 0.0);
            EXPECT_LE(e.gamma, 1.0);
        }
    }
}

TEST(EstimateAll, NoUnknownPixelsCodesNothing) {
    const RasterImage img(2, 1, Rgb(0.5, 0.5, 0.5));
    const Trimap t(2, 1, {Label::Foreground, Label::Background});
    const ProbabilityMap pm{img.extent(), {0, 0}, {0, 0}};
    const CertaintyMask cm{img.extent(), {Certainty::None, Certainty::None}};
    const EstimateMap est = estimate_all(img, t, SampleBank(), cm, pm);
    EXPECT_EQ(est.diagnostics.coded, 0U);
    EXPECT_EQ(est.pixels[0].alpha_hat, 1.0);
    EXPECT_EQ(est.pixels[1].alpha_hat, 0.0);
}

TEST(EstimateAll, AlphaAndGammaStayInUnitInterval) {
    std::mt19937 rng(8);
    const RasterImage img = oracle::random_image(10, 8, rng);
    std::vector<Label> labels(80, Label::Unknown);
    std::vector<Sample> samples;
    for (int i = 0; i < 12; ++i) {
        samples.push_back(make_sample(i % 2 ? Label::Foreground : Label::Background, i % 10, i % 8,
                                      img[static_cast<std::size_t>(i * 6)]));
    }
    const Trimap t(10, 8, labels);
    const SampleBank bank(samples);
    const ProbabilityMap pm = foreground_probability(img, t, bank);
    const EstimateMap est = estimate_all(img, t, bank, classify_certainty(pm), pm);
    for (const auto& e : est.pixels) {
        EXPECT_GE(e.alpha_hat, 0.0);
        EXPECT_LE(e.alpha_hat, 1.0);
        EXPECT_GT(e.gamma, 0.0);
        EXPECT_LE(e.gamma, 1.0);
    }
}
