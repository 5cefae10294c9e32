/**
 * @file pipeline.hpp
 * @brief Single-image matting: expansion, sampling, certainty, sparse coding, graph solve.
 */
#pragma once

#include <sparsematte/certainty.hpp>
#include <sparsematte/graph.hpp>
#include <sparsematte/imaging.hpp>
#include <sparsematte/preprocess.hpp>
#include <sparsematte/sparse_code.hpp>

#include <optional>

namespace sparsematte {

struct MattingParams {
    PreprocessParams preprocess;
    ProbabilityParams probability;
    CertaintyParams certainty;
    EstimateParams estimate;
    GraphParams graph;
    SolveParams solve;
};

struct MattingResult {
    Matte matte;          // final graph solve
    Matte initial;        // alpha_hat
    Matte confidence;     // gamma
    Trimap expanded;
    std::optional<ProbabilityMap> probability;  // absent when nothing was Unknown
    std::size_t samples = 0;
    EstimateDiagnostics diagnostics;
    SolveStats solve;
};

/// Per-pixel estimate stage (expanded trimap, bank, probability, certainty, sparse codes).
struct InitialEstimate {
    Trimap expanded;
    SampleBank bank;
    std::optional<ProbabilityMap> probability;
    std::optional<CertaintyMask> certainty;
    EstimateMap estimates;
};

InitialEstimate estimate_image(const RasterImage& image, const Trimap& trimap, const MattingParams& params = {});

/// Full image pipeline. Throws InvalidArgument for a trimap lacking a known label.
MattingResult matte_image(const RasterImage& image, const Trimap& trimap, const MattingParams& params = {});

/// Matte of an EstimateMap's alpha_hat (or gamma) values.
Matte estimate_matte(const EstimateMap& estimates, bool gamma = false);

}  // namespace sparsematte
