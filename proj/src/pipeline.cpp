#include <sparsematte/error.hpp>
#include <sparsematte/pipeline.hpp>

namespace sparsematte {

Matte estimate_matte(const EstimateMap& estimates, bool gamma) {
    std::vector<double> values(estimates.pixels.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = gamma ? estimates.pixels[i].gamma : estimates.pixels[i].alpha_hat;
    }
    return Matte(estimates.extent.width, estimates.extent.height, std::move(values));
}

InitialEstimate estimate_image(const RasterImage& image, const Trimap& trimap, const MattingParams& params) {
    if (image.extent() != trimap.extent()) {
        throw InvalidArgument("image and trimap dimensions differ");
    }
    trimap.require_both_known_labels();
    InitialEstimate out{expand_known_regions(image, trimap, params.preprocess.expansion), SampleBank{},
                        std::nullopt, std::nullopt, EstimateMap{}};

    if (out.expanded.count(Label::Unknown) == 0) {
        const ProbabilityMap empty{image.extent(), std::vector<double>(image.size(), 0.0),
                                   std::vector<std::uint8_t>(image.size(), 0)};
        const CertaintyMask none{image.extent(), std::vector<Certainty>(image.size(), Certainty::None)};
        out.estimates = estimate_all(image, out.expanded, out.bank, none, empty, params.estimate);
        return out;
    }
    out.bank = universal_sample_set(image, out.expanded, params.preprocess);
    out.probability = foreground_probability(image, out.expanded, out.bank, params.probability);
    out.certainty = classify_certainty(*out.probability, params.certainty);
    out.estimates = estimate_all(image, out.expanded, out.bank, *out.certainty, *out.probability, params.estimate);
    return out;
}

MattingResult matte_image(const RasterImage& image, const Trimap& trimap, const MattingParams& params) {
    InitialEstimate stage = estimate_image(image, trimap, params);
    const MatteSystem system = assemble(image, stage.expanded, stage.estimates, params.graph);
    MatteSolution solution = solve_matte(system, params.solve);

    MattingResult result{std::move(solution.mattes.front()), estimate_matte(stage.estimates),
                         estimate_matte(stage.estimates, true), std::move(stage.expanded),
                         std::move(stage.probability), stage.bank.size(), stage.estimates.diagnostics,
                         solution.stats};
    return result;
}

}  // namespace sparsematte
