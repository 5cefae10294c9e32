/**
 * @file sparse_code.hpp
 * @brief Per-pixel dictionaries, simplex-constrained sparse coding and alpha/confidence extraction.
 */
#pragma once

#include <sparsematte/certainty.hpp>
#include <sparsematte/imaging.hpp>
#include <sparsematte/preprocess.hpp>

#include <Eigen/Core>

#include <optional>
#include <vector>

namespace sparsematte {

using AtomMatrix = Eigen::Matrix<double, 6, Eigen::Dynamic>;

/// Atoms ordered F-block then B-block.
struct Dictionary {
    AtomMatrix atoms;
    std::vector<Rgb> atom_rgb;            // mean color of each atom's superpixel
    std::size_t f_count = 0;
    std::size_t b_count = 0;
    std::vector<std::size_t> source_indices;  // into the SampleBank

    [[nodiscard]] std::size_t size() const { return f_count + b_count; }
};

struct DictionaryParams {
    std::size_t n_high = 40;          // per label, high-certainty pixels
    double low_fraction = 1.0 / 3.0;  // of the bank, low-certainty pixels
};

/// High: the n_high spatially closest samples of each label. Low: the ceil(low_fraction*|bank|)
/// closest samples of any label, plus the closest sample of a label that ended up absent.
Dictionary build_dictionary(Pixel pixel, Certainty certainty, const SampleBank& bank,
                            const DictionaryParams& params = {});

/// Dictionary from explicit F and B feature columns (tests, oracles).
Dictionary make_dictionary(const std::vector<Feature6>& f_atoms, const std::vector<Feature6>& b_atoms);

struct SparseCode {
    Eigen::VectorXd beta;
    double residual = 0.0;   // |v - D beta| of the optimizer output
    double objective = 0.0;  // residual^2
    double gap = 0.0;        // Frank-Wolfe duality gap at beta, bounds objective - optimum
    int iterations = 0;
    bool converged = false;
    bool degenerate = false;  // sum(beta) == 0; alpha cannot be read from the code

    [[nodiscard]] double sum() const { return beta.sum(); }
};

struct CodeSolverParams {
    double tol = 1e-6;
    int max_iter = 500;
    /// Replace a non-converged iterate with the exact corral (min-norm point) solution.
    bool exact_finish = true;
};

/// argmin |v - D beta|^2 s.t. beta >= 0, sum(beta) <= 1 by accelerated projected gradient
/// (adaptive restart, exact projection). Converged when the duality gap is <= tol; otherwise the
/// best iterate is returned with converged = false.
SparseCode solve_code(const Feature6& v, const Dictionary& dict, const CodeSolverParams& params = {});

/// Same solver on an arbitrary atom matrix.
SparseCode solve_code(const Feature6& v, const AtomMatrix& atoms, const CodeSolverParams& params = {});

/// Euclidean projection onto {x >= 0, sum(x) <= 1}.
Eigen::VectorXd project_capped_simplex(const Eigen::VectorXd& y);

/// Rescales beta to sum 1; a zero code is returned unchanged with degenerate = true.
SparseCode normalize_code(SparseCode code);

/// Sum of the F-block coefficients, clamped to [0,1].
double alpha_from_code(const SparseCode& code, const Dictionary& dict);

struct Confidence {
    double gamma = 1.0;
    double sprec = 1.0;
    double colrec = 1.0;
};

/// gamma_sprec = exp(-residual^2) with the pre-normalization residual carried by `code`;
/// gamma_colrec = exp(-|I - (alpha F^ + (1-alpha) B^)|^2) with F^, B^ the code-weighted mean
/// atom colors (a side with zero weight is dropped).
Confidence confidence(const Feature6& v, const Rgb& pixel_rgb, const SparseCode& code, const Dictionary& dict,
                      double alpha_hat);

/// ((I-B).(F-B)) / |F-B|^2 clamped to [0,1]; nullopt when F == B.
std::optional<double> pairwise_alpha(const Rgb& I, const Rgb& F, const Rgb& B);

struct PixelEstimate {
    double alpha_hat = 0.0;
    double gamma = 1.0;
    double gamma_sprec = 1.0;
    double gamma_colrec = 1.0;
};

struct EstimateParams {
    DictionaryParams dictionary;
    CodeSolverParams solver;
    double fallback_gamma = 1e-3;  // confidence of a pixel whose code is all zero
};

struct EstimateDiagnostics {
    std::size_t coded = 0;          // Unknown pixels that were sparse coded
    std::size_t normalized = 0;     // codes whose sum differed from 1 by more than 1e-9
    std::size_t fallback = 0;       // all-zero codes
    std::size_t not_converged = 0;  // solver hit max_iter
};

struct EstimateMap {
    Extent extent;
    std::vector<PixelEstimate> pixels;
    EstimateDiagnostics diagnostics;
};

/// Initial alpha and confidence for every pixel: known pixels get 1/0 with gamma 1, Unknown
/// pixels are coded against their dictionary. `pmap` drives the zero-code fallback.
EstimateMap estimate_all(const RasterImage& image, const Trimap& trimap, const SampleBank& bank,
                         const CertaintyMask& mask, const ProbabilityMap& pmap, const EstimateParams& params = {});

}  // namespace sparsematte
