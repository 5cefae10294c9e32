/**
 * @file graph.hpp
 * @brief Matting graph: spatial Laplacian and KNN affinities, confidence-weighted data edges
 *        to two clamped virtual nodes, and the closed-form solve of the graph energy.
 */
#pragma once

#include <sparsematte/imaging.hpp>
#include <sparsematte/sparse_code.hpp>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <filesystem>
#include <vector>

namespace sparsematte {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Feature5 = Eigen::Matrix<double, 5, 1>;

/// Raw Laplacian accumulation over every 3x3 window (fully inside the image) that contains an
/// Unknown pixel: sum_k [delta_ij - (1 + (I_i-mu_k)^T (Sigma_k + eps/9 I)^-1 (I_j-mu_k)) / 9].
/// Pixel-indexed, diagonal included.
SparseMatrix laplacian_accumulate(const RasterImage& image, const Trimap& trimap, double eps = 1e-7);

/// Affinity form of laplacian_accumulate(): W_lap(i,j) = max(0, -value) off the diagonal.
SparseMatrix laplacian_weights(const RasterImage& image, const Trimap& trimap, double eps = 1e-7);

/// KNN affinity over an explicit feature list: 1 - |X_i - X_j| / sigma with sigma the largest
/// selected neighbor distance, symmetrized by max. Throws InvalidArgument with <= K points.
SparseMatrix knn_affinity(const std::vector<Feature5>& features, int K = 12);

/// (R, G, B, x/width, y/height) of a pixel.
Feature5 knn_feature(const RasterImage& image, Pixel p);

/// knn_affinity() over `nodes` (pixel indices); the result is indexed by position in `nodes`.
SparseMatrix knn_weights(const RasterImage& image, const std::vector<std::size_t>& nodes, int K = 12);

/// Unknown pixels plus every known pixel within Chebyshev distance `collar` of one, row-major.
std::vector<std::size_t> graph_nodes(const Trimap& trimap, int collar = 2);

struct GraphParams {
    int K = 12;
    double eps = 1e-7;
    double lambda = 100.0;
    bool use_laplacian = true;
    bool use_knn = true;
};

/// Linear system ingredients over the graph nodes. Virtual nodes are not materialized: their
/// data weights sit in w_fg / w_bg and their clamped values (1 and 0) enter the right-hand side.
struct MatteSystem {
    Extent extent;
    int frames = 1;
    std::vector<std::size_t> node_pixels;  // global index frame * n + pixel, per node
    SparseMatrix pairwise;                 // symmetric W_knn + W_lap, node-indexed, zero diagonal
    Eigen::VectorXd w_fg;                  // gamma * alpha_hat
    Eigen::VectorXd w_bg;                  // gamma * (1 - alpha_hat)
    Eigen::VectorXd h;                     // user constraint (1 / 0) on constrained nodes
    std::vector<std::uint8_t> constrained;  // membership in the trimap-known set
    Eigen::VectorXd initial;               // alpha_hat per node
    std::vector<Label> labels;             // trimap label of every global pixel
    double lambda = 100.0;

    [[nodiscard]] Eigen::Index nodes() const { return static_cast<Eigen::Index>(node_pixels.size()); }
};

/// Builds a system from node-indexed pairwise weights and per-pixel estimates.
MatteSystem make_system(const Extent& extent, std::vector<const Trimap*> trimaps,
                        std::vector<const EstimateMap*> estimates, std::vector<std::size_t> node_pixels,
                        SparseMatrix pairwise, double lambda);

/// Image graph: W_knn + W_lap (either removable) on graph_nodes(trimap) plus data edges.
MatteSystem assemble(const RasterImage& image, const Trimap& trimap, const EstimateMap& estimates,
                     const GraphParams& params = {});

/// L with L_ii = sum_j W_ij + W_iF + W_iB and L_ij = -W_ij.
SparseMatrix graph_operator(const MatteSystem& system);

struct NormalEquations {
    SparseMatrix matrix;  // L^T L + lambda Gamma
    Eigen::VectorXd rhs;  // L^T w_fg + lambda Gamma H  (L^T w_fg + H when as_printed)
};

NormalEquations normal_equations(const MatteSystem& system, bool rhs_as_printed = false);

/// lambda sum_V (alpha_i - h_i)^2 + |L alpha - w_fg|^2: the graph energy with virtual nodes at 1 / 0.
double graph_energy(const MatteSystem& system, const Eigen::VectorXd& alpha);

struct SolveParams {
    double tol = 1e-7;
    int max_iter = 2000;
    bool rhs_as_printed = false;
};

struct SolveStats {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = true;
};

/// Jacobi-preconditioned conjugate gradient, stopping at |r| / |b| <= tol.
SolveStats conjugate_gradient(const SparseMatrix& A, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                              double tol = 1e-7, int max_iter = 2000);

struct MatteSolution {
    std::vector<Matte> mattes;  // one per frame
    Eigen::VectorXd node_alpha;  // unclamped solver output
    SolveStats stats;
};

/// Solves the normal equations from the initial estimate, clamps to [0,1] and pins
/// trimap-known pixels to 1 / 0. Non-convergence is reported in stats, not thrown.
MatteSolution solve_matte(const MatteSystem& system, const SolveParams& params = {});

/// Writes "row col value" lines for the normal matrix and the right-hand side to
/// `<path>` and `<path>.rhs`.
void write_system_triplets(const NormalEquations& eq, const std::filesystem::path& path);

}  // namespace sparsematte
