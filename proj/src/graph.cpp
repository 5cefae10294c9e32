/**
 * @file graph.cpp
 * @brief Affinity assembly and the closed-form matte solve.
 */

#include <sparsematte/error.hpp>
#include <sparsematte/graph.hpp>
#include <sparsematte/kdtree.hpp>
#include <sparsematte/preprocess.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace sparsematte {

using Triplet = Eigen::Triplet<double>;

// =============================================================================
// Spatial (matting Laplacian) affinity
// =============================================================================

SparseMatrix laplacian_accumulate(const RasterImage& image, const Trimap& trimap, double eps) {
    if (image.extent() != trimap.extent()) {
        throw InvalidArgument("laplacian_weights: image and trimap dimensions differ");
    }
    const Extent& ext = image.extent();
    const auto n = static_cast<Eigen::Index>(ext.size());
    std::vector<Triplet> triplets;

    for (int cy = 1; cy + 1 < ext.height; ++cy) {
        for (int cx = 1; cx + 1 < ext.width; ++cx) {
            std::array<std::size_t, 9> idx{};
            bool touches_unknown = false;
            int k = 0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    idx[k] = ext.index({cx + dx, cy + dy});
                    touches_unknown = touches_unknown || trimap[idx[k]] == Label::Unknown;
                    ++k;
                }
            }
            if (!touches_unknown) {
                continue;
            }
            Eigen::Vector3d mean = Eigen::Vector3d::Zero();
            Eigen::Matrix3d second = Eigen::Matrix3d::Zero();
            for (std::size_t i : idx) {
                mean += image[i];
                second += image[i] * image[i].transpose();
            }
            mean /= 9.0;
            const Eigen::Matrix3d cov = second / 9.0 - mean * mean.transpose();
            const Eigen::Matrix3d inv = (cov + (eps / 9.0) * Eigen::Matrix3d::Identity()).inverse();

            std::array<Eigen::Vector3d, 9> centered;
            for (int a = 0; a < 9; ++a) {
                centered[a] = image[idx[a]] - mean;
            }
            for (int a = 0; a < 9; ++a) {
                const Eigen::Vector3d row = inv * centered[a];
                for (int b = 0; b < 9; ++b) {
                    const double value = (a == b ? 1.0 : 0.0) - (1.0 + row.dot(centered[b])) / 9.0;
                    triplets.emplace_back(static_cast<Eigen::Index>(idx[a]), static_cast<Eigen::Index>(idx[b]),
                                          value);
                }
            }
        }
    }
    SparseMatrix m(n, n);
    m.setFromTriplets(triplets.begin(), triplets.end());
    return m;
}

SparseMatrix laplacian_weights(const RasterImage& image, const Trimap& trimap, double eps) {
    SparseMatrix acc = laplacian_accumulate(image, trimap, eps);
    std::vector<Triplet> triplets;
    triplets.reserve(static_cast<std::size_t>(acc.nonZeros()));
    for (Eigen::Index col = 0; col < acc.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(acc, col); it; ++it) {
            if (it.row() != it.col() && -it.value() > 0.0) {
                triplets.emplace_back(it.row(), it.col(), -it.value());
            }
        }
    }
    SparseMatrix w(acc.rows(), acc.cols());
    w.setFromTriplets(triplets.begin(), triplets.end());
    return w;
}

// =============================================================================
// Feature-space (KNN) affinity
// =============================================================================

Feature5 knn_feature(const RasterImage& image, Pixel p) {
    const Rgb& c = image.at(p);
    Feature5 f;
    f << c[0], c[1], c[2], static_cast<double>(p.x) / image.width(), static_cast<double>(p.y) / image.height();
    return f;
}

SparseMatrix knn_affinity(const std::vector<Feature5>& features, int K) {
    const auto n = features.size();
    if (K < 1 || n <= static_cast<std::size_t>(K)) {
        throw InvalidArgument("knn_affinity: need more than K=" + std::to_string(K) + " nodes, got " +
                              std::to_string(n));
    }
    const KdTree<5> tree(features);
    struct Edge {
        std::uint32_t i;
        std::uint32_t j;
        double dist;
    };
    std::vector<Edge> edges;
    edges.reserve(n * static_cast<std::size_t>(K));
    double sigma = 0.0;
    const auto cap = static_cast<int>(n) - 1;
    for (std::uint32_t i = 0; i < n; ++i) {
        // Every point tied with the K-th distance is a neighbor, so the graph does not depend on
        // point order.
        int k = K;
        auto nearest = tree.neighbors_of(i, k);
        const double kth = nearest.back().first;
        while (nearest.back().first == kth && k < cap) {
            k = std::min(cap, 2 * k);
            nearest = tree.neighbors_of(i, k);
        }
        while (nearest.back().first > kth) {
            nearest.pop_back();
        }
        for (const auto& [d2, j] : nearest) {
            const double d = std::sqrt(d2);
            sigma = std::max(sigma, d);
            edges.push_back({std::min(i, j), std::max(i, j), d});
        }
    }
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
        return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    // Both directions of a pair carry the same distance, so max-symmetrization is a union.
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [](const Edge& a, const Edge& b) { return a.i == b.i && a.j == b.j; }),
                edges.end());

    std::vector<Triplet> triplets;
    triplets.reserve(2 * edges.size());
    for (const Edge& e : edges) {
        const double w = sigma > 0.0 ? 1.0 - e.dist / sigma : 1.0;
        if (w > 0.0) {
            triplets.emplace_back(e.i, e.j, w);
            triplets.emplace_back(e.j, e.i, w);
        }
    }
    SparseMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    m.setFromTriplets(triplets.begin(), triplets.end());
    return m;
}

SparseMatrix knn_weights(const RasterImage& image, const std::vector<std::size_t>& nodes, int K) {
    std::vector<Feature5> features;
    features.reserve(nodes.size());
    for (std::size_t idx : nodes) {
        features.push_back(knn_feature(image, image.extent().pixel(idx)));
    }
    return knn_affinity(features, K);
}

// =============================================================================
// Assembly
// =============================================================================

std::vector<std::size_t> graph_nodes(const Trimap& trimap, int collar) {
    const std::vector<int> dist = chebyshev_distance(trimap, Label::Unknown);
    std::vector<std::size_t> nodes;
    for (std::size_t i = 0; i < trimap.size(); ++i) {
        if (dist[i] <= collar) {
            nodes.push_back(i);
        }
    }
    return nodes;
}

MatteSystem make_system(const Extent& extent, std::vector<const Trimap*> trimaps,
                        std::vector<const EstimateMap*> estimates, std::vector<std::size_t> node_pixels,
                        SparseMatrix pairwise, double lambda) {
    if (trimaps.size() != estimates.size() || trimaps.empty()) {
        throw InvalidArgument("make_system: one trimap and one estimate map per frame required");
    }
    const auto n_nodes = static_cast<Eigen::Index>(node_pixels.size());
    if (pairwise.rows() != n_nodes || pairwise.cols() != n_nodes) {
        throw InvalidArgument("make_system: pairwise matrix does not match the node count");
    }
    MatteSystem sys;
    sys.extent = extent;
    sys.frames = static_cast<int>(trimaps.size());
    sys.lambda = lambda;
    sys.labels.reserve(extent.size() * trimaps.size());
    for (const Trimap* t : trimaps) {
        if (t->extent() != extent) {
            throw InvalidArgument("make_system: trimap dimensions differ");
        }
        sys.labels.insert(sys.labels.end(), t->labels().begin(), t->labels().end());
    }
    sys.w_fg.resize(n_nodes);
    sys.w_bg.resize(n_nodes);
    sys.h = Eigen::VectorXd::Zero(n_nodes);
    sys.initial.resize(n_nodes);
    sys.constrained.assign(node_pixels.size(), 0);
    const std::size_t n = extent.size();
    for (Eigen::Index i = 0; i < n_nodes; ++i) {
        const std::size_t g = node_pixels[static_cast<std::size_t>(i)];
        const std::size_t frame = g / n;
        const std::size_t pixel = g % n;
        if (frame >= estimates.size()) {
            throw InvalidArgument("make_system: node outside the frame block");
        }
        const PixelEstimate& est = estimates[frame]->pixels[pixel];
        sys.w_fg[i] = est.gamma * est.alpha_hat;
        sys.w_bg[i] = est.gamma * (1.0 - est.alpha_hat);
        sys.initial[i] = est.alpha_hat;
        const Label label = sys.labels[g];
        if (label != Label::Unknown) {
            sys.constrained[static_cast<std::size_t>(i)] = 1;
            sys.h[i] = label == Label::Foreground ? 1.0 : 0.0;
        }
    }
    sys.node_pixels = std::move(node_pixels);
    sys.pairwise = std::move(pairwise);
    return sys;
}

MatteSystem assemble(const RasterImage& image, const Trimap& trimap, const EstimateMap& estimates,
                     const GraphParams& params) {
    if (image.extent() != trimap.extent() || estimates.extent != image.extent()) {
        throw InvalidArgument("assemble: input dimensions differ");
    }
    std::vector<std::size_t> nodes = graph_nodes(trimap);
    const auto n_nodes = static_cast<Eigen::Index>(nodes.size());

    SparseMatrix pairwise(n_nodes, n_nodes);
    if (params.use_knn && nodes.size() >= 2) {
        const int k = std::min<int>(params.K, static_cast<int>(nodes.size()) - 1);
        pairwise = knn_weights(image, nodes, k);
    }
    if (params.use_laplacian) {
        const SparseMatrix lap = laplacian_weights(image, trimap, params.eps);
        std::vector<Eigen::Index> node_of(image.size(), -1);
        for (Eigen::Index i = 0; i < n_nodes; ++i) {
            node_of[nodes[static_cast<std::size_t>(i)]] = i;
        }
        std::vector<Triplet> triplets;
        triplets.reserve(static_cast<std::size_t>(lap.nonZeros()));
        for (Eigen::Index col = 0; col < lap.outerSize(); ++col) {
            for (SparseMatrix::InnerIterator it(lap, col); it; ++it) {
                const Eigen::Index a = node_of[static_cast<std::size_t>(it.row())];
                const Eigen::Index b = node_of[static_cast<std::size_t>(it.col())];
                if (a < 0 || b < 0) {
                    throw Error("assemble: Laplacian edge leaves the graph node set");
                }
                triplets.emplace_back(a, b, it.value());
            }
        }
        SparseMatrix lap_nodes(n_nodes, n_nodes);
        lap_nodes.setFromTriplets(triplets.begin(), triplets.end());
        pairwise = pairwise + lap_nodes;
    }
    return make_system(image.extent(), {&trimap}, {&estimates}, std::move(nodes), std::move(pairwise),
                       params.lambda);
}

// =============================================================================
// Closed-form solve
// =============================================================================

SparseMatrix graph_operator(const MatteSystem& system) {
    const Eigen::Index n = system.nodes();
    const Eigen::VectorXd degree = system.pairwise * Eigen::VectorXd::Ones(n) + system.w_fg + system.w_bg;
    SparseMatrix diag(n, n);
    std::vector<Triplet> triplets;
    triplets.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        triplets.emplace_back(i, i, degree[i]);
    }
    diag.setFromTriplets(triplets.begin(), triplets.end());
    return diag - system.pairwise;
}

NormalEquations normal_equations(const MatteSystem& system, bool rhs_as_printed) {
    const Eigen::Index n = system.nodes();
    const SparseMatrix L = graph_operator(system);
    const SparseMatrix Lt = L.transpose();

    Eigen::VectorXd gamma_h = Eigen::VectorXd::Zero(n);
    std::vector<Triplet> triplets;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (system.constrained[static_cast<std::size_t>(i)] != 0) {
            triplets.emplace_back(i, i, system.lambda);
            gamma_h[i] = system.h[i];
        }
    }
    SparseMatrix lambda_gamma(n, n);
    lambda_gamma.setFromTriplets(triplets.begin(), triplets.end());

    NormalEquations eq;
    eq.matrix = SparseMatrix(Lt * L) + lambda_gamma;
    eq.rhs = Lt * system.w_fg + (rhs_as_printed ? gamma_h : Eigen::VectorXd(system.lambda * gamma_h));
    return eq;
}

double graph_energy(const MatteSystem& system, const Eigen::VectorXd& alpha) {
    const SparseMatrix L = graph_operator(system);
    double data = 0.0;
    for (Eigen::Index i = 0; i < system.nodes(); ++i) {
        if (system.constrained[static_cast<std::size_t>(i)] != 0) {
            const double d = alpha[i] - system.h[i];
            data += d * d;
        }
    }
    return system.lambda * data + (L * alpha - system.w_fg).squaredNorm();
}

SolveStats conjugate_gradient(const SparseMatrix& A, const Eigen::VectorXd& b, Eigen::VectorXd& x, double tol,
                              int max_iter) {
    SolveStats stats;
    const Eigen::Index n = A.rows();
    if (x.size() != n) {
        x = Eigen::VectorXd::Zero(n);
    }
    const double b_norm = b.norm();
    if (b_norm == 0.0) {
        x.setZero();
        return stats;
    }
    Eigen::VectorXd inv_diag(n);
    const Eigen::VectorXd diag = A.diagonal();
    for (Eigen::Index i = 0; i < n; ++i) {
        inv_diag[i] = diag[i] > 0.0 ? 1.0 / diag[i] : 1.0;
    }

    Eigen::VectorXd r = b - A * x;
    stats.relative_residual = r.norm() / b_norm;
    if (stats.relative_residual <= tol) {
        return stats;
    }
    Eigen::VectorXd z = inv_diag.cwiseProduct(r);
    Eigen::VectorXd p = z;
    double rz = r.dot(z);
    Eigen::VectorXd best = x;
    double best_res = stats.relative_residual;

    for (int iter = 1; iter <= max_iter; ++iter) {
        const Eigen::VectorXd q = A * p;
        const double pq = p.dot(q);
        if (!(pq > 0.0)) {
            break;  // breakdown: A not positive definite along p
        }
        const double step = rz / pq;
        x += step * p;
        r -= step * q;
        stats.iterations = iter;
        stats.relative_residual = r.norm() / b_norm;
        if (stats.relative_residual < best_res) {
            best_res = stats.relative_residual;
            best = x;
        }
        if (stats.relative_residual <= tol) {
            stats.converged = true;
            return stats;
        }
        z = inv_diag.cwiseProduct(r);
        const double rz_next = r.dot(z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    x = best;
    stats.relative_residual = best_res;
    stats.converged = best_res <= tol;
    return stats;
}

MatteSolution solve_matte(const MatteSystem& system, const SolveParams& params) {
    MatteSolution sol;
    const std::size_t n = system.extent.size();
    if (system.nodes() > 0) {
        const NormalEquations eq = normal_equations(system, params.rhs_as_printed);
        sol.node_alpha = system.initial;
        sol.stats = conjugate_gradient(eq.matrix, eq.rhs, sol.node_alpha, params.tol, params.max_iter);
    }

    std::vector<double> alpha(n * static_cast<std::size_t>(system.frames), 0.0);
    for (std::size_t g = 0; g < alpha.size(); ++g) {
        alpha[g] = system.labels[g] == Label::Foreground ? 1.0 : 0.0;
    }
    for (Eigen::Index i = 0; i < system.nodes(); ++i) {
        const std::size_t g = system.node_pixels[static_cast<std::size_t>(i)];
        if (system.labels[g] == Label::Unknown) {
            alpha[g] = std::clamp(sol.node_alpha[i], 0.0, 1.0);
        }
    }
    for (int f = 0; f < system.frames; ++f) {
        const auto begin = alpha.begin() + static_cast<std::ptrdiff_t>(n * static_cast<std::size_t>(f));
        sol.mattes.emplace_back(system.extent.width, system.extent.height,
                                std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(n)));
    }
    return sol;
}

void write_system_triplets(const NormalEquations& eq, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << std::setprecision(17);
    for (Eigen::Index col = 0; col < eq.matrix.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(eq.matrix, col); it; ++it) {
            out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
        }
    }
    std::ofstream rhs(path.string() + ".rhs");
    if (!rhs) {
        throw IoError("cannot write " + path.string() + ".rhs");
    }
    rhs << std::setprecision(17);
    for (Eigen::Index i = 0; i < eq.rhs.size(); ++i) {
        rhs << eq.rhs[i] << '\n';
    }
}

}  // namespace sparsematte
