/**
 * @file sparse_code.cpp
 * @brief Dictionary construction, constrained sparse coding and the initial estimate.
 */

#include <sparsematte/error.hpp>
#include <sparsematte/sparse_code.hpp>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace sparsematte {

namespace {

Dictionary dictionary_from_indices(const SampleBank& bank, const std::vector<std::size_t>& f_idx,
                                   const std::vector<std::size_t>& b_idx) {
    Dictionary dict;
    dict.f_count = f_idx.size();
    dict.b_count = b_idx.size();
    dict.atoms.resize(6, static_cast<Eigen::Index>(dict.size()));
    dict.atom_rgb.reserve(dict.size());
    dict.source_indices.reserve(dict.size());
    Eigen::Index col = 0;
    for (const auto* block : {&f_idx, &b_idx}) {
        for (std::size_t i : *block) {
            dict.atoms.col(col++) = bank[i].feature;
            dict.atom_rgb.push_back(bank[i].mean_rgb);
            dict.source_indices.push_back(i);
        }
    }
    return dict;
}

}  // namespace

// =============================================================================
// Dictionary
// =============================================================================

Dictionary build_dictionary(Pixel pixel, Certainty certainty, const SampleBank& bank,
                            const DictionaryParams& params) {
    bank.require_both_labels();
    const Eigen::Vector2d at(pixel.x, pixel.y);

    if (certainty != Certainty::Low) {
        return dictionary_from_indices(bank, nearest_samples(bank, at, params.n_high, Label::Foreground),
                                       nearest_samples(bank, at, params.n_high, Label::Background));
    }

    const double want = std::ceil(params.low_fraction * static_cast<double>(bank.size()) - 1e-9);
    const auto k = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(want, 1.0)), 1, bank.size());
    std::vector<std::size_t> f_idx;
    std::vector<std::size_t> b_idx;
    for (std::size_t i : nearest_samples(bank, at, k)) {
        (bank[i].label == Label::Foreground ? f_idx : b_idx).push_back(i);
    }
    // Each label needs at least one atom: the missing label's closest sample takes the slot of
    // the farthest atom of the other label (or is appended when the dictionary has one atom).
    auto rebalance = [&](std::vector<std::size_t>& missing, std::vector<std::size_t>& other, Label label) {
        if (!missing.empty()) {
            return;
        }
        missing = nearest_samples(bank, at, 1, label);
        if (other.size() > 1) {
            other.pop_back();
        }
    };
    rebalance(f_idx, b_idx, Label::Foreground);
    rebalance(b_idx, f_idx, Label::Background);
    return dictionary_from_indices(bank, f_idx, b_idx);
}

Dictionary make_dictionary(const std::vector<Feature6>& f_atoms, const std::vector<Feature6>& b_atoms) {
    Dictionary dict;
    dict.f_count = f_atoms.size();
    dict.b_count = b_atoms.size();
    dict.atoms.resize(6, static_cast<Eigen::Index>(dict.size()));
    Eigen::Index col = 0;
    for (const auto* block : {&f_atoms, &b_atoms}) {
        for (const Feature6& a : *block) {
            dict.atoms.col(col) = a;
            dict.atom_rgb.push_back(a.head<3>());
            dict.source_indices.push_back(static_cast<std::size_t>(col));
            ++col;
        }
    }
    return dict;
}

// =============================================================================
// Constrained sparse coding
// =============================================================================

Eigen::VectorXd project_capped_simplex(const Eigen::VectorXd& y) {
    Eigen::VectorXd x = y.cwiseMax(0.0);
    if (x.sum() <= 1.0) {
        return x;
    }
    // The projection lies on the face sum(x) = 1: standard sort-based simplex projection.
    std::vector<double> u(y.data(), y.data() + y.size());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumsum = 0.0;
    double theta = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        cumsum += u[j];
        const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
        if (u[j] - t > 0.0) {
            theta = t;
        }
    }
    return (y.array() - theta).cwiseMax(0.0).matrix();
}

namespace {

constexpr int kWolfeMaxSteps = 4000;

/// Exact minimizer of |v - D beta| over {beta >= 0, sum(beta) <= 1}: the min-norm point of
/// conv{-v, d_j - v}, found with Wolfe's corral algorithm. Point 0 is the slack vertex.
Eigen::VectorXd min_norm_point(const Feature6& v, const AtomMatrix& D) {
    const Eigen::Index n = D.cols();
    auto point = [&](Eigen::Index i) -> Feature6 { return i == 0 ? Feature6(-v) : Feature6(D.col(i - 1) - v); };
    double scale = v.squaredNorm();
    Eigen::Index start = 0;
    for (Eigen::Index i = 1; i <= n; ++i) {
        const double q = point(i).squaredNorm();
        scale = std::max(scale, q);
        if (q < point(start).squaredNorm()) {
            start = i;
        }
    }
    std::vector<Eigen::Index> corral{start};
    std::vector<double> lambda{1.0};
    Feature6 x = point(start);

    auto affine_minimizer = [&](const std::vector<Eigen::Index>& set) {
        const auto s = static_cast<Eigen::Index>(set.size());
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(s + 1, s + 1);
        for (Eigen::Index a = 0; a < s; ++a) {
            for (Eigen::Index b = 0; b < s; ++b) {
                kkt(a, b) = point(set[static_cast<std::size_t>(a)]).dot(point(set[static_cast<std::size_t>(b)]));
            }
        }
        kkt.col(s).head(s).setOnes();
        kkt.row(s).head(s).setOnes();
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(s + 1);
        rhs[s] = 1.0;
        return Eigen::VectorXd(kkt.completeOrthogonalDecomposition().solve(rhs).head(s));
    };

    for (int step = 0; step < kWolfeMaxSteps; ++step) {
        Eigen::Index entering = 0;
        double lowest = x.dot(point(0));
        for (Eigen::Index i = 1; i <= n; ++i) {
            const double d = x.dot(point(i));
            if (d < lowest) {
                lowest = d;
                entering = i;
            }
        }
        const bool in_corral = std::find(corral.begin(), corral.end(), entering) != corral.end();
        if (x.squaredNorm() - lowest <= 1e-15 * scale || in_corral) {
            break;
        }
        corral.push_back(entering);
        lambda.push_back(0.0);

        for (int minor = 0; minor < static_cast<int>(corral.size()) + 1; ++minor) {
            const Eigen::VectorXd mu = affine_minimizer(corral);
            if (!mu.allFinite()) {
                break;
            }
            if (mu.minCoeff() > 0.0) {
                lambda.assign(mu.data(), mu.data() + mu.size());
                break;
            }
            // Step from lambda toward mu until the first weight reaches zero.
            double theta = 1.0;
            for (std::size_t k = 0; k < corral.size(); ++k) {
                if (mu[static_cast<Eigen::Index>(k)] <= 0.0) {
                    const double denom = lambda[k] - mu[static_cast<Eigen::Index>(k)];
                    if (denom > 0.0) {
                        theta = std::min(theta, lambda[k] / denom);
                    }
                }
            }
            std::vector<Eigen::Index> kept;
            std::vector<double> kept_lambda;
            for (std::size_t k = 0; k < corral.size(); ++k) {
                const double w = (1.0 - theta) * lambda[k] + theta * mu[static_cast<Eigen::Index>(k)];
                if (w > 1e-15) {
                    kept.push_back(corral[k]);
                    kept_lambda.push_back(w);
                }
            }
            corral = std::move(kept);
            lambda = std::move(kept_lambda);
            const double total = std::accumulate(lambda.begin(), lambda.end(), 0.0);
            for (double& w : lambda) {
                w /= total;
            }
        }
        x.setZero();
        for (std::size_t k = 0; k < corral.size(); ++k) {
            x += lambda[k] * point(corral[k]);
        }
    }

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < corral.size(); ++k) {
        if (corral[k] > 0) {
            beta[corral[k] - 1] = lambda[k];
        }
    }
    return beta;
}

}  // namespace

SparseCode solve_code(const Feature6& v, const AtomMatrix& D, const CodeSolverParams& params) {
    const Eigen::Index n = D.cols();
    if (n == 0) {
        throw InvalidArgument("solve_code: empty dictionary");
    }

    auto gradient_at = [&](const Eigen::VectorXd& b, double& objective) {
        const Feature6 r = D * b - v;
        objective = r.squaredNorm();
        return Eigen::VectorXd(2.0 * (D.transpose() * r));
    };
    // Upper bound on f(b) - f*: max over the polytope's vertices {0, e_j} of g.(b - s).
    auto duality_gap = [](const Eigen::VectorXd& b, const Eigen::VectorXd& g) {
        return std::max(0.0, g.dot(b) - std::min(0.0, g.minCoeff()));
    };

    SparseCode code;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(n);
    double f = 0.0;
    Eigen::VectorXd g = gradient_at(beta, f);
    Eigen::VectorXd best = beta;
    double best_f = f;
    double best_gap = duality_gap(beta, g);

    const Eigen::Matrix<double, 6, 6> gram = D * D.transpose();
    const double lipschitz = 2.0 * Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>>(
                                       gram, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();

    int iter = 0;
    if (best_gap > params.tol && lipschitz > 0.0) {
        Eigen::VectorXd z = beta;
        double t = 1.0;
        while (iter < params.max_iter) {
            ++iter;
            double fz = 0.0;
            const Eigen::VectorXd gz = gradient_at(z, fz);
            const Eigen::VectorXd next = project_capped_simplex(z - gz / lipschitz);

            double fn = 0.0;
            const Eigen::VectorXd gn = gradient_at(next, fn);
            const double gap = duality_gap(next, gn);
            if (fn < best_f || (fn == best_f && gap < best_gap)) {
                best = next;
                best_f = fn;
                best_gap = gap;
            }
            if (gap <= params.tol) {
                break;
            }
            // Gradient-based adaptive restart of the momentum sequence.
            if ((z - next).dot(next - beta) > 0.0) {
                t = 1.0;
                z = next;
            } else {
                const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
                z = next + ((t - 1.0) / t_next) * (next - beta);
                t = t_next;
            }
            beta = next;
        }
    }
    if (params.exact_finish && best_gap > params.tol) {
        const Eigen::VectorXd exact = min_norm_point(v, D);
        double fe = 0.0;
        const Eigen::VectorXd ge = gradient_at(exact, fe);
        const double gap = duality_gap(exact, ge);
        if (gap < best_gap) {
            best = exact;
            best_f = fe;
            best_gap = gap;
        }
    }

    code.beta = best;
    code.objective = best_f;
    code.residual = std::sqrt(best_f);
    code.gap = best_gap;
    code.iterations = iter;
    code.converged = best_gap <= params.tol;
    return code;
}

SparseCode solve_code(const Feature6& v, const Dictionary& dict, const CodeSolverParams& params) {
    return solve_code(v, dict.atoms, params);
}

SparseCode normalize_code(SparseCode code) {
    const double s = code.beta.sum();
    // Sums at rounding-noise level carry no alpha information.
    if (!(s > 1e-12)) {
        code.degenerate = true;
        return code;
    }
    code.beta /= s;
    return code;
}

double alpha_from_code(const SparseCode& code, const Dictionary& dict) {
    const double f_mass = code.beta.head(static_cast<Eigen::Index>(dict.f_count)).sum();
    return std::clamp(f_mass, 0.0, 1.0);
}

Confidence confidence(const Feature6& /*v*/, const Rgb& pixel_rgb, const SparseCode& code, const Dictionary& dict,
                      double alpha_hat) {
    Confidence c;
    c.sprec = std::exp(-code.residual * code.residual);

    Rgb f_sum = Rgb::Zero();
    Rgb b_sum = Rgb::Zero();
    for (std::size_t j = 0; j < dict.size(); ++j) {
        const double w = code.beta[static_cast<Eigen::Index>(j)];
        (j < dict.f_count ? f_sum : b_sum) += w * dict.atom_rgb[j];
    }
    Rgb composite = Rgb::Zero();
    if (alpha_hat > 0.0) {
        const Rgb f_hat = f_sum / alpha_hat;
        composite += alpha_hat * f_hat;
    }
    if (alpha_hat < 1.0) {
        const Rgb b_hat = b_sum / (1.0 - alpha_hat);
        composite += (1.0 - alpha_hat) * b_hat;
    }
    c.colrec = std::exp(-(pixel_rgb - composite).squaredNorm());
    c.gamma = c.sprec * c.colrec;
    return c;
}

std::optional<double> pairwise_alpha(const Rgb& I, const Rgb& F, const Rgb& B) {
    const Rgb fb = F - B;
    const double denom = fb.squaredNorm();
    if (denom == 0.0) {
        return std::nullopt;
    }
    return std::clamp((I - B).dot(fb) / denom, 0.0, 1.0);
}

// =============================================================================
// Initial estimate
// =============================================================================

EstimateMap estimate_all(const RasterImage& image, const Trimap& trimap, const SampleBank& bank,
                         const CertaintyMask& mask, const ProbabilityMap& pmap, const EstimateParams& params) {
    if (image.extent() != trimap.extent() || mask.extent != image.extent() || pmap.extent != image.extent()) {
        throw InvalidArgument("estimate_all: input dimensions differ");
    }
    EstimateMap out{image.extent(), std::vector<PixelEstimate>(image.size()), {}};
    if (trimap.count(Label::Unknown) > 0) {
        bank.require_both_labels();
    }
    for (std::size_t i = 0; i < image.size(); ++i) {
        PixelEstimate& est = out.pixels[i];
        if (trimap[i] != Label::Unknown) {
            est.alpha_hat = trimap[i] == Label::Foreground ? 1.0 : 0.0;
            continue;
        }
        const Pixel p = image.extent().pixel(i);
        const Certainty cert = mask.flags[i] == Certainty::Low ? Certainty::Low : Certainty::High;
        const Dictionary dict = build_dictionary(p, cert, bank, params.dictionary);
        const Feature6 v = feature_of(image[i]);
        const SparseCode raw = solve_code(v, dict, params.solver);
        ++out.diagnostics.coded;
        if (!raw.converged) {
            ++out.diagnostics.not_converged;
        }
        const SparseCode code = normalize_code(raw);
        if (code.degenerate) {
            ++out.diagnostics.fallback;
            est.alpha_hat = pmap.p[i] >= 0.5 ? 1.0 : 0.0;
            est.gamma = params.fallback_gamma;
            est.gamma_sprec = params.fallback_gamma;
            est.gamma_colrec = 1.0;
            continue;
        }
        if (std::abs(raw.sum() - 1.0) > 1e-9) {
            ++out.diagnostics.normalized;
        }
        est.alpha_hat = alpha_from_code(code, dict);
        const Confidence c = confidence(v, image[i], code, dict, est.alpha_hat);
        est.gamma = c.gamma;
        est.gamma_sprec = c.sprec;
        est.gamma_colrec = c.colrec;
    }
    return out;
}

}  // namespace sparsematte
