/**
 * @file metrics.hpp
 * @brief Matte error metrics and compositing.
 */
#pragma once

#include <sparsematte/imaging.hpp>

#include <optional>
#include <string>
#include <vector>

namespace sparsematte {

/// Sum over `region` of |pred - gt|; whole frame when region is absent.
double sad(const Matte& pred, const Matte& gt, const std::optional<PixelMask>& region = std::nullopt);

/// Mean over `region` of (pred - gt)^2. Throws InvalidArgument on an empty region.
double mse(const Matte& pred, const Matte& gt, const std::optional<PixelMask>& region = std::nullopt);

/// Gaussian-derivative gradients (stdev sigma, replicated borders) of both mattes; sum over
/// `region` of |grad pred - grad gt|^2.
double gradient_error(const Matte& pred, const Matte& gt, const std::optional<PixelMask>& region = std::nullopt,
                      double sigma = 1.4);

/// Gradient field of a matte as used by gradient_error(): (d/dx, d/dy) per pixel.
struct GradientField {
    std::vector<double> gx;
    std::vector<double> gy;
};
GradientField gaussian_gradient(const Matte& matte, double sigma = 1.4);

/// 1-D kernels of gaussian_gradient(): smoothing g (sum 1) and derivative d with
/// sum_t t * d[t] = 1, both indexed by offset t in [-radius, radius].
struct GaussianKernels {
    int radius = 0;
    std::vector<double> smooth;
    std::vector<double> derivative;
};
GaussianKernels gaussian_kernels(double sigma);

/// Mean over frames t >= 1 and all pixels of ((pred_t - pred_{t-1}) - (gt_t - gt_{t-1}))^2.
double tce(const std::vector<Matte>& pred, const std::vector<Matte>& gt);

/// I = alpha F + (1 - alpha) B per pixel.
RasterImage synth_composite(const RasterImage& fg, const RasterImage& bg, const Matte& alpha);

struct MetricReport {
    std::optional<double> sad;
    std::optional<double> mse;
    std::optional<double> grad_err;
    std::optional<double> tce;
    std::vector<double> per_frame_mse;  // sequences only
    std::size_t region_pixels = 0;
};

/// Aligned "name  value" lines.
std::string format_report(const MetricReport& report);
/// One header line and one value line.
std::string format_report_csv(const MetricReport& report);

}  // namespace sparsematte
