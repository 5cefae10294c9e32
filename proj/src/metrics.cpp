#include <sparsematte/error.hpp>
#include <sparsematte/metrics.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace sparsematte {

namespace {

void require_same_extent(const Matte& a, const Matte& b, const char* what) {
    if (a.extent() != b.extent()) {
        throw InvalidArgument(std::string(what) + ": matte dimensions differ");
    }
}

void require_region(const Matte& m, const std::optional<PixelMask>& region, const char* what) {
    if (region && region->extent() != m.extent()) {
        throw InvalidArgument(std::string(what) + ": region dimensions differ");
    }
}

bool in_region(const std::optional<PixelMask>& region, std::size_t i) {
    return !region || (*region)[i];
}

}  // namespace

double sad(const Matte& pred, const Matte& gt, const std::optional<PixelMask>& region) {
    require_same_extent(pred, gt, "sad");
    require_region(pred, region, "sad");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (in_region(region, i)) {
            sum += std::abs(pred[i] - gt[i]);
        }
    }
    return sum;
}

double mse(const Matte& pred, const Matte& gt, const std::optional<PixelMask>& region) {
    require_same_extent(pred, gt, "mse");
    require_region(pred, region, "mse");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (in_region(region, i)) {
            const double d = pred[i] - gt[i];
            sum += d * d;
            ++count;
        }
    }
    if (count == 0) {
        throw InvalidArgument("mse: empty region");
    }
    return sum / static_cast<double>(count);
}

GaussianKernels gaussian_kernels(double sigma) {
    if (!(sigma > 0.0)) {
        throw InvalidArgument("gaussian_kernels: sigma must be positive");
    }
    GaussianKernels k;
    k.radius = static_cast<int>(std::ceil(3.0 * sigma));
    const int size = 2 * k.radius + 1;
    k.smooth.resize(static_cast<std::size_t>(size));
    k.derivative.resize(static_cast<std::size_t>(size));
    double sum = 0.0;
    double moment = 0.0;
    for (int t = -k.radius; t <= k.radius; ++t) {
        const double g = std::exp(-0.5 * t * t / (sigma * sigma));
        k.smooth[static_cast<std::size_t>(t + k.radius)] = g;
        sum += g;
        moment += t * t * g;
    }
    for (int t = -k.radius; t <= k.radius; ++t) {
        const auto i = static_cast<std::size_t>(t + k.radius);
        // Normalized so a unit ramp has unit derivative.
        k.derivative[i] = t * k.smooth[i] / moment;
        k.smooth[i] /= sum;
    }
    return k;
}

GradientField gaussian_gradient(const Matte& matte, double sigma) {
    const GaussianKernels k = gaussian_kernels(sigma);
    const int w = matte.width();
    const int h = matte.height();
    auto sample = [&](const std::vector<double>& img, int x, int y) {
        x = std::clamp(x, 0, w - 1);
        y = std::clamp(y, 0, h - 1);
        return img[static_cast<std::size_t>(y) * w + x];
    };
    // Separable correlation: out(x,y) = sum_t kx[t] in(x+t, y), then along y.
    auto filter = [&](const std::vector<double>& in, const std::vector<double>& kx, const std::vector<double>& ky) {
        std::vector<double> tmp(in.size());
        std::vector<double> out(in.size());
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double s = 0.0;
                for (int t = -k.radius; t <= k.radius; ++t) {
                    s += kx[static_cast<std::size_t>(t + k.radius)] * sample(in, x + t, y);
                }
                tmp[static_cast<std::size_t>(y) * w + x] = s;
            }
        }
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double s = 0.0;
                for (int t = -k.radius; t <= k.radius; ++t) {
                    s += ky[static_cast<std::size_t>(t + k.radius)] * sample(tmp, x, y + t);
                }
                out[static_cast<std::size_t>(y) * w + x] = s;
            }
        }
        return out;
    };
    return {filter(matte.data(), k.derivative, k.smooth), filter(matte.data(), k.smooth, k.derivative)};
}

double gradient_error(const Matte& pred, const Matte& gt, const std::optional<PixelMask>& region, double sigma) {
    require_same_extent(pred, gt, "gradient_error");
    require_region(pred, region, "gradient_error");
    const GradientField gp = gaussian_gradient(pred, sigma);
    const GradientField gg = gaussian_gradient(gt, sigma);
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (in_region(region, i)) {
            const double dx = gp.gx[i] - gg.gx[i];
            const double dy = gp.gy[i] - gg.gy[i];
            sum += dx * dx + dy * dy;
        }
    }
    return sum;
}

double tce(const std::vector<Matte>& pred, const std::vector<Matte>& gt) {
    if (pred.size() != gt.size()) {
        throw InvalidArgument("tce: sequence lengths differ");
    }
    if (pred.size() < 2) {
        throw InvalidArgument("tce: need at least two frames");
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 1; t < pred.size(); ++t) {
        require_same_extent(pred[t], gt[t], "tce");
        require_same_extent(pred[t], pred[t - 1], "tce");
        require_same_extent(gt[t], gt[t - 1], "tce");
        for (std::size_t i = 0; i < pred[t].size(); ++i) {
            const double d = (pred[t][i] - pred[t - 1][i]) - (gt[t][i] - gt[t - 1][i]);
            sum += d * d;
        }
        count += pred[t].size();
    }
    return sum / static_cast<double>(count);
}

RasterImage synth_composite(const RasterImage& fg, const RasterImage& bg, const Matte& alpha) {
    if (fg.extent() != bg.extent() || fg.extent() != alpha.extent()) {
        throw InvalidArgument("synth_composite: input dimensions differ");
    }
    std::vector<Rgb> out(fg.size());
    for (std::size_t i = 0; i < fg.size(); ++i) {
        const double a = std::clamp(alpha[i], 0.0, 1.0);
        out[i] = (a * fg[i] + (1.0 - a) * bg[i]).cwiseMax(0.0).cwiseMin(1.0);
    }
    return RasterImage(fg.width(), fg.height(), std::move(out));
}

std::string format_report(const MetricReport& report) {
    std::ostringstream out;
    out << std::setprecision(8);
    auto line = [&](const char* name, const std::optional<double>& v) {
        if (v) {
            out << std::left << std::setw(10) << name << ' ' << *v << '\n';
        }
    };
    out << "# region pixels: " << report.region_pixels << "; grad is a sum over the region\n";
    line("sad", report.sad);
    line("mse", report.mse);
    line("grad", report.grad_err);
    line("tce", report.tce);
    for (std::size_t f = 0; f < report.per_frame_mse.size(); ++f) {
        out << std::left << std::setw(10) << ("mse[" + std::to_string(f) + "]") << ' ' << report.per_frame_mse[f]
            << '\n';
    }
    return out.str();
}

std::string format_report_csv(const MetricReport& report) {
    std::ostringstream head;
    std::ostringstream vals;
    vals << std::setprecision(10);
    bool first = true;
    auto col = [&](const char* name, const std::optional<double>& v) {
        if (!v) {
            return;
        }
        head << (first ? "" : ",") << name;
        vals << (first ? "" : ",") << *v;
        first = false;
    };
    col("sad", report.sad);
    col("mse", report.mse);
    col("grad", report.grad_err);
    col("tce", report.tce);
    return head.str() + "\n" + vals.str() + "\n";
}

}  // namespace sparsematte
