#include <sparsematte/metrics.hpp>
#include <sparsematte/synthetic.hpp>

#include <algorithm>
#include <cmath>

namespace sparsematte {

namespace {

RasterImage foreground_layer(int size) {
    std::vector<Rgb> rgb(static_cast<std::size_t>(size) * size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double u = static_cast<double>(x) / size;
            const double v = static_cast<double>(y) / size;
            rgb[static_cast<std::size_t>(y) * size + x] = Rgb(0.85 - 0.1 * v, 0.15 + 0.1 * u, 0.1 + 0.05 * v);
        }
    }
    return RasterImage(size, size, std::move(rgb));
}

RasterImage background_layer(int size) {
    std::vector<Rgb> rgb(static_cast<std::size_t>(size) * size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double u = static_cast<double>(x) / size;
            const double v = static_cast<double>(y) / size;
            rgb[static_cast<std::size_t>(y) * size + x] = Rgb(0.1 + 0.05 * u, 0.25 + 0.1 * v, 0.8 - 0.1 * u);
        }
    }
    return RasterImage(size, size, std::move(rgb));
}

SyntheticImage disc_frame(int size, double cx, double cy, double radius, double edge) {
    RasterImage fg = foreground_layer(size);
    RasterImage bg = background_layer(size);
    Matte alpha(size, size);
    std::vector<Label> labels(static_cast<std::size_t>(size) * size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double r = std::hypot(x - cx, y - cy);
            const auto i = static_cast<std::size_t>(y) * size + x;
            alpha[i] = std::clamp((radius + edge / 2.0 - r) / edge, 0.0, 1.0);
            if (r < radius - edge / 2.0 - 1.0) {
                labels[i] = Label::Foreground;
            } else if (r > radius + edge / 2.0 + 1.0) {
                labels[i] = Label::Background;
            } else {
                labels[i] = Label::Unknown;
            }
        }
    }
    RasterImage composite = synth_composite(fg, bg, alpha);
    return {std::move(fg), std::move(bg), std::move(alpha), std::move(composite),
            Trimap(size, size, std::move(labels))};
}

}  // namespace

SyntheticImage two_color_ramp(int size, int band) {
    RasterImage fg = foreground_layer(size);
    RasterImage bg = background_layer(size);
    const int x0 = (size - band) / 2;
    Matte alpha(size, size);
    std::vector<Label> labels(static_cast<std::size_t>(size) * size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const auto i = static_cast<std::size_t>(y) * size + x;
            if (x < x0) {
                alpha[i] = 1.0;
                labels[i] = Label::Foreground;
            } else if (x >= x0 + band) {
                alpha[i] = 0.0;
                labels[i] = Label::Background;
            } else {
                alpha[i] = 1.0 - (x - x0 + 0.5) / band;
                labels[i] = Label::Unknown;
            }
        }
    }
    RasterImage composite = synth_composite(fg, bg, alpha);
    return {std::move(fg), std::move(bg), std::move(alpha), std::move(composite),
            Trimap(size, size, std::move(labels))};
}

std::vector<SyntheticImage> translating_disc(int frames, int size, double radius, double edge, double shift) {
    std::vector<SyntheticImage> clip;
    const double start = size / 2.0 - shift * (frames - 1) / 2.0;
    for (int t = 0; t < frames; ++t) {
        clip.push_back(disc_frame(size, start + shift * t, size / 2.0, radius, edge));
    }
    return clip;
}

std::vector<SyntheticImage> static_disc(int frames, int size, double radius, double edge) {
    std::vector<SyntheticImage> clip;
    for (int t = 0; t < frames; ++t) {
        clip.push_back(disc_frame(size, size / 2.0, size / 2.0, radius, edge));
    }
    return clip;
}

}  // namespace sparsematte
