/**
 * @file synthetic.hpp
 * @brief Synthetic fixtures with ground truth constructed from the compositing equation.
 */
#pragma once

#include <sparsematte/imaging.hpp>

#include <vector>

namespace sparsematte {

struct SyntheticImage {
    RasterImage foreground;
    RasterImage background;
    Matte alpha;
    RasterImage composite;
    Trimap trimap;
};

/// size x size composite of a reddish F layer over a bluish B layer; alpha falls linearly
/// from 1 to 0 across a vertical band of `band` columns, which is the Unknown region.
SyntheticImage two_color_ramp(int size = 128, int band = 20);

/// `frames` frames of a soft-edged disc translating by `shift` pixels per frame. The
/// trimap's Unknown ring covers the soft edge plus one pixel on each side.
std::vector<SyntheticImage> translating_disc(int frames = 4, int size = 64, double radius = 16.0,
                                             double edge = 6.0, double shift = 2.0);

/// Same disc in every frame.
std::vector<SyntheticImage> static_disc(int frames = 4, int size = 48, double radius = 12.0, double edge = 4.0);

}  // namespace sparsematte
