#pragma once

#include <utility>

#include "rawpipe/image.hpp"
#include "rawpipe/tensor.hpp"

namespace rawpipe {

/// Per-color (row, col) parity offsets within the 2x2 tile of a pattern.
/// The four offsets are a permutation of the tile positions; exactly two
/// map to green.
struct CfaOffsets {
    std::pair<int, int> red;
    std::pair<int, int> green1; // row-major first green
    std::pair<int, int> green2;
    std::pair<int, int> blue;
};

CfaOffsets cfa_offsets(CfaPattern pattern);

/// Mosaic an integer-code RGB image: at each site keep the plane the CFA
/// pattern selects. Bit depth preserved.
BayerImage mosaic(const RgbImage& rgb, CfaPattern pattern);

/// Bilinear demosaic baseline. Missing colors are the rounded mean of the
/// 2 or 4 nearest same-color neighbors; borders replicate edge values
/// (pattern extended periodically).
RgbImage demosaic_bilinear(const BayerImage& bayer);

/// The in-pixel demosaic: each 2x2 tile becomes one RGB pixel; R and B are
/// copied, the two greens combine as (G1 + G2) >> 1. Output dims halved.
RgbImage demosaic_inpixel(const BayerImage& bayer);

/// Real-valued variant over a unit-real Bayer frame: greens are averaged
/// exactly (no floor). Returns a 3 x (H/2) x (W/2) tensor. Used as the
/// algebraic reference for the fused convolution.
TensorF64 demosaic_inpixel_real(const TensorF64& bayer, CfaPattern pattern);

} // namespace rawpipe
