#pragma once

#include <cstdint>
#include <vector>

#include "rawpipe/image.hpp"
#include "rawpipe/tensor.hpp"

namespace rawpipe {

/// First-layer convolution over the demosaiced grid.
struct ConvSpec {
    int out_channels = 8;
    int kernel = 3;
    int stride = 2;
    TensorF64 weights;        // out x 3 x k x k
    std::vector<double> bias; // out

    void validate() const;
};

/// Bayer-domain expansion of a demosaiced-grid kernel: per output channel a
/// (2k) x (2k) tap grid where each green weight splits into two equal taps
/// of half value at the tile's green sites; R and B map one-to-one.
struct FusedWeights {
    int out_channels = 0;
    int kernel = 0; // demosaiced-grid kernel size k; Bayer support is 2k x 2k
    int stride = 0;
    CfaPattern pattern = CfaPattern::RGGB;
    TensorF64 taps; // out x 2k x 2k
    std::vector<double> bias;
};

FusedWeights expand_weights(const ConvSpec& spec, CfaPattern pattern);

enum class FusedMode { Real, Quantized };

/// Optional per-green-tap multiplicative gain error, drawn once from the
/// seed. Off by default (sigma = 0).
struct GreenMismatch {
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

/// Stride-2k convolution over the Bayer grid with the expanded weights.
/// Real mode takes a unit-real frame and matches the reference path
/// (demosaic_inpixel_real then reference_conv) exactly. Quantized mode
/// takes integer codes and routes greens through the (d1 + d2) >> 1
/// intermediate before weighting.
TensorF64 fused_conv(const TensorF64& bayer_real, const ConvSpec& spec, CfaPattern pattern,
                     const GreenMismatch& mismatch = {});
TensorF64 fused_conv_quantized(const BayerImage& bayer, const ConvSpec& spec);

/// Cross-correlation with zero padding (pad = k/2) and the spec's stride
/// over a 3 x X x Y input; deterministic accumulation order (channel-major,
/// then kernel row-major).
TensorF64 reference_conv(const TensorF64& rgb, const ConvSpec& spec);

} // namespace rawpipe
