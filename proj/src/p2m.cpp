#include "rawpipe/p2m.hpp"

#include <cmath>

#include "rawpipe/cfa.hpp"
#include "rawpipe/prng.hpp"

namespace rawpipe {

void ConvSpec::validate() const {
    if (out_channels <= 0 || kernel <= 0 || stride < 1)
        throw ParameterError("invalid ConvSpec geometry");
    const std::vector<std::size_t> want = {static_cast<std::size_t>(out_channels), 3,
                                           static_cast<std::size_t>(kernel),
                                           static_cast<std::size_t>(kernel)};
    if (weights.dims != want) throw DimensionError("ConvSpec weights must be out x 3 x k x k");
    if (bias.size() != static_cast<std::size_t>(out_channels))
        throw DimensionError("ConvSpec bias length must equal out_channels");
    for (double v : weights.data)
        if (!std::isfinite(v)) throw NumericError("non-finite convolution weight");
}

FusedWeights expand_weights(const ConvSpec& spec, CfaPattern pattern) {
    spec.validate();
    const CfaOffsets o = cfa_offsets(pattern);
    const int k = spec.kernel;
    FusedWeights fw;
    fw.out_channels = spec.out_channels;
    fw.kernel = k;
    fw.stride = spec.stride;
    fw.pattern = pattern;
    fw.bias = spec.bias;
    fw.taps = TensorF64({static_cast<std::size_t>(spec.out_channels),
                         static_cast<std::size_t>(2 * k), static_cast<std::size_t>(2 * k)});
    auto src = [&](int oc, int ch, int ky, int kx) {
        return spec.weights.data[((static_cast<std::size_t>(oc) * 3 + ch) * k + ky) * k + kx];
    };
    for (int oc = 0; oc < spec.out_channels; ++oc)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const int by = 2 * ky, bx = 2 * kx;
                fw.taps.at3(oc, by + o.red.first, bx + o.red.second) = src(oc, 0, ky, kx);
                fw.taps.at3(oc, by + o.blue.first, bx + o.blue.second) = src(oc, 2, ky, kx);
                const double half_g = 0.5 * src(oc, 1, ky, kx);
                fw.taps.at3(oc, by + o.green1.first, bx + o.green1.second) = half_g;
                fw.taps.at3(oc, by + o.green2.first, bx + o.green2.second) = half_g;
            }
    return fw;
}

namespace {

void conv_output_dims(int X, int Y, int k, int s, int& oh, int& ow) {
    const int pad = k / 2;
    oh = (X + 2 * pad - k) / s + 1;
    ow = (Y + 2 * pad - k) / s + 1;
    if (oh <= 0 || ow <= 0) throw DimensionError("convolution output is empty");
}

} // namespace

TensorF64 fused_conv(const TensorF64& bayer_real, const ConvSpec& spec, CfaPattern pattern,
                     const GreenMismatch& mismatch) {
    if (bayer_real.dims.size() != 2) throw DimensionError("expected 2-D Bayer frame");
    const int H = static_cast<int>(bayer_real.dims[0]);
    const int W = static_cast<int>(bayer_real.dims[1]);
    if (H % 2 != 0 || W % 2 != 0) throw DimensionError("Bayer dims must be even");

    FusedWeights fw = expand_weights(spec, pattern);
    if (mismatch.sigma > 0) {
        // seeded multiplicative error on the green taps only
        const CfaOffsets o = cfa_offsets(pattern);
        for (int oc = 0; oc < fw.out_channels; ++oc)
            for (int ky = 0; ky < fw.kernel; ++ky)
                for (int kx = 0; kx < fw.kernel; ++kx)
                    for (const auto& g : {o.green1, o.green2}) {
                        const int by = 2 * ky + g.first, bx = 2 * kx + g.second;
                        Prng p(derive_stream(mismatch.seed, static_cast<std::uint64_t>(oc),
                                             static_cast<std::uint64_t>(by),
                                             static_cast<std::uint64_t>(bx)));
                        fw.taps.at3(oc, by, bx) *= 1.0 + p.next_gaussian(mismatch.sigma);
                    }
    }

    const int X = H / 2, Y = W / 2, k = spec.kernel, s = spec.stride, pad = k / 2;
    int oh, ow;
    conv_output_dims(X, Y, k, s, oh, ow);
    TensorF64 out({static_cast<std::size_t>(spec.out_channels), static_cast<std::size_t>(oh),
                   static_cast<std::size_t>(ow)});
    for (int oc = 0; oc < spec.out_channels; ++oc)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                double acc = fw.bias[oc];
                const int base_r = 2 * (oy * s - pad), base_c = 2 * (ox * s - pad);
                for (int by = 0; by < 2 * k; ++by) {
                    const int r = base_r + by;
                    if (r < 0 || r >= H) continue;
                    for (int bx = 0; bx < 2 * k; ++bx) {
                        const int c = base_c + bx;
                        if (c < 0 || c >= W) continue;
                        acc += fw.taps.at3(oc, by, bx) *
                               bayer_real.data[static_cast<std::size_t>(r) * W + c];
                    }
                }
                out.at3(oc, oy, ox) = acc;
            }
    return out;
}

TensorF64 fused_conv_quantized(const BayerImage& bayer, const ConvSpec& spec) {
    bayer.validate();
    spec.validate();
    const CfaOffsets o = cfa_offsets(bayer.pattern);
    const int X = bayer.height / 2, Y = bayer.width / 2, k = spec.kernel, s = spec.stride,
              pad = k / 2;
    int oh, ow;
    conv_output_dims(X, Y, k, s, oh, ow);

    auto src = [&](int oc, int ch, int ky, int kx) {
        return spec.weights.data[((static_cast<std::size_t>(oc) * 3 + ch) * k + ky) * k + kx];
    };
    TensorF64 out({static_cast<std::size_t>(spec.out_channels), static_cast<std::size_t>(oh),
                   static_cast<std::size_t>(ow)});
    for (int oc = 0; oc < spec.out_channels; ++oc)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                double acc = spec.bias[oc];
                for (int ky = 0; ky < k; ++ky) {
                    const int ty = oy * s + ky - pad;
                    if (ty < 0 || ty >= X) continue;
                    for (int kx = 0; kx < k; ++kx) {
                        const int tx = ox * s + kx - pad;
                        if (tx < 0 || tx >= Y) continue;
                        const int r0 = 2 * ty, c0 = 2 * tx;
                        const std::uint32_t g1 = bayer.at(r0 + o.green1.first, c0 + o.green1.second);
                        const std::uint32_t g2 = bayer.at(r0 + o.green2.first, c0 + o.green2.second);
                        // ADC-then-shift green path, identical to pixelsim
                        const double gq = static_cast<double>((g1 + g2) >> 1);
                        acc += src(oc, 0, ky, kx) * bayer.at(r0 + o.red.first, c0 + o.red.second);
                        acc += src(oc, 1, ky, kx) * gq;
                        acc += src(oc, 2, ky, kx) * bayer.at(r0 + o.blue.first, c0 + o.blue.second);
                    }
                }
                out.at3(oc, oy, ox) = acc;
            }
    return out;
}

TensorF64 reference_conv(const TensorF64& rgb, const ConvSpec& spec) {
    spec.validate();
    if (rgb.dims.size() != 3 || rgb.dims[0] != 3)
        throw DimensionError("reference_conv expects a 3 x X x Y tensor");
    const int X = static_cast<int>(rgb.dims[1]);
    const int Y = static_cast<int>(rgb.dims[2]);
    const int k = spec.kernel, s = spec.stride, pad = k / 2;
    int oh, ow;
    conv_output_dims(X, Y, k, s, oh, ow);

    TensorF64 out({static_cast<std::size_t>(spec.out_channels), static_cast<std::size_t>(oh),
                   static_cast<std::size_t>(ow)});
    for (int oc = 0; oc < spec.out_channels; ++oc)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                double acc = spec.bias[oc];
                for (int ch = 0; ch < 3; ++ch)
                    for (int ky = 0; ky < k; ++ky) {
                        const int y = oy * s + ky - pad;
                        if (y < 0 || y >= X) continue;
                        for (int kx = 0; kx < k; ++kx) {
                            const int x = ox * s + kx - pad;
                            if (x < 0 || x >= Y) continue;
                            acc += spec.weights
                                       .data[((static_cast<std::size_t>(oc) * 3 + ch) * k + ky) *
                                                 k + kx] *
                                   rgb.at3(ch, y, x);
                        }
                    }
                out.at3(oc, oy, ox) = acc;
            }
    return out;
}

} // namespace rawpipe
