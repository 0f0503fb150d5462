#include "rawpipe/cfa.hpp"

#include <algorithm>

namespace rawpipe {

CfaOffsets cfa_offsets(CfaPattern pattern) {
    CfaOffsets o{};
    bool g1_set = false;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) {
            switch (cfa_color_at(pattern, r, c)) {
            case 0: o.red = {r, c}; break;
            case 2: o.blue = {r, c}; break;
            default:
                if (!g1_set) {
                    o.green1 = {r, c};
                    g1_set = true;
                } else {
                    o.green2 = {r, c};
                }
            }
        }
    return o;
}

BayerImage mosaic(const RgbImage& rgb, CfaPattern pattern) {
    if (rgb.encoding != RgbEncoding::IntegerCodes)
        throw EncodingError("mosaic requires integer-code encoding");
    if (rgb.width % 2 != 0 || rgb.height % 2 != 0)
        throw DimensionError("mosaic requires even dimensions");
    rgb.validate();

    BayerImage out(rgb.width, rgb.height, rgb.bit_depth, pattern);
    for (int r = 0; r < rgb.height; ++r)
        for (int c = 0; c < rgb.width; ++c)
            out.at(r, c) = rgb.code_at(cfa_color_at(pattern, r, c), r, c);
    return out;
}

RgbImage demosaic_bilinear(const BayerImage& bayer) {
    bayer.validate();
    const int w = bayer.width, h = bayer.height;
    RgbImage out = RgbImage::integer(w, h, bayer.bit_depth);

    // Replicate padding for values; the CFA pattern extends periodically,
    // so a neighbor's color role follows its virtual (unclamped) position.
    auto value = [&](int r, int c) -> int {
        r = std::clamp(r, 0, h - 1);
        c = std::clamp(c, 0, w - 1);
        return bayer.at(r, c);
    };
    static const int offsets[8][2] = {{-1, 0}, {1, 0},  {0, -1}, {0, 1},
                                      {-1, -1}, {-1, 1}, {1, -1}, {1, 1}};

    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const int present = bayer.color_at(r, c);
            for (int color = 0; color < 3; ++color) {
                if (color == present) {
                    out.code_at(color, r, c) = bayer.at(r, c);
                    continue;
                }
                long sum = 0;
                int n = 0;
                for (const auto& d : offsets) {
                    if (cfa_color_at(bayer.pattern, r + d[0], c + d[1]) != color) continue;
                    sum += value(r + d[0], c + d[1]);
                    ++n;
                }
                // n is 2 or 4 by the parity structure; round half up
                out.code_at(color, r, c) = static_cast<std::uint16_t>((2 * sum + n) / (2 * n));
            }
        }
    }
    return out;
}

RgbImage demosaic_inpixel(const BayerImage& bayer) {
    bayer.validate();
    const CfaOffsets o = cfa_offsets(bayer.pattern);
    const int ow = bayer.width / 2, oh = bayer.height / 2;
    RgbImage out = RgbImage::integer(ow, oh, bayer.bit_depth);
    for (int ty = 0; ty < oh; ++ty) {
        for (int tx = 0; tx < ow; ++tx) {
            const int r0 = 2 * ty, c0 = 2 * tx;
            out.code_at(0, ty, tx) = bayer.at(r0 + o.red.first, c0 + o.red.second);
            out.code_at(2, ty, tx) = bayer.at(r0 + o.blue.first, c0 + o.blue.second);
            const std::uint32_t g1 = bayer.at(r0 + o.green1.first, c0 + o.green1.second);
            const std::uint32_t g2 = bayer.at(r0 + o.green2.first, c0 + o.green2.second);
            out.code_at(1, ty, tx) = static_cast<std::uint16_t>((g1 + g2) >> 1);
        }
    }
    return out;
}

TensorF64 demosaic_inpixel_real(const TensorF64& bayer, CfaPattern pattern) {
    if (bayer.dims.size() != 2) throw DimensionError("expected 2-D Bayer frame");
    const int h = static_cast<int>(bayer.dims[0]);
    const int w = static_cast<int>(bayer.dims[1]);
    if (w % 2 != 0 || h % 2 != 0) throw DimensionError("Bayer dims must be even");
    const CfaOffsets o = cfa_offsets(pattern);
    const int oh = h / 2, ow = w / 2;
    TensorF64 out({3, static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)});
    auto v = [&](int r, int c) { return bayer.data[static_cast<std::size_t>(r) * w + c]; };
    for (int ty = 0; ty < oh; ++ty)
        for (int tx = 0; tx < ow; ++tx) {
            const int r0 = 2 * ty, c0 = 2 * tx;
            out.at3(0, ty, tx) = v(r0 + o.red.first, c0 + o.red.second);
            out.at3(2, ty, tx) = v(r0 + o.blue.first, c0 + o.blue.second);
            out.at3(1, ty, tx) = 0.5 * (v(r0 + o.green1.first, c0 + o.green1.second) +
                                        v(r0 + o.green2.first, c0 + o.green2.second));
        }
    return out;
}

} // namespace rawpipe
