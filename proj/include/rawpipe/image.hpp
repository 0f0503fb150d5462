#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rawpipe/errors.hpp"

namespace rawpipe {

enum class CfaPattern { RGGB, BGGR, GRBG, GBRG };

std::string to_string(CfaPattern p);
CfaPattern cfa_pattern_from_string(const std::string& s);

/// Color index of a CFA site: 0 = R, 1 = G, 2 = B. The pattern is
/// extended periodically, so row/col may be any integer.
int cfa_color_at(CfaPattern pattern, long row, long col);

inline int max_code(int bit_depth) { return (1 << bit_depth) - 1; }

/// v = code / (2^b - 1); full scale maps exactly to 1.0.
double normalize(int code, int bit_depth);

/// Single-plane CFA frame of integer sensor codes. Codes are stored as
/// 16-bit unsigned regardless of bit depth; bit depth is metadata and is
/// checked at construction.
struct BayerImage {
    int width = 0;
    int height = 0;
    int bit_depth = 12;
    CfaPattern pattern = CfaPattern::RGGB;
    std::vector<std::uint16_t> data; // row-major

    BayerImage() = default;
    BayerImage(int w, int h, int bits, CfaPattern pat);
    BayerImage(int w, int h, int bits, CfaPattern pat, std::vector<std::uint16_t> codes);

    std::uint16_t at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }
    std::uint16_t& at(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
    int color_at(int r, int c) const { return cfa_color_at(pattern, r, c); }

    void validate() const;
};

enum class RgbEncoding { IntegerCodes, UnitReal };

/// Three-plane image, planes in R, G, B order. Either integer codes with a
/// bit depth, or unit-normalized reals in [0, 1].
struct RgbImage {
    int width = 0;
    int height = 0;
    RgbEncoding encoding = RgbEncoding::IntegerCodes;
    int bit_depth = 8; // meaningful for IntegerCodes only
    std::array<std::vector<std::uint16_t>, 3> codes;
    std::array<std::vector<double>, 3> values;

    static RgbImage integer(int w, int h, int bits);
    static RgbImage unit_real(int w, int h);

    std::uint16_t code_at(int plane, int r, int c) const {
        return codes[plane][static_cast<std::size_t>(r) * width + c];
    }
    std::uint16_t& code_at(int plane, int r, int c) {
        return codes[plane][static_cast<std::size_t>(r) * width + c];
    }
    double value_at(int plane, int r, int c) const {
        return values[plane][static_cast<std::size_t>(r) * width + c];
    }
    double& value_at(int plane, int r, int c) {
        return values[plane][static_cast<std::size_t>(r) * width + c];
    }

    void validate() const;

    /// Integer codes -> unit reals via normalize().
    RgbImage to_unit_real() const;
    /// Unit reals -> integer codes, round half up, clamped to the code range.
    RgbImage to_integer(int bits) const;
};

} // namespace rawpipe
