#include "rawpipe/image.hpp"

#include <cctype>
#include <cmath>

namespace rawpipe {

std::string to_string(CfaPattern p) {
    switch (p) {
    case CfaPattern::RGGB: return "RGGB";
    case CfaPattern::BGGR: return "BGGR";
    case CfaPattern::GRBG: return "GRBG";
    case CfaPattern::GBRG: return "GBRG";
    }
    return "RGGB";
}

CfaPattern cfa_pattern_from_string(const std::string& s) {
    std::string u;
    for (char c : s) u.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    if (u == "RGGB") return CfaPattern::RGGB;
    if (u == "BGGR") return CfaPattern::BGGR;
    if (u == "GRBG") return CfaPattern::GRBG;
    if (u == "GBRG") return CfaPattern::GBRG;
    throw ParameterError("unknown CFA pattern: " + s);
}

int cfa_color_at(CfaPattern pattern, long row, long col) {
    const int r = static_cast<int>(((row % 2) + 2) % 2);
    const int c = static_cast<int>(((col % 2) + 2) % 2);
    // 2x2 tile colors per pattern, row-major
    static const int table[4][4] = {
        {0, 1, 1, 2}, // RGGB
        {2, 1, 1, 0}, // BGGR
        {1, 0, 2, 1}, // GRBG
        {1, 2, 0, 1}, // GBRG
    };
    return table[static_cast<int>(pattern)][r * 2 + c];
}

double normalize(int code, int bit_depth) {
    if (bit_depth < 8 || bit_depth > 16)
        throw ParameterError("bit depth out of range: " + std::to_string(bit_depth));
    if (code < 0 || code > max_code(bit_depth))
        throw RangeError("code " + std::to_string(code) + " out of range for bit depth " +
                         std::to_string(bit_depth));
    return static_cast<double>(code) / static_cast<double>(max_code(bit_depth));
}

BayerImage::BayerImage(int w, int h, int bits, CfaPattern pat)
    : width(w), height(h), bit_depth(bits), pattern(pat),
      data(static_cast<std::size_t>(w) * h, 0) {
    validate();
}

BayerImage::BayerImage(int w, int h, int bits, CfaPattern pat, std::vector<std::uint16_t> codes)
    : width(w), height(h), bit_depth(bits), pattern(pat), data(std::move(codes)) {
    validate();
}

void BayerImage::validate() const {
    if (width <= 0 || height <= 0 || width % 2 != 0 || height % 2 != 0)
        throw DimensionError("Bayer dimensions must be positive and even, got " +
                             std::to_string(width) + "x" + std::to_string(height));
    if (bit_depth < 8 || bit_depth > 16)
        throw ParameterError("bit depth must be in [8, 16], got " + std::to_string(bit_depth));
    if (data.size() != static_cast<std::size_t>(width) * height)
        throw DimensionError("Bayer data length does not match dimensions");
    const std::uint16_t mc = static_cast<std::uint16_t>(max_code(bit_depth));
    for (std::uint16_t v : data)
        if (v > mc)
            throw RangeError("Bayer code " + std::to_string(v) + " exceeds max for bit depth " +
                             std::to_string(bit_depth));
}

RgbImage RgbImage::integer(int w, int h, int bits) {
    RgbImage img;
    img.width = w;
    img.height = h;
    img.encoding = RgbEncoding::IntegerCodes;
    img.bit_depth = bits;
    for (auto& p : img.codes) p.assign(static_cast<std::size_t>(w) * h, 0);
    img.validate();
    return img;
}

RgbImage RgbImage::unit_real(int w, int h) {
    RgbImage img;
    img.width = w;
    img.height = h;
    img.encoding = RgbEncoding::UnitReal;
    for (auto& p : img.values) p.assign(static_cast<std::size_t>(w) * h, 0.0);
    img.validate();
    return img;
}

void RgbImage::validate() const {
    if (width <= 0 || height <= 0)
        throw DimensionError("RGB dimensions must be positive");
    const std::size_t n = static_cast<std::size_t>(width) * height;
    if (encoding == RgbEncoding::IntegerCodes) {
        if (bit_depth < 8 || bit_depth > 16)
            throw ParameterError("bit depth must be in [8, 16]");
        const std::uint16_t mc = static_cast<std::uint16_t>(max_code(bit_depth));
        for (const auto& p : codes) {
            if (p.size() != n) throw DimensionError("RGB plane length does not match dimensions");
            for (std::uint16_t v : p)
                if (v > mc) throw RangeError("RGB code exceeds max for bit depth");
        }
    } else {
        for (const auto& p : values) {
            if (p.size() != n) throw DimensionError("RGB plane length does not match dimensions");
            for (double v : p)
                if (!std::isfinite(v)) throw NumericError("non-finite value in unit-real plane");
        }
    }
}

RgbImage RgbImage::to_unit_real() const {
    if (encoding == RgbEncoding::UnitReal) return *this;
    RgbImage out = unit_real(width, height);
    for (int p = 0; p < 3; ++p)
        for (std::size_t i = 0; i < codes[p].size(); ++i)
            out.values[p][i] = normalize(codes[p][i], bit_depth);
    return out;
}

RgbImage RgbImage::to_integer(int bits) const {
    if (encoding == RgbEncoding::IntegerCodes) {
        if (bits == bit_depth) return *this;
        return to_unit_real().to_integer(bits);
    }
    RgbImage out = integer(width, height, bits);
    const double mc = max_code(bits);
    for (int p = 0; p < 3; ++p)
        for (std::size_t i = 0; i < values[p].size(); ++i) {
            double v = std::floor(values[p][i] * mc + 0.5);
            if (v < 0) v = 0;
            if (v > mc) v = mc;
            out.codes[p][i] = static_cast<std::uint16_t>(v);
        }
    return out;
}

} // namespace rawpipe
