#include "rawpipe/io.hpp"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

namespace rawpipe {

namespace {

std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path, 0);
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    return buf;
}

void write_file(const std::string& path, const void* data, std::size_t n) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot open file for writing: " + path, 0);
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out) throw ParseError("short write to " + path, 0);
}

struct NetpbmHeader {
    int width = 0, height = 0, maxval = 0;
    bool has_cfa = false;
    CfaPattern cfa = CfaPattern::RGGB;
    int comment_bitdepth = 0; // 0 = absent
    std::size_t payload_offset = 0;
};

// Parses a netpbm header after the magic. Comments (# ...) may appear
// between tokens; a RAWPIPE comment carries CFA metadata.
NetpbmHeader parse_netpbm_header(const std::vector<unsigned char>& buf, const char* magic) {
    std::size_t pos = 0;
    const std::size_t n = buf.size();
    if (n < 2 || buf[0] != static_cast<unsigned char>(magic[0]) ||
        buf[1] != static_cast<unsigned char>(magic[1]))
        throw ParseError(std::string("bad magic, expected ") + magic, 0);
    pos = 2;

    NetpbmHeader h;
    int fields[3];
    int field_idx = 0;
    while (field_idx < 3) {
        if (pos >= n) throw ParseError("truncated header", pos);
        unsigned char c = buf[pos];
        if (c == '#') {
            std::size_t eol = pos;
            while (eol < n && buf[eol] != '\n') ++eol;
            std::string comment(reinterpret_cast<const char*>(&buf[pos]), eol - pos);
            if (comment.find("RAWPIPE") != std::string::npos) {
                auto grab = [&](const std::string& key) -> std::string {
                    auto k = comment.find(key + "=");
                    if (k == std::string::npos) return "";
                    k += key.size() + 1;
                    auto e = comment.find_first_of(" \t", k);
                    return comment.substr(k, e == std::string::npos ? std::string::npos : e - k);
                };
                std::string cfa = grab("CFA");
                std::string bd = grab("BITDEPTH");
                if (!cfa.empty()) {
                    try {
                        h.cfa = cfa_pattern_from_string(cfa);
                        h.has_cfa = true;
                    } catch (const ParameterError&) {
                        throw ParseError("bad CFA pattern in RAWPIPE comment", pos);
                    }
                }
                if (!bd.empty()) h.comment_bitdepth = std::atoi(bd.c_str());
            }
            pos = eol;
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            ++pos;
            continue;
        }
        if (c < '0' || c > '9') throw ParseError("unexpected character in header", pos);
        long v = 0;
        while (pos < n && buf[pos] >= '0' && buf[pos] <= '9') {
            v = v * 10 + (buf[pos] - '0');
            if (v > 1000000000L) throw ParseError("header value too large", pos);
            ++pos;
        }
        fields[field_idx++] = static_cast<int>(v);
    }
    if (pos >= n) throw ParseError("truncated header", pos);
    // exactly one whitespace byte separates the header from the payload
    if (buf[pos] != '\n' && buf[pos] != ' ' && buf[pos] != '\t' && buf[pos] != '\r')
        throw ParseError("missing whitespace after maxval", pos);
    ++pos;

    h.width = fields[0];
    h.height = fields[1];
    h.maxval = fields[2];
    h.payload_offset = pos;
    if (h.width <= 0 || h.height <= 0) throw ParseError("non-positive dimensions", pos);
    return h;
}

// maxval must equal 2^b - 1 for some b in [8, 16]
int bit_depth_from_maxval(int maxval, std::size_t offset) {
    for (int b = 8; b <= 16; ++b)
        if (maxval == max_code(b)) return b;
    throw ParseError("unsupported maxval " + std::to_string(maxval), offset);
}

void append_u64_le(std::vector<unsigned char>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t read_u64_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

} // namespace

BayerImage load_bayer_pgm(const std::string& path) {
    auto buf = read_file(path);
    NetpbmHeader h = parse_netpbm_header(buf, "P5");
    const int bits = h.comment_bitdepth > 0 ? h.comment_bitdepth
                                            : bit_depth_from_maxval(h.maxval, h.payload_offset);
    if (h.maxval != max_code(bits))
        throw ParseError("maxval does not match bit depth", h.payload_offset);

    const std::size_t count = static_cast<std::size_t>(h.width) * h.height;
    const bool wide = h.maxval > 255;
    const std::size_t need = count * (wide ? 2 : 1);
    if (buf.size() - h.payload_offset < need)
        throw ParseError("truncated payload", buf.size());

    std::vector<std::uint16_t> data(count);
    const unsigned char* p = buf.data() + h.payload_offset;
    for (std::size_t i = 0; i < count; ++i) {
        std::uint16_t v = wide ? static_cast<std::uint16_t>((p[2 * i] << 8) | p[2 * i + 1])
                               : static_cast<std::uint16_t>(p[i]);
        if (v > h.maxval)
            throw ParseError("sample exceeds maxval",
                             h.payload_offset + i * (wide ? 2 : 1));
        data[i] = v;
    }
    return BayerImage(h.width, h.height, bits, h.has_cfa ? h.cfa : CfaPattern::RGGB,
                      std::move(data));
}

void save_bayer_pgm(const BayerImage& img, const std::string& path) {
    img.validate();
    const int maxval = max_code(img.bit_depth);
    std::ostringstream hdr;
    hdr << "P5\n# RAWPIPE CFA=" << to_string(img.pattern) << " BITDEPTH=" << img.bit_depth
        << "\n" << img.width << " " << img.height << "\n" << maxval << "\n";
    std::string head = hdr.str();
    std::vector<unsigned char> out(head.begin(), head.end());
    if (maxval > 255) {
        for (std::uint16_t v : img.data) {
            out.push_back(static_cast<unsigned char>(v >> 8));
            out.push_back(static_cast<unsigned char>(v & 0xFF));
        }
    } else {
        for (std::uint16_t v : img.data) out.push_back(static_cast<unsigned char>(v));
    }
    write_file(path, out.data(), out.size());
}

RgbImage load_rgb_ppm(const std::string& path) {
    auto buf = read_file(path);
    NetpbmHeader h = parse_netpbm_header(buf, "P6");
    const int bits = bit_depth_from_maxval(h.maxval, h.payload_offset);
    const std::size_t count = static_cast<std::size_t>(h.width) * h.height;
    const bool wide = h.maxval > 255;
    const std::size_t need = count * 3 * (wide ? 2 : 1);
    if (buf.size() - h.payload_offset < need)
        throw ParseError("truncated payload", buf.size());

    RgbImage img = RgbImage::integer(h.width, h.height, bits);
    const unsigned char* p = buf.data() + h.payload_offset;
    for (std::size_t i = 0; i < count; ++i) {
        for (int ch = 0; ch < 3; ++ch) {
            std::uint16_t v;
            if (wide) {
                v = static_cast<std::uint16_t>((p[0] << 8) | p[1]);
                p += 2;
            } else {
                v = *p++;
            }
            if (v > h.maxval)
                throw ParseError("sample exceeds maxval",
                                 static_cast<std::size_t>(p - buf.data()));
            img.codes[ch][i] = v;
        }
    }
    return img;
}

void save_rgb_ppm(const RgbImage& img, const std::string& path) {
    if (img.encoding != RgbEncoding::IntegerCodes)
        throw EncodingError("PPM requires integer-code encoding; convert first");
    img.validate();
    const int maxval = max_code(img.bit_depth);
    std::ostringstream hdr;
    hdr << "P6\n" << img.width << " " << img.height << "\n" << maxval << "\n";
    std::string head = hdr.str();
    std::vector<unsigned char> out(head.begin(), head.end());
    const std::size_t count = static_cast<std::size_t>(img.width) * img.height;
    for (std::size_t i = 0; i < count; ++i) {
        for (int ch = 0; ch < 3; ++ch) {
            std::uint16_t v = img.codes[ch][i];
            if (maxval > 255) {
                out.push_back(static_cast<unsigned char>(v >> 8));
                out.push_back(static_cast<unsigned char>(v & 0xFF));
            } else {
                out.push_back(static_cast<unsigned char>(v));
            }
        }
    }
    write_file(path, out.data(), out.size());
}

std::vector<unsigned char> tensor_to_bytes(const TensorF64& t, Dtype dtype) {
    std::vector<unsigned char> out;
    out.push_back('F');
    out.push_back('T');
    out.push_back('E');
    out.push_back('N');
    out.push_back(0x01);
    out.push_back(dtype == Dtype::Real32 ? 0 : 1);
    out.push_back(static_cast<unsigned char>(t.dims.size()));
    for (std::size_t e : t.dims) append_u64_le(out, e);
    if (dtype == Dtype::Real32) {
        for (double v : t.data) {
            float f = static_cast<float>(v);
            unsigned char b[4];
            std::memcpy(b, &f, 4);
            out.insert(out.end(), b, b + 4);
        }
    } else {
        for (double v : t.data) {
            unsigned char b[8];
            std::memcpy(b, &v, 8);
            out.insert(out.end(), b, b + 8);
        }
    }
    return out;
}

TensorF64 tensor_from_bytes(const unsigned char* p, std::size_t n, std::size_t* consumed,
                            Dtype* dtype_out) {
    if (n < 7) throw ParseError("truncated FTEN header", n);
    if (std::memcmp(p, "FTEN", 4) != 0) throw ParseError("bad FTEN magic", 0);
    if (p[4] != 0x01) throw ParseError("unsupported FTEN version", 4);
    if (p[5] > 1) throw ParseError("unsupported FTEN dtype", 5);
    const Dtype dtype = p[5] == 0 ? Dtype::Real32 : Dtype::Real64;
    const int ndim = p[6];
    std::size_t pos = 7;
    if (n < pos + static_cast<std::size_t>(ndim) * 8) throw ParseError("truncated FTEN extents", n);
    std::vector<std::size_t> dims(ndim);
    std::size_t count = 1;
    for (int i = 0; i < ndim; ++i) {
        dims[i] = static_cast<std::size_t>(read_u64_le(p + pos));
        count *= dims[i];
        pos += 8;
    }
    const std::size_t elem = dtype == Dtype::Real32 ? 4 : 8;
    if (n < pos + count * elem) throw ParseError("truncated FTEN payload", n);
    TensorF64 t(dims);
    for (std::size_t i = 0; i < count; ++i) {
        if (dtype == Dtype::Real32) {
            float f;
            std::memcpy(&f, p + pos, 4);
            t.data[i] = f;
            pos += 4;
        } else {
            std::memcpy(&t.data[i], p + pos, 8);
            pos += 8;
        }
    }
    if (consumed) *consumed = pos;
    if (dtype_out) *dtype_out = dtype;
    return t;
}

void save_tensor(const TensorF64& t, Dtype dtype, const std::string& path) {
    auto bytes = tensor_to_bytes(t, dtype);
    write_file(path, bytes.data(), bytes.size());
}

TensorF64 load_tensor(const std::string& path, Dtype* dtype_out) {
    auto buf = read_file(path);
    std::size_t consumed = 0;
    return tensor_from_bytes(buf.data(), buf.size(), &consumed, dtype_out);
}

} // namespace rawpipe
