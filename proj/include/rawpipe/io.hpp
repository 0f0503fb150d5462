#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rawpipe/image.hpp"
#include "rawpipe/tensor.hpp"

namespace rawpipe {

// Binary PGM ("P5") with an optional "# RAWPIPE CFA=<pat> BITDEPTH=<b>"
// comment line. Samples are big-endian 2-byte when maxval > 255.
BayerImage load_bayer_pgm(const std::string& path);
void save_bayer_pgm(const BayerImage& img, const std::string& path);

// Binary PPM ("P6"), interleaved RGB, maxval 2^b - 1, big-endian when 2-byte.
RgbImage load_rgb_ppm(const std::string& path);
void save_rgb_ppm(const RgbImage& img, const std::string& path);

// FTEN tensor container: magic "FTEN", version 0x01, dtype byte
// (0 = real32, 1 = real64), ndim byte, little-endian 8-byte extents,
// row-major little-endian payload.
void save_tensor(const TensorF64& t, Dtype dtype, const std::string& path);
TensorF64 load_tensor(const std::string& path, Dtype* dtype_out = nullptr);

std::vector<unsigned char> tensor_to_bytes(const TensorF64& t, Dtype dtype);
TensorF64 tensor_from_bytes(const unsigned char* p, std::size_t n, std::size_t* consumed,
                            Dtype* dtype_out = nullptr);

} // namespace rawpipe
