#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rawpipe/image.hpp"
#include "rawpipe/p2m.hpp"

namespace rawpipe {

struct PlaneHistogram {
    std::string name; // "R", "G", "B" or "bayer"
    std::vector<std::uint64_t> counts;
    double mean = 0;
    double stddev = 0;
};

/// Uniform-width bins over the code range ([0, 2^b - 1] for integer data,
/// [0, 1] for unit reals); bins are left-closed, last bin right-closed.
struct HistogramReport {
    int bins = 0;
    double lo = 0, hi = 0;
    std::vector<double> edges; // bins + 1, strictly increasing
    std::vector<PlaneHistogram> planes;
};

HistogramReport histogram(const BayerImage& img, int bins);
HistogramReport histogram(const RgbImage& img, int bins);

struct ShiftMetrics {
    struct PlaneDelta {
        std::string name;
        double mean_delta = 0;
        double std_delta = 0;
        double intersection = 0; // sum of min(p, q) over normalized bins
    };
    std::vector<PlaneDelta> planes;
    double intersection = 0; // mean over planes
};

/// Requires identical bin structure on both reports.
ShiftMetrics shift_metrics(const HistogramReport& a, const HistogramReport& b);

/// Exact reduced integer ratio.
struct Ratio {
    std::uint64_t num = 0, den = 1;
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};
Ratio make_ratio(std::uint64_t num, std::uint64_t den);

struct BandwidthStage {
    std::string name;
    std::uint64_t elements = 0;
    int bits_per_element = 0;
    std::uint64_t bits_per_frame = 0;
};

struct BandwidthReport {
    std::vector<BandwidthStage> stages;
    Ratio element_reduction_demosaic;  // raw elements / demosaiced elements = 4/3
    Ratio bits_per_element_ratio;      // bit_depth / output_bits
    Ratio raw_to_demosaic_bits;        // raw bits/frame over demosaiced bits/frame
    bool has_conv = false;
    Ratio conv_spatial_reduction;      // (stride * ... ) spatial element drop, e.g. 4/1
    Ratio conv_channel_increase;       // out_channels / 3
    Ratio demosaic_to_conv_bits;       // demosaiced bits/frame over conv bits/frame
    double energy_per_bit = 0;         // optional linear energy model; 0 = unset
};

struct ConvSummary {
    int out_channels = 8;
    int stride = 2;
};

/// First-principles bit counts for the mosaiced raw frame, the in-pixel
/// demosaiced frame, and (optionally) the fused first-convolution output.
/// All ratios are exact rationals of integer bit counts.
BandwidthReport bandwidth_report(int width, int height, int bit_depth,
                                 const ConvSummary* conv = nullptr, int output_bits = 8,
                                 double energy_per_bit = 0.0);

std::string bandwidth_report_csv(const BandwidthReport& r);
std::string bandwidth_report_text(const BandwidthReport& r);
std::string histogram_csv(const HistogramReport& r);
/// Two-column (bin center, count) data per plane, blank-line separated.
std::string histogram_gnuplot(const HistogramReport& r);

} // namespace rawpipe
