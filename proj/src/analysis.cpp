#include "rawpipe/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace rawpipe {

namespace {

PlaneHistogram plane_histogram(const std::string& name, const double* values, std::size_t n,
                               double lo, double hi, int bins) {
    PlaneHistogram ph;
    ph.name = name;
    ph.counts.assign(bins, 0);
    const double width = (hi - lo) / bins;
    double sum = 0, sum2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = values[i];
        int b = static_cast<int>((v - lo) / width);
        if (b < 0) b = 0;
        if (b >= bins) b = bins - 1; // last bin right-closed
        ph.counts[b]++;
        sum += v;
        sum2 += v * v;
    }
    ph.mean = sum / static_cast<double>(n);
    ph.stddev = std::sqrt(std::max(0.0, sum2 / static_cast<double>(n) - ph.mean * ph.mean));
    return ph;
}

HistogramReport make_report(double lo, double hi, int bins) {
    if (bins < 2) throw ParameterError("histogram needs at least 2 bins");
    HistogramReport r;
    r.bins = bins;
    r.lo = lo;
    r.hi = hi;
    r.edges.resize(bins + 1);
    for (int i = 0; i <= bins; ++i) r.edges[i] = lo + (hi - lo) * i / bins;
    return r;
}

} // namespace

HistogramReport histogram(const BayerImage& img, int bins) {
    img.validate();
    HistogramReport r = make_report(0.0, static_cast<double>(max_code(img.bit_depth)), bins);
    std::vector<double> vals(img.data.begin(), img.data.end());
    r.planes.push_back(plane_histogram("bayer", vals.data(), vals.size(), r.lo, r.hi, bins));
    return r;
}

HistogramReport histogram(const RgbImage& img, int bins) {
    img.validate();
    const bool integer = img.encoding == RgbEncoding::IntegerCodes;
    HistogramReport r =
        make_report(0.0, integer ? static_cast<double>(max_code(img.bit_depth)) : 1.0, bins);
    static const char* names[3] = {"R", "G", "B"};
    for (int p = 0; p < 3; ++p) {
        std::vector<double> vals;
        if (integer)
            vals.assign(img.codes[p].begin(), img.codes[p].end());
        else
            vals = img.values[p];
        r.planes.push_back(plane_histogram(names[p], vals.data(), vals.size(), r.lo, r.hi, bins));
    }
    return r;
}

ShiftMetrics shift_metrics(const HistogramReport& a, const HistogramReport& b) {
    if (a.bins != b.bins || a.lo != b.lo || a.hi != b.hi || a.planes.size() != b.planes.size())
        throw ParameterError("shift_metrics requires identical bin structure");
    ShiftMetrics m;
    double total = 0;
    for (std::size_t p = 0; p < a.planes.size(); ++p) {
        const auto& pa = a.planes[p];
        const auto& pb = b.planes[p];
        const double na = static_cast<double>(
            std::accumulate(pa.counts.begin(), pa.counts.end(), std::uint64_t{0}));
        const double nb = static_cast<double>(
            std::accumulate(pb.counts.begin(), pb.counts.end(), std::uint64_t{0}));
        double inter = 0;
        for (int i = 0; i < a.bins; ++i)
            inter += std::min(pa.counts[i] / na, pb.counts[i] / nb);
        m.planes.push_back({pa.name, pb.mean - pa.mean, pb.stddev - pa.stddev, inter});
        total += inter;
    }
    m.intersection = total / static_cast<double>(a.planes.size());
    return m;
}

Ratio make_ratio(std::uint64_t num, std::uint64_t den) {
    if (den == 0) throw ParameterError("zero denominator");
    const std::uint64_t g = std::gcd(num, den);
    return {num / g, den / g};
}

BandwidthReport bandwidth_report(int width, int height, int bit_depth, const ConvSummary* conv,
                                 int output_bits, double energy_per_bit) {
    if (width <= 0 || height <= 0 || width % 2 != 0 || height % 2 != 0)
        throw DimensionError("bandwidth report requires positive even dims");
    if (bit_depth < 1 || output_bits < 1) throw ParameterError("bit counts must be positive");

    BandwidthReport r;
    const std::uint64_t wh = static_cast<std::uint64_t>(width) * height;
    const std::uint64_t raw_elems = wh;
    const std::uint64_t dem_elems = 3 * wh / 4;
    r.stages.push_back({"mosaiced_raw", raw_elems, bit_depth,
                        raw_elems * static_cast<std::uint64_t>(bit_depth)});
    r.stages.push_back({"inpixel_demosaiced", dem_elems, output_bits,
                        dem_elems * static_cast<std::uint64_t>(output_bits)});
    r.element_reduction_demosaic = make_ratio(raw_elems, dem_elems); // 4/3 for any even dims
    r.bits_per_element_ratio = make_ratio(bit_depth, output_bits);
    r.raw_to_demosaic_bits = make_ratio(r.stages[0].bits_per_frame, r.stages[1].bits_per_frame);

    if (conv) {
        if (conv->stride < 1 || conv->out_channels < 1) throw ParameterError("bad conv summary");
        const std::uint64_t s = static_cast<std::uint64_t>(conv->stride);
        const std::uint64_t conv_elems =
            static_cast<std::uint64_t>(conv->out_channels) * (wh / 4) / (s * s);
        r.stages.push_back({"fused_conv_output", conv_elems, output_bits,
                            conv_elems * static_cast<std::uint64_t>(output_bits)});
        r.has_conv = true;
        r.conv_spatial_reduction = make_ratio(s * s, 1);
        r.conv_channel_increase = make_ratio(static_cast<std::uint64_t>(conv->out_channels), 3);
        r.demosaic_to_conv_bits =
            make_ratio(r.stages[1].bits_per_frame, r.stages[2].bits_per_frame);
    }
    r.energy_per_bit = energy_per_bit;
    return r;
}

std::string bandwidth_report_csv(const BandwidthReport& r) {
    std::ostringstream os;
    os << "stage,elements,bits_per_element,bits_per_frame";
    os << (r.energy_per_bit > 0 ? ",energy\n" : "\n");
    for (const auto& s : r.stages) {
        os << s.name << "," << s.elements << "," << s.bits_per_element << "," << s.bits_per_frame;
        if (r.energy_per_bit > 0) os << "," << r.energy_per_bit * s.bits_per_frame;
        os << "\n";
    }
    os << "ratio,element_reduction_demosaic," << r.element_reduction_demosaic.num << "/"
       << r.element_reduction_demosaic.den << "," << r.element_reduction_demosaic.value() << "\n";
    os << "ratio,bits_per_element," << r.bits_per_element_ratio.num << "/"
       << r.bits_per_element_ratio.den << "," << r.bits_per_element_ratio.value() << "\n";
    os << "ratio,raw_to_demosaic_bits," << r.raw_to_demosaic_bits.num << "/"
       << r.raw_to_demosaic_bits.den << "," << r.raw_to_demosaic_bits.value() << "\n";
    if (r.has_conv) {
        os << "ratio,conv_spatial_reduction," << r.conv_spatial_reduction.num << "/"
           << r.conv_spatial_reduction.den << "," << r.conv_spatial_reduction.value() << "\n";
        os << "ratio,conv_channel_increase," << r.conv_channel_increase.num << "/"
           << r.conv_channel_increase.den << "," << r.conv_channel_increase.value() << "\n";
        os << "ratio,demosaic_to_conv_bits," << r.demosaic_to_conv_bits.num << "/"
           << r.demosaic_to_conv_bits.den << "," << r.demosaic_to_conv_bits.value() << "\n";
    }
    return os.str();
}

std::string bandwidth_report_text(const BandwidthReport& r) {
    std::ostringstream os;
    os << std::left << std::setw(22) << "stage" << std::right << std::setw(12) << "elements"
       << std::setw(10) << "bits/el" << std::setw(14) << "bits/frame" << "\n";
    for (const auto& s : r.stages)
        os << std::left << std::setw(22) << s.name << std::right << std::setw(12) << s.elements
           << std::setw(10) << s.bits_per_element << std::setw(14) << s.bits_per_frame << "\n";
    auto ratio_line = [&](const char* name, const Ratio& x) {
        os << std::left << std::setw(30) << name << x.num << "/" << x.den << " = " << x.value()
           << "\n";
    };
    ratio_line("element reduction (demosaic)", r.element_reduction_demosaic);
    ratio_line("bits per element", r.bits_per_element_ratio);
    ratio_line("raw/demosaic bits", r.raw_to_demosaic_bits);
    if (r.has_conv) {
        ratio_line("conv spatial reduction", r.conv_spatial_reduction);
        ratio_line("conv channel increase", r.conv_channel_increase);
        ratio_line("demosaic/conv bits", r.demosaic_to_conv_bits);
    }
    if (r.energy_per_bit > 0) {
        for (const auto& s : r.stages)
            os << "energy " << s.name << " = " << r.energy_per_bit * s.bits_per_frame << "\n";
    }
    return os.str();
}

std::string histogram_csv(const HistogramReport& r) {
    std::ostringstream os;
    os << "plane,bin,lo,hi,count\n";
    for (const auto& p : r.planes)
        for (int i = 0; i < r.bins; ++i)
            os << p.name << "," << i << "," << r.edges[i] << "," << r.edges[i + 1] << ","
               << p.counts[i] << "\n";
    return os.str();
}

std::string histogram_gnuplot(const HistogramReport& r) {
    std::ostringstream os;
    for (const auto& p : r.planes) {
        os << "# plane " << p.name << "\n";
        for (int i = 0; i < r.bins; ++i)
            os << 0.5 * (r.edges[i] + r.edges[i + 1]) << " " << p.counts[i] << "\n";
        os << "\n";
    }
    return os.str();
}

} // namespace rawpipe
