#include "rawpipe/pixelsim.hpp"

#include <cmath>
#include <sstream>

#include "rawpipe/prng.hpp"

namespace rawpipe {

namespace {
// noise stream tags for coordinate-indexed draws
constexpr std::uint64_t kReadNoiseStream = 1;
constexpr std::uint64_t kGainMismatchStream = 2;
} // namespace

void PixelArrayConfig::validate() const {
    if (rows <= 0 || cols <= 0 || rows % 2 != 0 || cols % 2 != 0)
        throw DimensionError("pixel array dims must be positive and even");
    if (bit_depth < 8 || bit_depth > 16) throw ParameterError("bit depth must be in [8, 16]");
    if (read_noise_sigma < 0 || green_gain_mismatch_sigma < 0)
        throw ParameterError("noise sigmas must be >= 0");
    if (full_well_voltage <= 0) throw ParameterError("full-well voltage must be positive");
}

ReadoutTrace build_schedule(const PixelArrayConfig& config) {
    config.validate();
    ReadoutTrace trace;
    trace.cycles.reserve(config.rows);
    for (int p = 0; p < config.rows / 2; ++p) {
        const int r0 = 2 * p;
        ReadoutCycle rb;
        rb.kind = ReadoutCycle::Kind::RowSelect;
        rb.row_pair = p;
        rb.column_switch_closed = false;
        ReadoutCycle gr;
        gr.kind = ReadoutCycle::Kind::GreenSelect;
        gr.row_pair = p;
        gr.column_switch_closed = true;
        // tile order, so the two greens of a tile are adjacent in the trace
        for (int pair = 0; pair < config.cols / 2; ++pair) {
            const int c0 = 2 * pair;
            for (int dr = 0; dr < 2; ++dr) {
                for (int dc = 0; dc < 2; ++dc) {
                    const int r = r0 + dr, c = c0 + dc;
                    const int color = cfa_color_at(CfaPattern::RGGB, r, c);
                    if (color == 1)
                        gr.reads.push_back({r, c, 'G', pair});
                    else
                        rb.reads.push_back({r, c, color == 0 ? 'R' : 'B', pair});
                }
            }
        }
        trace.cycles.push_back(std::move(rb));
        trace.cycles.push_back(std::move(gr));
    }
    return trace;
}

int adc(double voltage, int bit_depth) {
    if (std::isnan(voltage)) throw NumericError("NaN voltage at ADC input");
    const double mc = max_code(bit_depth);
    double v = std::floor(voltage * mc + 0.5);
    if (v < 0) v = 0;
    if (v > mc) v = mc;
    return static_cast<int>(v);
}

RgbImage simulate_readout(const TensorF64& voltages, const PixelArrayConfig& config) {
    config.validate();
    if (voltages.dims.size() != 2 ||
        voltages.dims[0] != static_cast<std::size_t>(config.rows) ||
        voltages.dims[1] != static_cast<std::size_t>(config.cols))
        throw DimensionError("voltage frame dims do not match config");

    auto volt = [&](int r, int c) {
        return voltages.data[static_cast<std::size_t>(r) * config.cols + c];
    };
    auto noise = [&](int r, int c) {
        if (config.read_noise_sigma == 0.0) return 0.0;
        Prng p(derive_stream(config.seed, kReadNoiseStream, static_cast<std::uint64_t>(r),
                             static_cast<std::uint64_t>(c)));
        return p.next_gaussian(config.read_noise_sigma);
    };
    auto green_gain = [&](int r, int c) {
        if (config.green_gain_mismatch_sigma == 0.0) return 1.0;
        Prng p(derive_stream(config.seed, kGainMismatchStream, static_cast<std::uint64_t>(r),
                             static_cast<std::uint64_t>(c)));
        return 1.0 + p.next_gaussian(config.green_gain_mismatch_sigma);
    };

    const ReadoutTrace trace = build_schedule(config);
    RgbImage out = RgbImage::integer(config.cols / 2, config.rows / 2, config.bit_depth);
    for (const ReadoutCycle& cycle : trace.cycles) {
        if (cycle.kind == ReadoutCycle::Kind::RowSelect) {
            for (const ReadoutRead& rd : cycle.reads) {
                const int code = adc(volt(rd.row, rd.col) + noise(rd.row, rd.col),
                                     config.bit_depth);
                out.code_at(rd.channel == 'R' ? 0 : 2, rd.row / 2, rd.col / 2) =
                    static_cast<std::uint16_t>(code);
            }
        } else {
            // greens arrive in pairs on the joined line; digitize each and
            // divide in the digital domain by a right shift
            for (std::size_t i = 0; i + 1 < cycle.reads.size(); i += 2) {
                const ReadoutRead& a = cycle.reads[i];
                const ReadoutRead& b = cycle.reads[i + 1];
                const std::uint32_t d1 = static_cast<std::uint32_t>(
                    adc(volt(a.row, a.col) * green_gain(a.row, a.col) + noise(a.row, a.col),
                        config.bit_depth));
                const std::uint32_t d2 = static_cast<std::uint32_t>(
                    adc(volt(b.row, b.col) * green_gain(b.row, b.col) + noise(b.row, b.col),
                        config.bit_depth));
                out.code_at(1, a.row / 2, a.col / 2) = static_cast<std::uint16_t>((d1 + d2) >> 1);
            }
        }
    }
    return out;
}

std::size_t schedule_cycle_count(const PixelArrayConfig& config, ScheduleKind kind) {
    config.validate();
    const std::size_t pairs = static_cast<std::size_t>(config.rows) / 2;
    return kind == ScheduleKind::Proposed ? pairs * 2 : pairs * 4;
}

double frame_rate_overhead(const PixelArrayConfig& config, ScheduleKind kind) {
    return static_cast<double>(schedule_cycle_count(config, kind)) /
           static_cast<double>(config.rows);
}

std::string format_trace(const ReadoutTrace& trace) {
    std::ostringstream os;
    for (std::size_t n = 0; n < trace.cycles.size(); ++n) {
        const ReadoutCycle& c = trace.cycles[n];
        const int r0 = 2 * c.row_pair;
        os << "cycle " << n << ": ";
        if (c.kind == ReadoutCycle::Kind::RowSelect)
            os << "ROWSEL <" << r0 << "," << r0 + 1 << "> SWITCH=open";
        else
            os << "GREENSEL <" << r0 << "," << r0 + 1 << "> SWITCH=closed";
        os << " -> reads [";
        for (std::size_t i = 0; i < c.reads.size(); ++i) {
            if (i) os << ",";
            os << "(" << c.reads[i].row << "," << c.reads[i].col << "," << c.reads[i].channel
               << ")";
        }
        os << "]\n";
    }
    return os.str();
}

} // namespace rawpipe
