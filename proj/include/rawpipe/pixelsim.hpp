#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rawpipe/image.hpp"
#include "rawpipe/tensor.hpp"

namespace rawpipe {

/// Sensor geometry and analog parameters. Voltages are normalized so the
/// full well reads 1.0. The array is wired for the RGGB layout.
struct PixelArrayConfig {
    int rows = 0;
    int cols = 0;
    int bit_depth = 12;
    double full_well_voltage = 1.0;
    double read_noise_sigma = 0.0;
    double green_gain_mismatch_sigma = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct ReadoutRead {
    int row = 0;
    int col = 0;
    char channel = 'R'; // 'R', 'G', 'B'
    int bus = 0;        // column-line index (column pair); greens use the joined pair
};

struct ReadoutCycle {
    enum class Kind { RowSelect, GreenSelect };
    Kind kind = Kind::RowSelect;
    int row_pair = 0; // activates lines of rows 2p and 2p+1
    bool column_switch_closed = false;
    std::vector<ReadoutRead> reads;
};

struct ReadoutTrace {
    std::vector<ReadoutCycle> cycles;
};

enum class ScheduleKind {
    Proposed,          // interleaved Row-Select/Green-Select, 2 cycles per row pair
    SequentialPerColor // naive baseline: one read per color per row pair (4 cycles)
};

/// Cycle plan for the interleaved two-select-line read-out: cycle 2p reads
/// the row pair's R and B sites (switch open), cycle 2p+1 reads both greens
/// onto the joined column line (switch closed). Total cycles = rows.
ReadoutTrace build_schedule(const PixelArrayConfig& config);

/// ADC transfer: clamp(round(v * (2^b - 1)), 0, 2^b - 1), round half up.
int adc(double voltage, int bit_depth);

/// Runs the schedule over a rows x cols voltage frame and returns the
/// demosaiced (rows/2 x cols/2) integer image. Read noise is additive
/// Gaussian on voltage before the ADC; green gain mismatch is a per-pixel
/// multiplicative factor. Noise draws are indexed by pixel coordinate so
/// results are independent of execution order. With all sigmas zero the
/// output is bit-identical to demosaic_inpixel over the quantized frame.
RgbImage simulate_readout(const TensorF64& voltages, const PixelArrayConfig& config);

/// cycles_used / rows; 1.0 for the proposed scheme, 2.0 for the naive
/// per-color baseline.
double frame_rate_overhead(const PixelArrayConfig& config,
                           ScheduleKind kind = ScheduleKind::Proposed);

std::size_t schedule_cycle_count(const PixelArrayConfig& config, ScheduleKind kind);

/// One line per cycle: "cycle <n>: ROWSEL <i,j> | GREENSEL <i,j>
/// SWITCH=closed -> reads [(r,c,ch)...]".
std::string format_trace(const ReadoutTrace& trace);

} // namespace rawpipe
