#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "rawpipe/cfa.hpp"
#include "rawpipe/pixelsim.hpp"
#include "rawpipe/prng.hpp"

using namespace rawpipe;

namespace {

TensorF64 random_voltages(int rows, int cols, std::uint64_t seed) {
    Prng rng(seed);
    TensorF64 v({static_cast<std::size_t>(rows), static_cast<std::size_t>(cols)});
    for (auto& x : v.data) x = rng.next_real();
    return v;
}

BayerImage quantize_frame(const TensorF64& v, int bit_depth) {
    BayerImage b(static_cast<int>(v.dims[1]), static_cast<int>(v.dims[0]), bit_depth,
                 CfaPattern::RGGB);
    for (std::size_t i = 0; i < v.data.size(); ++i)
        b.data[i] = static_cast<std::uint16_t>(adc(v.data[i], bit_depth));
    return b;
}

double mean_abs_dev(const RgbImage& a, const RgbImage& b) {
    double s = 0;
    std::size_t n = 0;
    for (int p = 0; p < 3; ++p)
        for (std::size_t i = 0; i < a.codes[p].size(); ++i) {
            s += std::abs(static_cast<int>(a.codes[p][i]) - static_cast<int>(b.codes[p][i]));
            ++n;
        }
    return s / static_cast<double>(n);
}

} // namespace

TEST_CASE("adc endpoints, clamping and rounding") {
    CHECK(adc(1.0, 12) == 4095);
    CHECK(adc(-0.1, 12) == 0);
    CHECK(adc(1.5, 12) == 4095);
    CHECK(adc(0.5, 12) == 2048); // round half up of 2047.5
    CHECK(adc(0.0, 12) == 0);
    CHECK_THROWS_AS(adc(std::nan(""), 12), NumericError);
}

TEST_CASE("2x2 schedule: cycle 0 reads R and B, cycle 1 joined greens") {
    PixelArrayConfig cfg;
    cfg.rows = cfg.cols = 2;
    ReadoutTrace t = build_schedule(cfg);
    REQUIRE(t.cycles.size() == 2);
    CHECK(t.cycles[0].kind == ReadoutCycle::Kind::RowSelect);
    CHECK_FALSE(t.cycles[0].column_switch_closed);
    REQUIRE(t.cycles[0].reads.size() == 2);
    CHECK(t.cycles[0].reads[0].channel == 'R');
    CHECK(t.cycles[0].reads[1].channel == 'B');
    CHECK(t.cycles[1].kind == ReadoutCycle::Kind::GreenSelect);
    CHECK(t.cycles[1].column_switch_closed);
    REQUIRE(t.cycles[1].reads.size() == 2);
    CHECK(t.cycles[1].reads[0].channel == 'G');
    CHECK(t.cycles[1].reads[1].channel == 'G');
}

TEST_CASE("4x4 schedule covers each pixel exactly once in 4 cycles") {
    PixelArrayConfig cfg;
    cfg.rows = cfg.cols = 4;
    ReadoutTrace t = build_schedule(cfg);
    CHECK(t.cycles.size() == 4);
    std::set<std::pair<int, int>> seen;
    for (const auto& c : t.cycles)
        for (const auto& r : c.reads) CHECK(seen.insert({r.row, r.col}).second);
    CHECK(seen.size() == 16);
}

TEST_CASE("trace coverage over random sizes up to 128") {
    Prng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        PixelArrayConfig cfg;
        cfg.rows = 2 * (1 + static_cast<int>(rng.next_u64() % 64));
        cfg.cols = 2 * (1 + static_cast<int>(rng.next_u64() % 64));
        ReadoutTrace t = build_schedule(cfg);
        CHECK(t.cycles.size() == static_cast<std::size_t>(cfg.rows));
        std::set<std::pair<int, int>> seen;
        std::size_t reads = 0;
        for (const auto& c : t.cycles) {
            // Row-Select and Green-Select of a row pair never share a cycle
            for (const auto& r : c.reads) {
                const bool green = cfa_color_at(CfaPattern::RGGB, r.row, r.col) == 1;
                CHECK(green == (c.kind == ReadoutCycle::Kind::GreenSelect));
                CHECK(seen.insert({r.row, r.col}).second);
                ++reads;
            }
        }
        CHECK(reads == static_cast<std::size_t>(cfg.rows) * cfg.cols);
    }
}

TEST_CASE("zero-row config rejected") {
    PixelArrayConfig cfg;
    cfg.rows = 0;
    cfg.cols = 4;
    CHECK_THROWS_AS(build_schedule(cfg), DimensionError);
}

TEST_CASE("noiseless readout equals quantize-then-inpixel-demosaic bit-exactly") {
    for (int size : {2, 4, 16, 64}) {
        PixelArrayConfig cfg;
        cfg.rows = cfg.cols = size;
        TensorF64 v = random_voltages(size, size, 1000 + size);
        RgbImage sim = simulate_readout(v, cfg);
        RgbImage ref = demosaic_inpixel(quantize_frame(v, cfg.bit_depth));
        CHECK(sim.codes == ref.codes);
    }
}

TEST_CASE("read noise is deterministic per seed") {
    PixelArrayConfig cfg;
    cfg.rows = cfg.cols = 8;
    cfg.read_noise_sigma = 0.001;
    cfg.seed = 99;
    TensorF64 v = random_voltages(8, 8, 2);
    RgbImage a = simulate_readout(v, cfg);
    RgbImage b = simulate_readout(v, cfg);
    CHECK(a.codes == b.codes);
    cfg.seed = 100;
    RgbImage c = simulate_readout(v, cfg);
    CHECK(a.codes != c.codes);
}

TEST_CASE("green gain mismatch touches only the green plane") {
    PixelArrayConfig cfg;
    cfg.rows = cfg.cols = 16;
    cfg.seed = 7;
    TensorF64 v = random_voltages(16, 16, 3);
    RgbImage ideal = simulate_readout(v, cfg);
    cfg.green_gain_mismatch_sigma = 0.05;
    RgbImage skewed = simulate_readout(v, cfg);
    CHECK(skewed.codes[0] == ideal.codes[0]);
    CHECK(skewed.codes[2] == ideal.codes[2]);
    CHECK(skewed.codes[1] != ideal.codes[1]);
}

TEST_CASE("noise monotonicity: MAD never decreases along a sigma grid") {
    PixelArrayConfig cfg;
    cfg.rows = cfg.cols = 32;
    cfg.seed = 11;
    TensorF64 v = random_voltages(32, 32, 4);
    RgbImage ideal = simulate_readout(v, cfg);
    double prev = 0;
    for (double sigma : {0.0005, 0.001, 0.002, 0.005, 0.01, 0.02}) {
        cfg.read_noise_sigma = sigma;
        const double mad = mean_abs_dev(simulate_readout(v, cfg), ideal);
        CHECK(mad >= prev);
        prev = mad;
    }
}

TEST_CASE("frame-rate overhead: proposed 1.0, naive per-color 2.0") {
    for (int rows : {2, 8, 64}) {
        PixelArrayConfig cfg;
        cfg.rows = rows;
        cfg.cols = 8;
        CHECK(frame_rate_overhead(cfg) == 1.0);
        CHECK(frame_rate_overhead(cfg, ScheduleKind::SequentialPerColor) == 2.0);
        CHECK(schedule_cycle_count(cfg, ScheduleKind::Proposed) ==
              static_cast<std::size_t>(rows));
    }
}

TEST_CASE("trace text format") {
    PixelArrayConfig cfg;
    cfg.rows = cfg.cols = 2;
    const std::string text = format_trace(build_schedule(cfg));
    CHECK(text.find("cycle 0: ROWSEL <0,1> SWITCH=open -> reads [(0,0,R),(1,1,B)]") !=
          std::string::npos);
    CHECK(text.find("cycle 1: GREENSEL <0,1> SWITCH=closed -> reads [(0,1,G),(1,0,G)]") !=
          std::string::npos);
}
