#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "rawpipe/cfa.hpp"
#include "rawpipe/invisp.hpp"
#include "rawpipe/io.hpp"
#include "rawpipe/pixelsim.hpp"
#include "rawpipe/prng.hpp"

using namespace rawpipe;
namespace fs = std::filesystem;

namespace {

const std::string kCli = RAWPIPE_CLI_PATH;

int run(const std::string& args) {
    const int rc = std::system((kCli + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

int run_capture(const std::string& args, const std::string& out_file) {
    const int rc = std::system((kCli + " " + args + " >" + out_file + " 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("rawpipe_cli_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

RgbImage random_rgb(int w, int h, int bits, std::uint64_t seed) {
    Prng rng(seed);
    RgbImage img = RgbImage::integer(w, h, bits);
    for (auto& p : img.codes)
        for (auto& v : p) v = static_cast<std::uint16_t>(rng.next_u64() % (max_code(bits) + 1));
    return img;
}

} // namespace

TEST_CASE("help exits 0; bad usage exits 1; missing file exits 2") {
    CHECK(run("--help") == 0);
    CHECK(run("frobnicate") == 1);
    CHECK(run("mosaic --in only") == 1);
    CHECK(run("demosaic --in /nonexistent.pgm --out /tmp/x.ppm") == 2);
}

TEST_CASE("mosaic subcommand matches the library call") {
    TempDir d;
    RgbImage img = random_rgb(8, 8, 12, 1);
    save_rgb_ppm(img, d.file("in.ppm"));
    REQUIRE(run("mosaic --in " + d.file("in.ppm") + " --out " + d.file("out.pgm") +
                " --pattern bggr") == 0);
    BayerImage got = load_bayer_pgm(d.file("out.pgm"));
    BayerImage want = mosaic(img, CfaPattern::BGGR);
    CHECK(got.data == want.data);
    CHECK(got.pattern == CfaPattern::BGGR);
}

TEST_CASE("mosaic then inpixel demosaic equals ideal pixelsim output") {
    TempDir d;
    // voltages exactly representable after the ADC: integer codes / (2^12-1)
    Prng rng(2);
    TensorF64 v({16, 16});
    BayerImage quant(16, 16, 12, CfaPattern::RGGB);
    for (std::size_t i = 0; i < v.data.size(); ++i) {
        quant.data[i] = static_cast<std::uint16_t>(rng.next_u64() % 4096);
        v.data[i] = normalize(quant.data[i], 12);
    }
    save_tensor(v, Dtype::Real64, d.file("v.ften"));
    save_bayer_pgm(quant, d.file("q.pgm"));

    REQUIRE(run("pixelsim --in " + d.file("v.ften") + " --out " + d.file("sim.ppm")) == 0);
    REQUIRE(run("demosaic --in " + d.file("q.pgm") + " --method inpixel --out " +
                d.file("dm.ppm")) == 0);
    CHECK(slurp(d.file("sim.ppm")) == slurp(d.file("dm.ppm")));
}

TEST_CASE("pixelsim with noise is byte-identical across runs at a fixed seed") {
    TempDir d;
    Prng rng(3);
    TensorF64 v({8, 8});
    for (auto& x : v.data) x = rng.next_real();
    save_tensor(v, Dtype::Real64, d.file("v.ften"));
    const std::string cmd = "--seed 42 pixelsim --in " + d.file("v.ften") +
                            " --noise-sigma 0.01 --mismatch-sigma 0.02 --out ";
    REQUIRE(run(cmd + d.file("a.ppm")) == 0);
    REQUIRE(run(cmd + d.file("b.ppm")) == 0);
    CHECK(slurp(d.file("a.ppm")) == slurp(d.file("b.ppm")));
    CHECK(!slurp(d.file("a.ppm")).empty());
}

TEST_CASE("pixelsim trace file has the schedule text") {
    TempDir d;
    TensorF64 v({2, 2});
    save_tensor(v, Dtype::Real64, d.file("v.ften"));
    REQUIRE(run("pixelsim --in " + d.file("v.ften") + " --trace " + d.file("t.txt")) == 0);
    const std::string t = slurp(d.file("t.txt"));
    CHECK(t.find("cycle 0: ROWSEL") != std::string::npos);
    CHECK(t.find("GREENSEL") != std::string::npos);
}

TEST_CASE("zero-step training writes the initialization checkpoint") {
    TempDir d;
    fs::create_directories(d.file("data"));
    REQUIRE(run("--seed 9 invisp train --data " + d.file("data") + " --steps 0 --hidden 4" +
                " --blocks 2 --out " + d.file("m.iisp")) == 0);
    InvIspModel got = load_checkpoint(d.file("m.iisp"));
    ModelHyperparams hp;
    hp.hidden = 4;
    hp.K = 2;
    InvIspModel want = init_model(hp, 9);
    auto pa = got.param_arrays();
    auto pb = want.param_arrays();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(*pa[i] == *pb[i]);
}

TEST_CASE("apply round-trips a directory and copies annotations through") {
    TempDir d;
    fs::create_directories(d.file("data"));
    REQUIRE(run("--seed 1 invisp train --data " + d.file("data") + " --steps 0 --out " +
                d.file("m.iisp")) == 0);
    fs::create_directories(d.file("in"));
    RgbImage img = random_rgb(8, 8, 8, 4);
    save_rgb_ppm(img, d.file("in/a.ppm"));
    std::ofstream(d.file("in/a.txt")) << "labels";
    REQUIRE(run("invisp apply --model " + d.file("m.iisp") +
                " --direction rgb2raw --in-dir " + d.file("in") + " --out-dir " +
                d.file("out")) == 0);
    CHECK(fs::exists(d.file("out/a.ppm")));
    CHECK(slurp(d.file("out/a.txt")) == "labels");

    // converted file matches the library call exactly
    InvIspModel m = load_checkpoint(d.file("m.iisp"));
    RgbImage want = model_apply(m, img, FlowDirection::RgbToRaw).to_integer(img.bit_depth);
    RgbImage got = load_rgb_ppm(d.file("out/a.ppm"));
    CHECK(got.codes == want.codes);

    // single-file mode agrees with batch mode byte for byte
    REQUIRE(run("invisp apply --model " + d.file("m.iisp") + " --direction rgb2raw --in " +
                d.file("in/a.ppm") + " --out " + d.file("single.ppm")) == 0);
    CHECK(slurp(d.file("single.ppm")) == slurp(d.file("out/a.ppm")));
}

TEST_CASE("fuse runs a manifest and writes a feature tensor") {
    TempDir d;
    Prng rng(5);
    TensorF64 w({2, 3, 3, 3});
    for (auto& x : w.data) x = rng.next_gaussian(0.5);
    save_tensor(w, Dtype::Real64, d.file("w.ften"));
    TensorF64 b({2});
    b.data = {0.1, -0.2};
    save_tensor(b, Dtype::Real64, d.file("b.ften"));
    std::ofstream(d.file("spec.json"))
        << "{\"out_channels\":2,\"kernel\":3,\"stride\":2,"
           "\"weights\":\"w.ften\",\"bias\":\"b.ften\"}";
    BayerImage frame(16, 16, 12, CfaPattern::RGGB);
    for (auto& x : frame.data) x = static_cast<std::uint16_t>(rng.next_u64() % 4096);
    save_bayer_pgm(frame, d.file("f.pgm"));
    REQUIRE(run("fuse --in " + d.file("f.pgm") + " --spec " + d.file("spec.json") +
                " --mode quantized --out " + d.file("feat.ften")) == 0);
    TensorF64 feat = load_tensor(d.file("feat.ften"));
    CHECK(feat.dims == std::vector<std::size_t>{2, 4, 4});
}

TEST_CASE("stats compares two frames and bandwidth prints exact ratios") {
    TempDir d;
    RgbImage a = random_rgb(16, 16, 8, 6);
    save_rgb_ppm(a, d.file("a.ppm"));
    save_rgb_ppm(random_rgb(16, 16, 8, 7), d.file("b.ppm"));
    REQUIRE(run_capture("stats --compare " + d.file("a.ppm") + " " + d.file("b.ppm") +
                        " --hist-bins 16", d.file("cmp.txt")) == 0);
    CHECK(slurp(d.file("cmp.txt")).find("intersection") != std::string::npos);

    REQUIRE(run_capture("stats --in " + d.file("a.ppm") + " --hist-bins 8", d.file("h.csv")) == 0);
    CHECK(slurp(d.file("h.csv")).find("plane,bin") != std::string::npos);

    REQUIRE(run_capture("bandwidth --width 640 --height 480 --bitdepth 12 --csv",
                        d.file("bw.csv")) == 0);
    const std::string bw = slurp(d.file("bw.csv"));
    CHECK(bw.find("307200") != std::string::npos);
    CHECK(bw.find("230400") != std::string::npos);
    CHECK(bw.find("4/3") != std::string::npos);
}
