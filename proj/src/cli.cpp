#include "rawpipe/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <atomic>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rawpipe/analysis.hpp"
#include "rawpipe/cfa.hpp"
#include "rawpipe/invisp.hpp"
#include "rawpipe/io.hpp"
#include "rawpipe/p2m.hpp"
#include "rawpipe/pixelsim.hpp"

namespace fs = std::filesystem;

namespace rawpipe::cli {
namespace {

struct GlobalFlags {
    std::uint64_t seed = 0;
    std::string precision = "f64";
    bool quiet = false;
};

void note(const GlobalFlags& g, const std::string& msg) {
    if (!g.quiet) std::cout << msg << "\n";
}

int worker_count() {
    if (const char* env = std::getenv("RAWPIPE_THREADS")) {
        const long n = std::atol(env);
        if (n > 0) return static_cast<int>(n);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

bool has_suffix(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open for writing: " + path, 0);
    f << text;
}

// Voltage frames for the read-out simulator come either from a 2-D FTEN
// tensor or from a PGM (codes normalized by the file's bit depth).
TensorF64 load_voltages(const std::string& path) {
    if (has_suffix(path, ".ften")) {
        TensorF64 t = load_tensor(path);
        if (t.dims.size() != 2) throw DimensionError("voltage tensor must be 2-D");
        return t;
    }
    BayerImage b = load_bayer_pgm(path);
    TensorF64 t({static_cast<std::size_t>(b.height), static_cast<std::size_t>(b.width)});
    for (std::size_t i = 0; i < b.data.size(); ++i)
        t.data[i] = normalize(b.data[i], b.bit_depth);
    return t;
}

ConvSpec load_conv_spec(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open spec manifest: " + path, 0);
    nlohmann::json j;
    f >> j;
    ConvSpec s;
    s.out_channels = j.at("out_channels").get<int>();
    s.kernel = j.at("kernel").get<int>();
    s.stride = j.at("stride").get<int>();
    const fs::path base = fs::path(path).parent_path();
    s.weights = load_tensor((base / j.at("weights").get<std::string>()).string());
    if (j.contains("bias")) {
        TensorF64 b = load_tensor((base / j.at("bias").get<std::string>()).string());
        s.bias = b.data;
    } else {
        s.bias.assign(s.out_channels, 0.0);
    }
    s.validate();
    return s;
}

RgbImage apply_model_image(const InvIspModel& m, const RgbImage& img, FlowDirection dir,
                           const std::string& precision) {
    RgbImage out;
    if (precision == "f64") {
        out = model_apply(m, img, dir);
    } else {
        // float evaluation path; parameters stay double, activations are float
        TensorF32 x = tensor_cast<float>(rgb_to_tensor(img));
        TensorF32 y = dir == FlowDirection::RawToRgb ? model_forward(m, x) : model_inverse(m, x);
        out = tensor_to_rgb(tensor_cast<double>(y));
    }
    return out.to_integer(img.bit_depth); // PPM keeps the input code depth
}

// ------------------------------------------------------------ subcommands

int cmd_mosaic(const GlobalFlags& g, const std::string& in, const std::string& out,
               const std::string& pattern) {
    RgbImage img = load_rgb_ppm(in);
    BayerImage b = mosaic(img, cfa_pattern_from_string(pattern));
    save_bayer_pgm(b, out);
    note(g, "wrote " + out);
    return 0;
}

int cmd_demosaic(const GlobalFlags& g, const std::string& in, const std::string& out,
                 const std::string& method) {
    BayerImage b = load_bayer_pgm(in);
    RgbImage img = method == "bilinear" ? demosaic_bilinear(b) : demosaic_inpixel(b);
    save_rgb_ppm(img, out);
    note(g, "wrote " + out);
    return 0;
}

int cmd_pixelsim(const GlobalFlags& g, const std::string& in, const std::string& out,
                 int bit_depth, double noise_sigma, double mismatch_sigma,
                 const std::string& trace_path) {
    TensorF64 v = load_voltages(in);
    PixelArrayConfig cfg;
    cfg.rows = static_cast<int>(v.dims[0]);
    cfg.cols = static_cast<int>(v.dims[1]);
    cfg.bit_depth = bit_depth;
    cfg.read_noise_sigma = noise_sigma;
    cfg.green_gain_mismatch_sigma = mismatch_sigma;
    cfg.seed = g.seed;
    if (!trace_path.empty()) write_text(trace_path, format_trace(build_schedule(cfg)));
    if (!out.empty()) {
        save_rgb_ppm(simulate_readout(v, cfg), out);
        note(g, "wrote " + out);
    }
    return 0;
}

int cmd_invisp_train(const GlobalFlags& g, const std::string& data_dir, const std::string& out,
                     long steps, double lr, int batch, int hidden, int blocks, double lambda,
                     const std::string& log_csv) {
    // pairs are <stem>_raw.ppm with <stem>_rgb.ppm in the data directory
    std::vector<SamplePair> dataset;
    std::vector<fs::path> raws;
    if (fs::exists(data_dir))
        for (const auto& e : fs::directory_iterator(data_dir))
            if (has_suffix(e.path().filename().string(), "_raw.ppm")) raws.push_back(e.path());
    std::sort(raws.begin(), raws.end());
    for (const auto& raw_path : raws) {
        std::string stem = raw_path.filename().string();
        stem.resize(stem.size() - std::string("_raw.ppm").size());
        const fs::path rgb_path = raw_path.parent_path() / (stem + "_rgb.ppm");
        if (!fs::exists(rgb_path))
            throw ParseError("missing pair for " + raw_path.string(), 0);
        dataset.emplace_back(rgb_to_tensor(load_rgb_ppm(raw_path.string()).to_unit_real()),
                             rgb_to_tensor(load_rgb_ppm(rgb_path.string()).to_unit_real()));
    }
    if (dataset.empty() && steps > 0) throw ParseError("no *_raw.ppm pairs in " + data_dir, 0);

    TrainConfig cfg;
    cfg.lr = lr;
    cfg.steps = steps;
    cfg.batch = batch;
    cfg.seed = g.seed;
    cfg.hp.hidden = hidden;
    cfg.hp.K = blocks;
    cfg.hp.lambda = lambda;
    cfg.log_csv_path = log_csv;
    cfg.checkpoint_path = out;
    TrainResult r = train(dataset, cfg);
    if (r.aborted) {
        std::cerr << "training aborted on non-finite loss; checkpoint is last good state\n";
        return 3;
    }
    if (!r.loss_curve.empty())
        note(g, "final loss " + std::to_string(r.loss_curve.back()[2]));
    note(g, "wrote " + out);
    return 0;
}

int cmd_invisp_apply(const GlobalFlags& g, const std::string& model_path,
                     const std::string& direction, const std::string& in, const std::string& out,
                     const std::string& in_dir, const std::string& out_dir) {
    InvIspModel m = load_checkpoint(model_path);
    const FlowDirection dir =
        direction == "raw2rgb" ? FlowDirection::RawToRgb : FlowDirection::RgbToRaw;

    if (!in.empty()) {
        save_rgb_ppm(apply_model_image(m, load_rgb_ppm(in), dir, g.precision), out);
        note(g, "wrote " + out);
        return 0;
    }

    // batch mode: PPM files converted, everything else copied through
    std::vector<fs::path> inputs;
    for (const auto& e : fs::directory_iterator(in_dir))
        if (e.is_regular_file()) inputs.push_back(e.path());
    std::sort(inputs.begin(), inputs.end());
    fs::create_directories(out_dir);

    std::vector<std::string> logs(inputs.size());
    std::vector<std::exception_ptr> errors(inputs.size());
    std::atomic<std::size_t> next{0};
    const int workers = std::min<int>(worker_count(), std::max<std::size_t>(inputs.size(), 1));
    auto work = [&] {
        for (std::size_t i = next++; i < inputs.size(); i = next++) {
            const fs::path dst = fs::path(out_dir) / inputs[i].filename();
            try {
                if (has_suffix(inputs[i].filename().string(), ".ppm")) {
                    RgbImage img = load_rgb_ppm(inputs[i].string());
                    save_rgb_ppm(apply_model_image(m, img, dir, g.precision), dst.string());
                    logs[i] = "converted " + inputs[i].filename().string();
                } else {
                    fs::copy_file(inputs[i], dst, fs::copy_options::overwrite_existing);
                    logs[i] = "copied " + inputs[i].filename().string();
                }
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (errors[i]) std::rethrow_exception(errors[i]);
        note(g, logs[i]);
    }
    return 0;
}

int cmd_fuse(const GlobalFlags& g, const std::string& in, const std::string& spec_path,
             const std::string& mode, const std::string& pattern, const std::string& out) {
    ConvSpec spec = load_conv_spec(spec_path);
    TensorF64 result;
    if (mode == "quantized") {
        result = fused_conv_quantized(load_bayer_pgm(in), spec);
    } else if (has_suffix(in, ".ften")) {
        result = fused_conv(load_tensor(in), spec, cfa_pattern_from_string(pattern));
    } else {
        BayerImage b = load_bayer_pgm(in);
        TensorF64 t({static_cast<std::size_t>(b.height), static_cast<std::size_t>(b.width)});
        for (std::size_t i = 0; i < b.data.size(); ++i)
            t.data[i] = normalize(b.data[i], b.bit_depth);
        result = fused_conv(t, spec, b.pattern);
    }
    save_tensor(result, g.precision == "f32" ? Dtype::Real32 : Dtype::Real64, out);
    note(g, "wrote " + out);
    return 0;
}

HistogramReport histogram_of(const std::string& path, int bins) {
    if (has_suffix(path, ".pgm")) return histogram(load_bayer_pgm(path), bins);
    return histogram(load_rgb_ppm(path), bins);
}

int cmd_stats(const GlobalFlags&, const std::string& in, const std::vector<std::string>& compare,
              int bins, const std::string& out_csv, const std::string& gnuplot_path) {
    if (!compare.empty()) {
        ShiftMetrics m =
            shift_metrics(histogram_of(compare[0], bins), histogram_of(compare[1], bins));
        for (const auto& p : m.planes)
            std::cout << "plane " << p.name << ": mean_delta=" << p.mean_delta
                      << " std_delta=" << p.std_delta << " intersection=" << p.intersection
                      << "\n";
        std::cout << "intersection " << m.intersection << "\n";
        return 0;
    }
    HistogramReport r = histogram_of(in, bins);
    const std::string csv = histogram_csv(r);
    if (out_csv.empty())
        std::cout << csv;
    else
        write_text(out_csv, csv);
    if (!gnuplot_path.empty()) write_text(gnuplot_path, histogram_gnuplot(r));
    return 0;
}

int cmd_bandwidth(const GlobalFlags&, int width, int height, int bit_depth, int out_channels,
                  int stride, int output_bits, double energy_per_bit, bool csv) {
    ConvSummary conv{out_channels, stride};
    BandwidthReport r = bandwidth_report(width, height, bit_depth, out_channels > 0 ? &conv : nullptr,
                                         output_bits, energy_per_bit);
    std::cout << (csv ? bandwidth_report_csv(r) : bandwidth_report_text(r));
    return 0;
}

} // namespace

int run(int argc, const char* const* argv) {
    GlobalFlags g;
    CLI::App app{"ISP-less raw vision pipeline tool"};
    app.require_subcommand(1);
    app.add_option("--seed", g.seed, "PRNG seed for every stochastic stage");
    app.add_option("--precision", g.precision, "flow evaluation precision")
        ->check(CLI::IsMember({"f32", "f64"}));
    app.add_flag("--quiet", g.quiet, "suppress progress output");

    std::string in, out, pattern = "rggb", method = "inpixel", trace_path;
    int bit_depth = 12;
    double noise_sigma = 0, mismatch_sigma = 0;

    auto* mos = app.add_subcommand("mosaic", "RGB PPM -> Bayer PGM");
    mos->add_option("--in", in)->required();
    mos->add_option("--out", out)->required();
    mos->add_option("--pattern", pattern)->check(CLI::IsMember({"rggb", "bggr", "grbg", "gbrg"}));

    auto* dem = app.add_subcommand("demosaic", "Bayer PGM -> RGB PPM");
    dem->add_option("--in", in)->required();
    dem->add_option("--out", out)->required();
    dem->add_option("--method", method)->check(CLI::IsMember({"bilinear", "inpixel"}));

    auto* sim = app.add_subcommand("pixelsim", "cycle-level read-out over a voltage frame");
    sim->add_option("--in", in, "voltage frame (.ften 2-D tensor or .pgm)")->required();
    sim->add_option("--out", out, "demosaiced PPM output");
    sim->add_option("--bit-depth", bit_depth);
    sim->add_option("--noise-sigma", noise_sigma, "read-noise sigma in volts");
    sim->add_option("--mismatch-sigma", mismatch_sigma, "green gain mismatch sigma");
    sim->add_option("--trace", trace_path, "write the cycle schedule as text");

    std::string data_dir, model_path, direction = "rgb2raw", in_dir, out_dir, log_csv;
    long steps = 0;
    double lr = 1e-3, lambda = 1.0;
    int batch = 4, hidden = 16, blocks = 4;

    auto* inv = app.add_subcommand("invisp", "invertible ISP training and conversion");
    inv->require_subcommand(1);
    auto* tr = inv->add_subcommand("train", "fit on <stem>_raw.ppm / <stem>_rgb.ppm pairs");
    tr->add_option("--data", data_dir)->required();
    tr->add_option("--out", out, "checkpoint path")->required();
    tr->add_option("--steps", steps);
    tr->add_option("--lr", lr);
    tr->add_option("--batch", batch);
    tr->add_option("--hidden", hidden);
    tr->add_option("--blocks", blocks);
    tr->add_option("--lambda", lambda);
    tr->add_option("--log", log_csv, "per-step loss CSV");
    auto* ap = inv->add_subcommand("apply", "run a trained flow over PPM files");
    ap->add_option("--model", model_path)->required();
    ap->add_option("--direction", direction)->check(CLI::IsMember({"rgb2raw", "raw2rgb"}));
    ap->add_option("--in", in);
    ap->add_option("--out", out);
    ap->add_option("--in-dir", in_dir);
    ap->add_option("--out-dir", out_dir);

    std::string spec_path, fuse_mode = "real";
    auto* fuse = app.add_subcommand("fuse", "demosaic-fused first convolution");
    fuse->add_option("--in", in, "Bayer frame (.pgm, or .ften unit-real)")->required();
    fuse->add_option("--spec", spec_path, "JSON manifest with conv shape and tensor paths")
        ->required();
    fuse->add_option("--mode", fuse_mode)->check(CLI::IsMember({"real", "quantized"}));
    fuse->add_option("--pattern", pattern)->check(CLI::IsMember({"rggb", "bggr", "grbg", "gbrg"}));
    fuse->add_option("--out", out, "output feature tensor (.ften)")->required();

    std::vector<std::string> compare;
    int bins = 64;
    std::string gnuplot_path;
    auto* st = app.add_subcommand("stats", "histograms and distribution-shift metrics");
    st->add_option("--in", in, "image to histogram (.pgm or .ppm)");
    st->add_option("--compare", compare, "two images to compare")->expected(2);
    st->add_option("--hist-bins", bins)->check(CLI::PositiveNumber);
    st->add_option("--out", out, "histogram CSV path (default stdout)");
    st->add_option("--gnuplot", gnuplot_path, "two-column plot data path");

    int width = 0, height = 0, out_channels = 0, stride = 2, output_bits = 8;
    double energy_per_bit = 0;
    bool csv = false;
    auto* bw = app.add_subcommand("bandwidth", "per-stage bit counts and exact ratios");
    bw->add_option("--width", width)->required();
    bw->add_option("--height", height)->required();
    bw->add_option("--bitdepth", bit_depth);
    bw->add_option("--out-channels", out_channels, "include a fused conv stage");
    bw->add_option("--stride", stride);
    bw->add_option("--output-bits", output_bits);
    bw->add_option("--energy-per-bit", energy_per_bit);
    bw->add_flag("--csv", csv);

    try {
        app.parse(argc, argv);
        if (mos->parsed()) return cmd_mosaic(g, in, out, pattern);
        if (dem->parsed()) return cmd_demosaic(g, in, out, method);
        if (sim->parsed())
            return cmd_pixelsim(g, in, out, bit_depth, noise_sigma, mismatch_sigma, trace_path);
        if (tr->parsed())
            return cmd_invisp_train(g, data_dir, out, steps, lr, batch, hidden, blocks, lambda,
                                    log_csv);
        if (ap->parsed()) {
            if (in.empty() == in_dir.empty())
                throw CLI::ValidationError("apply", "use exactly one of --in or --in-dir");
            if (!in.empty() && out.empty())
                throw CLI::ValidationError("apply", "--in requires --out");
            if (!in_dir.empty() && out_dir.empty())
                throw CLI::ValidationError("apply", "--in-dir requires --out-dir");
            return cmd_invisp_apply(g, model_path, direction, in, out, in_dir, out_dir);
        }
        if (fuse->parsed()) return cmd_fuse(g, in, spec_path, fuse_mode, pattern, out);
        if (st->parsed()) {
            if (in.empty() == compare.empty())
                throw CLI::ValidationError("stats", "use exactly one of --in or --compare");
            return cmd_stats(g, in, compare, bins, out, gnuplot_path);
        }
        if (bw->parsed())
            return cmd_bandwidth(g, width, height, bit_depth, out_channels, stride, output_bits,
                                 energy_per_bit, csv);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1; // help/version exit 0, any usage error 1
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const SingularityError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const ParameterError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace rawpipe::cli
