#include "rawpipe/invisp.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "rawpipe/io.hpp"

namespace rawpipe {

namespace {

void collect_subnet_arrays(flow::SubNetParams<double>& s, std::vector<std::vector<double>*>& out) {
    out.push_back(&s.c1.w);
    out.push_back(&s.c1.b);
    out.push_back(&s.c2.w);
    out.push_back(&s.c2.b);
}

template <class T>
bool all_finite(const std::vector<T>& v) {
    for (T x : v)
        if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
}

flow::SubNetParams<double> make_subnet(int in_ch, int hidden, int out_ch) {
    flow::SubNetParams<double> s;
    s.c1.in_ch = in_ch;
    s.c1.out_ch = hidden;
    s.c1.resize();
    s.c2.in_ch = hidden;
    s.c2.out_ch = out_ch;
    s.c2.resize();
    return s;
}

void he_init(flow::ConvParams<double>& c, Prng& rng) {
    const double sigma = std::sqrt(2.0 / (c.in_ch * c.k * c.k));
    for (double& v : c.w) v = rng.next_gaussian(sigma);
}

std::vector<double> random_orthonormal(int D, Prng& rng) {
    // QR by modified Gram-Schmidt on a seeded Gaussian matrix (columns)
    std::vector<double> a(static_cast<std::size_t>(D) * D);
    for (double& v : a) v = rng.next_gaussian(1.0);
    for (int j = 0; j < D; ++j) {
        for (int k = 0; k < j; ++k) {
            double dot = 0;
            for (int i = 0; i < D; ++i)
                dot += a[static_cast<std::size_t>(i) * D + j] * a[static_cast<std::size_t>(i) * D + k];
            for (int i = 0; i < D; ++i)
                a[static_cast<std::size_t>(i) * D + j] -= dot * a[static_cast<std::size_t>(i) * D + k];
        }
        double norm = 0;
        for (int i = 0; i < D; ++i) {
            const double v = a[static_cast<std::size_t>(i) * D + j];
            norm += v * v;
        }
        norm = std::sqrt(norm);
        if (norm < 1e-8) {
            // degenerate draw; restart the column from a fresh basis vector
            for (int i = 0; i < D; ++i) a[static_cast<std::size_t>(i) * D + j] = (i == j) ? 1.0 : 0.0;
            --j;
            continue;
        }
        for (int i = 0; i < D; ++i) a[static_cast<std::size_t>(i) * D + j] /= norm;
    }
    return a;
}

template <class T>
struct BlockT {
    flow::MixParams<T> mix;
    flow::CouplingParams<T> coupling;
};

template <class T>
flow::ConvParams<T> cast_conv(const flow::ConvParams<double>& c) {
    flow::ConvParams<T> out;
    out.in_ch = c.in_ch;
    out.out_ch = c.out_ch;
    out.k = c.k;
    out.w.assign(c.w.begin(), c.w.end());
    out.b.assign(c.b.begin(), c.b.end());
    return out;
}

template <class T>
flow::SubNetParams<T> cast_subnet(const flow::SubNetParams<double>& s) {
    return {cast_conv<T>(s.c1), cast_conv<T>(s.c2)};
}

template <class T>
std::vector<BlockT<T>> cast_blocks(const InvIspModel& m) {
    std::vector<BlockT<T>> out;
    out.reserve(m.blocks.size());
    for (const auto& b : m.blocks) {
        BlockT<T> bt;
        bt.mix.D = b.mix.D;
        bt.mix.w.assign(b.mix.w.begin(), b.mix.w.end());
        bt.mix.w_inv.assign(b.mix.w_inv.begin(), b.mix.w_inv.end());
        bt.coupling.D = b.coupling.D;
        bt.coupling.d = b.coupling.d;
        bt.coupling.alpha = static_cast<T>(b.coupling.alpha);
        bt.coupling.r = cast_subnet<T>(b.coupling.r);
        bt.coupling.s = cast_subnet<T>(b.coupling.s);
        bt.coupling.t = cast_subnet<T>(b.coupling.t);
        out.push_back(std::move(bt));
    }
    return out;
}

} // namespace

std::vector<std::vector<double>*> InvIspModel::param_arrays() {
    std::vector<std::vector<double>*> out;
    for (auto& b : blocks) {
        out.push_back(&b.mix.w);
        collect_subnet_arrays(b.coupling.r, out);
        collect_subnet_arrays(b.coupling.s, out);
        collect_subnet_arrays(b.coupling.t, out);
    }
    return out;
}

std::vector<const std::vector<double>*> InvIspModel::param_arrays() const {
    auto mut = const_cast<InvIspModel*>(this)->param_arrays();
    return {mut.begin(), mut.end()};
}

std::size_t InvIspModel::param_count() const {
    std::size_t n = 0;
    for (const auto* a : param_arrays()) n += a->size();
    return n;
}

void InvIspModel::refresh_mix_inverses() {
    for (auto& b : blocks) {
        double det = 0;
        flow::invert_matrix(b.mix.w, b.mix.D, b.mix.w_inv, det);
    }
}

InvIspModel init_model(const ModelHyperparams& hp, std::uint64_t seed) {
    if (hp.q <= 0 || hp.K <= 0 || hp.hidden <= 0) throw ParameterError("bad model hyperparams");
    InvIspModel m;
    m.q = hp.q;
    m.D = 3 * hp.q * hp.q;
    m.d = m.D / 2;
    m.K = hp.K;
    m.hidden = hp.hidden;
    m.alpha = hp.alpha;
    m.lambda = hp.lambda;
    m.seed = seed;
    if (m.d <= 0 || m.d >= m.D) throw ParameterError("coupling partition requires D >= 2");

    Prng rng(seed);
    for (int k = 0; k < m.K; ++k) {
        InvIspModel::Block b;
        b.mix.D = m.D;
        b.mix.w = random_orthonormal(m.D, rng);
        b.coupling.D = m.D;
        b.coupling.d = m.d;
        b.coupling.alpha = m.alpha;
        b.coupling.r = make_subnet(m.D - m.d, m.hidden, m.d);
        b.coupling.s = make_subnet(m.d, m.hidden, m.D - m.d);
        b.coupling.t = make_subnet(m.d, m.hidden, m.D - m.d);
        he_init(b.coupling.r.c1, rng);
        he_init(b.coupling.s.c1, rng);
        he_init(b.coupling.t.c1, rng);
        // c2 stays zero: coupling starts as exact identity
        m.blocks.push_back(std::move(b));
    }
    m.refresh_mix_inverses();
    return m;
}

InvIspModel random_model(const ModelHyperparams& hp, std::uint64_t seed, double sigma) {
    InvIspModel m = init_model(hp, seed);
    Prng rng(derive_stream(seed, 0x5EED));
    for (auto& b : m.blocks) {
        for (auto* sn : {&b.coupling.r, &b.coupling.s, &b.coupling.t}) {
            for (double& v : sn->c1.w) v = rng.next_gaussian(sigma);
            for (double& v : sn->c1.b) v = rng.next_gaussian(sigma);
            for (double& v : sn->c2.w) v = rng.next_gaussian(sigma);
            for (double& v : sn->c2.b) v = rng.next_gaussian(sigma);
        }
    }
    return m;
}

namespace {

template <class T>
Tensor<T> apply_blocks(const InvIspModel& model, const Tensor<T>& input, bool forward) {
    if (input.dims.size() != 3 || input.dims[0] != 3)
        throw DimensionError("flow input must be 3 x H x W");
    auto blocks = cast_blocks<T>(model);
    Tensor<T> x = flow::squeeze(input, model.q);
    const int H = static_cast<int>(x.dims[1]);
    const int W = static_cast<int>(x.dims[2]);
    const std::size_t plane = x.dims[1] * x.dims[2];
    if (static_cast<int>(x.dims[0]) != model.D)
        throw DimensionError("squeezed channel count does not match model D");

    if (forward) {
        for (int k = 0; k < model.K; ++k) {
            flow::mix_apply(blocks[k].mix.w, model.D, x.data.data(), plane);
            flow::coupling_forward(blocks[k].coupling, x.data.data(), H, W,
                                   static_cast<flow::CouplingCache<T>*>(nullptr));
            if (!all_finite(x.data))
                throw NumericError("non-finite intermediate in block " + std::to_string(k));
        }
    } else {
        for (int k = model.K - 1; k >= 0; --k) {
            flow::coupling_inverse(blocks[k].coupling, x.data.data(), H, W,
                                   static_cast<flow::CouplingCache<T>*>(nullptr));
            flow::mix_apply(blocks[k].mix.w_inv, model.D, x.data.data(), plane);
            if (!all_finite(x.data))
                throw NumericError("non-finite intermediate in block " + std::to_string(k));
        }
    }
    return flow::unsqueeze(x, model.q);
}

} // namespace

template <class T>
Tensor<T> model_forward(const InvIspModel& model, const Tensor<T>& x) {
    return apply_blocks(model, x, true);
}

template <class T>
Tensor<T> model_inverse(const InvIspModel& model, const Tensor<T>& y) {
    return apply_blocks(model, y, false);
}

template Tensor<float> model_forward<float>(const InvIspModel&, const Tensor<float>&);
template Tensor<double> model_forward<double>(const InvIspModel&, const Tensor<double>&);
template Tensor<float> model_inverse<float>(const InvIspModel&, const Tensor<float>&);
template Tensor<double> model_inverse<double>(const InvIspModel&, const Tensor<double>&);

namespace {

InvIspModel zeros_like(const InvIspModel& m) {
    InvIspModel z = m;
    for (auto* a : z.param_arrays()) std::fill(a->begin(), a->end(), 0.0);
    return z;
}

} // namespace

LossGrad loss_and_grad(const InvIspModel& model, const std::vector<SamplePair>& batch) {
    if (batch.empty()) throw ParameterError("empty batch");
    LossGrad out;
    out.grads = zeros_like(model);
    const int K = model.K;
    const double B = static_cast<double>(batch.size());

    for (const auto& [raw, rgb] : batch) {
        if (raw.dims != rgb.dims) throw DimensionError("paired sample dims differ");
        const double N = static_cast<double>(raw.numel());

        // ---- forward direction: f(raw) vs rgb
        {
            TensorF64 x = flow::squeeze(raw, model.q);
            const int H = static_cast<int>(x.dims[1]);
            const int W = static_cast<int>(x.dims[2]);
            const std::size_t plane = x.dims[1] * x.dims[2];
            if (static_cast<int>(x.dims[0]) != model.D)
                throw DimensionError("sample channel count does not match model");

            std::vector<std::vector<double>> mix_inputs(K);
            std::vector<flow::CouplingCache<double>> caches(K);
            for (int k = 0; k < K; ++k) {
                mix_inputs[k] = x.data;
                flow::mix_apply(model.blocks[k].mix.w, model.D, x.data.data(), plane);
                flow::coupling_forward(model.blocks[k].coupling, x.data.data(), H, W, &caches[k]);
                if (!all_finite(x.data))
                    throw NumericError("non-finite intermediate in block " + std::to_string(k));
            }
            TensorF64 pred = flow::unsqueeze(x, model.q);
            TensorF64 g_pred(pred.dims);
            for (std::size_t i = 0; i < pred.data.size(); ++i) {
                const double diff = pred.data[i] - rgb.data[i];
                out.loss_fwd += diff * diff / (N * B);
                g_pred.data[i] = 2.0 * diff / (N * B);
            }
            TensorF64 g = flow::squeeze(g_pred, model.q);
            for (int k = K - 1; k >= 0; --k) {
                flow::coupling_forward_backward(model.blocks[k].coupling, caches[k], H, W,
                                                g.data.data(), out.grads.blocks[k].coupling);
                flow::mix_forward_backward(model.blocks[k].mix, mix_inputs[k].data(),
                                           g.data.data(), plane, out.grads.blocks[k].mix.w);
            }
        }

        // ---- inverse direction: f^-1(rgb) vs raw, weighted by lambda
        if (model.lambda != 0.0) {
            TensorF64 z = flow::squeeze(rgb, model.q);
            const int H = static_cast<int>(z.dims[1]);
            const int W = static_cast<int>(z.dims[2]);
            const std::size_t plane = z.dims[1] * z.dims[2];

            std::vector<std::vector<double>> mix_outputs(K);
            std::vector<flow::CouplingCache<double>> caches(K);
            for (int k = K - 1; k >= 0; --k) {
                flow::coupling_inverse(model.blocks[k].coupling, z.data.data(), H, W, &caches[k]);
                flow::mix_apply(model.blocks[k].mix.w_inv, model.D, z.data.data(), plane);
                mix_outputs[k] = z.data;
                if (!all_finite(z.data))
                    throw NumericError("non-finite intermediate in block " + std::to_string(k));
            }
            TensorF64 pred = flow::unsqueeze(z, model.q);
            TensorF64 g_pred(pred.dims);
            for (std::size_t i = 0; i < pred.data.size(); ++i) {
                const double diff = pred.data[i] - raw.data[i];
                out.loss_inv += diff * diff / (N * B);
                g_pred.data[i] = 2.0 * model.lambda * diff / (N * B);
            }
            TensorF64 g = flow::squeeze(g_pred, model.q);
            for (int k = 0; k < K; ++k) {
                flow::mix_inverse_backward(model.blocks[k].mix, mix_outputs[k].data(),
                                           g.data.data(), plane, out.grads.blocks[k].mix.w);
                flow::coupling_inverse_backward(model.blocks[k].coupling, caches[k], H, W,
                                                g.data.data(), out.grads.blocks[k].coupling);
            }
        }
    }
    out.loss_total = out.loss_fwd + model.lambda * out.loss_inv;
    if (!std::isfinite(out.loss_total)) throw NumericError("non-finite loss");
    return out;
}

TrainResult train(const std::vector<SamplePair>& dataset, const TrainConfig& cfg) {
    if (dataset.empty() && cfg.steps > 0) throw ParameterError("empty dataset");
    TrainResult res;
    res.model = init_model(cfg.hp, cfg.seed);

    std::ofstream log;
    if (!cfg.log_csv_path.empty()) {
        log.open(cfg.log_csv_path, std::ios::trunc);
        log << "step,loss_fwd,loss_inv,loss_total\n";
    }

    auto params = res.model.param_arrays();
    std::vector<std::vector<double>> adam_m(params.size()), adam_v(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        adam_m[i].assign(params[i]->size(), 0.0);
        adam_v[i].assign(params[i]->size(), 0.0);
    }
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    Prng batch_rng(derive_stream(cfg.seed, 0xBA7C4));
    for (long step = 0; step < cfg.steps; ++step) {
        std::vector<SamplePair> batch;
        batch.reserve(cfg.batch);
        for (int i = 0; i < cfg.batch; ++i)
            batch.push_back(dataset[batch_rng.next_u64() % dataset.size()]);

        LossGrad lg;
        try {
            lg = loss_and_grad(res.model, batch);
        } catch (const NumericError&) {
            res.aborted = true; // model holds the last good parameters
            break;
        }
        res.loss_curve.push_back({lg.loss_fwd, lg.loss_inv, lg.loss_total});
        if (log.is_open())
            log << step << "," << lg.loss_fwd << "," << lg.loss_inv << "," << lg.loss_total
                << "\n";

        const double t = static_cast<double>(step + 1);
        const double bc1 = 1.0 - std::pow(beta1, t);
        const double bc2 = 1.0 - std::pow(beta2, t);
        auto grads = lg.grads.param_arrays();
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto& p = *params[i];
            const auto& gr = *grads[i];
            for (std::size_t j = 0; j < p.size(); ++j) {
                adam_m[i][j] = beta1 * adam_m[i][j] + (1.0 - beta1) * gr[j];
                adam_v[i][j] = beta2 * adam_v[i][j] + (1.0 - beta2) * gr[j] * gr[j];
                p[j] -= cfg.lr * (adam_m[i][j] / bc1) / (std::sqrt(adam_v[i][j] / bc2) + eps);
            }
        }
        res.model.refresh_mix_inverses();
        res.model.step++;
    }

    if (!cfg.checkpoint_path.empty()) save_checkpoint(res.model, cfg.checkpoint_path);
    return res;
}

// ------------------------------------------------------------ checkpoints

namespace {

void append_named_tensor(std::vector<unsigned char>& out, const std::string& name,
                         const std::vector<double>& data, std::vector<std::size_t> dims) {
    out.push_back(static_cast<unsigned char>(name.size() & 0xFF));
    out.push_back(static_cast<unsigned char>((name.size() >> 8) & 0xFF));
    out.insert(out.end(), name.begin(), name.end());
    TensorF64 t(std::move(dims), data);
    auto blob = tensor_to_bytes(t, Dtype::Real64);
    out.insert(out.end(), blob.begin(), blob.end());
}

std::vector<std::pair<std::string, const flow::SubNetParams<double>*>>
subnet_list(const InvIspModel::Block& b) {
    return {{"r", &b.coupling.r}, {"s", &b.coupling.s}, {"t", &b.coupling.t}};
}

} // namespace

void save_checkpoint(const InvIspModel& model, const std::string& path) {
    std::ostringstream hdr;
    hdr << "q=" << model.q << "\nK=" << model.K << "\nh=" << model.hidden << "\nd=" << model.d
        << "\nalpha=" << model.alpha << "\nlambda=" << model.lambda << "\nseed=" << model.seed
        << "\nstep=" << model.step << "\n";
    const std::string header = hdr.str();

    std::vector<unsigned char> out;
    out.push_back('I');
    out.push_back('I');
    out.push_back('S');
    out.push_back('P');
    out.push_back(0x01);
    const std::uint32_t hlen = static_cast<std::uint32_t>(header.size());
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((hlen >> (8 * i)) & 0xFF));
    out.insert(out.end(), header.begin(), header.end());

    for (int k = 0; k < model.K; ++k) {
        const auto& b = model.blocks[k];
        const std::string prefix = "b" + std::to_string(k) + ".";
        const std::size_t D = static_cast<std::size_t>(model.D);
        append_named_tensor(out, prefix + "mix.W", b.mix.w, {D, D});
        for (auto& [name, sn] : subnet_list(b)) {
            const flow::ConvParams<double>* convs[2] = {&sn->c1, &sn->c2};
            const char* cnames[2] = {"c1", "c2"};
            for (int ci = 0; ci < 2; ++ci) {
                const auto* conv = convs[ci];
                append_named_tensor(out, prefix + name + "." + cnames[ci] + ".w", conv->w,
                                    {static_cast<std::size_t>(conv->out_ch),
                                     static_cast<std::size_t>(conv->in_ch),
                                     static_cast<std::size_t>(conv->k),
                                     static_cast<std::size_t>(conv->k)});
                append_named_tensor(out, prefix + name + "." + cnames[ci] + ".b", conv->b,
                                    {static_cast<std::size_t>(conv->out_ch)});
            }
        }
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ParseError("cannot open checkpoint for writing: " + path, 0);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

InvIspModel load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open checkpoint: " + path, 0);
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
    if (buf.size() < 9 || std::memcmp(buf.data(), "IISP", 4) != 0)
        throw ParseError("bad checkpoint magic", 0);
    if (buf[4] != 0x01) throw ParseError("unsupported checkpoint version", 4);
    std::uint32_t hlen = 0;
    for (int i = 0; i < 4; ++i) hlen |= static_cast<std::uint32_t>(buf[5 + i]) << (8 * i);
    if (buf.size() < 9 + hlen) throw ParseError("truncated checkpoint header", buf.size());

    std::map<std::string, std::string> kv;
    {
        std::istringstream hs(std::string(buf.begin() + 9, buf.begin() + 9 + hlen));
        std::string line;
        while (std::getline(hs, line)) {
            auto eq = line.find('=');
            if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
        }
    }
    ModelHyperparams hp;
    hp.q = std::stoi(kv.at("q"));
    hp.K = std::stoi(kv.at("K"));
    hp.hidden = std::stoi(kv.at("h"));
    hp.alpha = std::stod(kv.at("alpha"));
    hp.lambda = std::stod(kv.at("lambda"));
    InvIspModel model = init_model(hp, std::stoull(kv.at("seed")));
    model.step = std::stol(kv.at("step"));

    std::map<std::string, TensorF64> tensors;
    std::size_t pos = 9 + hlen;
    while (pos < buf.size()) {
        if (pos + 2 > buf.size()) throw ParseError("truncated tensor record", pos);
        const std::size_t nlen = buf[pos] | (static_cast<std::size_t>(buf[pos + 1]) << 8);
        pos += 2;
        if (pos + nlen > buf.size()) throw ParseError("truncated tensor name", pos);
        std::string name(buf.begin() + pos, buf.begin() + pos + nlen);
        pos += nlen;
        std::size_t consumed = 0;
        tensors[name] = tensor_from_bytes(buf.data() + pos, buf.size() - pos, &consumed);
        pos += consumed;
    }

    auto fetch = [&](const std::string& name, std::vector<double>& dst) {
        auto it = tensors.find(name);
        if (it == tensors.end()) throw ParseError("missing tensor " + name + " in checkpoint", 0);
        if (it->second.data.size() != dst.size())
            throw ParseError("tensor " + name + " has unexpected size", 0);
        dst = it->second.data;
    };
    for (int k = 0; k < model.K; ++k) {
        auto& b = model.blocks[k];
        const std::string prefix = "b" + std::to_string(k) + ".";
        fetch(prefix + "mix.W", b.mix.w);
        for (auto& [name, sn] : subnet_list(b)) {
            auto* mut = const_cast<flow::SubNetParams<double>*>(sn);
            fetch(prefix + name + ".c1.w", mut->c1.w);
            fetch(prefix + name + ".c1.b", mut->c1.b);
            fetch(prefix + name + ".c2.w", mut->c2.w);
            fetch(prefix + name + ".c2.b", mut->c2.b);
        }
    }
    model.refresh_mix_inverses();
    return model;
}

// ------------------------------------------------- pipeline-variant ops

namespace {
void require_unit_real(const RgbImage& img, const char* what) {
    if (img.encoding != RgbEncoding::UnitReal)
        throw EncodingError(std::string(what) + " requires unit-real encoding");
}
} // namespace

RgbImage white_balance(const RgbImage& rgb, const WbGains& gains) {
    require_unit_real(rgb, "white_balance");
    if (gains.r <= 0 || gains.g <= 0 || gains.b <= 0)
        throw ParameterError("white-balance gains must be positive");
    RgbImage out = rgb;
    const double g[3] = {gains.r, gains.g, gains.b};
    for (int p = 0; p < 3; ++p)
        for (double& v : out.values[p]) v *= g[p];
    return out;
}

RgbImage inverse_white_balance(const RgbImage& rgb, const WbGains& gains) {
    if (gains.r <= 0 || gains.g <= 0 || gains.b <= 0)
        throw ParameterError("white-balance gains must be positive");
    return white_balance(rgb, {1.0 / gains.r, 1.0 / gains.g, 1.0 / gains.b});
}

double gamma_encode(double v, double gamma) {
    if (!(v >= 0.0 && v <= 1.0)) throw RangeError("gamma input outside [0, 1]");
    return std::pow(v, 1.0 / gamma);
}

double gamma_decode(double v, double gamma) {
    if (!(v >= 0.0 && v <= 1.0)) throw RangeError("gamma input outside [0, 1]");
    return std::pow(v, gamma);
}

RgbImage gamma_encode(const RgbImage& rgb, double gamma) {
    require_unit_real(rgb, "gamma_encode");
    RgbImage out = rgb;
    for (int p = 0; p < 3; ++p)
        for (double& v : out.values[p]) v = gamma_encode(v, gamma);
    return out;
}

RgbImage gamma_decode(const RgbImage& rgb, double gamma) {
    require_unit_real(rgb, "gamma_decode");
    RgbImage out = rgb;
    for (int p = 0; p < 3; ++p)
        for (double& v : out.values[p]) v = gamma_decode(v, gamma);
    return out;
}

namespace {
constexpr double kSynthWb[3] = {2.0, 1.0, 1.5};
constexpr double kSynthMatrix[3][3] = {
    {1.6, -0.4, -0.2}, {-0.3, 1.5, -0.2}, {-0.1, -0.5, 1.6}};

void synth_pixel(const double in[3], double out[3]) {
    double wb[3];
    for (int c = 0; c < 3; ++c) wb[c] = in[c] * kSynthWb[c];
    for (int c = 0; c < 3; ++c) {
        double v = kSynthMatrix[c][0] * wb[0] + kSynthMatrix[c][1] * wb[1] +
                   kSynthMatrix[c][2] * wb[2];
        v = std::min(1.0, std::max(0.0, v));
        out[c] = std::pow(v, 1.0 / 2.2);
    }
}
} // namespace

RgbImage synth_isp_oracle(const RgbImage& raw) {
    require_unit_real(raw, "synth_isp_oracle");
    RgbImage out = RgbImage::unit_real(raw.width, raw.height);
    const std::size_t n = static_cast<std::size_t>(raw.width) * raw.height;
    for (std::size_t i = 0; i < n; ++i) {
        double in[3] = {raw.values[0][i], raw.values[1][i], raw.values[2][i]};
        double o[3];
        synth_pixel(in, o);
        for (int c = 0; c < 3; ++c) out.values[c][i] = o[c];
    }
    return out;
}

TensorF64 synth_isp_oracle(const TensorF64& raw) {
    if (raw.dims.size() != 3 || raw.dims[0] != 3)
        throw DimensionError("expected 3 x H x W tensor");
    TensorF64 out(raw.dims);
    const std::size_t plane = raw.dims[1] * raw.dims[2];
    for (std::size_t i = 0; i < plane; ++i) {
        double in[3] = {raw.data[i], raw.data[plane + i], raw.data[2 * plane + i]};
        double o[3];
        synth_pixel(in, o);
        for (int c = 0; c < 3; ++c) out.data[c * plane + i] = o[c];
    }
    return out;
}

// ---------------------------------------------------------- conveniences

TensorF64 rgb_to_tensor(const RgbImage& img) {
    const RgbImage u = img.encoding == RgbEncoding::UnitReal ? img : img.to_unit_real();
    TensorF64 t({3, static_cast<std::size_t>(u.height), static_cast<std::size_t>(u.width)});
    const std::size_t plane = static_cast<std::size_t>(u.width) * u.height;
    for (int c = 0; c < 3; ++c)
        std::copy(u.values[c].begin(), u.values[c].end(), t.data.begin() + c * plane);
    return t;
}

RgbImage tensor_to_rgb(const TensorF64& t, bool clamp01) {
    if (t.dims.size() != 3 || t.dims[0] != 3) throw DimensionError("expected 3 x H x W tensor");
    RgbImage img = RgbImage::unit_real(static_cast<int>(t.dims[2]), static_cast<int>(t.dims[1]));
    const std::size_t plane = t.dims[1] * t.dims[2];
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < plane; ++i) {
            double v = t.data[c * plane + i];
            if (clamp01) v = std::min(1.0, std::max(0.0, v));
            img.values[c][i] = v;
        }
    return img;
}

RgbImage model_apply(const InvIspModel& model, const RgbImage& img, FlowDirection dir) {
    TensorF64 x = rgb_to_tensor(img);
    TensorF64 y = dir == FlowDirection::RawToRgb ? model_forward(model, x)
                                                 : model_inverse(model, x);
    return tensor_to_rgb(y, true);
}

double psnr(const TensorF64& a, const TensorF64& b, double peak) {
    if (a.dims != b.dims) throw DimensionError("psnr dims differ");
    double mse = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.data.size());
    if (mse == 0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

} // namespace rawpipe
