#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rawpipe/invisp.hpp"

using namespace rawpipe;

namespace {

std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

TensorF64 random_tensor(std::vector<std::size_t> dims, std::uint64_t seed, double lo = 0,
                        double hi = 1) {
    Prng rng(seed);
    TensorF64 t(std::move(dims));
    for (auto& v : t.data) v = lo + (hi - lo) * rng.next_real();
    return t;
}

double max_abs_diff(const TensorF64& a, const TensorF64& b) {
    REQUIRE(a.dims == b.dims);
    double m = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

// Builds a subnet computing y = scale * x per channel (pairs of ReLU
// branches: scale*x = scale*relu(x) - scale*relu(-x)), for the scalar
// coupling hand-checks.
flow::SubNetParams<double> linear_subnet(double scale) {
    flow::SubNetParams<double> s;
    s.c1.in_ch = 1;
    s.c1.out_ch = 2;
    s.c1.resize();
    s.c2.in_ch = 2;
    s.c2.out_ch = 1;
    s.c2.resize();
    s.c1.w[4] = 1.0;       // hidden0 center tap: +x
    s.c1.w[9 + 4] = -1.0;  // hidden1 center tap: -x
    s.c2.w[4] = scale;
    s.c2.w[9 + 4] = -scale;
    return s;
}

flow::CouplingParams<double> scalar_block(double r_scale, double t_scale) {
    flow::CouplingParams<double> b;
    b.D = 2;
    b.d = 1;
    b.alpha = 2.0;
    b.r = linear_subnet(r_scale);
    b.s = linear_subnet(0.0);
    b.t = linear_subnet(t_scale);
    return b;
}

} // namespace

TEST_CASE("squeeze: q=1 identity, shape arithmetic, exact round-trip") {
    TensorF64 t = random_tensor({3, 4, 4}, 1);
    TensorF64 id = flow::squeeze(t, 1);
    CHECK(id.dims == t.dims);
    CHECK(id.data == t.data);

    TensorF64 sq = flow::squeeze(t, 2);
    CHECK(sq.dims == std::vector<std::size_t>{12, 2, 2});
    CHECK(sq.numel() == t.numel());
    TensorF64 back = flow::unsqueeze(sq, 2);
    CHECK(back.data == t.data); // bit-exact

    TensorF64 odd = random_tensor({3, 5, 4}, 2);
    CHECK_THROWS_AS(flow::squeeze(odd, 2), DimensionError);
}

TEST_CASE("coupling hand case: m=(1,2) -> n=(5,7) and back") {
    auto block = scalar_block(2.0, 1.0);
    std::vector<double> x = {1.0, 2.0}; // 2 channels, 1x1 spatial
    flow::coupling_forward(block, x.data(), 1, 1, static_cast<flow::CouplingCache<double>*>(nullptr));
    CHECK(x[0] == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(x[1] == doctest::Approx(7.0).epsilon(1e-14));
    flow::coupling_inverse(block, x.data(), 1, 1, static_cast<flow::CouplingCache<double>*>(nullptr));
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(x[1] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("zero subnets give the identity coupling") {
    auto block = scalar_block(0.0, 0.0);
    std::vector<double> x = {0.3, -0.7};
    flow::coupling_forward(block, x.data(), 1, 1, static_cast<flow::CouplingCache<double>*>(nullptr));
    CHECK(x[0] == 0.3);
    CHECK(x[1] == -0.7);
}

TEST_CASE("mix: identity, swap, orthonormal round-trip") {
    const std::size_t plane = 4;
    {
        flow::MixParams<double> m;
        m.D = 2;
        m.w = {1, 0, 0, 1};
        std::vector<double> x = {1, 2, 3, 4, 5, 6, 7, 8};
        auto orig = x;
        flow::mix_apply(m.w, 2, x.data(), plane);
        CHECK(x == orig);
    }
    {
        flow::MixParams<double> m;
        m.D = 2;
        m.w = {0, 1, 1, 0};
        std::vector<double> x = {1, 2, 3, 4, 5, 6, 7, 8};
        flow::mix_apply(m.w, 2, x.data(), plane);
        CHECK(x == std::vector<double>{5, 6, 7, 8, 1, 2, 3, 4});
        flow::mix_apply(m.w, 2, x.data(), plane); // self-inverse
        CHECK(x == std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8});
    }
    {
        InvIspModel m = init_model({}, 3);
        const auto& mix = m.blocks[0].mix;
        TensorF64 x = random_tensor({12, 2, 2}, 4, -1, 1);
        TensorF64 orig = x;
        flow::mix_apply(mix.w, 12, x.data.data(), 4);
        flow::mix_apply(mix.w_inv, 12, x.data.data(), 4);
        CHECK(max_abs_diff(x, orig) < 1e-12);
    }
}

TEST_CASE("near-singular mix rejected") {
    std::vector<double> w(4, 0.0);
    w[0] = 1.0; // rank 1
    std::vector<double> inv;
    double det;
    CHECK_THROWS_AS(flow::invert_matrix(w, 2, inv, det), SingularityError);
}

TEST_CASE("fresh model couplings are exact identity; round-trip tight") {
    InvIspModel m = init_model({}, 7);
    TensorF64 x = random_tensor({3, 8, 8}, 8);
    // zero-init final stages: forward equals pure channel mixing, so the
    // inverse recovers the input to rounding error
    TensorF64 back = model_inverse(m, model_forward(m, x));
    CHECK(max_abs_diff(back, x) < 1e-12);
}

TEST_CASE("random model round-trip, double then float") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        ModelHyperparams hp;
        hp.hidden = 16;
        InvIspModel m = random_model(hp, seed);
        TensorF64 x = random_tensor({3, 16, 16}, 100 + seed);
        CHECK(max_abs_diff(model_inverse(m, model_forward(m, x)), x) < 1e-9);

        TensorF32 xf = tensor_cast<float>(x);
        TensorF32 backf = model_inverse(m, model_forward(m, xf));
        float mf = 0;
        for (std::size_t i = 0; i < xf.data.size(); ++i)
            mf = std::max(mf, std::abs(backf.data[i] - xf.data[i]));
        CHECK(mf < 1e-4f);
    }
}

TEST_CASE("scale clamp keeps exp factors bounded at any parameter setting") {
    ModelHyperparams hp;
    hp.hidden = 8;
    hp.K = 2;
    InvIspModel m = random_model(hp, 1, 50.0); // absurdly large weights
    TensorF64 x = random_tensor({3, 8, 8}, 2);
    TensorF64 y = model_forward(m, x); // must not overflow (throws on non-finite)
    for (double v : y.data) CHECK(std::isfinite(v));
}

TEST_CASE("analytic gradients match central finite differences") {
    ModelHyperparams hp;
    hp.q = 2;
    hp.K = 1;
    hp.hidden = 1;
    InvIspModel m = random_model(hp, 21, 0.2);
    REQUIRE(m.param_count() <= 1000);

    std::vector<SamplePair> batch;
    batch.emplace_back(random_tensor({3, 4, 4}, 31, 0.1, 0.9),
                       random_tensor({3, 4, 4}, 32, 0.1, 0.9));
    batch.emplace_back(random_tensor({3, 4, 4}, 33, 0.1, 0.9),
                       random_tensor({3, 4, 4}, 34, 0.1, 0.9));

    LossGrad lg = loss_and_grad(m, batch);
    auto params = m.param_arrays();
    auto grads = lg.grads.param_arrays();
    const double h = 1e-6;
    double worst = 0;
    for (std::size_t a = 0; a < params.size(); ++a) {
        for (std::size_t j = 0; j < params[a]->size(); ++j) {
            double& p = (*params[a])[j];
            const double orig = p;
            p = orig + h;
            m.refresh_mix_inverses();
            const double lp = loss_and_grad(m, batch).loss_total;
            p = orig - h;
            m.refresh_mix_inverses();
            const double lm = loss_and_grad(m, batch).loss_total;
            p = orig;
            m.refresh_mix_inverses();
            const double fd = (lp - lm) / (2 * h);
            const double an = (*grads[a])[j];
            const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-6});
            worst = std::max(worst, rel);
        }
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("loss consistency: rgb = f(raw) gives zero forward term; lambda 0") {
    InvIspModel m = random_model({}, 5);
    TensorF64 raw = random_tensor({3, 8, 8}, 6);
    TensorF64 rgb = model_forward(m, raw);
    LossGrad lg = loss_and_grad(m, {{raw, rgb}});
    CHECK(lg.loss_fwd < 1e-20);

    m.lambda = 0.0;
    LossGrad lg0 = loss_and_grad(m, {{raw, random_tensor({3, 8, 8}, 7)}});
    CHECK(lg0.loss_inv == 0.0);
    CHECK(lg0.loss_total == lg0.loss_fwd);
}

TEST_CASE("poisoned parameters raise a numeric error") {
    InvIspModel m = random_model({}, 9);
    m.blocks[0].coupling.t.c2.b[0] = 1e200;
    TensorF64 raw = random_tensor({3, 8, 8}, 10);
    CHECK_THROWS_AS(loss_and_grad(m, {{raw, raw}}), NumericError);
}

TEST_CASE("checkpoint round-trip preserves every parameter and key") {
    ModelHyperparams hp;
    hp.K = 2;
    hp.hidden = 4;
    InvIspModel m = random_model(hp, 77);
    m.step = 123;
    const std::string path = tmp_path("model.iisp");
    save_checkpoint(m, path);
    InvIspModel back = load_checkpoint(path);
    CHECK(back.q == m.q);
    CHECK(back.K == m.K);
    CHECK(back.hidden == m.hidden);
    CHECK(back.seed == m.seed);
    CHECK(back.step == m.step);
    auto pa = m.param_arrays();
    auto pb = back.param_arrays();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(*pa[i] == *pb[i]);
    std::remove(path.c_str());
}

TEST_CASE("zero-step training returns the initialized model; seeds reproduce") {
    std::vector<SamplePair> data;
    for (int i = 0; i < 4; ++i) {
        TensorF64 raw = random_tensor({3, 8, 8}, 200 + i, 0.05, 0.4);
        data.emplace_back(raw, synth_isp_oracle(raw));
    }
    TrainConfig cfg;
    cfg.steps = 0;
    cfg.seed = 5;
    cfg.hp.K = 2;
    cfg.hp.hidden = 4;
    TrainResult r = train(data, cfg);
    InvIspModel init = init_model(cfg.hp, cfg.seed);
    auto pa = r.model.param_arrays();
    auto pb = init.param_arrays();
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(*pa[i] == *pb[i]);

    // identical seeds give bit-identical checkpoints after real steps
    cfg.steps = 5;
    cfg.checkpoint_path = tmp_path("a.iisp");
    train(data, cfg);
    std::string p2 = tmp_path("b.iisp");
    cfg.checkpoint_path = p2;
    train(data, cfg);
    std::ifstream fa(tmp_path("a.iisp"), std::ios::binary), fb(p2, std::ios::binary);
    std::vector<char> ba((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    std::vector<char> bb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    CHECK(ba == bb);
    std::remove(tmp_path("a.iisp").c_str());
    std::remove(p2.c_str());
}

TEST_CASE("short training on synthetic pairs reduces the loss") {
    std::vector<SamplePair> data;
    for (int i = 0; i < 8; ++i) {
        TensorF64 raw = random_tensor({3, 8, 8}, 300 + i, 0.05, 0.4);
        data.emplace_back(raw, synth_isp_oracle(raw));
    }
    TrainConfig cfg;
    cfg.steps = 60;
    cfg.batch = 4;
    cfg.seed = 3;
    cfg.hp.K = 2;
    cfg.hp.hidden = 8;
    TrainResult r = train(data, cfg);
    REQUIRE(!r.loss_curve.empty());
    CHECK(r.loss_curve.back()[2] < r.loss_curve.front()[2]);
}

TEST_CASE("white balance forward/inverse and gains") {
    RgbImage img = RgbImage::unit_real(2, 2);
    img.values[0][0] = 0.2;
    img.values[1][0] = 0.3;
    img.values[2][0] = 0.4;
    WbGains gains{2, 1, 1};
    RgbImage out = white_balance(img, gains);
    CHECK(out.values[0][0] == doctest::Approx(0.4));
    CHECK(out.values[1][0] == doctest::Approx(0.3));
    CHECK(out.values[2][0] == doctest::Approx(0.4));

    RgbImage identity = white_balance(img, {1, 1, 1});
    CHECK(identity.values == img.values);

    Prng rng(1);
    RgbImage rand = RgbImage::unit_real(8, 8);
    for (auto& p : rand.values)
        for (auto& v : p) v = rng.next_real();
    WbGains g2{2.0, 0.7, 1.5};
    RgbImage rt = inverse_white_balance(white_balance(rand, g2), g2);
    for (int p = 0; p < 3; ++p)
        for (std::size_t i = 0; i < 64; ++i)
            CHECK(rt.values[p][i] == doctest::Approx(rand.values[p][i]).epsilon(1e-12));

    CHECK_THROWS_AS(white_balance(img, {0, 1, 1}), ParameterError);
}

TEST_CASE("gamma fixed points, value, and round-trip") {
    CHECK(gamma_encode(0.0) == 0.0);
    CHECK(gamma_encode(1.0) == 1.0);
    // 0.25^(1/2.2), frozen from independent arithmetic
    CHECK(gamma_encode(0.25, 2.2) == doctest::Approx(0.5325205447199813).epsilon(1e-12));
    CHECK_THROWS_AS(gamma_encode(1.5), RangeError);
    CHECK_THROWS_AS(gamma_decode(-0.1), RangeError);

    Prng rng(2);
    for (int i = 0; i < 10000; ++i) {
        const double v = rng.next_real();
        CHECK(std::abs(gamma_decode(gamma_encode(v, 2.2), 2.2) - v) < 1e-12);
    }
}

TEST_CASE("synthetic ISP oracle stage-by-stage hand values") {
    RgbImage zero = RgbImage::unit_real(2, 2);
    RgbImage z = synth_isp_oracle(zero);
    for (const auto& p : z.values)
        for (double v : p) CHECK(v == 0.0);

    RgbImage gray = RgbImage::unit_real(1, 1);
    for (auto& p : gray.values) p[0] = 0.25;
    RgbImage out = synth_isp_oracle(gray);
    // WB (0.5, 0.25, 0.375); matrix (0.625, 0.15, 0.425); gamma 1/2.2 —
    // frozen from independent hand arithmetic through each stage
    CHECK(out.values[0][0] == doctest::Approx(0.8076406873071397).epsilon(1e-12));
    CHECK(out.values[1][0] == doctest::Approx(0.42217841672115475).epsilon(1e-12));
    CHECK(out.values[2][0] == doctest::Approx(0.6777755175428711).epsilon(1e-12));
}

TEST_CASE("image-level apply clamps to [0,1] and psnr behaves") {
    InvIspModel m = random_model({}, 50);
    Prng rng(51);
    RgbImage img = RgbImage::unit_real(8, 8);
    for (auto& p : img.values)
        for (auto& v : p) v = rng.next_real();
    RgbImage out = model_apply(m, img, FlowDirection::RawToRgb);
    for (const auto& p : out.values)
        for (double v : p) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    TensorF64 t = rgb_to_tensor(img);
    CHECK(psnr(t, t) == std::numeric_limits<double>::infinity());
}
