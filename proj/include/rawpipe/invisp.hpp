#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rawpipe/flow.hpp"
#include "rawpipe/image.hpp"
#include "rawpipe/prng.hpp"
#include "rawpipe/tensor.hpp"

namespace rawpipe {

/// Invertible ISP: a squeeze, then K blocks of (channel mix, affine
/// coupling), then unsqueeze. Parameters are stored in double precision;
/// the flow can be evaluated in float or double.
struct InvIspModel {
    int q = 2;       // squeeze factor, D = 3 q^2
    int D = 12;
    int d = 6;       // coupling partition
    int K = 4;
    int hidden = 16; // subnet hidden width
    double alpha = 2.0;
    double lambda = 1.0;
    std::uint64_t seed = 0;
    long step = 0;

    struct Block {
        flow::MixParams<double> mix;
        flow::CouplingParams<double> coupling;
    };
    std::vector<Block> blocks;

    /// Trainable arrays in a fixed order (mix W excludes the cached inverse).
    std::vector<std::vector<double>*> param_arrays();
    std::vector<const std::vector<double>*> param_arrays() const;
    std::size_t param_count() const;

    /// Recompute cached mix inverses; throws SingularityError when any
    /// |det W| <= 1e-12.
    void refresh_mix_inverses();
};

struct ModelHyperparams {
    int q = 2;
    int K = 4;
    int hidden = 16;
    double alpha = 2.0;
    double lambda = 1.0;
};

/// Identity-initialized model: mix matrices orthonormal (QR of seeded
/// Gaussians), final subnet stages zero so every coupling starts as the
/// identity.
InvIspModel init_model(const ModelHyperparams& hp, std::uint64_t seed);

/// Model with all subnet stages randomized (Gaussian, given sigma); used
/// to exercise invertibility away from the identity.
InvIspModel random_model(const ModelHyperparams& hp, std::uint64_t seed, double sigma = 0.1);

/// squeeze -> K x (mix, coupling) -> unsqueeze. Input 3 x H x W with q | H,
/// q | W. No clamping inside the flow.
template <class T>
Tensor<T> model_forward(const InvIspModel& model, const Tensor<T>& x);

/// Exact inverse: squeeze -> K x (coupling^-1, mix^-1) in reverse -> unsqueeze.
template <class T>
Tensor<T> model_inverse(const InvIspModel& model, const Tensor<T>& y);

// -------------------------------------------------------------- training

using SamplePair = std::pair<TensorF64, TensorF64>; // (raw, rgb)

struct LossGrad {
    double loss_fwd = 0;
    double loss_inv = 0;
    double loss_total = 0;
    InvIspModel grads; // same shape as the model, parameter arrays hold gradients
};

/// loss = mean|f(raw) - rgb|^2 + lambda * mean|f^-1(rgb) - raw|^2 over the
/// batch (per-element mean). Gradients by analytic reverse-mode through
/// every operation; accumulation order is fixed (sample index order).
LossGrad loss_and_grad(const InvIspModel& model, const std::vector<SamplePair>& batch);

struct TrainConfig {
    double lr = 1e-3;
    long steps = 0;
    int batch = 4;
    std::uint64_t seed = 1;
    ModelHyperparams hp;
    std::string log_csv_path;    // empty = no log
    std::string checkpoint_path; // empty = no checkpoint file
};

struct TrainResult {
    InvIspModel model;
    std::vector<std::array<double, 3>> loss_curve; // fwd, inv, total per step
    bool aborted = false;                          // non-finite loss; model is last good state
};

/// Adam (beta1 0.9, beta2 0.999, eps 1e-8), deterministic per seed.
TrainResult train(const std::vector<SamplePair>& dataset, const TrainConfig& cfg);

// ----------------------------------------------------------- checkpoints

void save_checkpoint(const InvIspModel& model, const std::string& path);
InvIspModel load_checkpoint(const std::string& path);

// ------------------------------------------------- pipeline-variant ops

struct WbGains {
    double r = 1, g = 1, b = 1;
};

/// Per-channel gain; values are not clamped (clamp only at export).
RgbImage white_balance(const RgbImage& rgb, const WbGains& gains);
RgbImage inverse_white_balance(const RgbImage& rgb, const WbGains& gains);

/// v -> v^(1/gamma) on [0,1]; out-of-range input raises RangeError.
double gamma_encode(double v, double gamma = 2.2);
double gamma_decode(double v, double gamma = 2.2);
RgbImage gamma_encode(const RgbImage& rgb, double gamma = 2.2);
RgbImage gamma_decode(const RgbImage& rgb, double gamma = 2.2);

/// Fixed synthetic ISP used to manufacture training pairs: white balance
/// (2.0, 1.0, 1.5), a fixed 3x3 color matrix with clamp to [0,1], then
/// gamma 2.2 encoding.
RgbImage synth_isp_oracle(const RgbImage& raw);
TensorF64 synth_isp_oracle(const TensorF64& raw); // 3 x H x W

// ---------------------------------------------------------- conveniences

TensorF64 rgb_to_tensor(const RgbImage& img);                  // unit-real, 3 x H x W
RgbImage tensor_to_rgb(const TensorF64& t, bool clamp01 = true);

enum class FlowDirection { RawToRgb, RgbToRaw };

/// Image-level application; output clamped to [0,1] at export.
RgbImage model_apply(const InvIspModel& model, const RgbImage& img, FlowDirection dir);

double psnr(const TensorF64& a, const TensorF64& b, double peak = 1.0);

} // namespace rawpipe
