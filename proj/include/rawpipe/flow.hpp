#pragma once

// Building blocks of the invertible ISP: 3x3 conv subnets, affine coupling,
// invertible per-pixel channel mixing, and space-to-channel squeeze. All
// kernels are templated on the scalar type; the double instantiation also
// has hand-written reverse-mode backward passes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "rawpipe/errors.hpp"
#include "rawpipe/tensor.hpp"

namespace rawpipe::flow {

template <class T>
struct ConvParams {
    int in_ch = 0, out_ch = 0, k = 3;
    std::vector<T> w; // out x in x k x k
    std::vector<T> b; // out

    void resize() {
        w.assign(static_cast<std::size_t>(out_ch) * in_ch * k * k, T(0));
        b.assign(static_cast<std::size_t>(out_ch), T(0));
    }
};

/// conv -> ReLU -> conv, same-size zero padding, stride 1.
template <class T>
struct SubNetParams {
    ConvParams<T> c1, c2;
};

template <class T>
struct CouplingParams {
    int D = 0, d = 0;
    T alpha = T(2);
    SubNetParams<T> r; // D-d -> d
    SubNetParams<T> s; // d -> D-d
    SubNetParams<T> t; // d -> D-d
};

template <class T>
struct MixParams {
    int D = 0;
    std::vector<T> w;     // D x D
    std::vector<T> w_inv; // cached inverse
};

// ---------------------------------------------------------------- conv

template <class T>
void conv2d_forward(const ConvParams<T>& p, const T* in, int H, int W, T* out) {
    const int pad = p.k / 2;
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    for (int oc = 0; oc < p.out_ch; ++oc) {
        T* o = out + oc * plane;
        const T bias = p.b[oc];
        for (std::size_t i = 0; i < plane; ++i) o[i] = bias;
        for (int ic = 0; ic < p.in_ch; ++ic) {
            const T* src = in + ic * plane;
            for (int ky = 0; ky < p.k; ++ky) {
                for (int kx = 0; kx < p.k; ++kx) {
                    const T wv = p.w[((static_cast<std::size_t>(oc) * p.in_ch + ic) * p.k + ky) *
                                         p.k + kx];
                    if (wv == T(0)) continue;
                    const int dy = ky - pad, dx = kx - pad;
                    const int y0 = std::max(0, -dy), y1 = std::min(H, H - dy);
                    const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
                    for (int y = y0; y < y1; ++y) {
                        T* orow = o + static_cast<std::size_t>(y) * W;
                        const T* irow = src + static_cast<std::size_t>(y + dy) * W + dx;
                        for (int x = x0; x < x1; ++x) orow[x] += wv * irow[x];
                    }
                }
            }
        }
    }
}

/// Accumulates input/weight/bias gradients; g_in may be null.
inline void conv2d_backward(const ConvParams<double>& p, const double* in, int H, int W,
                            const double* g_out, double* g_in, ConvParams<double>& g_p) {
    const int pad = p.k / 2;
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    for (int oc = 0; oc < p.out_ch; ++oc) {
        const double* go = g_out + oc * plane;
        double bsum = 0;
        for (std::size_t i = 0; i < plane; ++i) bsum += go[i];
        g_p.b[oc] += bsum;
        for (int ic = 0; ic < p.in_ch; ++ic) {
            const double* src = in + ic * plane;
            double* gi = g_in ? g_in + ic * plane : nullptr;
            for (int ky = 0; ky < p.k; ++ky) {
                for (int kx = 0; kx < p.k; ++kx) {
                    const std::size_t widx =
                        ((static_cast<std::size_t>(oc) * p.in_ch + ic) * p.k + ky) * p.k + kx;
                    const int dy = ky - pad, dx = kx - pad;
                    const int y0 = std::max(0, -dy), y1 = std::min(H, H - dy);
                    const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
                    double wsum = 0;
                    const double wv = p.w[widx];
                    for (int y = y0; y < y1; ++y) {
                        const double* gorow = go + static_cast<std::size_t>(y) * W;
                        const double* irow = src + static_cast<std::size_t>(y + dy) * W + dx;
                        double* girow =
                            gi ? gi + static_cast<std::size_t>(y + dy) * W + dx : nullptr;
                        for (int x = x0; x < x1; ++x) {
                            wsum += gorow[x] * irow[x];
                            if (girow) girow[x] += wv * gorow[x];
                        }
                    }
                    g_p.w[widx] += wsum;
                }
            }
        }
    }
}

// -------------------------------------------------------------- subnet

template <class T>
struct SubNetCache {
    std::vector<T> input; // copy of the subnet input
    std::vector<T> pre1;  // hidden pre-activation
};

template <class T>
void subnet_forward(const SubNetParams<T>& p, const T* in, int H, int W, T* out,
                    SubNetCache<T>* cache, std::vector<T>& scratch) {
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    scratch.resize(static_cast<std::size_t>(p.c1.out_ch) * plane);
    conv2d_forward(p.c1, in, H, W, scratch.data());
    if (cache) {
        cache->input.assign(in, in + static_cast<std::size_t>(p.c1.in_ch) * plane);
        cache->pre1 = scratch;
    }
    for (auto& v : scratch) v = v > T(0) ? v : T(0);
    conv2d_forward(p.c2, scratch.data(), H, W, out);
}

inline void subnet_backward(const SubNetParams<double>& p, const SubNetCache<double>& cache,
                            int H, int W, const double* g_out, double* g_in_accum,
                            SubNetParams<double>& g_p, std::vector<double>& scratch,
                            std::vector<double>& scratch2) {
    const std::size_t hidden = cache.pre1.size();
    scratch.resize(hidden); // relu(pre1)
    for (std::size_t i = 0; i < hidden; ++i)
        scratch[i] = cache.pre1[i] > 0 ? cache.pre1[i] : 0.0;
    scratch2.assign(hidden, 0.0); // grad wrt hidden
    conv2d_backward(p.c2, scratch.data(), H, W, g_out, scratch2.data(), g_p.c2);
    for (std::size_t i = 0; i < hidden; ++i)
        if (cache.pre1[i] <= 0) scratch2[i] = 0.0;
    conv2d_backward(p.c1, cache.input.data(), H, W, scratch2.data(), g_in_accum, g_p.c1);
}

// ------------------------------------------------------------ coupling

template <class T>
struct CouplingCache {
    std::vector<T> m2;   // forward: input second part; inverse: recovered second part
    std::vector<T> n1;   // first part after (forward) / before (inverse) the r update
    std::vector<T> shat; // clamped scale
    std::vector<T> n2mt; // inverse only: n2 - t(n1)
    SubNetCache<T> rc, sc, tc;
};

template <class T>
inline T clamp_scale(T u, T alpha) {
    return alpha * std::tanh(u / alpha);
}

/// n1 = m1 + r(m2); n2 = m2 * exp(shat(n1)) + t(n1). In-place on x (D x H x W).
template <class T>
void coupling_forward(const CouplingParams<T>& p, T* x, int H, int W, CouplingCache<T>* cache) {
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    const std::size_t n_first = static_cast<std::size_t>(p.d) * plane;
    const std::size_t n_second = static_cast<std::size_t>(p.D - p.d) * plane;
    T* m1 = x;
    T* m2 = x + n_first;

    std::vector<T> buf(std::max(n_first, n_second));
    std::vector<T> scratch;
    if (cache) cache->m2.assign(m2, m2 + n_second);

    subnet_forward(p.r, m2, H, W, buf.data(), cache ? &cache->rc : nullptr, scratch);
    for (std::size_t i = 0; i < n_first; ++i) m1[i] += buf[i]; // m1 is now n1
    if (cache) cache->n1.assign(m1, m1 + n_first);

    std::vector<T> shat(n_second);
    subnet_forward(p.s, m1, H, W, shat.data(), cache ? &cache->sc : nullptr, scratch);
    for (std::size_t i = 0; i < n_second; ++i) shat[i] = clamp_scale(shat[i], p.alpha);

    subnet_forward(p.t, m1, H, W, buf.data(), cache ? &cache->tc : nullptr, scratch);
    for (std::size_t i = 0; i < n_second; ++i) m2[i] = m2[i] * std::exp(shat[i]) + buf[i];
    if (cache) cache->shat = std::move(shat);
}

/// m2 = (n2 - t(n1)) * exp(-shat(n1)); m1 = n1 - r(m2). In-place on x.
template <class T>
void coupling_inverse(const CouplingParams<T>& p, T* x, int H, int W, CouplingCache<T>* cache) {
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    const std::size_t n_first = static_cast<std::size_t>(p.d) * plane;
    const std::size_t n_second = static_cast<std::size_t>(p.D - p.d) * plane;
    T* n1 = x;
    T* n2 = x + n_first;

    std::vector<T> buf(std::max(n_first, n_second));
    std::vector<T> scratch;
    if (cache) cache->n1.assign(n1, n1 + n_first);

    std::vector<T> shat(n_second);
    subnet_forward(p.s, n1, H, W, shat.data(), cache ? &cache->sc : nullptr, scratch);
    for (std::size_t i = 0; i < n_second; ++i) shat[i] = clamp_scale(shat[i], p.alpha);

    subnet_forward(p.t, n1, H, W, buf.data(), cache ? &cache->tc : nullptr, scratch);
    for (std::size_t i = 0; i < n_second; ++i) n2[i] -= buf[i]; // n2 is now n2 - t
    if (cache) cache->n2mt.assign(n2, n2 + n_second);
    for (std::size_t i = 0; i < n_second; ++i) n2[i] *= std::exp(-shat[i]); // now m2
    if (cache) {
        cache->m2.assign(n2, n2 + n_second);
        cache->shat = std::move(shat);
    }

    subnet_forward(p.r, n2, H, W, buf.data(), cache ? &cache->rc : nullptr, scratch);
    for (std::size_t i = 0; i < n_first; ++i) n1[i] -= buf[i]; // now m1
}

/// Backward through coupling_forward. g is the gradient wrt the output n
/// on entry and wrt the input m on return.
inline void coupling_forward_backward(const CouplingParams<double>& p,
                                      const CouplingCache<double>& cache, int H, int W,
                                      double* g, CouplingParams<double>& g_p) {
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    const std::size_t n_first = static_cast<std::size_t>(p.d) * plane;
    const std::size_t n_second = static_cast<std::size_t>(p.D - p.d) * plane;
    double* gn1 = g;
    double* gn2 = g + n_first;
    std::vector<double> s1, s2;

    // n2 = m2 * exp(shat) + t(n1)
    std::vector<double> gm2(n_second), gu(n_second);
    std::vector<double> gn1_total(gn1, gn1 + n_first);
    for (std::size_t i = 0; i < n_second; ++i) {
        const double e = std::exp(cache.shat[i]);
        gm2[i] = gn2[i] * e;
        const double g_shat = gn2[i] * cache.m2[i] * e;
        const double th = cache.shat[i] / p.alpha; // tanh(u/alpha)
        gu[i] = g_shat * (1.0 - th * th);
    }
    subnet_backward(p.t, cache.tc, H, W, gn2, gn1_total.data(), g_p.t, s1, s2);
    subnet_backward(p.s, cache.sc, H, W, gu.data(), gn1_total.data(), g_p.s, s1, s2);

    // n1 = m1 + r(m2)
    subnet_backward(p.r, cache.rc, H, W, gn1_total.data(), gm2.data(), g_p.r, s1, s2);

    std::copy(gn1_total.begin(), gn1_total.end(), gn1);
    std::copy(gm2.begin(), gm2.end(), gn2);
}

/// Backward through coupling_inverse. g is the gradient wrt the output m
/// on entry and wrt the input n on return.
inline void coupling_inverse_backward(const CouplingParams<double>& p,
                                      const CouplingCache<double>& cache, int H, int W,
                                      double* g, CouplingParams<double>& g_p) {
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    const std::size_t n_first = static_cast<std::size_t>(p.d) * plane;
    const std::size_t n_second = static_cast<std::size_t>(p.D - p.d) * plane;
    double* gm1 = g;
    double* gm2 = g + n_first;
    std::vector<double> s1, s2;

    // m1 = n1 - r(m2)
    std::vector<double> gn1(gm1, gm1 + n_first);
    std::vector<double> neg_gm1(n_first);
    for (std::size_t i = 0; i < n_first; ++i) neg_gm1[i] = -gm1[i];
    std::vector<double> gm2_total(gm2, gm2 + n_second);
    subnet_backward(p.r, cache.rc, H, W, neg_gm1.data(), gm2_total.data(), g_p.r, s1, s2);

    // m2 = (n2 - t(n1)) * exp(-shat(n1))
    std::vector<double> gn2(n_second), gu(n_second), g_tout(n_second);
    for (std::size_t i = 0; i < n_second; ++i) {
        const double e = std::exp(-cache.shat[i]);
        gn2[i] = gm2_total[i] * e;
        g_tout[i] = -gn2[i];
        const double g_shat = -gm2_total[i] * cache.n2mt[i] * e;
        const double th = cache.shat[i] / p.alpha;
        gu[i] = g_shat * (1.0 - th * th);
    }
    subnet_backward(p.t, cache.tc, H, W, g_tout.data(), gn1.data(), g_p.t, s1, s2);
    subnet_backward(p.s, cache.sc, H, W, gu.data(), gn1.data(), g_p.s, s1, s2);

    std::copy(gn1.begin(), gn1.end(), gm1);
    std::copy(gn2.begin(), gn2.end(), gm2);
}

// ----------------------------------------------------------------- mix

/// Per-pixel y = M x for a D x D matrix over channel-major data.
template <class T>
void mix_apply(const std::vector<T>& M, int D, T* x, std::size_t plane) {
    std::vector<T> tmp(D);
    for (std::size_t i = 0; i < plane; ++i) {
        for (int c = 0; c < D; ++c) tmp[c] = x[c * plane + i];
        for (int c = 0; c < D; ++c) {
            T acc = T(0);
            const T* row = M.data() + static_cast<std::size_t>(c) * D;
            for (int k = 0; k < D; ++k) acc += row[k] * tmp[k];
            x[c * plane + i] = acc;
        }
    }
}

/// Backward of y = W x: g <- W^T g, and gW += g_y x^T summed over pixels.
/// `in` is the mix input (pre-multiplication).
inline void mix_forward_backward(const MixParams<double>& p, const double* in, double* g,
                                 std::size_t plane, std::vector<double>& g_w) {
    const int D = p.D;
    std::vector<double> gy(D);
    for (std::size_t i = 0; i < plane; ++i) {
        for (int c = 0; c < D; ++c) gy[c] = g[c * plane + i];
        for (int c = 0; c < D; ++c) {
            const double xin = in[c * plane + i];
            double acc = 0;
            for (int r = 0; r < D; ++r) {
                g_w[static_cast<std::size_t>(r) * D + c] += gy[r] * xin;
                acc += p.w[static_cast<std::size_t>(r) * D + c] * gy[r];
            }
            g[c * plane + i] = acc;
        }
    }
}

/// Backward of x = W^{-1} y: g <- W^{-T} g_x, and gW += -(W^{-T} g_x) x^T,
/// where `out` is the mix_inverse output x.
inline void mix_inverse_backward(const MixParams<double>& p, const double* out, double* g,
                                 std::size_t plane, std::vector<double>& g_w) {
    const int D = p.D;
    std::vector<double> gx(D), gy(D);
    for (std::size_t i = 0; i < plane; ++i) {
        for (int c = 0; c < D; ++c) gx[c] = g[c * plane + i];
        for (int c = 0; c < D; ++c) {
            double acc = 0;
            for (int r = 0; r < D; ++r) acc += p.w_inv[static_cast<std::size_t>(r) * D + c] * gx[r];
            gy[c] = acc;
        }
        for (int r = 0; r < D; ++r) {
            const double grow = gy[r];
            for (int c = 0; c < D; ++c)
                g_w[static_cast<std::size_t>(r) * D + c] -= grow * out[c * plane + i];
        }
        for (int c = 0; c < D; ++c) g[c * plane + i] = gy[c];
    }
}

// -------------------------------------------------------------- squeeze

/// C x H x W -> C*q^2 x H/q x W/q space-to-channel rearrangement.
template <class T>
Tensor<T> squeeze(const Tensor<T>& in, int q) {
    if (in.dims.size() != 3) throw DimensionError("squeeze expects a 3-D tensor");
    const std::size_t C = in.dims[0], H = in.dims[1], W = in.dims[2];
    if (q <= 0 || H % q != 0 || W % q != 0)
        throw DimensionError("squeeze factor must divide spatial dims");
    const std::size_t oh = H / q, ow = W / q;
    Tensor<T> out({C * q * q, oh, ow});
    for (std::size_t c = 0; c < C; ++c)
        for (int dy = 0; dy < q; ++dy)
            for (int dx = 0; dx < q; ++dx) {
                const std::size_t oc = (c * q + dy) * q + dx;
                for (std::size_t y = 0; y < oh; ++y)
                    for (std::size_t x = 0; x < ow; ++x)
                        out.at3(oc, y, x) = in.at3(c, y * q + dy, x * q + dx);
            }
    return out;
}

template <class T>
Tensor<T> unsqueeze(const Tensor<T>& in, int q) {
    if (in.dims.size() != 3) throw DimensionError("unsqueeze expects a 3-D tensor");
    const std::size_t Cq = in.dims[0], oh = in.dims[1], ow = in.dims[2];
    if (q <= 0 || Cq % (static_cast<std::size_t>(q) * q) != 0)
        throw DimensionError("channel count not divisible by q^2");
    const std::size_t C = Cq / (static_cast<std::size_t>(q) * q);
    Tensor<T> out({C, oh * q, ow * q});
    for (std::size_t c = 0; c < C; ++c)
        for (int dy = 0; dy < q; ++dy)
            for (int dx = 0; dx < q; ++dx) {
                const std::size_t ic = (c * q + dy) * q + dx;
                for (std::size_t y = 0; y < oh; ++y)
                    for (std::size_t x = 0; x < ow; ++x)
                        out.at3(c, y * q + dy, x * q + dx) = in.at3(ic, y, x);
            }
    return out;
}

// ------------------------------------------------------------- algebra

/// Inverse and |det| via Gaussian elimination with partial pivoting.
/// Throws SingularityError when |det| <= 1e-12.
void invert_matrix(const std::vector<double>& m, int D, std::vector<double>& inv_out,
                   double& det_abs_out);

} // namespace rawpipe::flow
