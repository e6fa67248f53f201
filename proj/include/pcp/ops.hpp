#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "pcp/rng.hpp"
#include "pcp/tensor.hpp"

namespace pcp {

enum class Reduction { sum, mean };

// ---------------------------------------------------------------------------
// Elementwise and reductions
// ---------------------------------------------------------------------------

inline Tensor add(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw ShapeError("add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    std::vector<double> out(a.numel());
    const double* pa = a.ptr();
    const double* pb = b.ptr();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = pa[i] + pb[i];
    Tensor c = detail::make_result("add", a.shape(), std::move(out), {&a, &b});
    if (c.requires_grad()) {
        auto* cn = c.node();
        auto* an = a.node();
        auto* bn = b.node();
        cn->backprop = [cn, an, bn] {
            const std::vector<double>& g = cn->grad;
            if (an->requires_grad)
                for (std::size_t i = 0; i < g.size(); ++i) an->grad[i] += g[i];
            if (bn->requires_grad)
                for (std::size_t i = 0; i < g.size(); ++i) bn->grad[i] += g[i];
        };
    }
    return c;
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw ShapeError("mul: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    std::vector<double> out(a.numel());
    const double* pa = a.ptr();
    const double* pb = b.ptr();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = pa[i] * pb[i];
    Tensor c = detail::make_result("mul", a.shape(), std::move(out), {&a, &b});
    if (c.requires_grad()) {
        auto* cn = c.node();
        auto* an = a.node();
        auto* bn = b.node();
        cn->backprop = [cn, an, bn] {
            const std::vector<double>& g = cn->grad;
            if (an->requires_grad)
                for (std::size_t i = 0; i < g.size(); ++i) an->grad[i] += g[i] * bn->value[i];
            if (bn->requires_grad)
                for (std::size_t i = 0; i < g.size(); ++i) bn->grad[i] += g[i] * an->value[i];
        };
    }
    return c;
}

inline Tensor scale(const Tensor& a, double s) {
    std::vector<double> out(a.numel());
    const double* pa = a.ptr();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = pa[i] * s;
    Tensor c = detail::make_result("scale", a.shape(), std::move(out), {&a});
    if (c.requires_grad()) {
        auto* cn = c.node();
        auto* an = a.node();
        cn->backprop = [cn, an, s] {
            for (std::size_t i = 0; i < cn->grad.size(); ++i) an->grad[i] += cn->grad[i] * s;
        };
    }
    return c;
}

inline Tensor sum(const Tensor& a) {
    double total = 0.0;
    for (double v : a.data()) total += v;
    Tensor c = detail::make_result("sum", Shape{}, std::vector<double>{total}, {&a});
    if (c.requires_grad()) {
        auto* cn = c.node();
        auto* an = a.node();
        cn->backprop = [cn, an] {
            const double g = cn->grad[0];
            for (std::size_t i = 0; i < an->grad.size(); ++i) an->grad[i] += g;
        };
    }
    return c;
}

inline Tensor mean(const Tensor& a) {
    if (a.numel() == 0) throw ShapeError("mean: empty tensor");
    double total = 0.0;
    for (double v : a.data()) total += v;
    const double inv_n = 1.0 / static_cast<double>(a.numel());
    Tensor c = detail::make_result("mean", Shape{}, std::vector<double>{total * inv_n}, {&a});
    if (c.requires_grad()) {
        auto* cn = c.node();
        auto* an = a.node();
        cn->backprop = [cn, an, inv_n] {
            const double g = cn->grad[0] * inv_n;
            for (std::size_t i = 0; i < an->grad.size(); ++i) an->grad[i] += g;
        };
    }
    return c;
}

inline Tensor relu(const Tensor& a) {
    std::vector<double> out(a.numel());
    const double* pa = a.ptr();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = pa[i] > 0.0 ? pa[i] : 0.0;
    Tensor c = detail::make_result("relu", a.shape(), std::move(out), {&a});
    if (c.requires_grad()) {
        auto* cn = c.node();
        auto* an = a.node();
        cn->backprop = [cn, an] {
            for (std::size_t i = 0; i < cn->grad.size(); ++i)
                if (an->value[i] > 0.0) an->grad[i] += cn->grad[i];
        };
    }
    return c;
}

// ---------------------------------------------------------------------------
// Shape ops
// ---------------------------------------------------------------------------

inline Tensor reshape(const Tensor& a, Shape new_shape) {
    if (shape_numel(new_shape) != a.numel())
        throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(new_shape));
    std::vector<double> out = a.data();
    Tensor c = detail::make_result("reshape", std::move(new_shape), std::move(out), {&a});
    if (c.requires_grad()) {
        auto* cn = c.node();
        auto* an = a.node();
        cn->backprop = [cn, an] {
            for (std::size_t i = 0; i < cn->grad.size(); ++i) an->grad[i] += cn->grad[i];
        };
    }
    return c;
}

// Collapses all trailing dimensions into one: [B, ...] -> [B, rest].
inline Tensor flatten(const Tensor& a) {
    if (a.ndim() < 1) throw ShapeError("flatten: scalar input");
    const std::size_t batch = a.dim(0);
    const std::size_t rest = batch == 0 ? 0 : a.numel() / batch;
    return reshape(a, Shape{batch, rest});
}

// ---------------------------------------------------------------------------
// Neural-net layers
// ---------------------------------------------------------------------------

// x: [B, Cin, L], w: [Cout, Cin, K], bias: [Cout]; no padding.
// Output length = floor((L - K) / stride) + 1.
inline Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& bias, std::size_t stride) {
    if (x.ndim() != 3 || w.ndim() != 3 || bias.ndim() != 1)
        throw ShapeError("conv1d: expected input [B,Cin,L], kernel [Cout,Cin,K], bias [Cout], got " +
                         shape_str(x.shape()) + ", " + shape_str(w.shape()) + ", " + shape_str(bias.shape()));
    const std::size_t B = x.dim(0), Cin = x.dim(1), L = x.dim(2);
    const std::size_t Cout = w.dim(0), K = w.dim(2);
    if (w.dim(1) != Cin)
        throw ShapeError("conv1d: kernel expects " + std::to_string(w.dim(1)) + " input channels, input has " +
                         std::to_string(Cin));
    if (bias.dim(0) != Cout) throw ShapeError("conv1d: bias size " + shape_str(bias.shape()) + " != Cout");
    if (stride == 0) throw UsageError("conv1d: stride must be >= 1");
    if (L < K)
        throw ShapeError("conv1d: input length " + std::to_string(L) + " shorter than kernel " + std::to_string(K));
    const std::size_t Lo = (L - K) / stride + 1;

    std::vector<double> out(B * Cout * Lo);
    {
        const double* px = x.ptr();
        const double* pw = w.ptr();
        const double* pb = bias.ptr();
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t co = 0; co < Cout; ++co) {
                double* orow = out.data() + (b * Cout + co) * Lo;
                std::fill(orow, orow + Lo, pb[co]);
                for (std::size_t ci = 0; ci < Cin; ++ci) {
                    const double* xrow = px + (b * Cin + ci) * L;
                    const double* wrow = pw + (co * Cin + ci) * K;
                    for (std::size_t k = 0; k < K; ++k) {
                        const double wk = wrow[k];
                        const double* xs = xrow + k;
                        for (std::size_t l = 0; l < Lo; ++l) orow[l] += wk * xs[l * stride];
                    }
                }
            }
        }
    }
    Tensor c = detail::make_result("conv1d", Shape{B, Cout, Lo}, std::move(out), {&x, &w, &bias});
    if (c.requires_grad()) {
        auto* cn = c.node();
        auto* xn = x.node();
        auto* wn = w.node();
        auto* bn = bias.node();
        cn->backprop = [cn, xn, wn, bn, B, Cin, Cout, L, K, Lo, stride] {
            const double* g = cn->grad.data();
            if (bn->requires_grad) {
                for (std::size_t b = 0; b < B; ++b)
                    for (std::size_t co = 0; co < Cout; ++co) {
                        const double* grow = g + (b * Cout + co) * Lo;
                        double acc = 0.0;
                        for (std::size_t l = 0; l < Lo; ++l) acc += grow[l];
                        bn->grad[co] += acc;
                    }
            }
            if (wn->requires_grad) {
                for (std::size_t b = 0; b < B; ++b)
                    for (std::size_t co = 0; co < Cout; ++co) {
                        const double* grow = g + (b * Cout + co) * Lo;
                        for (std::size_t ci = 0; ci < Cin; ++ci) {
                            const double* xrow = xn->value.data() + (b * Cin + ci) * L;
                            double* wgrad = wn->grad.data() + (co * Cin + ci) * K;
                            for (std::size_t k = 0; k < K; ++k) {
                                const double* xs = xrow + k;
                                double acc = 0.0;
                                for (std::size_t l = 0; l < Lo; ++l) acc += grow[l] * xs[l * stride];
                                wgrad[k] += acc;
                            }
                        }
                    }
            }
            if (xn->requires_grad) {
                for (std::size_t b = 0; b < B; ++b)
                    for (std::size_t co = 0; co < Cout; ++co) {
                        const double* grow = g + (b * Cout + co) * Lo;
                        for (std::size_t ci = 0; ci < Cin; ++ci) {
                            double* xgrad = xn->grad.data() + (b * Cin + ci) * L;
                            const double* wrow = wn->value.data() + (co * Cin + ci) * K;
                            for (std::size_t k = 0; k < K; ++k) {
                                const double wk = wrow[k];
                                double* xs = xgrad + k;
                                for (std::size_t l = 0; l < Lo; ++l) xs[l * stride] += grow[l] * wk;
                            }
                        }
                    }
            }
        };
    }
    return c;
}

// x: [B, C, L]; window w, stride w, floor semantics: output length floor(L/w).
inline Tensor maxpool1d(const Tensor& x, std::size_t window) {
    if (x.ndim() != 3) throw ShapeError("maxpool1d: expected [B,C,L], got " + shape_str(x.shape()));
    if (window == 0) throw UsageError("maxpool1d: window must be >= 1");
    const std::size_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
    const std::size_t Lo = L / window;
    if (Lo == 0)
        throw ShapeError("maxpool1d: input length " + std::to_string(L) + " shorter than window " +
                         std::to_string(window));

    std::vector<double> out(B * C * Lo);
    auto argmax = std::make_shared<std::vector<std::size_t>>(B * C * Lo);
    {
        const double* px = x.ptr();
        for (std::size_t bc = 0; bc < B * C; ++bc) {
            const double* xrow = px + bc * L;
            double* orow = out.data() + bc * Lo;
            std::size_t* arow = argmax->data() + bc * Lo;
            for (std::size_t l = 0; l < Lo; ++l) {
                std::size_t best = l * window;
                double best_v = xrow[best];
                for (std::size_t k = 1; k < window; ++k) {
                    const std::size_t idx = l * window + k;
                    if (xrow[idx] > best_v) {  // first max wins on ties
                        best_v = xrow[idx];
                        best = idx;
                    }
                }
                orow[l] = best_v;
                arow[l] = bc * L + best;
            }
        }
    }
    Tensor c = detail::make_result("maxpool1d", Shape{B, C, Lo}, std::move(out), {&x});
    if (c.requires_grad()) {
        auto* cn = c.node();
        auto* xn = x.node();
        cn->backprop = [cn, xn, argmax] {
            for (std::size_t i = 0; i < cn->grad.size(); ++i) xn->grad[(*argmax)[i]] += cn->grad[i];
        };
    }
    return c;
}

// Per-channel batch normalization over [B, C, L]. In training mode the batch
// statistics normalize the output and update the running buffers in place
// (biased variance for normalization, unbiased for the running update).
inline Tensor batchnorm1d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                          std::vector<double>& running_mean, std::vector<double>& running_var,
                          bool training, double momentum = 0.1, double eps = 1e-5) {
    if (x.ndim() != 3) throw ShapeError("batchnorm1d: expected [B,C,L], got " + shape_str(x.shape()));
    const std::size_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
    if (gamma.shape() != Shape{C} || beta.shape() != Shape{C})
        throw ShapeError("batchnorm1d: gamma/beta must be [C]=" + std::to_string(C) + ", got " +
                         shape_str(gamma.shape()) + ", " + shape_str(beta.shape()));
    if (running_mean.size() != C || running_var.size() != C)
        throw ShapeError("batchnorm1d: running stats must have size C");
    const std::size_t n = B * L;
    if (training && n < 2) throw UsageError("batchnorm1d: training mode needs more than one value per channel");

    auto mu = std::make_shared<std::vector<double>>(C, 0.0);
    auto inv_std = std::make_shared<std::vector<double>>(C, 0.0);
    if (training) {
        for (std::size_t c = 0; c < C; ++c) {
            double m = 0.0;
            for (std::size_t b = 0; b < B; ++b) {
                const double* row = x.ptr() + (b * C + c) * L;
                for (std::size_t l = 0; l < L; ++l) m += row[l];
            }
            m /= static_cast<double>(n);
            double var = 0.0;
            for (std::size_t b = 0; b < B; ++b) {
                const double* row = x.ptr() + (b * C + c) * L;
                for (std::size_t l = 0; l < L; ++l) {
                    const double d = row[l] - m;
                    var += d * d;
                }
            }
            var /= static_cast<double>(n);
            (*mu)[c] = m;
            (*inv_std)[c] = 1.0 / std::sqrt(var + eps);
            const double unbiased = var * static_cast<double>(n) / static_cast<double>(n - 1);
            running_mean[c] = (1.0 - momentum) * running_mean[c] + momentum * m;
            running_var[c] = (1.0 - momentum) * running_var[c] + momentum * unbiased;
        }
    } else {
        for (std::size_t c = 0; c < C; ++c) {
            (*mu)[c] = running_mean[c];
            (*inv_std)[c] = 1.0 / std::sqrt(running_var[c] + eps);
        }
    }

    std::vector<double> out(x.numel());
    auto xhat = std::make_shared<std::vector<double>>(x.numel());
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t c = 0; c < C; ++c) {
            const double* row = x.ptr() + (b * C + c) * L;
            double* orow = out.data() + (b * C + c) * L;
            double* hrow = xhat->data() + (b * C + c) * L;
            const double m = (*mu)[c], is = (*inv_std)[c];
            const double gpar = gamma.ptr()[c], bpar = beta.ptr()[c];
            for (std::size_t l = 0; l < L; ++l) {
                const double h = (row[l] - m) * is;
                hrow[l] = h;
                orow[l] = gpar * h + bpar;
            }
        }

    Tensor c = detail::make_result("batchnorm1d", x.shape(), std::move(out), {&x, &gamma, &beta});
    if (c.requires_grad()) {
        auto* cn = c.node();
        auto* xn = x.node();
        auto* gn = gamma.node();
        auto* bn = beta.node();
        cn->backprop = [cn, xn, gn, bn, xhat, inv_std, B, C, L, n, training] {
            const double* g = cn->grad.data();
            for (std::size_t c2 = 0; c2 < C; ++c2) {
                double sum_g = 0.0, sum_gh = 0.0;
                for (std::size_t b = 0; b < B; ++b) {
                    const std::size_t base = (b * C + c2) * L;
                    for (std::size_t l = 0; l < L; ++l) {
                        sum_g += g[base + l];
                        sum_gh += g[base + l] * (*xhat)[base + l];
                    }
                }
                if (gn->requires_grad) gn->grad[c2] += sum_gh;
                if (bn->requires_grad) bn->grad[c2] += sum_g;
                if (xn->requires_grad) {
                    const double gpar = gn->value[c2];
                    const double is = (*inv_std)[c2];
                    if (training) {
                        const double inv_n = 1.0 / static_cast<double>(n);
                        for (std::size_t b = 0; b < B; ++b) {
                            const std::size_t base = (b * C + c2) * L;
                            for (std::size_t l = 0; l < L; ++l) {
                                const double h = (*xhat)[base + l];
                                xn->grad[base + l] +=
                                    gpar * is * (g[base + l] - inv_n * sum_g - h * inv_n * sum_gh);
                            }
                        }
                    } else {
                        for (std::size_t b = 0; b < B; ++b) {
                            const std::size_t base = (b * C + c2) * L;
                            for (std::size_t l = 0; l < L; ++l) xn->grad[base + l] += gpar * is * g[base + l];
                        }
                    }
                }
            }
        };
    }
    return c;
}

// Inverted dropout: train-time outputs are scaled by 1/(1-rate) so eval is
// the identity (and is literally a pass-through of the input tensor).
inline Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) throw UsageError("dropout: rate must be in [0,1)");
    if (!training || rate == 0.0) return x;
    const double keep = 1.0 - rate;
    const double inv_keep = 1.0 / keep;
    auto mask = std::make_shared<std::vector<double>>(x.numel());
    std::vector<double> out(x.numel());
    const double* px = x.ptr();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double m = rng.uniform01() < keep ? inv_keep : 0.0;
        (*mask)[i] = m;
        out[i] = px[i] * m;
    }
    Tensor c = detail::make_result("dropout", x.shape(), std::move(out), {&x});
    if (c.requires_grad()) {
        auto* cn = c.node();
        auto* xn = x.node();
        cn->backprop = [cn, xn, mask] {
            for (std::size_t i = 0; i < cn->grad.size(); ++i) xn->grad[i] += cn->grad[i] * (*mask)[i];
        };
    }
    return c;
}

// x: [B, F], w: [F, O], bias: [O] -> [B, O].
inline Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
    if (x.ndim() != 2 || w.ndim() != 2 || bias.ndim() != 1)
        throw ShapeError("linear: expected input [B,F], weight [F,O], bias [O], got " + shape_str(x.shape()) +
                         ", " + shape_str(w.shape()) + ", " + shape_str(bias.shape()));
    const std::size_t B = x.dim(0), F = x.dim(1), O = w.dim(1);
    if (w.dim(0) != F)
        throw ShapeError("linear: weight expects " + std::to_string(w.dim(0)) + " features, input has " +
                         std::to_string(F));
    if (bias.dim(0) != O) throw ShapeError("linear: bias size mismatch");

    std::vector<double> out(B * O);
    {
        const double* px = x.ptr();
        const double* pw = w.ptr();
        const double* pb = bias.ptr();
        for (std::size_t b = 0; b < B; ++b) {
            double* orow = out.data() + b * O;
            for (std::size_t o = 0; o < O; ++o) orow[o] = pb[o];
            const double* xrow = px + b * F;
            for (std::size_t f = 0; f < F; ++f) {
                const double xv = xrow[f];
                const double* wrow = pw + f * O;
                for (std::size_t o = 0; o < O; ++o) orow[o] += xv * wrow[o];
            }
        }
    }
    Tensor c = detail::make_result("linear", Shape{B, O}, std::move(out), {&x, &w, &bias});
    if (c.requires_grad()) {
        auto* cn = c.node();
        auto* xn = x.node();
        auto* wn = w.node();
        auto* bn = bias.node();
        cn->backprop = [cn, xn, wn, bn, B, F, O] {
            const double* g = cn->grad.data();
            if (bn->requires_grad) {
                for (std::size_t b = 0; b < B; ++b) {
                    const double* grow = g + b * O;
                    for (std::size_t o = 0; o < O; ++o) bn->grad[o] += grow[o];
                }
            }
            if (wn->requires_grad) {
                for (std::size_t b = 0; b < B; ++b) {
                    const double* xrow = xn->value.data() + b * F;
                    const double* grow = g + b * O;
                    for (std::size_t f = 0; f < F; ++f) {
                        const double xv = xrow[f];
                        double* wgrow = wn->grad.data() + f * O;
                        for (std::size_t o = 0; o < O; ++o) wgrow[o] += xv * grow[o];
                    }
                }
            }
            if (xn->requires_grad) {
                for (std::size_t b = 0; b < B; ++b) {
                    double* xgrow = xn->grad.data() + b * F;
                    const double* grow = g + b * O;
                    for (std::size_t f = 0; f < F; ++f) {
                        const double* wrow = wn->value.data() + f * O;
                        double acc = 0.0;
                        for (std::size_t o = 0; o < O; ++o) acc += grow[o] * wrow[o];
                        xgrow[f] += acc;
                    }
                }
            }
        };
    }
    return c;
}

// ---------------------------------------------------------------------------
// Similarity / distance / classification heads
// ---------------------------------------------------------------------------

// a: [m, E], b: [n, E] -> [m, n] of cosine similarities. Zero-norm rows are
// rejected: the cosine is undefined there.
inline Tensor cosine_similarity(const Tensor& a, const Tensor& b) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(1))
        throw ShapeError("cosine_similarity: expected [m,E] and [n,E], got " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
    const std::size_t m = a.dim(0), n = b.dim(0), E = a.dim(1);

    auto norm_rows = [E](const Tensor& t, const char* side) {
        std::vector<double> norms(t.dim(0));
        for (std::size_t i = 0; i < t.dim(0); ++i) {
            const double* row = t.ptr() + i * E;
            double s = 0.0;
            for (std::size_t e = 0; e < E; ++e) s += row[e] * row[e];
            if (s == 0.0)
                throw NumericError(std::string("cosine_similarity: zero-norm ") + side + " row " +
                                   std::to_string(i));
            norms[i] = std::sqrt(s);
        }
        return norms;
    };
    auto na = std::make_shared<std::vector<double>>(norm_rows(a, "left"));
    auto nb = std::make_shared<std::vector<double>>(norm_rows(b, "right"));

    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a.ptr() + i * E;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b.ptr() + j * E;
            double dot = 0.0;
            for (std::size_t e = 0; e < E; ++e) dot += arow[e] * brow[e];
            out[i * n + j] = dot / ((*na)[i] * (*nb)[j]);
        }
    }
    Tensor c = detail::make_result("cosine_similarity", Shape{m, n}, std::move(out), {&a, &b});
    if (c.requires_grad()) {
        auto* cn = c.node();
        auto* an = a.node();
        auto* bn = b.node();
        cn->backprop = [cn, an, bn, na, nb, m, n, E] {
            // d cos / d a_i = b_j / (|a_i||b_j|) - cos * a_i / |a_i|^2
            for (std::size_t i = 0; i < m; ++i) {
                const double* arow = an->value.data() + i * E;
                for (std::size_t j = 0; j < n; ++j) {
                    const double g = cn->grad[i * n + j];
                    if (g == 0.0) continue;
                    const double* brow = bn->value.data() + j * E;
                    const double cos_ij = cn->value[i * n + j];
                    const double inv_ab = 1.0 / ((*na)[i] * (*nb)[j]);
                    if (an->requires_grad) {
                        const double inv_aa = 1.0 / ((*na)[i] * (*na)[i]);
                        double* ag = an->grad.data() + i * E;
                        for (std::size_t e = 0; e < E; ++e)
                            ag[e] += g * (brow[e] * inv_ab - cos_ij * arow[e] * inv_aa);
                    }
                    if (bn->requires_grad) {
                        const double inv_bb = 1.0 / ((*nb)[j] * (*nb)[j]);
                        double* bg = bn->grad.data() + j * E;
                        for (std::size_t e = 0; e < E; ++e)
                            bg[e] += g * (arow[e] * inv_ab - cos_ij * brow[e] * inv_bb);
                    }
                }
            }
        };
    }
    return c;
}

// a: [m, E], b: [n, E] -> [m, n] of Euclidean distances.
inline Tensor euclidean_distance(const Tensor& a, const Tensor& b) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(1))
        throw ShapeError("euclidean_distance: expected [m,E] and [n,E], got " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
    const std::size_t m = a.dim(0), n = b.dim(0), E = a.dim(1);
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a.ptr() + i * E;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b.ptr() + j * E;
            double s = 0.0;
            for (std::size_t e = 0; e < E; ++e) {
                const double d = arow[e] - brow[e];
                s += d * d;
            }
            out[i * n + j] = std::sqrt(s);
        }
    }
    Tensor c = detail::make_result("euclidean_distance", Shape{m, n}, std::move(out), {&a, &b});
    if (c.requires_grad()) {
        auto* cn = c.node();
        auto* an = a.node();
        auto* bn = b.node();
        cn->backprop = [cn, an, bn, m, n, E] {
            for (std::size_t i = 0; i < m; ++i) {
                const double* arow = an->value.data() + i * E;
                for (std::size_t j = 0; j < n; ++j) {
                    const double g = cn->grad[i * n + j];
                    const double d = cn->value[i * n + j];
                    if (g == 0.0 || d == 0.0) continue;  // subgradient 0 at coincident points
                    const double* brow = bn->value.data() + j * E;
                    const double s = g / d;
                    for (std::size_t e = 0; e < E; ++e) {
                        const double diff = (arow[e] - brow[e]) * s;
                        if (an->requires_grad) an->grad[i * E + e] += diff;
                        if (bn->requires_grad) bn->grad[j * E + e] -= diff;
                    }
                }
            }
        };
    }
    return c;
}

// Row-wise log softmax over [B, C], computed via the log-sum-exp trick.
inline Tensor log_softmax(const Tensor& x) {
    if (x.ndim() != 2) throw ShapeError("log_softmax: expected [B,C], got " + shape_str(x.shape()));
    const std::size_t B = x.dim(0), C = x.dim(1);
    if (C == 0) throw ShapeError("log_softmax: zero columns");
    std::vector<double> out(B * C);
    for (std::size_t b = 0; b < B; ++b) {
        const double* row = x.ptr() + b * C;
        double mx = row[0];
        for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, row[c]);
        double lse = 0.0;
        for (std::size_t c = 0; c < C; ++c) lse += std::exp(row[c] - mx);
        lse = mx + std::log(lse);
        for (std::size_t c = 0; c < C; ++c) out[b * C + c] = row[c] - lse;
    }
    Tensor r = detail::make_result("log_softmax", x.shape(), std::move(out), {&x});
    if (r.requires_grad()) {
        auto* rn = r.node();
        auto* xn = x.node();
        rn->backprop = [rn, xn, B, C] {
            for (std::size_t b = 0; b < B; ++b) {
                const double* grow = rn->grad.data() + b * C;
                const double* yrow = rn->value.data() + b * C;
                double gsum = 0.0;
                for (std::size_t c = 0; c < C; ++c) gsum += grow[c];
                double* xg = xn->grad.data() + b * C;
                for (std::size_t c = 0; c < C; ++c) xg[c] += grow[c] - std::exp(yrow[c]) * gsum;
            }
        };
    }
    return r;
}

// Negative log likelihood of the target column per row of log-probabilities.
inline Tensor nll_loss(const Tensor& log_probs, const std::vector<std::size_t>& targets,
                       Reduction reduction = Reduction::sum) {
    if (log_probs.ndim() != 2)
        throw ShapeError("nll_loss: expected [B,C], got " + shape_str(log_probs.shape()));
    const std::size_t B = log_probs.dim(0), C = log_probs.dim(1);
    if (targets.size() != B)
        throw ShapeError("nll_loss: " + std::to_string(targets.size()) + " targets for batch of " +
                         std::to_string(B));
    for (std::size_t b = 0; b < B; ++b)
        if (targets[b] >= C)
            throw UsageError("nll_loss: target " + std::to_string(targets[b]) + " out of range [0," +
                             std::to_string(C) + ") at row " + std::to_string(b));
    const double w = reduction == Reduction::mean ? 1.0 / static_cast<double>(B) : 1.0;
    double loss = 0.0;
    for (std::size_t b = 0; b < B; ++b) loss -= log_probs.ptr()[b * C + targets[b]];
    loss *= w;
    Tensor r = detail::make_result("nll_loss", Shape{}, std::vector<double>{loss}, {&log_probs});
    if (r.requires_grad()) {
        auto* rn = r.node();
        auto* ln = log_probs.node();
        auto tg = std::make_shared<std::vector<std::size_t>>(targets);
        rn->backprop = [rn, ln, tg, C, w] {
            const double g = rn->grad[0] * w;
            for (std::size_t b = 0; b < tg->size(); ++b) ln->grad[b * C + (*tg)[b]] -= g;
        };
    }
    return r;
}

// h: [B, E], w: [B, E, C] -> [B, C]; out[b,c] = sum_e h[b,e] * w[b,e,c].
// This is the per-instance classification head: each row of h is scored by
// its own weight matrix.
inline Tensor batch_vecmat(const Tensor& h, const Tensor& w) {
    if (h.ndim() != 2 || w.ndim() != 3 || w.dim(0) != h.dim(0) || w.dim(1) != h.dim(1))
        throw ShapeError("batch_vecmat: expected [B,E] and [B,E,C], got " + shape_str(h.shape()) + " and " +
                         shape_str(w.shape()));
    const std::size_t B = h.dim(0), E = h.dim(1), C = w.dim(2);
    std::vector<double> out(B * C, 0.0);
    for (std::size_t b = 0; b < B; ++b) {
        const double* hrow = h.ptr() + b * E;
        double* orow = out.data() + b * C;
        for (std::size_t e = 0; e < E; ++e) {
            const double hv = hrow[e];
            const double* wrow = w.ptr() + (b * E + e) * C;
            for (std::size_t c = 0; c < C; ++c) orow[c] += hv * wrow[c];
        }
    }
    Tensor r = detail::make_result("batch_vecmat", Shape{B, C}, std::move(out), {&h, &w});
    if (r.requires_grad()) {
        auto* rn = r.node();
        auto* hn = h.node();
        auto* wn = w.node();
        rn->backprop = [rn, hn, wn, B, E, C] {
            const double* g = rn->grad.data();
            for (std::size_t b = 0; b < B; ++b) {
                const double* grow = g + b * C;
                for (std::size_t e = 0; e < E; ++e) {
                    const double* wrow = wn->value.data() + (b * E + e) * C;
                    const double hv = hn->value[b * E + e];
                    if (hn->requires_grad) {
                        double acc = 0.0;
                        for (std::size_t c = 0; c < C; ++c) acc += grow[c] * wrow[c];
                        hn->grad[b * E + e] += acc;
                    }
                    if (wn->requires_grad) {
                        double* wg = wn->grad.data() + (b * E + e) * C;
                        for (std::size_t c = 0; c < C; ++c) wg[c] += grow[c] * hv;
                    }
                }
            }
        };
    }
    return r;
}

}  // namespace pcp
