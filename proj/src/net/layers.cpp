#include "recongan/net/layers.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

namespace recongan::net {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<RowMat>;
using CMap = Eigen::Map<const RowMat>;

void check_4d(const Tensor& x, int channels, const char* what) {
    if (x.ndim() != 4)
        throw std::invalid_argument(std::string(what) + ": expected {N,C,H,W}, got " +
                                    x.shape_str());
    if (x.dim(1) != channels)
        throw std::invalid_argument(std::string(what) + ": expected " +
                                    std::to_string(channels) + " channels, got " + x.shape_str());
}

int conv_out_size(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

// Gather k*k patches of `src` {C,H,W} into `cols` {C*k*k, out_h*out_w} for a
// convolution with the given stride/pad; out-of-bounds taps are zero.
void im2col(const float* src, int C, int H, int W, int k, int stride, int pad, int out_h,
            int out_w, float* cols) {
    const int64_t ohw = static_cast<int64_t>(out_h) * out_w;
    for (int c = 0; c < C; ++c) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                float* dst = cols + ((static_cast<int64_t>(c) * k + ky) * k + kx) * ohw;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= H) {
                        for (int ox = 0; ox < out_w; ++ox) dst[oy * out_w + ox] = 0.0f;
                        continue;
                    }
                    const float* srow = src + (static_cast<int64_t>(c) * H + iy) * W;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        dst[oy * out_w + ox] = (ix >= 0 && ix < W) ? srow[ix] : 0.0f;
                    }
                }
            }
        }
    }
}

// Scatter-add of `cols` back into `dst` {C,H,W}; exact adjoint of im2col.
void col2im_add(const float* cols, int C, int H, int W, int k, int stride, int pad, int out_h,
                int out_w, float* dst) {
    const int64_t ohw = static_cast<int64_t>(out_h) * out_w;
    for (int c = 0; c < C; ++c) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const float* srcrow =
                    cols + ((static_cast<int64_t>(c) * k + ky) * k + kx) * ohw;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= H) continue;
                    float* drow = dst + (static_cast<int64_t>(c) * H + iy) * W;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        if (ix >= 0 && ix < W) drow[ix] += srcrow[oy * out_w + ox];
                    }
                }
            }
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int stride, int pad, bool bias)
    : in_(in_channels),
      out_(out_channels),
      k_(kernel),
      stride_(stride),
      pad_(pad),
      has_bias_(bias) {
    if (in_ <= 0 || out_ <= 0 || k_ <= 0 || stride_ <= 0 || pad_ < 0)
        throw std::invalid_argument("Conv2d: invalid configuration");
    weight_ = Tensor({out_, in_ * k_ * k_});
    grad_weight_ = Tensor::zeros_like(weight_);
    if (has_bias_) {
        bias_ = Tensor({out_});
        grad_bias_ = Tensor::zeros_like(bias_);
    }
}

void Conv2d::init(Rng& rng, float stddev) {
    for (int64_t i = 0; i < weight_.size(); ++i)
        weight_[i] = static_cast<float>(rng.normal(0.0, stddev));
    if (has_bias_) bias_.fill(0.0f);
}

Tensor Conv2d::forward(const Tensor& x, const ForwardMode& mode) {
    check_4d(x, in_, "Conv2d");
    const int N = x.dim(0), H = x.dim(2), W = x.dim(3);
    out_h_ = conv_out_size(H, k_, stride_, pad_);
    out_w_ = conv_out_size(W, k_, stride_, pad_);
    if (out_h_ <= 0 || out_w_ <= 0)
        throw std::invalid_argument("Conv2d: input " + x.shape_str() + " too small for kernel");

    const int K = in_ * k_ * k_;
    const int64_t ohw = static_cast<int64_t>(out_h_) * out_w_;
    Tensor out({N, out_, out_h_, out_w_});

    Tensor scratch;
    Tensor& cols = mode.grad ? cols_ : scratch;
    cols = Tensor({N, K, static_cast<int>(ohw)});
    in_h_ = H;
    in_w_ = W;

    for (int n = 0; n < N; ++n) {
        float* colptr = cols.data() + static_cast<int64_t>(n) * K * ohw;
        im2col(x.data() + static_cast<int64_t>(n) * in_ * H * W, in_, H, W, k_, stride_, pad_,
               out_h_, out_w_, colptr);
        Map o(out.data() + static_cast<int64_t>(n) * out_ * ohw, out_, ohw);
        o.noalias() = CMap(weight_.data(), out_, K) * CMap(colptr, K, ohw);
        if (has_bias_)
            for (int c = 0; c < out_; ++c) o.row(c).array() += bias_[c];
    }
    return out;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
    if (cols_.empty()) throw std::logic_error("Conv2d::backward without cached forward");
    const int N = grad_out.dim(0);
    const int K = in_ * k_ * k_;
    const int64_t ohw = static_cast<int64_t>(out_h_) * out_w_;
    const int H = in_h_, W = in_w_;

    Tensor grad_in({N, in_, H, W});
    Tensor gcols({K, static_cast<int>(ohw)});
    for (int n = 0; n < N; ++n) {
        CMap go(grad_out.data() + static_cast<int64_t>(n) * out_ * ohw, out_, ohw);
        const float* colptr = cols_.data() + static_cast<int64_t>(n) * K * ohw;
        if (!frozen_) {
            Map gw(grad_weight_.data(), out_, K);
            gw.noalias() += go * CMap(colptr, K, ohw).transpose();
            if (has_bias_)
                for (int c = 0; c < out_; ++c)
                    grad_bias_[c] += static_cast<float>(go.row(c).sum());
        }
        Map gc(gcols.data(), K, ohw);
        gc.noalias() = CMap(weight_.data(), out_, K).transpose() * go;
        col2im_add(gcols.data(), in_, H, W, k_, stride_, pad_, out_h_, out_w_,
                   grad_in.data() + static_cast<int64_t>(n) * in_ * H * W);
    }
    return grad_in;
}

void Conv2d::collect(const std::string& prefix, ParamRegistry& reg) {
    reg.add(prefix + "/w", &weight_, frozen_ ? nullptr : &grad_weight_);
    if (has_bias_) reg.add(prefix + "/b", &bias_, frozen_ ? nullptr : &grad_bias_);
}

// ---------------------------------------------------------------------------
// ConvTranspose2d

ConvTranspose2d::ConvTranspose2d(int in_channels, int out_channels, int kernel, int stride,
                                 int pad, int output_pad, bool bias)
    : in_(in_channels),
      out_(out_channels),
      k_(kernel),
      stride_(stride),
      pad_(pad),
      outpad_(output_pad),
      has_bias_(bias) {
    if (in_ <= 0 || out_ <= 0 || k_ <= 0 || stride_ <= 0 || pad_ < 0 || outpad_ < 0)
        throw std::invalid_argument("ConvTranspose2d: invalid configuration");
    weight_ = Tensor({in_, out_ * k_ * k_});
    grad_weight_ = Tensor::zeros_like(weight_);
    if (has_bias_) {
        bias_ = Tensor({out_});
        grad_bias_ = Tensor::zeros_like(bias_);
    }
}

void ConvTranspose2d::init(Rng& rng, float stddev) {
    for (int64_t i = 0; i < weight_.size(); ++i)
        weight_[i] = static_cast<float>(rng.normal(0.0, stddev));
    if (has_bias_) bias_.fill(0.0f);
}

Tensor ConvTranspose2d::forward(const Tensor& x, const ForwardMode& mode) {
    check_4d(x, in_, "ConvTranspose2d");
    const int N = x.dim(0), H = x.dim(2), W = x.dim(3);
    out_h_ = (H - 1) * stride_ - 2 * pad_ + k_ + outpad_;
    out_w_ = (W - 1) * stride_ - 2 * pad_ + k_ + outpad_;
    if (out_h_ <= 0 || out_w_ <= 0)
        throw std::invalid_argument("ConvTranspose2d: degenerate output size");

    if (mode.grad) input_ = x;

    const int Kc = out_ * k_ * k_;
    const int64_t hw = static_cast<int64_t>(H) * W;
    Tensor out({N, out_, out_h_, out_w_});
    Tensor cols({Kc, static_cast<int>(hw)});
    for (int n = 0; n < N; ++n) {
        Map gc(cols.data(), Kc, hw);
        gc.noalias() = CMap(weight_.data(), in_, Kc).transpose() *
                       CMap(x.data() + static_cast<int64_t>(n) * in_ * hw, in_, hw);
        float* optr = out.data() + static_cast<int64_t>(n) * out_ * out_h_ * out_w_;
        col2im_add(cols.data(), out_, out_h_, out_w_, k_, stride_, pad_, H, W, optr);
        if (has_bias_) {
            const int64_t span = static_cast<int64_t>(out_h_) * out_w_;
            for (int c = 0; c < out_; ++c)
                for (int64_t i = 0; i < span; ++i) optr[c * span + i] += bias_[c];
        }
    }
    return out;
}

Tensor ConvTranspose2d::backward(const Tensor& grad_out) {
    if (input_.empty()) throw std::logic_error("ConvTranspose2d::backward without cached forward");
    const int N = input_.dim(0), H = input_.dim(2), W = input_.dim(3);
    const int Kc = out_ * k_ * k_;
    const int64_t hw = static_cast<int64_t>(H) * W;

    Tensor grad_in({N, in_, H, W});
    Tensor gcols({Kc, static_cast<int>(hw)});
    for (int n = 0; n < N; ++n) {
        const float* goptr = grad_out.data() + static_cast<int64_t>(n) * out_ * out_h_ * out_w_;
        im2col(goptr, out_, out_h_, out_w_, k_, stride_, pad_, H, W, gcols.data());

        Map gw(grad_weight_.data(), in_, Kc);
        gw.noalias() += CMap(input_.data() + static_cast<int64_t>(n) * in_ * hw, in_, hw) *
                        CMap(gcols.data(), Kc, hw).transpose();
        if (has_bias_) {
            const int64_t span = static_cast<int64_t>(out_h_) * out_w_;
            for (int c = 0; c < out_; ++c) {
                double acc = 0.0;
                for (int64_t i = 0; i < span; ++i) acc += goptr[c * span + i];
                grad_bias_[c] += static_cast<float>(acc);
            }
        }
        Map gi(grad_in.data() + static_cast<int64_t>(n) * in_ * hw, in_, hw);
        gi.noalias() = CMap(weight_.data(), in_, Kc) * CMap(gcols.data(), Kc, hw);
    }
    return grad_in;
}

void ConvTranspose2d::collect(const std::string& prefix, ParamRegistry& reg) {
    reg.add(prefix + "/w", &weight_, &grad_weight_);
    if (has_bias_) reg.add(prefix + "/b", &bias_, &grad_bias_);
}

// ---------------------------------------------------------------------------
// BatchNorm2d

BatchNorm2d::BatchNorm2d(int channels, float eps, float momentum)
    : ch_(channels), eps_(eps), momentum_(momentum) {
    gamma_ = Tensor({ch_});
    gamma_.fill(1.0f);
    grad_gamma_ = Tensor::zeros_like(gamma_);
    beta_ = Tensor({ch_});
    grad_beta_ = Tensor::zeros_like(beta_);
    running_mean_ = Tensor({ch_});
    running_var_ = Tensor({ch_});
    running_var_.fill(1.0f);
}

Tensor BatchNorm2d::forward(const Tensor& x, const ForwardMode& mode) {
    check_4d(x, ch_, "BatchNorm2d");
    const int N = x.dim(0), H = x.dim(2), W = x.dim(3);
    const int64_t spatial = static_cast<int64_t>(H) * W;
    const int64_t m = static_cast<int64_t>(N) * spatial;

    Tensor out({N, ch_, H, W});
    trained_forward_ = mode.training;
    if (mode.grad) {
        x_hat_ = Tensor({N, ch_, H, W});
        inv_std_ = Tensor({ch_});
    }

    for (int c = 0; c < ch_; ++c) {
        float mean, istd;
        if (mode.training) {
            double acc = 0.0;
            for (int n = 0; n < N; ++n) {
                const float* p = x.data() + (static_cast<int64_t>(n) * ch_ + c) * spatial;
                for (int64_t i = 0; i < spatial; ++i) acc += p[i];
            }
            const double mu = acc / static_cast<double>(m);
            double var = 0.0;
            for (int n = 0; n < N; ++n) {
                const float* p = x.data() + (static_cast<int64_t>(n) * ch_ + c) * spatial;
                for (int64_t i = 0; i < spatial; ++i) {
                    const double d = p[i] - mu;
                    var += d * d;
                }
            }
            var /= static_cast<double>(m);
            mean = static_cast<float>(mu);
            istd = static_cast<float>(1.0 / std::sqrt(var + eps_));
            running_mean_[c] = (1.0f - momentum_) * running_mean_[c] + momentum_ * mean;
            running_var_[c] =
                (1.0f - momentum_) * running_var_[c] + momentum_ * static_cast<float>(var);
        } else {
            mean = running_mean_[c];
            istd = 1.0f / std::sqrt(running_var_[c] + eps_);
        }
        if (mode.grad) inv_std_[c] = istd;

        const float g = gamma_[c], b = beta_[c];
        for (int n = 0; n < N; ++n) {
            const float* p = x.data() + (static_cast<int64_t>(n) * ch_ + c) * spatial;
            float* o = out.data() + (static_cast<int64_t>(n) * ch_ + c) * spatial;
            if (mode.grad) {
                float* xh = x_hat_.data() + (static_cast<int64_t>(n) * ch_ + c) * spatial;
                for (int64_t i = 0; i < spatial; ++i) {
                    xh[i] = (p[i] - mean) * istd;
                    o[i] = g * xh[i] + b;
                }
            } else {
                for (int64_t i = 0; i < spatial; ++i) o[i] = g * (p[i] - mean) * istd + b;
            }
        }
    }
    return out;
}

Tensor BatchNorm2d::backward(const Tensor& grad_out) {
    if (x_hat_.empty()) throw std::logic_error("BatchNorm2d::backward without cached forward");
    const int N = grad_out.dim(0), H = grad_out.dim(2), W = grad_out.dim(3);
    const int64_t spatial = static_cast<int64_t>(H) * W;
    const int64_t m = static_cast<int64_t>(N) * spatial;

    Tensor grad_in({N, ch_, H, W});
    for (int c = 0; c < ch_; ++c) {
        const float g = gamma_[c], istd = inv_std_[c];
        double sum_gy = 0.0, sum_gy_xhat = 0.0;
        for (int n = 0; n < N; ++n) {
            const int64_t off = (static_cast<int64_t>(n) * ch_ + c) * spatial;
            const float* gy = grad_out.data() + off;
            const float* xh = x_hat_.data() + off;
            for (int64_t i = 0; i < spatial; ++i) {
                sum_gy += gy[i];
                sum_gy_xhat += static_cast<double>(gy[i]) * xh[i];
            }
        }
        grad_gamma_[c] += static_cast<float>(sum_gy_xhat);
        grad_beta_[c] += static_cast<float>(sum_gy);

        if (trained_forward_) {
            const float k1 = static_cast<float>(sum_gy / static_cast<double>(m));
            const float k2 = static_cast<float>(sum_gy_xhat / static_cast<double>(m));
            for (int n = 0; n < N; ++n) {
                const int64_t off = (static_cast<int64_t>(n) * ch_ + c) * spatial;
                const float* gy = grad_out.data() + off;
                const float* xh = x_hat_.data() + off;
                float* gi = grad_in.data() + off;
                for (int64_t i = 0; i < spatial; ++i)
                    gi[i] = g * istd * (gy[i] - k1 - xh[i] * k2);
            }
        } else {
            // Running statistics are constants, so the map is affine.
            for (int n = 0; n < N; ++n) {
                const int64_t off = (static_cast<int64_t>(n) * ch_ + c) * spatial;
                const float* gy = grad_out.data() + off;
                float* gi = grad_in.data() + off;
                for (int64_t i = 0; i < spatial; ++i) gi[i] = g * istd * gy[i];
            }
        }
    }
    return grad_in;
}

void BatchNorm2d::collect(const std::string& prefix, ParamRegistry& reg) {
    reg.add(prefix + "/gamma", &gamma_, &grad_gamma_);
    reg.add(prefix + "/beta", &beta_, &grad_beta_);
    reg.add(prefix + "/running_mean", &running_mean_);
    reg.add(prefix + "/running_var", &running_var_);
}

// ---------------------------------------------------------------------------
// Elementwise layers

Tensor LeakyReLU::forward(const Tensor& x, const ForwardMode& mode) {
    if (mode.grad) input_ = x;
    Tensor out = Tensor::zeros_like(x);
    const float* p = x.data();
    float* o = out.data();
    for (int64_t i = 0; i < x.size(); ++i) o[i] = p[i] > 0.0f ? p[i] : slope_ * p[i];
    return out;
}

Tensor LeakyReLU::backward(const Tensor& grad_out) {
    if (input_.empty()) throw std::logic_error("LeakyReLU::backward without cached forward");
    Tensor grad_in = Tensor::zeros_like(grad_out);
    const float* g = grad_out.data();
    const float* p = input_.data();
    float* gi = grad_in.data();
    for (int64_t i = 0; i < grad_out.size(); ++i) gi[i] = p[i] > 0.0f ? g[i] : slope_ * g[i];
    return grad_in;
}

Tensor Tanh::forward(const Tensor& x, const ForwardMode& mode) {
    Tensor out = Tensor::zeros_like(x);
    const float* p = x.data();
    float* o = out.data();
    for (int64_t i = 0; i < x.size(); ++i) o[i] = std::tanh(p[i]);
    if (mode.grad) output_ = out;
    return out;
}

Tensor Tanh::backward(const Tensor& grad_out) {
    if (output_.empty()) throw std::logic_error("Tanh::backward without cached forward");
    Tensor grad_in = Tensor::zeros_like(grad_out);
    const float* g = grad_out.data();
    const float* y = output_.data();
    float* gi = grad_in.data();
    for (int64_t i = 0; i < grad_out.size(); ++i) gi[i] = g[i] * (1.0f - y[i] * y[i]);
    return grad_in;
}

Tensor Dropout::forward(const Tensor& x, const ForwardMode& mode) {
    active_ = mode.training && rate_ > 0.0f;
    if (!active_) {
        if (mode.grad) mask_ = Tensor();
        return x;
    }
    const float keep = 1.0f - rate_;
    const float inv_keep = 1.0f / keep;
    Tensor out = Tensor::zeros_like(x);
    mask_ = Tensor::zeros_like(x);
    const float* p = x.data();
    float* o = out.data();
    float* mk = mask_.data();
    for (int64_t i = 0; i < x.size(); ++i) {
        const float m = rng_.uniform() < rate_ ? 0.0f : inv_keep;
        mk[i] = m;
        o[i] = p[i] * m;
    }
    return out;
}

Tensor Dropout::backward(const Tensor& grad_out) {
    if (!active_ || mask_.empty()) return grad_out;
    Tensor grad_in = Tensor::zeros_like(grad_out);
    const float* g = grad_out.data();
    const float* mk = mask_.data();
    float* gi = grad_in.data();
    for (int64_t i = 0; i < grad_out.size(); ++i) gi[i] = g[i] * mk[i];
    return grad_in;
}

// ---------------------------------------------------------------------------
// Pooling

Tensor avg_pool2(const Tensor& x) {
    if (x.ndim() != 4) throw std::invalid_argument("avg_pool2: expected {N,C,H,W}");
    const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (H % 2 != 0 || W % 2 != 0)
        throw std::invalid_argument("avg_pool2: spatial size must be even, got " + x.shape_str());
    Tensor out({N, C, H / 2, W / 2});
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const float* src = x.data() + (static_cast<int64_t>(n) * C + c) * H * W;
            float* dst = out.data() + (static_cast<int64_t>(n) * C + c) * (H / 2) * (W / 2);
            for (int y = 0; y < H / 2; ++y)
                for (int xx = 0; xx < W / 2; ++xx)
                    dst[y * (W / 2) + xx] =
                        0.25f * (src[(2 * y) * W + 2 * xx] + src[(2 * y) * W + 2 * xx + 1] +
                                 src[(2 * y + 1) * W + 2 * xx] + src[(2 * y + 1) * W + 2 * xx + 1]);
        }
    return out;
}

Tensor avg_pool2_backward(const Tensor& grad_out, int in_h, int in_w) {
    const int N = grad_out.dim(0), C = grad_out.dim(1), Ho = grad_out.dim(2), Wo = grad_out.dim(3);
    Tensor grad_in({N, C, in_h, in_w});
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const float* g = grad_out.data() + (static_cast<int64_t>(n) * C + c) * Ho * Wo;
            float* gi = grad_in.data() + (static_cast<int64_t>(n) * C + c) * in_h * in_w;
            for (int y = 0; y < Ho; ++y)
                for (int x = 0; x < Wo; ++x) {
                    const float v = 0.25f * g[y * Wo + x];
                    gi[(2 * y) * in_w + 2 * x] = v;
                    gi[(2 * y) * in_w + 2 * x + 1] = v;
                    gi[(2 * y + 1) * in_w + 2 * x] = v;
                    gi[(2 * y + 1) * in_w + 2 * x + 1] = v;
                }
        }
    return grad_in;
}

Tensor AvgPool2d::forward(const Tensor& x, const ForwardMode& mode) {
    if (mode.grad) in_shape_ = x.shape();
    // Degenerate maps pass through so deep stacks accept tiny probe images.
    if (x.dim(2) < 2 || x.dim(3) < 2) return x;
    return avg_pool2(x);
}

Tensor AvgPool2d::backward(const Tensor& grad_out) {
    if (in_shape_.empty()) throw std::logic_error("AvgPool2d::backward without cached forward");
    if (in_shape_[2] < 2 || in_shape_[3] < 2) return grad_out;
    return avg_pool2_backward(grad_out, in_shape_[2], in_shape_[3]);
}

Tensor MaxPool2d::forward(const Tensor& x, const ForwardMode& mode) {
    if (x.ndim() != 4) throw std::invalid_argument("MaxPool2d: expected {N,C,H,W}");
    if (x.dim(2) < 2 || x.dim(3) < 2) {
        if (mode.grad) {
            in_shape_ = x.shape();
            argmax_.clear();
        }
        return x;
    }
    const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (H % 2 != 0 || W % 2 != 0)
        throw std::invalid_argument("MaxPool2d: spatial size must be even, got " + x.shape_str());
    Tensor out({N, C, H / 2, W / 2});
    if (mode.grad) {
        in_shape_ = x.shape();
        argmax_.assign(static_cast<size_t>(out.size()), 0);
    }
    int64_t oi = 0;
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const float* src = x.data() + (static_cast<int64_t>(n) * C + c) * H * W;
            for (int y = 0; y < H / 2; ++y)
                for (int xx = 0; xx < W / 2; ++xx, ++oi) {
                    const int base = (2 * y) * W + 2 * xx;
                    const int offs[4] = {base, base + 1, base + W, base + W + 1};
                    int best = 0;
                    for (int j = 1; j < 4; ++j)
                        if (src[offs[j]] > src[offs[best]]) best = j;
                    out[oi] = src[offs[best]];
                    if (mode.grad) argmax_[static_cast<size_t>(oi)] = offs[best];
                }
        }
    return out;
}

Tensor MaxPool2d::backward(const Tensor& grad_out) {
    if (in_shape_.empty()) throw std::logic_error("MaxPool2d::backward without cached forward");
    if (in_shape_[2] < 2 || in_shape_[3] < 2) return grad_out;
    const int N = in_shape_[0], C = in_shape_[1], H = in_shape_[2], W = in_shape_[3];
    Tensor grad_in({N, C, H, W});
    int64_t oi = 0;
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            float* gi = grad_in.data() + (static_cast<int64_t>(n) * C + c) * H * W;
            const int64_t span = static_cast<int64_t>(grad_out.dim(2)) * grad_out.dim(3);
            for (int64_t i = 0; i < span; ++i, ++oi)
                gi[argmax_[static_cast<size_t>(oi)]] += grad_out[oi];
        }
    return grad_in;
}

// ---------------------------------------------------------------------------
// Sequential

Tensor Sequential::forward(const Tensor& x, const ForwardMode& mode) {
    Tensor cur = x;
    for (auto& layer : layers_) cur = layer->forward(cur, mode);
    return cur;
}

Tensor Sequential::backward(const Tensor& grad_out) {
    Tensor cur = grad_out;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = (*it)->backward(cur);
    return cur;
}

void Sequential::collect(const std::string& prefix, ParamRegistry& reg) {
    for (size_t i = 0; i < layers_.size(); ++i)
        layers_[i]->collect(prefix + "/" + names_[i], reg);
}

}  // namespace recongan::net
