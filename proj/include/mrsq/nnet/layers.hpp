#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mrsq/error.hpp"
#include "mrsq/nnet/tensor.hpp"

namespace mrsq::nnet {

// All layers work on a leading batch axis: conv/crelu/maxpool take [B, C, L],
// fc takes [B, F]. forward() caches what backward() needs; backward() returns
// the gradient with respect to the input and accumulates parameter gradients.

enum class LayerKind { conv1d, crelu, maxpool1d, fc, flatten };

inline const char* to_string(LayerKind k)
{
    switch (k) {
    case LayerKind::conv1d: return "conv1d";
    case LayerKind::crelu: return "crelu";
    case LayerKind::maxpool1d: return "maxpool1d";
    case LayerKind::fc: return "fc";
    case LayerKind::flatten: return "flatten";
    }
    return "?";
}

template <class T>
struct Param {
    Tensor<T>* value;
    Tensor<T>* grad;
};

template <class T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapMat = Eigen::Map<RowMatrix<T>>;
template <class T>
using ConstMapMat = Eigen::Map<const RowMatrix<T>>;

template <class T>
class Layer {
public:
    virtual ~Layer() = default;
    virtual LayerKind kind() const = 0;
    /// Per-sample output shape for a per-sample input shape; throws on mismatch.
    virtual Shape output_shape(const Shape& in) const = 0;
    virtual Tensor<T> forward(const Tensor<T>& x) = 0;
    virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;
    virtual std::vector<Param<T>> params() { return {}; }
};

namespace detail {

inline void require_rank(const Shape& s, std::size_t rank, const char* who)
{
    if (s.size() != rank) {
        throw InvalidArgument(std::string(who) + ": expected rank " + std::to_string(rank) + " input, got "
                              + shape_string(s));
    }
}

} // namespace detail

/// 1-D cross-correlation with bias, zero padding of kernel/2 on both sides
/// ("same" length at stride 1). Implemented as im2col + GEMM per sample.
template <class T>
class Conv1d final : public Layer<T> {
public:
    Conv1d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, std::size_t stride = 1)
        : in_(in_ch), out_(out_ch), k_(kernel), stride_(stride),
          weight({out_ch, in_ch * kernel}), bias({out_ch}),
          grad_weight({out_ch, in_ch * kernel}), grad_bias({out_ch})
    {
        if (kernel % 2 == 0) throw InvalidArgument("conv1d: kernel must be odd");
        if (stride < 1 || in_ch < 1 || out_ch < 1) throw InvalidArgument("conv1d: zero-sized dimension");
    }

    LayerKind kind() const override { return LayerKind::conv1d; }
    std::size_t in_channels() const noexcept { return in_; }
    std::size_t out_channels() const noexcept { return out_; }
    std::size_t kernel() const noexcept { return k_; }
    std::size_t stride() const noexcept { return stride_; }

    Shape output_shape(const Shape& in) const override
    {
        detail::require_rank(in, 2, "conv1d");
        if (in[0] != in_) {
            throw InvalidArgument("conv1d: expected " + std::to_string(in_) + " input channels, got " + std::to_string(in[0]));
        }
        if (in[1] < k_) throw InvalidArgument("conv1d: input length shorter than kernel");
        return {out_, out_length(in[1])};
    }

    Tensor<T> forward(const Tensor<T>& x) override
    {
        detail::require_rank(x.shape, 3, "conv1d");
        const Shape per = output_shape({x.dim(1), x.dim(2)});
        batch_ = x.dim(0);
        len_ = x.dim(2);
        lout_ = per[1];
        const std::size_t rows = in_ * k_;
        cols_.assign(batch_ * rows * lout_, T{0});
        Tensor<T> y({batch_, out_, lout_});
        const ConstMapMat<T> w(weight.ptr(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(rows));
        for (std::size_t b = 0; b < batch_; ++b) {
            T* col = cols_.data() + b * rows * lout_;
            im2col(x.ptr() + b * in_ * len_, col);
            const ConstMapMat<T> c(col, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(lout_));
            MapMat<T> out(y.ptr() + b * out_ * lout_, static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(lout_));
            out.noalias() = w * c;
            for (std::size_t o = 0; o < out_; ++o) out.row(static_cast<Eigen::Index>(o)).array() += bias[o];
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& grad_out) override
    {
        const std::size_t rows = in_ * k_;
        if (grad_out.shape != Shape{batch_, out_, lout_}) throw InvalidArgument("conv1d: gradient shape mismatch");
        Tensor<T> gx({batch_, in_, len_});
        const ConstMapMat<T> w(weight.ptr(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(rows));
        MapMat<T> gw(grad_weight.ptr(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(rows));
        RowMatrix<T> gcol(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(lout_));
        for (std::size_t b = 0; b < batch_; ++b) {
            const ConstMapMat<T> g(grad_out.ptr() + b * out_ * lout_, static_cast<Eigen::Index>(out_),
                                   static_cast<Eigen::Index>(lout_));
            const ConstMapMat<T> c(cols_.data() + b * rows * lout_, static_cast<Eigen::Index>(rows),
                                   static_cast<Eigen::Index>(lout_));
            gw.noalias() += g * c.transpose();
            for (std::size_t o = 0; o < out_; ++o) grad_bias[o] += g.row(static_cast<Eigen::Index>(o)).sum();
            gcol.noalias() = w.transpose() * g;
            col2im(gcol.data(), gx.ptr() + b * in_ * len_);
        }
        return gx;
    }

    std::vector<Param<T>> params() override { return {{&weight, &grad_weight}, {&bias, &grad_bias}}; }

    Tensor<T> weight;
    Tensor<T> bias;
    Tensor<T> grad_weight;
    Tensor<T> grad_bias;

private:
    std::size_t out_length(std::size_t len) const { return (len + 2 * (k_ / 2) - k_) / stride_ + 1; }

    void im2col(const T* x, T* col) const
    {
        const auto pad = static_cast<long>(k_ / 2);
        for (std::size_t c = 0; c < in_; ++c) {
            for (std::size_t j = 0; j < k_; ++j) {
                T* row = col + (c * k_ + j) * lout_;
                for (std::size_t l = 0; l < lout_; ++l) {
                    const long src = static_cast<long>(l * stride_ + j) - pad;
                    row[l] = (src >= 0 && src < static_cast<long>(len_)) ? x[c * len_ + static_cast<std::size_t>(src)] : T{0};
                }
            }
        }
    }

    void col2im(const T* col, T* gx) const
    {
        const auto pad = static_cast<long>(k_ / 2);
        for (std::size_t c = 0; c < in_; ++c) {
            for (std::size_t j = 0; j < k_; ++j) {
                const T* row = col + (c * k_ + j) * lout_;
                for (std::size_t l = 0; l < lout_; ++l) {
                    const long src = static_cast<long>(l * stride_ + j) - pad;
                    if (src >= 0 && src < static_cast<long>(len_)) gx[c * len_ + static_cast<std::size_t>(src)] += row[l];
                }
            }
        }
    }

    std::size_t in_, out_, k_, stride_;
    std::size_t batch_ = 0, len_ = 0, lout_ = 0;
    AlignedBuffer<T> cols_;
};

/// CReLU: concat(r(x), -r(-x)) along channels, r(x) = max(0, x). The second
/// half therefore holds min(x, 0).
template <class T>
class CRelu final : public Layer<T> {
public:
    LayerKind kind() const override { return LayerKind::crelu; }

    Shape output_shape(const Shape& in) const override
    {
        detail::require_rank(in, 2, "crelu");
        return {2 * in[0], in[1]};
    }

    Tensor<T> forward(const Tensor<T>& x) override
    {
        detail::require_rank(x.shape, 3, "crelu");
        input_ = x;
        const std::size_t b = x.dim(0), c = x.dim(1), l = x.dim(2);
        Tensor<T> y({b, 2 * c, l});
        for (std::size_t i = 0; i < b; ++i) {
            const T* src = x.ptr() + i * c * l;
            T* pos = y.ptr() + i * 2 * c * l;
            T* neg = pos + c * l;
            for (std::size_t j = 0; j < c * l; ++j) {
                pos[j] = std::max(src[j], T{0});
                neg[j] = -std::max(-src[j], T{0});
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& grad_out) override
    {
        const std::size_t b = input_.dim(0), c = input_.dim(1), l = input_.dim(2);
        if (grad_out.shape != Shape{b, 2 * c, l}) throw InvalidArgument("crelu: gradient shape mismatch");
        Tensor<T> gx(input_.shape);
        for (std::size_t i = 0; i < b; ++i) {
            const T* src = input_.ptr() + i * c * l;
            const T* gpos = grad_out.ptr() + i * 2 * c * l;
            const T* gneg = gpos + c * l;
            T* dst = gx.ptr() + i * c * l;
            for (std::size_t j = 0; j < c * l; ++j) {
                dst[j] = src[j] > T{0} ? gpos[j] : (src[j] < T{0} ? gneg[j] : T{0});
            }
        }
        return gx;
    }

private:
    Tensor<T> input_;
};

/// Non-overlapping max pooling. Backward routes to the first argmax of each window.
template <class T>
class MaxPool1d final : public Layer<T> {
public:
    explicit MaxPool1d(std::size_t width) : width_(width)
    {
        if (width < 1) throw InvalidArgument("maxpool1d: width must be >= 1");
    }

    LayerKind kind() const override { return LayerKind::maxpool1d; }
    std::size_t width() const noexcept { return width_; }

    Shape output_shape(const Shape& in) const override
    {
        detail::require_rank(in, 2, "maxpool1d");
        if (in[1] % width_ != 0) {
            throw InvalidArgument("maxpool1d: width " + std::to_string(width_) + " does not divide length "
                                  + std::to_string(in[1]));
        }
        return {in[0], in[1] / width_};
    }

    Tensor<T> forward(const Tensor<T>& x) override
    {
        detail::require_rank(x.shape, 3, "maxpool1d");
        const Shape per = output_shape({x.dim(1), x.dim(2)});
        in_shape_ = x.shape;
        const std::size_t rows = x.dim(0) * x.dim(1), l = x.dim(2), lo = per[1];
        Tensor<T> y({x.dim(0), per[0], lo});
        argmax_.assign(rows * lo, 0);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t o = 0; o < lo; ++o) {
                const std::size_t base = r * l + o * width_;
                std::size_t best = base;
                for (std::size_t j = 1; j < width_; ++j) {
                    if (x[base + j] > x[best]) best = base + j;
                }
                y[r * lo + o] = x[best];
                argmax_[r * lo + o] = best;
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& grad_out) override
    {
        if (grad_out.size() != argmax_.size()) throw InvalidArgument("maxpool1d: gradient shape mismatch");
        Tensor<T> gx(in_shape_);
        for (std::size_t i = 0; i < argmax_.size(); ++i) gx[argmax_[i]] += grad_out[i];
        return gx;
    }

private:
    std::size_t width_;
    Shape in_shape_;
    std::vector<std::size_t> argmax_;
};

template <class T>
class Flatten final : public Layer<T> {
public:
    LayerKind kind() const override { return LayerKind::flatten; }

    Shape output_shape(const Shape& in) const override { return {shape_size(in)}; }

    Tensor<T> forward(const Tensor<T>& x) override
    {
        in_shape_ = x.shape;
        Tensor<T> y = x;
        y.shape = {x.dim(0), x.size() / std::max<std::size_t>(x.dim(0), 1)};
        return y;
    }

    Tensor<T> backward(const Tensor<T>& grad_out) override
    {
        Tensor<T> g = grad_out;
        g.shape = in_shape_;
        return g;
    }

private:
    Shape in_shape_;
};

/// Affine map y = W x + b with W of shape [out, in].
template <class T>
class Dense final : public Layer<T> {
public:
    Dense(std::size_t in, std::size_t out)
        : in_(in), out_(out), weight({out, in}), bias({out}), grad_weight({out, in}), grad_bias({out})
    {
        if (in < 1 || out < 1) throw InvalidArgument("fc: zero-sized dimension");
    }

    LayerKind kind() const override { return LayerKind::fc; }
    std::size_t in_features() const noexcept { return in_; }
    std::size_t out_features() const noexcept { return out_; }

    Shape output_shape(const Shape& in) const override
    {
        if (shape_size(in) != in_ || in.size() != 1) {
            throw InvalidArgument("fc: expected [" + std::to_string(in_) + "] input, got " + shape_string(in));
        }
        return {out_};
    }

    Tensor<T> forward(const Tensor<T>& x) override
    {
        detail::require_rank(x.shape, 2, "fc");
        output_shape({x.dim(1)});
        input_ = x;
        const auto b = static_cast<Eigen::Index>(x.dim(0));
        Tensor<T> y({x.dim(0), out_});
        const ConstMapMat<T> xm(x.ptr(), b, static_cast<Eigen::Index>(in_));
        const ConstMapMat<T> w(weight.ptr(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(in_));
        MapMat<T> ym(y.ptr(), b, static_cast<Eigen::Index>(out_));
        ym.noalias() = xm * w.transpose();
        const Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bv(bias.ptr(), static_cast<Eigen::Index>(out_));
        ym.rowwise() += bv;
        return y;
    }

    Tensor<T> backward(const Tensor<T>& grad_out) override
    {
        const auto b = static_cast<Eigen::Index>(input_.dim(0));
        if (grad_out.shape != Shape{input_.dim(0), out_}) throw InvalidArgument("fc: gradient shape mismatch");
        const ConstMapMat<T> g(grad_out.ptr(), b, static_cast<Eigen::Index>(out_));
        const ConstMapMat<T> xm(input_.ptr(), b, static_cast<Eigen::Index>(in_));
        const ConstMapMat<T> w(weight.ptr(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(in_));
        MapMat<T> gw(grad_weight.ptr(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(in_));
        gw.noalias() += g.transpose() * xm;
        Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> gb(grad_bias.ptr(), static_cast<Eigen::Index>(out_));
        gb += g.colwise().sum();
        Tensor<T> gx({input_.dim(0), in_});
        MapMat<T> gxm(gx.ptr(), b, static_cast<Eigen::Index>(in_));
        gxm.noalias() = g * w;
        return gx;
    }

    std::vector<Param<T>> params() override { return {{&weight, &grad_weight}, {&bias, &grad_bias}}; }

    Tensor<T> weight;
    Tensor<T> bias;
    Tensor<T> grad_weight;
    Tensor<T> grad_bias;

private:
    std::size_t in_, out_;
    Tensor<T> input_;
};

/// Mean squared error averaged over outputs and batch: (1/B) sum_b (1/K) sum_k (p - y)^2.
template <class T>
double mse_loss(const Tensor<T>& pred, const Tensor<T>& label)
{
    if (pred.shape != label.shape || pred.rank() != 2) throw InvalidArgument("mse_loss: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = static_cast<double>(pred[i]) - static_cast<double>(label[i]);
        s += d * d;
    }
    return s / static_cast<double>(pred.size());
}

/// d(mse_loss)/d(pred) = 2 (p - y) / (B K).
template <class T>
Tensor<T> mse_loss_grad(const Tensor<T>& pred, const Tensor<T>& label)
{
    if (pred.shape != label.shape) throw InvalidArgument("mse_loss_grad: shape mismatch");
    Tensor<T> g(pred.shape);
    const T scale = T(2) / static_cast<T>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) g[i] = scale * (pred[i] - label[i]);
    return g;
}

} // namespace mrsq::nnet
