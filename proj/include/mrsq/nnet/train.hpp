#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrsq/datagen.hpp"
#include "mrsq/error.hpp"
#include "mrsq/nnet/adam.hpp"
#include "mrsq/nnet/network.hpp"
#include "mrsq/rng.hpp"
#include "mrsq/sigmodel.hpp"

namespace mrsq::nnet {

struct TrainConfig {
    double lr0 = 1e-3;
    double gamma = 0.5;
    /// 0 means max_iters / 8.
    std::size_t step_iters = 0;
    std::size_t max_iters = 20000;
    std::size_t batch_size = 64;
    std::uint64_t seed = 0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    /// Validation loss is recorded every eval_every iterations (and at the end).
    std::size_t eval_every = 500;
    /// Upper bound on validation samples scored at each evaluation (0 = all).
    std::size_t eval_max_samples = 0;

    std::size_t effective_step() const { return step_iters ? step_iters : std::max<std::size_t>(1, max_iters / 8); }

    void validate() const
    {
        if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidArgument("TrainConfig: gamma must lie in (0, 1]");
        if (effective_step() < 1) throw InvalidArgument("TrainConfig: step_iters must be >= 1");
        if (batch_size < 1) throw InvalidArgument("TrainConfig: batch_size must be >= 1");
        if (!(lr0 > 0.0)) throw InvalidArgument("TrainConfig: lr0 must be positive");
    }
};

inline nlohmann::json to_json(const TrainConfig& c)
{
    return {{"lr0", c.lr0},           {"gamma", c.gamma},
            {"step_iters", c.step_iters}, {"max_iters", c.max_iters},
            {"batch_size", c.batch_size}, {"seed", c.seed},
            {"adam_beta1", c.adam_beta1}, {"adam_beta2", c.adam_beta2},
            {"adam_eps", c.adam_eps},     {"eval_every", c.eval_every},
            {"eval_max_samples", c.eval_max_samples}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j)
{
    TrainConfig c;
    try {
        c.lr0 = j.value("lr0", c.lr0);
        c.gamma = j.value("gamma", c.gamma);
        c.step_iters = j.value("step_iters", c.step_iters);
        c.max_iters = j.value("max_iters", c.max_iters);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.seed = j.value("seed", c.seed);
        c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
        c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
        c.adam_eps = j.value("adam_eps", c.adam_eps);
        c.eval_every = j.value("eval_every", c.eval_every);
        c.eval_max_samples = j.value("eval_max_samples", c.eval_max_samples);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("TrainConfig: ") + e.what());
    }
    return c;
}

struct CurvePoint {
    std::size_t iteration = 0;
    double train_loss = 0.0;
    double val_loss = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
    std::vector<CurvePoint> curve;
    double final_train_loss = 0.0;
    double final_val_loss = std::numeric_limits<double>::quiet_NaN();
};

/// Packs samples[indices] into an input batch [B, 2, N] and a label batch [B, K].
template <class T>
std::pair<Tensor<T>, Tensor<T>> make_batch(const Dataset& ds, std::span<const std::size_t> indices)
{
    const std::size_t n = ds.n_points(), k = ds.label_size(), b = indices.size();
    Tensor<T> x({b, 2, n});
    Tensor<T> y({b, k});
    for (std::size_t i = 0; i < b; ++i) {
        const auto& s = ds.samples[indices[i]];
        T* dst = x.ptr() + i * 2 * n;
        for (std::size_t j = 0; j < n; ++j) {
            dst[j] = static_cast<T>(s.signal.re[j]);
            dst[n + j] = static_cast<T>(s.signal.im[j]);
        }
        for (std::size_t c = 0; c < k; ++c) y[i * k + c] = static_cast<T>(s.label[c]);
    }
    return {std::move(x), std::move(y)};
}

/// Mean MSE over (up to max_samples leading) samples of a dataset.
template <class T>
double evaluate_loss(Network<T>& net, const Dataset& ds, std::size_t max_samples = 0, std::size_t batch = 64)
{
    const std::size_t total = max_samples ? std::min(max_samples, ds.size()) : ds.size();
    if (total == 0) return std::numeric_limits<double>::quiet_NaN();
    double sum = 0.0;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < total; start += batch) {
        idx.clear();
        for (std::size_t i = start; i < std::min(total, start + batch); ++i) idx.push_back(i);
        auto [x, y] = make_batch<T>(ds, idx);
        sum += mse_loss(net.forward(std::move(x)), y) * static_cast<double>(idx.size());
    }
    return sum / static_cast<double>(total);
}

/// Mini-batch Adam training with seeded shuffled epochs and the step LR policy.
/// Deterministic for a given seed. Throws TrainingDivergedError if the loss is
/// non-finite or exceeds 100x max(best loss, 1e-3 x first loss).
template <class T>
TrainResult train(Network<T>& net, const Dataset& train_set, const Dataset& val_set, const TrainConfig& cfg,
                  const std::function<void(const CurvePoint&)>& on_eval = {})
{
    cfg.validate();
    if (train_set.size() == 0) throw InvalidArgument("train: empty training set");
    if (train_set.label_size() != net.spec().output_dim) {
        throw InvalidArgument("train: dataset has " + std::to_string(train_set.label_size())
                              + " labels but the network outputs " + std::to_string(net.spec().output_dim));
    }
    if (train_set.n_points() != net.spec().input_length) throw InvalidArgument("train: signal length does not match network");

    Adam<T> adam({cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps});
    SeededRng rng = make_stream(cfg.seed, 0x73687566u);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t cursor = 0;

    TrainResult result;
    double interval_sum = 0.0;
    std::size_t interval_count = 0;
    double best = std::numeric_limits<double>::infinity();
    double first = std::numeric_limits<double>::quiet_NaN();
    const auto params = net.params();
    std::vector<std::size_t> batch_idx;
    const std::size_t step = cfg.effective_step();

    auto check_divergence = [&](double loss, std::size_t iter) {
        if (!std::isfinite(loss)) throw TrainingDivergedError("train: loss is not finite at iteration " + std::to_string(iter));
        if (std::isnan(first)) first = loss;
        best = std::min(best, loss);
        if (loss > 100.0 * std::max(best, 1e-3 * first)) {
            throw TrainingDivergedError("train: loss " + std::to_string(loss) + " grew over 100x its minimum at iteration "
                                        + std::to_string(iter));
        }
    };

    for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
        batch_idx.clear();
        for (std::size_t i = 0; i < std::min(cfg.batch_size, train_set.size()); ++i) {
            if (cursor == order.size()) {
                std::shuffle(order.begin(), order.end(), rng);
                cursor = 0;
            }
            batch_idx.push_back(order[cursor++]);
        }
        auto [x, y] = make_batch<T>(train_set, batch_idx);
        net.zero_grad();
        const Tensor<T> pred = net.forward(std::move(x));
        const double loss = mse_loss(pred, y);
        if (!std::isfinite(loss)) check_divergence(loss, iter);
        net.backward(mse_loss_grad(pred, y));
        adam.step(params, step_lr(cfg.lr0, cfg.gamma, iter, step));
        interval_sum += loss;
        ++interval_count;

        const bool last = iter + 1 == cfg.max_iters;
        if ((cfg.eval_every && (iter + 1) % cfg.eval_every == 0) || last) {
            CurvePoint pt;
            pt.iteration = iter + 1;
            pt.train_loss = interval_sum / static_cast<double>(interval_count);
            check_divergence(pt.train_loss, iter + 1);
            if (val_set.size()) pt.val_loss = evaluate_loss(net, val_set, cfg.eval_max_samples);
            result.curve.push_back(pt);
            if (on_eval) on_eval(pt);
            interval_sum = 0.0;
            interval_count = 0;
        }
    }
    if (!result.curve.empty()) {
        result.final_train_loss = result.curve.back().train_loss;
        result.final_val_loss = result.curve.back().val_loss;
    }
    return result;
}

/// Forward pass on one signal; outputs clamped to >= 0.
template <class T>
std::vector<double> predict(Network<T>& net, const ComplexSeries& signal)
{
    const auto n = signal.size();
    Tensor<T> x({1, 2, n});
    for (std::size_t j = 0; j < n; ++j) {
        x[j] = static_cast<T>(signal.re[j]);
        x[n + j] = static_cast<T>(signal.im[j]);
    }
    const auto y = net.forward(std::move(x));
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = std::max(0.0, static_cast<double>(y[i]));
    return out;
}

/// Batched predict over a whole dataset; row i holds the clamped outputs for sample i.
template <class T>
std::vector<std::vector<double>> predict_all(Network<T>& net, const Dataset& ds, std::size_t batch = 64)
{
    std::vector<std::vector<double>> out;
    out.reserve(ds.size());
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < ds.size(); start += batch) {
        idx.clear();
        for (std::size_t i = start; i < std::min(ds.size(), start + batch); ++i) idx.push_back(i);
        auto [x, y] = make_batch<T>(ds, idx);
        const auto pred = net.forward(std::move(x));
        const std::size_t k = pred.dim(1);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            std::vector<double> row(k);
            for (std::size_t c = 0; c < k; ++c) row[c] = std::max(0.0, static_cast<double>(pred[i * k + c]));
            out.push_back(std::move(row));
        }
    }
    return out;
}

} // namespace mrsq::nnet
