#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "mrsq/nnet/layers.hpp"

namespace mrsq::nnet {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Step learning-rate policy: lr0 * gamma^floor(iter / step).
inline double step_lr(double lr0, double gamma, std::size_t iter, std::size_t step)
{
    return lr0 * std::pow(gamma, static_cast<double>(iter / step));
}

/// Adam with bias correction. Moments are kept per parameter tensor in the
/// order the parameters were first seen.
template <class T>
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    void step(const std::vector<Param<T>>& params, double lr)
    {
        if (m_.empty()) {
            for (const auto& p : params) {
                m_.emplace_back(p.value->size(), 0.0);
                v_.emplace_back(p.value->size(), 0.0);
            }
        }
        ++t_;
        const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto& w = params[i].value->data;
            const auto& g = params[i].grad->data;
            auto& m = m_[i];
            auto& v = v_[i];
            for (std::size_t j = 0; j < w.size(); ++j) {
                const double gj = static_cast<double>(g[j]);
                m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * gj;
                v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * gj * gj;
                const double mhat = m[j] / c1;
                const double vhat = v[j] / c2;
                w[j] = static_cast<T>(static_cast<double>(w[j]) - lr * mhat / (std::sqrt(vhat) + cfg_.eps));
            }
        }
    }

    std::size_t steps() const noexcept { return t_; }
    const std::vector<std::vector<double>>& first_moments() const noexcept { return m_; }
    const std::vector<std::vector<double>>& second_moments() const noexcept { return v_; }

private:
    AdamConfig cfg_;
    std::size_t t_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

} // namespace mrsq::nnet
