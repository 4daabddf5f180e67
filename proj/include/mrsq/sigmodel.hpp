#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "mrsq/basis.hpp"
#include "mrsq/error.hpp"
#include "mrsq/rng.hpp"
#include "mrsq/series.hpp"

namespace mrsq {

/// Parameters of the signal model for one acquisition: per-metabolite amplitude,
/// damping modification and frequency shift, plus the background scale/damping/shift.
struct SpectralParams {
    std::vector<double> amplitudes;
    std::vector<double> dampings_hz;
    std::vector<double> shifts_hz;
    double bg_scale = 0.0;
    double bg_damping_hz = 0.0;
    double bg_shift_hz = 0.0;

    SpectralParams() = default;
    explicit SpectralParams(std::size_t m) : amplitudes(m, 0.0), dampings_hz(m, 0.0), shifts_hz(m, 0.0) {}

    std::size_t size() const noexcept { return amplitudes.size(); }

    // Component-indexed access where k == size() addresses the background.
    double amplitude(std::size_t k) const { return k < size() ? amplitudes[k] : bg_scale; }
    double damping(std::size_t k) const { return k < size() ? dampings_hz[k] : bg_damping_hz; }
    double shift(std::size_t k) const { return k < size() ? shifts_hz[k] : bg_shift_hz; }
    double& amplitude(std::size_t k) { return k < size() ? amplitudes[k] : bg_scale; }
    double& damping(std::size_t k) { return k < size() ? dampings_hz[k] : bg_damping_hz; }
    double& shift(std::size_t k) { return k < size() ? shifts_hz[k] : bg_shift_hz; }

    /// Regression target: the M amplitudes followed by the background scale.
    std::vector<double> label() const
    {
        std::vector<double> out(amplitudes);
        out.push_back(bg_scale);
        return out;
    }

    friend bool operator==(const SpectralParams&, const SpectralParams&) = default;
};

inline void check_dimensions(const BasisSet& basis, const SpectralParams& params)
{
    const auto m = basis.size();
    if (params.amplitudes.size() != m || params.dampings_hz.size() != m || params.shifts_hz.size() != m) {
        throw InvalidArgument("params have " + std::to_string(params.amplitudes.size()) + "/"
                              + std::to_string(params.dampings_hz.size()) + "/" + std::to_string(params.shifts_hz.size())
                              + " entries but the basis has " + std::to_string(m) + " metabolites");
    }
}

/// e^{rate * j * dt} for j = 0..n-1. Powers of the one-step factor, re-anchored
/// with a direct exponential every 64 samples.
inline std::vector<cdouble> exponential_ramp(cdouble rate, std::size_t n, double dwell_time_s)
{
    std::vector<cdouble> out(n);
    const cdouble step = std::exp(rate * dwell_time_s);
    constexpr std::size_t anchor_every = 64;
    cdouble v{1.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) {
        if (j % anchor_every == 0 && j != 0) v = std::exp(rate * (static_cast<double>(j) * dwell_time_s));
        out[j] = v;
        v *= step;
    }
    return out;
}

/// Component k of the model before amplitude weighting: x_k[j] e^{(dalpha + 2 pi i df) t_j}.
inline std::vector<cdouble> modulated_component(const BasisSet& basis, std::size_t k, double damping_hz, double shift_hz)
{
    const auto& x = basis.signal(k);
    const cdouble rate{damping_hz, 2.0 * std::numbers::pi * shift_hz};
    auto out = exponential_ramp(rate, basis.n_points(), basis.dwell_time_s());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] *= x[j];
    return out;
}

/// Evaluates sum_m a_m x_m(t) e^{da_m t + 2 pi i df_m t} + g b(t) e^{da_b t + 2 pi i df_b t}.
/// The damping term enters with a positive sign, so a negative value adds decay.
inline ComplexSeries evaluate_model(const BasisSet& basis, const SpectralParams& params)
{
    check_dimensions(basis, params);
    const std::size_t n = basis.n_points();
    ComplexSeries out(n);
    for (std::size_t k = 0; k < basis.components(); ++k) {
        const double a = params.amplitude(k);
        const auto& x = basis.signal(k);
        const auto ramp = exponential_ramp({params.damping(k), 2.0 * std::numbers::pi * params.shift(k)}, n,
                                           basis.dwell_time_s());
        for (std::size_t j = 0; j < n; ++j) {
            const cdouble v = a * (x[j] * ramp[j]);
            out.re[j] += v.real();
            out.im[j] += v.imag();
        }
    }
    return out;
}

inline constexpr double noiseless = std::numeric_limits<double>::infinity();

/// Adds circular complex Gaussian noise with per-component standard deviation
/// |signal[0]| / snr. An infinite snr returns the input unchanged.
inline ComplexSeries add_complex_noise(const ComplexSeries& signal, double snr, SeededRng& rng)
{
    if (std::isinf(snr) && snr > 0) return signal;
    if (!(snr > 0.0) || std::isnan(snr)) throw InvalidArgument("add_complex_noise: snr must be > 0");
    if (signal.size() == 0) throw InvalidArgument("add_complex_noise: empty signal");
    const double first = std::abs(signal[0]);
    if (first == 0.0) throw InvalidArgument("add_complex_noise: first point is zero, noise level undefined");
    const double sigma = first / snr;
    std::normal_distribution<double> noise(0.0, sigma);
    ComplexSeries out = signal;
    for (std::size_t j = 0; j < out.size(); ++j) {
        out.re[j] += noise(rng);
        out.im[j] += noise(rng);
    }
    return out;
}

/// Two-channel network input: row 0 = real part, row 1 = imaginary part.
inline std::vector<std::vector<double>> flatten_for_network(const ComplexSeries& signal)
{
    return {signal.re, signal.im};
}

inline ComplexSeries unflatten_from_network(const std::vector<std::vector<double>>& channels)
{
    if (channels.size() != 2) throw InvalidArgument("unflatten_from_network: expected 2 channels");
    return ComplexSeries(channels[0], channels[1]);
}

} // namespace mrsq
