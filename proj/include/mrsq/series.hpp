#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "mrsq/error.hpp"

namespace mrsq {

using cdouble = std::complex<double>;

/// Fixed-length complex time-domain signal stored as separate real and imaginary arrays.
struct ComplexSeries {
    std::vector<double> re;
    std::vector<double> im;

    ComplexSeries() = default;
    explicit ComplexSeries(std::size_t n) : re(n, 0.0), im(n, 0.0) {}
    ComplexSeries(std::vector<double> real, std::vector<double> imag)
        : re(std::move(real)), im(std::move(imag))
    {
        if (re.size() != im.size()) {
            throw InvalidArgument("ComplexSeries: real and imaginary parts differ in length");
        }
    }

    static ComplexSeries from_complex(const std::vector<cdouble>& values)
    {
        ComplexSeries s(values.size());
        for (std::size_t j = 0; j < values.size(); ++j) {
            s.re[j] = values[j].real();
            s.im[j] = values[j].imag();
        }
        return s;
    }

    std::size_t size() const noexcept { return re.size(); }
    cdouble operator[](std::size_t j) const { return {re[j], im[j]}; }
    void set(std::size_t j, cdouble v)
    {
        re[j] = v.real();
        im[j] = v.imag();
    }

    std::vector<cdouble> to_complex() const
    {
        std::vector<cdouble> out(size());
        for (std::size_t j = 0; j < size(); ++j) out[j] = {re[j], im[j]};
        return out;
    }

    bool all_finite() const
    {
        for (std::size_t j = 0; j < size(); ++j) {
            if (!std::isfinite(re[j]) || !std::isfinite(im[j])) return false;
        }
        return true;
    }

    friend bool operator==(const ComplexSeries&, const ComplexSeries&) = default;
};

inline bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

namespace detail {

inline void fft_in_place(std::vector<cdouble>& a, bool inverse)
{
    const std::size_t n = a.size();
    if (!is_power_of_two(n)) {
        throw InvalidArgument("fft: length " + std::to_string(n) + " is not a power of two");
    }
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const double sign = inverse ? 1.0 : -1.0;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        // Twiddles evaluated per index, not by recurrence.
        std::vector<cdouble> w(half);
        for (std::size_t k = 0; k < half; ++k) {
            const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len);
            w[k] = {std::cos(ang), std::sin(ang)};
        }
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const cdouble u = a[i + k];
                const cdouble v = a[i + k + half] * w[k];
                a[i + k] = u + v;
                a[i + k + half] = u - v;
            }
        }
    }
}

} // namespace detail

/// Unnormalized forward DFT (radix-2, iterative). Length must be a power of two.
inline ComplexSeries fft(const ComplexSeries& signal)
{
    auto a = signal.to_complex();
    detail::fft_in_place(a, false);
    return ComplexSeries::from_complex(a);
}

/// Inverse DFT including the 1/N factor, so ifft(fft(x)) == x.
inline ComplexSeries ifft(const ComplexSeries& spectrum)
{
    auto a = spectrum.to_complex();
    detail::fft_in_place(a, true);
    const double scale = 1.0 / static_cast<double>(a.size());
    for (auto& v : a) v *= scale;
    return ComplexSeries::from_complex(a);
}

/// Frequency (Hz) of FFT bin `k` for an n-point series sampled at `dwell_time_s`,
/// mapping the upper half of the bins to negative frequencies.
inline double bin_frequency(std::size_t k, std::size_t n, double dwell_time_s)
{
    const auto kk = static_cast<double>(k);
    const auto nn = static_cast<double>(n);
    const double f = kk / (nn * dwell_time_s);
    return k < n / 2 ? f : f - 1.0 / dwell_time_s;
}

/// Bin index nearest to frequency `f_hz` (negative frequencies wrap to the upper half).
inline std::size_t frequency_bin(double f_hz, std::size_t n, double dwell_time_s)
{
    const auto nn = static_cast<long long>(n);
    long long k = std::llround(f_hz * static_cast<double>(n) * dwell_time_s);
    k %= nn;
    if (k < 0) k += nn;
    return static_cast<std::size_t>(k);
}

} // namespace mrsq
