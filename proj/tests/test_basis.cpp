#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "mrsq/basis.hpp"

using namespace mrsq;

namespace {

MetaboliteSpec single(double f, double c, double alpha, double phase = 0.0)
{
    return {"X", {{f, c, alpha, phase}}};
}

std::size_t argmax_magnitude(const ComplexSeries& spectrum)
{
    std::size_t best = 0;
    for (std::size_t k = 1; k < spectrum.size(); ++k) {
        if (std::abs(spectrum[k]) > std::abs(spectrum[best])) best = k;
    }
    return best;
}

// Full width at half maximum (Hz) of the magnitude spectrum around its peak,
// measured by walking outward bin by bin with linear interpolation.
double fwhm_hz(const ComplexSeries& signal, double dwell)
{
    const auto spec = fft(signal);
    const std::size_t n = spec.size();
    const std::size_t peak = argmax_magnitude(spec);
    const double half = std::abs(spec[peak]) / 2.0;
    auto walk = [&](int dir) {
        double prev = std::abs(spec[peak]);
        for (std::size_t step = 1; step < n / 2; ++step) {
            const std::size_t k = (peak + n + static_cast<std::size_t>(dir) * step) % n;
            const double cur = std::abs(spec[k]);
            if (cur <= half) return static_cast<double>(step - 1) + (prev - half) / (prev - cur);
            prev = cur;
        }
        return static_cast<double>(n / 2);
    };
    const double bins = walk(+1) + walk(-1);
    return bins / (static_cast<double>(n) * dwell);
}

std::string project_file(const char* rel)
{
    return (std::filesystem::path(MRSQ_SOURCE_DIR) / rel).string();
}

} // namespace

TEST(Synthesize, ZeroFrequencyUndampedIsConstant)
{
    const auto s = synthesize(single(0, 1, 0), 4, 1e-3);
    for (std::size_t j = 0; j < 4; ++j) {
        EXPECT_EQ(s.re[j], 1.0);
        EXPECT_EQ(s.im[j], 0.0);
    }
}

TEST(Synthesize, PureDecay)
{
    const double alpha = 7.0, dt = 5e-4;
    const auto s = synthesize(single(0, 1, alpha), 64, dt);
    for (std::size_t j = 0; j < 64; ++j) {
        EXPECT_NEAR(s.re[j], std::exp(-alpha * static_cast<double>(j) * dt), 1e-15);
        EXPECT_EQ(s.im[j], 0.0);
    }
}

TEST(Synthesize, SpectrumPeaksAtLineFrequency)
{
    const auto s = synthesize(single(125.0, 1, 5.0), 2048, 5e-4);
    const auto k = argmax_magnitude(fft(s));
    EXPECT_EQ(k, static_cast<std::size_t>(std::lround(125.0 * 2048 * 5e-4)));
}

TEST(Synthesize, Errors)
{
    EXPECT_THROW(synthesize(MetaboliteSpec{"E", {}}, 8, 1e-3), InvalidArgument);
    EXPECT_THROW(synthesize(single(std::numeric_limits<double>::quiet_NaN(), 1, 0), 8, 1e-3), InvalidArgument);
    EXPECT_THROW(synthesize(single(0, std::numeric_limits<double>::infinity(), 0), 8, 1e-3), InvalidArgument);
    EXPECT_THROW(synthesize(single(0, 1, 0), 0, 1e-3), InvalidArgument);
    EXPECT_THROW(synthesize(single(0, 1, 0), 8, 0.0), InvalidArgument);
}

TEST(Synthesize, LinearInLineSets)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> f(-900, 900), c(0, 3), a(0, 60), p(-3, 3);
    for (int trial = 0; trial < 20; ++trial) {
        MetaboliteSpec l1{"A", {}}, l2{"B", {}}, both{"AB", {}};
        for (int i = 0; i < 3; ++i) l1.lines.push_back({f(rng), c(rng), a(rng), p(rng)});
        for (int i = 0; i < 2; ++i) l2.lines.push_back({f(rng), c(rng), a(rng), p(rng)});
        both.lines = l1.lines;
        both.lines.insert(both.lines.end(), l2.lines.begin(), l2.lines.end());
        const auto s1 = synthesize(l1, 256, 5e-4), s2 = synthesize(l2, 256, 5e-4), s12 = synthesize(both, 256, 5e-4);
        for (std::size_t j = 0; j < 256; ++j) {
            EXPECT_NEAR(s12.re[j], s1.re[j] + s2.re[j], 1e-14 * (1 + std::abs(s12.re[j])));
            EXPECT_NEAR(s12.im[j], s1.im[j] + s2.im[j], 1e-14 * (1 + std::abs(s12.im[j])));
        }
    }
}

TEST(Synthesize, SingleLineMagnitudeNonIncreasing)
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> f(-900, 900), a(0, 80);
    for (int trial = 0; trial < 20; ++trial) {
        const auto s = synthesize(single(f(rng), 1.5, a(rng)), 2048, 5e-4);
        for (std::size_t j = 1; j < s.size(); ++j) EXPECT_LE(std::abs(s[j]), std::abs(s[j - 1]) * (1 + 1e-14));
    }
}

TEST(BuildBasis, FixtureFileCounts)
{
    const auto basis = build_basis(project_file("data/fixture_basis.json"));
    EXPECT_EQ(basis.size(), 6u);
    EXPECT_EQ(basis.signals().size(), 7u);
    EXPECT_EQ(basis.n_points(), 2048u);
    EXPECT_DOUBLE_EQ(basis.dwell_time_s(), 5e-4);
}

TEST(BuildBasis, FixtureFileMatchesEmbeddedCopy)
{
    const auto bytes = read_file_bytes(project_file("data/fixture_basis.json"));
    EXPECT_EQ(bytes, std::string(fixture_basis_json));
    EXPECT_EQ(default_basis().fingerprint(), sha256(bytes));
}

TEST(BuildBasis, FirstPointIsSumOfLineAmplitudes)
{
    const auto basis = default_basis();
    for (std::size_t k = 0; k < basis.components(); ++k) {
        const auto& spec = k < basis.size() ? basis.metabolites()[k] : basis.background();
        double sum = 0.0;
        for (const auto& l : spec.lines) {
            ASSERT_EQ(l.phase_rad, 0.0);
            sum += l.amplitude;
        }
        EXPECT_NEAR(std::abs(basis.signal(k)[0]), sum, 1e-12);
    }
}

TEST(BuildBasis, CacheCoherence)
{
    const auto basis = default_basis();
    for (std::size_t k = 0; k < basis.size(); ++k) {
        EXPECT_EQ(basis.signal(k), synthesize(basis.metabolites()[k], basis.n_points(), basis.dwell_time_s()));
    }
    EXPECT_EQ(basis.signal(basis.size()), synthesize(basis.background(), basis.n_points(), basis.dwell_time_s()));
}

TEST(BuildBasis, DuplicateNameIsReported)
{
    const std::string doc = R"({"dwell_time_s": 0.0005, "n_points": 64,
        "metabolites": [{"name": "NAA", "lines": [{"f_hz": 1, "amp": 1, "damp_hz": 1, "phase_rad": 0}]},
                        {"name": "NAA", "lines": [{"f_hz": 2, "amp": 1, "damp_hz": 1, "phase_rad": 0}]}],
        "background": {"name": "MM", "lines": [{"f_hz": 0, "amp": 1, "damp_hz": 80, "phase_rad": 0}]}})";
    try {
        parse_basis(doc);
        FAIL() << "duplicate accepted";
    } catch (const InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find("NAA"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("duplicate"), std::string::npos);
    }
}

TEST(BuildBasis, AliasingLineIsReported)
{
    const std::string doc = R"({"dwell_time_s": 0.0005, "n_points": 64,
        "metabolites": [{"name": "Hi", "lines": [{"f_hz": 1000, "amp": 1, "damp_hz": 1, "phase_rad": 0}]}],
        "background": {"name": "MM", "lines": [{"f_hz": 0, "amp": 1, "damp_hz": 80, "phase_rad": 0}]}})";
    try {
        parse_basis(doc);
        FAIL() << "aliasing line accepted";
    } catch (const InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find("Hi"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("aliases"), std::string::npos);
    }
}

TEST(BuildBasis, SchemaViolations)
{
    EXPECT_THROW(parse_basis("not json"), SchemaError);
    EXPECT_THROW(parse_basis(R"({"n_points": 64, "metabolites": [], "background": {}})"), SchemaError);
    try {
        parse_basis(R"({"dwell_time_s": 0.001, "n_points": 64,
            "metabolites": [{"name": "A", "lines": [{"amp": 1, "damp_hz": 1}]}],
            "background": {"name": "MM", "lines": [{"f_hz": 0, "amp": 1, "damp_hz": 80}]}})");
        FAIL();
    } catch (const SchemaError& e) {
        EXPECT_NE(std::string(e.what()).find("metabolites[0].lines[0]"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("f_hz"), std::string::npos);
    }
    // n_points must be a power of two
    EXPECT_THROW(parse_basis(R"({"dwell_time_s": 0.001, "n_points": 100,
            "metabolites": [{"name": "A", "lines": [{"f_hz": 0, "amp": 1, "damp_hz": 1}]}],
            "background": {"name": "MM", "lines": [{"f_hz": 0, "amp": 1, "damp_hz": 80}]}})"),
                 InvalidArgument);
}

TEST(DefaultBasis, FixtureContract)
{
    const auto a = default_basis();
    const auto b = default_basis();
    EXPECT_EQ(a.size(), 6u);
    EXPECT_EQ(a.n_points(), 2048u);
    EXPECT_DOUBLE_EQ(a.dwell_time_s(), 5e-4);
    EXPECT_EQ(a.metabolites(), b.metabolites());
    EXPECT_EQ(a.background(), b.background());
    EXPECT_EQ(a.signals(), b.signals());
    EXPECT_GE(a.background().lines.size(), 3u);
    for (const auto& l : a.background().lines) EXPECT_GE(l.damping_hz, 50.0);
}

TEST(DefaultBasis, HasTwoOverlappingPairs)
{
    // Pairs of metabolites that share at least two line positions within 10 Hz.
    const auto basis = default_basis();
    const auto& mets = basis.metabolites();
    int pairs = 0;
    for (std::size_t i = 0; i < mets.size(); ++i) {
        for (std::size_t j = i + 1; j < mets.size(); ++j) {
            int shared = 0;
            for (const auto& a : mets[i].lines) {
                for (const auto& b : mets[j].lines) {
                    if (std::abs(a.frequency_hz - b.frequency_hz) < 10.0) {
                        ++shared;
                        break;
                    }
                }
            }
            if (shared >= 2) ++pairs;
        }
    }
    EXPECT_GE(pairs, 2);
}

TEST(DefaultBasis, BackgroundIsBroad)
{
    const auto basis = default_basis();
    const double dt = basis.dwell_time_s();
    double widest_line = 0.0;
    for (const auto& m : basis.metabolites()) {
        for (const auto& l : m.lines) {
            widest_line = std::max(widest_line, fwhm_hz(synthesize({"L", {l}}, basis.n_points(), dt), dt));
        }
    }
    const double bg = fwhm_hz(basis.signal(basis.size()), dt);
    EXPECT_GT(widest_line, 0.0);
    EXPECT_GE(bg, 5.0 * widest_line) << "background " << bg << " Hz vs line " << widest_line << " Hz";
}
