#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "mrsq/datagen.hpp"

using namespace mrsq;

namespace {

GenConfig small_config(std::uint64_t count, double snr = noiseless, std::uint64_t seed = 11)
{
    GenConfig c;
    c.count = count;
    c.snr = snr;
    c.seed = seed;
    return c;
}

std::string temp_path(const std::string& name)
{
    return (std::filesystem::temp_directory_path() / ("mrsq_test_" + name)).string();
}

} // namespace

TEST(SampleParams, DegenerateRangeIsConstant)
{
    GenConfig c;
    c.amp_min = c.amp_max = 0.4;
    c.bg_scale_min = c.bg_scale_max = 0.25;
    c.damp_max_hz = c.shift_max_hz = 0.0;
    SeededRng rng(1);
    for (int i = 0; i < 50; ++i) {
        const auto p = sample_params(c, rng, 6);
        for (double a : p.amplitudes) EXPECT_EQ(a, 0.4);
        for (double d : p.dampings_hz) EXPECT_EQ(d, 0.0);
        for (double s : p.shifts_hz) EXPECT_EQ(s, 0.0);
        EXPECT_EQ(p.bg_scale, 0.25);
    }
}

TEST(SampleParams, RangesAndMean)
{
    GenConfig c;
    SeededRng rng(2);
    double sum = 0.0;
    std::size_t count = 0;
    for (int i = 0; i < 20000; ++i) {
        const auto p = sample_params(c, rng, 6);
        for (std::size_t k = 0; k < 6; ++k) {
            EXPECT_GE(p.amplitudes[k], 0.0);
            EXPECT_LE(p.amplitudes[k], 1.0);
            EXPECT_LE(std::abs(p.dampings_hz[k]), 10.0);
            EXPECT_LE(std::abs(p.shifts_hz[k]), 10.0);
            sum += p.amplitudes[k];
            ++count;
        }
    }
    EXPECT_NEAR(sum / static_cast<double>(count), 0.5, 0.005);
}

TEST(Generate, Deterministic)
{
    const auto basis = default_basis();
    const auto a = generate(basis, small_config(6, 10.0));
    const auto b = generate(basis, small_config(6, 10.0));
    EXPECT_EQ(a, b);
    EXPECT_EQ(serialize(a), serialize(b));
    const auto c = generate(basis, small_config(6, 10.0, 12));
    EXPECT_NE(a.samples[0].label, c.samples[0].label);
}

TEST(Generate, WorkerCountDoesNotChangeOutput)
{
    const auto basis = default_basis();
    EXPECT_EQ(serialize(generate(basis, small_config(9, 10.0), 1)), serialize(generate(basis, small_config(9, 10.0), 4)));
}

TEST(Generate, NoiselessSamplesEqualQuantizedModel)
{
    const auto basis = default_basis();
    const auto ds = generate(basis, small_config(3));
    ASSERT_EQ(ds.size(), 3u);
    for (const auto& s : ds.samples) {
        auto expect = evaluate_model(basis, s.truth);
        detail::quantize(expect);
        EXPECT_EQ(s.signal, expect);
        EXPECT_EQ(s.label, s.truth.label());
        EXPECT_EQ(s.label.size(), 7u);
    }
}

TEST(Generate, NoiseFollowsSnrRule)
{
    const auto basis = default_basis();
    const double snr = 10.0;
    const auto ds = generate(basis, small_config(200, snr));
    double ratio_sum = 0.0;
    for (const auto& s : ds.samples) {
        const auto clean = evaluate_model(basis, s.truth);
        double sq = 0.0;
        for (std::size_t j = 0; j < clean.size(); ++j) {
            sq += std::pow(s.signal.re[j] - clean.re[j], 2) + std::pow(s.signal.im[j] - clean.im[j], 2);
        }
        const double sigma_hat = std::sqrt(sq / (2.0 * static_cast<double>(clean.size())));
        ratio_sum += sigma_hat / (std::abs(clean[0]) / snr);
    }
    EXPECT_NEAR(ratio_sum / 200.0, 1.0, 0.05);
}

TEST(Split, Sizes)
{
    const auto basis = default_basis();
    const auto ds = generate(basis, small_config(10));
    const auto [train, val] = split(ds, 0.8);
    EXPECT_EQ(train.size(), 8u);
    EXPECT_EQ(val.size(), 2u);
    EXPECT_EQ(val.index_offset, 8u);
    EXPECT_EQ(val.samples[0], ds.samples[8]);

    const auto one = generate(basis, small_config(1));
    const auto [t1, v1] = split(one, 0.8);
    EXPECT_EQ(t1.size(), 0u);
    EXPECT_EQ(v1.size(), 1u);
    EXPECT_THROW(split(ds, 0.0), InvalidArgument);
    EXPECT_THROW(split(ds, 1.0), InvalidArgument);
}

TEST(Config, Validation)
{
    GenConfig c;
    c.count = 0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = {};
    c.amp_min = 2.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = {};
    c.snr = -1.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Config, JsonRoundTrip)
{
    auto c = small_config(5, 10.0, 99);
    EXPECT_EQ(gen_config_from_json(to_json(c)), c);
    c.snr = noiseless;
    EXPECT_EQ(to_json(c).at("snr"), "inf");
    EXPECT_EQ(gen_config_from_json(to_json(c)), c);
}

TEST(DatasetFile, RoundTrip)
{
    const auto basis = default_basis();
    const auto ds = generate(basis, small_config(4, 10.0));
    const auto path = temp_path("roundtrip.mrsd");
    save(ds, path);
    const auto back = load(path);
    EXPECT_EQ(back, ds);
    EXPECT_EQ(back.basis_fingerprint, basis.fingerprint());
    std::filesystem::remove(path);
}

TEST(DatasetFile, SplitRoundTripKeepsIndexOffset)
{
    const auto ds = generate(default_basis(), small_config(5, 10.0));
    const auto val = split(ds, 0.6).second;
    EXPECT_EQ(deserialize(serialize(val)), val);
}

TEST(DatasetFile, BadMagic)
{
    auto bytes = serialize(generate(default_basis(), small_config(1)));
    bytes[0] = 'X';
    try {
        deserialize(bytes);
        FAIL();
    } catch (const BadMagicError& e) {
        EXPECT_NE(std::string(e.what()).find("not a dataset file"), std::string::npos);
    }
}

TEST(DatasetFile, VersionMismatch)
{
    auto bytes = serialize(generate(default_basis(), small_config(1)));
    bytes[4] = 2;
    EXPECT_THROW(deserialize(bytes), VersionMismatchError);
}

TEST(DatasetFile, Truncated)
{
    const auto bytes = serialize(generate(default_basis(), small_config(3)));
    EXPECT_THROW(deserialize(bytes.substr(0, bytes.size() - 100)), TruncatedFileError);
    EXPECT_THROW(deserialize(bytes.substr(0, 30)), TruncatedFileError);
}

TEST(DatasetFile, MissingFingerprint)
{
    auto ds = generate(default_basis(), small_config(1));
    ds.basis_fingerprint = {};
    EXPECT_THROW(deserialize(serialize(ds)), MissingFingerprintError);
}

TEST(DatasetFile, TamperedLabelDetected)
{
    auto ds = generate(default_basis(), small_config(2));
    ds.samples[1].label[0] += 0.25;
    EXPECT_THROW(deserialize(serialize(ds)), FormatError);
}
