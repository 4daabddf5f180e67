#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mrsq/basis.hpp"
#include "mrsq/binary_io.hpp"
#include "mrsq/error.hpp"
#include "mrsq/rng.hpp"
#include "mrsq/sha256.hpp"
#include "mrsq/sigmodel.hpp"

namespace mrsq {

/// Sampling ranges for synthetic acquisitions. Dampings and shifts are drawn
/// symmetrically in [-max, +max]; the background uses the same ranges.
struct GenConfig {
    std::uint64_t count = 1;
    double amp_min = 0.0;
    double amp_max = 1.0;
    double damp_max_hz = 10.0;
    double shift_max_hz = 10.0;
    double snr = noiseless;
    std::uint64_t seed = 0;
    double bg_scale_min = 0.0;
    double bg_scale_max = 1.0;

    void validate() const
    {
        if (count < 1) throw InvalidArgument("GenConfig: count must be >= 1");
        if (!(amp_min <= amp_max)) throw InvalidArgument("GenConfig: amp_min > amp_max");
        if (!(damp_max_hz >= 0.0)) throw InvalidArgument("GenConfig: damp_max_hz < 0");
        if (!(shift_max_hz >= 0.0)) throw InvalidArgument("GenConfig: shift_max_hz < 0");
        if (!(bg_scale_min <= bg_scale_max)) throw InvalidArgument("GenConfig: bg_scale range is inverted");
        if (!(snr > 0.0)) throw InvalidArgument("GenConfig: snr must be > 0");
    }

    friend bool operator==(const GenConfig&, const GenConfig&) = default;
};

/// JSON has no infinity; an infinite SNR is written as the string "inf".
inline nlohmann::json snr_to_json(double snr)
{
    if (std::isinf(snr)) return "inf";
    return snr;
}

inline double snr_from_json(const nlohmann::json& j)
{
    if (j.is_string()) {
        if (j.get<std::string>() == "inf") return noiseless;
        throw SchemaError("snr: expected a number or \"inf\"");
    }
    if (j.is_null()) return noiseless;
    if (!j.is_number()) throw SchemaError("snr: expected a number or \"inf\"");
    return j.get<double>();
}

inline nlohmann::json to_json(const GenConfig& c)
{
    return {{"count", c.count},
            {"amp_min", c.amp_min},
            {"amp_max", c.amp_max},
            {"damp_max_hz", c.damp_max_hz},
            {"shift_max_hz", c.shift_max_hz},
            {"snr", snr_to_json(c.snr)},
            {"seed", c.seed},
            {"bg_scale_range", {c.bg_scale_min, c.bg_scale_max}}};
}

inline GenConfig gen_config_from_json(const nlohmann::json& j)
{
    GenConfig c;
    try {
        c.count = j.value("count", c.count);
        c.amp_min = j.value("amp_min", c.amp_min);
        c.amp_max = j.value("amp_max", c.amp_max);
        c.damp_max_hz = j.value("damp_max_hz", c.damp_max_hz);
        c.shift_max_hz = j.value("shift_max_hz", c.shift_max_hz);
        if (j.contains("snr")) c.snr = snr_from_json(j.at("snr"));
        c.seed = j.value("seed", c.seed);
        if (j.contains("bg_scale_range")) {
            const auto& r = j.at("bg_scale_range");
            if (!r.is_array() || r.size() != 2) throw SchemaError("bg_scale_range: expected [min, max]");
            c.bg_scale_min = r[0].get<double>();
            c.bg_scale_max = r[1].get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("GenConfig: ") + e.what());
    }
    return c;
}

struct Sample {
    ComplexSeries signal;
    SpectralParams truth;
    std::vector<double> label;

    friend bool operator==(const Sample&, const Sample&) = default;
};

struct Dataset {
    std::vector<Sample> samples;
    Digest basis_fingerprint{};
    GenConfig config;
    std::vector<std::string> names;
    std::string background_name = "MM";
    double dwell_time_s = 0.0;
    /// Generator index of samples[0]; split() keeps the ranges contiguous.
    std::uint64_t index_offset = 0;

    std::size_t size() const noexcept { return samples.size(); }
    std::size_t n_points() const noexcept { return samples.empty() ? 0 : samples.front().signal.size(); }
    std::size_t label_size() const noexcept { return names.size() + 1; }

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Draws one parameter set. Draw order: amplitudes, dampings, shifts, then the
/// background scale, damping and shift.
inline SpectralParams sample_params(const GenConfig& cfg, SeededRng& rng, std::size_t m)
{
    std::uniform_real_distribution<double> amp(cfg.amp_min, cfg.amp_max);
    std::uniform_real_distribution<double> damp(-cfg.damp_max_hz, cfg.damp_max_hz);
    std::uniform_real_distribution<double> shift(-cfg.shift_max_hz, cfg.shift_max_hz);
    std::uniform_real_distribution<double> bg(cfg.bg_scale_min, cfg.bg_scale_max);
    SpectralParams p(m);
    for (auto& a : p.amplitudes) a = amp(rng);
    for (auto& d : p.dampings_hz) d = damp(rng);
    for (auto& s : p.shifts_hz) s = shift(rng);
    p.bg_scale = bg(rng);
    p.bg_damping_hz = damp(rng);
    p.bg_shift_hz = shift(rng);
    return p;
}

namespace detail {

// Out of line: GCC 11.4 at -O3 drops the inlined round trip.
[[gnu::noinline]] inline double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

inline void quantize(SpectralParams& p)
{
    for (std::size_t k = 0; k <= p.size(); ++k) {
        p.amplitude(k) = to_f32(p.amplitude(k));
        p.damping(k) = to_f32(p.damping(k));
        p.shift(k) = to_f32(p.shift(k));
    }
}

inline void quantize(ComplexSeries& s)
{
    for (auto& x : s.re) x = to_f32(x);
    for (auto& x : s.im) x = to_f32(x);
}

/// Parameters of generator index `index`, quantized to float32 like the stored file.
inline SpectralParams truth_for_index(const GenConfig& cfg, std::size_t m, std::uint64_t index, SeededRng& rng)
{
    rng = make_stream(cfg.seed, index);
    auto p = sample_params(cfg, rng, m);
    quantize(p);
    return p;
}

template <class F>
void parallel_for(std::size_t n, unsigned workers, F&& body)
{
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

} // namespace detail

/// Renders one sample of generator index `index`: sample -> model -> noise -> float32.
inline Sample generate_sample(const BasisSet& basis, const GenConfig& cfg, std::uint64_t index)
{
    SeededRng rng;
    Sample s;
    s.truth = detail::truth_for_index(cfg, basis.size(), index, rng);
    s.signal = add_complex_noise(evaluate_model(basis, s.truth), cfg.snr, rng);
    detail::quantize(s.signal);
    s.label = s.truth.label();
    return s;
}

/// Sample i depends only on (cfg.seed, i), so the worker count never changes the output.
inline Dataset generate(const BasisSet& basis, const GenConfig& cfg, unsigned workers = 1)
{
    cfg.validate();
    Dataset ds;
    ds.basis_fingerprint = basis.fingerprint();
    ds.config = cfg;
    ds.names = basis.names();
    ds.background_name = basis.background().name;
    ds.dwell_time_s = basis.dwell_time_s();
    ds.samples.resize(cfg.count);
    detail::parallel_for(cfg.count, workers, [&](std::size_t i) { ds.samples[i] = generate_sample(basis, cfg, i); });
    return ds;
}

/// First floor(fraction * count) samples train, the rest validate. No shuffling.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction)
{
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw InvalidArgument("split: train_fraction must lie in (0, 1)");
    }
    const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(ds.size())));
    Dataset train = ds;
    Dataset val = ds;
    train.samples.assign(ds.samples.begin(), ds.samples.begin() + static_cast<std::ptrdiff_t>(n_train));
    val.samples.assign(ds.samples.begin() + static_cast<std::ptrdiff_t>(n_train), ds.samples.end());
    val.index_offset = ds.index_offset + n_train;
    return {std::move(train), std::move(val)};
}

/// Leading `count` samples (nested subsets for learning curves).
inline Dataset head(const Dataset& ds, std::size_t count)
{
    Dataset out = ds;
    out.samples.resize(std::min(count, ds.size()));
    return out;
}

// ---------------------------------------------------------------------------
// Binary file format (little-endian):
//   "MRSD" | u32 version | u32 M | u32 n_points | u64 count | f64 dwell | f64 snr
//   | u64 seed | 32-byte basis SHA-256 | u32 json length | json
//   | count x ( n_points x {f32 re, f32 im} | (M+1) x f32 label )
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t dataset_version = 1;

inline std::string serialize(const Dataset& ds)
{
    const std::size_t m = ds.names.size();
    const std::size_t n = ds.n_points();
    detail::ByteWriter w;
    w.put_bytes("MRSD", 4);
    w.put<std::uint32_t>(dataset_version);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(m));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(n));
    w.put<std::uint64_t>(ds.size());
    w.put<double>(ds.dwell_time_s);
    w.put<double>(ds.config.snr);
    w.put<std::uint64_t>(ds.config.seed);
    w.put_bytes(ds.basis_fingerprint.data(), ds.basis_fingerprint.size());
    const nlohmann::json meta{{"config", to_json(ds.config)},
                              {"metabolites", ds.names},
                              {"background", ds.background_name},
                              {"index_offset", ds.index_offset}};
    const std::string js = meta.dump();
    w.put<std::uint32_t>(static_cast<std::uint32_t>(js.size()));
    w.put_bytes(js.data(), js.size());
    for (const auto& s : ds.samples) {
        if (s.signal.size() != n || s.label.size() != m + 1) throw InvalidArgument("save: inconsistent sample shape");
        for (std::size_t j = 0; j < n; ++j) {
            w.put<float>(static_cast<float>(s.signal.re[j]));
            w.put<float>(static_cast<float>(s.signal.im[j]));
        }
        for (double v : s.label) w.put<float>(static_cast<float>(v));
    }
    return w.bytes();
}

inline Dataset deserialize(const std::string& bytes, const std::string& what = "dataset")
{
    if (bytes.size() < 4 || bytes.compare(0, 4, "MRSD") != 0) {
        throw BadMagicError(what + ": not a dataset file (bad magic)");
    }
    detail::ByteReader r(bytes, what);
    r.get_bytes(4);
    const auto version = r.get<std::uint32_t>();
    if (version != dataset_version) {
        throw VersionMismatchError(what + ": unsupported dataset version " + std::to_string(version));
    }
    const auto m = r.get<std::uint32_t>();
    const auto n = r.get<std::uint32_t>();
    const auto count = r.get<std::uint64_t>();
    const auto dwell = r.get<double>();
    const auto snr = r.get<double>();
    const auto seed = r.get<std::uint64_t>();
    Dataset ds;
    ds.dwell_time_s = dwell;
    const auto fp = r.get_bytes(32);
    std::memcpy(ds.basis_fingerprint.data(), fp.data(), 32);
    if (std::all_of(ds.basis_fingerprint.begin(), ds.basis_fingerprint.end(), [](auto b) { return b == 0; })) {
        throw MissingFingerprintError(what + ": basis fingerprint is absent");
    }
    const auto json_len = r.get<std::uint32_t>();
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(r.get_bytes(json_len));
        ds.config = gen_config_from_json(meta.at("config"));
        ds.names = meta.at("metabolites").get<std::vector<std::string>>();
        ds.background_name = meta.value("background", std::string("MM"));
        ds.index_offset = meta.value("index_offset", std::uint64_t{0});
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(what + ": corrupt metadata: " + e.what());
    }
    if (ds.names.size() != m) throw FormatError(what + ": metabolite count disagrees with header");
    if (ds.config.seed != seed || !(ds.config.snr == snr || (std::isnan(snr) && std::isnan(ds.config.snr)))) {
        throw FormatError(what + ": header and metadata disagree");
    }

    const std::uint64_t record = (2ull * n + m + 1) * sizeof(float);
    if (count > r.remaining() / std::max<std::uint64_t>(record, 1)) {
        throw TruncatedFileError(what + ": header promises " + std::to_string(count) + " samples but the payload holds "
                                 + std::to_string(r.remaining() / std::max<std::uint64_t>(record, 1)));
    }
    ds.samples.resize(count);
    SeededRng rng;
    for (std::uint64_t i = 0; i < count; ++i) {
        auto& s = ds.samples[i];
        s.signal = ComplexSeries(n);
        for (std::size_t j = 0; j < n; ++j) {
            s.signal.re[j] = r.get<float>();
            s.signal.im[j] = r.get<float>();
        }
        s.label.resize(m + 1);
        for (auto& v : s.label) v = r.get<float>();
        s.truth = detail::truth_for_index(ds.config, m, ds.index_offset + i, rng);
        if (s.truth.label() != s.label) {
            throw FormatError(what + ": labels of sample " + std::to_string(i) + " do not match the recorded generator");
        }
    }
    return ds;
}

inline void save(const Dataset& ds, const std::string& path) { detail::write_file(path, serialize(ds)); }

inline Dataset load(const std::string& path) { return deserialize(read_file_bytes(path), path); }

} // namespace mrsq
