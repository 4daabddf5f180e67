#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mrsq/error.hpp"
#include "mrsq/fixture_basis.hpp"
#include "mrsq/series.hpp"
#include "mrsq/sha256.hpp"

namespace mrsq {

/// One Lorentzian line of a metabolite pattern. Frequencies are Hz offsets from the carrier.
struct SpectralLine {
    double frequency_hz = 0.0;
    double amplitude = 1.0;
    double damping_hz = 0.0;
    double phase_rad = 0.0;

    friend bool operator==(const SpectralLine&, const SpectralLine&) = default;
};

struct MetaboliteSpec {
    std::string name;
    std::vector<SpectralLine> lines;

    friend bool operator==(const MetaboliteSpec&, const MetaboliteSpec&) = default;
};

/// s[j] = sum_k c_k e^{i phi_k} e^{(2 pi i f_k - alpha_k) j dt}
inline ComplexSeries synthesize(const MetaboliteSpec& spec, std::size_t n_points, double dwell_time_s)
{
    if (n_points < 1) throw InvalidArgument("synthesize: n_points must be >= 1");
    if (!(dwell_time_s > 0.0) || !std::isfinite(dwell_time_s)) {
        throw InvalidArgument("synthesize: dwell_time_s must be positive and finite");
    }
    if (spec.lines.empty()) throw InvalidArgument("synthesize: metabolite '" + spec.name + "' has no lines");
    for (std::size_t k = 0; k < spec.lines.size(); ++k) {
        const auto& l = spec.lines[k];
        if (!std::isfinite(l.frequency_hz) || !std::isfinite(l.amplitude) || !std::isfinite(l.damping_hz)
            || !std::isfinite(l.phase_rad)) {
            throw InvalidArgument("synthesize: metabolite '" + spec.name + "' line " + std::to_string(k)
                                  + " has a non-finite parameter");
        }
    }

    ComplexSeries out(n_points);
    for (const auto& line : spec.lines) {
        const cdouble weight = std::polar(line.amplitude, line.phase_rad);
        const cdouble rate{-line.damping_hz, 2.0 * std::numbers::pi * line.frequency_hz};
        for (std::size_t j = 0; j < n_points; ++j) {
            const double t = static_cast<double>(j) * dwell_time_s;
            const cdouble v = weight * std::exp(rate * t);
            out.re[j] += v.real();
            out.im[j] += v.imag();
        }
    }
    return out;
}

/// Known metabolite patterns plus the macromolecular background, with their rendered signals.
/// Immutable after construction.
class BasisSet {
public:
    BasisSet(std::vector<MetaboliteSpec> metabolites, MetaboliteSpec background, std::size_t n_points,
             double dwell_time_s, Digest fingerprint = {})
        : metabolites_(std::move(metabolites)),
          background_(std::move(background)),
          n_points_(n_points),
          dwell_time_s_(dwell_time_s),
          fingerprint_(fingerprint)
    {
        validate();
        cached_.reserve(metabolites_.size() + 1);
        for (const auto& m : metabolites_) cached_.push_back(synthesize(m, n_points_, dwell_time_s_));
        cached_.push_back(synthesize(background_, n_points_, dwell_time_s_));
    }

    /// Number of metabolites M (the background is not counted).
    std::size_t size() const noexcept { return metabolites_.size(); }
    /// M + 1: metabolites followed by the background.
    std::size_t components() const noexcept { return metabolites_.size() + 1; }
    std::size_t n_points() const noexcept { return n_points_; }
    double dwell_time_s() const noexcept { return dwell_time_s_; }
    const std::vector<MetaboliteSpec>& metabolites() const noexcept { return metabolites_; }
    const MetaboliteSpec& background() const noexcept { return background_; }
    const Digest& fingerprint() const noexcept { return fingerprint_; }

    /// Rendered pattern of component k; k == size() is the background.
    const ComplexSeries& signal(std::size_t k) const { return cached_.at(k); }
    const std::vector<ComplexSeries>& signals() const noexcept { return cached_; }

    std::vector<std::string> names() const
    {
        std::vector<std::string> out;
        for (const auto& m : metabolites_) out.push_back(m.name);
        return out;
    }

    double time(std::size_t j) const noexcept { return static_cast<double>(j) * dwell_time_s_; }

private:
    void validate() const
    {
        if (metabolites_.empty()) throw InvalidArgument("basis: at least one metabolite is required");
        if (!is_power_of_two(n_points_)) {
            throw InvalidArgument("basis: n_points " + std::to_string(n_points_) + " is not a power of two");
        }
        if (!(dwell_time_s_ > 0.0) || !std::isfinite(dwell_time_s_)) {
            throw InvalidArgument("basis: dwell_time_s must be positive");
        }
        const double nyquist = 0.5 / dwell_time_s_;
        std::set<std::string> seen;
        auto check = [&](const MetaboliteSpec& m, const std::string& where) {
            if (m.name.empty()) throw InvalidArgument(where + ": empty name");
            if (m.lines.empty()) throw InvalidArgument(where + " '" + m.name + "': no lines");
            for (std::size_t k = 0; k < m.lines.size(); ++k) {
                const auto& l = m.lines[k];
                const std::string at = where + " '" + m.name + "' line " + std::to_string(k);
                if (!std::isfinite(l.frequency_hz) || !std::isfinite(l.amplitude) || !std::isfinite(l.damping_hz)
                    || !std::isfinite(l.phase_rad)) {
                    throw InvalidArgument(at + ": non-finite parameter");
                }
                if (l.amplitude < 0.0) throw InvalidArgument(at + ": negative amplitude");
                if (l.damping_hz < 0.0) throw InvalidArgument(at + ": negative damping");
                if (std::abs(l.phase_rad) > std::numbers::pi) throw InvalidArgument(at + ": phase outside [-pi, pi]");
                if (!(std::abs(l.frequency_hz) < nyquist)) {
                    throw InvalidArgument(at + ": frequency " + std::to_string(l.frequency_hz)
                                          + " Hz aliases (|f| must be < " + std::to_string(nyquist) + " Hz)");
                }
            }
        };
        for (std::size_t i = 0; i < metabolites_.size(); ++i) {
            const auto& m = metabolites_[i];
            check(m, "metabolites[" + std::to_string(i) + "]");
            if (!seen.insert(m.name).second) {
                throw InvalidArgument("basis: duplicate metabolite name '" + m.name + "'");
            }
        }
        check(background_, "background");
    }

    std::vector<MetaboliteSpec> metabolites_;
    MetaboliteSpec background_;
    std::size_t n_points_;
    double dwell_time_s_;
    Digest fingerprint_;
    std::vector<ComplexSeries> cached_;
};

namespace detail {

inline double require_number(const nlohmann::json& obj, const char* key, const std::string& where)
{
    if (!obj.is_object() || !obj.contains(key)) throw SchemaError(where + ": missing field '" + key + "'");
    const auto& v = obj.at(key);
    if (!v.is_number()) throw SchemaError(where + "." + key + ": expected a number");
    return v.get<double>();
}

inline MetaboliteSpec parse_metabolite(const nlohmann::json& j, const std::string& where)
{
    if (!j.is_object()) throw SchemaError(where + ": expected an object");
    if (!j.contains("name") || !j.at("name").is_string()) throw SchemaError(where + ": missing string field 'name'");
    if (!j.contains("lines") || !j.at("lines").is_array()) throw SchemaError(where + ": missing array field 'lines'");
    MetaboliteSpec m;
    m.name = j.at("name").get<std::string>();
    const auto& lines = j.at("lines");
    for (std::size_t k = 0; k < lines.size(); ++k) {
        const std::string at = where + ".lines[" + std::to_string(k) + "]";
        SpectralLine l;
        l.frequency_hz = require_number(lines[k], "f_hz", at);
        l.amplitude = require_number(lines[k], "amp", at);
        l.damping_hz = require_number(lines[k], "damp_hz", at);
        l.phase_rad = lines[k].contains("phase_rad") ? require_number(lines[k], "phase_rad", at) : 0.0;
        m.lines.push_back(l);
    }
    return m;
}

inline nlohmann::json metabolite_to_json(const MetaboliteSpec& m)
{
    nlohmann::json lines = nlohmann::json::array();
    for (const auto& l : m.lines) {
        lines.push_back({{"f_hz", l.frequency_hz}, {"amp", l.amplitude}, {"damp_hz", l.damping_hz}, {"phase_rad", l.phase_rad}});
    }
    return {{"name", m.name}, {"lines", lines}};
}

} // namespace detail

/// Parses a basis document. The fingerprint is the SHA-256 of `text` exactly as given.
inline BasisSet parse_basis(std::string_view text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(std::string("basis: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw SchemaError("basis: top level must be an object");
    const double dwell = detail::require_number(doc, "dwell_time_s", "basis");
    if (!doc.contains("n_points") || !doc.at("n_points").is_number_integer() || doc.at("n_points").get<long long>() < 1) {
        throw SchemaError("basis.n_points: expected a positive integer");
    }
    const auto n = doc.at("n_points").get<std::size_t>();
    if (!doc.contains("metabolites") || !doc.at("metabolites").is_array()) {
        throw SchemaError("basis: missing array field 'metabolites'");
    }
    if (!doc.contains("background")) throw SchemaError("basis: missing field 'background'");

    std::vector<MetaboliteSpec> mets;
    const auto& arr = doc.at("metabolites");
    for (std::size_t i = 0; i < arr.size(); ++i) {
        mets.push_back(detail::parse_metabolite(arr[i], "metabolites[" + std::to_string(i) + "]"));
    }
    auto bg = detail::parse_metabolite(doc.at("background"), "background");
    return BasisSet(std::move(mets), std::move(bg), n, dwell, sha256(text));
}

/// Reads and parses a basis file; the fingerprint covers the raw file bytes.
inline BasisSet build_basis(const std::string& path) { return parse_basis(read_file_bytes(path)); }

inline nlohmann::json basis_to_json(const BasisSet& basis)
{
    nlohmann::json mets = nlohmann::json::array();
    for (const auto& m : basis.metabolites()) mets.push_back(detail::metabolite_to_json(m));
    return {{"dwell_time_s", basis.dwell_time_s()},
            {"n_points", basis.n_points()},
            {"metabolites", mets},
            {"background", detail::metabolite_to_json(basis.background())}};
}

/// The committed six-metabolite fixture (same bytes as data/fixture_basis.json).
inline BasisSet default_basis() { return parse_basis(fixture_basis_json); }

} // namespace mrsq
