#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrsq/basis.hpp"
#include "mrsq/datagen.hpp"
#include "mrsq/fitlsq.hpp"
#include "mrsq/harness/config.hpp"
#include "mrsq/metrics.hpp"
#include "mrsq/nnet/network.hpp"
#include "mrsq/nnet/train.hpp"
#include "mrsq/rng.hpp"
#include "mrsq/sha256.hpp"

namespace mrsq::harness {

inline constexpr const char* tool_version = "0.1.0";
inline constexpr const char* fit_method_name = "VARPRO-LM";
inline constexpr const char* cnn_method_name = "CNN-CReLU";

/// Output directory layout plus run bookkeeping shared by all commands.
class Experiment {
public:
    Experiment(ExperimentConfig cfg, std::filesystem::path out, unsigned workers = 1, std::ostream* log = &std::cerr)
        : cfg_(std::move(cfg)), out_(std::move(out)), workers_(std::max(1u, workers)), log_(log)
    {
        cfg_.validate();
        for (const char* sub : {"data", "models", "curves", "fits", "reports"}) std::filesystem::create_directories(out_ / sub);
    }

    const ExperimentConfig& config() const noexcept { return cfg_; }
    const std::filesystem::path& out() const noexcept { return out_; }

    std::filesystem::path basis_file() const { return out_ / "basis.json"; }
    std::filesystem::path train_data(double snr) const { return out_ / "data" / ("train_snr" + snr_tag(snr) + ".mrsd"); }
    std::filesystem::path test_data(double snr) const { return out_ / "data" / ("test_snr" + snr_tag(snr) + ".mrsd"); }
    std::filesystem::path weights(double snr) const { return out_ / "models" / ("cnn_snr" + snr_tag(snr) + ".mrsw"); }
    std::filesystem::path train_curve(double snr) const { return out_ / "curves" / ("train_snr" + snr_tag(snr) + ".csv"); }
    std::filesystem::path fits(double snr) const { return out_ / "fits" / ("varpro_snr" + snr_tag(snr) + ".csv"); }
    std::filesystem::path report(double snr) const { return out_ / "reports" / ("table_snr" + snr_tag(snr) + ".csv"); }
    std::filesystem::path scatter(double snr) const { return out_ / "reports" / ("scatter_snr" + snr_tag(snr) + ".csv"); }
    std::filesystem::path learning_curve(double snr) const
    {
        return out_ / "reports" / ("learning_curve_snr" + snr_tag(snr) + ".csv");
    }
    std::filesystem::path manifest_file() const { return out_ / "manifest.json"; }

    /// Number of stages skipped because their stamp matched (for idempotence checks).
    std::size_t skipped() const noexcept { return skipped_; }
    std::size_t executed() const noexcept { return executed_; }

    // --- seeds -------------------------------------------------------------
    std::uint64_t data_seed(double snr, bool test) const { return mix_seed(cfg_.seed, tag(snr) * 8 + (test ? 1 : 0)); }
    std::uint64_t init_seed(double snr) const { return mix_seed(cfg_.seed, tag(snr) * 8 + 2); }
    std::uint64_t shuffle_seed(double snr) const { return mix_seed(cfg_.seed, tag(snr) * 8 + 3); }
    std::uint64_t restart_seed(double snr) const { return mix_seed(cfg_.seed, tag(snr) * 8 + 4); }

    GenConfig gen_config(double snr, bool test) const
    {
        GenConfig g = cfg_.generation;
        g.count = test ? cfg_.test_size : cfg_.train_size;
        g.snr = snr;
        g.seed = data_seed(snr, test);
        return g;
    }

    nnet::TrainConfig train_config(double snr) const
    {
        auto t = cfg_.train;
        t.seed = shuffle_seed(snr);
        return t;
    }

    FitOptions fit_options(double snr) const
    {
        FitOptions o;
        o.damp_max_hz = cfg_.generation.damp_max_hz;
        o.shift_max_hz = cfg_.generation.shift_max_hz;
        o.max_iter = cfg_.fit.max_iter;
        o.restarts = std::isinf(snr) ? cfg_.fit.noiseless_restarts : cfg_.fit.restarts;
        o.restart_seed = restart_seed(snr);
        return o;
    }

    // --- commands ------------------------------------------------------------

    void gen_basis()
    {
        stage("gen-basis", [&] {
            const std::string bytes = basis_source_bytes();
            run_stage(basis_file(), to_hex(sha256(bytes)), [&] {
                parse_basis(bytes);
                mrsq::detail::write_file(basis_file().string(), bytes);
            });
        });
    }

    void gen_data()
    {
        stage("gen-data", [&] {
            const auto basis = load_basis();
            for (double snr : cfg_.snr_list) {
                for (bool test : {false, true}) {
                    const auto gc = gen_config(snr, test);
                    const auto path = test ? test_data(snr) : train_data(snr);
                    run_stage(path, hash_of({"gen-data", to_json(gc).dump(), to_hex(basis.fingerprint())}), [&] {
                        save(generate(basis, gc, workers_), path.string());
                    });
                }
            }
        });
    }

    void train()
    {
        stage("train", [&] {
            const auto basis = load_basis();
            for (double snr : cfg_.snr_list) {
                const auto data_path = require(train_data(snr), "gen-data");
                const auto tc = train_config(snr);
                const auto inputs = hash_of({"train", nnet::to_json(tc).dump(), std::to_string(init_seed(snr)),
                                             std::to_string(cfg_.train_fraction), file_hash(data_path)});
                run_stage(weights(snr), inputs, [&] {
                    const auto ds = load_checked(data_path, basis);
                    auto [tr, va] = split(ds, cfg_.train_fraction);
                    nnet::Network<float> net(nnet::default_network_spec(basis.n_points(), basis.components()));
                    net.init(init_seed(snr));
                    const auto res = nnet::train(net, tr, va, tc, [&](const nnet::CurvePoint& p) {
                        if (log_) *log_ << "[train snr=" << snr_tag(snr) << "] iter " << p.iteration << " train " << p.train_loss
                                        << " val " << p.val_loss << "\n";
                    });
                    write_text(train_curve(snr), curve_csv(res.curve));
                    nnet::save_weights(net, weights(snr).string());
                });
            }
        });
    }

    void fit()
    {
        stage("fit", [&] {
            const auto basis = load_basis();
            for (double snr : cfg_.snr_list) {
                const auto data_path = require(test_data(snr), "gen-data");
                const auto opts = fit_options(snr);
                const auto inputs = hash_of({"fit", std::to_string(opts.max_iter), std::to_string(opts.restarts),
                                             std::to_string(opts.restart_seed), std::to_string(opts.damp_max_hz),
                                             std::to_string(opts.shift_max_hz), file_hash(data_path)});
                run_stage(fits(snr), inputs, [&] {
                    const auto ds = load_checked(data_path, basis);
                    std::vector<FitResult> results(ds.size());
                    mrsq::detail::parallel_for(ds.size(), workers_, [&](std::size_t i) {
                        results[i] = fit_multistart(basis, ds.samples[i].signal, opts);
                    });
                    write_text(fits(snr), fits_csv(ds, results));
                });
            }
        });
    }

    void eval()
    {
        stage("eval", [&] {
            const auto basis = load_basis();
            for (double snr : cfg_.snr_list) {
                const auto data_path = require(test_data(snr), "gen-data");
                const auto fit_path = require(fits(snr), "fit");
                const auto w_path = require(weights(snr), "train");
                const auto inputs = hash_of({"eval", file_hash(data_path), file_hash(fit_path), file_hash(w_path)});
                run_stage(report(snr), inputs, [&] {
                    const auto ds = load_checked(data_path, basis);
                    auto net = nnet::load_weights<float>(w_path.string());
                    const auto cnn = nnet::predict_all(net, ds);
                    const auto varpro = read_fit_estimates(fit_path, ds.label_size());
                    if (varpro.size() != ds.size()) throw Error("eval: fit file does not cover the test set");
                    std::vector<std::vector<double>> truth;
                    for (const auto& s : ds.samples) truth.push_back(s.label);
                    auto outputs = ds.names;
                    outputs.push_back(ds.background_name);
                    const auto rep = make_report(outputs, {fit_method_name, cnn_method_name}, truth, {varpro, cnn});
                    write_text(scatter(snr), scatter_csv(outputs, truth, {fit_method_name, cnn_method_name}, {varpro, cnn}));
                    write_text(report(snr), to_csv(rep));
                });
            }
        });
    }

    void learning_curves()
    {
        stage("learning-curve", [&] {
            const auto basis = load_basis();
            const auto& lc = cfg_.learning_curve;
            if (lc.sizes.empty()) throw SchemaError("learning-curve: no sizes configured");
            for (double snr : cfg_.snr_list) {
                const auto data_path = require(train_data(snr), "gen-data");
                auto tc = train_config(snr);
                if (lc.max_iters) tc.max_iters = lc.max_iters;
                tc.eval_every = 0;
                const auto inputs = hash_of({"learning-curve", nnet::to_json(tc).dump(), nlohmann::json(lc.sizes).dump(),
                                             std::to_string(lc.eval_samples), std::to_string(init_seed(snr)),
                                             file_hash(data_path)});
                run_stage(learning_curve(snr), inputs, [&] {
                    const auto ds = load_checked(data_path, basis);
                    auto [tr, va] = split(ds, cfg_.train_fraction);
                    if (lc.sizes.back() > tr.size()) {
                        throw SchemaError("learning-curve: size " + std::to_string(lc.sizes.back()) + " exceeds the "
                                          + std::to_string(tr.size()) + " available training samples");
                    }
                    std::string csv = "size,train_loss,val_loss,gap,status\n";
                    for (std::size_t size : lc.sizes) {
                        const auto subset = head(tr, size);
                        nnet::Network<float> net(nnet::default_network_spec(basis.n_points(), basis.components()));
                        net.init(init_seed(snr));
                        try {
                            nnet::train(net, subset, Dataset{}, tc);
                            const double tl = nnet::evaluate_loss(net, subset, lc.eval_samples);
                            const double vl = nnet::evaluate_loss(net, va, lc.eval_samples);
                            csv += std::to_string(size) + "," + format_fixed(tl, 8) + "," + format_fixed(vl, 8) + ","
                                   + format_fixed(vl - tl, 8) + ",ok\n";
                            if (log_) *log_ << "[learning-curve snr=" << snr_tag(snr) << "] size " << size << " train " << tl
                                            << " val " << vl << "\n";
                        } catch (const TrainingDivergedError& e) {
                            csv += std::to_string(size) + ",,,,diverged\n";
                            if (log_) *log_ << "[learning-curve] size " << size << " diverged: " << e.what() << "\n";
                        }
                    }
                    write_text(learning_curve(snr), csv);
                });
            }
        });
    }

    // --- helpers (public for tests) ---------------------------------------------

    BasisSet load_basis() const
    {
        require(basis_file(), "gen-basis");
        return build_basis(basis_file().string());
    }

    static std::string curve_csv(const std::vector<nnet::CurvePoint>& curve)
    {
        std::string s = "iteration,train_loss,val_loss\n";
        for (const auto& p : curve) {
            s += std::to_string(p.iteration) + "," + format_fixed(p.train_loss, 8) + ","
                 + (std::isnan(p.val_loss) ? std::string() : format_fixed(p.val_loss, 8)) + "\n";
        }
        return s;
    }

    static std::vector<std::vector<double>> read_fit_estimates(const std::filesystem::path& path, std::size_t outputs)
    {
        std::ifstream in(path);
        if (!in) throw Error("cannot open '" + path.string() + "'");
        std::string line;
        std::getline(in, line);
        std::vector<std::vector<double>> rows;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string cell;
            std::getline(ss, cell, ',');
            std::vector<double> row;
            for (std::size_t k = 0; k < outputs; ++k) {
                if (!std::getline(ss, cell, ',')) throw FormatError("fit file '" + path.string() + "': short row");
                row.push_back(std::stod(cell));
            }
            rows.push_back(std::move(row));
        }
        return rows;
    }

private:
    static std::uint64_t tag(double snr)
    {
        return std::isinf(snr) ? 0xffffull : static_cast<std::uint64_t>(std::llround(snr * 1000.0)) + 1;
    }

    std::string basis_source_bytes() const
    {
        if (cfg_.basis_path.empty()) return std::string(fixture_basis_json);
        return read_file_bytes(cfg_.basis_path);
    }

    static std::string hash_of(const std::vector<std::string>& parts)
    {
        std::string joined;
        for (const auto& p : parts) joined += p + '\x1f';
        return to_hex(sha256(joined));
    }

    static std::string file_hash(const std::filesystem::path& p) { return to_hex(sha256_file(p.string())); }

    static std::filesystem::path require(const std::filesystem::path& p, const char* producer)
    {
        if (!std::filesystem::exists(p)) {
            throw Error("missing upstream artifact '" + p.string() + "' (run " + producer + " first)");
        }
        return p;
    }

    static Dataset load_checked(const std::filesystem::path& p, const BasisSet& basis)
    {
        auto ds = load(p.string());
        if (ds.basis_fingerprint != basis.fingerprint()) {
            throw Error("fingerprint mismatch: '" + p.string() + "' was generated from basis " + to_hex(ds.basis_fingerprint)
                        + " but the current basis is " + to_hex(basis.fingerprint()));
        }
        return ds;
    }

    static void write_text(const std::filesystem::path& p, const std::string& text)
    {
        mrsq::detail::write_file(p.string(), text);
    }

    /// Runs `produce` unless `output` exists and its stamp records the same input hash.
    void run_stage(const std::filesystem::path& output, const std::string& input_hash, const std::function<void()>& produce)
    {
        const auto stamp = std::filesystem::path(output.string() + ".stamp");
        if (std::filesystem::exists(output) && std::filesystem::exists(stamp)) {
            try {
                const auto j = nlohmann::json::parse(read_file_bytes(stamp.string()));
                if (j.value("input_hash", std::string()) == input_hash) {
                    ++skipped_;
                    if (log_) *log_ << "skip " << output.string() << " (up to date)\n";
                    return;
                }
            } catch (const nlohmann::json::exception&) {
            }
        }
        produce();
        ++executed_;
        const nlohmann::json j{{"input_hash", input_hash},
                               {"config_hash", config_hash(cfg_)},
                               {"basis_fingerprint", basis_fingerprint_hex()},
                               {"output_sha256", file_hash(output)}};
        write_text(stamp, j.dump(2) + "\n");
    }

    std::string basis_fingerprint_hex() const
    {
        return std::filesystem::exists(basis_file()) ? file_hash(basis_file()) : std::string();
    }

    void stage(const std::string& name, const std::function<void()>& body)
    {
        write_manifest(name, std::nullopt);
        const auto t0 = std::chrono::steady_clock::now();
        body();
        write_manifest(name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }

    void write_manifest(const std::string& stage_name, std::optional<double> seconds) const
    {
        nlohmann::json m = nlohmann::json::object();
        if (std::filesystem::exists(manifest_file())) {
            try {
                m = nlohmann::json::parse(read_file_bytes(manifest_file().string()));
            } catch (const nlohmann::json::exception&) {
                m = nlohmann::json::object();
            }
        }
        m["tool_version"] = tool_version;
        m["config_hash"] = config_hash(cfg_);
        m["config"] = to_json(cfg_);
        m["basis_fingerprint"] = basis_fingerprint_hex();
        if (!m.contains("timings_s")) m["timings_s"] = nlohmann::json::object();
        if (seconds) m["timings_s"][stage_name] = *seconds;
        write_text(manifest_file(), m.dump(2) + "\n");
    }

    static std::string fits_csv(const Dataset& ds, const std::vector<FitResult>& results)
    {
        std::string s = "sample";
        for (const auto& n : ds.names) s += "," + n;
        s += "," + ds.background_name + ",residual_norm,iterations,converged,termination\n";
        char buf[64];
        for (std::size_t i = 0; i < results.size(); ++i) {
            const auto& r = results[i];
            s += std::to_string(i);
            for (double v : r.params.label()) {
                std::snprintf(buf, sizeof buf, ",%.17g", v);
                s += buf;
            }
            std::snprintf(buf, sizeof buf, ",%.17g", r.residual_norm);
            s += buf;
            s += "," + std::to_string(r.iterations) + "," + (r.converged ? "1" : "0") + "," + to_string(r.termination) + "\n";
        }
        return s;
    }

    static std::string scatter_csv(const std::vector<std::string>& outputs, const std::vector<std::vector<double>>& truth,
                                   const std::vector<std::string>& methods,
                                   const std::vector<std::vector<std::vector<double>>>& estimates)
    {
        std::string s = "method,output,sample,truth,estimate\n";
        char buf[96];
        for (std::size_t m = 0; m < methods.size(); ++m) {
            for (std::size_t o = 0; o < outputs.size(); ++o) {
                for (std::size_t i = 0; i < truth.size(); ++i) {
                    std::snprintf(buf, sizeof buf, ",%zu,%.9g,%.9g\n", i, truth[i][o], estimates[m][i][o]);
                    s += methods[m] + "," + outputs[o] + buf;
                }
            }
        }
        return s;
    }

    ExperimentConfig cfg_;
    std::filesystem::path out_;
    unsigned workers_;
    std::ostream* log_;
    std::size_t skipped_ = 0;
    std::size_t executed_ = 0;
};

} // namespace mrsq::harness
