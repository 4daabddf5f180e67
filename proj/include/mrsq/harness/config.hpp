#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrsq/datagen.hpp"
#include "mrsq/error.hpp"
#include "mrsq/fitlsq.hpp"
#include "mrsq/nnet/train.hpp"
#include "mrsq/sha256.hpp"

namespace mrsq::harness {

struct FitConfig {
    int max_iter = 500;
    int restarts = 0;
    /// Restarts used on noiseless test sets.
    int noiseless_restarts = 16;
};

struct LearningCurveConfig {
    std::vector<std::size_t> sizes;
    /// 0 = use train.max_iters
    std::size_t max_iters = 0;
    /// Samples scored for the final train/val losses at each size.
    std::size_t eval_samples = 2000;
};

/// Everything one experiment needs. Missing JSON fields take these defaults,
/// and the fully expanded config is written back into the run manifest.
struct ExperimentConfig {
    std::string basis_path;  // empty: built-in fixture
    std::uint64_t seed = 1;
    std::size_t train_size = 20000;
    std::size_t test_size = 2000;
    double train_fraction = 0.8;
    std::vector<double> snr_list{noiseless, 10.0};
    GenConfig generation;  // count/snr/seed are overridden per dataset
    nnet::TrainConfig train;
    FitConfig fit;
    LearningCurveConfig learning_curve{{1000, 4000, 16000}};

    void validate() const
    {
        if (snr_list.empty()) throw SchemaError("config: snr_list must not be empty");
        for (double s : snr_list) {
            if (!(s > 0.0)) throw SchemaError("config: snr values must be positive or \"inf\"");
        }
        if (train_size < 1 || test_size < 1) throw SchemaError("config: dataset sizes must be >= 1");
        if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw SchemaError("config: train_fraction must lie in (0, 1)");
        auto g = generation;
        g.count = 1;
        g.validate();
        train.validate();
        const auto& sizes = learning_curve.sizes;
        for (std::size_t i = 1; i < sizes.size(); ++i) {
            if (sizes[i] == sizes[i - 1]) throw SchemaError("config: duplicated learning-curve size " + std::to_string(sizes[i]));
            if (sizes[i] < sizes[i - 1]) throw SchemaError("config: learning-curve sizes must be ascending");
        }
    }
};

inline nlohmann::json to_json(const ExperimentConfig& c)
{
    nlohmann::json snrs = nlohmann::json::array();
    for (double s : c.snr_list) snrs.push_back(snr_to_json(s));
    auto gen = to_json(c.generation);
    gen.erase("count");
    gen.erase("snr");
    gen.erase("seed");
    return {{"basis_path", c.basis_path},
            {"seed", c.seed},
            {"train_size", c.train_size},
            {"test_size", c.test_size},
            {"train_fraction", c.train_fraction},
            {"snr_list", snrs},
            {"generation", gen},
            {"train", nnet::to_json(c.train)},
            {"fit", {{"max_iter", c.fit.max_iter}, {"restarts", c.fit.restarts}, {"noiseless_restarts", c.fit.noiseless_restarts}}},
            {"learning_curve",
             {{"sizes", c.learning_curve.sizes},
              {"max_iters", c.learning_curve.max_iters},
              {"eval_samples", c.learning_curve.eval_samples}}}};
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j)
{
    static const std::vector<std::string> known{"basis_path", "seed",  "train_size", "test_size",     "train_fraction",
                                                "snr_list",   "generation", "train", "fit", "learning_curve"};
    if (!j.is_object()) throw SchemaError("config: top level must be an object");
    for (const auto& [key, _] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) throw SchemaError("config: unknown field '" + key + "'");
    }
    ExperimentConfig c;
    try {
        c.basis_path = j.value("basis_path", c.basis_path);
        c.seed = j.value("seed", c.seed);
        c.train_size = j.value("train_size", c.train_size);
        c.test_size = j.value("test_size", c.test_size);
        c.train_fraction = j.value("train_fraction", c.train_fraction);
        if (j.contains("snr_list")) {
            if (!j.at("snr_list").is_array()) throw SchemaError("config: snr_list must be an array");
            c.snr_list.clear();
            for (const auto& s : j.at("snr_list")) c.snr_list.push_back(snr_from_json(s));
        }
        if (j.contains("generation")) c.generation = gen_config_from_json(j.at("generation"));
        if (j.contains("train")) c.train = nnet::train_config_from_json(j.at("train"));
        if (j.contains("fit")) {
            const auto& f = j.at("fit");
            c.fit.max_iter = f.value("max_iter", c.fit.max_iter);
            c.fit.restarts = f.value("restarts", c.fit.restarts);
            c.fit.noiseless_restarts = f.value("noiseless_restarts", c.fit.noiseless_restarts);
        }
        if (j.contains("learning_curve")) {
            const auto& l = j.at("learning_curve");
            c.learning_curve.sizes = l.value("sizes", c.learning_curve.sizes);
            c.learning_curve.max_iters = l.value("max_iters", c.learning_curve.max_iters);
            c.learning_curve.eval_samples = l.value("eval_samples", c.learning_curve.eval_samples);
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

inline ExperimentConfig load_experiment_config(const std::string& path)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file_bytes(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("config '" + path + "': " + e.what());
    }
    return experiment_config_from_json(j);
}

inline std::string config_hash(const ExperimentConfig& c) { return to_hex(sha256(to_json(c).dump())); }

/// "inf" or the shortest decimal form of the SNR, used in file names.
inline std::string snr_tag(double snr)
{
    if (std::isinf(snr)) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", snr);
    return buf;
}

} // namespace mrsq::harness
