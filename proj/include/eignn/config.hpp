#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "eignn/dataset.hpp"
#include "eignn/schedules.hpp"
#include "eignn/training.hpp"

namespace eignn {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Everything a run needs, parsed and validated up front; commands pick the
// sections they use. Field defaults reproduce the reference cophy setup.
struct ExperimentConfig {
    DatasetConfig dataset;
    std::vector<std::size_t> hidden{100, 100, 100, 100};
    TrainingConfig training;
    std::size_t train_subsample = 0;  // 0 = use the stored train split as-is
    double bin_width = 0.1;
    std::vector<std::uint64_t> sweep_seeds{0, 1, 2};
    std::vector<std::size_t> sweep_sizes{1000};
    std::vector<TrainMode> sweep_modes;  // empty = just training.mode
    std::size_t bench_repetitions = 5;
    std::string output_dir;
};

namespace detail {

using json = nlohmann::json;

inline void check_keys(const json& j, std::initializer_list<const char*> allowed,
                       const std::string& where) {
    if (!j.is_object()) throw ConfigError("config: " + where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError("config: unknown key '" + key + "' in " + where);
    }
}

template <typename T>
T get_as(const json& j, const char* key, T fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: bad value for '" + std::string(key) + "' in " + where);
    }
}

inline std::pair<double, double> get_range(const json& j, const char* key,
                                           std::pair<double, double> fallback,
                                           const std::string& where) {
    if (!j.contains(key)) return fallback;
    const json& r = j.at(key);
    if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number())
        throw ConfigError("config: '" + std::string(key) + "' in " + where +
                          " must be [lo, hi]");
    return {r[0].get<double>(), r[1].get<double>()};
}

inline ScheduleSpec parse_schedule(const json& j, const ScheduleSpec& fallback,
                                   const std::string& where) {
    if (j.is_string()) {
        try {
            return schedule_preset(j.get<std::string>());
        } catch (const std::invalid_argument& e) {
            throw ConfigError("config: " + where + ": " + e.what());
        }
    }
    check_keys(j, {"kind", "lambda0", "alpha", "T", "T_a"}, where);
    ScheduleSpec s = fallback;
    if (j.contains("kind")) {
        try {
            s.kind = schedule_kind_from(j.at("kind").get<std::string>());
        } catch (const std::exception&) {
            throw ConfigError("config: bad schedule kind in " + where);
        }
    }
    s.lambda0 = get_as<double>(j, "lambda0", s.lambda0, where);
    s.alpha = get_as<double>(j, "alpha", s.alpha, where);
    s.T = get_as<std::size_t>(j, "T", s.T, where);
    s.T_a = get_as<double>(j, "T_a", s.T_a, where);
    try {
        validate(s);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("config: " + where + ": " + e.what());
    }
    return s;
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const std::string& text) {
    using detail::check_keys;
    using detail::get_as;
    namespace nl = nlohmann;
    nl::json j;
    try {
        j = nl::json::parse(text);
    } catch (const nl::json::exception& e) {
        throw ConfigError(std::string("config: not valid JSON: ") + e.what());
    }
    check_keys(j, {"dataset", "model", "training", "schedules", "eval", "sweep", "bench",
                   "output_dir"},
               "top level");

    ExperimentConfig cfg;
    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        check_keys(d, {"n", "train_size", "test_size", "validation_size", "train_bx", "test_bx",
                       "b_z", "seed"},
                   "dataset");
        cfg.dataset.n = get_as<std::size_t>(d, "n", cfg.dataset.n, "dataset");
        cfg.dataset.train_size =
            get_as<std::size_t>(d, "train_size", cfg.dataset.train_size, "dataset");
        cfg.dataset.test_size =
            get_as<std::size_t>(d, "test_size", cfg.dataset.test_size, "dataset");
        cfg.dataset.validation_size =
            get_as<std::size_t>(d, "validation_size", cfg.dataset.validation_size, "dataset");
        cfg.dataset.train_bx_range =
            detail::get_range(d, "train_bx", cfg.dataset.train_bx_range, "dataset");
        cfg.dataset.test_bx_range =
            detail::get_range(d, "test_bx", cfg.dataset.test_bx_range, "dataset");
        cfg.dataset.b_z = get_as<double>(d, "b_z", cfg.dataset.b_z, "dataset");
        cfg.dataset.seed = get_as<std::uint64_t>(d, "seed", cfg.dataset.seed, "dataset");
        if (cfg.dataset.n < 1 || cfg.dataset.n > 12)
            throw ConfigError("config: dataset.n must lie in [1, 12]");
    }
    if (j.contains("model")) {
        const auto& m = j.at("model");
        check_keys(m, {"hidden", "optimizer"}, "model");
        cfg.hidden = get_as<std::vector<std::size_t>>(m, "hidden", cfg.hidden, "model");
        if (cfg.hidden.empty()) throw ConfigError("config: model.hidden must be non-empty");
        if (m.contains("optimizer")) {
            const auto& o = m.at("optimizer");
            check_keys(o, {"lr", "beta1", "beta2", "eps"}, "model.optimizer");
            auto& opt = cfg.training.optimizer;
            opt.lr = get_as<double>(o, "lr", opt.lr, "model.optimizer");
            opt.beta1 = get_as<double>(o, "beta1", opt.beta1, "model.optimizer");
            opt.beta2 = get_as<double>(o, "beta2", opt.beta2, "model.optimizer");
            opt.eps = get_as<double>(o, "eps", opt.eps, "model.optimizer");
        }
    }
    if (j.contains("training")) {
        const auto& t = j.at("training");
        check_keys(t, {"epochs", "batch_size", "mode", "seed", "snapshot_stride", "direction",
                       "train_loss", "subsample"},
                   "training");
        cfg.training.epochs = get_as<std::size_t>(t, "epochs", cfg.training.epochs, "training");
        cfg.training.batch_size =
            get_as<std::size_t>(t, "batch_size", cfg.training.batch_size, "training");
        if (t.contains("mode")) {
            try {
                cfg.training.mode = mode_from(t.at("mode").get<std::string>());
            } catch (const std::exception&) {
                throw ConfigError("config: bad training.mode");
            }
        }
        cfg.training.seed = get_as<std::uint64_t>(t, "seed", cfg.training.seed, "training");
        cfg.training.snapshot_stride =
            get_as<std::size_t>(t, "snapshot_stride", cfg.training.snapshot_stride, "training");
        if (t.contains("direction")) {
            try {
                cfg.training.direction = direction_from(t.at("direction").get<std::string>());
            } catch (const std::exception&) {
                throw ConfigError("config: bad training.direction");
            }
        }
        if (t.contains("train_loss")) {
            const std::string kind = t.at("train_loss").is_string()
                                         ? t.at("train_loss").get<std::string>()
                                         : std::string();
            if (kind == "mse")
                cfg.training.train_loss = TrainLossKind::mse;
            else if (kind == "l1")
                cfg.training.train_loss = TrainLossKind::l1;
            else
                throw ConfigError("config: training.train_loss must be 'mse' or 'l1'");
        }
        cfg.train_subsample = get_as<std::size_t>(t, "subsample", cfg.train_subsample, "training");
        if (cfg.training.epochs < 1) throw ConfigError("config: training.epochs must be >= 1");
    }
    if (j.contains("schedules")) {
        const auto& s = j.at("schedules");
        check_keys(s, {"lambda_c", "lambda_s"}, "schedules");
        if (s.contains("lambda_c"))
            cfg.training.lambda_c =
                detail::parse_schedule(s.at("lambda_c"), cfg.training.lambda_c, "schedules.lambda_c");
        if (s.contains("lambda_s"))
            cfg.training.lambda_s =
                detail::parse_schedule(s.at("lambda_s"), cfg.training.lambda_s, "schedules.lambda_s");
    }
    if (j.contains("eval")) {
        const auto& e = j.at("eval");
        check_keys(e, {"bin_width"}, "eval");
        cfg.bin_width = get_as<double>(e, "bin_width", cfg.bin_width, "eval");
        if (!(cfg.bin_width > 0)) throw ConfigError("config: eval.bin_width must be positive");
    }
    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        check_keys(s, {"seeds", "train_sizes", "modes"}, "sweep");
        cfg.sweep_seeds = get_as<std::vector<std::uint64_t>>(s, "seeds", cfg.sweep_seeds, "sweep");
        cfg.sweep_sizes =
            get_as<std::vector<std::size_t>>(s, "train_sizes", cfg.sweep_sizes, "sweep");
        if (s.contains("modes")) {
            if (!s.at("modes").is_array()) throw ConfigError("config: sweep.modes must be a list");
            cfg.sweep_modes.clear();
            for (const auto& m : s.at("modes")) {
                try {
                    cfg.sweep_modes.push_back(mode_from(m.get<std::string>()));
                } catch (const std::exception&) {
                    throw ConfigError("config: bad mode in sweep.modes");
                }
            }
        }
        if (cfg.sweep_seeds.empty()) throw ConfigError("config: sweep.seeds must be non-empty");
        if (cfg.sweep_sizes.empty())
            throw ConfigError("config: sweep.train_sizes must be non-empty");
    }
    if (j.contains("bench")) {
        const auto& b = j.at("bench");
        check_keys(b, {"repetitions"}, "bench");
        cfg.bench_repetitions =
            get_as<std::size_t>(b, "repetitions", cfg.bench_repetitions, "bench");
        if (cfg.bench_repetitions == 0)
            throw ConfigError("config: bench.repetitions must be >= 1");
    }
    cfg.output_dir = get_as<std::string>(j, "output_dir", cfg.output_dir, "top level");

    const std::size_t d = std::size_t{1} << cfg.dataset.n;
    cfg.training.dims.clear();
    cfg.training.dims.push_back(d * d);
    for (std::size_t h : cfg.hidden) cfg.training.dims.push_back(h);
    cfg.training.dims.push_back(d + 1);
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open " + path);
    std::ostringstream text;
    text << is.rdbuf();
    return parse_experiment_config(text.str());
}

// Canonical JSON echo of a parsed config; feeds the manifest and the hash, so
// two configs that resolve identically share a hash even if spelled apart.
inline nlohmann::json resolved_config_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["dataset"] = {{"n", cfg.dataset.n},
                    {"train_size", cfg.dataset.train_size},
                    {"test_size", cfg.dataset.test_size},
                    {"validation_size", cfg.dataset.validation_size},
                    {"train_bx", {cfg.dataset.train_bx_range.first, cfg.dataset.train_bx_range.second}},
                    {"test_bx", {cfg.dataset.test_bx_range.first, cfg.dataset.test_bx_range.second}},
                    {"b_z", cfg.dataset.b_z},
                    {"seed", cfg.dataset.seed}};
    j["model"] = {{"hidden", cfg.hidden},
                  {"optimizer",
                   {{"lr", cfg.training.optimizer.lr},
                    {"beta1", cfg.training.optimizer.beta1},
                    {"beta2", cfg.training.optimizer.beta2},
                    {"eps", cfg.training.optimizer.eps}}}};
    j["training"] = {{"epochs", cfg.training.epochs},
                     {"batch_size", cfg.training.batch_size},
                     {"mode", mode_name(cfg.training.mode)},
                     {"seed", cfg.training.seed},
                     {"snapshot_stride", cfg.training.snapshot_stride},
                     {"direction", direction_name(cfg.training.direction)},
                     {"train_loss", cfg.training.train_loss == TrainLossKind::mse ? "mse" : "l1"},
                     {"subsample", cfg.train_subsample}};
    auto schedule_json = [](const ScheduleSpec& s) {
        return nlohmann::json{{"kind", schedule_kind_name(s.kind)},
                              {"lambda0", s.lambda0},
                              {"alpha", s.alpha},
                              {"T", s.T},
                              {"T_a", s.T_a}};
    };
    j["schedules"] = {{"lambda_c", schedule_json(cfg.training.lambda_c)},
                      {"lambda_s", schedule_json(cfg.training.lambda_s)}};
    j["eval"] = {{"bin_width", cfg.bin_width}};
    nlohmann::json modes = nlohmann::json::array();
    for (TrainMode m : cfg.sweep_modes) modes.push_back(mode_name(m));
    j["sweep"] = {{"seeds", cfg.sweep_seeds}, {"train_sizes", cfg.sweep_sizes}, {"modes", modes}};
    j["bench"] = {{"repetitions", cfg.bench_repetitions}};
    j["output_dir"] = cfg.output_dir;
    return j;
}

inline std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[19];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string config_hash(const ExperimentConfig& cfg) {
    return fnv1a_hex(resolved_config_json(cfg).dump());
}

}  // namespace eignn
