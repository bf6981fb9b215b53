#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdslab/io.hpp"

namespace sdslab {

// Flat bag of knobs shared by every command. A config file sets any subset,
// flags override, and the resolved struct is echoed into the run directory
// so a run can be reproduced from that file alone. No wall-clock defaults.
struct RunConfig {
    // artifact paths; inputs must exist at dispatch time
    std::string out_dir = "runs";
    std::string database;
    std::string corpus;
    std::string train_corpus;
    std::string val_corpus;
    std::string rater_checkpoint;
    std::string policy_checkpoint;
    std::string curve;

    // seeds
    std::uint64_t seed = 1;
    std::uint64_t db_seed = 7;

    // domain and channel
    int db_size = 150;
    int max_turns = 30;
    double confidence = 0.85;
    double p_unsatisfiable = 0.1;
    double ser = 0.15;
    std::vector<double> ser_levels = {0.15};
    double act_type_fraction = 0.5;

    // corpus generation
    int n_dialogues = 1000;
    bool balance = false;
    std::string policy_source = "oracle";

    // rater
    std::string arch = "rnn";
    std::string head = "binary";
    int hidden_width = 300;
    int num_maps = 50;
    int filter_width = 30;
    int mlp_width = 0;
    double sigma_s = 1.0;
    double learning_rate = 0.01;
    double grad_clip = 5.0;
    int max_epochs = 100;
    int patience = 5;

    // gp policy
    double gp_kernel_scale = 20.0;
    double gp_sigma2 = 5.0;
    double gp_nu = 0.1;
    double gp_gamma = 1.0;
    int gp_max_dictionary = 1000;
    double gp_epsilon = 0.0;

    // online training and evaluation
    std::string reward = "objective";
    int eval_dialogues = 200;
    int ma_window = 100;

    bool operator==(const RunConfig&) const = default;
};

template <class Config, class Fn>
void visit_config_fields(Config& c, Fn&& f) {
    f("out_dir", c.out_dir);
    f("database", c.database);
    f("corpus", c.corpus);
    f("train_corpus", c.train_corpus);
    f("val_corpus", c.val_corpus);
    f("rater_checkpoint", c.rater_checkpoint);
    f("policy_checkpoint", c.policy_checkpoint);
    f("curve", c.curve);
    f("seed", c.seed);
    f("db_seed", c.db_seed);
    f("db_size", c.db_size);
    f("max_turns", c.max_turns);
    f("confidence", c.confidence);
    f("p_unsatisfiable", c.p_unsatisfiable);
    f("ser", c.ser);
    f("ser_levels", c.ser_levels);
    f("act_type_fraction", c.act_type_fraction);
    f("n_dialogues", c.n_dialogues);
    f("balance", c.balance);
    f("policy_source", c.policy_source);
    f("arch", c.arch);
    f("head", c.head);
    f("hidden_width", c.hidden_width);
    f("num_maps", c.num_maps);
    f("filter_width", c.filter_width);
    f("mlp_width", c.mlp_width);
    f("sigma_s", c.sigma_s);
    f("learning_rate", c.learning_rate);
    f("grad_clip", c.grad_clip);
    f("max_epochs", c.max_epochs);
    f("patience", c.patience);
    f("gp_kernel_scale", c.gp_kernel_scale);
    f("gp_sigma2", c.gp_sigma2);
    f("gp_nu", c.gp_nu);
    f("gp_gamma", c.gp_gamma);
    f("gp_max_dictionary", c.gp_max_dictionary);
    f("gp_epsilon", c.gp_epsilon);
    f("reward", c.reward);
    f("eval_dialogues", c.eval_dialogues);
    f("ma_window", c.ma_window);
}

inline void set_config_key(RunConfig& cfg, const std::string& key, const nlohmann::json& value) {
    bool found = false;
    visit_config_fields(cfg, [&](const char* name, auto& field) {
        if (found || key != name) return;
        found = true;
        try {
            field = value.get<std::decay_t<decltype(field)>>();
        } catch (const nlohmann::json::exception&) {
            throw UsageError("bad value for config key \"" + key + "\"");
        }
    });
    if (!found) throw UsageError("unknown config key: \"" + key + "\"");
}

inline nlohmann::json config_to_json(const RunConfig& cfg) {
    nlohmann::json j = nlohmann::json::object();
    visit_config_fields(const_cast<RunConfig&>(cfg),
                        [&](const char* name, auto& field) { j[name] = field; });
    return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw UsageError("config document must be a JSON object");
    RunConfig cfg;
    for (const auto& [key, value] : j.items()) set_config_key(cfg, key, value);
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("cannot parse config " + path + ": " + e.what());
    }
    return config_from_json(j);
}

inline std::string run_dir(const RunConfig& cfg) {
    return cfg.out_dir + "/run-" + std::to_string(cfg.seed);
}

inline void echo_config(const RunConfig& cfg) {
    atomic_write(run_dir(cfg) + "/config.json", config_to_json(cfg).dump(2) + "\n");
}

}  // namespace sdslab
