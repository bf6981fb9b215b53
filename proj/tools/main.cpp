#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "sdslab/chat.hpp"
#include "sdslab/config.hpp"
#include "sdslab/io.hpp"

namespace sdslab {
namespace {

// string fields take the flag text verbatim; everything else goes through
// the JSON reader so numbers, bools and arrays keep their types
void apply_override(RunConfig& cfg, const std::string& key, const std::string& raw) {
    bool is_string = false;
    visit_config_fields(cfg, [&](const char* name, auto& field) {
        if (key == name && std::is_same_v<std::decay_t<decltype(field)>, std::string>)
            is_string = true;
    });
    nlohmann::json value;
    if (is_string) {
        value = raw;
    } else {
        try {
            value = nlohmann::json::parse(raw);
        } catch (const nlohmann::json::exception&) {
            value = raw;
        }
    }
    set_config_key(cfg, key, value);
}

void require_key(const std::string& value, const char* key) {
    if (value.empty()) throw UsageError(std::string("missing required config key: \"") + key + "\"");
}

void guard_overwrite(const std::string& path, bool force) {
    if (!force && std::filesystem::exists(path))
        throw UsageError("refusing to overwrite " + path + " (pass --force)");
}

// per-command config echo into the run directory; identical re-runs are
// fine, a different config for the same run id needs --force
void echo_command_config(const RunConfig& cfg, const std::string& cmd, bool force) {
    const std::string path = run_dir(cfg) + "/config-" + cmd + ".json";
    const std::string payload = config_to_json(cfg).dump(2) + "\n";
    if (std::filesystem::exists(path)) {
        if (read_file(path) == payload) return;
        if (!force) throw UsageError("run directory already holds a different " + path +
                                     " (pass --force)");
    }
    atomic_write(path, payload);
}

SessionConfig session_from(const RunConfig& cfg) {
    SessionConfig s;
    s.max_turns = cfg.max_turns;
    s.confidence = cfg.confidence;
    s.err.ser = cfg.ser;
    s.err.act_type_fraction = cfg.act_type_fraction;
    return s;
}

GpConfig gp_from(const RunConfig& cfg) {
    GpConfig g;
    g.kernel_scale = cfg.gp_kernel_scale;
    g.sigma2 = cfg.gp_sigma2;
    g.nu = cfg.gp_nu;
    g.gamma = cfg.gp_gamma;
    g.max_dictionary = cfg.gp_max_dictionary;
    g.epsilon = cfg.gp_epsilon;
    return g;
}

RaterConfig rater_from(const RunConfig& cfg, int max_turns) {
    RaterConfig rc;
    if (cfg.arch == "rnn")
        rc.arch = RaterArch::rnn;
    else if (cfg.arch == "cnn")
        rc.arch = RaterArch::cnn;
    else
        throw UsageError("bad value for config key \"arch\": " + cfg.arch);
    if (cfg.head == "binary")
        rc.head = HeadKind::binary;
    else if (cfg.head == "return_class")
        rc.head = HeadKind::return_class;
    else if (cfg.head == "return_regress")
        rc.head = HeadKind::return_regress;
    else
        throw UsageError("bad value for config key \"head\": " + cfg.head);
    rc.hidden_width = cfg.hidden_width;
    rc.num_maps = cfg.num_maps;
    rc.filter_width = cfg.filter_width;
    rc.mlp_width = cfg.mlp_width;
    rc.sigma_s = cfg.sigma_s;
    rc.max_turns = max_turns;
    rc.seed = cfg.seed;
    return rc;
}

PolicySource source_from(const RunConfig& cfg) {
    if (cfg.policy_source == "random") return PolicySource::random;
    if (cfg.policy_source == "oracle") return PolicySource::oracle;
    if (cfg.policy_source == "checkpoint") return PolicySource::checkpoint;
    if (cfg.policy_source == "scratch") return PolicySource::scratch;
    throw UsageError("bad value for config key \"policy_source\": " + cfg.policy_source);
}

LoadedRater load_checked_rater(const Ontology& ont, const std::string& path) {
    LoadedRater lr = load_rater(path);
    if (lr.ontology_hash != ontology_hash(ont))
        throw DataError("rater checkpoint " + path + " was built against a different ontology");
    if (lr.model.feat_width != feature_width(ont))
        throw DataError("rater checkpoint " + path + " expects feature width " +
                        std::to_string(lr.model.feat_width) + ", domain provides " +
                        std::to_string(feature_width(ont)));
    return lr;
}

LoadedPolicy load_checked_policy(const Ontology& ont, const std::string& path) {
    LoadedPolicy lp = load_policy(path);
    if (lp.ontology_hash != ontology_hash(ont))
        throw DataError("policy checkpoint " + path + " was built against a different ontology");
    return lp;
}

void cmd_gen_db(const RunConfig& cfg, bool force) {
    require_key(cfg.database, "database");
    guard_overwrite(cfg.database, force);
    const Ontology ont = default_ontology();
    const VenueDB db = generate_database(ont, cfg.db_seed, cfg.db_size);
    save_database(db, ont, cfg.database);
    std::printf("wrote %zu venues to %s\n", db.venues.size(), cfg.database.c_str());
}

void cmd_gen_data(const RunConfig& cfg, bool force) {
    require_key(cfg.database, "database");
    require_key(cfg.corpus, "corpus");
    guard_overwrite(cfg.corpus, force);
    const Ontology ont = default_ontology();
    const VenueDB db = load_database(ont, cfg.database);
    CorpusSpec spec;
    spec.n = cfg.n_dialogues;
    spec.ser_levels = cfg.ser_levels;
    spec.balance = cfg.balance;
    spec.source = source_from(cfg);
    spec.seed = cfg.seed;
    spec.p_unsatisfiable = cfg.p_unsatisfiable;
    spec.session = session_from(cfg);
    spec.gp = gp_from(cfg);
    LoadedPolicy lp;
    if (spec.source == PolicySource::checkpoint) {
        require_key(cfg.policy_checkpoint, "policy_checkpoint");
        lp = load_checked_policy(ont, cfg.policy_checkpoint);
        spec.policy = &lp.policy;
    }
    const CorpusGenResult res = generate_corpus(spec, ont, db);
    if (!res.warning.empty()) std::fprintf(stderr, "warning: %s\n", res.warning.c_str());
    save_corpus(res.corpus, ont, cfg.corpus);
    long succ = 0;
    for (const auto& d : res.corpus.dialogues) succ += d.outcome.success;
    std::printf("wrote %zu dialogues (%ld successful) to %s\n", res.corpus.dialogues.size(), succ,
                cfg.corpus.c_str());
}

void cmd_train_rater(const RunConfig& cfg, bool force) {
    require_key(cfg.train_corpus, "train_corpus");
    require_key(cfg.val_corpus, "val_corpus");
    require_key(cfg.rater_checkpoint, "rater_checkpoint");
    guard_overwrite(cfg.rater_checkpoint, force);
    const Ontology ont = default_ontology();
    const Corpus train = load_corpus(ont, cfg.train_corpus);
    const Corpus val = load_corpus(ont, cfg.val_corpus);
    if (train.feat_width != val.feat_width || train.max_turns != val.max_turns)
        throw DataError("train and validation corpora disagree on shape");
    const RaterConfig rc = rater_from(cfg, train.max_turns);
    TrainConfig tc;
    tc.learning_rate = cfg.learning_rate;
    tc.grad_clip = cfg.grad_clip;
    tc.max_epochs = cfg.max_epochs;
    tc.patience = cfg.patience;
    tc.seed = cfg.seed;
    const TrainResult tr = sgd_train(make_rater(rc, train.feat_width), corpus_to_labeled(train),
                                     corpus_to_labeled(val), tc);
    save_rater(tr.model, ontology_hash(ont), cfg.rater_checkpoint);
    const std::string hist_path = run_dir(cfg) + "/history.csv";
    guard_overwrite(hist_path, force);
    atomic_write(hist_path, history_to_csv(tr.history));
    const EpochStats& last = tr.history.back();
    std::printf("trained %d epochs; val_loss=%.4f val_accuracy=%.4f val_rmse=%.4f\n",
                static_cast<int>(tr.history.size()), last.val_loss, last.val_accuracy,
                last.val_rmse);
    std::printf("wrote %s and %s\n", cfg.rater_checkpoint.c_str(), hist_path.c_str());
}

void cmd_eval_rater(const RunConfig& cfg, bool) {
    require_key(cfg.corpus, "corpus");
    require_key(cfg.rater_checkpoint, "rater_checkpoint");
    const Ontology ont = default_ontology();
    const LoadedRater lr = load_checked_rater(ont, cfg.rater_checkpoint);
    const Corpus c = load_corpus(ont, cfg.corpus);
    if (c.feat_width != lr.model.feat_width)
        throw DataError("corpus feature width does not match the rater checkpoint");
    const EvalStats es = evaluate_on(lr.model, corpus_to_labeled(c));
    std::printf("n=%zu accuracy=%.4f rmse=%.4f loss=%.4f\n", c.dialogues.size(), es.accuracy,
                es.rmse, es.loss);
}

void cmd_train_policy(const RunConfig& cfg, bool force) {
    require_key(cfg.database, "database");
    require_key(cfg.policy_checkpoint, "policy_checkpoint");
    guard_overwrite(cfg.policy_checkpoint, force);
    const std::string curve_path = cfg.curve.empty() ? run_dir(cfg) + "/curve.csv" : cfg.curve;
    guard_overwrite(curve_path, force);
    const Ontology ont = default_ontology();
    const VenueDB db = load_database(ont, cfg.database);
    RewardSource src;
    LoadedRater lr;
    if (cfg.reward == "objective") {
        src.kind = RewardKind::objective;
    } else if (cfg.reward == "rater") {
        require_key(cfg.rater_checkpoint, "rater_checkpoint");
        lr = load_checked_rater(ont, cfg.rater_checkpoint);
        src.kind = RewardKind::rater;
        src.rater = &lr.model;
    } else {
        throw UsageError("bad value for config key \"reward\": " + cfg.reward);
    }
    const OnlineResult res = train_policy_online(ont, db, src, cfg.n_dialogues, cfg.ser,
                                                 gp_from(cfg), session_from(cfg),
                                                 cfg.p_unsatisfiable, cfg.seed);
    save_policy(res.policy, ontology_hash(ont), cfg.policy_checkpoint);
    atomic_write(curve_path, curve_to_csv(res.curve, cfg.ma_window));
    const long tail = std::min<long>(cfg.ma_window, static_cast<long>(res.curve.size()));
    long tail_succ = 0;
    for (size_t i = res.curve.size() - tail; i < res.curve.size(); ++i)
        tail_succ += res.curve[i].objective_success;
    std::printf("trained on %zu dialogues; tail success %.3f over last %ld; discarded=%ld "
                "goal_accesses=%ld dictionary=%d\n",
                res.curve.size(), static_cast<double>(tail_succ) / tail, tail, res.discarded,
                res.goal_accesses, res.policy.size());
    std::printf("wrote %s and %s\n", cfg.policy_checkpoint.c_str(), curve_path.c_str());
}

void cmd_eval_policy(const RunConfig& cfg, bool) {
    require_key(cfg.database, "database");
    require_key(cfg.policy_checkpoint, "policy_checkpoint");
    const Ontology ont = default_ontology();
    const VenueDB db = load_database(ont, cfg.database);
    const LoadedPolicy lp = load_checked_policy(ont, cfg.policy_checkpoint);
    const PolicyEval ev = eval_policy(ont, db, lp.policy, cfg.eval_dialogues, cfg.ser,
                                      session_from(cfg), cfg.p_unsatisfiable, cfg.seed);
    std::printf("n=%d success_rate=%.4f mean_return=%.3f\n", cfg.eval_dialogues, ev.success_rate,
                ev.mean_return);
}

void cmd_export_curves(const RunConfig& cfg, bool force) {
    require_key(cfg.curve, "curve");
    const std::string out_path = run_dir(cfg) + "/curves.csv";
    guard_overwrite(out_path, force);
    const std::vector<CurvePoint> curve = curve_from_csv(read_file(cfg.curve));
    atomic_write(out_path, curve_to_csv(curve, cfg.ma_window));
    std::printf("wrote %s (%zu points, window %d)\n", out_path.c_str(), curve.size(),
                cfg.ma_window);
}

void cmd_chat(const RunConfig& cfg, bool force) {
    require_key(cfg.database, "database");
    require_key(cfg.policy_checkpoint, "policy_checkpoint");
    require_key(cfg.rater_checkpoint, "rater_checkpoint");
    const std::string transcript_path = run_dir(cfg) + "/chat.jsonl";
    guard_overwrite(transcript_path, force);
    const Ontology ont = default_ontology();
    const VenueDB db = load_database(ont, cfg.database);
    const LoadedPolicy lp = load_checked_policy(ont, cfg.policy_checkpoint);
    const LoadedRater lr = load_checked_rater(ont, cfg.rater_checkpoint);
    const ChatResult r = run_chat(ont, db, lp.policy, lr.model, session_from(cfg), std::cin,
                                  std::cout);
    atomic_write(transcript_path, chat_to_jsonl(ont, r));
    std::printf("transcript saved to %s\n", transcript_path.c_str());
}

}  // namespace
}  // namespace sdslab

int main(int argc, char** argv) {
    using namespace sdslab;
    CLI::App app{"toy task-oriented dialogue lab: corpora, success raters, online policies"};
    app.require_subcommand(1);

    struct Command {
        const char* name;
        const char* help;
        void (*run)(const RunConfig&, bool);
        CLI::App* sub = nullptr;
        std::string config_path;
        bool force = false;
        std::map<std::string, std::string> raw;
    };
    std::vector<Command> commands = {
        {"gen-db", "generate a venue database", cmd_gen_db},
        {"gen-data", "simulate a dialogue corpus", cmd_gen_data},
        {"train-rater", "train a success rater on a corpus", cmd_train_rater},
        {"eval-rater", "evaluate a rater checkpoint on a corpus", cmd_eval_rater},
        {"train-policy", "train a dialogue policy online", cmd_train_policy},
        {"eval-policy", "evaluate a policy checkpoint", cmd_eval_policy},
        {"export-curves", "recompute moving averages for a training curve", cmd_export_curves},
        {"chat", "play the user against a checkpointed policy", cmd_chat},
    };

    std::string gendb_out;
    int gendb_size = 0;
    std::uint64_t gendb_seed = 0;
    for (auto& cmd : commands) {
        cmd.sub = app.add_subcommand(cmd.name, cmd.help);
        cmd.sub->add_option("--config", cmd.config_path, "JSON config file");
        cmd.sub->add_flag("--force", cmd.force, "overwrite existing artifacts");
        RunConfig dummy;
        const bool is_gendb = std::string(cmd.name) == "gen-db";
        visit_config_fields(dummy, [&](const char* name, auto&) {
            // gen-db exposes --seed as its own alias below
            if (is_gendb && std::string(name) == "seed") return;
            cmd.raw.emplace(name, std::string());
        });
        for (auto& [key, slot] : cmd.raw)
            cmd.sub->add_option("--" + key, slot)->group("config overrides");
    }
    CLI::App* gendb = commands[0].sub;
    gendb->add_option("--out", gendb_out, "database file (alias for --database)");
    gendb->add_option("--size", gendb_size, "venue count (alias for --db_size)");
    gendb->add_option("--seed", gendb_seed, "database seed (alias for --db_seed)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    for (auto& cmd : commands) {
        if (!cmd.sub->parsed()) continue;
        try {
            RunConfig cfg;
            if (!cmd.config_path.empty()) cfg = load_config(cmd.config_path);
            for (const auto& [key, raw] : cmd.raw)
                if (cmd.sub->count("--" + key) > 0) apply_override(cfg, key, raw);
            if (cmd.sub == gendb) {
                if (gendb->count("--out") > 0) cfg.database = gendb_out;
                if (gendb->count("--size") > 0) cfg.db_size = gendb_size;
                if (gendb->count("--seed") > 0) {
                    cfg.db_seed = gendb_seed;
                    cfg.seed = gendb_seed;
                }
            }
            echo_command_config(cfg, cmd.name, cmd.force);
            cmd.run(cfg, cmd.force);
        } catch (const UsageError& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return 1;
        } catch (const DataError& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return 2;
        } catch (const std::exception& e) {
            std::fprintf(stderr, "internal error: %s\n", e.what());
            return 3;
        }
    }
    return 0;
}
