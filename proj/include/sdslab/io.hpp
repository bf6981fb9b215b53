#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdslab/gp_policy.hpp"
#include "sdslab/harness.hpp"
#include "sdslab/ontology.hpp"
#include "sdslab/rater.hpp"

namespace sdslab {

// data or compatibility problem: bad file contents, mismatched artifacts
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// bad invocation: unknown keys, missing arguments, refusing to overwrite
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void atomic_write(const std::string& path, const std::string& payload) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + tmp.string());
        out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
        if (!out) throw DataError("short write to " + tmp.string());
    }
    fs::rename(tmp, target);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace detail {

struct ByteWriter {
    std::string buf;
    void raw(const void* p, size_t n) { buf.append(static_cast<const char*>(p), n); }
    void u8(std::uint8_t v) { raw(&v, 1); }
    void i32(std::int32_t v) { raw(&v, 4); }
    void i64(std::int64_t v) { raw(&v, 8); }
    void u64(std::uint64_t v) { raw(&v, 8); }
    void f64(double v) { raw(&v, 8); }
    void str(const std::string& s) {
        i32(static_cast<std::int32_t>(s.size()));
        raw(s.data(), s.size());
    }
};

struct ByteReader {
    const std::string& buf;
    size_t pos = 0;
    explicit ByteReader(const std::string& b) : buf(b) {}
    void raw(void* p, size_t n) {
        if (pos + n > buf.size()) throw DataError("truncated checkpoint");
        std::memcpy(p, buf.data() + pos, n);
        pos += n;
    }
    std::uint8_t u8() {
        std::uint8_t v;
        raw(&v, 1);
        return v;
    }
    std::int32_t i32() {
        std::int32_t v;
        raw(&v, 4);
        return v;
    }
    std::int64_t i64() {
        std::int64_t v;
        raw(&v, 8);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        raw(&v, 8);
        return v;
    }
    double f64() {
        double v;
        raw(&v, 8);
        return v;
    }
    std::string str() {
        const std::int32_t n = i32();
        if (n < 0) throw DataError("bad string length");
        std::string s(static_cast<size_t>(n), '\0');
        raw(s.data(), static_cast<size_t>(n));
        return s;
    }
};

inline nlohmann::json act_to_json(const UserAct& a) {
    return {{"type", user_act_name(a.type)}, {"slot", a.slot}, {"value", a.value}};
}

inline UserAct act_from_json(const nlohmann::json& j) {
    UserAct a;
    a.type = user_act_from_name(j.at("type").get<std::string>());
    a.slot = j.at("slot").get<std::string>();
    a.value = j.at("value").get<std::string>();
    return a;
}

inline nlohmann::json sys_to_json(const Ontology& ont, const SystemAct& a) {
    nlohmann::json args = nlohmann::json::array();
    for (const auto& [k, v] : a.args) args.push_back({k, v});
    return {{"summary", summary_action_name(ont, a.summary)}, {"venue", a.venue}, {"args", args}};
}

inline SystemAct sys_from_json(const Ontology& ont, const nlohmann::json& j) {
    SystemAct a;
    a.summary = summary_action_from_name(ont, j.at("summary").get<std::string>());
    a.venue = j.at("venue").get<std::string>();
    for (const auto& kv : j.at("args"))
        a.args.emplace_back(kv.at(0).get<std::string>(), kv.at(1).get<std::string>());
    return a;
}

inline nlohmann::json goal_to_json(const UserGoal& g) {
    nlohmann::json cons = nlohmann::json::array();
    for (const auto& [k, v] : g.constraints) cons.push_back({k, v});
    return {{"constraints", cons}, {"requests", g.requests}, {"satisfiable", g.satisfiable}};
}

inline UserGoal goal_from_json(const nlohmann::json& j) {
    UserGoal g;
    for (const auto& kv : j.at("constraints"))
        g.constraints.emplace_back(kv.at(0).get<std::string>(), kv.at(1).get<std::string>());
    g.requests = j.at("requests").get<std::vector<std::string>>();
    g.satisfiable = j.at("satisfiable").get<bool>();
    return g;
}

}  // namespace detail

inline constexpr int kCorpusFormatVersion = 1;

inline std::string corpus_to_jsonl(const Corpus& c, const Ontology& ont) {
    std::string out;
    nlohmann::json header = {{"format_version", kCorpusFormatVersion},
                             {"F", c.feat_width},
                             {"max_turns", c.max_turns},
                             {"ontology_hash", c.ontology_hash}};
    out += header.dump();
    out += '\n';
    for (const auto& d : c.dialogues) {
        nlohmann::json turns = nlohmann::json::array();
        for (const auto& t : d.turns)
            turns.push_back({{"sys_act", detail::sys_to_json(ont, t.sys)},
                             {"true_user_act", detail::act_to_json(t.true_act)},
                             {"observed_user_act", detail::act_to_json(t.observed_act)}});
        nlohmann::json j = {{"turns", turns},
                            {"features", d.feats},
                            {"outcome",
                             {{"success", d.outcome.success},
                              {"num_turns", d.outcome.num_turns},
                              {"return", d.outcome.ret}}},
                            {"goal", detail::goal_to_json(d.goal)},
                            {"ser", d.ser}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

inline void save_corpus(const Corpus& c, const Ontology& ont, const std::string& path) {
    atomic_write(path, corpus_to_jsonl(c, ont));
}

inline Corpus load_corpus(const Ontology& ont, const std::string& path) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty corpus file " + path);
    Corpus c;
    try {
        const nlohmann::json header = nlohmann::json::parse(line);
        if (header.at("format_version").get<int>() != kCorpusFormatVersion)
            throw DataError("unsupported corpus format version in " + path);
        c.feat_width = header.at("F").get<int>();
        c.max_turns = header.at("max_turns").get<int>();
        c.ontology_hash = header.at("ontology_hash").get<std::uint64_t>();
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const nlohmann::json j = nlohmann::json::parse(line);
            CorpusDialogue d;
            for (const auto& t : j.at("turns"))
                d.turns.push_back({detail::sys_from_json(ont, t.at("sys_act")),
                                   detail::act_from_json(t.at("true_user_act")),
                                   detail::act_from_json(t.at("observed_user_act"))});
            d.feats = j.at("features").get<FeatureSeq>();
            d.outcome.success = j.at("outcome").at("success").get<bool>();
            d.outcome.num_turns = j.at("outcome").at("num_turns").get<int>();
            d.outcome.ret = j.at("outcome").at("return").get<int>();
            d.goal = detail::goal_from_json(j.at("goal"));
            d.ser = j.at("ser").get<double>();
            c.dialogues.push_back(std::move(d));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad corpus " + path + ": " + e.what());
    }
    if (c.ontology_hash != ontology_hash(ont))
        throw DataError("corpus " + path + " was built against a different ontology");
    return c;
}

inline constexpr int kDatabaseFormatVersion = 1;

inline std::string database_to_json(const VenueDB& db, const Ontology& ont) {
    nlohmann::json venues = nlohmann::json::array();
    for (const auto& v : db.venues)
        venues.push_back({{"name", v.name},
                          {"constraints", v.constraint_values},
                          {"requestables", v.requestable_values}});
    nlohmann::json j = {{"format_version", kDatabaseFormatVersion},
                        {"ontology",
                         {{"constraint_slots", ont.constraint_slots},
                          {"constraint_values", ont.constraint_values},
                          {"requestable_slots", ont.requestable_slots}}},
                        {"ontology_hash", ontology_hash(ont)},
                        {"venues", venues}};
    return j.dump(2) + "\n";
}

inline void save_database(const VenueDB& db, const Ontology& ont, const std::string& path) {
    atomic_write(path, database_to_json(db, ont));
}

inline VenueDB load_database(const Ontology& ont, const std::string& path) {
    VenueDB db;
    try {
        const nlohmann::json j = nlohmann::json::parse(read_file(path));
        if (j.at("format_version").get<int>() != kDatabaseFormatVersion)
            throw DataError("unsupported database format version in " + path);
        if (j.at("ontology_hash").get<std::uint64_t>() != ontology_hash(ont))
            throw DataError("database " + path + " was built against a different ontology");
        for (const auto& jv : j.at("venues")) {
            Venue v;
            v.name = jv.at("name").get<std::string>();
            v.constraint_values = jv.at("constraints").get<std::vector<std::string>>();
            v.requestable_values = jv.at("requestables").get<std::vector<std::string>>();
            if (v.constraint_values.size() != ont.constraint_slots.size() ||
                v.requestable_values.size() != ont.requestable_slots.size())
                throw DataError("database " + path + ": venue " + v.name + " has wrong arity");
            db.venues.push_back(std::move(v));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad database " + path + ": " + e.what());
    }
    if (db.venues.empty()) throw DataError("database " + path + " has no venues");
    return db;
}

inline constexpr char kRaterMagic[9] = "SDSRATR1";
inline constexpr char kPolicyMagic[9] = "SDSPOL01";

inline void save_rater(const RaterModel& model, std::uint64_t ont_hash, const std::string& path) {
    detail::ByteWriter w;
    w.raw(kRaterMagic, 8);
    w.u8(static_cast<std::uint8_t>(model.arch));
    w.u8(static_cast<std::uint8_t>(model.head.kind));
    w.i32(model.feat_width);
    w.i32(model.max_turns);
    w.i32(model.rnn.hidden_width());
    w.i32(model.cnn.num_maps());
    w.i32(model.cnn.filter_width());
    w.i32(model.cnn.mlp_width());
    w.i32(model.head.out_dim());
    w.i32(model.head.in_dim());
    w.i32(model.head.min_return);
    w.f64(model.head.sigma_s);
    w.u64(ont_hash);
    RaterModel& m = const_cast<RaterModel&>(model);
    const std::vector<double*> ps = param_ptrs(m);
    w.i64(static_cast<std::int64_t>(ps.size()));
    for (const double* p : ps) w.f64(*p);
    atomic_write(path, w.buf);
}

struct LoadedRater {
    RaterModel model;
    std::uint64_t ontology_hash = 0;
};

inline LoadedRater load_rater(const std::string& path) {
    const std::string buf = read_file(path);
    detail::ByteReader r(buf);
    char magic[8];
    r.raw(magic, 8);
    if (std::memcmp(magic, kRaterMagic, 8) != 0) throw DataError(path + ": not a rater checkpoint");
    LoadedRater out;
    RaterModel& m = out.model;
    m.arch = static_cast<RaterArch>(r.u8());
    const auto head_kind = static_cast<HeadKind>(r.u8());
    m.feat_width = r.i32();
    m.max_turns = r.i32();
    const int hidden = r.i32();
    const int maps = r.i32();
    const int fwidth = r.i32();
    const int mlp = r.i32();
    const int head_out = r.i32();
    const int head_in = r.i32();
    const int min_return = r.i32();
    const double sigma_s = r.f64();
    out.ontology_hash = r.u64();

    if (m.arch == RaterArch::rnn) {
        m.rnn.w_in = Mat(hidden, m.feat_width);
        m.rnn.w_rec = Mat(hidden, hidden);
        m.rnn.b.assign(hidden, 0.0);
    } else {
        for (int i = 0; i < maps; ++i) m.cnn.filters.emplace_back(m.feat_width, fwidth);
        m.cnn.filter_b.assign(maps, 0.0);
        m.cnn.w1 = Mat(mlp, maps);
        m.cnn.b1.assign(mlp, 0.0);
    }
    m.head.kind = head_kind;
    m.head.w = Mat(head_out, head_in);
    m.head.b.assign(head_out, 0.0);
    m.head.min_return = min_return;
    m.head.sigma_s = sigma_s;

    const std::vector<double*> ps = param_ptrs(m);
    const std::int64_t n = r.i64();
    if (n != static_cast<std::int64_t>(ps.size()))
        throw DataError(path + ": parameter count mismatch");
    for (double* p : ps) *p = r.f64();
    return out;
}

inline void save_policy(const GpPolicy& p, std::uint64_t ont_hash, const std::string& path) {
    detail::ByteWriter w;
    w.raw(kPolicyMagic, 8);
    w.f64(p.cfg.kernel_scale);
    w.f64(p.cfg.sigma2);
    w.f64(p.cfg.nu);
    w.f64(p.cfg.gamma);
    w.i32(p.cfg.max_dictionary);
    w.i32(p.feat_dim);
    w.i32(p.num_actions);
    w.u64(ont_hash);
    const int m = p.size();
    w.i64(m);
    for (int i = 0; i < m; ++i) {
        w.i32(p.actions[i]);
        for (double v : p.points[i]) w.f64(v);
    }
    for (double v : p.mu) w.f64(v);
    for (double v : p.cov.d) w.f64(v);
    for (double v : p.kmat.d) w.f64(v);
    for (double v : p.kinv.d) w.f64(v);
    atomic_write(path, w.buf);
}

struct LoadedPolicy {
    GpPolicy policy;
    std::uint64_t ontology_hash = 0;
};

inline LoadedPolicy load_policy(const std::string& path) {
    const std::string buf = read_file(path);
    detail::ByteReader r(buf);
    char magic[8];
    r.raw(magic, 8);
    if (std::memcmp(magic, kPolicyMagic, 8) != 0)
        throw DataError(path + ": not a policy checkpoint");
    LoadedPolicy out;
    GpPolicy& p = out.policy;
    p.cfg.kernel_scale = r.f64();
    p.cfg.sigma2 = r.f64();
    p.cfg.nu = r.f64();
    p.cfg.gamma = r.f64();
    p.cfg.max_dictionary = r.i32();
    p.feat_dim = r.i32();
    p.num_actions = r.i32();
    out.ontology_hash = r.u64();
    const std::int64_t m = r.i64();
    if (m < 0) throw DataError(path + ": bad dictionary size");
    p.points.resize(m);
    p.actions.resize(m);
    for (std::int64_t i = 0; i < m; ++i) {
        p.actions[i] = r.i32();
        p.points[i].resize(p.feat_dim);
        for (double& v : p.points[i]) v = r.f64();
    }
    p.mu.resize(m);
    for (double& v : p.mu) v = r.f64();
    const int mi = static_cast<int>(m);
    p.cov = Mat(mi, mi);
    p.kmat = Mat(mi, mi);
    p.kinv = Mat(mi, mi);
    for (double& v : p.cov.d) v = r.f64();
    for (double& v : p.kmat.d) v = r.f64();
    for (double& v : p.kinv.d) v = r.f64();
    return out;
}

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace detail

inline std::string history_to_csv(const std::vector<EpochStats>& history) {
    std::string out = "epoch,train_loss,val_loss,val_accuracy,val_rmse\n";
    for (const auto& h : history) {
        out += std::to_string(h.epoch) + ',' + detail::fmt_double(h.train_loss) + ',' +
               detail::fmt_double(h.val_loss) + ',' + detail::fmt_double(h.val_accuracy) + ',' +
               detail::fmt_double(h.val_rmse) + '\n';
    }
    return out;
}

inline std::string curve_to_csv(const std::vector<CurvePoint>& curve, int window) {
    std::vector<double> rewards(curve.size()), turns(curve.size());
    for (size_t i = 0; i < curve.size(); ++i) {
        rewards[i] = curve[i].reward;
        turns[i] = curve[i].turns;
    }
    const std::vector<double> ma_r =
        curve.empty() ? std::vector<double>{} : moving_average(rewards, window);
    const std::vector<double> ma_t =
        curve.empty() ? std::vector<double>{} : moving_average(turns, window);
    std::string out = "dialogue_index,reward,turns,objective_success,ma_reward,ma_turns\n";
    for (size_t i = 0; i < curve.size(); ++i) {
        out += std::to_string(curve[i].index) + ',' + detail::fmt_double(curve[i].reward) + ',' +
               std::to_string(curve[i].turns) + ',' +
               (curve[i].objective_success ? "1" : "0") + ',' + detail::fmt_double(ma_r[i]) +
               ',' + detail::fmt_double(ma_t[i]) + '\n';
    }
    return out;
}

inline std::vector<CurvePoint> curve_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty curve csv");
    std::vector<CurvePoint> curve;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        CurvePoint p;
        try {
            std::getline(ls, cell, ',');
            p.index = std::stol(cell);
            std::getline(ls, cell, ',');
            p.reward = std::stod(cell);
            std::getline(ls, cell, ',');
            p.turns = std::stoi(cell);
            std::getline(ls, cell, ',');
            p.objective_success = cell == "1";
        } catch (const std::exception&) {
            throw DataError("bad curve csv row: " + line);
        }
        curve.push_back(p);
    }
    return curve;
}

}  // namespace sdslab
