#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdslab/acts.hpp"
#include "sdslab/belief.hpp"
#include "sdslab/linalg.hpp"
#include "sdslab/ontology.hpp"
#include "sdslab/rng.hpp"

namespace sdslab {

// Compact policy view of the belief: per constraint slot the top
// probability and entropy, then the method distribution and history flags.
inline std::vector<double> summary_features(const BeliefState& b) {
    std::vector<double> v;
    v.reserve(2 * b.slot_dist.size() + b.method.size() + b.requested.size() + 1);
    for (const auto& dist : b.slot_dist) {
        double top = 0.0, ent = 0.0;
        for (double p : dist) {
            top = std::max(top, p);
            if (p > 0.0) ent -= p * std::log(p);
        }
        v.push_back(top);
        v.push_back(ent);
    }
    v.insert(v.end(), b.method.begin(), b.method.end());
    v.push_back(b.offer_made);
    v.insert(v.end(), b.requested.begin(), b.requested.end());
    return v;
}

inline int summary_feature_width(const Ontology& ont) {
    return 2 * ont.num_constraint_slots() + kNumMethods + 1 + ont.num_requestable_slots();
}

namespace detail {

inline Constraints belief_constraints(const BeliefState& b, const Ontology& ont) {
    Constraints c;
    for (int s = 0; s < ont.num_constraint_slots(); ++s) {
        const int v = top_value(b, s);
        if (v >= 0) c.emplace_back(ont.constraint_slots[s], ont.constraint_values[s][v]);
    }
    return c;
}

// matching venues ordered by name; skip lets alternatives avoid the current offer
inline const Venue* first_match(const BeliefState& b, const Ontology& ont, const VenueDB& db,
                                const std::string& skip) {
    std::vector<const Venue*> hits = matching_venues(ont, db, belief_constraints(b, ont));
    std::sort(hits.begin(), hits.end(),
              [](const Venue* x, const Venue* y) { return x->name < y->name; });
    for (const Venue* v : hits)
        if (v->name != skip) return v;
    return nullptr;
}

inline void add_offer_args(SystemAct& act, const Venue& v, const Ontology& ont) {
    for (int s = 0; s < ont.num_constraint_slots(); ++s)
        act.args.emplace_back(ont.constraint_slots[s], v.constraint_values[s]);
}

// top two value indices of a slot, ignoring the none entry
inline std::pair<int, int> top_two_values(const BeliefState& b, int slot) {
    const auto& dist = b.slot_dist[slot];
    const int n = static_cast<int>(dist.size()) - 1;
    int first = 0, second = -1;
    for (int i = 1; i < n; ++i)
        if (dist[i] > dist[first]) first = i;
    for (int i = 0; i < n; ++i) {
        if (i == first) continue;
        if (second < 0 || dist[i] > dist[second]) second = i;
    }
    return {first, second < 0 ? first : second};
}

}  // namespace detail

// Grounds a summary action into a full system act. Deterministic. Two
// actions carry an executability mask: inform_requested with no offer on
// the table becomes inform_offer, and bye becomes reqmore until the
// tracker believes the user is finished, so the system cannot hang up on
// a user who is still mid-task.
inline SystemAct master_action(const SummaryAction& a, const BeliefState& belief,
                               const Ontology& ont, const VenueDB& db) {
    SystemAct act;
    act.summary = a;
    switch (a.kind) {
        case SummaryKind::request_slot:
            act.args.emplace_back(ont.constraint_slots[a.slot], "");
            return act;
        case SummaryKind::confirm_slot: {
            const int v = top_value(belief, a.slot);
            act.args.emplace_back(ont.constraint_slots[a.slot],
                                  ont.constraint_values[a.slot][v < 0 ? 0 : v]);
            return act;
        }
        case SummaryKind::select_slot: {
            const auto [v1, v2] = detail::top_two_values(belief, a.slot);
            act.args.emplace_back(ont.constraint_slots[a.slot], ont.constraint_values[a.slot][v1]);
            act.args.emplace_back(ont.constraint_slots[a.slot], ont.constraint_values[a.slot][v2]);
            return act;
        }
        case SummaryKind::inform_offer: {
            if (const Venue* v = detail::first_match(belief, ont, db, "")) {
                act.venue = v->name;
                detail::add_offer_args(act, *v, ont);
            }
            return act;
        }
        case SummaryKind::inform_alternatives: {
            if (const Venue* v = detail::first_match(belief, ont, db, belief.offered_venue)) {
                act.venue = v->name;
                detail::add_offer_args(act, *v, ont);
            }
            return act;
        }
        case SummaryKind::inform_requested: {
            const Venue* v =
                belief.offered_venue.empty() ? nullptr : db.find(belief.offered_venue);
            if (!v) {
                SummaryAction offer;
                offer.kind = SummaryKind::inform_offer;
                return master_action(offer, belief, ont, db);
            }
            act.venue = v->name;
            act.args.emplace_back(ont.requestable_slots[a.slot], v->requestable_values[a.slot]);
            return act;
        }
        case SummaryKind::bye:
            if (belief.method[static_cast<int>(Method::finished)] <= 0.5) {
                act.summary = SummaryAction{SummaryKind::reqmore, -1};
                return act;
            }
            return act;
        case SummaryKind::inform_no_match:
        case SummaryKind::repeat_last:
        case SummaryKind::reqmore:
        case SummaryKind::hello:
        case SummaryKind::restart:
            return act;
    }
    throw std::logic_error("master_action: bad summary kind");
}

struct GpConfig {
    double kernel_scale = 20.0;
    double sigma2 = 5.0;  // TD observation noise variance
    double nu = 0.1;      // kernel-space novelty threshold for dictionary growth
    double gamma = 1.0;   // episodic discount
    int max_dictionary = 1000;
    // explore mode: 0 → posterior (Thompson) sampling per action;
    // > 0 → epsilon-greedy over posterior means
    double epsilon = 0.0;
};

struct GpStep {
    std::vector<double> feats;
    int action = 0;
    double reward = 0.0;
};

enum class SelectMode { exploit, explore };

// Sparse GP posterior over Q at the dictionary points: prior mean 0 with
// covariance kmat; mu/cov track the posterior after episode conditioning.
struct GpPolicy {
    GpConfig cfg;
    int feat_dim = 0;
    int num_actions = 0;
    std::vector<std::vector<double>> points;
    std::vector<int> actions;
    std::vector<double> mu;
    Mat cov;
    Mat kmat;
    Mat kinv;

    int size() const { return static_cast<int>(actions.size()); }
};

inline GpPolicy make_policy(const GpConfig& cfg, int feat_dim, int num_actions) {
    GpPolicy p;
    p.cfg = cfg;
    p.feat_dim = feat_dim;
    p.num_actions = num_actions;
    p.cov = Mat(0, 0);
    p.kmat = Mat(0, 0);
    p.kinv = Mat(0, 0);
    return p;
}

inline double gp_kernel(const GpPolicy& p, const std::vector<double>& b1, int a1,
                        const std::vector<double>& b2, int a2) {
    if (a1 != a2) return 0.0;
    return p.cfg.kernel_scale * dot(b1, b2);
}

namespace detail {

struct Projection {
    std::vector<double> a;  // kinv * k_x
    double delta = 0.0;     // prior variance unexplained by the dictionary
    double kxx = 0.0;
};

inline Projection project(const GpPolicy& p, const std::vector<double>& feats, int action) {
    Projection pr;
    pr.kxx = p.cfg.kernel_scale * dot(feats, feats);
    const int m = p.size();
    std::vector<double> kvec(m);
    for (int i = 0; i < m; ++i) kvec[i] = gp_kernel(p, p.points[i], p.actions[i], feats, action);
    pr.a.assign(m, 0.0);
    matvec(p.kinv, kvec.data(), pr.a.data());
    pr.delta = std::max(0.0, pr.kxx - dot(kvec.data(), pr.a.data(), m));
    return pr;
}

inline Mat grow(const Mat& m) {
    Mat g(m.rows + 1, m.cols + 1);
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) g(r, c) = m(r, c);
    return g;
}

inline Mat drop(const Mat& m, int j) {
    Mat d(m.rows - 1, m.cols - 1);
    for (int r = 0, dr = 0; r < m.rows; ++r) {
        if (r == j) continue;
        for (int c = 0, dc = 0; c < m.cols; ++c) {
            if (c == j) continue;
            d(dr, dc) = m(r, c);
            ++dc;
        }
        ++dr;
    }
    return d;
}

inline void add_point(GpPolicy& p, const std::vector<double>& feats, int action,
                      const Projection& pr) {
    const int m = p.size();
    std::vector<double> kvec(m);
    for (int i = 0; i < m; ++i) kvec[i] = gp_kernel(p, p.points[i], p.actions[i], feats, action);
    std::vector<double> sa(m, 0.0);
    matvec(p.cov, pr.a.data(), sa.data());
    const double corner = dot(pr.a.data(), sa.data(), m) + pr.delta;

    Mat cov2 = grow(p.cov);
    Mat kmat2 = grow(p.kmat);
    Mat kinv2 = grow(p.kinv);
    const double inv_s = 1.0 / pr.delta;
    for (int i = 0; i < m; ++i) {
        cov2(i, m) = cov2(m, i) = sa[i];
        kmat2(i, m) = kmat2(m, i) = kvec[i];
        kinv2(i, m) = kinv2(m, i) = -pr.a[i] * inv_s;
        for (int j1 = 0; j1 < m; ++j1) kinv2(i, j1) += pr.a[i] * pr.a[j1] * inv_s;
    }
    cov2(m, m) = corner;
    kmat2(m, m) = pr.kxx;
    kinv2(m, m) = inv_s;

    p.cov = std::move(cov2);
    p.kmat = std::move(kmat2);
    p.kinv = std::move(kinv2);
    p.mu.push_back(dot(pr.a.data(), p.mu.data(), m));
    p.points.push_back(feats);
    p.actions.push_back(action);
}

// drop the oldest support point; the inverse is downdated by its Schur
// complement, the posterior simply marginalizes
inline void evict_point(GpPolicy& p, int j) {
    const int m = p.size();
    Mat kinv2(m - 1, m - 1);
    const double pivot = p.kinv(j, j);
    for (int r = 0, dr = 0; r < m; ++r) {
        if (r == j) continue;
        for (int c = 0, dc = 0; c < m; ++c) {
            if (c == j) continue;
            kinv2(dr, dc) = p.kinv(r, c) - p.kinv(r, j) * p.kinv(j, c) / pivot;
            ++dc;
        }
        ++dr;
    }
    p.kinv = std::move(kinv2);
    p.kmat = drop(p.kmat, j);
    p.cov = drop(p.cov, j);
    p.mu.erase(p.mu.begin() + j);
    p.points.erase(p.points.begin() + j);
    p.actions.erase(p.actions.begin() + j);
}

}  // namespace detail

struct QStats {
    double mean = 0.0;
    double var = 0.0;
};

inline QStats q_stats(const GpPolicy& p, const std::vector<double>& feats, int action) {
    const detail::Projection pr = detail::project(p, feats, action);
    QStats s;
    s.mean = dot(pr.a.data(), p.mu.data(), p.size());
    std::vector<double> sa(p.size(), 0.0);
    matvec(p.cov, pr.a.data(), sa.data());
    s.var = std::max(0.0, pr.delta + dot(pr.a.data(), sa.data(), p.size()));
    return s;
}

// exploit: posterior-mean argmax; explore: argmax of one posterior sample
// per action, or epsilon-greedy over means when cfg.epsilon > 0; ties go
// to the lowest action index
inline int select_action(const GpPolicy& p, const std::vector<double>& feats, SelectMode mode,
                         Rng& rng) {
    if (mode == SelectMode::explore && p.cfg.epsilon > 0.0 && rng.bernoulli(p.cfg.epsilon))
        return static_cast<int>(rng.uniform_index(static_cast<size_t>(p.num_actions)));
    int best = 0;
    double best_score = 0.0;
    for (int a = 0; a < p.num_actions; ++a) {
        const QStats s = q_stats(p, feats, a);
        const bool sample = mode == SelectMode::explore && p.cfg.epsilon <= 0.0;
        const double score = sample ? s.mean + std::sqrt(s.var) * rng.normal() : s.mean;
        if (a == 0 || score > best_score) {
            best = a;
            best_score = score;
        }
    }
    return best;
}

// Episode-batched GP-SARSA conditioning. Each step's Q is represented by
// its projection onto the dictionary (novel points are added first), the
// TD operator H couples consecutive steps, and the Gaussian posterior is
// conditioned on the episode's rewards in one exact step.
inline void gp_sarsa_update(GpPolicy& p, const std::vector<GpStep>& episode) {
    if (episode.empty()) throw std::invalid_argument("gp_sarsa_update: empty episode");
    for (const auto& s : episode) {
        if (!std::isfinite(s.reward))
            throw std::invalid_argument("gp_sarsa_update: non-finite reward");
        if (static_cast<int>(s.feats.size()) != p.feat_dim)
            throw std::invalid_argument("gp_sarsa_update: feature width mismatch");
        if (s.action < 0 || s.action >= p.num_actions)
            throw std::invalid_argument("gp_sarsa_update: action out of range");
    }

    const int steps = static_cast<int>(episode.size());
    std::vector<std::vector<double>> reps(steps);
    for (int t = 0; t < steps; ++t) {
        detail::Projection pr = detail::project(p, episode[t].feats, episode[t].action);
        if (pr.delta > p.cfg.nu) {
            detail::add_point(p, episode[t].feats, episode[t].action, pr);
            if (p.size() > p.cfg.max_dictionary) {
                detail::evict_point(p, 0);
                for (int s = 0; s < t; ++s)
                    reps[s] = detail::project(p, episode[s].feats, episode[s].action).a;
            }
            pr = detail::project(p, episode[t].feats, episode[t].action);
        }
        reps[t] = pr.a;
    }

    const int m = p.size();
    if (m == 0) return;
    for (auto& r : reps) r.resize(m, 0.0);

    // phi = H * A with H the upper-bidiagonal TD operator
    Mat phi(steps, m);
    for (int t = 0; t < steps; ++t)
        for (int i = 0; i < m; ++i) {
            double v = reps[t][i];
            if (t + 1 < steps) v -= p.cfg.gamma * reps[t + 1][i];
            phi(t, i) = v;
        }

    Mat proj(steps, m);  // phi * cov
    for (int t = 0; t < steps; ++t) {
        std::vector<double> row(m, 0.0);
        matvec(p.cov, phi.row(t), row.data());
        for (int i = 0; i < m; ++i) proj(t, i) = row[i];
    }

    Mat b(steps, steps);  // phi cov phi' + sigma2 H H'
    for (int r = 0; r < steps; ++r)
        for (int c = 0; c < steps; ++c) b(r, c) = dot(proj.row(r), phi.row(c), m);
    const double g = p.cfg.gamma;
    for (int t = 0; t < steps; ++t) {
        b(t, t) += p.cfg.sigma2 * (t + 1 < steps ? 1.0 + g * g : 1.0);
        if (t + 1 < steps) {
            b(t, t + 1) += -g * p.cfg.sigma2;
            b(t + 1, t) += -g * p.cfg.sigma2;
        }
    }
    cholesky(b);

    std::vector<double> resid(steps);
    for (int t = 0; t < steps; ++t)
        resid[t] = episode[t].reward - dot(phi.row(t), p.mu.data(), m);
    chol_solve(b, resid.data());
    for (int i = 0; i < m; ++i) {
        double acc = 0.0;
        for (int t = 0; t < steps; ++t) acc += proj(t, i) * resid[t];
        p.mu[i] += acc;
    }

    Mat binv_proj = proj;  // solve column systems via the T-sized factor
    for (int i = 0; i < m; ++i) {
        std::vector<double> col(steps);
        for (int t = 0; t < steps; ++t) col[t] = proj(t, i);
        chol_solve(b, col.data());
        for (int t = 0; t < steps; ++t) binv_proj(t, i) = col[t];
    }
    for (int r = 0; r < m; ++r)
        for (int c = r; c < m; ++c) {
            double acc = 0.0;
            for (int t = 0; t < steps; ++t) acc += proj(t, r) * binv_proj(t, c);
            const double v = 0.5 * (p.cov(r, c) + p.cov(c, r)) - acc;
            p.cov(r, c) = v;
            p.cov(c, r) = v;
        }
}

}  // namespace sdslab
