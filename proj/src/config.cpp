#include "pitchcast/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "pitchcast/error.hpp"
#include "pitchcast/parallel.hpp"

namespace pitchcast {

namespace {

using json = nlohmann::ordered_json;

std::string cfs_search_name(CfsSearch s) { return s == CfsSearch::BestFirst ? "best_first" : "greedy_forward"; }

CfsSearch parse_cfs_search(const std::string& name) {
    if (name == "best_first") return CfsSearch::BestFirst;
    if (name == "greedy_forward") return CfsSearch::GreedyForward;
    throw ConfigError("unknown cfs_search '" + name + "'");
}

class Reader {
public:
    Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError(where_ + " must be an object");
    }

    template <class T>
    void operator()(const char* key, T& dst) {
        auto it = j_.find(key);
        if (it == j_.end()) return;
        seen_.insert(key);
        try {
            read(*it, dst);
        } catch (const json::exception& e) {
            throw ConfigError(where_ + "." + key + ": " + e.what());
        }
    }

    /// Nested object, handed to `body` as its own reader.
    template <class F>
    void section(const char* key, F body) {
        auto it = j_.find(key);
        if (it == j_.end()) return;
        seen_.insert(key);
        Reader inner(*it, where_ + "." + key);
        body(inner);
        inner.finish();
    }

    void finish() const {
        for (const auto& item : j_.items()) {
            if (!seen_.count(item.key())) throw ConfigError("unknown config key " + where_ + "." + item.key());
        }
    }

private:
    template <class T>
    static void read(const json& v, T& dst) {
        dst = v.get<T>();
    }
    static void read(const json& v, std::optional<int>& dst) {
        if (v.is_null()) {
            dst.reset();
        } else {
            dst = v.get<int>();
        }
    }
    static void read(const json& v, char& dst) {
        const auto s = v.get<std::string>();
        if (s.size() != 1) throw ConfigError("expected a single character, got '" + s + "'");
        dst = s[0];
    }
    static void read(const json& v, Objective& dst) { dst = parse_objective(v.get<std::string>()); }
    static void read(const json& v, CfsSearch& dst) { dst = parse_cfs_search(v.get<std::string>()); }

    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

class Writer {
public:
    explicit Writer(json& j) : j_(j) { j_ = json::object(); }

    template <class T>
    void operator()(const char* key, const T& v) {
        j_[key] = write(v);
    }

    template <class F>
    void section(const char* key, F body) {
        json inner;
        Writer w(inner);
        body(w);
        j_[key] = inner;
    }

private:
    template <class T>
    static json write(const T& v) {
        return json(v);
    }
    static json write(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }
    static json write(char v) { return json(std::string(1, v)); }
    static json write(Objective v) { return json(objective_name(v)); }
    static json write(CfsSearch v) { return json(cfs_search_name(v)); }

    json& j_;
};

// One field list per struct, shared by reading and writing.

template <class V>
void visit(V& v, SchemaConfig& c) {
    v("season", c.season);
    v("league", c.league);
    v("date", c.date);
    v("home_team", c.home_team);
    v("away_team", c.away_team);
    v("home_goals", c.home_goals);
    v("away_goals", c.away_goals);
    v("goal_diff", c.goal_diff);
    v("outcome", c.outcome);
    v("date_fallback_pattern", c.date_fallback_pattern);
    v("unplayed_sentinel", c.unplayed_sentinel);
    v("delimiter", c.delimiter);
}

template <class V>
void visit(V& v, BerrarParams& c) {
    v("alpha_h", c.alpha_h);
    v("alpha_a", c.alpha_a);
    v("beta_h", c.beta_h);
    v("beta_a", c.beta_a);
    v("gamma_h", c.gamma_h);
    v("gamma_a", c.gamma_a);
    v("omega_att_h", c.omega_att_h);
    v("omega_att_a", c.omega_att_a);
    v("omega_def_h", c.omega_def_h);
    v("omega_def_a", c.omega_def_a);
}

template <class V>
void visit(V& v, RatingConfig& c) {
    v("elo_k", c.elo_k);
    v("elo_home_adv", c.elo_home_adv);
    v("elo_initial", c.elo_initial);
    v("pi_lambda", c.pi_lambda);
    v("pi_gamma", c.pi_gamma);
    v("pi_c", c.pi_c);
    v("pi_b", c.pi_b);
    v("pi_window_seasons", c.pi_window_seasons);
    v("pagerank_damping", c.pagerank_damping);
    v("pagerank_window_seasons", c.pagerank_window_seasons);
    v("pagerank_tolerance", c.pagerank_tolerance);
    v.section("berrar", [&](auto& s) { visit(s, c.berrar); });
}

template <class V>
void visit(V& v, FeatureConfig& c) {
    v("recency_window", c.recency_window);
    v("streak_window", c.streak_window);
    v("form_kappa", c.form_kappa);
    v("last_matches_window", c.last_matches_window);
    v("venue_window_seasons", c.venue_window_seasons);
    v("league_window_seasons", c.league_window_seasons);
    v("table_depth", c.table_depth);
}

template <class V>
void visit(V& v, GbtConfig& c) {
    v("iterations", c.iterations);
    v("learning_rate", c.learning_rate);
    v("max_depth", c.max_depth);
    v("min_child_weight", c.min_child_weight);
    v("l2_leaf_reg", c.l2_leaf_reg);
    v("objective", c.objective);
    v("ordered_encoding_prior", c.ordered_encoding_prior);
    v("early_stopping_rounds", c.early_stopping_rounds);
}

template <class V>
void visit(V& v, GbtGrid& c) {
    v("learning_rate", c.learning_rate);
    v("max_depth", c.max_depth);
    v("iterations", c.iterations);
    v("l2_leaf_reg", c.l2_leaf_reg);
    v("min_child_weight", c.min_child_weight);
}

template <class V>
void visit(V& v, SelectionConfig& c) {
    v("bins", c.bins);
    v("filter_top", c.filter_top);
    v("relieff_neighbors", c.relieff_neighbors);
    v("relieff_samples", c.relieff_samples);
    v("relieff_top", c.relieff_top);
    v("max_candidates", c.max_candidates);
    v("cfs_stall_limit", c.cfs_stall_limit);
    v("cfs_search", c.cfs_search);
}

template <class V>
void visit(V& v, SplitSpec& c) {
    v("anchor_seasons", c.anchor_seasons);
    v("train_years", c.train_years);
    v("validation_rounds", c.validation_rounds);
    v("round_quantile", c.round_quantile);
    v("round_x", c.round_x);
}

template <class V>
void visit(V& v, BerrarGrid& c) {
    v("alpha", c.alpha);
    v("beta", c.beta);
    v("omega", c.omega);
}

template <class V>
void visit(V& v, PipelineConfig& c) {
    v.section("paths", [&](auto& s) {
        s("store", c.paths.store);
        s("features", c.paths.features);
        s("models", c.paths.models);
        s("reports", c.paths.reports);
    });
    v.section("schema", [&](auto& s) { visit(s, c.schema); });
    v.section("ratings", [&](auto& s) { visit(s, c.experiment.features.ratings); });
    v.section("features", [&](auto& s) { visit(s, c.experiment.features); });
    v.section("gbt", [&](auto& s) { visit(s, c.experiment.gbt); });
    v.section("grid", [&](auto& s) { visit(s, c.experiment.grid); });
    v.section("selection", [&](auto& s) { visit(s, c.selection); });
    v.section("splits", [&](auto& s) { visit(s, c.experiment.splits); });
    v.section("evaluation", [&](auto& s) {
        s("fit_berrar", c.experiment.fit_berrar);
        s("holdout_fraction", c.experiment.holdout_fraction);
        s.section("berrar_grid", [&](auto& g) { visit(g, c.experiment.berrar_grid); });
    });
    v("seed", c.seed);
    v("workers", c.workers);
}

}  // namespace

void PipelineConfig::propagate() {
    const unsigned w = workers == 0 ? default_workers() : workers;
    experiment.workers = w;
    experiment.gbt.workers = w;
    experiment.gbt.permutation_seed = seed;
    selection.workers = w;
}

void PipelineConfig::validate() const {
    experiment.validate();
    experiment.features.ratings.validate();
    selection.validate();
    std::set<std::string> seen;
    for (const auto* p : {&paths.store, &paths.features, &paths.models, &paths.reports}) {
        if (p->empty()) continue;
        if (!seen.insert(*p).second) throw ConfigError("config paths must be distinct: '" + *p + "' repeats");
    }
}

PipelineConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    PipelineConfig cfg;
    Reader r(j, "config");
    visit(r, cfg);
    r.finish();
    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return config_from_json(buf.str());
}

std::string config_to_json(const PipelineConfig& cfg) {
    PipelineConfig copy = cfg;
    json j;
    Writer w(j);
    visit(w, copy);
    return j.dump(2) + "\n";
}

}  // namespace pitchcast
