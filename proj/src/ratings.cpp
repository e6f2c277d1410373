#include "pitchcast/ratings.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "pitchcast/error.hpp"

namespace pitchcast {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_played(const MatchRecord& r) {
    if (!r.played()) {
        throw UnplayedMatch("match " + std::to_string(r.match_id) + " (" + r.home_team + " v " + r.away_team +
                            ") has no result");
    }
}

double sign(double v) { return (v > 0.0) - (v < 0.0); }

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void RatingConfig::validate() const {
    if (!(elo_k > 0.0)) throw ConfigError("elo_k must be positive");
    if (!(pi_c > 0.0)) throw ConfigError("pi_c must be positive");
    if (!(pi_b > 1.0)) throw ConfigError("pi_b must exceed 1");
    if (!(pagerank_damping > 0.0 && pagerank_damping < 1.0)) throw ConfigError("pagerank_damping must be in (0,1)");
    if (pagerank_window_seasons < 1) throw ConfigError("pagerank_window_seasons must be >= 1");
    if (pi_window_seasons < 1) throw ConfigError("pi_window_seasons must be >= 1");
}

TeamRatings::TeamRatings() : pagerank(kNaN) {}

TeamRatings::TeamRatings(const RatingConfig& cfg) : elo(cfg.elo_initial), pagerank(kNaN) {}

double elo_expected_home(const RatingPair& pair, const RatingConfig& cfg) {
    return 1.0 / (1.0 + std::pow(10.0, -(pair.home.elo + cfg.elo_home_adv - pair.away.elo) / 400.0));
}

RatingPair elo_update(RatingPair pair, const MatchRecord& result, const RatingConfig& cfg) {
    require_played(result);
    const double expected = elo_expected_home(pair, cfg);
    double actual = 0.5;
    switch (*result.outcome()) {
        case Outcome::Win: actual = 1.0; break;
        case Outcome::Draw: actual = 0.5; break;
        case Outcome::Loss: actual = 0.0; break;
    }
    const double delta = cfg.elo_k * (actual - expected);
    pair.home.elo += delta;
    pair.away.elo -= delta;
    return pair;
}

double pi_expected_margin(const RatingPair& pair, const RatingConfig& cfg) {
    auto goals = [&](double rating) { return sign(rating) * (std::pow(cfg.pi_b, std::abs(rating) / cfg.pi_c) - 1.0); };
    return goals(pair.home.pi_home) - goals(pair.away.pi_away);
}

RatingPair pi_update(RatingPair pair, const MatchRecord& result, const RatingConfig& cfg) {
    require_played(result);
    const double residual = static_cast<double>(*result.goal_diff()) - pi_expected_margin(pair, cfg);
    const double psi = cfg.pi_c * std::log1p(std::abs(residual)) / std::log(cfg.pi_b);
    const double step = psi * cfg.pi_lambda * sign(residual);
    pair.home.pi_home += step;
    pair.home.pi_away += cfg.pi_gamma * step;
    pair.away.pi_away -= step;
    pair.away.pi_home -= cfg.pi_gamma * step;
    return pair;
}

ExpectedGoals berrar_expected(const RatingPair& pair, const BerrarParams& p) {
    ExpectedGoals eg;
    eg.home = p.alpha_h * logistic(p.beta_h * (pair.home.berrar_att_home + pair.away.berrar_def_away) + p.gamma_h);
    eg.away = p.alpha_a * logistic(p.beta_a * (pair.away.berrar_att_away + pair.home.berrar_def_home) + p.gamma_a);
    return eg;
}

BerrarUpdate berrar_update(RatingPair pair, const MatchRecord& result, const RatingConfig& cfg) {
    require_played(result);
    const auto& p = cfg.berrar;
    const ExpectedGoals eg = berrar_expected(pair, p);
    const double home_residual = *result.home_goals - eg.home;
    const double away_residual = *result.away_goals - eg.away;
    pair.home.berrar_att_home += p.omega_att_h * home_residual;
    pair.away.berrar_def_away += p.omega_def_a * home_residual;
    pair.away.berrar_att_away += p.omega_att_a * away_residual;
    pair.home.berrar_def_home += p.omega_def_h * away_residual;
    return {pair, eg};
}

std::map<std::string, double> pagerank_from_matches(std::span<const MatchRecord* const> matches, double damping,
                                                    double tolerance) {
    std::set<std::string> names;
    for (const auto* m : matches) {
        if (m->played()) {
            names.insert(m->home_team);
            names.insert(m->away_team);
        }
    }
    if (names.empty()) {
        throw EmptyWindow("no played matches in the PageRank window");
    }
    const std::vector<std::string> teams(names.begin(), names.end());
    const std::size_t n = teams.size();
    auto index = [&](const std::string& t) {
        return static_cast<std::size_t>(std::lower_bound(teams.begin(), teams.end(), t) - teams.begin());
    };

    // Merge parallel edges so the iteration cost is O(edges).
    std::map<std::pair<std::size_t, std::size_t>, double> weights;
    std::vector<double> out_weight(n, 0.0);
    for (const auto* m : matches) {
        if (!m->played()) {
            continue;
        }
        const std::size_t h = index(m->home_team);
        const std::size_t a = index(m->away_team);
        const int gd = *m->goal_diff();
        if (gd == 0) {
            weights[{h, a}] += 0.5;
            weights[{a, h}] += 0.5;
            out_weight[h] += 0.5;
            out_weight[a] += 0.5;
        } else {
            const std::size_t loser = gd > 0 ? a : h;
            const std::size_t winner = gd > 0 ? h : a;
            const double w = 1.0 + std::abs(gd);
            weights[{loser, winner}] += w;
            out_weight[loser] += w;
        }
    }

    std::vector<double> rank(n, 1.0 / static_cast<double>(n));
    std::vector<double> next(n);
    for (int iter = 0; iter < 100000; ++iter) {
        double dangling = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (out_weight[i] == 0.0) {
                dangling += rank[i];
            }
        }
        const double base = (1.0 - damping) / static_cast<double>(n) + damping * dangling / static_cast<double>(n);
        std::fill(next.begin(), next.end(), base);
        for (const auto& [edge, w] : weights) {
            next[edge.second] += damping * rank[edge.first] * w / out_weight[edge.first];
        }
        double change = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            change += std::abs(next[i] - rank[i]);
        }
        rank.swap(next);
        if (change < tolerance) {
            break;
        }
    }
    double total = 0.0;
    for (double r : rank) {
        total += r;
    }
    std::map<std::string, double> scores;
    for (std::size_t i = 0; i < n; ++i) {
        scores[teams[i]] = rank[i] / total;
    }
    return scores;
}

namespace {

/// Ordinal of the league season containing `as_of`: the last season that
/// started on or before it. -1 when the league has not started yet.
int season_ordinal_at(const MatchStore& store, const std::string& league, Date as_of) {
    int ordinal = -1;
    for (const auto& s : store.league_seasons(league)) {
        if (s.first_date <= as_of) {
            ordinal = s.ordinal;
        }
    }
    return ordinal;
}

std::vector<const MatchRecord*> pagerank_window(const MatchStore& store, const std::string& league, Date as_of,
                                                int window_seasons) {
    std::vector<const MatchRecord*> window;
    const int current = season_ordinal_at(store, league, as_of);
    if (current < 0) {
        return window;
    }
    for (MatchId id : store.league_matches(league)) {
        const auto& r = store[id];
        if (r.date >= as_of) {
            break;
        }
        const int ord = store.season_ordinal(r.season);
        if (ord <= current && ord > current - window_seasons) {
            window.push_back(&r);
        }
    }
    return window;
}

}  // namespace

std::map<std::string, double> pagerank_scores(const MatchStore& store, const std::string& league, Date as_of,
                                              const RatingConfig& cfg) {
    auto window = pagerank_window(store, league, as_of, cfg.pagerank_window_seasons);
    return pagerank_from_matches(window, cfg.pagerank_damping, cfg.pagerank_tolerance);
}

TeamRatings RatingSnapshot::get(const std::string& league, const std::string& team) const {
    auto it = teams.find({league, team});
    return it == teams.end() ? TeamRatings(config) : it->second;
}

void apply_match(RatingSnapshot& snapshot, const MatchRecord& result) {
    snapshot.as_of = std::max(snapshot.as_of, result.match_id + 1);
    if (!result.played()) {
        return;
    }
    const auto& cfg = snapshot.config;
    RatingPair pair{snapshot.get(result.league, result.home_team), snapshot.get(result.league, result.away_team)};
    pair = elo_update(pair, result, cfg);
    pair = pi_update(pair, result, cfg);
    pair = berrar_update(pair, result, cfg).ratings;
    pair.home.last_updated = result.match_id;
    pair.away.last_updated = result.match_id;
    snapshot.teams[{result.league, result.home_team}] = pair.home;
    snapshot.teams[{result.league, result.away_team}] = pair.away;
}

RatingSnapshot replay(const MatchStore& store, const RatingConfig& cfg, MatchId up_to) {
    cfg.validate();
    RatingSnapshot snapshot;
    snapshot.config = cfg;
    const MatchId end = std::min<MatchId>(up_to, store.size());
    for (MatchId id = 0; id < end; ++id) {
        apply_match(snapshot, store[id]);
    }
    snapshot.as_of = up_to;

    for (const auto& league : store.leagues()) {
        Date as_of = up_to < store.size() ? store[up_to].date : store.records().back().date + std::chrono::days{1};
        auto window = pagerank_window(store, league, as_of, cfg.pagerank_window_seasons);
        bool any_played = std::any_of(window.begin(), window.end(), [](const MatchRecord* r) { return r->played(); });
        if (!any_played) {
            continue;
        }
        for (const auto& [team, score] : pagerank_from_matches(window, cfg.pagerank_damping, cfg.pagerank_tolerance)) {
            auto [it, inserted] = snapshot.teams.try_emplace({league, team}, TeamRatings(cfg));
            it->second.pagerank = score;
        }
    }
    return snapshot;
}

std::vector<PreMatchRatings> rating_timeline(const MatchStore& store, const RatingConfig& cfg) {
    cfg.validate();
    std::vector<PreMatchRatings> timeline(store.size());

    RatingSnapshot running;
    running.config = cfg;
    for (const auto& r : store.records()) {
        auto& row = timeline[r.match_id];
        row.ratings = RatingPair{running.get(r.league, r.home_team), running.get(r.league, r.away_team)};
        row.expected = berrar_expected(row.ratings, cfg.berrar);
        apply_match(running, r);
    }

    // Windowed pi replay, restarted for every league season.
    for (const auto& league : store.leagues()) {
        auto league_ids = store.league_matches(league);
        for (const auto& season : store.league_seasons(league)) {
            std::map<std::string, TeamRatings> state;
            auto get = [&](const std::string& team) {
                auto it = state.find(team);
                return it == state.end() ? TeamRatings(cfg) : it->second;
            };
            for (MatchId id : league_ids) {
                const auto& r = store[id];
                const int ord = store.season_ordinal(r.season);
                if (ord > season.ordinal || ord <= season.ordinal - cfg.pi_window_seasons) {
                    continue;
                }
                RatingPair pair{get(r.home_team), get(r.away_team)};
                if (r.season == season.season) {
                    timeline[id].pi_home_windowed = pair.home.pi_home;
                    timeline[id].pi_away_windowed = pair.away.pi_away;
                }
                if (r.played()) {
                    pair = pi_update(pair, r, cfg);
                    state[r.home_team] = pair.home;
                    state[r.away_team] = pair.away;
                }
            }
        }
    }

    // PageRank depends only on (league, date), so cache per pair.
    std::map<std::pair<std::string, Date>, std::map<std::string, double>> cache;
    for (const auto& r : store.records()) {
        auto key = std::make_pair(r.league, r.date);
        auto it = cache.find(key);
        if (it == cache.end()) {
            auto window = pagerank_window(store, r.league, r.date, cfg.pagerank_window_seasons);
            std::map<std::string, double> scores;
            if (std::any_of(window.begin(), window.end(), [](const MatchRecord* m) { return m->played(); })) {
                scores = pagerank_from_matches(window, cfg.pagerank_damping, cfg.pagerank_tolerance);
            }
            it = cache.emplace(key, std::move(scores)).first;
        }
        auto lookup = [&](const std::string& team) {
            auto s = it->second.find(team);
            return s == it->second.end() ? kNaN : s->second;
        };
        timeline[r.match_id].pagerank_home = lookup(r.home_team);
        timeline[r.match_id].pagerank_away = lookup(r.away_team);
        timeline[r.match_id].ratings.home.pagerank = timeline[r.match_id].pagerank_home;
        timeline[r.match_id].ratings.away.pagerank = timeline[r.match_id].pagerank_away;
    }
    return timeline;
}

BerrarFit fit_berrar(const MatchStore& store, std::span<const MatchId> train_ids, const RatingConfig& base,
                     const BerrarGrid& grid) {
    std::vector<char> in_train(store.size(), 0);
    MatchId last = 0;
    double home_sum = 0.0, away_sum = 0.0;
    std::size_t count = 0;
    for (MatchId id : train_ids) {
        if (!store[id].played()) {
            continue;
        }
        in_train[id] = 1;
        last = std::max(last, id);
        home_sum += *store[id].home_goals;
        away_sum += *store[id].away_goals;
        ++count;
    }
    if (count == 0) {
        throw EmptyInput("no played training matches to fit Berrar ratings");
    }
    const double home_mean = std::max(home_sum / count, 0.05);
    const double away_mean = std::max(away_sum / count, 0.05);

    BerrarFit best;
    best.rmse = std::numeric_limits<double>::infinity();
    for (double alpha : grid.alpha) {
        if (alpha <= home_mean || alpha <= away_mean) {
            continue;
        }
        for (double beta : grid.beta) {
            for (double omega : grid.omega) {
                BerrarParams p;
                p.alpha_h = p.alpha_a = alpha;
                p.beta_h = p.beta_a = beta;
                p.gamma_h = -std::log(alpha / home_mean - 1.0);
                p.gamma_a = -std::log(alpha / away_mean - 1.0);
                p.omega_att_h = p.omega_att_a = p.omega_def_h = p.omega_def_a = omega;
                RatingConfig cfg = base;
                cfg.berrar = p;

                std::map<TeamKey, TeamRatings> state;
                double sse = 0.0;
                for (MatchId id = 0; id <= last; ++id) {
                    const auto& r = store[id];
                    if (!r.played()) {
                        continue;
                    }
                    auto& home = state.try_emplace({r.league, r.home_team}, TeamRatings(cfg)).first->second;
                    auto& away = state.try_emplace({r.league, r.away_team}, TeamRatings(cfg)).first->second;
                    auto upd = berrar_update(RatingPair{home, away}, r, cfg);
                    if (in_train[id]) {
                        sse += std::pow(*r.home_goals - upd.expected.home, 2) +
                               std::pow(*r.away_goals - upd.expected.away, 2);
                    }
                    home = upd.ratings.home;
                    away = upd.ratings.away;
                }
                const double rmse = std::sqrt(sse / (2.0 * count));
                if (rmse < best.rmse) {
                    best.rmse = rmse;
                    best.params = p;
                }
            }
        }
    }
    if (!std::isfinite(best.rmse)) {
        throw ConfigError("Berrar grid has no alpha above the mean goal count");
    }
    return best;
}

}  // namespace pitchcast
