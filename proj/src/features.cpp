#include "pitchcast/features.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <json.hpp>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "pitchcast/csv.hpp"
#include "pitchcast/error.hpp"
#include "pitchcast/parallel.hpp"

namespace pitchcast {

namespace {

const std::string& team_of(const MatchRecord& r, Side side) { return side == Side::Home ? r.home_team : r.away_team; }

int goals_for(const MatchRecord& r, const std::string& team) {
    return r.home_team == team ? *r.home_goals : *r.away_goals;
}

int goals_against(const MatchRecord& r, const std::string& team) {
    return r.home_team == team ? *r.away_goals : *r.home_goals;
}

int points_for(const MatchRecord& r, const std::string& team) {
    const int diff = goals_for(r, team) - goals_against(r, team);
    return diff > 0 ? 3 : diff == 0 ? 1 : 0;
}

/// Played matches of `team` (any league) with id < before, chronological.
std::vector<MatchId> prior_played(const MatchStore& store, const std::string& team, MatchId before) {
    std::vector<MatchId> out;
    for (MatchId id : store.team_matches(team)) {
        if (id >= before) {
            break;
        }
        if (store[id].played()) {
            out.push_back(id);
        }
    }
    return out;
}

/// Last `n` entries (or fewer).
std::span<const MatchId> last_n(const std::vector<MatchId>& ids, std::size_t n) {
    const std::size_t k = std::min(n, ids.size());
    return std::span<const MatchId>(ids).subspan(ids.size() - k, k);
}

struct Moments {
    double count = 0.0;
    double sum = 0.0;
    double sum_sq = 0.0;

    void add(double v) {
        count += 1.0;
        sum += v;
        sum_sq += v * v;
    }
    double mean() const { return count > 0 ? sum / count : kMissing; }
    /// Population standard deviation.
    double stddev() const {
        if (count <= 0) return kMissing;
        const double m = sum / count;
        return std::sqrt(std::max(0.0, sum_sq / count - m * m));
    }
};

struct Ratio {
    double hits = 0.0;
    double total = 0.0;
    void add(bool hit) {
        total += 1.0;
        hits += hit ? 1.0 : 0.0;
    }
    double value() const { return total > 0 ? hits / total : kMissing; }
};

/// Trailing integer of a league code ("ENG2" -> 2), or -1.
int league_tier(const std::string& code) {
    std::size_t pos = code.size();
    while (pos > 0 && std::isdigit(static_cast<unsigned char>(code[pos - 1]))) {
        --pos;
    }
    if (pos == code.size()) {
        return -1;
    }
    int tier = -1;
    std::from_chars(code.data() + pos, code.data() + code.size(), tier);
    return tier;
}

std::string suffixed(const std::string& base, Side side) { return base + (side == Side::Home ? "_HT" : "_AT"); }

}  // namespace

double value_of(const NamedValues& values, const std::string& name) {
    for (const auto& [n, v] : values) {
        if (n == name) {
            return v;
        }
    }
    throw UnknownFeature("no value named '" + name + "'");
}

void FeatureConfig::validate() const {
    ratings.validate();
    if (recency_window < 1 || streak_window < 1 || last_matches_window < 1 || venue_window_seasons < 1 ||
        league_window_seasons < 1 || table_depth < 1) {
        throw ConfigError("feature windows must be >= 1");
    }
    if (!(form_kappa > 0.0 && form_kappa < 1.0)) {
        throw ConfigError("form_kappa must be in (0,1)");
    }
}

// ---------------------------------------------------------------------------
// Catalog

namespace {

std::vector<std::string> make_team_feature_names() {
    std::vector<std::string> names{"GD", "GS", "GC", "elo", "Streak", "Weighted_Streak", "Form"};
    for (const char* group : {"attacking_strength_", "defensive_strength_", "strength_opposition_", "home_advantage_"}) {
        for (int i = 1; i <= 9; ++i) {
            names.push_back(group + std::to_string(i));
        }
    }
    for (const char* n : {"H_Off_Rating", "H_Def_Rating", "A_Off_Rating", "A_Def_Rating", "EG", "newly_promoted",
                          "newly_demoted", "days_since_previous", "Form2", "point_tally", "point_per_match",
                          "previous_point_tally", "previous_GS", "previous_GC", "previous_GD"}) {
        names.push_back(n);
    }
    for (int i = 1; i <= 5; ++i) names.push_back("L_up_" + std::to_string(i));
    for (int i = 1; i <= 5; ++i) names.push_back("L_down_" + std::to_string(i));
    for (const char* n :
         {"Home_venue_win_pct", "Away_venue_win_pct", "win_pct", "Home_venue_draw_pct", "Away_venue_draw_pct",
          "draw_pct", "Home_venue_GS_avg", "Away_venue_GS_avg", "GS_avg", "Home_venue_GC_avg", "Away_venue_GC_avg",
          "GC_avg", "home_venue_goal_difference_avg", "away_venue_goal_difference_avg", "goal_difference_avg",
          "Home_venue_GS_std", "Away_venue_GS_std", "GS_std", "Home_venue_GC_std", "Away_venue_GC_std", "GC_std",
          "home_venue_goal_difference_std", "away_venue_goal_difference_std", "goal_difference_std",
          "win_pct_last5", "draw_pct_last5", "GS_AVG", "GC_AVG", "GS_STD", "GC_STD", "PageRank", "pi_rating"}) {
        names.push_back(n);
    }
    return names;
}

}  // namespace

const std::vector<std::string>& team_feature_names() {
    static const std::vector<std::string> names = make_team_feature_names();
    return names;
}

const std::vector<std::string>& match_feature_names() {
    static const std::vector<std::string> names{"days_since_first_match",
                                                "quarter",
                                                "home_venue_goal_scores_avg",
                                                "away_venue_goal_scores_avg",
                                                "home_venue_goal_scores_std",
                                                "away_venue_goal_scores_std",
                                                "home_venue_win_pct",
                                                "home_venue_draw_pct",
                                                "team_cnt",
                                                "gd_std",
                                                "rnd_cnt",
                                                "Round"};
    return names;
}

const std::vector<std::string>& feature_catalog() {
    static const std::vector<std::string> catalog = [] {
        std::vector<std::string> out;
        for (const auto& base : team_feature_names()) {
            out.push_back(base + "_HT");
            out.push_back(base + "_AT");
        }
        for (const auto& n : match_feature_names()) {
            out.push_back(n);
        }
        return out;
    }();
    return catalog;
}

const std::map<std::string, std::vector<std::string>>& feature_presets() {
    static const std::map<std::string, std::vector<std::string>> presets{
        {"table8_wdl", {"EG_HT", "EG_AT", "point_per_match_HT", "win_pct_AT", "pi_rating_HT", "pi_rating_AT"}},
        {"table8_home_goals", {"EG_HT", "GS_avg_HT"}},
        {"table8_away_goals", {"Home_venue_GS_avg_AT", "GC_avg_HT", "pi_rating_AT", "GC_AVG_HT", "previous_GD_AT"}},
        {"pi_ratings", {"pi_rating_HT", "pi_rating_AT"}},
        {"berrar_ratings",
         {"H_Off_Rating_HT", "H_Def_Rating_HT", "A_Off_Rating_HT", "A_Def_Rating_HT", "H_Off_Rating_AT",
          "H_Def_Rating_AT", "A_Off_Rating_AT", "A_Def_Rating_AT", "EG_HT", "EG_AT"}},
    };
    return presets;
}

std::vector<std::string> resolve_feature_spec(const std::string& spec) {
    if (spec == "all") {
        return feature_catalog();
    }
    if (auto it = feature_presets().find(spec); it != feature_presets().end()) {
        return it->second;
    }
    const auto& catalog = feature_catalog();
    std::vector<std::string> names;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        while (!item.empty() && std::isspace(static_cast<unsigned char>(item.back()))) item.pop_back();
        while (!item.empty() && std::isspace(static_cast<unsigned char>(item.front()))) item.erase(item.begin());
        if (item.empty()) {
            continue;
        }
        if (std::find(catalog.begin(), catalog.end(), item) == catalog.end()) {
            throw UnknownFeature("unknown feature '" + item + "'");
        }
        if (std::find(names.begin(), names.end(), item) == names.end()) {
            names.push_back(item);
        }
    }
    return names;
}

// ---------------------------------------------------------------------------
// Feature groups

NamedValues season_cumulatives(const MatchStore& store, MatchId match_id, Side side) {
    const auto& match = store[match_id];
    const std::string& team = team_of(match, side);

    double gs = 0, gc = 0, points = 0, played = 0;
    for (MatchId id : store.league_team_matches(match.league, team)) {
        if (id >= match_id) break;
        const auto& r = store[id];
        if (r.season != match.season || !r.played()) continue;
        gs += goals_for(r, team);
        gc += goals_against(r, team);
        points += points_for(r, team);
        played += 1;
    }

    const auto history = prior_played(store, team, match_id);
    double form2 = kMissing;
    if (history.size() >= 3) {
        double p = 0;
        for (MatchId id : last_n(history, 3)) p += points_for(store[id], team);
        form2 = p / 9.0;
    }

    double days_since_previous = kMissing;
    for (MatchId id : store.team_matches(team)) {
        if (id >= match_id) break;
        days_since_previous = static_cast<double>(days_between(store[id].date, match.date));
    }

    // Previous season, any league.
    const int ordinal = store.season_ordinal(match.season);
    double prev_points = 0, prev_gs = 0, prev_gc = 0, prev_count = 0;
    std::string prev_league;
    for (MatchId id : history) {
        const auto& r = store[id];
        if (store.season_ordinal(r.season) != ordinal - 1) continue;
        prev_points += points_for(r, team);
        prev_gs += goals_for(r, team);
        prev_gc += goals_against(r, team);
        prev_count += 1;
        prev_league = r.league;
    }
    const bool has_prev = prev_count > 0;

    double promoted = kMissing, demoted = kMissing;
    if (has_prev) {
        if (prev_league == match.league) {
            promoted = demoted = 0.0;
        } else {
            const int from = league_tier(prev_league), to = league_tier(match.league);
            if (from >= 0 && to >= 0 && from != to) {
                promoted = from > to ? 1.0 : 0.0;
                demoted = from < to ? 1.0 : 0.0;
            }
        }
    } else {
        // Absent last season while the league played: the team came up from
        // outside the store.
        bool league_played_prev = false;
        for (const auto& s : store.league_seasons(match.league)) {
            league_played_prev = league_played_prev || (s.ordinal == ordinal - 1 && s.matches.front() < match_id);
        }
        if (league_played_prev) {
            promoted = 1.0;
            demoted = 0.0;
        }
    }

    return {{"GD", gs - gc},
            {"GS", gs},
            {"GC", gc},
            {"point_tally", points},
            {"point_per_match", played > 0 ? points / played : kMissing},
            {"Form2", form2},
            {"days_since_previous", days_since_previous},
            {"newly_promoted", promoted},
            {"newly_demoted", demoted},
            {"previous_point_tally", has_prev ? prev_points : kMissing},
            {"previous_GS", has_prev ? prev_gs : kMissing},
            {"previous_GC", has_prev ? prev_gc : kMissing},
            {"previous_GD", has_prev ? prev_gs - prev_gc : kMissing}};
}

namespace {

/// Baboota form of both teams before the match, replayed over the
/// league-season from 1.0.
std::pair<double, double> form_before(const MatchStore& store, MatchId match_id, double kappa) {
    const auto& match = store[match_id];
    std::map<std::string, double> form;
    auto get = [&](const std::string& t) -> double& { return form.try_emplace(t, 1.0).first->second; };
    const auto* season = store.league_season(match.league, match.season);
    for (MatchId id : season->matches) {
        if (id >= match_id) break;
        const auto& r = store[id];
        if (!r.played()) continue;
        double& h = get(r.home_team);
        double& a = get(r.away_team);
        const int gd = *r.goal_diff();
        if (gd > 0) {
            const double moved = kappa * a;
            h += moved;
            a -= moved;
        } else if (gd < 0) {
            const double moved = kappa * h;
            a += moved;
            h -= moved;
        } else {
            const double diff = h - a;
            h -= kappa * diff;
            a += kappa * diff;
        }
    }
    return {get(match.home_team), get(match.away_team)};
}

}  // namespace

NamedValues streak_features(const MatchStore& store, MatchId match_id, Side side, int n, double form_kappa) {
    const auto& match = store[match_id];
    const std::string& team = team_of(match, side);
    const auto history = prior_played(store, team, match_id);

    double streak = kMissing, weighted = kMissing;
    if (history.size() >= static_cast<std::size_t>(n)) {
        double sum = 0.0, wsum = 0.0;
        int position = 1;  // 1 = oldest in the window
        for (MatchId id : last_n(history, static_cast<std::size_t>(n))) {
            const int pts = points_for(store[id], team);
            sum += pts;
            wsum += 2.0 * position * pts;
            ++position;
        }
        streak = sum / (3.0 * n);
        weighted = wsum / (3.0 * n * (n + 1));
    }
    const auto form = form_before(store, match_id, form_kappa);
    return {{"Streak", streak}, {"Weighted_Streak", weighted}, {"Form", side == Side::Home ? form.first : form.second}};
}

NamedValues venue_stats(const MatchStore& store, MatchId match_id, Side side, const FeatureConfig& cfg) {
    const auto& match = store[match_id];
    const std::string& team = team_of(match, side);
    const int ordinal = store.season_ordinal(match.season);
    const auto history = prior_played(store, team, match_id);

    Ratio win[3], draw[3];  // home venue, away venue, overall
    Moments gs[3], gc[3], gd[3];
    for (MatchId id : history) {
        const auto& r = store[id];
        const int ord = store.season_ordinal(r.season);
        if (ord > ordinal || ord <= ordinal - cfg.venue_window_seasons) continue;
        const int venue = r.home_team == team ? 0 : 1;
        const int f = goals_for(r, team), a = goals_against(r, team);
        for (int slot : {venue, 2}) {
            win[slot].add(f > a);
            draw[slot].add(f == a);
            gs[slot].add(f);
            gc[slot].add(a);
            gd[slot].add(f - a);
        }
    }

    Ratio win5, draw5;
    Moments gs5, gc5;
    for (MatchId id : last_n(history, static_cast<std::size_t>(cfg.last_matches_window))) {
        const auto& r = store[id];
        const int f = goals_for(r, team), a = goals_against(r, team);
        win5.add(f > a);
        draw5.add(f == a);
        gs5.add(f);
        gc5.add(a);
    }

    NamedValues out{{"Home_venue_win_pct", win[0].value()},
                    {"Away_venue_win_pct", win[1].value()},
                    {"win_pct", win[2].value()},
                    {"Home_venue_draw_pct", draw[0].value()},
                    {"Away_venue_draw_pct", draw[1].value()},
                    {"draw_pct", draw[2].value()},
                    {"Home_venue_GS_avg", gs[0].mean()},
                    {"Away_venue_GS_avg", gs[1].mean()},
                    {"GS_avg", gs[2].mean()},
                    {"Home_venue_GC_avg", gc[0].mean()},
                    {"Away_venue_GC_avg", gc[1].mean()},
                    {"GC_avg", gc[2].mean()},
                    {"home_venue_goal_difference_avg", gd[0].mean()},
                    {"away_venue_goal_difference_avg", gd[1].mean()},
                    {"goal_difference_avg", gd[2].mean()},
                    {"Home_venue_GS_std", gs[0].stddev()},
                    {"Away_venue_GS_std", gs[1].stddev()},
                    {"GS_std", gs[2].stddev()},
                    {"Home_venue_GC_std", gc[0].stddev()},
                    {"Away_venue_GC_std", gc[1].stddev()},
                    {"GC_std", gc[2].stddev()},
                    {"home_venue_goal_difference_std", gd[0].stddev()},
                    {"away_venue_goal_difference_std", gd[1].stddev()},
                    {"goal_difference_std", gd[2].stddev()},
                    {"win_pct_last5", win5.value()},
                    {"draw_pct_last5", draw5.value()},
                    {"GS_AVG", gs5.mean()},
                    {"GC_AVG", gc5.mean()},
                    {"GS_STD", gs5.stddev()},
                    {"GC_STD", gc5.stddev()}};

    // League table of this league-season from earlier matches.
    struct Standing {
        std::string team;
        int points = 0;
        int gd = 0;
        int gs = 0;
    };
    std::map<std::string, Standing> table;
    table[match.home_team].team = match.home_team;
    table[match.away_team].team = match.away_team;
    for (MatchId id : store.league_season(match.league, match.season)->matches) {
        if (id >= match_id) break;
        const auto& r = store[id];
        for (const auto* t : {&r.home_team, &r.away_team}) {
            auto& s = table[*t];
            s.team = *t;
            if (r.played()) {
                s.points += points_for(r, *t);
                s.gd += goals_for(r, *t) - goals_against(r, *t);
                s.gs += goals_for(r, *t);
            }
        }
    }
    std::vector<Standing> ranked;
    for (auto& [name, s] : table) ranked.push_back(s);
    std::sort(ranked.begin(), ranked.end(), [](const Standing& a, const Standing& b) {
        if (a.points != b.points) return a.points > b.points;
        if (a.gd != b.gd) return a.gd > b.gd;
        if (a.gs != b.gs) return a.gs > b.gs;
        return a.team < b.team;
    });
    const double own = table[team].points;
    for (int i = 1; i <= cfg.table_depth; ++i) {
        double v = kMissing;
        if (ranked.size() >= static_cast<std::size_t>(i)) {
            double top = 0;
            for (int k = 0; k < i; ++k) top += ranked[k].points;
            v = own - top / i;
        }
        out.emplace_back("L_up_" + std::to_string(i), v);
    }
    for (int i = 1; i <= cfg.table_depth; ++i) {
        double v = kMissing;
        if (ranked.size() >= static_cast<std::size_t>(i)) {
            double bottom = 0;
            for (int k = 0; k < i; ++k) bottom += ranked[ranked.size() - 1 - k].points;
            v = own - bottom / i;
        }
        out.emplace_back("L_down_" + std::to_string(i), v);
    }
    return out;
}

namespace {

struct RecencySlot {
    double attack = kMissing;
    double defense = kMissing;
    double opposition = kMissing;
    double advantage = kMissing;
};

/// Average goal difference of `team` over its last n played matches before
/// `before`; 0 without history.
double average_goal_difference(const MatchStore& store, const std::string& team, MatchId before, int n) {
    const auto history = prior_played(store, team, before);
    const auto window = last_n(history, static_cast<std::size_t>(n));
    if (window.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (MatchId id : window) total += goals_for(store[id], team) - goals_against(store[id], team);
    return total / static_cast<double>(window.size());
}

/// Slots t-1 .. t-n of the team's recent played matches.
std::vector<RecencySlot> recency_slots(const MatchStore& store, MatchId match_id, const std::string& team, int n) {
    const auto history = prior_played(store, team, match_id);
    std::vector<RecencySlot> slots(static_cast<std::size_t>(n));
    for (int i = 1; i <= n && static_cast<std::size_t>(i) <= history.size(); ++i) {
        const auto& r = store[history[history.size() - i]];
        const bool home = r.home_team == team;
        const std::string& opponent = home ? r.away_team : r.home_team;
        auto& s = slots[i - 1];
        s.attack = goals_for(r, team);
        s.defense = goals_against(r, team);
        s.opposition = average_goal_difference(store, opponent, r.match_id, n);
        s.advantage = home ? 1.0 : -1.0;
    }
    return slots;
}

}  // namespace

NamedValues recency_features(const MatchStore& store, MatchId match_id, Side side, int n) {
    const auto slots = recency_slots(store, match_id, team_of(store[match_id], side), n);
    NamedValues out;
    for (int i = 1; i <= n; ++i) out.emplace_back("attacking_strength_" + std::to_string(i), slots[i - 1].attack);
    for (int i = 1; i <= n; ++i) out.emplace_back("defensive_strength_" + std::to_string(i), slots[i - 1].defense);
    for (int i = 1; i <= n; ++i)
        out.emplace_back("strength_opposition_" + std::to_string(i), slots[i - 1].opposition);
    for (int i = 1; i <= n; ++i) out.emplace_back("home_advantage_" + std::to_string(i), slots[i - 1].advantage);
    return out;
}

namespace {

NamedValues rating_values(const TeamRatings& t, double pi, double eg, double pagerank) {
    return {{"elo", t.elo},
            {"pi_rating", pi},
            {"H_Off_Rating", t.berrar_att_home},
            {"H_Def_Rating", t.berrar_def_home},
            {"A_Off_Rating", t.berrar_att_away},
            {"A_Def_Rating", t.berrar_def_away},
            {"EG", eg},
            {"PageRank", pagerank}};
}

}  // namespace

NamedValues rating_features(const MatchStore& store, const RatingSnapshot& snapshot, MatchId match_id, Side side) {
    if (snapshot.as_of != match_id) {
        throw StaleSnapshot("snapshot is as of match " + std::to_string(snapshot.as_of) + ", features requested for " +
                            std::to_string(match_id));
    }
    const auto& match = store[match_id];
    const auto& cfg = snapshot.config;
    const RatingPair pair{snapshot.get(match.league, match.home_team), snapshot.get(match.league, match.away_team)};
    const auto eg = berrar_expected(pair, cfg.berrar);

    // pi-rating restricted to the league's recent seasons.
    const int ordinal = store.season_ordinal(match.season);
    std::map<std::string, TeamRatings> pi_state;
    auto get = [&](const std::string& t) {
        auto it = pi_state.find(t);
        return it == pi_state.end() ? TeamRatings(cfg) : it->second;
    };
    for (MatchId id : store.league_matches(match.league)) {
        if (id >= match_id) break;
        const auto& r = store[id];
        const int ord = store.season_ordinal(r.season);
        if (!r.played() || ord > ordinal || ord <= ordinal - cfg.pi_window_seasons) continue;
        auto updated = pi_update(RatingPair{get(r.home_team), get(r.away_team)}, r, cfg);
        pi_state[r.home_team] = updated.home;
        pi_state[r.away_team] = updated.away;
    }

    if (side == Side::Home) {
        return rating_values(pair.home, get(match.home_team).pi_home, eg.home, pair.home.pagerank);
    }
    return rating_values(pair.away, get(match.away_team).pi_away, eg.away, pair.away.pagerank);
}

NamedValues match_features(const MatchStore& store, MatchId match_id, const FeatureConfig& cfg) {
    const auto& match = store[match_id];
    const auto* season = store.league_season(match.league, match.season);
    const int ordinal = store.season_ordinal(match.season);

    Moments home_goals, away_goals, goal_diff;
    Ratio home_wins, draws;
    for (MatchId id : store.league_matches(match.league)) {
        if (id >= match_id) break;
        const auto& r = store[id];
        const int ord = store.season_ordinal(r.season);
        if (!r.played() || ord > ordinal || ord <= ordinal - cfg.league_window_seasons) continue;
        home_goals.add(*r.home_goals);
        away_goals.add(*r.away_goals);
        goal_diff.add(*r.goal_diff());
        home_wins.add(*r.goal_diff() > 0);
        draws.add(*r.goal_diff() == 0);
    }

    double team_cnt = kMissing, rnd_cnt = kMissing;
    const SeasonSpan* previous = nullptr;
    for (const auto& s : store.league_seasons(match.league)) {
        if (s.ordinal < season->ordinal) previous = &s;
    }
    if (previous != nullptr) {
        std::set<std::string> teams;
        int max_round = 0;
        for (MatchId id : previous->matches) {
            teams.insert(store[id].home_team);
            teams.insert(store[id].away_team);
            max_round = std::max(max_round, store[id].round);
        }
        team_cnt = static_cast<double>(teams.size());
        rnd_cnt = max_round;
    }

    return {{"days_since_first_match", static_cast<double>(days_between(season->first_date, match.date))},
            {"quarter", static_cast<double>(quarter_of(match.date))},
            {"home_venue_goal_scores_avg", home_goals.mean()},
            {"away_venue_goal_scores_avg", away_goals.mean()},
            {"home_venue_goal_scores_std", home_goals.stddev()},
            {"away_venue_goal_scores_std", away_goals.stddev()},
            {"home_venue_win_pct", home_wins.value()},
            {"home_venue_draw_pct", draws.value()},
            {"team_cnt", team_cnt},
            {"gd_std", goal_diff.stddev()},
            {"rnd_cnt", rnd_cnt},
            {"Round", static_cast<double>(match.round)}};
}

// ---------------------------------------------------------------------------
// Builder

FeatureBuilder::FeatureBuilder(const MatchStore& store, FeatureConfig cfg)
    : store_(store), cfg_(std::move(cfg)), timeline_(rating_timeline(store, cfg_.ratings)) {
    cfg_.validate();
}

std::vector<double> FeatureBuilder::catalog_row(MatchId match_id) const {
    const auto& pre = timeline_.at(match_id);
    std::map<std::string, double> values;
    auto absorb = [&](const NamedValues& nv, Side side) {
        for (const auto& [name, v] : nv) values[suffixed(name, side)] = v;
    };
    for (Side side : {Side::Home, Side::Away}) {
        absorb(season_cumulatives(store_, match_id, side), side);
        absorb(streak_features(store_, match_id, side, cfg_.streak_window, cfg_.form_kappa), side);
        absorb(venue_stats(store_, match_id, side, cfg_), side);
        absorb(recency_features(store_, match_id, side, cfg_.recency_window), side);
        const bool home = side == Side::Home;
        absorb(rating_values(home ? pre.ratings.home : pre.ratings.away,
                             home ? pre.pi_home_windowed : pre.pi_away_windowed,
                             home ? pre.expected.home : pre.expected.away,
                             home ? pre.pagerank_home : pre.pagerank_away),
               side);
    }
    for (const auto& [name, v] : match_features(store_, match_id, cfg_)) values[name] = v;

    const auto& catalog = feature_catalog();
    std::vector<double> row(catalog.size(), kMissing);
    for (std::size_t c = 0; c < catalog.size(); ++c) {
        auto it = values.find(catalog[c]);
        if (it != values.end()) row[c] = it->second;
    }
    return row;
}

FeatureMatrix FeatureBuilder::build(std::span<const MatchId> match_ids, const std::vector<std::string>& names,
                                    unsigned workers) const {
    const auto& catalog = feature_catalog();
    std::vector<std::size_t> positions;
    for (const auto& n : names) {
        auto it = std::find(catalog.begin(), catalog.end(), n);
        if (it == catalog.end()) throw UnknownFeature("unknown feature '" + n + "'");
        positions.push_back(static_cast<std::size_t>(it - catalog.begin()));
    }

    FeatureMatrix m;
    m.names = names;
    m.match_ids.assign(match_ids.begin(), match_ids.end());
    m.columns.assign(names.size(), std::vector<double>(match_ids.size(), kMissing));
    m.home_goals.assign(match_ids.size(), kMissing);
    m.away_goals.assign(match_ids.size(), kMissing);
    m.outcome.assign(match_ids.size(), kMissing);

    parallel_for(match_ids.size(), workers, [&](std::size_t row) {
        const MatchId id = match_ids[row];
        if (id >= store_.size()) throw InputError("match id " + std::to_string(id) + " is outside the store");
        const auto values = catalog_row(id);
        for (std::size_t c = 0; c < positions.size(); ++c) m.columns[c][row] = values[positions[c]];
        const auto& r = store_[id];
        if (r.played()) {
            m.home_goals[row] = *r.home_goals;
            m.away_goals[row] = *r.away_goals;
            m.outcome[row] = static_cast<double>(*r.outcome());
        }
    });
    return m;
}

// ---------------------------------------------------------------------------
// FeatureMatrix

int FeatureMatrix::index_of(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

const std::vector<double>& FeatureMatrix::column(const std::string& name) const {
    const int i = index_of(name);
    if (i < 0) throw UnknownFeature("matrix has no column '" + name + "'");
    return columns[static_cast<std::size_t>(i)];
}

const std::vector<double>& FeatureMatrix::column_or_target(const std::string& name) const {
    if (name == "home_goals" && !home_goals.empty()) return home_goals;
    if (name == "away_goals" && !away_goals.empty()) return away_goals;
    if (name == "outcome" && !outcome.empty()) return outcome;
    return column(name);
}

FeatureMatrix FeatureMatrix::select(const std::vector<std::string>& wanted) const {
    FeatureMatrix out;
    out.match_ids = match_ids;
    out.home_goals = home_goals;
    out.away_goals = away_goals;
    out.outcome = outcome;
    for (const auto& n : wanted) {
        if (int i = index_of(n); i >= 0) {
            out.names.push_back(n);
            out.columns.push_back(columns[static_cast<std::size_t>(i)]);
            continue;
        }
        auto it = std::find(categorical_names.begin(), categorical_names.end(), n);
        if (it == categorical_names.end()) throw UnknownFeature("matrix has no column '" + n + "'");
        out.categorical_names.push_back(n);
        out.categorical.push_back(categorical[static_cast<std::size_t>(it - categorical_names.begin())]);
    }
    return out;
}

FeatureMatrix FeatureMatrix::take_rows(std::span<const std::size_t> positions) const {
    auto pick = [&](const auto& src) {
        std::remove_cvref_t<decltype(src)> dst;
        if (src.empty()) return dst;
        dst.reserve(positions.size());
        for (std::size_t p : positions) dst.push_back(src.at(p));
        return dst;
    };
    FeatureMatrix out;
    out.names = names;
    out.categorical_names = categorical_names;
    out.match_ids = pick(match_ids);
    for (const auto& c : columns) out.columns.push_back(pick(c));
    for (const auto& c : categorical) out.categorical.push_back(pick(c));
    out.home_goals = pick(home_goals);
    out.away_goals = pick(away_goals);
    out.outcome = pick(outcome);
    return out;
}

void write_matrix_csv(std::ostream& out, const FeatureMatrix& m) {
    std::vector<std::string> header{"match_id"};
    header.insert(header.end(), m.names.begin(), m.names.end());
    header.insert(header.end(), m.categorical_names.begin(), m.categorical_names.end());
    if (m.has_targets()) {
        header.insert(header.end(), {"home_goals", "away_goals", "outcome"});
    }
    csv::write_row(out, header);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        std::vector<std::string> row{std::to_string(m.match_ids[r])};
        for (const auto& c : m.columns) row.push_back(csv::format_double(c[r]));
        for (const auto& c : m.categorical) row.push_back(c[r]);
        if (m.has_targets()) {
            row.push_back(csv::format_double(m.home_goals[r]));
            row.push_back(csv::format_double(m.away_goals[r]));
            row.push_back(is_missing(m.outcome[r]) ? std::string{}
                                                   : std::string(1, outcome_code(static_cast<Outcome>(
                                                                        static_cast<int>(m.outcome[r])))));
        }
        csv::write_row(out, row);
    }
}

namespace {

bool parse_double(const std::string& text, double& out) {
    if (text.empty()) {
        out = kMissing;
        return true;
    }
    auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    return res.ec == std::errc{} && res.ptr == text.data() + text.size();
}

}  // namespace

FeatureMatrix read_matrix_csv(std::istream& in) {
    std::string line;
    if (!csv::next_line(in, line)) throw SchemaError("feature file is empty");
    const auto header = csv::split_line(line);
    if (header.empty() || header[0] != "match_id") throw SchemaError("feature file must start with match_id");

    std::vector<std::vector<std::string>> cells(header.size());
    std::size_t line_no = 1;
    while (csv::next_line(in, line)) {
        ++line_no;
        auto fields = csv::split_line(line);
        if (fields.size() != header.size()) {
            throw RowError("feature file line " + std::to_string(line_no) + ": expected " +
                           std::to_string(header.size()) + " fields");
        }
        for (std::size_t c = 0; c < fields.size(); ++c) cells[c].push_back(std::move(fields[c]));
    }

    FeatureMatrix m;
    for (const auto& v : cells[0]) {
        double id;
        if (!parse_double(v, id) || is_missing(id) || id < 0) throw RowError("bad match_id '" + v + "'");
        m.match_ids.push_back(static_cast<MatchId>(id));
    }
    bool targets = false;
    for (std::size_t c = 1; c < header.size(); ++c) {
        const auto& name = header[c];
        if (name == "outcome") {
            targets = true;
            for (const auto& v : cells[c]) {
                if (v.empty()) {
                    m.outcome.push_back(kMissing);
                    continue;
                }
                auto o = parse_outcome(v);
                double numeric;
                if (o) {
                    m.outcome.push_back(static_cast<double>(*o));
                } else if (parse_double(v, numeric) && numeric >= 0 && numeric <= 2) {
                    m.outcome.push_back(numeric);
                } else {
                    throw RowError("bad outcome '" + v + "'");
                }
            }
            continue;
        }
        std::vector<double> numeric;
        bool all_numeric = true;
        for (const auto& v : cells[c]) {
            double d;
            if (!parse_double(v, d)) {
                all_numeric = false;
                break;
            }
            numeric.push_back(d);
        }
        if (name == "home_goals" || name == "away_goals") {
            if (!all_numeric) throw RowError("non-numeric " + name);
            (name == "home_goals" ? m.home_goals : m.away_goals) = std::move(numeric);
            continue;
        }
        if (all_numeric) {
            m.names.push_back(name);
            m.columns.push_back(std::move(numeric));
        } else {
            m.categorical_names.push_back(name);
            m.categorical.push_back(std::move(cells[c]));
        }
    }
    if (targets) {
        if (m.home_goals.empty()) m.home_goals.assign(m.rows(), kMissing);
        if (m.away_goals.empty()) m.away_goals.assign(m.rows(), kMissing);
    } else {
        m.home_goals.clear();
        m.away_goals.clear();
    }
    return m;
}

// ---------------------------------------------------------------------------
// Recency tensors

TeamVocabulary::TeamVocabulary(const MatchStore& store) {
    std::set<std::string> teams;
    for (const auto& r : store.records()) {
        teams.insert(r.home_team);
        teams.insert(r.away_team);
    }
    int next = 1;
    for (const auto& t : teams) ids_[t] = next++;
}

int TeamVocabulary::id(const std::string& team) const {
    auto it = ids_.find(team);
    return it == ids_.end() ? 0 : it->second;
}

const std::vector<std::string>& recency_channel_names() {
    static const std::vector<std::string> names{"home_attacking_strength", "home_defensive_strength",
                                                "home_strength_of_opposition", "home_advantage",
                                                "away_attacking_strength", "away_defensive_strength",
                                                "away_strength_of_opposition", "away_advantage"};
    return names;
}

RecencyTensor recency_tensor(const MatchStore& store, MatchId match_id, int n, const TeamVocabulary& vocab,
                             const PaddingPolicy& padding) {
    if (n < 1) throw ConfigError("recency window must be >= 1");
    const auto& match = store[match_id];

    // League mean goals per team per match before this fixture, for padding.
    double pad_goals = 0.0;
    {
        double goals = 0.0, count = 0.0;
        for (MatchId id : store.league_matches(match.league)) {
            if (id >= match_id) break;
            if (!store[id].played()) continue;
            goals += *store[id].home_goals + *store[id].away_goals;
            count += 2.0;
        }
        if (count > 0) pad_goals = goals / count;
    }

    RecencyTensor t;
    t.match_id = match_id;
    t.window = n;
    t.numeric.assign(static_cast<std::size_t>(RecencyTensor::kNumericChannels * n), 0.0f);
    t.ids.assign(static_cast<std::size_t>(RecencyTensor::kIdChannels * n), 0);

    int channel_base = 0;
    int id_channel = 0;
    for (const std::string* team : {&match.home_team, &match.away_team}) {
        const auto slots = recency_slots(store, match_id, *team, n);
        if (is_missing(slots[0].attack) && !padding.enabled) {
            throw ColdStart("team " + *team + " has no match before " + std::to_string(match_id));
        }
        for (int i = 0; i < n; ++i) {
            RecencySlot s = slots[static_cast<std::size_t>(i)];
            if (is_missing(s.attack)) {
                s.attack = pad_goals;
                s.defense = pad_goals;
                s.opposition = 0.0;
                s.advantage = (i % 2 == 0) ? 1.0 : -1.0;
            }
            auto set = [&](int channel, double v) {
                t.numeric[static_cast<std::size_t>((channel_base + channel) * n + i)] = static_cast<float>(v);
            };
            set(0, s.attack);
            set(1, s.defense);
            set(2, s.opposition);
            set(3, s.advantage);
            t.ids[static_cast<std::size_t>(id_channel * n + i)] = vocab.id(*team);
        }
        channel_base += 4;
        ++id_channel;
    }
    return t;
}

namespace {

template <typename T>
void write_le(std::ofstream& out, T value) {
    static_assert(sizeof(T) == 4);
    std::uint32_t bits;
    std::memcpy(&bits, &value, 4);
    const unsigned char bytes[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                                    static_cast<unsigned char>(bits >> 16), static_cast<unsigned char>(bits >> 24)};
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

std::string base_name(const std::string& path) {
    auto pos = path.find_last_of('/');
    return pos == std::string::npos ? path : path.substr(pos + 1);
}

}  // namespace

void write_tensors(const std::string& prefix, std::span<const RecencyTensor> tensors, std::span<const int> labels,
                   const TeamVocabulary& vocab) {
    if (labels.size() != tensors.size()) throw InputError("one label per tensor required");
    const int n = tensors.empty() ? 5 : tensors.front().window;
    std::ofstream numeric(prefix + ".bin", std::ios::binary);
    std::ofstream ids(prefix + ".ids.bin", std::ios::binary);
    if (!numeric || !ids) throw InputError("cannot write tensors at " + prefix);
    nlohmann::json match_ids = nlohmann::json::array();
    for (const auto& t : tensors) {
        if (t.window != n) throw InputError("tensors must share one window length");
        for (float v : t.numeric) write_le(numeric, v);
        for (std::int32_t v : t.ids) write_le(ids, v);
        match_ids.push_back(t.match_id);
    }
    nlohmann::json meta;
    meta["shape"] = {tensors.size(), RecencyTensor::kNumericChannels, n};
    meta["channel_names"] = recency_channel_names();
    meta["match_ids"] = match_ids;
    meta["id_block_path"] = base_name(prefix) + ".ids.bin";
    meta["id_shape"] = {tensors.size(), RecencyTensor::kIdChannels, n};
    meta["id_channel_names"] = {"home_team_id", "away_team_id"};
    meta["time_order"] = "index 0 is t-1";
    meta["labels"] = std::vector<int>(labels.begin(), labels.end());
    meta["team_vocabulary"] = vocab.ids();
    std::ofstream meta_out(prefix + ".meta.json");
    meta_out << meta.dump(2) << '\n';
}

}  // namespace pitchcast
