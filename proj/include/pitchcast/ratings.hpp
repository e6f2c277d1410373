#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pitchcast/ingest.hpp"

namespace pitchcast {

/// Logistic expected-goals model with per-venue attack/defence ratings.
/// EG_home = alpha_h / (1 + exp(-beta_h * (att_home(H) + def_away(A)) - gamma_h)).
struct BerrarParams {
    double alpha_h = 5.0;
    double alpha_a = 5.0;
    double beta_h = 1.0;
    double beta_a = 1.0;
    double gamma_h = -0.85;
    double gamma_a = -1.2;
    double omega_att_h = 0.05;
    double omega_att_a = 0.05;
    double omega_def_h = 0.05;
    double omega_def_a = 0.05;
};

struct RatingConfig {
    double elo_k = 20.0;
    double elo_home_adv = 60.0;
    double elo_initial = 1500.0;
    double pi_lambda = 0.035;
    double pi_gamma = 0.7;
    double pi_c = 3.0;
    double pi_b = 10.0;
    /// pi-rating features use the current and previous (window - 1) seasons.
    int pi_window_seasons = 5;
    BerrarParams berrar;
    double pagerank_damping = 0.85;
    int pagerank_window_seasons = 3;
    double pagerank_tolerance = 1e-10;

    /// Throws ConfigError when an invariant is violated.
    void validate() const;
};

struct TeamRatings {
    double elo = 1500.0;
    double pi_home = 0.0;
    double pi_away = 0.0;
    double berrar_att_home = 0.0;
    double berrar_att_away = 0.0;
    double berrar_def_home = 0.0;
    double berrar_def_away = 0.0;
    /// NaN until computed for a league window.
    double pagerank;
    std::optional<MatchId> last_updated;

    TeamRatings();
    explicit TeamRatings(const RatingConfig& cfg);
};

/// (home team, away team) ratings going into a match.
struct RatingPair {
    TeamRatings home;
    TeamRatings away;
};

struct ExpectedGoals {
    double home = 0.0;
    double away = 0.0;
};

struct BerrarUpdate {
    RatingPair ratings;
    ExpectedGoals expected;
};

RatingPair elo_update(RatingPair pair, const MatchRecord& result, const RatingConfig& cfg);
/// Elo win expectancy of the home side.
double elo_expected_home(const RatingPair& pair, const RatingConfig& cfg);

RatingPair pi_update(RatingPair pair, const MatchRecord& result, const RatingConfig& cfg);
/// Goal margin the pi-ratings expect for this fixture (home minus away).
double pi_expected_margin(const RatingPair& pair, const RatingConfig& cfg);

/// Expected goals for the fixture; valid for unplayed matches.
ExpectedGoals berrar_expected(const RatingPair& pair, const BerrarParams& params);
BerrarUpdate berrar_update(RatingPair pair, const MatchRecord& result, const RatingConfig& cfg);

/// Damped PageRank over a result graph: the loser links to the winner with
/// weight 1 + |goal difference|, a draw links both ways with weight 0.5.
/// Unplayed matches are ignored. Throws EmptyWindow when nothing was played.
std::map<std::string, double> pagerank_from_matches(std::span<const MatchRecord* const> matches, double damping,
                                                    double tolerance = 1e-10);

/// PageRank of the league's teams from matches strictly before `as_of`, in
/// the season containing `as_of` and the (window - 1) seasons before it.
std::map<std::string, double> pagerank_scores(const MatchStore& store, const std::string& league, Date as_of,
                                              const RatingConfig& cfg);

using TeamKey = std::pair<std::string, std::string>;  // (league, team)

/// Ratings of every team after replaying matches with id < as_of.
struct RatingSnapshot {
    MatchId as_of = 0;
    RatingConfig config;
    std::map<TeamKey, TeamRatings> teams;

    /// Stored ratings or the initial state for an unseen team.
    TeamRatings get(const std::string& league, const std::string& team) const;
};

/// Sequential replay, one independent rating table per league. Elo, pi and
/// Berrar ratings use the whole prefix. PageRank is filled per league from
/// matches dated strictly before match `up_to` (all matches when up_to is
/// past the end), so same-day fixtures never see each other.
RatingSnapshot replay(const MatchStore& store, const RatingConfig& cfg, MatchId up_to);

/// Applies one played match to a snapshot in place, advancing as_of.
void apply_match(RatingSnapshot& snapshot, const MatchRecord& result);

/// Pre-match rating values of one fixture, as used by the feature builder.
struct PreMatchRatings {
    RatingPair ratings;
    /// Home team's home pi and away team's away pi from the windowed replay.
    double pi_home_windowed = 0.0;
    double pi_away_windowed = 0.0;
    ExpectedGoals expected;
    double pagerank_home;
    double pagerank_away;
};

/// Pre-match ratings for every match in the store, indexed by match id.
/// Equivalent to calling replay(store, cfg, id) per match, in one pass.
std::vector<PreMatchRatings> rating_timeline(const MatchStore& store, const RatingConfig& cfg);

struct BerrarGrid {
    std::vector<double> alpha{3.0, 5.0};
    std::vector<double> beta{0.5, 1.0, 2.0};
    std::vector<double> omega{0.02, 0.05, 0.1};
};

struct BerrarFit {
    BerrarParams params;
    double rmse = 0.0;
};

/// Grid search of Berrar parameters minimising the pooled goal RMSE of
/// pre-match expected goals over `train_ids`. gamma_h/gamma_a are set so a
/// zero-rated fixture predicts the training mean goals.
BerrarFit fit_berrar(const MatchStore& store, std::span<const MatchId> train_ids, const RatingConfig& base,
                     const BerrarGrid& grid = {});

}  // namespace pitchcast
