#pragma once

#include <cmath>
#include <iosfwd>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pitchcast/ingest.hpp"
#include "pitchcast/ratings.hpp"

namespace pitchcast {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

enum class Side { Home, Away };

/// Ordered (name, value) pairs; missing values are kMissing.
using NamedValues = std::vector<std::pair<std::string, double>>;

/// Value of `name`, throwing UnknownFeature when absent.
double value_of(const NamedValues& values, const std::string& name);

struct FeatureConfig {
    RatingConfig ratings;
    int recency_window = 9;
    int streak_window = 6;
    /// Baboota form: share of the loser's form moved to the winner.
    double form_kappa = 0.33;
    int last_matches_window = 5;
    /// Team venue statistics: current and (window - 1) previous seasons.
    int venue_window_seasons = 3;
    /// League-wide statistics: current and (window - 1) previous seasons.
    int league_window_seasons = 2;
    int table_depth = 5;

    void validate() const;
};

/// Named feature columns for a set of matches. Cells are column-major;
/// kMissing marks a missing value. Optional categorical string columns and
/// targets ride along.
struct FeatureMatrix {
    std::vector<std::string> names;
    std::vector<MatchId> match_ids;
    std::vector<std::vector<double>> columns;

    std::vector<std::string> categorical_names;
    std::vector<std::vector<std::string>> categorical;

    /// Empty when targets are not attached; NaN for unplayed rows.
    std::vector<double> home_goals;
    std::vector<double> away_goals;
    /// 0 = home win, 1 = draw, 2 = away win.
    std::vector<double> outcome;

    std::size_t rows() const { return match_ids.size(); }
    bool has_targets() const { return !outcome.empty(); }
    /// Index of a numeric column or -1.
    int index_of(const std::string& name) const;
    const std::vector<double>& column(const std::string& name) const;
    /// Named numeric column or target ("home_goals", "away_goals", "outcome").
    const std::vector<double>& column_or_target(const std::string& name) const;
    /// Copy restricted to the named columns (numeric or categorical), in order.
    FeatureMatrix select(const std::vector<std::string>& wanted) const;
    /// Copy restricted to the given row positions.
    FeatureMatrix take_rows(std::span<const std::size_t> positions) const;
};

/// CSV layout: match_id, numeric columns, categorical columns, then
/// home_goals, away_goals and outcome (W/D/L) when targets are attached.
void write_matrix_csv(std::ostream& out, const FeatureMatrix& m);
FeatureMatrix read_matrix_csv(std::istream& in);

/// Every engineered feature name, in column order. Per-team features appear
/// as <name>_HT then <name>_AT; match-level features have no suffix.
const std::vector<std::string>& feature_catalog();
/// Base names of the per-team features, in catalog order.
const std::vector<std::string>& team_feature_names();
/// Names of the match-level features, in catalog order.
const std::vector<std::string>& match_feature_names();

/// Named feature subsets: table8_wdl, table8_home_goals, table8_away_goals,
/// pi_ratings, berrar_ratings.
const std::map<std::string, std::vector<std::string>>& feature_presets();

/// Resolves "all", a preset name, or a comma-separated list of names.
/// Throws UnknownFeature for names outside the catalog.
std::vector<std::string> resolve_feature_spec(const std::string& spec);

// ---- per-team feature groups, strictly from matches before match_id ----

/// GD, GS, GC, point_tally, point_per_match, Form2, days_since_previous,
/// newly_promoted, newly_demoted, previous_point_tally, previous_GS,
/// previous_GC, previous_GD.
NamedValues season_cumulatives(const MatchStore& store, MatchId match_id, Side side);

/// Streak, Weighted_Streak, Form.
NamedValues streak_features(const MatchStore& store, MatchId match_id, Side side, int n = 6, double form_kappa = 0.33);

/// Team venue block (3-season and last-5 statistics) plus L_up_i / L_down_i.
NamedValues venue_stats(const MatchStore& store, MatchId match_id, Side side, const FeatureConfig& cfg = {});

/// attacking_strength_i, defensive_strength_i, strength_opposition_i,
/// home_advantage_i for i = 1..n; slots without a prior match are missing.
NamedValues recency_features(const MatchStore& store, MatchId match_id, Side side, int n = 9);

/// elo, pi_rating, H_Off_Rating, H_Def_Rating, A_Off_Rating, A_Def_Rating,
/// EG, PageRank. Throws StaleSnapshot unless snapshot.as_of == match_id.
NamedValues rating_features(const MatchStore& store, const RatingSnapshot& snapshot, MatchId match_id, Side side);

/// Match-level features: days_since_first_match, quarter, league-wide
/// averages, team_cnt, rnd_cnt, Round.
NamedValues match_features(const MatchStore& store, MatchId match_id, const FeatureConfig& cfg = {});

/// Computes catalog rows for many matches over a shared store, reusing one
/// rating replay.
class FeatureBuilder {
public:
    FeatureBuilder(const MatchStore& store, FeatureConfig cfg);

    /// All catalog values for one match, in feature_catalog() order.
    std::vector<double> catalog_row(MatchId match_id) const;

    /// One row per id with the requested columns, targets attached.
    /// `workers` bounds the threads used.
    FeatureMatrix build(std::span<const MatchId> match_ids, const std::vector<std::string>& names,
                        unsigned workers = 1) const;

    const MatchStore& store() const { return store_; }
    const FeatureConfig& config() const { return cfg_; }

private:
    const MatchStore& store_;
    FeatureConfig cfg_;
    std::vector<PreMatchRatings> timeline_;
};

// ---- recency tensors for the sequence model ----

/// Dense team ids; 0 is reserved for unknown teams.
class TeamVocabulary {
public:
    TeamVocabulary() = default;
    /// Assigns 1..K to the store's teams in name order.
    explicit TeamVocabulary(const MatchStore& store);
    explicit TeamVocabulary(std::map<std::string, int> ids) : ids_(std::move(ids)) {}
    int id(const std::string& team) const;
    const std::map<std::string, int>& ids() const { return ids_; }

private:
    std::map<std::string, int> ids_;
};

struct PaddingPolicy {
    bool enabled = true;
};

/// Numeric block channels: home/away x {attack, defence, opposition,
/// advantage}; time index 0 is t-1. Id block: home id, away id.
struct RecencyTensor {
    static constexpr int kNumericChannels = 8;
    static constexpr int kIdChannels = 2;

    MatchId match_id = 0;
    int window = 5;
    /// [channel][time], channel-major.
    std::vector<float> numeric;
    std::vector<std::int32_t> ids;

    float at(int channel, int t) const { return numeric[static_cast<std::size_t>(channel * window + t)]; }
    std::int32_t id_at(int channel, int t) const { return ids[static_cast<std::size_t>(channel * window + t)]; }
};

const std::vector<std::string>& recency_channel_names();

/// Throws ColdStart when a team has no prior match and padding is disabled.
RecencyTensor recency_tensor(const MatchStore& store, MatchId match_id, int n, const TeamVocabulary& vocab,
                             const PaddingPolicy& padding = {});

/// Writes <prefix>.bin (float32 LE, [N, 8, n]), <prefix>.ids.bin (int32 LE,
/// [N, 2, n]) and <prefix>.meta.json. `labels` holds 0/1/2 or -1 per row.
void write_tensors(const std::string& prefix, std::span<const RecencyTensor> tensors, std::span<const int> labels,
                   const TeamVocabulary& vocab);

}  // namespace pitchcast
