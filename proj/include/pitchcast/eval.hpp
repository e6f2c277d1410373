#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pitchcast/features.hpp"
#include "pitchcast/ingest.hpp"
#include "pitchcast/ratings.hpp"

namespace pitchcast {

/// Home-perspective win/draw/loss probabilities.
struct ProbTriple {
    double p_win = 0.0;
    double p_draw = 0.0;
    double p_loss = 0.0;

    /// Throws InvalidSimplex unless each entry is in [0,1] and they sum to
    /// 1 within 1e-9.
    void validate() const;
};

struct GoalPair {
    double home = 0.0;
    double away = 0.0;
};

/// Ranked probability score over the three ordered outcomes.
double rps(const ProbTriple& p, Outcome outcome);
double mean_rps(std::span<const ProbTriple> predictions, std::span<const Outcome> outcomes);

/// Root mean squared error pooled over home and away goals (2N values).
/// Throws EmptyInput for no matches.
double rmse(std::span<const GoalPair> predictions, std::span<const GoalPair> actuals);

struct SplitSpec {
    std::vector<std::string> anchor_seasons{"18-19", "19-20", "20-21"};
    int train_years = 5;
    int validation_rounds = 2;
    /// Percentile of the league-season's match rounds used for x.
    double round_quantile = 0.75;
    /// league -> x, overriding the percentile rule.
    std::map<std::string, int> round_x;

    void validate() const;
};

struct Split {
    std::string anchor;
    std::map<std::string, int> round_x;
    std::vector<MatchId> train_ids;
    std::vector<MatchId> validation_ids;
};

struct SplitPlan {
    std::vector<Split> splits;
    /// Anchor seasons missing from the store.
    std::vector<std::string> absent;
};

/// x for one league-season: nearest-rank percentile of its matches' rounds.
int round_x_for(const MatchStore& store, const SeasonSpan& season, double quantile);

/// Per anchor season: validation = played matches of rounds x .. x+count-1
/// in each league; train = played matches of the anchor season and the
/// (train_years - 1) seasons before it, where anchor-season matches must be
/// before round x and dated before the league's first validation match.
/// Throws InsufficientHistory when an anchor yields an empty train or
/// validation set, or when no anchor is present at all.
SplitPlan make_splits(const MatchStore& store, const SplitSpec& spec);

/// Copy of the store with the results of `ids` removed, so that features
/// and ratings for a validation window are computed as of its start.
MatchStore mask_results(const MatchStore& store, std::span<const MatchId> ids);

/// Training-window statistics behind the baselines.
class BaselineModel {
public:
    BaselineModel(const MatchStore& store, std::span<const MatchId> train_ids);

    static ProbTriple home_win();
    /// Laplace-smoothed home team's home (W,D,L) plus away team's away (L,D,W).
    ProbTriple wdl_percentage(const MatchRecord& match) const;
    /// mean(home team's goals scored, away team's goals conceded) and the
    /// mirror for the away side; cold teams use the league means.
    GoalPair team_average(const MatchRecord& match) const;
    GoalPair league_average(const std::string& league) const;

private:
    struct Counts {
        double w = 0, d = 0, l = 0;
    };
    struct Goals {
        double scored = 0, conceded = 0, matches = 0;
    };
    std::map<std::string, Counts> home_counts_;
    std::map<std::string, Counts> away_counts_;
    std::map<TeamKey, Goals> goals_;
    std::map<std::string, std::pair<GoalPair, double>> league_;
    GoalPair global_;
};

/// Per-model losses on each split, with mean and population sigma.
struct ReportRow {
    std::string model;
    std::vector<double> losses;
    double avg_loss = 0.0;
    double sigma = 0.0;
};

struct EvaluationReport {
    std::string metric;
    std::vector<std::string> splits;
    /// Ascending by avg_loss, then sigma, then name.
    std::vector<ReportRow> rows;

    void add(const std::string& model, std::vector<double> losses);
    const ReportRow& row(const std::string& model) const;
};

enum class ReportFormat { Markdown, Csv, Json };
ReportFormat parse_report_format(const std::string& name);
/// Reports rendered one after another in a single document.
std::string render_reports(const std::vector<EvaluationReport>& reports, ReportFormat format);

struct GridResult {
    std::size_t best = 0;
    EvaluationReport report;
};

/// Scores every labelled point on every split and picks the lowest mean
/// loss; ties go to the smaller sigma, then the smaller label. Loss errors
/// are rethrown with the point's label.
GridResult grid_search(const std::vector<std::string>& labels, const std::vector<std::string>& split_names,
                       const std::function<double(std::size_t point, std::size_t split)>& loss,
                       const std::string& metric, unsigned workers = 1);

/// Match probabilities read from a `match_id,p_win,p_draw,p_loss` CSV.
std::map<MatchId, ProbTriple> read_prediction_csv(std::istream& in);
void write_prediction_csv(std::ostream& out, std::span<const MatchId> ids, std::span<const ProbTriple> predictions);

}  // namespace pitchcast
