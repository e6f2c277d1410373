#pragma once

#include <map>
#include <string>
#include <vector>

#include "pitchcast/eval.hpp"
#include "pitchcast/features.hpp"
#include "pitchcast/gbt.hpp"
#include "pitchcast/ratings.hpp"

namespace pitchcast {

/// Lattice of GBT settings tried by the evaluation grid search. An empty
/// axis keeps the base config's value.
struct GbtGrid {
    std::vector<double> learning_rate;
    std::vector<int> max_depth;
    std::vector<int> iterations;
    std::vector<double> l2_leaf_reg;
    std::vector<double> min_child_weight;

    /// Every lattice point applied to `base`, validated before any training.
    std::vector<GbtConfig> expand(const GbtConfig& base) const;
    static std::string label(const GbtConfig& cfg);
};

struct ExperimentConfig {
    FeatureConfig features;
    GbtConfig gbt = [] {
        GbtConfig c;
        c.early_stopping_rounds = 30;
        return c;
    }();
    GbtGrid grid{{0.05, 0.1}, {1, 2, 3}, {}, {}, {1.0, 5.0}};
    SplitSpec splits;
    BerrarGrid berrar_grid;
    /// Refit Berrar parameters on each split's training window.
    bool fit_berrar = true;
    /// Chronologically last share of training rows used to pick the number
    /// of boosting rounds by validation RPS/RMSE; 0 trains on all rows with
    /// the configured iteration count.
    double holdout_fraction = 0.2;
    unsigned workers = 1;

    void validate() const;
};

enum class Metric { Rps, Rmse };
std::string metric_name(Metric m);

enum class ModelKind { HomeWin, WdlPercentage, GbtWdl, External, LeagueAverage, TeamAverage, Berrar, GbtScore };

struct ModelChoice {
    std::string name;
    ModelKind kind = ModelKind::HomeWin;
    Metric metric = Metric::Rps;
    /// Feature preset for GbtWdl.
    std::string preset;
};

/// Comma-separated model names: home_win, wdl_percentage, gbt:<preset>,
/// league_average, team_average, berrar, gbt_score, or ext:<name> for
/// externally supplied probabilities. "default" expands to every built-in.
std::vector<ModelChoice> parse_model_list(const std::string& spec);

/// Features and targets of one split, computed on a store whose
/// validation results are hidden.
struct PreparedSplit {
    Split split;
    RatingConfig ratings;
    FeatureMatrix train;
    FeatureMatrix validation;
};

/// `columns` is the union of every feature needed downstream.
PreparedSplit prepare_split(const MatchStore& store, const Split& split, const ExperimentConfig& cfg,
                            const std::vector<std::string>& columns);

/// Fits a W/D/L booster on the prepared training rows (choosing the round
/// count on a chronological holdout when configured).
GbtModel train_wdl(const FeatureMatrix& train, const std::vector<std::string>& features, const GbtConfig& cfg,
                   double holdout_fraction);
/// Home and away goal regressors on their own feature lists.
ScoreModel train_score(const FeatureMatrix& train, const std::vector<std::string>& home_features,
                       const std::vector<std::string>& away_features, const GbtConfig& cfg, double holdout_fraction);

struct EvaluationRun {
    SplitPlan plan;
    /// RPS report then RMSE report; a report is absent when no model of
    /// its metric was requested.
    std::vector<EvaluationReport> reports;
    /// GBT model name -> chosen grid label.
    std::map<std::string, std::string> chosen;
};

/// External predictions by model name (the part after "ext:").
using ExternalPredictions = std::map<std::string, std::map<MatchId, ProbTriple>>;

EvaluationRun evaluate_models(const MatchStore& store, const std::vector<ModelChoice>& models,
                              const ExperimentConfig& cfg, const ExternalPredictions& external = {});

}  // namespace pitchcast
