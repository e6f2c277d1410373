#include "pitchcast/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "pitchcast/error.hpp"

namespace pitchcast {

std::vector<GbtConfig> GbtGrid::expand(const GbtConfig& base) const {
    std::vector<GbtConfig> points{base};
    auto axis = [&points](const auto& values, auto apply) {
        if (values.empty()) return;
        std::vector<GbtConfig> next;
        for (const auto& p : points) {
            for (const auto& v : values) {
                GbtConfig c = p;
                apply(c, v);
                next.push_back(c);
            }
        }
        points = std::move(next);
    };
    axis(learning_rate, [](GbtConfig& c, double v) { c.learning_rate = v; });
    axis(max_depth, [](GbtConfig& c, int v) { c.max_depth = v; });
    axis(iterations, [](GbtConfig& c, int v) { c.iterations = v; });
    axis(l2_leaf_reg, [](GbtConfig& c, double v) { c.l2_leaf_reg = v; });
    axis(min_child_weight, [](GbtConfig& c, double v) { c.min_child_weight = v; });
    // Reject a bad lattice before anything is trained.
    for (const auto& p : points) {
        try {
            p.validate();
        } catch (const ConfigError& e) {
            throw ConfigError("grid point " + label(p) + ": " + e.what());
        }
    }
    return points;
}

std::string GbtGrid::label(const GbtConfig& c) {
    std::ostringstream s;
    s << "lr=" << c.learning_rate << ",depth=" << c.max_depth << ",iter=" << c.iterations << ",l2=" << c.l2_leaf_reg
      << ",mcw=" << c.min_child_weight;
    return s.str();
}

void ExperimentConfig::validate() const {
    features.validate();
    gbt.validate();
    splits.validate();
    if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) throw ConfigError("holdout_fraction must be in [0,1)");
    grid.expand(gbt);
}

std::string metric_name(Metric m) { return m == Metric::Rps ? "RPS" : "RMSE"; }

std::vector<ModelChoice> parse_model_list(const std::string& spec) {
    std::vector<ModelChoice> out;
    std::set<std::string> seen;
    std::stringstream in(spec);
    std::string name;
    while (std::getline(in, name, ',')) {
        if (name.empty()) continue;
        if (name == "default") {
            for (const char* d : {"home_win", "wdl_percentage", "gbt:table8_wdl", "gbt:pi_ratings", "league_average",
                                  "team_average", "berrar", "gbt_score"}) {
                for (auto& m : parse_model_list(d)) {
                    if (seen.insert(m.name).second) out.push_back(m);
                }
            }
            continue;
        }
        ModelChoice m;
        m.name = name;
        if (name == "home_win") {
            m.kind = ModelKind::HomeWin;
        } else if (name == "wdl_percentage") {
            m.kind = ModelKind::WdlPercentage;
        } else if (name.rfind("gbt:", 0) == 0) {
            m.kind = ModelKind::GbtWdl;
            m.preset = name.substr(4);
            resolve_feature_spec(m.preset);
        } else if (name.rfind("ext:", 0) == 0 && name.size() > 4) {
            m.kind = ModelKind::External;
        } else if (name == "league_average") {
            m.kind = ModelKind::LeagueAverage;
            m.metric = Metric::Rmse;
        } else if (name == "team_average") {
            m.kind = ModelKind::TeamAverage;
            m.metric = Metric::Rmse;
        } else if (name == "berrar") {
            m.kind = ModelKind::Berrar;
            m.metric = Metric::Rmse;
        } else if (name == "gbt_score") {
            m.kind = ModelKind::GbtScore;
            m.metric = Metric::Rmse;
        } else {
            throw ConfigError("unknown model '" + name + "'");
        }
        if (seen.insert(m.name).second) out.push_back(m);
    }
    if (out.empty()) throw ConfigError("no models requested");
    return out;
}

PreparedSplit prepare_split(const MatchStore& store, const Split& split, const ExperimentConfig& cfg,
                            const std::vector<std::string>& columns) {
    PreparedSplit p;
    p.split = split;
    const MatchStore masked = mask_results(store, split.validation_ids);
    p.ratings = cfg.features.ratings;
    if (cfg.fit_berrar) p.ratings.berrar = fit_berrar(masked, split.train_ids, p.ratings, cfg.berrar_grid).params;
    FeatureConfig fc = cfg.features;
    fc.ratings = p.ratings;
    FeatureBuilder builder(masked, fc);
    p.train = builder.build(split.train_ids, columns, cfg.workers);
    p.validation = builder.build(split.validation_ids, columns, cfg.workers);
    // Scores come from the unmasked store.
    for (std::size_t i = 0; i < p.validation.rows(); ++i) {
        const auto& r = store[p.validation.match_ids[i]];
        p.validation.home_goals[i] = *r.home_goals;
        p.validation.away_goals[i] = *r.away_goals;
        p.validation.outcome[i] = static_cast<double>(*r.outcome());
    }
    return p;
}

namespace {

/// Picks the round count on the last rows, then refits on everything.
GbtModel fit_with_holdout(const FeatureMatrix& x, const std::vector<double>& y, GbtConfig cfg, double holdout) {
    const std::size_t n = x.rows();
    const auto held = static_cast<std::size_t>(std::floor(holdout * static_cast<double>(n)));
    if (holdout <= 0.0 || held < 1 || n - held < 2) return fit(x, y, cfg);

    std::vector<std::size_t> head(n - held), tail(held);
    for (std::size_t i = 0; i < n - held; ++i) head[i] = i;
    for (std::size_t i = 0; i < held; ++i) tail[i] = n - held + i;
    const auto train = x.take_rows(head);
    const std::vector<double> ty(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n - held));
    Validation valid{x.take_rows(tail), std::vector<double>(y.begin() + static_cast<std::ptrdiff_t>(n - held), y.end())};
    try {
        const auto probe = fit(train, ty, cfg, &valid);
        if (probe.best_iteration) cfg.iterations = *probe.best_iteration;
    } catch (const DegenerateTarget&) {
        // The head alone may be single-class; fall through to a plain fit.
    }
    cfg.early_stopping_rounds.reset();
    return fit(x, y, cfg);
}

std::vector<Outcome> outcomes_of(const FeatureMatrix& m) {
    std::vector<Outcome> out;
    for (double o : m.outcome) out.push_back(static_cast<Outcome>(static_cast<int>(o)));
    return out;
}

std::vector<GoalPair> goals_of(const FeatureMatrix& m) {
    std::vector<GoalPair> out;
    for (std::size_t i = 0; i < m.rows(); ++i) out.push_back({m.home_goals[i], m.away_goals[i]});
    return out;
}

std::vector<std::size_t> played_rows(const FeatureMatrix& m) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        if (!is_missing(m.outcome[i])) rows.push_back(i);
    }
    return rows;
}

double wdl_loss(const PreparedSplit& p, const std::vector<std::string>& features, const GbtConfig& cfg,
                double holdout) {
    const auto model = train_wdl(p.train, features, cfg, holdout);
    const auto raw = predict(model, p.validation.select(features));
    std::vector<ProbTriple> preds;
    for (const auto& r : raw) preds.push_back({r[0], r[1], r[2]});
    return mean_rps(preds, outcomes_of(p.validation));
}

double score_loss(const PreparedSplit& p, const GbtConfig& cfg, double holdout) {
    const auto model = train_score(p.train, resolve_feature_spec("table8_home_goals"),
                                   resolve_feature_spec("table8_away_goals"), cfg, holdout);
    const auto home = predict(model.home, p.validation.select(model.home.numeric_features));
    const auto away = predict(model.away, p.validation.select(model.away.numeric_features));
    std::vector<GoalPair> preds;
    for (std::size_t i = 0; i < home.size(); ++i) preds.push_back({home[i][0], away[i][0]});
    return rmse(preds, goals_of(p.validation));
}

}  // namespace

GbtModel train_wdl(const FeatureMatrix& train, const std::vector<std::string>& features, const GbtConfig& cfg,
                   double holdout_fraction) {
    const auto rows = played_rows(train);
    const auto x = train.take_rows(rows).select(features);
    std::vector<double> y;
    for (auto r : rows) y.push_back(train.outcome[r]);
    GbtConfig c = cfg;
    c.objective = Objective::MulticlassSoftmax;
    return fit_with_holdout(x, y, c, holdout_fraction);
}

ScoreModel train_score(const FeatureMatrix& train, const std::vector<std::string>& home_features,
                       const std::vector<std::string>& away_features, const GbtConfig& cfg, double holdout_fraction) {
    const auto rows = played_rows(train);
    const auto played = train.take_rows(rows);
    GbtConfig c = cfg;
    c.objective = Objective::SquaredError;
    ScoreModel model;
    model.home = fit_with_holdout(played.select(home_features), played.home_goals, c, holdout_fraction);
    model.away = fit_with_holdout(played.select(away_features), played.away_goals, c, holdout_fraction);
    return model;
}

EvaluationRun evaluate_models(const MatchStore& store, const std::vector<ModelChoice>& models,
                              const ExperimentConfig& cfg, const ExternalPredictions& external) {
    cfg.validate();
    EvaluationRun run;
    run.plan = make_splits(store, cfg.splits);

    std::vector<std::string> columns;
    auto need = [&columns](const std::vector<std::string>& names) {
        for (const auto& n : names) {
            if (std::find(columns.begin(), columns.end(), n) == columns.end()) columns.push_back(n);
        }
    };
    for (const auto& m : models) {
        if (m.kind == ModelKind::GbtWdl) need(resolve_feature_spec(m.preset));
        if (m.kind == ModelKind::GbtScore) {
            need(resolve_feature_spec("table8_home_goals"));
            need(resolve_feature_spec("table8_away_goals"));
        }
        if (m.kind == ModelKind::Berrar) need({"EG_HT", "EG_AT"});
        if (m.kind == ModelKind::External && !external.count(m.name.substr(4))) {
            throw InputError("no predictions supplied for " + m.name);
        }
    }

    std::vector<PreparedSplit> prepared;
    std::vector<std::string> split_names;
    for (const auto& split : run.plan.splits) {
        prepared.push_back(prepare_split(store, split, cfg, columns));
        split_names.push_back(split.anchor);
    }

    const auto points = cfg.grid.expand(cfg.gbt);
    EvaluationReport rps_report{"RPS", split_names, {}};
    EvaluationReport rmse_report{"RMSE", split_names, {}};

    for (const auto& m : models) {
        std::vector<double> losses;
        if (m.kind == ModelKind::GbtWdl || m.kind == ModelKind::GbtScore) {
            const auto features = m.kind == ModelKind::GbtWdl ? resolve_feature_spec(m.preset) : std::vector<std::string>{};
            std::vector<std::string> labels;
            for (const auto& p : points) labels.push_back(GbtGrid::label(p));
            // Parallelism goes to the grid when there is one.
            const unsigned outer = points.size() > 1 ? cfg.workers : 1;
            auto loss = [&](std::size_t point, std::size_t s) {
                GbtConfig c = points[point];
                c.workers = points.size() > 1 ? 1 : cfg.workers;
                return m.kind == ModelKind::GbtWdl ? wdl_loss(prepared[s], features, c, cfg.holdout_fraction)
                                                   : score_loss(prepared[s], c, cfg.holdout_fraction);
            };
            const auto result = grid_search(labels, split_names, loss, metric_name(m.metric), outer);
            losses = result.report.row(labels[result.best]).losses;
            run.chosen[m.name] = labels[result.best];
        } else {
            for (const auto& p : prepared) {
                const BaselineModel base(store, p.split.train_ids);
                const auto& v = p.validation;
                if (m.metric == Metric::Rps) {
                    std::vector<ProbTriple> preds;
                    for (MatchId id : v.match_ids) {
                        if (m.kind == ModelKind::HomeWin) {
                            preds.push_back(BaselineModel::home_win());
                        } else if (m.kind == ModelKind::WdlPercentage) {
                            preds.push_back(base.wdl_percentage(store[id]));
                        } else {
                            const auto& table = external.at(m.name.substr(4));
                            auto it = table.find(id);
                            if (it == table.end()) {
                                throw InputError(m.name + " has no prediction for match " + std::to_string(id));
                            }
                            preds.push_back(it->second);
                        }
                    }
                    losses.push_back(mean_rps(preds, outcomes_of(v)));
                } else {
                    std::vector<GoalPair> preds;
                    for (std::size_t i = 0; i < v.rows(); ++i) {
                        const auto& r = store[v.match_ids[i]];
                        if (m.kind == ModelKind::LeagueAverage) {
                            preds.push_back(base.league_average(r.league));
                        } else if (m.kind == ModelKind::TeamAverage) {
                            preds.push_back(base.team_average(r));
                        } else {
                            preds.push_back({v.column("EG_HT")[i], v.column("EG_AT")[i]});
                        }
                    }
                    losses.push_back(rmse(preds, goals_of(v)));
                }
            }
        }
        (m.metric == Metric::Rps ? rps_report : rmse_report).add(m.name, losses);
    }
    if (!rps_report.rows.empty()) run.reports.push_back(rps_report);
    if (!rmse_report.rows.empty()) run.reports.push_back(rmse_report);
    return run;
}

}  // namespace pitchcast
