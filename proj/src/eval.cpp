#include "pitchcast/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
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

void ProbTriple::validate() const {
    for (double p : {p_win, p_draw, p_loss}) {
        if (!(p >= 0.0 && p <= 1.0)) throw InvalidSimplex("probability outside [0,1]");
    }
    if (std::fabs(p_win + p_draw + p_loss - 1.0) > 1e-9) throw InvalidSimplex("probabilities do not sum to 1");
}

double rps(const ProbTriple& p, Outcome outcome) {
    p.validate();
    const double a[3] = {outcome == Outcome::Win ? 1.0 : 0.0, outcome == Outcome::Draw ? 1.0 : 0.0,
                         outcome == Outcome::Loss ? 1.0 : 0.0};
    const double q[3] = {p.p_win, p.p_draw, p.p_loss};
    double cum_p = 0.0, cum_a = 0.0, total = 0.0;
    for (int i = 0; i < 2; ++i) {
        cum_p += q[i];
        cum_a += a[i];
        total += (cum_p - cum_a) * (cum_p - cum_a);
    }
    return total / 2.0;
}

double mean_rps(std::span<const ProbTriple> predictions, std::span<const Outcome> outcomes) {
    if (predictions.empty()) throw EmptyInput("no predictions to score");
    if (predictions.size() != outcomes.size()) throw InputError("prediction and outcome counts differ");
    double total = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) total += rps(predictions[i], outcomes[i]);
    return total / static_cast<double>(predictions.size());
}

double rmse(std::span<const GoalPair> predictions, std::span<const GoalPair> actuals) {
    if (predictions.empty()) throw EmptyInput("no predictions to score");
    if (predictions.size() != actuals.size()) throw InputError("prediction and actual counts differ");
    double total = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double dh = predictions[i].home - actuals[i].home;
        const double da = predictions[i].away - actuals[i].away;
        total += dh * dh + da * da;
    }
    return std::sqrt(total / (2.0 * static_cast<double>(predictions.size())));
}

void SplitSpec::validate() const {
    if (anchor_seasons.empty()) throw ConfigError("at least one anchor season is required");
    if (train_years < 1) throw ConfigError("train_years must be >= 1");
    if (validation_rounds < 1) throw ConfigError("validation_rounds must be >= 1");
    if (!(round_quantile > 0.0 && round_quantile <= 1.0)) throw ConfigError("round_quantile must be in (0,1]");
    for (const auto& [league, x] : round_x) {
        if (x < 1) throw ConfigError("round x for " + league + " must be >= 1");
    }
}

int round_x_for(const MatchStore& store, const SeasonSpan& season, double quantile) {
    std::vector<int> rounds;
    for (MatchId id : season.matches) rounds.push_back(store[id].round);
    std::sort(rounds.begin(), rounds.end());
    const auto rank = static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(rounds.size())));
    return rounds[std::max<std::size_t>(rank, 1) - 1];
}

SplitPlan make_splits(const MatchStore& store, const SplitSpec& spec) {
    spec.validate();
    SplitPlan plan;
    for (const auto& anchor : spec.anchor_seasons) {
        const auto labels = store.season_labels();
        if (std::find(labels.begin(), labels.end(), anchor) == labels.end()) {
            plan.absent.push_back(anchor);
            continue;
        }
        const int ordinal = store.season_ordinal(anchor);
        Split split;
        split.anchor = anchor;
        std::map<std::string, Date> first_validation;
        for (const auto& league : store.leagues()) {
            const SeasonSpan* season = store.league_season(league, anchor);
            if (season == nullptr) continue;
            auto o = spec.round_x.find(league);
            const int x = o != spec.round_x.end() ? o->second : round_x_for(store, *season, spec.round_quantile);
            split.round_x[league] = x;
            for (MatchId id : season->matches) {
                const auto& r = store[id];
                if (r.played() && r.round >= x && r.round < x + spec.validation_rounds) {
                    split.validation_ids.push_back(id);
                    auto [it, fresh] = first_validation.try_emplace(league, r.date);
                    if (!fresh) it->second = std::min(it->second, r.date);
                }
            }
        }
        if (split.validation_ids.empty()) {
            throw InsufficientHistory("anchor " + anchor + " has no played matches in its validation rounds");
        }
        std::sort(split.validation_ids.begin(), split.validation_ids.end());
        for (const auto& r : store.records()) {
            if (!r.played()) continue;
            const int ord = store.season_ordinal(r.season);
            if (ord > ordinal || ord <= ordinal - spec.train_years) continue;
            if (ord == ordinal) {
                auto x = split.round_x.find(r.league);
                auto first = first_validation.find(r.league);
                if (x == split.round_x.end() || first == first_validation.end()) continue;
                if (r.round >= x->second || r.date >= first->second) continue;
            }
            split.train_ids.push_back(r.match_id);
        }
        if (split.train_ids.empty()) throw InsufficientHistory("anchor " + anchor + " has no training matches");
        plan.splits.push_back(std::move(split));
    }
    if (plan.splits.empty()) throw InsufficientHistory("none of the anchor seasons is in the store");
    return plan;
}

MatchStore mask_results(const MatchStore& store, std::span<const MatchId> ids) {
    std::vector<MatchRecord> records = store.records();
    for (MatchId id : ids) {
        records.at(id).home_goals.reset();
        records.at(id).away_goals.reset();
    }
    return MatchStore(std::move(records));
}

BaselineModel::BaselineModel(const MatchStore& store, std::span<const MatchId> train_ids) {
    double home_total = 0, away_total = 0, count = 0;
    for (MatchId id : train_ids) {
        const auto& r = store[id];
        if (!r.played()) continue;
        const int gd = *r.goal_diff();
        auto& h = home_counts_[r.home_team];
        auto& a = away_counts_[r.away_team];
        // Away counts are kept from the away team's view.
        if (gd > 0) {
            h.w += 1;
            a.l += 1;
        } else if (gd == 0) {
            h.d += 1;
            a.d += 1;
        } else {
            h.l += 1;
            a.w += 1;
        }
        auto& gh = goals_[{r.league, r.home_team}];
        gh.scored += *r.home_goals;
        gh.conceded += *r.away_goals;
        gh.matches += 1;
        auto& ga = goals_[{r.league, r.away_team}];
        ga.scored += *r.away_goals;
        ga.conceded += *r.home_goals;
        ga.matches += 1;
        auto& lg = league_[r.league];
        lg.first.home += *r.home_goals;
        lg.first.away += *r.away_goals;
        lg.second += 1;
        home_total += *r.home_goals;
        away_total += *r.away_goals;
        count += 1;
    }
    for (auto& [league, entry] : league_) {
        entry.first.home /= entry.second;
        entry.first.away /= entry.second;
    }
    if (count > 0) global_ = {home_total / count, away_total / count};
}

ProbTriple BaselineModel::home_win() { return {1.0, 0.0, 0.0}; }

ProbTriple BaselineModel::wdl_percentage(const MatchRecord& match) const {
    Counts h, a;
    if (auto it = home_counts_.find(match.home_team); it != home_counts_.end()) h = it->second;
    if (auto it = away_counts_.find(match.away_team); it != away_counts_.end()) a = it->second;
    // The away team's losses are home wins.
    const double w = h.w + a.l + 1.0, d = h.d + a.d + 1.0, l = h.l + a.w + 1.0;
    const double total = w + d + l;
    return {w / total, d / total, l / total};
}

GoalPair BaselineModel::league_average(const std::string& league) const {
    auto it = league_.find(league);
    return it == league_.end() ? global_ : it->second.first;
}

GoalPair BaselineModel::team_average(const MatchRecord& match) const {
    const GoalPair league = league_average(match.league);
    auto stats = [&](const std::string& team) -> std::optional<Goals> {
        auto it = goals_.find({match.league, team});
        if (it == goals_.end() || it->second.matches == 0) return std::nullopt;
        return it->second;
    };
    const auto home = stats(match.home_team), away = stats(match.away_team);
    const double home_scored = home ? home->scored / home->matches : league.home;
    const double home_conceded = home ? home->conceded / home->matches : league.away;
    const double away_scored = away ? away->scored / away->matches : league.away;
    const double away_conceded = away ? away->conceded / away->matches : league.home;
    return {(home_scored + away_conceded) / 2.0, (away_scored + home_conceded) / 2.0};
}

void EvaluationReport::add(const std::string& model, std::vector<double> losses) {
    ReportRow row;
    row.model = model;
    row.losses = std::move(losses);
    const double n = static_cast<double>(row.losses.size());
    if (n > 0) {
        row.avg_loss = std::accumulate(row.losses.begin(), row.losses.end(), 0.0) / n;
        double var = 0.0;
        for (double l : row.losses) var += (l - row.avg_loss) * (l - row.avg_loss);
        row.sigma = std::sqrt(var / n);
    }
    rows.push_back(std::move(row));
    std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
        if (a.avg_loss != b.avg_loss) return a.avg_loss < b.avg_loss;
        if (a.sigma != b.sigma) return a.sigma < b.sigma;
        return a.model < b.model;
    });
}

const ReportRow& EvaluationReport::row(const std::string& model) const {
    for (const auto& r : rows) {
        if (r.model == model) return r;
    }
    throw InputError("report has no model '" + model + "'");
}

ReportFormat parse_report_format(const std::string& name) {
    if (name == "md" || name == "markdown") return ReportFormat::Markdown;
    if (name == "csv") return ReportFormat::Csv;
    if (name == "json") return ReportFormat::Json;
    throw ConfigError("unknown report format '" + name + "'");
}

namespace {

std::string fixed4(double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << v;
    return s.str();
}

}  // namespace

std::string render_reports(const std::vector<EvaluationReport>& reports, ReportFormat format) {
    std::ostringstream out;
    if (format == ReportFormat::Json) {
        nlohmann::ordered_json j = nlohmann::ordered_json::array();
        for (const auto& rep : reports) {
            auto rows = nlohmann::ordered_json::array();
            for (const auto& r : rep.rows) {
                rows.push_back({{"model", r.model}, {"losses", r.losses}, {"avg_loss", r.avg_loss}, {"sigma", r.sigma}});
            }
            j.push_back({{"metric", rep.metric}, {"splits", rep.splits}, {"rows", rows}});
        }
        out << j.dump(2) << '\n';
        return out.str();
    }
    if (format == ReportFormat::Csv) {
        csv::write_row(out, {"metric", "model", "split", "loss"});
        for (const auto& rep : reports) {
            for (const auto& r : rep.rows) {
                for (std::size_t s = 0; s < r.losses.size(); ++s) {
                    csv::write_row(out, {rep.metric, r.model, rep.splits[s], csv::format_double(r.losses[s])});
                }
                csv::write_row(out, {rep.metric, r.model, "avg_loss", csv::format_double(r.avg_loss)});
                csv::write_row(out, {rep.metric, r.model, "sigma", csv::format_double(r.sigma)});
            }
        }
        return out.str();
    }
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& rep = reports[i];
        if (i > 0) out << '\n';
        out << "## " << rep.metric << "\n\n| Model |";
        for (const auto& s : rep.splits) out << ' ' << s << " |";
        out << " Avg Loss | Sigma |\n|---|";
        for (std::size_t s = 0; s < rep.splits.size(); ++s) out << "---|";
        out << "---|---|\n";
        for (const auto& r : rep.rows) {
            out << "| " << r.model << " |";
            for (double l : r.losses) out << ' ' << fixed4(l) << " |";
            out << ' ' << fixed4(r.avg_loss) << " | " << fixed4(r.sigma) << " |\n";
        }
    }
    return out.str();
}

GridResult grid_search(const std::vector<std::string>& labels, const std::vector<std::string>& split_names,
                       const std::function<double(std::size_t, std::size_t)>& loss, const std::string& metric,
                       unsigned workers) {
    if (labels.empty()) throw ConfigError("grid is empty");
    if (split_names.empty()) throw ConfigError("grid search needs at least one split");
    const std::size_t splits = split_names.size();
    std::vector<double> losses(labels.size() * splits);
    parallel_for(losses.size(), workers, [&](std::size_t k) {
        const std::size_t point = k / splits, split = k % splits;
        try {
            losses[k] = loss(point, split);
        } catch (const InputError& e) {
            throw InputError("grid point " + labels[point] + ": " + e.what());
        } catch (const std::exception& e) {
            throw Error("grid point " + labels[point] + ": " + e.what());
        }
    });
    GridResult result;
    result.report.metric = metric;
    result.report.splits = split_names;
    for (std::size_t p = 0; p < labels.size(); ++p) {
        result.report.add(labels[p], std::vector<double>(losses.begin() + static_cast<std::ptrdiff_t>(p * splits),
                                                         losses.begin() + static_cast<std::ptrdiff_t>((p + 1) * splits)));
    }
    const auto& best = result.report.rows.front().model;
    result.best = static_cast<std::size_t>(std::find(labels.begin(), labels.end(), best) - labels.begin());
    return result;
}

std::map<MatchId, ProbTriple> read_prediction_csv(std::istream& in) {
    std::string line;
    if (!csv::next_line(in, line)) throw SchemaError("prediction file is empty");
    const auto header = csv::split_line(line);
    if (header != std::vector<std::string>{"match_id", "p_win", "p_draw", "p_loss"}) {
        throw SchemaError("prediction header must be match_id,p_win,p_draw,p_loss");
    }
    std::map<MatchId, ProbTriple> out;
    std::size_t line_no = 1;
    auto number = [&](const std::string& text) {
        double v = 0.0;
        auto res = std::from_chars(text.data(), text.data() + text.size(), v);
        if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
            throw RowError("prediction line " + std::to_string(line_no) + ": bad number '" + text + "'");
        }
        return v;
    };
    while (csv::next_line(in, line)) {
        ++line_no;
        const auto f = csv::split_line(line);
        if (f.size() != 4) throw RowError("prediction line " + std::to_string(line_no) + ": expected 4 fields");
        const double id = number(f[0]);
        if (id < 0 || id != std::floor(id)) throw RowError("prediction line " + std::to_string(line_no) + ": bad match_id");
        ProbTriple p{number(f[1]), number(f[2]), number(f[3])};
        p.validate();
        if (!out.emplace(static_cast<MatchId>(id), p).second) {
            throw RowError("prediction line " + std::to_string(line_no) + ": duplicate match_id");
        }
    }
    return out;
}

void write_prediction_csv(std::ostream& out, std::span<const MatchId> ids, std::span<const ProbTriple> predictions) {
    csv::write_row(out, {"match_id", "p_win", "p_draw", "p_loss"});
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto& p = predictions[i];
        csv::write_row(out, {std::to_string(ids[i]), csv::format_double(p.p_win), csv::format_double(p.p_draw),
                             csv::format_double(p.p_loss)});
    }
}

}  // namespace pitchcast
