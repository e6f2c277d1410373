#include "pitchcast/selection.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <json.hpp>
#include <numeric>
#include <set>

#include "pitchcast/error.hpp"
#include "pitchcast/parallel.hpp"

namespace pitchcast {

void SelectionConfig::validate() const {
    if (bins < 2) throw ConfigError("selection bins must be >= 2");
    if (filter_top < 1 || relieff_top < 1 || max_candidates < 1) throw ConfigError("selection sizes must be >= 1");
    if (relieff_neighbors < 1) throw ConfigError("relieff_neighbors must be >= 1");
    if (relieff_samples < 0) throw ConfigError("relieff_samples must be >= 0");
    if (cfs_stall_limit < 1) throw ConfigError("cfs_stall_limit must be >= 1");
}

DiscreteTarget discretize_target(const std::vector<double>& values, bool goal_counts) {
    DiscreteTarget t;
    t.classes = goal_counts ? 4 : 3;
    t.codes.reserve(values.size());
    for (double v : values) {
        if (is_missing(v) || v < 0) throw InputError("target has missing or negative values");
        int code = static_cast<int>(v);
        if (goal_counts) {
            code = std::min(code, 3);
        } else if (code > 2 || static_cast<double>(code) != v) {
            throw InputError("outcome target must be 0, 1 or 2");
        }
        t.codes.push_back(code);
    }
    return t;
}

FeatureMatrix impute_median(FeatureMatrix m) {
    for (auto& col : m.columns) {
        std::vector<double> present;
        for (double v : col) {
            if (!is_missing(v)) present.push_back(v);
        }
        double median = 0.0;
        if (!present.empty()) {
            std::sort(present.begin(), present.end());
            const std::size_t n = present.size();
            median = n % 2 == 1 ? present[n / 2] : 0.5 * (present[n / 2 - 1] + present[n / 2]);
        }
        for (double& v : col) {
            if (is_missing(v)) v = median;
        }
    }
    return m;
}

std::vector<int> equal_frequency_bins(const std::vector<double>& column, int bins) {
    const std::size_t n = column.size();
    std::vector<double> sorted = column;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> distinct = sorted;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    std::vector<int> codes(n);
    const bool categorical = distinct.size() <= static_cast<std::size_t>(bins);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = column[i];
        if (categorical) {
            codes[i] = static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), v) - distinct.begin());
        } else {
            const auto below = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin());
            codes[i] = std::min(bins - 1, static_cast<int>(static_cast<std::size_t>(bins) * below / n));
        }
    }
    return codes;
}

namespace {

int code_count(const std::vector<int>& codes) {
    return codes.empty() ? 0 : *std::max_element(codes.begin(), codes.end()) + 1;
}

double entropy_of_counts(const std::vector<double>& counts, double total) {
    double h = 0.0;
    for (double c : counts) {
        if (c > 0) {
            const double p = c / total;
            h -= p * std::log2(p);
        }
    }
    return h;
}

std::vector<std::vector<double>> contingency(const std::vector<int>& x, const std::vector<int>& y) {
    std::vector<std::vector<double>> table(static_cast<std::size_t>(code_count(x)),
                                           std::vector<double>(static_cast<std::size_t>(code_count(y)), 0.0));
    for (std::size_t i = 0; i < x.size(); ++i) table[x[i]][y[i]] += 1.0;
    return table;
}

}  // namespace

double entropy(const std::vector<int>& codes) {
    std::vector<double> counts(static_cast<std::size_t>(code_count(codes)), 0.0);
    for (int c : codes) counts[c] += 1.0;
    return entropy_of_counts(counts, static_cast<double>(codes.size()));
}

double information_gain(const std::vector<int>& x, const std::vector<int>& y) {
    // IG = H(Y) - H(Y|X)
    const auto table = contingency(x, y);
    const double n = static_cast<double>(x.size());
    double conditional = 0.0;
    for (const auto& row : table) {
        const double rn = std::accumulate(row.begin(), row.end(), 0.0);
        if (rn > 0) conditional += rn / n * entropy_of_counts(row, rn);
    }
    return std::max(0.0, entropy(y) - conditional);
}

double symmetrical_uncertainty(const std::vector<int>& x, const std::vector<int>& y) {
    const double hx = entropy(x), hy = entropy(y);
    if (hx + hy <= 0.0) return 0.0;
    return 2.0 * information_gain(x, y) / (hx + hy);
}

double chi_square(const std::vector<int>& x, const std::vector<int>& y) {
    const auto table = contingency(x, y);
    const double n = static_cast<double>(x.size());
    std::vector<double> col_totals(table.empty() ? 0 : table[0].size(), 0.0);
    for (const auto& row : table)
        for (std::size_t c = 0; c < row.size(); ++c) col_totals[c] += row[c];
    double chi = 0.0;
    for (const auto& row : table) {
        const double rn = std::accumulate(row.begin(), row.end(), 0.0);
        for (std::size_t c = 0; c < row.size(); ++c) {
            const double expected = rn * col_totals[c] / n;
            if (expected > 0) chi += (row[c] - expected) * (row[c] - expected) / expected;
        }
    }
    return chi;
}

double class_correlation(const std::vector<double>& x, const std::vector<int>& y, int classes) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double sxx = 0.0;
    for (double v : x) sxx += (v - mx) * (v - mx);
    double total = 0.0;
    for (int c = 0; c < classes; ++c) {
        double count = 0.0;
        for (int v : y) count += v == c ? 1.0 : 0.0;
        if (count == 0.0 || count == n || sxx == 0.0) continue;
        const double my = count / n;
        double sxy = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * ((y[i] == c ? 1.0 : 0.0) - my);
        const double syy = count * (1.0 - my) * (1.0 - my) + (n - count) * my * my;
        total += my * std::fabs(sxy / std::sqrt(sxx * syy));
    }
    return total;
}

namespace {

void require_two_classes(const DiscreteTarget& target) {
    std::set<int> seen(target.codes.begin(), target.codes.end());
    if (seen.size() < 2) throw DegenerateTarget("target has a single class");
}

/// Rank 1 for the highest score, ties by name.
void assign_ranks(std::vector<FeatureRank>& features, int method, double FeatureRank::*score) {
    std::vector<std::size_t> order(features.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double sa = features[a].*score, sb = features[b].*score;
        if (sa != sb) return sa > sb;
        return features[a].name < features[b].name;
    });
    for (std::size_t r = 0; r < order.size(); ++r) features[order[r]].ranks[method] = static_cast<int>(r + 1);
}

}  // namespace

RankedFeatures filter_rank(const FeatureMatrix& m, const DiscreteTarget& target, const SelectionConfig& cfg) {
    if (m.rows() < 2) throw InputError("filter ranking needs at least 2 rows");
    if (target.codes.size() != m.rows()) throw InputError("target length differs from matrix rows");
    require_two_classes(target);

    RankedFeatures ranked;
    ranked.features.resize(m.columns.size());
    parallel_for(m.columns.size(), cfg.workers, [&](std::size_t c) {
        auto& f = ranked.features[c];
        f.name = m.names[c];
        const auto binned = equal_frequency_bins(m.columns[c], cfg.bins);
        f.chi_square = chi_square(binned, target.codes);
        f.symmetrical_uncertainty = symmetrical_uncertainty(binned, target.codes);
        f.correlation = class_correlation(m.columns[c], target.codes, target.classes);
        f.information_gain = information_gain(binned, target.codes);
    });
    assign_ranks(ranked.features, 0, &FeatureRank::chi_square);
    assign_ranks(ranked.features, 1, &FeatureRank::symmetrical_uncertainty);
    assign_ranks(ranked.features, 2, &FeatureRank::correlation);
    assign_ranks(ranked.features, 3, &FeatureRank::information_gain);
    for (auto& f : ranked.features) {
        int r[4] = {f.ranks[0], f.ranks[1], f.ranks[2], f.ranks[3]};
        std::sort(r, r + 4);
        f.median_rank = 0.5 * (r[1] + r[2]);
    }
    return ranked;
}

std::vector<std::string> top_k_by_median(const RankedFeatures& ranked, int k) {
    std::vector<const FeatureRank*> order;
    for (const auto& f : ranked.features) order.push_back(&f);
    std::sort(order.begin(), order.end(), [](const FeatureRank* a, const FeatureRank* b) {
        if (a->median_rank != b->median_rank) return a->median_rank < b->median_rank;
        return a->name < b->name;
    });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < order.size() && i < static_cast<std::size_t>(std::max(k, 0)); ++i)
        out.push_back(order[i]->name);
    return out;
}

ReliefResult relieff(const FeatureMatrix& m, const DiscreteTarget& target, const SelectionConfig& cfg) {
    const std::size_t n = m.rows();
    const std::size_t f = m.columns.size();
    const int k = cfg.relieff_neighbors;
    if (target.codes.size() != n) throw InputError("target length differs from matrix rows");
    require_two_classes(target);

    std::vector<double> prior(static_cast<std::size_t>(target.classes), 0.0);
    for (int c : target.codes) prior[c] += 1.0;
    for (double count : prior) {
        if (count > 0 && count < k + 1) {
            throw TooFewInstances("a class has fewer than " + std::to_string(k + 1) + " instances");
        }
    }
    for (double& p : prior) p /= static_cast<double>(n);

    // Row-major [0,1]-normalized copy.
    std::vector<double> x(n * f, 0.0);
    for (std::size_t c = 0; c < f; ++c) {
        const auto& col = m.columns[c];
        if (n == 0) break;
        const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
        const double range = *hi - *lo;
        for (std::size_t r = 0; r < n; ++r) x[r * f + c] = range > 0 ? (col[r] - *lo) / range : 0.0;
    }

    const std::size_t samples =
        cfg.relieff_samples == 0 ? n : std::min(n, static_cast<std::size_t>(cfg.relieff_samples));

    // Each sample's contribution, summed afterwards in sample order.
    std::vector<std::vector<double>> contrib(samples, std::vector<double>(f, 0.0));
    parallel_for(samples, cfg.workers, [&](std::size_t i) {
        const double* xi = &x[i * f];
        std::vector<std::vector<std::pair<double, std::size_t>>> by_class(prior.size());
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double* xj = &x[j * f];
            double d = 0.0;
            for (std::size_t c = 0; c < f; ++c) d += std::fabs(xi[c] - xj[c]);
            by_class[target.codes[j]].emplace_back(d, j);
        }
        const int own = target.codes[i];
        auto& out = contrib[i];
        for (std::size_t cls = 0; cls < by_class.size(); ++cls) {
            auto& cands = by_class[cls];
            if (cands.empty()) continue;
            const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), cands.size());
            std::nth_element(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(take - 1), cands.end());
            std::sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(take));
            const double weight =
                static_cast<int>(cls) == own ? -1.0 : prior[cls] / (1.0 - prior[static_cast<std::size_t>(own)]);
            for (std::size_t t = 0; t < take; ++t) {
                const double* xj = &x[cands[t].second * f];
                for (std::size_t c = 0; c < f; ++c) out[c] += weight * std::fabs(xi[c] - xj[c]);
            }
        }
    });

    ReliefResult result;
    const double norm = static_cast<double>(samples) * k;
    for (std::size_t c = 0; c < f; ++c) {
        double w = 0.0;
        for (std::size_t i = 0; i < samples; ++i) w += contrib[i][c];
        result.scores.emplace_back(m.names[c], w / norm);
    }
    auto order = result.scores;
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    for (std::size_t i = 0; i < order.size() && i < static_cast<std::size_t>(cfg.relieff_top); ++i)
        result.top.push_back(order[i].first);
    return result;
}

CfsCorrelations cfs_correlations(const FeatureMatrix& m, const DiscreteTarget& target, int bins) {
    CfsCorrelations c;
    c.names = m.names;
    std::vector<std::vector<int>> binned;
    for (const auto& col : m.columns) binned.push_back(equal_frequency_bins(col, bins));
    for (const auto& b : binned) c.feature_class.push_back(symmetrical_uncertainty(b, target.codes));
    const std::size_t k = binned.size();
    c.feature_feature.assign(k, std::vector<double>(k, 1.0));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            c.feature_feature[i][j] = c.feature_feature[j][i] = symmetrical_uncertainty(binned[i], binned[j]);
        }
    }
    return c;
}

double cfs_merit(const CfsCorrelations& c, const std::vector<std::size_t>& subset) {
    if (subset.empty()) return 0.0;
    const double k = static_cast<double>(subset.size());
    double rcf = 0.0, rff = 0.0;
    for (std::size_t i = 0; i < subset.size(); ++i) {
        rcf += c.feature_class[subset[i]];
        for (std::size_t j = i + 1; j < subset.size(); ++j) rff += c.feature_feature[subset[i]][subset[j]];
    }
    const double denominator = k + 2.0 * rff;
    return denominator > 0 ? rcf / std::sqrt(denominator) : 0.0;
}

namespace {

struct Candidate {
    std::vector<std::size_t> subset;  // ascending, which is name order
    double merit = 0.0;
};

bool better(const Candidate& a, const Candidate& b) {
    if (a.merit != b.merit) return a.merit > b.merit;
    return a.subset < b.subset;
}

}  // namespace

SubsetResult cfs_select(const FeatureMatrix& input, const DiscreteTarget& target, const SelectionConfig& cfg) {
    if (input.columns.empty()) throw InputError("CFS needs at least one candidate");
    // Candidates in name order, so index order matches the name tie-break.
    std::vector<std::string> names = input.names;
    std::sort(names.begin(), names.end());
    const FeatureMatrix m = input.select(names);
    const auto corr = cfs_correlations(m, target, cfg.bins);
    const std::size_t k = names.size();

    SubsetResult result;
    auto record = [&](const Candidate& c) {
        CfsStep step;
        for (std::size_t i : c.subset) step.subset.push_back(names[i]);
        step.merit = c.merit;
        result.trace.push_back(std::move(step));
    };

    Candidate best;  // empty set, merit 0
    if (cfg.cfs_search == CfsSearch::GreedyForward) {
        while (true) {
            Candidate next = best;
            bool found = false;
            for (std::size_t f = 0; f < k; ++f) {
                if (std::binary_search(best.subset.begin(), best.subset.end(), f)) continue;
                Candidate t{best.subset, 0.0};
                t.subset.insert(std::upper_bound(t.subset.begin(), t.subset.end(), f), f);
                t.merit = cfs_merit(corr, t.subset);
                if (!found || better(t, next)) {
                    next = t;
                    found = true;
                }
            }
            if (!found || next.merit <= best.merit) break;
            best = next;
            record(best);
        }
    } else {
        std::vector<Candidate> open{best};
        std::set<std::vector<std::size_t>> visited{best.subset};
        int stall = 0;
        while (!open.empty() && stall < cfg.cfs_stall_limit) {
            auto it = std::min_element(open.begin(), open.end(), better);
            Candidate current = std::move(*it);
            open.erase(it);
            bool improved = false;
            for (std::size_t f = 0; f < k; ++f) {
                if (std::binary_search(current.subset.begin(), current.subset.end(), f)) continue;
                Candidate t{current.subset, 0.0};
                t.subset.insert(std::upper_bound(t.subset.begin(), t.subset.end(), f), f);
                if (!visited.insert(t.subset).second) continue;
                t.merit = cfs_merit(corr, t.subset);
                if (better(t, best)) {
                    improved = improved || t.merit > best.merit;
                    best = t;
                    record(best);
                }
                open.push_back(std::move(t));
            }
            stall = improved ? 0 : stall + 1;
        }
    }
    for (std::size_t i : best.subset) result.selected.push_back(names[i]);
    result.merit = best.merit;
    return result;
}

SelectionReport run_selection(const FeatureMatrix& input, const std::string& target_column, SelectionStage stage,
                              const SelectionConfig& cfg) {
    cfg.validate();
    const auto& raw_target = input.column_or_target(target_column);
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < raw_target.size(); ++r) {
        if (!is_missing(raw_target[r])) rows.push_back(r);
    }
    FeatureMatrix m = impute_median(input.take_rows(rows));
    // The target never selects itself.
    std::vector<std::string> features;
    for (const auto& n : m.names) {
        if (n != target_column) features.push_back(n);
    }
    const std::vector<double> target_values = m.column_or_target(target_column);
    m = m.select(features);
    const auto target = discretize_target(target_values, target_column != "outcome");

    SelectionReport report;
    report.target = target_column;
    if (stage == SelectionStage::All || stage == SelectionStage::Filter) {
        report.ranked = filter_rank(m, target, cfg);
        report.filter_top = top_k_by_median(report.ranked, cfg.filter_top);
    }
    if (stage == SelectionStage::All || stage == SelectionStage::Relieff) {
        report.relief = relieff(m, target, cfg);
        report.relieff_top = report.relief.top;
    }
    if (stage == SelectionStage::All) {
        for (const auto* list : {&report.filter_top, &report.relieff_top}) {
            for (const auto& n : *list) {
                if (std::find(report.candidates.begin(), report.candidates.end(), n) == report.candidates.end() &&
                    report.candidates.size() < static_cast<std::size_t>(cfg.max_candidates)) {
                    report.candidates.push_back(n);
                }
            }
        }
    } else if (stage == SelectionStage::Cfs) {
        report.candidates = m.names;
    }
    if (stage == SelectionStage::All || stage == SelectionStage::Cfs) {
        report.subset = cfs_select(m.select(report.candidates), target, cfg);
    }
    return report;
}

std::string selection_report_json(const SelectionReport& report, SelectionStage stage) {
    nlohmann::ordered_json j;
    j["target"] = report.target;
    if (stage == SelectionStage::All || stage == SelectionStage::Filter) {
        nlohmann::ordered_json ranks = nlohmann::ordered_json::array();
        for (const auto& f : report.ranked.features) {
            ranks.push_back({{"name", f.name},
                             {"chi_square", f.chi_square},
                             {"symmetrical_uncertainty", f.symmetrical_uncertainty},
                             {"correlation", f.correlation},
                             {"information_gain", f.information_gain},
                             {"ranks", {f.ranks[0], f.ranks[1], f.ranks[2], f.ranks[3]}},
                             {"median_rank", f.median_rank}});
        }
        j["filter"] = {{"ranked", ranks}, {"top", report.filter_top}};
    }
    if (stage == SelectionStage::All || stage == SelectionStage::Relieff) {
        nlohmann::ordered_json scores = nlohmann::ordered_json::object();
        for (const auto& [name, score] : report.relief.scores) scores[name] = score;
        j["relieff"] = {{"scores", scores}, {"top", report.relieff_top}};
    }
    if (stage == SelectionStage::All || stage == SelectionStage::Cfs) {
        j["candidates"] = report.candidates;
        nlohmann::ordered_json trace = nlohmann::ordered_json::array();
        for (const auto& s : report.subset.trace) trace.push_back({{"subset", s.subset}, {"merit", s.merit}});
        j["cfs"] = {{"trace", trace}};
        j["selected"] = report.subset.selected;
        j["merit"] = report.subset.merit;
    }
    return j.dump(2) + "\n";
}

}  // namespace pitchcast
