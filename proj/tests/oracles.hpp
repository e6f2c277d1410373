#pragma once

// Brute-force reference implementations shared by the unit tests and the
// acceptance run.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "pitchcast/ratings.hpp"
#include "pitchcast/selection.hpp"

namespace pitchcast::oracles {

/// Dense PageRank oracle: solves (I - d S) x = (1 - d)/n 1 by Gaussian
/// elimination, with S the column-stochastic transition matrix whose
/// dangling columns are uniform.
inline std::map<std::string, double> dense_pagerank(const std::vector<const MatchRecord*>& matches, double d) {
    std::vector<std::string> teams;
    for (const auto* m : matches) {
        if (!m->played()) continue;
        teams.push_back(m->home_team);
        teams.push_back(m->away_team);
    }
    std::sort(teams.begin(), teams.end());
    teams.erase(std::unique(teams.begin(), teams.end()), teams.end());
    const std::size_t n = teams.size();
    auto idx = [&](const std::string& t) { return std::find(teams.begin(), teams.end(), t) - teams.begin(); };
    std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
    for (const auto* m : matches) {
        if (!m->played()) continue;
        auto h = idx(m->home_team), a = idx(m->away_team);
        int gd = *m->goal_diff();
        if (gd == 0) {
            w[h][a] += 0.5;
            w[a][h] += 0.5;
        } else if (gd > 0) {
            w[a][h] += 1.0 + gd;
        } else {
            w[h][a] += 1.0 - gd;
        }
    }
    // S[j][i]: probability of moving from i to j.
    std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        double out = std::accumulate(w[i].begin(), w[i].end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            double s = out > 0 ? w[i][j] / out : 1.0 / n;
            a[j][i] -= d * s;
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        a[j][j] += 1.0;
        a[j][n] = (1.0 - d) / n;
    }
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c) continue;
            double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k <= n; ++k) a[r][k] -= f * a[c][k];
        }
    }
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < n; ++i) out[teams[i]] = a[i][n] / a[i][i];
    return out;
}

inline FeatureMatrix matrix_of(const std::vector<std::string>& names, const std::vector<std::vector<double>>& columns) {
    FeatureMatrix m;
    m.names = names;
    m.columns = columns;
    m.match_ids.resize(columns.empty() ? 0 : columns[0].size());
    std::iota(m.match_ids.begin(), m.match_ids.end(), 0);
    return m;
}

/// Features of mixed relevance to a 3-class label.
inline std::pair<FeatureMatrix, DiscreteTarget> noisy_dataset(std::uint32_t seed, std::size_t rows, int features,
                                                       int classes = 3) {
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> label(0, classes - 1);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> weight(0.0, 1.5);
    DiscreteTarget t;
    t.classes = classes;
    for (std::size_t r = 0; r < rows; ++r) t.codes.push_back(label(rng));
    std::vector<std::string> names;
    std::vector<std::vector<double>> cols;
    for (int f = 0; f < features; ++f) {
        const double w = weight(rng);
        std::vector<double> col;
        for (std::size_t r = 0; r < rows; ++r) col.push_back(w * t.codes[r] + noise(rng));
        // Some features are near-copies of an earlier one.
        if (f >= 2 && f % 4 == 0) {
            for (std::size_t r = 0; r < rows; ++r) col[r] = cols[f - 2][r] + 0.1 * noise(rng);
        }
        names.push_back("f" + std::to_string(f));
        cols.push_back(col);
    }
    return {matrix_of(names, cols), t};
}

/// O(n^2) ReliefF written directly from its definition.
inline std::vector<double> relieff_oracle(const FeatureMatrix& m, const DiscreteTarget& t, int k) {
    const std::size_t n = m.rows(), f = m.columns.size();
    std::vector<double> lo(f), hi(f);
    for (std::size_t c = 0; c < f; ++c) {
        lo[c] = *std::min_element(m.columns[c].begin(), m.columns[c].end());
        hi[c] = *std::max_element(m.columns[c].begin(), m.columns[c].end());
    }
    auto diff = [&](std::size_t c, std::size_t a, std::size_t b) {
        return hi[c] == lo[c] ? 0.0 : std::fabs(m.columns[c][a] - m.columns[c][b]) / (hi[c] - lo[c]);
    };
    std::vector<double> prior(t.classes, 0.0);
    for (int c : t.codes) prior[c] += 1.0 / static_cast<double>(n);
    std::vector<double> w(f, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::tuple<double, std::size_t>> all;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double d = 0.0;
            for (std::size_t c = 0; c < f; ++c) d += diff(c, i, j);
            all.emplace_back(d, j);
        }
        std::sort(all.begin(), all.end());
        for (int cls = 0; cls < t.classes; ++cls) {
            int taken = 0;
            for (const auto& [d, j] : all) {
                if (t.codes[j] != cls || taken == k) continue;
                ++taken;
                for (std::size_t c = 0; c < f; ++c) {
                    if (cls == t.codes[i]) {
                        w[c] -= diff(c, i, j) / (static_cast<double>(n) * k);
                    } else {
                        w[c] += prior[cls] / (1.0 - prior[t.codes[i]]) * diff(c, i, j) / (static_cast<double>(n) * k);
                    }
                }
            }
        }
    }
    return w;
}

/// Best subset by brute force; ties go to the lexicographically smaller
/// list of names.
inline std::pair<std::vector<std::string>, double> exhaustive_cfs(const FeatureMatrix& m, const DiscreteTarget& t, int bins) {
    std::vector<std::string> names = m.names;
    std::sort(names.begin(), names.end());
    const FeatureMatrix s = m.select(names);
    std::vector<std::vector<int>> binned;
    for (const auto& col : s.columns) binned.push_back(equal_frequency_bins(col, bins));
    const std::size_t k = names.size();
    std::vector<std::string> best;
    double best_merit = -1.0;
    for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < k; ++i)
            if (mask & (1u << i)) idx.push_back(i);
        double rcf = 0.0, rff = 0.0;
        for (std::size_t a : idx) rcf += symmetrical_uncertainty(binned[a], t.codes);
        for (std::size_t a = 0; a < idx.size(); ++a)
            for (std::size_t b = a + 1; b < idx.size(); ++b) rff += symmetrical_uncertainty(binned[idx[a]], binned[idx[b]]);
        const double kk = static_cast<double>(idx.size());
        const double rcf_mean = rcf / kk;
        const double rff_mean = idx.size() > 1 ? rff / (kk * (kk - 1) / 2) : 0.0;
        const double merit = kk * rcf_mean / std::sqrt(kk + kk * (kk - 1) * rff_mean);
        std::vector<std::string> subset;
        for (std::size_t i : idx) subset.push_back(names[i]);
        if (merit > best_merit + 1e-12 || (std::fabs(merit - best_merit) <= 1e-12 && subset < best)) {
            best = subset;
            best_merit = merit;
        }
    }
    return {best, best_merit};
}

}  // namespace pitchcast::oracles
