#pragma once

#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "pitchcast/ingest.hpp"

namespace pitchcast::testing {

inline MatchStore load_store(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    return parse_csv(in).store;
}

inline MatchStore load_f1() { return load_store(PITCHCAST_DATA_DIR "/f1.csv"); }

/// Double round-robin seasons for `teams` teams, with random goals. Each
/// season starts on 1 August of consecutive years and has one round a week.
inline MatchStore random_league(std::uint32_t seed, int teams, int seasons, const std::string& league = "TST",
                                int first_year = 2015) {
    std::mt19937 rng(seed);
    std::vector<double> strength(teams);
    std::normal_distribution<double> spread(0.0, 0.3);
    for (auto& s : strength) s = spread(rng);

    std::vector<MatchRecord> records;
    using namespace std::chrono;
    for (int s = 0; s < seasons; ++s) {
        const int year = first_year + s;
        const std::string label = std::to_string(year % 100 / 10) + std::to_string(year % 10) + "-" +
                                  std::to_string((year + 1) % 100 / 10) + std::to_string((year + 1) % 10);
        Date start = sys_days{std::chrono::year{year} / August / 1};
        // Circle-method schedule.
        std::vector<int> order(teams);
        for (int i = 0; i < teams; ++i) order[i] = i;
        const int rounds = teams - 1;
        for (int leg = 0; leg < 2; ++leg) {
            for (int r = 0; r < rounds; ++r) {
                for (int i = 0; i < teams / 2; ++i) {
                    int h = order[i], a = order[teams - 1 - i];
                    if ((r + leg) % 2 == 1) std::swap(h, a);
                    MatchRecord m;
                    m.season = label;
                    m.league = league;
                    m.date = start + days{7 * (leg * rounds + r)};
                    m.home_team = league + "_T" + std::to_string(h);
                    m.away_team = league + "_T" + std::to_string(a);
                    std::poisson_distribution<int> hg(std::exp(0.35 + strength[h] - strength[a]));
                    std::poisson_distribution<int> ag(std::exp(0.1 + strength[a] - strength[h]));
                    m.home_goals = hg(rng);
                    m.away_goals = ag(rng);
                    records.push_back(m);
                }
                std::rotate(order.begin() + 1, order.end() - 1, order.end());
            }
        }
    }
    return MatchStore(std::move(records));
}

/// Store truncated to matches with id < cut.
inline MatchStore prefix(const MatchStore& store, MatchId cut) {
    std::vector<MatchRecord> records(store.records().begin(), store.records().begin() + cut);
    return MatchStore(std::move(records));
}

}  // namespace pitchcast::testing
