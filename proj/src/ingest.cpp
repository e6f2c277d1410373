#include "pitchcast/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <set>
#include <tuple>

#include "pitchcast/csv.hpp"
#include "pitchcast/error.hpp"

namespace pitchcast {

char outcome_code(Outcome o) {
    switch (o) {
        case Outcome::Win: return 'W';
        case Outcome::Draw: return 'D';
        case Outcome::Loss: return 'L';
    }
    return '?';
}

std::optional<Outcome> parse_outcome(std::string_view code) {
    if (code == "W" || code == "w" || code == "H") return Outcome::Win;
    if (code == "D" || code == "d") return Outcome::Draw;
    if (code == "L" || code == "l" || code == "A") return Outcome::Loss;
    return std::nullopt;
}

Outcome outcome_from_goal_diff(int goal_diff) {
    if (goal_diff > 0) return Outcome::Win;
    if (goal_diff == 0) return Outcome::Draw;
    return Outcome::Loss;
}

std::optional<int> MatchRecord::goal_diff() const {
    if (!played()) {
        return std::nullopt;
    }
    return *home_goals - *away_goals;
}

std::optional<Outcome> MatchRecord::outcome() const {
    auto gd = goal_diff();
    if (!gd) {
        return std::nullopt;
    }
    return outcome_from_goal_diff(*gd);
}

std::vector<int> derive_rounds(const std::vector<MatchRecord>& chronological) {
    std::map<std::tuple<std::string, std::string, std::string>, int> appearances;
    std::vector<int> rounds(chronological.size());
    for (std::size_t i = 0; i < chronological.size(); ++i) {
        const auto& r = chronological[i];
        auto& home = appearances[{r.league, r.season, r.home_team}];
        rounds[i] = home + 1;
        ++home;
        ++appearances[{r.league, r.season, r.away_team}];
    }
    return rounds;
}

MatchStore::MatchStore(std::vector<MatchRecord> records) : records_(std::move(records)) {
    std::stable_sort(records_.begin(), records_.end(),
                     [](const MatchRecord& a, const MatchRecord& b) { return a.date < b.date; });
    auto rounds = derive_rounds(records_);

    std::map<std::string, Date> season_first;
    for (MatchId id = 0; id < records_.size(); ++id) {
        auto& r = records_[id];
        r.match_id = id;
        r.round = rounds[id];
        by_league_[r.league].push_back(id);
        by_team_[r.home_team].push_back(id);
        by_team_[r.away_team].push_back(id);
        by_league_team_[{r.league, r.home_team}].push_back(id);
        by_league_team_[{r.league, r.away_team}].push_back(id);
        season_first.try_emplace(r.season, r.date);

        auto& spans = seasons_[r.league];
        auto it = std::find_if(spans.begin(), spans.end(), [&](const SeasonSpan& s) { return s.season == r.season; });
        if (it == spans.end()) {
            spans.push_back(SeasonSpan{r.season, 0, r.date, r.date, {}});
            it = std::prev(spans.end());
        }
        it->last_date = std::max(it->last_date, r.date);
        it->matches.push_back(id);
    }

    for (const auto& [label, first] : season_first) {
        season_labels_.push_back(label);
    }
    std::stable_sort(season_labels_.begin(), season_labels_.end(), [&](const std::string& a, const std::string& b) {
        return std::tie(season_first[a], a) < std::tie(season_first[b], b);
    });
    for (std::size_t i = 0; i < season_labels_.size(); ++i) {
        season_ordinals_[season_labels_[i]] = static_cast<int>(i);
    }
    for (auto& [league, spans] : seasons_) {
        for (auto& s : spans) {
            s.ordinal = season_ordinals_[s.season];
        }
        std::stable_sort(spans.begin(), spans.end(),
                         [](const SeasonSpan& a, const SeasonSpan& b) { return a.ordinal < b.ordinal; });
    }
}

std::vector<std::string> MatchStore::leagues() const {
    std::vector<std::string> out;
    for (const auto& [league, ids] : by_league_) {
        out.push_back(league);
    }
    return out;
}

std::span<const MatchId> MatchStore::league_matches(const std::string& league) const {
    auto it = by_league_.find(league);
    return it == by_league_.end() ? std::span<const MatchId>{} : std::span<const MatchId>{it->second};
}

std::span<const MatchId> MatchStore::team_matches(const std::string& team) const {
    auto it = by_team_.find(team);
    return it == by_team_.end() ? std::span<const MatchId>{} : std::span<const MatchId>{it->second};
}

std::span<const MatchId> MatchStore::league_team_matches(const std::string& league, const std::string& team) const {
    auto it = by_league_team_.find({league, team});
    return it == by_league_team_.end() ? std::span<const MatchId>{} : std::span<const MatchId>{it->second};
}

std::span<const SeasonSpan> MatchStore::league_seasons(const std::string& league) const {
    auto it = seasons_.find(league);
    return it == seasons_.end() ? std::span<const SeasonSpan>{} : std::span<const SeasonSpan>{it->second};
}

const SeasonSpan* MatchStore::league_season(const std::string& league, const std::string& season) const {
    for (const auto& s : league_seasons(league)) {
        if (s.season == season) {
            return &s;
        }
    }
    return nullptr;
}

int MatchStore::season_ordinal(const std::string& season) const {
    auto it = season_ordinals_.find(season);
    return it == season_ordinals_.end() ? -1 : it->second;
}

namespace {

std::optional<int> parse_int(std::string_view text) {
    int value = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        return std::nullopt;
    }
    return value;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

}  // namespace

ParseResult parse_csv(std::istream& in, const SchemaConfig& schema, bool strict) {
    std::string line;
    if (!csv::next_line(in, line)) {
        throw SchemaError("results file is empty (no header row)");
    }
    auto header = csv::split_line(line, schema.delimiter);
    auto column = [&](const std::string& name, bool required) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (trim(header[i]) == name) {
                return i;
            }
        }
        if (required) {
            throw SchemaError("missing column '" + name + "'");
        }
        return std::nullopt;
    };
    const std::size_t c_season = *column(schema.season, true);
    const std::size_t c_league = *column(schema.league, true);
    const std::size_t c_date = *column(schema.date, true);
    const std::size_t c_home = *column(schema.home_team, true);
    const std::size_t c_away = *column(schema.away_team, true);
    const std::size_t c_hg = *column(schema.home_goals, true);
    const std::size_t c_ag = *column(schema.away_goals, true);
    const auto c_gd = column(schema.goal_diff, false);
    const auto c_wdl = column(schema.outcome, false);

    ParseResult result;
    std::vector<MatchRecord> records;
    std::size_t line_no = 1;

    auto report = [&](RowIssueKind kind, std::string message) {
        if (strict) {
            std::string text = "line " + std::to_string(line_no) + ": " + message;
            if (kind == RowIssueKind::Inconsistent) {
                throw ConsistencyError(text);
            }
            throw RowError(text);
        }
        result.issues.push_back(RowIssue{line_no, kind, std::move(message)});
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (trim(line).empty()) {
            continue;
        }
        auto fields = csv::split_line(line, schema.delimiter);
        if (fields.size() < header.size()) {
            report(RowIssueKind::Malformed, "expected " + std::to_string(header.size()) + " fields, got " +
                                                std::to_string(fields.size()));
            continue;
        }
        auto field = [&](std::size_t c) { return trim(fields[c]); };

        MatchRecord r;
        r.season = std::string{field(c_season)};
        r.league = std::string{field(c_league)};
        r.home_team = std::string{field(c_home)};
        r.away_team = std::string{field(c_away)};
        if (r.season.empty() || r.league.empty() || r.home_team.empty() || r.away_team.empty()) {
            report(RowIssueKind::Malformed, "empty season, league or team field");
            continue;
        }
        if (r.home_team == r.away_team) {
            report(RowIssueKind::Malformed, "team plays itself");
            continue;
        }

        auto date = parse_iso_date(field(c_date));
        if (!date && !schema.date_fallback_pattern.empty()) {
            date = parse_date(field(c_date), schema.date_fallback_pattern);
        }
        if (!date) {
            report(RowIssueKind::BadDate, "unparseable date '" + std::string{field(c_date)} + "'");
            continue;
        }
        r.date = *date;

        auto is_unplayed = [&](std::string_view v) { return v.empty() || v == schema.unplayed_sentinel; };
        auto hg_text = field(c_hg);
        auto ag_text = field(c_ag);
        if (is_unplayed(hg_text) != is_unplayed(ag_text)) {
            report(RowIssueKind::Malformed, "only one goal field present");
            continue;
        }
        if (!is_unplayed(hg_text)) {
            auto hg = parse_int(hg_text);
            auto ag = parse_int(ag_text);
            if (!hg || !ag) {
                report(RowIssueKind::Malformed, "non-integer goals");
                continue;
            }
            if (*hg < 0 || *ag < 0) {
                report(RowIssueKind::NegativeGoals, "negative goals");
                continue;
            }
            r.home_goals = *hg;
            r.away_goals = *ag;

            if (c_gd) {
                auto gd_text = field(*c_gd);
                if (!is_unplayed(gd_text)) {
                    auto gd = parse_int(gd_text);
                    if (!gd || *gd != *r.goal_diff()) {
                        report(RowIssueKind::Inconsistent, "goal difference '" + std::string{gd_text} +
                                                               "' contradicts goals " + std::to_string(*hg) + "-" +
                                                               std::to_string(*ag));
                        continue;
                    }
                }
            }
            if (c_wdl) {
                auto wdl_text = field(*c_wdl);
                if (!is_unplayed(wdl_text)) {
                    auto o = parse_outcome(wdl_text);
                    if (!o || *o != *r.outcome()) {
                        report(RowIssueKind::Inconsistent, "outcome '" + std::string{wdl_text} +
                                                               "' contradicts goals " + std::to_string(*hg) + "-" +
                                                               std::to_string(*ag));
                        continue;
                    }
                }
            }
        }
        records.push_back(std::move(r));
    }
    result.store = MatchStore(std::move(records));
    return result;
}

void write_store_csv(std::ostream& out, const MatchStore& store, const SchemaConfig& schema) {
    const char d = schema.delimiter;
    csv::write_row(out,
                   {schema.season, schema.league, schema.date, schema.home_team, schema.away_team, schema.home_goals,
                    schema.away_goals, schema.goal_diff, schema.outcome, "match_id", "round"},
                   d);
    for (const auto& r : store.records()) {
        std::vector<std::string> row{r.season, r.league, format_iso_date(r.date), r.home_team, r.away_team};
        if (r.played()) {
            row.push_back(std::to_string(*r.home_goals));
            row.push_back(std::to_string(*r.away_goals));
            row.push_back(std::to_string(*r.goal_diff()));
            row.push_back(std::string(1, outcome_code(*r.outcome())));
        } else {
            row.insert(row.end(), 4, std::string{});
        }
        row.push_back(std::to_string(r.match_id));
        row.push_back(std::to_string(r.round));
        csv::write_row(out, row, d);
    }
}

AppendResult append_matches(const MatchStore& store, const MatchStore& extra) {
    using Key = std::tuple<std::string, Date, std::string, std::string>;
    std::set<Key> seen;
    for (const auto& r : store.records()) {
        seen.insert({r.league, r.date, r.home_team, r.away_team});
    }
    AppendResult result;
    std::vector<MatchRecord> merged = store.records();
    for (const auto& r : extra.records()) {
        if (!seen.insert({r.league, r.date, r.home_team, r.away_team}).second) {
            ++result.duplicates;
            continue;
        }
        if (!store.empty() && r.date < store.records().back().date) {
            throw OrderError("appended match " + r.home_team + " v " + r.away_team + " on " +
                             format_iso_date(r.date) + " predates the store's last match on " +
                             format_iso_date(store.records().back().date));
        }
        merged.push_back(r);
    }
    result.store = MatchStore(std::move(merged));
    return result;
}

}  // namespace pitchcast
