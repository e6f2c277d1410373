#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pitchcast/date.hpp"

namespace pitchcast {

using MatchId = std::size_t;

/// Result from the home team's perspective.
enum class Outcome : std::uint8_t { Win = 0, Draw = 1, Loss = 2 };

char outcome_code(Outcome o);
std::optional<Outcome> parse_outcome(std::string_view code);
Outcome outcome_from_goal_diff(int goal_diff);

/// One played or scheduled match. Goal difference and outcome are derived
/// from the goals, so they cannot disagree with them.
struct MatchRecord {
    MatchId match_id = 0;
    std::string season;
    std::string league;
    Date date{};
    std::string home_team;
    std::string away_team;
    std::optional<int> home_goals;
    std::optional<int> away_goals;
    /// 1 + prior matches of the home team in this league-season.
    int round = 0;

    bool played() const { return home_goals.has_value() && away_goals.has_value(); }
    std::optional<int> goal_diff() const;
    std::optional<Outcome> outcome() const;
    bool involves(const std::string& team) const { return home_team == team || away_team == team; }
};

struct SeasonSpan {
    std::string season;
    int ordinal = 0;
    Date first_date{};
    Date last_date{};
    std::vector<MatchId> matches;
};

/// Chronologically ordered, immutable match collection with lookup indices.
/// Records are stably sorted by date (ties keep input order) and match ids
/// are their positions.
class MatchStore {
public:
    MatchStore() = default;
    explicit MatchStore(std::vector<MatchRecord> records);

    const std::vector<MatchRecord>& records() const { return records_; }
    const MatchRecord& operator[](MatchId id) const { return records_.at(id); }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    std::vector<std::string> leagues() const;
    std::span<const MatchId> league_matches(const std::string& league) const;
    /// Every match of the team across all leagues, chronological.
    std::span<const MatchId> team_matches(const std::string& team) const;
    std::span<const MatchId> league_team_matches(const std::string& league, const std::string& team) const;
    /// Seasons the league played, in chronological order.
    std::span<const SeasonSpan> league_seasons(const std::string& league) const;
    const SeasonSpan* league_season(const std::string& league, const std::string& season) const;

    /// Season labels ordered by their earliest match date across all leagues.
    const std::vector<std::string>& season_labels() const { return season_labels_; }
    /// Position of the label in season_labels(), or -1.
    int season_ordinal(const std::string& season) const;

private:
    std::vector<MatchRecord> records_;
    std::map<std::string, std::vector<MatchId>> by_league_;
    std::map<std::string, std::vector<MatchId>> by_team_;
    std::map<std::pair<std::string, std::string>, std::vector<MatchId>> by_league_team_;
    std::map<std::string, std::vector<SeasonSpan>> seasons_;
    std::vector<std::string> season_labels_;
    std::map<std::string, int> season_ordinals_;
};

/// Column names of the results file. Goal difference and outcome columns
/// are optional; when present they are cross-checked against the goals.
struct SchemaConfig {
    std::string season = "Sea";
    std::string league = "Lge";
    std::string date = "Date";
    std::string home_team = "HT";
    std::string away_team = "AT";
    std::string home_goals = "HS";
    std::string away_goals = "AS";
    std::string goal_diff = "GD";
    std::string outcome = "WDL";
    /// Tried when a date is not ISO-8601, e.g. "%d.%m.%Y".
    std::string date_fallback_pattern;
    /// Goal-field value marking an unplayed match, in addition to "".
    std::string unplayed_sentinel = "NA";
    char delimiter = ',';
};

enum class RowIssueKind { Malformed, BadDate, NegativeGoals, Inconsistent };

struct RowIssue {
    std::size_t line = 0;
    RowIssueKind kind = RowIssueKind::Malformed;
    std::string message;
};

struct ParseResult {
    MatchStore store;
    std::vector<RowIssue> issues;
};

/// Reads a results CSV. Bad rows are skipped and reported in `issues`; with
/// `strict` the first bad row throws (ConsistencyError or RowError).
/// Throws SchemaError when a required column is missing.
ParseResult parse_csv(std::istream& in, const SchemaConfig& schema = {}, bool strict = false);

/// Writes the canonical dump: schema columns plus match_id and round.
void write_store_csv(std::ostream& out, const MatchStore& store, const SchemaConfig& schema = {});

struct AppendResult {
    MatchStore store;
    std::size_t duplicates = 0;
};

/// Merges later matches into the store. Rows whose (league, date, home,
/// away) key already exists are dropped and counted. Throws OrderError when
/// a new row predates the store's last match.
AppendResult append_matches(const MatchStore& store, const MatchStore& extra);

/// Round of every match, indexed by match id.
std::vector<int> derive_rounds(const std::vector<MatchRecord>& chronological);

}  // namespace pitchcast
