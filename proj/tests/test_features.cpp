#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "pitchcast/error.hpp"
#include "pitchcast/features.hpp"
#include "test_support.hpp"

using namespace pitchcast;
using pitchcast::testing::load_f1;

namespace {

MatchRecord played(const std::string& season, const std::string& league, const std::string& date,
                   const std::string& home, const std::string& away, int hg, int ag) {
    MatchRecord r;
    r.season = season;
    r.league = league;
    r.date = *parse_iso_date(date);
    r.home_team = home;
    r.away_team = away;
    r.home_goals = hg;
    r.away_goals = ag;
    return r;
}

MatchRecord fixture(const std::string& season, const std::string& league, const std::string& date,
                    const std::string& home, const std::string& away) {
    MatchRecord r = played(season, league, date, home, away, 0, 0);
    r.home_goals.reset();
    r.away_goals.reset();
    return r;
}

/// F1 plus an unplayed fourth fixture A vs B.
MatchStore f1_with_next() {
    auto records = load_f1().records();
    records.push_back(fixture("20-21", "ENG", "2020-10-03", "A", "B"));
    return MatchStore(std::move(records));
}

/// Team X plays six matches with the given (scored, conceded) then a fixture.
MatchStore sequence(const std::vector<std::pair<int, int>>& results) {
    std::vector<MatchRecord> records;
    int day = 1;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const std::string date = "2020-09-" + std::string(day < 10 ? "0" : "") + std::to_string(day);
        ++day;
        records.push_back(played("20-21", "L", date, "X", "O" + std::to_string(i), results[i].first,
                                 results[i].second));
    }
    records.push_back(fixture("20-21", "L", "2020-09-28", "X", "Z"));
    return MatchStore(std::move(records));
}

}  // namespace

TEST_CASE("catalog shape and presets") {
    const auto& catalog = feature_catalog();
    CHECK(catalog.size() == 2 * team_feature_names().size() + match_feature_names().size());
    CHECK(catalog.size() == 212);
    std::set<std::string> unique(catalog.begin(), catalog.end());
    CHECK(unique.size() == catalog.size());

    CHECK(resolve_feature_spec("table8_wdl") ==
          std::vector<std::string>{"EG_HT", "EG_AT", "point_per_match_HT", "win_pct_AT", "pi_rating_HT",
                                   "pi_rating_AT"});
    for (const auto& [name, cols] : feature_presets()) {
        for (const auto& c : cols) {
            CHECK_MESSAGE(unique.count(c) == 1, name << " references " << c);
        }
    }
    CHECK(resolve_feature_spec("all").size() == 212);
    CHECK(resolve_feature_spec(" GD_HT , Round,GD_HT") == std::vector<std::string>{"GD_HT", "Round"});
    CHECK_THROWS_AS(resolve_feature_spec("GD_HT,not_a_feature"), UnknownFeature);
}

TEST_CASE("recency tensor reproduces the worked table column") {
    // X wins 2-0 away at Y; Y's last five before that game had GD +1,0,0,0,0.
    std::vector<MatchRecord> records{
        played("20-21", "L", "2020-08-01", "Y", "P", 1, 0), played("20-21", "L", "2020-08-08", "Q", "Y", 1, 1),
        played("20-21", "L", "2020-08-15", "Y", "R", 0, 0), played("20-21", "L", "2020-08-22", "S", "Y", 2, 2),
        played("20-21", "L", "2020-08-29", "Y", "T", 3, 3), played("20-21", "L", "2020-09-05", "Y", "X", 0, 2),
        fixture("20-21", "L", "2020-09-12", "X", "W")};
    MatchStore store(std::move(records));
    TeamVocabulary vocab(std::map<std::string, int>{{"X", 101}});
    auto t = recency_tensor(store, 6, 5, vocab);
    CHECK(t.at(0, 0) == doctest::Approx(2.0));
    CHECK(t.at(1, 0) == doctest::Approx(0.0));
    CHECK(t.at(2, 0) == doctest::Approx(0.2));
    CHECK(t.at(3, 0) == doctest::Approx(-1.0));
    CHECK(t.id_at(0, 0) == 101);
    CHECK(t.id_at(1, 0) == 0);  // W is not in the vocabulary
}

TEST_CASE("recency tensor of a goalless away draw is all zero") {
    MatchStore store({played("20-21", "L", "2020-09-01", "H", "X", 0, 0), fixture("20-21", "L", "2020-09-08", "X", "H")});
    TeamVocabulary vocab(store);
    auto t = recency_tensor(store, 1, 1, vocab);
    CHECK(t.at(0, 0) == 0.0f);
    CHECK(t.at(1, 0) == 0.0f);
    CHECK(t.at(2, 0) == 0.0f);
    CHECK(t.at(3, 0) == -1.0f);
    CHECK(t.id_at(0, 0) == vocab.id("X"));
}

TEST_CASE("F1 tensor for A before M3 with padding") {
    auto store = load_f1();
    TeamVocabulary vocab(store);
    auto t = recency_tensor(store, 2, 2, vocab);
    // Channels 4..7 belong to the away team A.
    CHECK(t.at(4, 0) == 2.0f);
    CHECK(t.at(5, 0) == 0.0f);
    CHECK(t.at(6, 0) == 0.0f);  // B had no history before M1
    CHECK(t.at(7, 0) == 1.0f);
    // t-2 is padded with the league mean goals per team-match before M3.
    CHECK(t.at(4, 1) == 1.0f);
    CHECK(t.at(5, 1) == 1.0f);
    CHECK(t.at(6, 1) == 0.0f);
    CHECK(t.at(7, 1) == -1.0f);
    CHECK(t.id_at(1, 0) == 1);
    CHECK(t.id_at(1, 1) == 1);
    // Home team C: t-1 is the 1-1 draw at B.
    CHECK(t.at(0, 0) == 1.0f);
    CHECK(t.at(1, 0) == 1.0f);
    CHECK(t.at(3, 0) == -1.0f);
    // B's average GD before M2 was -2.
    CHECK(t.at(2, 0) == -2.0f);

    CHECK_THROWS_AS(recency_tensor(store, 0, 2, vocab, PaddingPolicy{false}), ColdStart);
    CHECK_NOTHROW(recency_tensor(store, 2, 1, vocab, PaddingPolicy{false}));
}

TEST_CASE("tensor files follow the documented layout") {
    auto store = load_f1();
    TeamVocabulary vocab(store);
    std::vector<RecencyTensor> tensors{recency_tensor(store, 1, 3, vocab), recency_tensor(store, 2, 3, vocab)};
    std::vector<int> labels{1, 2};
    const auto dir = std::filesystem::temp_directory_path() / "pitchcast_tensor_test";
    std::filesystem::create_directories(dir);
    const std::string prefix = (dir / "f1").string();
    write_tensors(prefix, tensors, labels, vocab);

    CHECK(std::filesystem::file_size(prefix + ".bin") == 2 * 8 * 3 * 4);
    CHECK(std::filesystem::file_size(prefix + ".ids.bin") == 2 * 2 * 3 * 4);
    std::ifstream meta_in(prefix + ".meta.json");
    auto meta = nlohmann::json::parse(meta_in);
    CHECK(meta["shape"] == nlohmann::json({2, 8, 3}));
    CHECK(meta["channel_names"].size() == 8);
    CHECK(meta["match_ids"] == nlohmann::json({1, 2}));
    CHECK(meta["id_block_path"] == "f1.ids.bin");

    std::ifstream bin(prefix + ".bin", std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
    // Second tensor, channel 4 (away attack), t-1: A scored 2 in M1.
    const std::size_t offset = (1 * 8 * 3 + 4 * 3 + 0) * 4;
    std::uint32_t bits = bytes[offset] | bytes[offset + 1] << 8 | bytes[offset + 2] << 16 |
                         static_cast<std::uint32_t>(bytes[offset + 3]) << 24;
    float value;
    std::memcpy(&value, &bits, 4);
    CHECK(value == 2.0f);
    std::filesystem::remove_all(dir);
}

TEST_CASE("season cumulatives") {
    auto store = f1_with_next();
    auto a = season_cumulatives(store, 3, Side::Home);
    CHECK(value_of(a, "GS") == 5);
    CHECK(value_of(a, "GC") == 0);
    CHECK(value_of(a, "GD") == 5);
    CHECK(value_of(a, "point_tally") == 6);
    CHECK(value_of(a, "point_per_match") == 3.0);
    CHECK(value_of(a, "days_since_previous") == 7);
    CHECK(is_missing(value_of(a, "previous_GS")));
    CHECK(is_missing(value_of(a, "Form2")));

    auto first = season_cumulatives(store, 0, Side::Away);
    CHECK(value_of(first, "GD") == 0);
    CHECK(value_of(first, "GS") == 0);
    CHECK(value_of(first, "point_tally") == 0);
    CHECK(is_missing(value_of(first, "point_per_match")));
    CHECK(is_missing(value_of(first, "previous_point_tally")));
    CHECK(is_missing(value_of(first, "newly_promoted")));

    auto seq = sequence({{1, 0}, {2, 1}, {3, 0}, {2, 0}, {1, 1}});
    auto form2 = season_cumulatives(seq, 5, Side::Home);
    CHECK(value_of(form2, "Form2") == doctest::Approx(7.0 / 9.0));
}

TEST_CASE("promotion follows league tiers between seasons") {
    std::vector<MatchRecord> records{
        played("19-20", "X1", "2019-09-01", "Top", "Mid", 1, 0), played("19-20", "X2", "2019-09-01", "Up", "Low", 2, 0),
        played("20-21", "X1", "2020-09-01", "Top", "Up", 0, 0), played("20-21", "X2", "2020-09-01", "Mid", "Low", 1, 1),
        played("20-21", "X1", "2020-09-08", "New", "Top", 0, 1)};
    MatchStore store(std::move(records));
    auto up = season_cumulatives(store, 2, Side::Away);
    CHECK(value_of(up, "newly_promoted") == 1.0);
    CHECK(value_of(up, "newly_demoted") == 0.0);
    CHECK(value_of(up, "previous_point_tally") == 3.0);
    auto stay = season_cumulatives(store, 2, Side::Home);
    CHECK(value_of(stay, "newly_promoted") == 0.0);
    CHECK(value_of(stay, "newly_demoted") == 0.0);
    auto down = season_cumulatives(store, 3, Side::Home);
    CHECK(value_of(down, "newly_demoted") == 1.0);
    CHECK(value_of(down, "previous_GD") == -1.0);
    auto fresh = season_cumulatives(store, 4, Side::Home);
    CHECK(value_of(fresh, "newly_promoted") == 1.0);
}

TEST_CASE("streak features") {
    auto wins = sequence({{1, 0}, {1, 0}, {1, 0}, {1, 0}, {1, 0}, {1, 0}});
    auto w = streak_features(wins, 6, Side::Home);
    CHECK(value_of(w, "Streak") == doctest::Approx(1.0));
    CHECK(value_of(w, "Weighted_Streak") == doctest::Approx(1.0));

    auto losses = sequence({{0, 1}, {0, 1}, {0, 1}, {0, 1}, {0, 1}, {0, 1}});
    auto l = streak_features(losses, 6, Side::Home);
    CHECK(value_of(l, "Streak") == 0.0);
    CHECK(value_of(l, "Weighted_Streak") == 0.0);

    auto mixed = sequence({{1, 0}, {1, 0}, {1, 0}, {0, 0}, {0, 0}, {0, 1}});
    auto m = streak_features(mixed, 6, Side::Home);
    CHECK(value_of(m, "Streak") == doctest::Approx(11.0 / 18.0));
    CHECK(value_of(m, "Weighted_Streak") == doctest::Approx(54.0 / 126.0));

    auto short_history = sequence({{1, 0}, {1, 0}});
    CHECK(is_missing(value_of(streak_features(short_history, 2, Side::Home), "Streak")));
}

TEST_CASE("Baboota form moves a share of the loser's form") {
    auto store = f1_with_next();
    // M1: A beats B -> A 1.33, B 0.67. M2 draw B-C: diff -0.33 -> B 0.7789, C 0.8911.
    // M3: A beats C -> A 1.33 + 0.33 * 0.8911.
    const double a1 = 1.33, b1 = 0.67;
    const double diff = b1 - 1.0;
    const double b2 = b1 - 0.33 * diff;
    const double c2 = 1.0 + 0.33 * diff;
    const double a2 = a1 + 0.33 * c2;
    auto f = streak_features(store, 3, Side::Home);
    CHECK(value_of(f, "Form") == doctest::Approx(a2).epsilon(1e-12));
    CHECK(value_of(streak_features(store, 3, Side::Away), "Form") == doctest::Approx(b2).epsilon(1e-12));
    CHECK(value_of(streak_features(store, 0, Side::Home), "Form") == 1.0);
}

TEST_CASE("venue statistics and league table") {
    auto store = f1_with_next();
    FeatureConfig cfg;
    auto a = venue_stats(store, 3, Side::Home, cfg);
    CHECK(value_of(a, "L_down_1") == 5.0);
    CHECK(value_of(a, "L_up_1") == 0.0);
    CHECK(value_of(a, "L_down_2") == 5.0);
    CHECK(value_of(a, "L_up_3") == doctest::Approx(6.0 - 8.0 / 3.0));
    CHECK(is_missing(value_of(a, "L_up_4")));
    CHECK(value_of(a, "Home_venue_win_pct") == 1.0);
    CHECK(value_of(a, "Away_venue_win_pct") == 1.0);
    CHECK(value_of(a, "win_pct") == 1.0);
    CHECK(value_of(a, "GS_avg") == 2.5);
    CHECK(value_of(a, "GS_std") == 0.5);
    CHECK(value_of(a, "Home_venue_GS_std") == 0.0);
    CHECK(value_of(a, "win_pct_last5") == 1.0);

    auto m = match_features(store, 3, cfg);
    CHECK(value_of(m, "home_venue_goal_scores_avg") == 1.0);
    CHECK(value_of(m, "away_venue_goal_scores_avg") == doctest::Approx(4.0 / 3.0));
    CHECK(value_of(m, "home_venue_win_pct") == doctest::Approx(1.0 / 3.0));
    CHECK(value_of(m, "days_since_first_match") == 21);
    CHECK(value_of(m, "quarter") == 4);
    CHECK(value_of(m, "Round") == 3);
    CHECK(is_missing(value_of(m, "team_cnt")));
}

TEST_CASE("rating features") {
    auto store = load_f1();
    RatingConfig rc;
    rc.elo_home_adv = 0.0;
    auto start = replay(store, rc, 0);
    auto h = rating_features(store, start, 0, Side::Home);
    CHECK(value_of(h, "elo") == 1500.0);
    CHECK(value_of(h, "pi_rating") == 0.0);

    auto before_m2 = replay(store, rc, 1);
    CHECK(value_of(rating_features(store, before_m2, 1, Side::Home), "elo") == doctest::Approx(1490.0));
    CHECK_THROWS_AS(rating_features(store, before_m2, 2, Side::Home), StaleSnapshot);

    auto eg = berrar_expected({before_m2.get("ENG", "B"), before_m2.get("ENG", "C")}, rc.berrar);
    CHECK(value_of(rating_features(store, before_m2, 1, Side::Home), "EG") == eg.home);
    CHECK(value_of(rating_features(store, before_m2, 1, Side::Away), "EG") == eg.away);

    // The builder reads the same values from its timeline.
    FeatureConfig fc;
    fc.ratings = rc;
    FeatureBuilder builder(store, fc);
    std::vector<MatchId> ids{0, 1, 2};
    auto m = builder.build(ids, {"elo_HT", "EG_AT", "pi_rating_HT", "PageRank_AT"});
    for (MatchId id : ids) {
        auto snap = replay(store, rc, id);
        auto home = rating_features(store, snap, id, Side::Home);
        auto away = rating_features(store, snap, id, Side::Away);
        CHECK(m.columns[0][id] == value_of(home, "elo"));
        CHECK(m.columns[1][id] == value_of(away, "EG"));
        CHECK(m.columns[2][id] == value_of(home, "pi_rating"));
        const double pr = value_of(away, "PageRank");
        CHECK((is_missing(pr) ? is_missing(m.columns[3][id]) : m.columns[3][id] == doctest::Approx(pr)));
    }
}

TEST_CASE("builder output") {
    auto store = load_f1();
    FeatureBuilder builder(store, {});

    auto empty = builder.build({}, resolve_feature_spec("table8_wdl"));
    CHECK(empty.rows() == 0);
    CHECK(empty.names.size() == 6);

    std::vector<MatchId> ids{2};
    auto table8 = builder.build(ids, resolve_feature_spec("table8_wdl"));
    CHECK(table8.names == resolve_feature_spec("table8_wdl"));
    CHECK(table8.outcome[0] == 2.0);
    CHECK(table8.home_goals[0] == 0.0);

    auto full = builder.build(ids, feature_catalog());
    int present = 0;
    for (const auto& col : full.columns) present += is_missing(col[0]) ? 0 : 1;
    CHECK(present == 104);
    CHECK_THROWS_AS(builder.build(ids, {"bogus"}), UnknownFeature);
}

TEST_CASE("matrix CSV round trip") {
    auto store = load_f1();
    FeatureBuilder builder(store, {});
    std::vector<MatchId> ids{0, 1, 2};
    auto m = builder.build(ids, feature_catalog());
    std::ostringstream out;
    write_matrix_csv(out, m);
    std::istringstream in(out.str());
    auto back = read_matrix_csv(in);
    REQUIRE(back.names == m.names);
    CHECK(back.match_ids == m.match_ids);
    for (std::size_t c = 0; c < m.columns.size(); ++c) {
        for (std::size_t r = 0; r < m.rows(); ++r) {
            const double a = m.columns[c][r], b = back.columns[c][r];
            CHECK((is_missing(a) ? is_missing(b) : a == b));
        }
    }
    CHECK(back.outcome == m.outcome);
    CHECK(back.home_goals == m.home_goals);
}

TEST_CASE("features never look at later matches") {
    auto store = pitchcast::testing::random_league(11, 8, 3);
    FeatureBuilder full(store, {});
    for (MatchId m : {MatchId{0}, MatchId{5}, MatchId{57}, MatchId{60}, MatchId{112}, MatchId{150}}) {
        auto cut = pitchcast::testing::prefix(store, m + 1);
        FeatureBuilder truncated(cut, {});
        const auto a = full.catalog_row(m);
        const auto b = truncated.catalog_row(m);
        REQUIRE(a.size() == b.size());
        for (std::size_t c = 0; c < a.size(); ++c) {
            const bool same = is_missing(a[c]) ? is_missing(b[c]) : a[c] == b[c];
            CHECK_MESSAGE(same, "match " << m << " column " << feature_catalog()[c]);
        }
    }
}

TEST_CASE("bounded features and determinism") {
    auto store = pitchcast::testing::random_league(5, 10, 3);
    FeatureBuilder builder(store, {});
    std::vector<MatchId> ids;
    for (MatchId id = 0; id < store.size(); id += 7) ids.push_back(id);
    auto a = builder.build(ids, feature_catalog(), 1);
    auto b = builder.build(ids, feature_catalog(), 3);
    for (std::size_t c = 0; c < a.columns.size(); ++c) {
        const auto& name = a.names[c];
        for (std::size_t r = 0; r < a.rows(); ++r) {
            const double v = a.columns[c][r];
            CHECK((is_missing(v) ? is_missing(b.columns[c][r]) : v == b.columns[c][r]));
            if (is_missing(v)) continue;
            if (name.rfind("Streak", 0) == 0 || name.rfind("Weighted_Streak", 0) == 0 ||
                name.find("_pct") != std::string::npos) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
            }
            if (name.find("_std") != std::string::npos || name.find("_STD") != std::string::npos) {
                CHECK(v >= 0.0);
            }
        }
    }
}
