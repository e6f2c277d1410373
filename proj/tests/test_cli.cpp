#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "pitchcast/cli.hpp"
#include "pitchcast/config.hpp"
#include "pitchcast/error.hpp"

namespace fs = std::filesystem;
using pitchcast::cli::run;

namespace {

struct Result {
    int code = 0;
    std::string out, err;
};

Result call(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    Result r;
    r.code = run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("pitchcast_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

const std::string kF1 = PITCHCAST_DATA_DIR "/f1.csv";
const std::string kFixture = PITCHCAST_DATA_DIR "/league_fixture.csv";

/// ingest -> features -> train -> predict -> evaluate on F1 in `dir`.
void f1_pipeline(const fs::path& dir) {
    auto p = [&](const char* f) { return (dir / f).string(); };
    REQUIRE(call({"ingest", "--input", kF1, "--out", p("store.csv")}).code == 0);
    REQUIRE(call({"features", "--store", p("store.csv"), "--out", p("features.csv")}).code == 0);
    REQUIRE(call({"--seed", "11", "train", "--features", p("features.csv"), "--model-out", p("model.json")}).code == 0);
    REQUIRE(call({"predict", "--model", p("model.json"), "--features", p("features.csv"), "--out", p("pred.csv")}).code ==
            0);
    REQUIRE(call({"--seed", "11", "evaluate", "--store", p("store.csv"), "--models",
                  "home_win,wdl_percentage,league_average,team_average,berrar", "--predictions",
                  "gbt=" + p("pred.csv"), "--report", "json", "--out", p("report.json")})
                .code == 0);
}

}  // namespace

TEST_CASE("version and usage") {
    auto v = call({"--version"});
    CHECK(v.code == 0);
    CHECK(v.out.find(pitchcast::cli::kVersion) != std::string::npos);
    CHECK(call({}).code == 1);
    CHECK(call({"bogus"}).code == 1);
    CHECK(call({"train", "--no-such-flag"}).code == 1);
}

TEST_CASE("train with a missing features file exits 2 and writes nothing") {
    const auto dir = scratch("missing");
    const auto model = (dir / "model.json").string();
    auto r = call({"--json-errors", "train", "--features", (dir / "absent.csv").string(), "--model-out", model});
    CHECK(r.code == 2);
    CHECK_FALSE(fs::exists(model));
    CHECK_FALSE(fs::exists(model + ".tmp"));
    const auto err = nlohmann::json::parse(r.err.substr(r.err.find('{')));
    CHECK(err.at("exit_code") == 2);
    CHECK(err.at("error") == "InputError");
}

TEST_CASE("F1 pipeline is byte-identical across runs") {
    const auto a = scratch("det_a"), b = scratch("det_b");
    f1_pipeline(a);
    f1_pipeline(b);
    for (const char* f : {"store.csv", "features.csv", "model.json", "pred.csv", "report.json"}) {
        CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
        CHECK(fs::file_size(a / f) > 0);
    }
    // The external predictions were scored next to the baselines.
    const auto report = nlohmann::json::parse(slurp(a / "report.json"));
    bool found = false;
    for (const auto& row : report.at(0).at("rows")) found = found || row.at("model") == "ext:gbt";
    CHECK(found);
}

TEST_CASE("evaluate consumes an external prediction CSV") {
    const auto dir = scratch("external");
    const auto preds = (dir / "uniform.csv").string();
    {
        std::ofstream out(preds);
        out << "match_id,p_win,p_draw,p_loss\n";
        for (int i = 0; i < 3; ++i) out << i << ",0.3333333333333333,0.3333333333333333,0.3333333333333334\n";
    }
    auto r = call({"evaluate", "--store", kF1, "--models", "home_win", "--predictions", "flat=" + preds, "--report",
                   "csv"});
    REQUIRE(r.code == 0);
    // Validation holds a draw and an away win: (1/9 + 5/18) / 2.
    std::istringstream lines(r.out);
    std::string line;
    double loss = -1;
    while (std::getline(lines, line)) {
        if (line.rfind("RPS,ext:flat,20-21,", 0) == 0) loss = std::stod(line.substr(line.rfind(',') + 1));
    }
    CHECK(loss == doctest::Approx(7.0 / 36.0).epsilon(1e-9));

    {
        std::ofstream bad(preds);
        bad << "match_id,p_win,p_draw,p_loss\n1,0.5,0.5,0.5\n";
    }
    CHECK(call({"evaluate", "--store", kF1, "--models", "home_win", "--predictions", "flat=" + preds}).code == 2);
    {
        std::ofstream partial(preds);
        partial << "match_id,p_win,p_draw,p_loss\n1,0.2,0.3,0.5\n";
    }
    CHECK(call({"evaluate", "--store", kF1, "--models", "home_win", "--predictions", "flat=" + preds}).code == 2);
}

TEST_CASE("tensor export layout") {
    const auto dir = scratch("tensors");
    const auto prefix = (dir / "f1").string();
    REQUIRE(call({"features", "--store", kF1, "--tensors", prefix, "--window", "4"}).code == 0);
    CHECK(fs::file_size(prefix + ".bin") == 3u * 8u * 4u * 4u);
    CHECK(fs::file_size(prefix + ".ids.bin") == 3u * 2u * 4u * 4u);
    const auto meta = nlohmann::json::parse(slurp(prefix + ".meta.json"));
    CHECK(meta.at("shape") == nlohmann::json::array({3, 8, 4}));
    CHECK(meta.at("channel_names").size() == 8);
    CHECK(meta.at("match_ids") == nlohmann::json::array({0, 1, 2}));
    CHECK(meta.at("id_block_path") == "f1.ids.bin");
    CHECK(fs::exists(dir / "f1.ids.bin"));
    // No scratch directories left behind.
    std::size_t entries = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++entries;
    CHECK(entries == 3);
}

TEST_CASE("inputs are left untouched") {
    const auto dir = scratch("untouched");
    const auto before = slurp(kF1);
    REQUIRE(call({"ingest", "--input", kF1, "--out", (dir / "s.csv").string()}).code == 0);
    REQUIRE(call({"features", "--store", kF1, "--out", (dir / "f.csv").string()}).code == 0);
    const auto features_before = slurp(dir / "f.csv");
    REQUIRE(call({"train", "--features", (dir / "f.csv").string(), "--model-out", (dir / "m.json").string()}).code == 0);
    CHECK(slurp(kF1) == before);
    CHECK(slurp(dir / "f.csv") == features_before);
}

TEST_CASE("ratings, selection and score models on the fixture") {
    const auto dir = scratch("fixture");
    auto p = [&](const char* f) { return (dir / f).string(); };
    REQUIRE(call({"ratings", "--store", kFixture, "--as-of", "2016-08-01", "--out", p("ratings.csv")}).code == 0);
    std::istringstream rows(slurp(dir / "ratings.csv"));
    std::string line;
    std::getline(rows, line);
    CHECK(line.rfind("league,team,elo,", 0) == 0);
    int teams = 0;
    while (std::getline(rows, line)) ++teams;
    CHECK(teams == 32);

    REQUIRE(call({"features", "--store", kFixture, "--matches", "season:17-18", "--spec",
                  "EG_HT,EG_AT,pi_rating_HT,pi_rating_AT,point_per_match_HT,GS_avg_HT,elo_HT,elo_AT", "--out",
                  p("f.csv")})
                .code == 0);
    REQUIRE(call({"--workers", "2", "select", "--features", p("f.csv"), "--target", "outcome", "--out", p("sel.json")})
                .code == 0);
    const auto sel = nlohmann::json::parse(slurp(dir / "sel.json"));
    CHECK_FALSE(sel.at("selected").empty());

    REQUIRE(call({"train", "--task", "wdl", "--features", p("f.csv"), "--preset", "@" + p("sel.json"), "--model-out",
                  p("wdl.json")})
                .code == 0);
    REQUIRE(call({"train", "--task", "score", "--features", p("f.csv"), "--preset",
                  "EG_HT,EG_AT,pi_rating_HT,pi_rating_AT", "--model-out", p("score.json")})
                .code == 0);
    REQUIRE(call({"predict", "--model", p("score.json"), "--features", p("f.csv"), "--out", p("goals.csv")}).code == 0);
    CHECK(slurp(dir / "goals.csv").rfind("match_id,home_goals,away_goals\n", 0) == 0);
    CHECK(call({"predict", "--model", p("sel.json"), "--features", p("f.csv"), "--out", p("x.csv")}).code == 2);
}

TEST_CASE("config files") {
    const auto dir = scratch("config");
    pitchcast::PipelineConfig cfg;
    cfg.seed = 5;
    cfg.experiment.gbt.max_depth = 3;
    cfg.experiment.splits.round_x["SYN1"] = 20;
    cfg.selection.cfs_search = pitchcast::CfsSearch::GreedyForward;
    const auto text = pitchcast::config_to_json(cfg);
    const auto back = pitchcast::config_from_json(text);
    CHECK(pitchcast::config_to_json(back) == text);
    CHECK(back.experiment.splits.round_x.at("SYN1") == 20);
    CHECK_THROWS_AS(pitchcast::config_from_json(R"({"gbt": {"max_dept": 3}})"), pitchcast::ConfigError);
    CHECK_THROWS_AS(pitchcast::config_from_json(R"({"paths": {"store": "a.csv", "features": "a.csv"}})"),
                    pitchcast::ConfigError);
    CHECK_THROWS_AS(pitchcast::config_from_json(R"({"gbt": {"learning_rate": 0}})"), pitchcast::ConfigError);
    CHECK_THROWS_AS(pitchcast::config_from_json(R"({"grid": {"learning_rate": [0.1, 0]}})"), pitchcast::ConfigError);

    const auto path = (dir / "bad.json").string();
    std::ofstream(path) << R"({"seed": 1, "colour": "blue"})";
    CHECK(call({"--config", path, "features", "--store", kF1, "--out", (dir / "f.csv").string()}).code == 2);

    // Paths in the config stand in for flags.
    const auto good = (dir / "good.json").string();
    std::ofstream(good) << nlohmann::json{{"paths", {{"store", kF1}, {"features", (dir / "g.csv").string()}}}}.dump();
    CHECK(call({"--config", good, "features"}).code == 0);
    CHECK(fs::exists(dir / "g.csv"));
}
