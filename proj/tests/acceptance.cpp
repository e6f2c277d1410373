// One PASS/FAIL line per acceptance criterion; exits nonzero on any FAIL.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pitchcast/cli.hpp"
#include "pitchcast/eval.hpp"
#include "pitchcast/experiment.hpp"
#include "pitchcast/gbt.hpp"
#include "pitchcast/parallel.hpp"
#include "pitchcast/ratings.hpp"
#include "pitchcast/selection.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace pitchcast;

namespace {

struct Outcome_ {
    bool pass = true;
    std::string failure;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) {
            pass = false;
            failure = what;
        }
    }
};

using Check = std::function<void(Outcome_&)>;

MatchRecord result(int hg, int ag) {
    MatchRecord r;
    r.season = "20-21";
    r.league = "TST";
    r.home_team = "H";
    r.away_team = "A";
    r.home_goals = hg;
    r.away_goals = ag;
    return r;
}

FeatureMatrix numeric(const std::vector<std::string>& names, const std::vector<std::vector<double>>& cols) {
    return oracles::matrix_of(names, cols);
}

bool nonincreasing(const GbtModel& m) {
    double prev = m.initial_loss;
    for (double l : m.training_curve) {
        if (l > prev) return false;
        prev = l;
    }
    return true;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

const std::string kF1 = PITCHCAST_DATA_DIR "/f1.csv";
const std::string kFixture = PITCHCAST_DATA_DIR "/league_fixture.csv";

void metrics(Outcome_& o) {
    o.require(std::fabs(rps({0.5, 0.3, 0.2}, Outcome::Win) - 0.145) <= 1e-12, "rps worked example");
    const std::vector<GoalPair> pred{{2.0, 1.0}}, act{{1.0, 1.0}};
    o.require(std::fabs(rmse(pred, act) - std::sqrt(0.5)) <= 1e-12, "rmse worked example");
    std::mt19937 rng(5);
    std::gamma_distribution<double> g(0.5, 1.0);
    for (int i = 0; i < 10000; ++i) {
        double a = g(rng), b = g(rng), c = g(rng);
        const double s = a + b + c;
        ProbTriple p{a / s, b / s, 1.0 - a / s - b / s};
        if (p.p_loss < 0) p.p_loss = 0;
        const double v = rps(p, static_cast<Outcome>(i % 3));
        o.require(v >= 0.0 && v <= 1.0, "rps out of [0,1]");
    }
    o.detail << "rps(.5,.3,.2|win)=" << rps({0.5, 0.3, 0.2}, Outcome::Win) << " rmse=" << rmse(pred, act)
             << " fuzzed=10000";
}

void ratings(Outcome_& o) {
    RatingConfig cfg;
    auto store = testing::random_league(8, 20, 3);
    o.require(store.size() >= 1000, "replay too short");
    auto snap = replay(store, cfg, static_cast<MatchId>(store.size()));
    double total = 0.0;
    for (const auto& [key, r] : snap.teams) total += r.elo;
    const double drift = std::fabs(total - cfg.elo_initial * static_cast<double>(snap.teams.size()));
    o.require(drift <= 1e-9, "elo sum drifted");

    // A result matching the expected margin leaves pi ratings unchanged.
    double worst_zero = 0.0;
    for (int g = -4; g <= 4; ++g) {
        RatingPair p;
        const double mag = cfg.pi_c * std::log(1.0 + std::abs(g)) / std::log(cfg.pi_b);
        p.home.pi_home = g < 0 ? -mag : mag;
        p.home.pi_away = 0.3;
        p.away.pi_home = -0.2;
        o.require(std::fabs(pi_expected_margin(p, cfg) - g) <= 1e-12, "expected margin setup");
        auto out = pi_update(p, result(g > 0 ? g : 0, g < 0 ? -g : 0), cfg);
        worst_zero = std::max({worst_zero, std::fabs(out.home.pi_home - p.home.pi_home),
                               std::fabs(out.home.pi_away - p.home.pi_away),
                               std::fabs(out.away.pi_home - p.away.pi_home),
                               std::fabs(out.away.pi_away - p.away.pi_away)});
    }
    o.require(worst_zero <= 1e-12, "pi changed on an exact result");

    // Mirroring the fixture mirrors the deltas.
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> r(-1.5, 1.5);
    std::uniform_int_distribution<int> goals(0, 5);
    for (int i = 0; i < 1000; ++i) {
        RatingPair p;
        p.home.pi_home = r(rng);
        p.home.pi_away = r(rng);
        p.away.pi_home = r(rng);
        p.away.pi_away = r(rng);
        const int hg = goals(rng), ag = goals(rng);
        auto out = pi_update(p, result(hg, ag), cfg);
        RatingPair m;
        m.home.pi_home = p.away.pi_away;
        m.home.pi_away = p.away.pi_home;
        m.away.pi_away = p.home.pi_home;
        m.away.pi_home = p.home.pi_away;
        auto mout = pi_update(m, result(ag, hg), cfg);
        o.require(std::fabs((mout.home.pi_home - m.home.pi_home) - (out.away.pi_away - p.away.pi_away)) <= 1e-12 &&
                      std::fabs((mout.away.pi_away - m.away.pi_away) - (out.home.pi_home - p.home.pi_home)) <= 1e-12,
                  "pi antisymmetry");
    }

    // PageRank per season window (20 teams) against the dense solve.
    double worst_pr = 0.0, worst_sum = 0.0;
    for (const auto& label : store.season_labels()) {
        std::vector<const MatchRecord*> ms;
        for (const auto& rec : store.records())
            if (rec.season == label) ms.push_back(&rec);
        auto got = pagerank_from_matches(ms, cfg.pagerank_damping, cfg.pagerank_tolerance);
        auto want = oracles::dense_pagerank(ms, cfg.pagerank_damping);
        o.require(got.size() == want.size() && got.size() <= 20, "pagerank team set");
        double sum = 0.0;
        for (const auto& [team, v] : got) {
            sum += v;
            worst_pr = std::max(worst_pr, std::fabs(v - want.at(team)));
        }
        worst_sum = std::max(worst_sum, std::fabs(sum - 1.0));
    }
    o.require(worst_sum <= 1e-9, "pagerank does not sum to 1");
    o.require(worst_pr <= 1e-8, "pagerank differs from the dense solve");
    o.detail << "matches=" << store.size() << " elo_drift=" << drift << " pi_zero=" << worst_zero
             << " pagerank_sum_err=" << worst_sum << " pagerank_vs_dense=" << worst_pr;
}

void selection(Outcome_& o) {
    int cfs_cases = 0;
    for (std::uint32_t seed = 100; seed < 112; ++seed) {
        const int features = 6 + static_cast<int>(seed % 7);  // 6..12
        auto [m, t] = oracles::noisy_dataset(seed, 250, features);
        auto got = cfs_select(m, t);
        auto [want, merit] = oracles::exhaustive_cfs(m, t, 10);
        o.require(got.selected == want, "cfs subset differs from exhaustive, seed " + std::to_string(seed));
        o.require(std::fabs(got.merit - merit) <= 1e-12, "cfs merit");
        ++cfs_cases;
    }
    double worst = 0.0;
    for (std::uint32_t seed = 200; seed < 206; ++seed) {
        auto [m, t] = oracles::noisy_dataset(seed, 50 + 30 * (seed - 200), 6, 2 + seed % 2);
        SelectionConfig cfg;
        cfg.workers = 2;
        auto got = relieff(m, t, cfg);
        auto want = oracles::relieff_oracle(m, t, cfg.relieff_neighbors);
        for (std::size_t c = 0; c < want.size(); ++c) worst = std::max(worst, std::fabs(got.scores[c].second - want[c]));
    }
    o.require(worst <= 1e-12, "relieff differs from the oracle");
    o.detail << "cfs_cases=" << cfs_cases << " relieff_max_err=" << worst;
}

void gbt(Outcome_& o) {
    // Softmax gradient.
    std::mt19937 rng(3);
    std::normal_distribution<double> z(0.0, 2.0);
    double worst_grad = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> logits{z(rng), z(rng), z(rng)};
        const int label = static_cast<int>(rng() % 3);
        const auto p = softmax(logits);
        for (int c = 0; c < 3; ++c) {
            auto up = logits, down = logits;
            up[c] += 1e-4;
            down[c] -= 1e-4;
            const double num = (softmax_cross_entropy(up, label) - softmax_cross_entropy(down, label)) / 2e-4;
            worst_grad = std::max(worst_grad, std::fabs(num - (p[c] - (c == label ? 1.0 : 0.0))));
        }
    }
    o.require(worst_grad <= 1e-6, "softmax gradient");

    // Ordered encoding never reads current or later targets.
    std::mt19937 erng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 5 + erng() % 60;
        const unsigned cats = 1 + erng() % 6;
        std::vector<std::string> col(n);
        std::vector<double> target(n);
        for (std::size_t i = 0; i < n; ++i) {
            col[i] = "c" + std::to_string(erng() % cats);
            target[i] = static_cast<double>(erng() % 3);
        }
        const auto order = seeded_permutation(n, erng());
        const auto base = ordered_encode(col, target, 1.0, 0.4, order);
        const std::size_t cut = erng() % n;
        auto altered = target;
        for (std::size_t k = cut; k < n; ++k) altered[order[k]] = 10.0 + static_cast<double>(erng() % 5);
        const auto again = ordered_encode(col, altered, 1.0, 0.4, order);
        for (std::size_t k = 0; k <= cut; ++k) o.require(again[order[k]] == base[order[k]], "encoding leaked");
    }

    // XOR.
    auto xm = numeric({"a", "b"}, {{0, 0, 1, 1}, {0, 1, 0, 1}});
    std::vector<double> xy{0, 1, 1, 0};
    GbtConfig xc;
    xc.objective = Objective::SquaredError;
    xc.iterations = 50;
    xc.max_depth = 2;
    xc.learning_rate = 1.0;
    const double xor_loss = fit(xm, xy, xc).training_curve.back();
    o.require(xor_loss < 1e-6, "xor loss");

    // Monotone training loss on fixture features and noisy synthetic data.
    int fits = 0;
    auto store = testing::load_store(kFixture);
    ExperimentConfig ecfg;
    const auto plan = make_splits(store, ecfg.splits);
    const auto& cols = feature_presets().at("table8_wdl");
    auto prepared = prepare_split(store, plan.splits.front(), ecfg, cols);
    const auto x = prepared.train.select(cols);
    for (double lr : {0.05, 0.1, 0.3}) {
        for (int depth : {1, 3, 6}) {
            GbtConfig c;
            c.learning_rate = lr;
            c.max_depth = depth;
            c.iterations = 60;
            o.require(nonincreasing(fit(x, prepared.train.outcome, c)), "wdl loss increased");
            c.objective = Objective::SquaredError;
            o.require(nonincreasing(fit(x, prepared.train.home_goals, c)), "goal loss increased");
            fits += 2;
        }
    }
    o.detail << "grad_max_err=" << worst_grad << " leakage_columns=100 xor_loss=" << xor_loss
             << " monotone_fits=" << fits;
}

const ReportRow* find_row(const EvaluationRun& run, const std::string& metric, const std::string& model) {
    for (const auto& rep : run.reports)
        if (rep.metric == metric)
            for (const auto& row : rep.rows)
                if (row.model == model) return &row;
    return nullptr;
}

EvaluationRun fixture_run(double& seconds) {
    static std::optional<EvaluationRun> cached;
    static double elapsed = 0.0;
    if (!cached) {
        const auto t0 = std::chrono::steady_clock::now();
        auto store = testing::load_store(kFixture);
        ExperimentConfig cfg;
        cfg.workers = default_workers();
        cached = evaluate_models(
            store, parse_model_list("home_win,wdl_percentage,gbt:table8_wdl,league_average,berrar"), cfg);
        elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    seconds = elapsed;
    return *cached;
}

void desk(Outcome_& o) {
    double seconds = 0.0;
    const auto run = fixture_run(seconds);
    const auto* gbt = find_row(run, "RPS", "gbt:table8_wdl");
    const auto* wdl = find_row(run, "RPS", "wdl_percentage");
    const auto* hw = find_row(run, "RPS", "home_win");
    o.require(gbt && wdl && hw, "missing report rows");
    if (!o.pass) return;
    o.require(gbt->avg_loss < wdl->avg_loss, "gbt not below wdl_percentage");
    o.require(wdl->avg_loss < hw->avg_loss, "wdl_percentage not below home_win");
    o.require(hw->avg_loss >= 0.35 && hw->avg_loss <= 0.55, "home_win outside [0.35, 0.55]");
    o.require(gbt->avg_loss >= 0.18 && gbt->avg_loss <= 0.24, "gbt outside [0.18, 0.24]");
    o.require(seconds < 300.0, "evaluation took too long");
    o.detail << std::setprecision(4) << "gbt=" << gbt->avg_loss << " wdl_percentage=" << wdl->avg_loss
             << " home_win=" << hw->avg_loss << " grid=" << run.chosen.at("gbt:table8_wdl") << " seconds=" << seconds;
}

void task1(Outcome_& o) {
    double seconds = 0.0;
    const auto run = fixture_run(seconds);
    const auto* berrar = find_row(run, "RMSE", "berrar");
    const auto* league = find_row(run, "RMSE", "league_average");
    o.require(berrar && league, "missing report rows");
    if (!o.pass) return;
    o.require(berrar->avg_loss <= league->avg_loss, "berrar above league_average");
    o.require(berrar->avg_loss >= 0.9 && berrar->avg_loss <= 1.4, "berrar outside [0.9, 1.4]");
    o.detail << std::setprecision(4) << "berrar=" << berrar->avg_loss << " league_average=" << league->avg_loss;
}

void determinism(Outcome_& o) {
    const std::vector<std::string> files{"store.csv", "features.csv", "model.json", "pred.csv", "report.json"};
    std::vector<std::vector<std::string>> outputs;
    for (const char* name : {"a", "b"}) {
        const auto dir = fs::temp_directory_path() / (std::string("pitchcast_accept_") + name);
        fs::remove_all(dir);
        fs::create_directories(dir);
        auto p = [&](const char* f) { return (dir / f).string(); };
        const std::vector<std::vector<std::string>> steps{
            {"ingest", "--input", kF1, "--out", p("store.csv")},
            {"features", "--store", p("store.csv"), "--out", p("features.csv")},
            {"--seed", "7", "train", "--features", p("features.csv"), "--model-out", p("model.json")},
            {"predict", "--model", p("model.json"), "--features", p("features.csv"), "--out", p("pred.csv")},
            {"--seed", "7", "evaluate", "--store", p("store.csv"), "--models",
             "home_win,wdl_percentage,league_average,team_average,berrar", "--predictions",
             "gbt=" + p("pred.csv"), "--report", "json", "--out", p("report.json")},
        };
        for (const auto& args : steps) {
            std::ostringstream out, err;
            const int code = cli::run(args, out, err);
            o.require(code == 0, args[0] == "--seed" ? args[2] : args[0]);
        }
        std::vector<std::string> bytes;
        for (const auto& f : files) bytes.push_back(slurp(dir / f));
        outputs.push_back(std::move(bytes));
        fs::remove_all(dir);
    }
    std::size_t total = 0;
    for (std::size_t i = 0; i < files.size(); ++i) {
        o.require(!outputs[0][i].empty(), files[i] + " empty");
        o.require(outputs[0][i] == outputs[1][i], files[i] + " differs");
        total += outputs[0][i].size();
    }
    o.detail << "artifacts=" << files.size() << " bytes=" << total;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, Check>> criteria{
        {"metric_exactness", metrics},   {"rating_invariants", ratings}, {"selection_oracles", selection},
        {"gbt_properties", gbt},         {"desk_ordering", desk},        {"task1_goal_rmse", task1},
        {"pipeline_determinism", determinism},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Outcome_ o;
        try {
            check(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.failure = std::string("exception: ") + e.what();
        }
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << " : " << (o.pass ? o.detail.str() : o.failure) << std::endl;
        if (!o.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
