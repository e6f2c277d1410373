#include "pitchcast/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <json.hpp>
#include <sstream>

#include "pitchcast/config.hpp"
#include "pitchcast/csv.hpp"
#include "pitchcast/error.hpp"
#include "pitchcast/eval.hpp"
#include "pitchcast/experiment.hpp"
#include "pitchcast/features.hpp"
#include "pitchcast/gbt.hpp"
#include "pitchcast/ingest.hpp"
#include "pitchcast/ratings.hpp"
#include "pitchcast/selection.hpp"

namespace pitchcast::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

constexpr const char* kPredictorFormat = "pitchcast-predictor";

/// Writes through a sibling temp file and renames it into place, so a
/// failed stage never leaves a partial artifact behind.
void write_atomic(const std::string& path, const std::function<void(std::ostream&)>& body) {
    if (path.empty()) throw ConfigError("no output path given");
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    try {
        {
            std::ofstream f(tmp, std::ios::binary);
            if (!f) throw InputError("cannot write " + path);
            body(f);
            f.flush();
            if (!f) throw Error("write failed for " + path);
        }
        fs::rename(tmp, target);
    } catch (...) {
        std::error_code ec;
        fs::remove(tmp, ec);
        throw;
    }
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

class StageLog {
public:
    StageLog(std::ostream& err, std::string stage) : err_(err), stage_(std::move(stage)), start_(Clock::now()) {}
    void done(const std::string& detail = "") const {
        const double secs = std::chrono::duration<double>(Clock::now() - start_).count();
        err_ << "stage=" << stage_ << " seconds=" << std::fixed << std::setprecision(3) << secs;
        err_.unsetf(std::ios::floatfield);
        if (!detail.empty()) err_ << ' ' << detail;
        err_ << '\n';
    }

private:
    std::ostream& err_;
    std::string stage_;
    Clock::time_point start_;
};

MatchStore load_store(const std::string& path, const SchemaConfig& schema, std::ostream& err) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open store " + path);
    auto parsed = parse_csv(in, schema);
    for (const auto& issue : parsed.issues) {
        err << "warning: " << path << " line " << issue.line << ": " << issue.message << '\n';
    }
    return std::move(parsed.store);
}

FeatureMatrix load_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open features " + path);
    return read_matrix_csv(in);
}

/// "all", a preset, a comma list, or @file holding a list or a selection
/// report with a "selected" array.
std::vector<std::string> resolve_names(const std::string& spec) {
    if (spec.empty() || spec[0] != '@') return resolve_feature_spec(spec);
    const auto text = read_text(spec.substr(1));
    std::vector<std::string> names;
    const auto j = json::parse(text, nullptr, false);
    if (!j.is_discarded() && j.is_object() && j.contains("selected")) {
        for (const auto& n : j.at("selected")) names.push_back(n.get<std::string>());
    } else {
        std::string token;
        for (char c : text + "\n") {
            if (c == ',' || c == '\n' || c == '\r') {
                const auto b = token.find_first_not_of(" \t"), e = token.find_last_not_of(" \t");
                if (b != std::string::npos) names.push_back(token.substr(b, e - b + 1));
                token.clear();
            } else {
                token += c;
            }
        }
    }
    if (names.empty()) throw InputError("feature list " + spec + " is empty");
    std::string joined;
    for (const auto& n : names) joined += (joined.empty() ? "" : ",") + n;
    return resolve_feature_spec(joined);
}

/// "all", "a-b" (inclusive), "i,j,k" or "season:<label>".
std::vector<MatchId> resolve_matches(const std::string& spec, const MatchStore& store) {
    std::vector<MatchId> ids;
    if (spec == "all") {
        for (MatchId i = 0; i < store.size(); ++i) ids.push_back(i);
        return ids;
    }
    if (spec.rfind("season:", 0) == 0) {
        const auto label = spec.substr(7);
        for (const auto& r : store.records()) {
            if (r.season == label) ids.push_back(r.match_id);
        }
        if (ids.empty()) throw InputError("no matches in season " + label);
        return ids;
    }
    auto number = [&](const std::string& s) -> MatchId {
        std::size_t pos = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(s, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != s.size() || s.empty()) throw InputError("bad match selector '" + spec + "'");
        if (v >= store.size()) throw InputError("match id " + s + " is outside the store");
        return static_cast<MatchId>(v);
    };
    if (auto dash = spec.find('-'); dash != std::string::npos) {
        const MatchId a = number(spec.substr(0, dash)), b = number(spec.substr(dash + 1));
        if (b < a) throw InputError("empty match range '" + spec + "'");
        for (MatchId i = a; i <= b; ++i) ids.push_back(i);
        return ids;
    }
    std::stringstream in(spec);
    std::string part;
    while (std::getline(in, part, ',')) ids.push_back(number(part));
    return ids;
}

std::string format_number(double v) { return csv::format_double(v); }

// ---- subcommands ----

struct IngestArgs {
    std::string input, out, date_format;
    std::vector<std::string> append;
    bool strict = false;
};

void cmd_ingest(const IngestArgs& a, PipelineConfig& cfg, std::ostream& err) {
    StageLog log(err, "ingest");
    if (!a.date_format.empty()) cfg.schema.date_fallback_pattern = a.date_format;
    auto read = [&](const std::string& path) {
        std::ifstream in(path);
        if (!in) throw InputError("cannot open " + path);
        auto parsed = parse_csv(in, cfg.schema, a.strict);
        for (const auto& issue : parsed.issues) {
            err << "warning: " << path << " line " << issue.line << ": " << issue.message << '\n';
        }
        return std::move(parsed.store);
    };
    MatchStore store = read(a.input);
    std::size_t duplicates = 0;
    for (const auto& extra : a.append) {
        auto merged = append_matches(store, read(extra));
        duplicates += merged.duplicates;
        store = std::move(merged.store);
    }
    const auto out = a.out.empty() ? cfg.paths.store : a.out;
    write_atomic(out, [&](std::ostream& o) { write_store_csv(o, store, cfg.schema); });
    log.done("matches=" + std::to_string(store.size()) + " duplicates=" + std::to_string(duplicates));
}

struct RatingsArgs {
    std::string store, as_of, out;
};

void cmd_ratings(const RatingsArgs& a, const PipelineConfig& cfg, std::ostream& err) {
    StageLog log(err, "ratings");
    const auto store = load_store(a.store.empty() ? cfg.paths.store : a.store, cfg.schema, err);
    MatchId up_to = store.size();
    if (!a.as_of.empty()) {
        const auto date = parse_iso_date(a.as_of);
        if (!date) throw InputError("bad --as-of date '" + a.as_of + "'");
        up_to = 0;
        while (up_to < store.size() && store[up_to].date < *date) ++up_to;
    }
    const auto snap = replay(store, cfg.experiment.features.ratings, up_to);
    write_atomic(a.out, [&](std::ostream& o) {
        csv::write_row(o, {"league", "team", "elo", "pi_home", "pi_away", "berrar_att_home", "berrar_att_away",
                           "berrar_def_home", "berrar_def_away", "pagerank", "last_match_id"});
        for (const auto& [key, t] : snap.teams) {
            csv::write_row(o, {key.first, key.second, format_number(t.elo), format_number(t.pi_home),
                               format_number(t.pi_away), format_number(t.berrar_att_home),
                               format_number(t.berrar_att_away), format_number(t.berrar_def_home),
                               format_number(t.berrar_def_away), format_number(t.pagerank),
                               t.last_updated ? std::to_string(*t.last_updated) : ""});
        }
    });
    log.done("teams=" + std::to_string(snap.teams.size()) + " as_of_match=" + std::to_string(up_to));
}

struct FeaturesArgs {
    std::string store, spec = "all", matches = "all", out, tensors;
    int window = 5;
    bool no_padding = false;
};

void write_tensor_files(const std::string& prefix, std::span<const RecencyTensor> tensors, std::span<const int> labels,
                        const TeamVocabulary& vocab) {
    // Build in a scratch directory next to the target, then move each file.
    const fs::path target(prefix);
    const fs::path dir = target.has_parent_path() ? target.parent_path() : fs::path(".");
    const fs::path scratch = dir / (".tmp-" + target.filename().string());
    fs::remove_all(scratch);
    fs::create_directories(scratch);
    try {
        write_tensors((scratch / target.filename()).string(), tensors, labels, vocab);
        for (const char* ext : {".bin", ".ids.bin", ".meta.json"}) {
            fs::rename(scratch / (target.filename().string() + ext), dir / (target.filename().string() + ext));
        }
    } catch (...) {
        std::error_code ec;
        fs::remove_all(scratch, ec);
        throw;
    }
    fs::remove_all(scratch);
}

void cmd_features(const FeaturesArgs& a, const PipelineConfig& cfg, std::ostream& err) {
    StageLog log(err, "features");
    const auto store = load_store(a.store.empty() ? cfg.paths.store : a.store, cfg.schema, err);
    const auto ids = resolve_matches(a.matches, store);
    const auto out = a.out.empty() ? cfg.paths.features : a.out;
    if (out.empty() && a.tensors.empty()) throw ConfigError("features needs --out or --tensors");
    if (!out.empty()) {
        const auto names = resolve_names(a.spec);
        FeatureBuilder builder(store, cfg.experiment.features);
        const auto matrix = builder.build(ids, names, cfg.experiment.workers);
        write_atomic(out, [&](std::ostream& o) { write_matrix_csv(o, matrix); });
    }
    if (!a.tensors.empty()) {
        if (a.window < 1) throw ConfigError("--window must be >= 1");
        const TeamVocabulary vocab(store);
        std::vector<RecencyTensor> tensors;
        std::vector<int> labels;
        for (MatchId id : ids) {
            tensors.push_back(recency_tensor(store, id, a.window, vocab, PaddingPolicy{!a.no_padding}));
            const auto o = store[id].outcome();
            labels.push_back(o ? static_cast<int>(*o) : -1);
        }
        write_tensor_files(a.tensors, tensors, labels, vocab);
    }
    log.done("rows=" + std::to_string(ids.size()));
}

struct SelectArgs {
    std::string features, target = "outcome", stage = "all", out;
};

void cmd_select(const SelectArgs& a, const PipelineConfig& cfg, std::ostream& err) {
    StageLog log(err, "select");
    SelectionStage stage;
    if (a.stage == "all") {
        stage = SelectionStage::All;
    } else if (a.stage == "filter") {
        stage = SelectionStage::Filter;
    } else if (a.stage == "relieff") {
        stage = SelectionStage::Relieff;
    } else if (a.stage == "cfs") {
        stage = SelectionStage::Cfs;
    } else {
        throw ConfigError("unknown stage '" + a.stage + "'");
    }
    const auto m = load_matrix(a.features.empty() ? cfg.paths.features : a.features);
    const auto report = run_selection(m, a.target, stage, cfg.selection);
    write_atomic(a.out, [&](std::ostream& o) { o << selection_report_json(report, stage); });
    log.done("selected=" + std::to_string(report.subset.selected.size()));
}

struct TrainArgs {
    std::string task = "wdl", features, preset = "table8", model_out;
};

void cmd_train(const TrainArgs& a, const PipelineConfig& cfg, std::ostream& err) {
    StageLog log(err, "train");
    if (a.task != "wdl" && a.task != "score") throw ConfigError("--task must be wdl or score");
    const auto out = a.model_out.empty() ? cfg.paths.models : a.model_out;
    if (out.empty()) throw ConfigError("train needs --model-out");
    const auto m = load_matrix(a.features.empty() ? cfg.paths.features : a.features);
    if (!m.has_targets()) throw InputError("features file has no target columns");
    const auto& ex = cfg.experiment;

    json doc;
    doc["format"] = kPredictorFormat;
    doc["version"] = 1;
    doc["task"] = a.task;
    json models = json::object();
    if (a.task == "wdl") {
        const auto names = resolve_names(a.preset == "table8" ? "table8_wdl" : a.preset);
        const auto model = train_wdl(m, names, ex.gbt, ex.holdout_fraction);
        models["outcome"] = json::parse(model_to_json(model));
    } else {
        const auto home = resolve_names(a.preset == "table8" ? "table8_home_goals" : a.preset);
        const auto away = resolve_names(a.preset == "table8" ? "table8_away_goals" : a.preset);
        const auto model = train_score(m, home, away, ex.gbt, ex.holdout_fraction);
        models["home_goals"] = json::parse(model_to_json(model.home));
        models["away_goals"] = json::parse(model_to_json(model.away));
    }
    doc["models"] = models;
    write_atomic(out, [&](std::ostream& o) { o << doc.dump(1) << '\n'; });
    log.done("rows=" + std::to_string(m.rows()));
}

struct PredictArgs {
    std::string model, features, out;
};

void cmd_predict(const PredictArgs& a, const PipelineConfig& cfg, std::ostream& err) {
    StageLog log(err, "predict");
    const auto text = read_text(a.model.empty() ? cfg.paths.models : a.model);
    const auto doc = json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || doc.value("format", "") != kPredictorFormat) {
        throw SchemaMismatch("model file is not a pitchcast predictor");
    }
    const auto m = load_matrix(a.features.empty() ? cfg.paths.features : a.features);
    const auto task = doc.value("task", "");
    if (task == "wdl") {
        const auto model = model_from_json(doc.at("models").at("outcome").dump());
        const auto raw = predict(model, m);
        std::vector<ProbTriple> preds;
        for (const auto& r : raw) preds.push_back({r[0], r[1], r[2]});
        write_atomic(a.out, [&](std::ostream& o) { write_prediction_csv(o, m.match_ids, preds); });
    } else if (task == "score") {
        const auto home = model_from_json(doc.at("models").at("home_goals").dump());
        const auto away = model_from_json(doc.at("models").at("away_goals").dump());
        const auto ph = predict(home, m), pa = predict(away, m);
        write_atomic(a.out, [&](std::ostream& o) {
            csv::write_row(o, {"match_id", "home_goals", "away_goals"});
            for (std::size_t i = 0; i < m.rows(); ++i) {
                csv::write_row(o, {std::to_string(m.match_ids[i]), format_number(ph[i][0]), format_number(pa[i][0])});
            }
        });
    } else {
        throw SchemaMismatch("unknown predictor task '" + task + "'");
    }
    log.done("rows=" + std::to_string(m.rows()));
}

struct EvaluateArgs {
    std::string store, models = "default", splits = "default", report = "md", out;
    std::vector<std::string> predictions;
};

void cmd_evaluate(const EvaluateArgs& a, PipelineConfig& cfg, std::ostream& out, std::ostream& err) {
    StageLog log(err, "evaluate");
    const auto format = parse_report_format(a.report);
    const auto store = load_store(a.store.empty() ? cfg.paths.store : a.store, cfg.schema, err);
    if (a.splits != "default") {
        cfg.experiment.splits.anchor_seasons.clear();
        std::stringstream in(a.splits);
        std::string s;
        while (std::getline(in, s, ',')) {
            if (!s.empty()) cfg.experiment.splits.anchor_seasons.push_back(s);
        }
    }
    std::string model_spec = a.models;
    ExternalPredictions external;
    for (const auto& p : a.predictions) {
        const auto eq = p.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--predictions expects name=path, got '" + p + "'");
        const auto name = p.substr(0, eq);
        std::ifstream in(p.substr(eq + 1));
        if (!in) throw InputError("cannot open predictions " + p.substr(eq + 1));
        external[name] = read_prediction_csv(in);
        model_spec += ",ext:" + name;
    }
    const auto models = parse_model_list(model_spec);
    const auto run = evaluate_models(store, models, cfg.experiment, external);
    for (const auto& absent : run.plan.absent) err << "note: anchor season " << absent << " not in store\n";
    for (const auto& [model, label] : run.chosen) err << "note: " << model << " grid choice " << label << '\n';
    const auto text = render_reports(run.reports, format);
    const auto target = a.out.empty() ? cfg.paths.reports : a.out;
    if (target.empty()) {
        out << text;
    } else {
        write_atomic(target, [&](std::ostream& o) { o << text; });
    }
    log.done("splits=" + std::to_string(run.plan.splits.size()));
}

void report_error(std::ostream& err, bool as_json, const char* kind, const std::string& message, int code) {
    if (as_json) {
        err << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << '\n';
    } else {
        err << "error: " << kind << ": " << message << '\n';
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Soccer match-result forecasting pipeline", "pitchcast"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    bool json_errors = false;
    app.add_option("--config", config_path, "JSON pipeline config");
    app.add_option("--seed", seed, "seed for every randomised step");
    app.add_option("--workers", workers, "thread bound (default: all cores)");
    app.add_flag("--json-errors", json_errors, "machine-readable errors on stderr");

    IngestArgs ingest;
    auto* s_ingest = app.add_subcommand("ingest", "parse, validate and merge results files");
    s_ingest->add_option("--input", ingest.input)->required();
    s_ingest->add_option("--append", ingest.append);
    s_ingest->add_option("--out", ingest.out);
    s_ingest->add_option("--date-format", ingest.date_format, "strptime pattern for non-ISO dates");
    s_ingest->add_flag("--strict", ingest.strict, "fail on the first bad row");

    RatingsArgs ratings;
    auto* s_ratings = app.add_subcommand("ratings", "team ratings as of a date");
    s_ratings->add_option("--store", ratings.store);
    s_ratings->add_option("--as-of", ratings.as_of, "YYYY-MM-DD; matches on or after it are ignored");
    s_ratings->add_option("--out", ratings.out)->required();

    FeaturesArgs features;
    auto* s_features = app.add_subcommand("features", "engineered features and recency tensors");
    s_features->add_option("--store", features.store);
    s_features->add_option("--spec", features.spec, "all, a preset, a comma list or @file");
    s_features->add_option("--matches", features.matches, "all, a-b, i,j,k or season:<label>");
    s_features->add_option("--out", features.out);
    s_features->add_option("--tensors", features.tensors, "prefix for recency tensor files");
    s_features->add_option("--window", features.window, "recency window for tensors");
    s_features->add_flag("--no-padding", features.no_padding, "fail on teams without history");

    SelectArgs select;
    auto* s_select = app.add_subcommand("select", "filter, ReliefF and CFS feature selection");
    s_select->add_option("--features", select.features);
    s_select->add_option("--target", select.target);
    s_select->add_option("--stage", select.stage, "all|filter|relieff|cfs");
    s_select->add_option("--out", select.out)->required();

    TrainArgs train;
    auto* s_train = app.add_subcommand("train", "fit a boosted-tree predictor");
    s_train->add_option("--task", train.task, "wdl|score");
    s_train->add_option("--features", train.features);
    s_train->add_option("--preset", train.preset, "table8, a preset, a comma list or @file");
    s_train->add_option("--model-out", train.model_out);

    PredictArgs pred;
    auto* s_predict = app.add_subcommand("predict", "apply a trained predictor");
    s_predict->add_option("--model", pred.model);
    s_predict->add_option("--features", pred.features);
    s_predict->add_option("--out", pred.out)->required();

    EvaluateArgs evaluate;
    auto* s_evaluate = app.add_subcommand("evaluate", "rolling-split evaluation report");
    s_evaluate->add_option("--store", evaluate.store);
    s_evaluate->add_option("--models", evaluate.models, "default or a comma list");
    s_evaluate->add_option("--splits", evaluate.splits, "default or comma-separated anchor seasons");
    s_evaluate->add_option("--report", evaluate.report, "md|csv|json");
    s_evaluate->add_option("--out", evaluate.out);
    s_evaluate->add_option("--predictions", evaluate.predictions, "name=path of a match_id,p_win,p_draw,p_loss CSV");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : load_config(config_path);
        if (seed) cfg.seed = *seed;
        if (workers) cfg.workers = *workers;
        cfg.propagate();
        cfg.validate();

        if (s_ingest->parsed()) cmd_ingest(ingest, cfg, err);
        if (s_ratings->parsed()) cmd_ratings(ratings, cfg, err);
        if (s_features->parsed()) cmd_features(features, cfg, err);
        if (s_select->parsed()) cmd_select(select, cfg, err);
        if (s_train->parsed()) cmd_train(train, cfg, err);
        if (s_predict->parsed()) cmd_predict(pred, cfg, err);
        if (s_evaluate->parsed()) cmd_evaluate(evaluate, cfg, out, err);
        return 0;
    } catch (const InputError& e) {
        report_error(err, json_errors, e.kind(), e.what(), 2);
        return 2;
    } catch (const Error& e) {
        report_error(err, json_errors, e.kind(), e.what(), 3);
        return 3;
    } catch (const std::exception& e) {
        report_error(err, json_errors, "InternalError", e.what(), 3);
        return 3;
    }
}

}  // namespace pitchcast::cli
