#include "pitchcast/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <numeric>
#include <random>

#include "pitchcast/error.hpp"
#include "pitchcast/eval.hpp"
#include "pitchcast/parallel.hpp"

namespace pitchcast {

namespace {
constexpr int kFormatVersion = 1;
constexpr int kClasses = 3;
}  // namespace

std::string objective_name(Objective o) {
    return o == Objective::MulticlassSoftmax ? "multiclass_softmax" : "squared_error";
}

Objective parse_objective(const std::string& name) {
    if (name == "multiclass_softmax") return Objective::MulticlassSoftmax;
    if (name == "squared_error") return Objective::SquaredError;
    throw ConfigError("unknown objective '" + name + "'");
}

void GbtConfig::validate() const {
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ConfigError("learning_rate must be in (0, 1]");
    if (max_depth < 0) throw ConfigError("max_depth must be >= 0");
    if (min_child_weight < 0.0) throw ConfigError("min_child_weight must be >= 0");
    if (l2_leaf_reg < 0.0) throw ConfigError("l2_leaf_reg must be >= 0");
    if (!(ordered_encoding_prior > 0.0)) throw ConfigError("ordered_encoding_prior must be > 0");
    if (early_stopping_rounds && *early_stopping_rounds < 1) throw ConfigError("early_stopping_rounds must be >= 1");
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), 0);
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        std::swap(p[i - 1], p[rng() % i]);
    }
    return p;
}

std::vector<double> ordered_encode(const std::vector<std::string>& column, std::span<const double> target, double a,
                                   double prior, std::span<const std::size_t> order) {
    std::vector<std::size_t> identity;
    if (order.empty()) {
        identity.resize(column.size());
        std::iota(identity.begin(), identity.end(), 0);
        order = identity;
    }
    std::map<std::string, std::pair<double, double>> seen;  // sum, count
    std::vector<double> out(column.size(), prior);
    for (std::size_t row : order) {
        auto& [sum, count] = seen[column[row]];
        out[row] = (sum + a * prior) / (count + a);
        sum += target[row];
        count += 1.0;
    }
    return out;
}

std::vector<double> softmax(std::span<const double> logits) {
    const double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - top);
        total += p[i];
    }
    for (double& v : p) v /= total;
    return p;
}

double softmax_cross_entropy(std::span<const double> logits, int label) {
    const double top = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double l : logits) total += std::exp(l - top);
    return -(logits[static_cast<std::size_t>(label)] - top - std::log(total));
}

double Tree::predict(std::span<const double> row) const {
    int i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
        const auto& n = nodes[static_cast<std::size_t>(i)];
        const double v = row[static_cast<std::size_t>(n.feature)];
        const bool left = std::isnan(v) ? n.default_left : v <= n.threshold;
        i = left ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
}

int Tree::depth() const {
    std::vector<int> d(nodes.size(), 0);
    int best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].feature >= 0) {
            d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
            d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
        }
        best = std::max(best, d[i]);
    }
    return best;
}

double CategoryEncoding::encode(const std::string& category, std::size_t output) const {
    auto it = table.find(category);
    if (it == table.end()) return priors[output];
    return (it->second.first[output] + a * priors[output]) / (it->second.second + a);
}

std::vector<std::string> GbtModel::input_names() const {
    std::vector<std::string> names = numeric_features;
    for (const auto& e : encodings) {
        for (std::size_t o = 0; o < e.priors.size(); ++o) names.push_back(e.name + "#" + std::to_string(o));
    }
    return names;
}

namespace {

struct SplitCandidate {
    double gain = -std::numeric_limits<double>::infinity();
    int feature = -1;
    double threshold = 0.0;
    bool default_left = true;
};

struct NodeStats {
    double g = 0.0;
    double h = 0.0;
};

double leaf_score(double g, double h, double lambda) { return g * g / (h + lambda); }

/// Column-major inputs with rows pre-sorted per feature.
struct Inputs {
    std::size_t rows = 0;
    std::vector<std::vector<double>> columns;
    std::vector<std::vector<std::uint32_t>> sorted;   // non-missing rows by value
    std::vector<std::vector<std::uint32_t>> missing;  // rows with NaN

    explicit Inputs(std::vector<std::vector<double>> cols, std::size_t n) : rows(n), columns(std::move(cols)) {
        for (const auto& col : columns) {
            std::vector<std::uint32_t> present, absent;
            for (std::uint32_t r = 0; r < n; ++r) (std::isnan(col[r]) ? absent : present).push_back(r);
            std::stable_sort(present.begin(), present.end(),
                             [&](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
            sorted.push_back(std::move(present));
            missing.push_back(std::move(absent));
        }
    }
};

Tree build_tree(const Inputs& in, const std::vector<double>& g, const std::vector<double>& h, const GbtConfig& cfg) {
    const double lambda = cfg.l2_leaf_reg;
    Tree tree;
    tree.nodes.emplace_back();
    std::vector<int> node_of(in.rows, 0);
    std::vector<int> frontier{0};
    std::vector<NodeStats> stats(1);
    for (std::size_t r = 0; r < in.rows; ++r) {
        stats[0].g += g[r];
        stats[0].h += h[r];
    }

    for (int depth = 0; depth < cfg.max_depth && !frontier.empty(); ++depth) {
        // Frontier slot of each node id, -1 when not being split.
        std::vector<int> slot(tree.nodes.size(), -1);
        for (std::size_t s = 0; s < frontier.size(); ++s) slot[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);

        const std::size_t nf = in.columns.size();
        std::vector<std::vector<SplitCandidate>> per_feature(nf, std::vector<SplitCandidate>(frontier.size()));
        parallel_for(nf, cfg.workers, [&](std::size_t f) {
            const auto& col = in.columns[f];
            std::vector<NodeStats> miss(frontier.size()), run(frontier.size());
            for (std::uint32_t r : in.missing[f]) {
                const int s = slot[static_cast<std::size_t>(node_of[r])];
                if (s < 0) continue;
                miss[static_cast<std::size_t>(s)].g += g[r];
                miss[static_cast<std::size_t>(s)].h += h[r];
            }
            std::vector<double> last(frontier.size(), std::numeric_limits<double>::quiet_NaN());
            auto& best = per_feature[f];
            auto consider = [&](std::size_t s, double lo, double hi) {
                const NodeStats& total = stats[static_cast<std::size_t>(frontier[s])];
                const NodeStats& m = miss[s];
                const double parent = leaf_score(total.g, total.h, lambda);
                double mid = lo + (hi - lo) / 2.0;
                if (!(mid < hi)) mid = lo;
                for (bool missing_left : {true, false}) {
                    const double gl = run[s].g + (missing_left ? m.g : 0.0);
                    const double hl = run[s].h + (missing_left ? m.h : 0.0);
                    const double gr = total.g - gl, hr = total.h - hl;
                    if (hl < cfg.min_child_weight || hr < cfg.min_child_weight) continue;
                    const double gain = leaf_score(gl, hl, lambda) + leaf_score(gr, hr, lambda) - parent;
                    if (gain > best[s].gain) {
                        best[s] = SplitCandidate{gain, static_cast<int>(f), mid, missing_left};
                    }
                    if (m.h == 0.0) break;  // both directions are the same split
                }
            };
            for (std::uint32_t r : in.sorted[f]) {
                const int s = slot[static_cast<std::size_t>(node_of[r])];
                if (s < 0) continue;
                const auto su = static_cast<std::size_t>(s);
                const double v = col[r];
                if (!std::isnan(last[su]) && v > last[su]) consider(su, last[su], v);
                run[su].g += g[r];
                run[su].h += h[r];
                last[su] = v;
            }
        });

        std::vector<int> next;
        bool any = false;
        for (std::size_t s = 0; s < frontier.size(); ++s) {
            SplitCandidate chosen;
            for (std::size_t f = 0; f < nf; ++f) {
                if (per_feature[f][s].gain > chosen.gain) chosen = per_feature[f][s];
            }
            const int id = frontier[s];
            const NodeStats parent = stats[static_cast<std::size_t>(id)];
            // Zero-gain splits are allowed: a pattern like XOR only pays off
            // one level further down.
            const double tolerance = 1e-12 * (1.0 + leaf_score(parent.g, parent.h, lambda));
            if (chosen.feature < 0 || chosen.gain < -tolerance) continue;
            any = true;
            auto& node = tree.nodes[static_cast<std::size_t>(id)];
            node.feature = chosen.feature;
            node.threshold = chosen.threshold;
            node.default_left = chosen.default_left;
            const int left = static_cast<int>(tree.nodes.size());
            node.left = left;
            node.right = left + 1;
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            stats.resize(tree.nodes.size());
            next.push_back(left);
            next.push_back(left + 1);
        }
        if (!any) break;
        for (std::size_t r = 0; r < in.rows; ++r) {
            const auto& n = tree.nodes[static_cast<std::size_t>(node_of[r])];
            if (n.feature < 0) continue;
            const double v = in.columns[static_cast<std::size_t>(n.feature)][r];
            const bool left = std::isnan(v) ? n.default_left : v <= n.threshold;
            node_of[r] = left ? n.left : n.right;
            auto& st = stats[static_cast<std::size_t>(node_of[r])];
            st.g += g[r];
            st.h += h[r];
        }
        frontier = std::move(next);
    }
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        if (tree.nodes[i].feature < 0) tree.nodes[i].value = -stats[i].g / (stats[i].h + lambda);
    }
    return tree;
}

void check_finite(const FeatureMatrix& m) {
    for (std::size_t c = 0; c < m.columns.size(); ++c) {
        for (double v : m.columns[c]) {
            if (std::isinf(v)) throw NonFiniteFeature("column '" + m.names[c] + "' has an infinite value");
        }
    }
}

/// Model inputs for a matrix: numeric columns by name, then encoded columns.
std::vector<std::vector<double>> model_inputs(const GbtModel& model, const FeatureMatrix& m) {
    std::vector<std::vector<double>> cols;
    for (const auto& name : model.numeric_features) {
        const int i = m.index_of(name);
        if (i < 0) throw SchemaMismatch("input lacks model feature '" + name + "'");
        cols.push_back(m.columns[static_cast<std::size_t>(i)]);
    }
    for (const auto& e : model.encodings) {
        auto it = std::find(m.categorical_names.begin(), m.categorical_names.end(), e.name);
        if (it == m.categorical_names.end()) throw SchemaMismatch("input lacks categorical feature '" + e.name + "'");
        const auto& values = m.categorical[static_cast<std::size_t>(it - m.categorical_names.begin())];
        for (std::size_t o = 0; o < e.priors.size(); ++o) {
            std::vector<double> col;
            col.reserve(values.size());
            for (const auto& v : values) col.push_back(e.encode(v, o));
            cols.push_back(std::move(col));
        }
    }
    return cols;
}

std::vector<std::vector<double>> raw_scores(const GbtModel& model, const std::vector<std::vector<double>>& cols,
                                            std::size_t rows, std::size_t upto) {
    std::vector<std::vector<double>> raw(rows, model.base_scores);
    std::vector<double> row(cols.size());
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) row[c] = cols[c][r];
        for (std::size_t it = 0; it < upto; ++it) {
            for (std::size_t o = 0; o < model.trees[it].size(); ++o) raw[r][o] += model.trees[it][o].predict(row);
        }
    }
    return raw;
}

double validation_loss(Objective objective, const std::vector<std::vector<double>>& raw, std::span<const double> y) {
    if (objective == Objective::SquaredError) {
        double s = 0.0;
        for (std::size_t r = 0; r < raw.size(); ++r) s += (raw[r][0] - y[r]) * (raw[r][0] - y[r]);
        return std::sqrt(s / static_cast<double>(raw.size()));
    }
    double total = 0.0;
    for (std::size_t r = 0; r < raw.size(); ++r) {
        const auto p = softmax(raw[r]);
        total += rps(ProbTriple{p[0], p[1], p[2]}, static_cast<Outcome>(static_cast<int>(y[r])));
    }
    return total / static_cast<double>(raw.size());
}

}  // namespace

double objective_loss(Objective objective, const std::vector<std::vector<double>>& raw, std::span<const double> target) {
    double total = 0.0;
    for (std::size_t r = 0; r < raw.size(); ++r) {
        if (objective == Objective::SquaredError) {
            total += (raw[r][0] - target[r]) * (raw[r][0] - target[r]);
        } else {
            total += softmax_cross_entropy(raw[r], static_cast<int>(target[r]));
        }
    }
    return raw.empty() ? 0.0 : total / static_cast<double>(raw.size());
}

GbtModel fit(const FeatureMatrix& train, std::span<const double> target, const GbtConfig& cfg, const Validation* valid) {
    cfg.validate();
    const std::size_t n = train.rows();
    if (n < 2) throw InputError("training needs at least 2 rows");
    if (target.size() != n) throw InputError("target length differs from training rows");
    for (double y : target) {
        if (std::isnan(y)) throw InputError("training target has missing values");
    }
    check_finite(train);

    GbtModel model;
    model.objective = cfg.objective;
    model.learning_rate = cfg.learning_rate;
    model.numeric_features = train.names;
    const bool multiclass = cfg.objective == Objective::MulticlassSoftmax;
    model.outputs = multiclass ? kClasses : 1;
    const auto outputs = static_cast<std::size_t>(model.outputs);

    // Per-output target columns (class indicators or the value itself).
    std::vector<std::vector<double>> per_output(outputs, std::vector<double>(n, 0.0));
    std::vector<double> priors(outputs, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        if (multiclass) {
            const double y = target[r];
            if (!(y == 0.0 || y == 1.0 || y == 2.0)) throw InputError("multiclass target must be 0, 1 or 2");
            per_output[static_cast<std::size_t>(y)][r] = 1.0;
        } else {
            per_output[0][r] = target[r];
        }
    }
    for (std::size_t o = 0; o < outputs; ++o) {
        priors[o] = std::accumulate(per_output[o].begin(), per_output[o].end(), 0.0) / static_cast<double>(n);
    }
    if (multiclass) {
        if (std::count_if(priors.begin(), priors.end(), [](double p) { return p > 0.0; }) < 2) {
            throw DegenerateTarget("training target has a single class");
        }
        for (double p : priors) model.base_scores.push_back(std::log(std::max(p, 1e-6)));
    } else {
        model.base_scores.push_back(priors[0]);
    }

    // Encoded categorical columns: ordered statistics in training, the full
    // table at inference.
    std::vector<std::vector<double>> cols = train.columns;
    const auto permutation = seeded_permutation(n, cfg.permutation_seed);
    for (std::size_t c = 0; c < train.categorical.size(); ++c) {
        CategoryEncoding enc;
        enc.name = train.categorical_names[c];
        enc.a = cfg.ordered_encoding_prior;
        enc.priors = priors;
        const auto& values = train.categorical[c];
        for (std::size_t o = 0; o < outputs; ++o) {
            cols.push_back(ordered_encode(values, per_output[o], enc.a, priors[o], permutation));
        }
        for (std::size_t r = 0; r < n; ++r) {
            auto& entry = enc.table[values[r]];
            entry.first.resize(outputs, 0.0);
            for (std::size_t o = 0; o < outputs; ++o) entry.first[o] += per_output[o][r];
            entry.second += 1.0;
        }
        model.encodings.push_back(std::move(enc));
    }
    const Inputs inputs(std::move(cols), n);

    std::vector<std::vector<double>> valid_cols;
    std::vector<std::vector<double>> valid_raw;
    if (valid != nullptr) {
        if (valid->target.size() != valid->features.rows()) throw InputError("validation target length mismatch");
        valid_cols = model_inputs(model, valid->features);
        valid_raw.assign(valid->features.rows(), model.base_scores);
    }

    std::vector<std::vector<double>> raw(n, model.base_scores);
    double loss = objective_loss(cfg.objective, raw, target);
    model.initial_loss = loss;
    double best_valid = std::numeric_limits<double>::infinity();
    int since_best = 0;

    std::vector<double> g(n), h(n), row(inputs.columns.size());
    for (int it = 0; it < cfg.iterations; ++it) {
        std::vector<Tree> round;
        for (std::size_t o = 0; o < outputs; ++o) {
            for (std::size_t r = 0; r < n; ++r) {
                if (multiclass) {
                    const auto p = softmax(raw[r]);
                    g[r] = p[o] - per_output[o][r];
                    h[r] = std::max(p[o] * (1.0 - p[o]), 1e-16);
                } else {
                    g[r] = raw[r][0] - target[r];
                    h[r] = 1.0;
                }
            }
            round.push_back(build_tree(inputs, g, h, cfg));
        }
        // Per-row tree outputs of this round.
        std::vector<std::vector<double>> delta(n, std::vector<double>(outputs));
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < inputs.columns.size(); ++c) row[c] = inputs.columns[c][r];
            for (std::size_t o = 0; o < outputs; ++o) delta[r][o] = round[o].predict(row);
        }
        // Backtrack the step until the training loss does not go up.
        double step = cfg.learning_rate;
        std::vector<std::vector<double>> candidate;
        double next_loss = loss;
        bool accepted = false;
        for (int attempt = 0; attempt < 40; ++attempt) {
            candidate = raw;
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t o = 0; o < outputs; ++o) candidate[r][o] += step * delta[r][o];
            next_loss = objective_loss(cfg.objective, candidate, target);
            if (next_loss <= loss) {
                accepted = true;
                break;
            }
            step /= 2.0;
        }
        if (!accepted) break;
        for (auto& t : round)
            for (auto& node : t.nodes) node.value *= step;
        raw = std::move(candidate);
        loss = next_loss;
        model.trees.push_back(std::move(round));
        model.training_curve.push_back(loss);

        if (valid != nullptr) {
            std::vector<double> vrow(valid_cols.size());
            for (std::size_t r = 0; r < valid_raw.size(); ++r) {
                for (std::size_t c = 0; c < valid_cols.size(); ++c) vrow[c] = valid_cols[c][r];
                for (std::size_t o = 0; o < outputs; ++o) valid_raw[r][o] += model.trees.back()[o].predict(vrow);
            }
            const double vl = validation_loss(cfg.objective, valid_raw, valid->target);
            model.validation_curve.push_back(vl);
            if (vl < best_valid) {
                best_valid = vl;
                model.best_iteration = static_cast<int>(model.trees.size());
                since_best = 0;
            } else if (cfg.early_stopping_rounds && ++since_best >= *cfg.early_stopping_rounds) {
                break;
            }
        }
    }
    if (valid != nullptr && cfg.early_stopping_rounds && model.best_iteration) {
        model.trees.resize(static_cast<std::size_t>(*model.best_iteration));
    }
    return model;
}

std::vector<std::vector<double>> predict_raw(const GbtModel& model, const FeatureMatrix& rows) {
    return raw_scores(model, model_inputs(model, rows), rows.rows(), model.trees.size());
}

std::vector<std::vector<double>> predict(const GbtModel& model, const FeatureMatrix& rows) {
    auto raw = predict_raw(model, rows);
    if (model.objective == Objective::MulticlassSoftmax) {
        for (auto& r : raw) r = softmax(r);
    }
    return raw;
}

namespace {

nlohmann::ordered_json node_json(const Tree& t, int i, const std::vector<std::string>& names) {
    const auto& n = t.nodes[static_cast<std::size_t>(i)];
    if (n.feature < 0) return {{"leaf", n.value}};
    return {{"feature", names[static_cast<std::size_t>(n.feature)]},
            {"threshold", n.threshold},
            {"default_left", n.default_left},
            {"left", node_json(t, n.left, names)},
            {"right", node_json(t, n.right, names)}};
}

int node_from_json(Tree& t, const nlohmann::json& j, const std::map<std::string, int>& index) {
    const int id = static_cast<int>(t.nodes.size());
    t.nodes.emplace_back();
    if (j.contains("leaf")) {
        t.nodes[static_cast<std::size_t>(id)].value = j.at("leaf").get<double>();
        return id;
    }
    auto it = index.find(j.at("feature").get<std::string>());
    if (it == index.end()) throw SchemaMismatch("tree references unknown input " + j.at("feature").get<std::string>());
    const int left = node_from_json(t, j.at("left"), index);
    const int right = node_from_json(t, j.at("right"), index);
    auto& n = t.nodes[static_cast<std::size_t>(id)];
    n.feature = it->second;
    n.threshold = j.at("threshold").get<double>();
    n.default_left = j.at("default_left").get<bool>();
    n.left = left;
    n.right = right;
    return id;
}

}  // namespace

std::string model_to_json(const GbtModel& model) {
    nlohmann::ordered_json j;
    j["format"] = "pitchcast-gbt";
    j["version"] = kFormatVersion;
    j["objective"] = objective_name(model.objective);
    j["outputs"] = model.outputs;
    j["learning_rate"] = model.learning_rate;
    j["base_scores"] = model.base_scores;
    j["numeric_features"] = model.numeric_features;
    auto encodings = nlohmann::ordered_json::array();
    for (const auto& e : model.encodings) {
        nlohmann::ordered_json table = nlohmann::ordered_json::object();
        for (const auto& [cat, stats] : e.table) table[cat] = {{"sums", stats.first}, {"count", stats.second}};
        encodings.push_back({{"name", e.name}, {"a", e.a}, {"priors", e.priors}, {"table", table}});
    }
    j["encodings"] = encodings;
    const auto names = model.input_names();
    auto trees = nlohmann::ordered_json::array();
    for (const auto& round : model.trees) {
        auto per_output = nlohmann::ordered_json::array();
        for (const auto& t : round) per_output.push_back(node_json(t, 0, names));
        trees.push_back(per_output);
    }
    j["trees"] = trees;
    j["initial_loss"] = model.initial_loss;
    j["training_curve"] = model.training_curve;
    j["validation_curve"] = model.validation_curve;
    j["best_iteration"] = model.best_iteration ? nlohmann::ordered_json(*model.best_iteration) : nullptr;
    return j.dump(1) + "\n";
}

GbtModel model_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaMismatch(std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("format") != "pitchcast-gbt") throw SchemaMismatch("not a pitchcast model file");
        if (j.at("version").get<int>() != kFormatVersion) {
            throw SchemaMismatch("unsupported model version " + j.at("version").dump());
        }
        GbtModel m;
        m.objective = parse_objective(j.at("objective").get<std::string>());
        m.outputs = j.at("outputs").get<int>();
        m.learning_rate = j.at("learning_rate").get<double>();
        m.base_scores = j.at("base_scores").get<std::vector<double>>();
        m.numeric_features = j.at("numeric_features").get<std::vector<std::string>>();
        for (const auto& e : j.at("encodings")) {
            CategoryEncoding enc;
            enc.name = e.at("name").get<std::string>();
            enc.a = e.at("a").get<double>();
            enc.priors = e.at("priors").get<std::vector<double>>();
            for (const auto& [cat, stats] : e.at("table").items()) {
                enc.table[cat] = {stats.at("sums").get<std::vector<double>>(), stats.at("count").get<double>()};
            }
            m.encodings.push_back(std::move(enc));
        }
        std::map<std::string, int> index;
        const auto names = m.input_names();
        for (std::size_t i = 0; i < names.size(); ++i) index[names[i]] = static_cast<int>(i);
        for (const auto& round : j.at("trees")) {
            std::vector<Tree> per_output;
            for (const auto& t : round) {
                Tree tree;
                node_from_json(tree, t, index);
                per_output.push_back(std::move(tree));
            }
            m.trees.push_back(std::move(per_output));
        }
        m.initial_loss = j.at("initial_loss").get<double>();
        m.training_curve = j.at("training_curve").get<std::vector<double>>();
        m.validation_curve = j.at("validation_curve").get<std::vector<double>>();
        if (!j.at("best_iteration").is_null()) m.best_iteration = j.at("best_iteration").get<int>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaMismatch(std::string("malformed model file: ") + e.what());
    }
}

ScoreModel fit_score_model(const FeatureMatrix& train, const GbtConfig& cfg, const FeatureMatrix* valid) {
    if (!train.has_targets()) throw InputError("training matrix has no targets");
    GbtConfig reg = cfg;
    reg.objective = Objective::SquaredError;
    ScoreModel model;
    std::optional<Validation> vh, va;
    if (valid != nullptr) {
        vh = Validation{*valid, valid->home_goals};
        va = Validation{*valid, valid->away_goals};
    }
    model.home = fit(train, train.home_goals, reg, vh ? &*vh : nullptr);
    model.away = fit(train, train.away_goals, reg, va ? &*va : nullptr);
    return model;
}

}  // namespace pitchcast
