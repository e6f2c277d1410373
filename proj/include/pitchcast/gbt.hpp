#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pitchcast/features.hpp"

namespace pitchcast {

enum class Objective { MulticlassSoftmax, SquaredError };

std::string objective_name(Objective o);
Objective parse_objective(const std::string& name);

struct GbtConfig {
    int iterations = 500;
    double learning_rate = 0.1;
    int max_depth = 6;
    double min_child_weight = 1.0;
    double l2_leaf_reg = 3.0;
    Objective objective = Objective::MulticlassSoftmax;
    double ordered_encoding_prior = 1.0;
    std::uint64_t permutation_seed = 0;
    std::optional<int> early_stopping_rounds;
    /// Threads for split finding; not part of the model.
    unsigned workers = 1;

    void validate() const;
};

/// encoded[i] = (sum of targets of earlier rows, in `order`, with the same
/// category + a * prior) / (their count + a). `order` lists row positions in
/// processing order; an empty order means row order.
std::vector<double> ordered_encode(const std::vector<std::string>& column, std::span<const double> target,
                                   double a, double prior, std::span<const std::size_t> order = {});

/// Seeded Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

/// Mean softmax cross-entropy of one row and its gradient p - y.
double softmax_cross_entropy(std::span<const double> logits, int label);
std::vector<double> softmax(std::span<const double> logits);

struct TreeNode {
    /// -1 for a leaf.
    int feature = -1;
    double threshold = 0.0;
    bool default_left = true;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

/// Binary regression tree; rows go left when x <= threshold, and missing
/// values follow default_left.
struct Tree {
    std::vector<TreeNode> nodes;
    double predict(std::span<const double> row) const;
    int depth() const;
};

/// Frozen per-category target statistics for inference.
struct CategoryEncoding {
    std::string name;
    double a = 1.0;
    /// One prior per output (class frequencies or the target mean).
    std::vector<double> priors;
    /// category -> (per-output target sums, count)
    std::map<std::string, std::pair<std::vector<double>, double>> table;

    double encode(const std::string& category, std::size_t output) const;
};

struct GbtModel {
    Objective objective = Objective::MulticlassSoftmax;
    int outputs = 1;
    double learning_rate = 0.1;
    std::vector<double> base_scores;
    /// Numeric inputs, then one encoded column per (categorical, output).
    std::vector<std::string> numeric_features;
    std::vector<CategoryEncoding> encodings;
    /// trees[iteration][output]; leaf values already include the step size.
    std::vector<std::vector<Tree>> trees;
    double initial_loss = 0.0;
    std::vector<double> training_curve;
    std::vector<double> validation_curve;
    std::optional<int> best_iteration;

    /// Names of the internal input columns.
    std::vector<std::string> input_names() const;
};

struct Validation {
    FeatureMatrix features;
    std::vector<double> target;
};

/// Multiclass targets are 0/1/2 (home win, draw, away win); regression
/// targets are real. Missing target values are an InputError.
GbtModel fit(const FeatureMatrix& train, std::span<const double> target, const GbtConfig& cfg,
             const Validation* valid = nullptr);

/// Rows of raw scores (one per output) for each matrix row.
std::vector<std::vector<double>> predict_raw(const GbtModel& model, const FeatureMatrix& rows);
/// Multiclass: probability triples. Regression: one value per row.
std::vector<std::vector<double>> predict(const GbtModel& model, const FeatureMatrix& rows);

/// Mean loss of the objective on already-computed raw scores.
double objective_loss(Objective objective, const std::vector<std::vector<double>>& raw, std::span<const double> target);

std::string model_to_json(const GbtModel& model);
GbtModel model_from_json(const std::string& text);

/// Two independent squared-error regressors for home and away goals.
struct ScoreModel {
    GbtModel home;
    GbtModel away;
};

ScoreModel fit_score_model(const FeatureMatrix& train, const GbtConfig& cfg, const FeatureMatrix* valid = nullptr);

}  // namespace pitchcast
