#pragma once

#include <string>
#include <vector>

#include "pitchcast/features.hpp"

namespace pitchcast {

enum class CfsSearch { BestFirst, GreedyForward };

struct SelectionConfig {
    int bins = 10;
    int filter_top = 20;
    int relieff_neighbors = 10;
    /// 0 samples every instance.
    int relieff_samples = 0;
    int relieff_top = 20;
    int max_candidates = 40;
    int cfs_stall_limit = 5;
    CfsSearch cfs_search = CfsSearch::BestFirst;
    unsigned workers = 1;

    void validate() const;
};

/// Class codes 0..classes-1 for a target column. "outcome" is used as is;
/// goal counts are binned into {0, 1, 2, 3+}. Rows with a missing target are
/// rejected with InputError.
struct DiscreteTarget {
    std::vector<int> codes;
    int classes = 0;
};
DiscreteTarget discretize_target(const std::vector<double>& values, bool goal_counts);

/// Replaces missing cells by the column median (0 for an all-missing column).
FeatureMatrix impute_median(FeatureMatrix m);

/// Equal-frequency bin codes. Columns with at most `bins` distinct values
/// keep one code per value; otherwise a value with `below` smaller entries
/// lands in min(bins - 1, floor(bins * below / n)).
std::vector<int> equal_frequency_bins(const std::vector<double>& column, int bins);

double entropy(const std::vector<int>& codes);
double information_gain(const std::vector<int>& x, const std::vector<int>& y);
double symmetrical_uncertainty(const std::vector<int>& x, const std::vector<int>& y);
double chi_square(const std::vector<int>& x, const std::vector<int>& y);
/// Sum over classes c of P(c) * |pearson(x, [y == c])|.
double class_correlation(const std::vector<double>& x, const std::vector<int>& y, int classes);

struct FeatureRank {
    std::string name;
    double chi_square = 0.0;
    double symmetrical_uncertainty = 0.0;
    double correlation = 0.0;
    double information_gain = 0.0;
    /// 1 = best, per method in the order above.
    int ranks[4] = {0, 0, 0, 0};
    double median_rank = 0.0;
};

struct RankedFeatures {
    std::vector<FeatureRank> features;  // matrix column order
};

/// Scores and ranks every numeric column. Throws DegenerateTarget for a
/// single-class target.
RankedFeatures filter_rank(const FeatureMatrix& m, const DiscreteTarget& target, const SelectionConfig& cfg = {});

/// The k names with the smallest median rank, ties by name.
std::vector<std::string> top_k_by_median(const RankedFeatures& ranked, int k);

struct ReliefResult {
    std::vector<std::pair<std::string, double>> scores;  // matrix column order
    std::vector<std::string> top;
};

/// ReliefF with k nearest hits and k nearest misses per other class, misses
/// weighted by class prior. Instances 0..samples-1 are the samples.
/// Throws TooFewInstances when a class has fewer than k + 1 instances.
ReliefResult relieff(const FeatureMatrix& m, const DiscreteTarget& target, const SelectionConfig& cfg = {});

struct CfsStep {
    std::vector<std::string> subset;
    double merit = 0.0;
};

struct SubsetResult {
    std::vector<std::string> selected;  // sorted by name
    double merit = 0.0;
    std::vector<CfsStep> trace;
};

/// Pairwise symmetrical uncertainties of discretized candidates.
struct CfsCorrelations {
    std::vector<std::string> names;
    std::vector<double> feature_class;
    std::vector<std::vector<double>> feature_feature;
};
CfsCorrelations cfs_correlations(const FeatureMatrix& m, const DiscreteTarget& target, int bins);

/// k * mean(r_cf) / sqrt(k + k(k-1) * mean(r_ff)) for the given indices.
double cfs_merit(const CfsCorrelations& c, const std::vector<std::size_t>& subset);

SubsetResult cfs_select(const FeatureMatrix& m, const DiscreteTarget& target, const SelectionConfig& cfg = {});

struct SelectionReport {
    std::string target;
    std::vector<std::string> filter_top;
    std::vector<std::string> relieff_top;
    std::vector<std::string> candidates;
    SubsetResult subset;
    RankedFeatures ranked;
    ReliefResult relief;
};

enum class SelectionStage { All, Filter, Relieff, Cfs };

/// Imputes, discretizes the target and runs the requested stages. With
/// Cfs alone every column is a candidate.
SelectionReport run_selection(const FeatureMatrix& m, const std::string& target_column, SelectionStage stage,
                              const SelectionConfig& cfg = {});

std::string selection_report_json(const SelectionReport& report, SelectionStage stage);

}  // namespace pitchcast
