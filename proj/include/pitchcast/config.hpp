#pragma once

#include <cstdint>
#include <string>

#include "pitchcast/experiment.hpp"
#include "pitchcast/ingest.hpp"
#include "pitchcast/selection.hpp"

namespace pitchcast {

/// Default artifact locations; command-line flags take precedence.
struct PipelinePaths {
    std::string store;
    std::string features;
    std::string models;
    std::string reports;
};

/// Everything a pipeline run depends on. Ratings live in
/// experiment.features.ratings.
struct PipelineConfig {
    PipelinePaths paths;
    SchemaConfig schema;
    ExperimentConfig experiment;
    SelectionConfig selection;
    std::uint64_t seed = 0;
    /// 0 means one per hardware thread.
    unsigned workers = 0;

    /// Pushes seed and worker count into the component configs.
    void propagate();
    /// Throws ConfigError; set paths must be distinct.
    void validate() const;
};

/// Parses a JSON config. Unknown keys are rejected so typos surface.
PipelineConfig config_from_json(const std::string& text);
PipelineConfig load_config(const std::string& path);
std::string config_to_json(const PipelineConfig& cfg);

}  // namespace pitchcast
