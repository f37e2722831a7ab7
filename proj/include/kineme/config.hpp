#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "kineme/eval.hpp"
#include "kineme/synth.hpp"

namespace kineme {

// Every numeric tolerance and hyperparameter the pipeline uses, in one
// versioned document. CLI flags override individual fields; the effective
// config is echoed into output artefacts for provenance.
struct PipelineConfig {
    int version = 1;
    std::uint64_t seed = 1234;
    int jobs = 0;  // 0 = all hardware threads

    IngestConfig ingest;
    int nmf_rank = 16;
    double nmf_tol = kNmfDefaultTol;
    int nmf_max_iter = kNmfDefaultMaxIter;
    int gmm_components = 16;
    double gmm_tol = kGmmDefaultTol;
    int gmm_max_iter = kGmmDefaultMaxIter;

    int chunk_seconds = 60;

    ModelSpec model_defaults;
    HyperGrid grid;

    int repetitions = 5;
    int folds = 10;

    // optional conversion table files; empty = builtin crosswalks
    std::string bdi_table_path;
    std::string hrsd_table_path;

    GeneratorSpec synth;

    DiscoveryConfig discovery_config(std::uint64_t master_seed) const;
    SeverityTables severity_tables() const;
};

PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const PipelineConfig& c);
PipelineConfig load_pipeline_config(const std::string& path);
void write_effective_config(const std::string& path, const PipelineConfig& c);

}  // namespace kineme
