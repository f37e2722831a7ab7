#include "kineme/config.hpp"

#include <fstream>

namespace kineme {

DiscoveryConfig PipelineConfig::discovery_config(std::uint64_t master_seed) const {
    DiscoveryConfig dc;
    dc.ingest = ingest;
    dc.nmf_rank = nmf_rank;
    dc.nmf_tol = nmf_tol;
    dc.nmf_max_iter = nmf_max_iter;
    dc.gmm_components = gmm_components;
    dc.gmm_tol = gmm_tol;
    dc.gmm_max_iter = gmm_max_iter;
    dc.nmf_seed = mix_seed(master_seed, 0x6e6d66);
    dc.gmm_seed = mix_seed(master_seed, 0x676d6d);
    return dc;
}

SeverityTables PipelineConfig::severity_tables() const {
    SeverityTables tables;
    if (!bdi_table_path.empty()) tables.bdi = load_conversion_table(bdi_table_path, Scale::Bdi);
    if (!hrsd_table_path.empty()) {
        tables.hrsd = load_conversion_table(hrsd_table_path, Scale::Hrsd);
    }
    return tables;
}

PipelineConfig config_from_json(const nlohmann::json& j) {
    PipelineConfig c;
    const int version = j.value("version", 1);
    if (version != 1) {
        throw ConfigError("unsupported config version " + std::to_string(version));
    }
    c.seed = j.value("seed", c.seed);
    c.jobs = j.value("jobs", c.jobs);

    if (j.contains("ingest")) {
        const auto& i = j.at("ingest");
        c.ingest.frame_column = i.value("frame_column", c.ingest.frame_column);
        c.ingest.time_column = i.value("time_column", c.ingest.time_column);
        c.ingest.pitch_column = i.value("pitch_column", c.ingest.pitch_column);
        c.ingest.yaw_column = i.value("yaw_column", c.ingest.yaw_column);
        c.ingest.roll_column = i.value("roll_column", c.ingest.roll_column);
        c.ingest.success_column = i.value("success_column", c.ingest.success_column);
        const std::string unit = i.value("unit", std::string("radians"));
        if (unit == "radians") {
            c.ingest.unit = IngestConfig::Unit::Radians;
        } else if (unit == "degrees") {
            c.ingest.unit = IngestConfig::Unit::Degrees;
        } else {
            throw ConfigError("ingest.unit must be radians|degrees, got '" + unit + "'");
        }
        c.ingest.sample_rate_hz = i.value("sample_rate_hz", c.ingest.sample_rate_hz);
        c.ingest.duration_seconds = i.value("duration_seconds", c.ingest.duration_seconds);
        c.ingest.offset_degrees = i.value("offset_degrees", c.ingest.offset_degrees);
        c.ingest.segment_samples = i.value("segment_samples", c.ingest.segment_samples);
        c.ingest.hop_samples = i.value("hop_samples", c.ingest.hop_samples);
        c.ingest.min_valid_seconds = i.value("min_valid_seconds", c.ingest.min_valid_seconds);
        c.ingest.drop_warn_fraction = i.value("drop_warn_fraction", c.ingest.drop_warn_fraction);
    }
    if (j.contains("nmf")) {
        const auto& n = j.at("nmf");
        c.nmf_rank = n.value("rank", c.nmf_rank);
        c.nmf_tol = n.value("tol", c.nmf_tol);
        c.nmf_max_iter = n.value("max_iter", c.nmf_max_iter);
    }
    if (j.contains("gmm")) {
        const auto& g = j.at("gmm");
        c.gmm_components = g.value("components", c.gmm_components);
        c.gmm_tol = g.value("tol", c.gmm_tol);
        c.gmm_max_iter = g.value("max_iter", c.gmm_max_iter);
    }
    c.chunk_seconds = j.value("chunk_seconds", c.chunk_seconds);
    if (j.contains("models")) {
        const auto& m = j.at("models");
        c.model_defaults.trees = m.value("forest_trees", c.model_defaults.trees);
        c.model_defaults.max_depth = m.value("forest_depth", c.model_defaults.max_depth);
        c.model_defaults.min_leaf = m.value("min_leaf", c.model_defaults.min_leaf);
        c.model_defaults.stages = m.value("boosted_stages", c.model_defaults.stages);
        c.model_defaults.learning_rate = m.value("boosted_rate", c.model_defaults.learning_rate);
        c.model_defaults.boost_depth = m.value("boosted_depth", c.model_defaults.boost_depth);
        c.model_defaults.subsample = m.value("boosted_subsample", c.model_defaults.subsample);
        c.model_defaults.svm_lambda = m.value("svm_lambda", c.model_defaults.svm_lambda);
        c.model_defaults.svm_epochs = m.value("svm_epochs", c.model_defaults.svm_epochs);
        c.model_defaults.svr_epsilon = m.value("svr_epsilon", c.model_defaults.svr_epsilon);
        if (m.contains("grid")) {
            const auto& g = m.at("grid");
            c.grid.forest_depths = g.value("forest_depths", c.grid.forest_depths);
            c.grid.forest_trees = g.value("forest_trees", c.grid.forest_trees);
            c.grid.boosted_stages = g.value("boosted_stages", c.grid.boosted_stages);
            c.grid.boosted_rates = g.value("boosted_rates", c.grid.boosted_rates);
            c.grid.svm_lambdas = g.value("svm_lambdas", c.grid.svm_lambdas);
        }
    }
    if (j.contains("eval")) {
        const auto& e = j.at("eval");
        c.repetitions = e.value("repetitions", c.repetitions);
        c.folds = e.value("folds", c.folds);
    }
    if (j.contains("conversion")) {
        const auto& t = j.at("conversion");
        c.bdi_table_path = t.value("bdi_table", c.bdi_table_path);
        c.hrsd_table_path = t.value("hrsd_table", c.hrsd_table_path);
    }
    if (j.contains("synth")) c.synth = generator_spec_from_json(j.at("synth"));
    return c;
}

nlohmann::json config_to_json(const PipelineConfig& c) {
    nlohmann::json j;
    j["version"] = c.version;
    j["seed"] = c.seed;
    j["jobs"] = c.jobs;
    j["ingest"] = {
        {"frame_column", c.ingest.frame_column},
        {"time_column", c.ingest.time_column},
        {"pitch_column", c.ingest.pitch_column},
        {"yaw_column", c.ingest.yaw_column},
        {"roll_column", c.ingest.roll_column},
        {"success_column", c.ingest.success_column},
        {"unit", c.ingest.unit == IngestConfig::Unit::Radians ? "radians" : "degrees"},
        {"sample_rate_hz", c.ingest.sample_rate_hz},
        {"duration_seconds", c.ingest.duration_seconds},
        {"offset_degrees", c.ingest.offset_degrees},
        {"segment_samples", c.ingest.segment_samples},
        {"hop_samples", c.ingest.hop_samples},
        {"min_valid_seconds", c.ingest.min_valid_seconds},
        {"drop_warn_fraction", c.ingest.drop_warn_fraction},
    };
    j["nmf"] = {{"rank", c.nmf_rank}, {"tol", c.nmf_tol}, {"max_iter", c.nmf_max_iter}};
    j["gmm"] = {{"components", c.gmm_components}, {"tol", c.gmm_tol}, {"max_iter", c.gmm_max_iter}};
    j["chunk_seconds"] = c.chunk_seconds;
    j["models"] = {
        {"forest_trees", c.model_defaults.trees},
        {"forest_depth", c.model_defaults.max_depth},
        {"min_leaf", c.model_defaults.min_leaf},
        {"boosted_stages", c.model_defaults.stages},
        {"boosted_rate", c.model_defaults.learning_rate},
        {"boosted_depth", c.model_defaults.boost_depth},
        {"boosted_subsample", c.model_defaults.subsample},
        {"svm_lambda", c.model_defaults.svm_lambda},
        {"svm_epochs", c.model_defaults.svm_epochs},
        {"svr_epsilon", c.model_defaults.svr_epsilon},
        {"grid",
         {{"forest_depths", c.grid.forest_depths},
          {"forest_trees", c.grid.forest_trees},
          {"boosted_stages", c.grid.boosted_stages},
          {"boosted_rates", c.grid.boosted_rates},
          {"svm_lambdas", c.grid.svm_lambdas}}},
    };
    j["eval"] = {{"repetitions", c.repetitions}, {"folds", c.folds}};
    j["conversion"] = {{"bdi_table", c.bdi_table_path}, {"hrsd_table", c.hrsd_table_path}};
    j["synth"] = generator_spec_to_json(c.synth);
    return j;
}

PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return config_from_json(j);
}

void write_effective_config(const std::string& path, const PipelineConfig& c) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot open for writing: " + path);
    f << config_to_json(c).dump(2) << '\n';
}

}  // namespace kineme
