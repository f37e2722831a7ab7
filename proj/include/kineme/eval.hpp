#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kineme/codebook.hpp"
#include "kineme/features.hpp"
#include "kineme/ingest.hpp"
#include "kineme/models.hpp"

namespace kineme {

// Total monotone map from a scale's raw score range onto QIDS-SR [0, 27].
struct ConversionTable {
    Scale scale = Scale::Bdi;
    std::vector<int> qids;  // index = raw score, covers the full scale range

    int max_raw() const { return static_cast<int>(qids.size()) - 1; }
};

// Band-anchored crosswalks shipped with the library (also present as CSV
// files under data/conversion/). Severity bands of the source scale map
// linearly onto the QIDS-SR severity bands.
const ConversionTable& builtin_conversion_table(Scale scale);

// Two-column CSV (raw, qids), header required.
ConversionTable load_conversion_table(const std::string& path, Scale scale);
void write_conversion_table(const std::string& path, const ConversionTable& table);

int convert_severity(const ConversionTable& table, int raw);

// QIDS-SR scores pass through; BDI/HRSD go through their tables.
int severity_to_qids(Scale scale, int raw);

// Table pair used when converting manifest scores to QIDS targets; defaults
// to the builtin crosswalks, replaceable by loaded table files.
struct SeverityTables {
    ConversionTable bdi = builtin_conversion_table(Scale::Bdi);
    ConversionTable hrsd = builtin_conversion_table(Scale::Hrsd);

    int to_qids(Scale scale, int raw) const;
};

// Video-level aggregation over chunk predictions.
int aggregate_video_label(const std::vector<int>& chunk_labels);  // majority, tie -> high (1)
double aggregate_video_value(const std::vector<double>& chunk_values);  // mean

struct ClassificationMetrics {
    double accuracy = 0.0;
    double f1 = 0.0;        // support-weighted
    double precision = 0.0; // support-weighted
    double recall = 0.0;    // support-weighted
};

struct RegressionMetrics {
    double mae = 0.0;
    double rmse = 0.0;
};

ClassificationMetrics classification_metrics(const std::vector<int>& y_true,
                                             const std::vector<int>& y_pred);
RegressionMetrics regression_metrics(const std::vector<double>& y_true,
                                     const std::vector<double>& y_pred);

struct Corpus {
    std::string name;
    std::vector<AngleSeries> series;
    CorpusManifest manifest;
};

// Hyperparameter grid swept by the transfer protocol (selection by highest
// training accuracy / lowest training MAE).
struct HyperGrid {
    std::vector<int> forest_depths = {4, 8, 12};
    std::vector<int> forest_trees = {200};
    std::vector<int> boosted_stages = {100, 300};
    std::vector<double> boosted_rates = {0.05, 0.1};
    std::vector<double> svm_lambdas = {1e-2, 1e-3, 1e-4};
};

std::vector<ModelSpec> grid_specs(const HyperGrid& grid, const ModelSpec& base,
                                  ModelFamily family, Task task);

struct EvalConfig {
    enum class Protocol { Kfold, Transfer };
    Protocol protocol = Protocol::Kfold;
    std::vector<std::string> datasets;       // k-fold pool, or the transfer train set
    std::vector<std::string> test_datasets;  // transfer only
    std::string codebook_source;
    int chunk_seconds = 60;
    int repetitions = 5;
    int folds = 10;
    std::uint64_t seed = 1234;
    std::vector<ModelFamily> families = {ModelFamily::Forest, ModelFamily::Boosted,
                                         ModelFamily::Svm};
    bool classify = true;
    bool regress = true;
    int jobs = 0;
    DiscoveryConfig discovery;
    ModelSpec model_defaults;  // family/task/seed overwritten per fit
    HyperGrid grid;
    SeverityTables tables;
};

struct MetricSummary {
    double mean = 0.0;
    double stddev = 0.0;  // sample std over runs; 0 for single-run cells
    int runs = 0;
};

struct ReportCell {
    Task task = Task::Classify;
    std::string family;  // forest | boosted | svm | best
    std::string best_of; // for the best row: which family won
    MetricSummary accuracy, f1, precision, recall;  // classification
    MetricSummary mae, rmse;                        // regression
    nlohmann::json chosen_hyper;                    // transfer: winning grid point
};

struct EvalReport {
    nlohmann::json provenance;   // protocol, datasets, codebook, seeds, config echo
    std::vector<ReportCell> cells;
    nlohmann::json predictions;  // per family/task per-video predictions
};

// Discover the codebook from the configured source corpus (its low-labelled
// cohort, once), then run video-level stratified k-fold with the configured
// repetitions. Normaliser and models are fitted on train-fold chunks only.
EvalReport run_kfold(const EvalConfig& config, const std::vector<Corpus>& corpora);

// Train on config.datasets, select hyperparameters by training performance
// over the grid, and evaluate once on the held-out test corpora.
EvalReport run_transfer(const EvalConfig& config, const std::vector<Corpus>& corpora);

// report.json / report.csv / report.txt under the given directory.
void write_report(const EvalReport& report, const std::string& out_dir);
EvalReport load_report_json(const std::string& path);

}  // namespace kineme
