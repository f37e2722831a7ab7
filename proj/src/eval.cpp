#include "kineme/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace kineme {

namespace {

ConversionTable make_table(Scale scale, const std::vector<std::pair<int, int>>& anchors) {
    ConversionTable t;
    t.scale = scale;
    t.qids.resize(static_cast<std::size_t>(anchors.back().first) + 1);
    for (std::size_t a = 0; a + 1 < anchors.size(); ++a) {
        const auto [r0, q0] = anchors[a];
        const auto [r1, q1] = anchors[a + 1];
        for (int r = r0; r <= r1; ++r) {
            const double f = static_cast<double>(r - r0) / static_cast<double>(r1 - r0);
            t.qids[static_cast<std::size_t>(r)] =
                static_cast<int>(std::lround(q0 + f * (q1 - q0)));
        }
    }
    for (std::size_t i = 1; i < t.qids.size(); ++i) {
        t.qids[i] = std::max(t.qids[i], t.qids[i - 1]);
    }
    return t;
}

}  // namespace

const ConversionTable& builtin_conversion_table(Scale scale) {
    // Severity-band-aligned crosswalks: the source scale's published band
    // edges (none/mild/moderate/severe) are pinned to the QIDS-SR band edges
    // and integer scores interpolate linearly in between.
    static const ConversionTable bdi =
        make_table(Scale::Bdi, {{0, 0}, {13, 5}, {19, 10}, {28, 15}, {63, 27}});
    static const ConversionTable hrsd =
        make_table(Scale::Hrsd, {{0, 0}, {7, 5}, {13, 10}, {18, 15}, {22, 20}, {52, 27}});
    switch (scale) {
        case Scale::Bdi: return bdi;
        case Scale::Hrsd: return hrsd;
        case Scale::QidsSr: break;
    }
    throw ConfigError("QIDS-SR scores pass through; there is no conversion table");
}

ConversionTable load_conversion_table(const std::string& path, Scale scale) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open conversion table: " + path);
    std::string line;
    if (!std::getline(f, line)) throw DataError("empty conversion table: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "raw,qids") throw DataError("conversion table header must be 'raw,qids': " + path);

    std::map<int, int> entries;
    int row_no = 1;
    while (std::getline(f, line)) {
        ++row_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        int raw = 0, qids = 0;
        if (std::sscanf(line.c_str(), "%d,%d", &raw, &qids) != 2) {
            throw DataError("bad conversion row at " + path + ":" + std::to_string(row_no));
        }
        if (!entries.emplace(raw, qids).second) {
            throw DataError("duplicate raw score " + std::to_string(raw) + " in " + path);
        }
    }
    const int expected_max = scale == Scale::Bdi ? 63 : 52;
    ConversionTable t;
    t.scale = scale;
    t.qids.resize(static_cast<std::size_t>(expected_max) + 1);
    int prev = -1;
    for (int r = 0; r <= expected_max; ++r) {
        auto it = entries.find(r);
        if (it == entries.end()) {
            throw DataError("conversion table " + path + " does not cover raw score " +
                            std::to_string(r));
        }
        if (it->second < 0 || it->second > 27) {
            throw DataError("conversion value out of QIDS range at raw " + std::to_string(r) +
                            " in " + path);
        }
        if (it->second < prev) {
            throw DataError("conversion table not monotone at raw " + std::to_string(r) + " in " +
                            path);
        }
        prev = it->second;
        t.qids[static_cast<std::size_t>(r)] = it->second;
    }
    return t;
}

void write_conversion_table(const std::string& path, const ConversionTable& table) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot open for writing: " + path);
    f << "raw,qids\n";
    for (std::size_t r = 0; r < table.qids.size(); ++r) {
        f << r << ',' << table.qids[r] << '\n';
    }
}

int convert_severity(const ConversionTable& table, int raw) {
    if (raw < 0 || raw > table.max_raw()) {
        throw DataError("raw score " + std::to_string(raw) + " outside table domain [0, " +
                        std::to_string(table.max_raw()) + "]");
    }
    return table.qids[static_cast<std::size_t>(raw)];
}

int severity_to_qids(Scale scale, int raw) {
    if (scale == Scale::QidsSr) {
        if (raw < 0 || raw > 27) {
            throw DataError("QIDS-SR score " + std::to_string(raw) + " outside [0, 27]");
        }
        return raw;
    }
    return convert_severity(builtin_conversion_table(scale), raw);
}

int SeverityTables::to_qids(Scale scale, int raw) const {
    switch (scale) {
        case Scale::QidsSr:
            if (raw < 0 || raw > 27) {
                throw DataError("QIDS-SR score " + std::to_string(raw) + " outside [0, 27]");
            }
            return raw;
        case Scale::Bdi: return convert_severity(bdi, raw);
        case Scale::Hrsd: return convert_severity(hrsd, raw);
    }
    throw ConfigError("unknown scale");
}

int aggregate_video_label(const std::vector<int>& chunk_labels) {
    if (chunk_labels.empty()) throw ContractError("aggregate_video_label: empty input");
    int high = 0;
    for (int l : chunk_labels) high += l == 1 ? 1 : 0;
    // majority; an exact tie resolves to the high/depressed class
    return 2 * high >= static_cast<int>(chunk_labels.size()) ? 1 : 0;
}

double aggregate_video_value(const std::vector<double>& chunk_values) {
    if (chunk_values.empty()) throw ContractError("aggregate_video_value: empty input");
    double acc = 0.0;
    for (double v : chunk_values) acc += v;
    return acc / static_cast<double>(chunk_values.size());
}

ClassificationMetrics classification_metrics(const std::vector<int>& y_true,
                                             const std::vector<int>& y_pred) {
    if (y_true.size() != y_pred.size() || y_true.empty()) {
        throw ContractError("classification_metrics: length mismatch or empty");
    }
    const double total = static_cast<double>(y_true.size());
    double correct = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) correct += y_true[i] == y_pred[i] ? 1.0 : 0.0;

    ClassificationMetrics m;
    m.accuracy = correct / total;
    for (int cls = 0; cls < 2; ++cls) {
        double tp = 0.0, fp = 0.0, fn = 0.0;
        for (std::size_t i = 0; i < y_true.size(); ++i) {
            if (y_pred[i] == cls && y_true[i] == cls) tp += 1.0;
            if (y_pred[i] == cls && y_true[i] != cls) fp += 1.0;
            if (y_pred[i] != cls && y_true[i] == cls) fn += 1.0;
        }
        const double support = tp + fn;
        if (support == 0.0) continue;
        const double precision = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
        const double recall = tp / support;
        const double f1 =
            precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        const double weight = support / total;
        m.precision += weight * precision;
        m.recall += weight * recall;
        m.f1 += weight * f1;
    }
    return m;
}

RegressionMetrics regression_metrics(const std::vector<double>& y_true,
                                     const std::vector<double>& y_pred) {
    if (y_true.size() != y_pred.size() || y_true.empty()) {
        throw ContractError("regression_metrics: length mismatch or empty");
    }
    RegressionMetrics m;
    double sq = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const double e = y_pred[i] - y_true[i];
        m.mae += std::abs(e);
        sq += e * e;
    }
    const double n = static_cast<double>(y_true.size());
    m.mae /= n;
    m.rmse = std::sqrt(sq / n);
    return m;
}

std::vector<ModelSpec> grid_specs(const HyperGrid& grid, const ModelSpec& base,
                                  ModelFamily family, Task task) {
    std::vector<ModelSpec> specs;
    ModelSpec s = base;
    s.family = family;
    s.task = task;
    switch (family) {
        case ModelFamily::Forest:
            for (int trees : grid.forest_trees) {
                for (int depth : grid.forest_depths) {
                    s.trees = trees;
                    s.max_depth = depth;
                    specs.push_back(s);
                }
            }
            break;
        case ModelFamily::Boosted:
            for (int stages : grid.boosted_stages) {
                for (double rate : grid.boosted_rates) {
                    s.stages = stages;
                    s.learning_rate = rate;
                    specs.push_back(s);
                }
            }
            break;
        case ModelFamily::Svm:
            for (double lambda : grid.svm_lambdas) {
                s.svm_lambda = lambda;
                specs.push_back(s);
            }
            break;
    }
    return specs;
}

namespace {

nlohmann::json spec_to_json(const ModelSpec& s) {
    switch (s.family) {
        case ModelFamily::Forest:
            return {{"trees", s.trees}, {"max_depth", s.max_depth}};
        case ModelFamily::Boosted:
            return {{"stages", s.stages}, {"learning_rate", s.learning_rate}};
        case ModelFamily::Svm:
            return {{"lambda", s.svm_lambda}, {"epochs", s.svm_epochs}};
    }
    return {};
}

struct VideoFeatures {
    std::string qualified_id;
    int label01 = 0;
    double severity = 0.0;
    Eigen::MatrixXd rows;  // n_chunks x 24
};

// Encode every manifest video of a corpus and compute its chunk features.
std::vector<VideoFeatures> corpus_features(const Codebook& cb, const Corpus& corpus,
                                           int chunk_seconds, int jobs,
                                           const SeverityTables& tables) {
    std::map<std::string, const AngleSeries*> by_id;
    for (const auto& s : corpus.series) by_id[s.video_id] = &s;

    const auto& records = corpus.manifest.records;
    std::vector<VideoFeatures> out(records.size());
    std::vector<const AngleSeries*> series(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto it = by_id.find(records[i].video_id);
        if (it == by_id.end()) {
            throw DataError("corpus '" + corpus.name + "' has no series for video '" +
                            records[i].video_id + "'");
        }
        series[i] = it->second;
    }
    parallel_for(static_cast<int>(records.size()), jobs, [&](int i) {
        const auto& rec = records[static_cast<std::size_t>(i)];
        auto& vf = out[static_cast<std::size_t>(i)];
        vf.qualified_id = corpus.name + "/" + rec.video_id;
        vf.label01 = rec.binary_label == BinaryLabel::High ? 1 : 0;
        vf.severity = static_cast<double>(tables.to_qids(rec.scale, rec.raw_score));
        const auto chunks = series_features(cb, *series[static_cast<std::size_t>(i)], chunk_seconds);
        vf.rows.resize(static_cast<Eigen::Index>(chunks.size()), 24);
        for (std::size_t c = 0; c < chunks.size(); ++c) {
            for (int v = 0; v < 24; ++v) {
                vf.rows(static_cast<Eigen::Index>(c), v) = chunks[c].values[static_cast<std::size_t>(v)];
            }
        }
    });
    return out;
}

const Corpus& find_corpus(const std::vector<Corpus>& corpora, const std::string& name) {
    for (const auto& c : corpora) {
        if (c.name == name) return c;
    }
    throw ConfigError("corpus '" + name + "' is not configured");
}

Codebook discover_from_source(const EvalConfig& config, const std::vector<Corpus>& corpora) {
    const Corpus& src = find_corpus(corpora, config.codebook_source);
    DiscoveryConfig dc = config.discovery;
    dc.source_tag = src.name;
    return discover_kinemes(src.series, src.manifest, dc);
}

Eigen::MatrixXd stack_rows(const std::vector<VideoFeatures>& videos,
                           const std::vector<int>& video_ids, Eigen::VectorXd& labels,
                           Eigen::VectorXd& severities) {
    Eigen::Index total = 0;
    for (int v : video_ids) total += videos[static_cast<std::size_t>(v)].rows.rows();
    Eigen::MatrixXd X(total, 24);
    labels.resize(total);
    severities.resize(total);
    Eigen::Index at = 0;
    for (int v : video_ids) {
        const auto& vf = videos[static_cast<std::size_t>(v)];
        X.middleRows(at, vf.rows.rows()) = vf.rows;
        labels.segment(at, vf.rows.rows()).setConstant(vf.label01);
        severities.segment(at, vf.rows.rows()).setConstant(vf.severity);
        at += vf.rows.rows();
    }
    return X;
}

std::vector<int> stratified_folds(const std::vector<int>& labels01, int folds, Rng& rng) {
    // Per class, shuffle then deal round-robin. The dealing position carries
    // over between classes so no fold stays empty whenever there are at least
    // `folds` videos overall; per-fold class counts stay within 1 of perfect
    // proportion.
    std::vector<int> fold_of(labels01.size(), 0);
    int offset = 0;
    for (int cls = 0; cls < 2; ++cls) {
        std::vector<int> members;
        for (std::size_t i = 0; i < labels01.size(); ++i) {
            if (labels01[i] == cls) members.push_back(static_cast<int>(i));
        }
        rng.shuffle(members);
        for (std::size_t pos = 0; pos < members.size(); ++pos) {
            fold_of[static_cast<std::size_t>(members[pos])] =
                (offset + static_cast<int>(pos)) % folds;
        }
        offset = (offset + static_cast<int>(members.size())) % folds;
    }
    return fold_of;
}

MetricSummary summarise(const std::vector<double>& samples) {
    MetricSummary s;
    s.runs = static_cast<int>(samples.size());
    if (samples.empty()) return s;
    for (double v : samples) s.mean += v;
    s.mean /= static_cast<double>(samples.size());
    if (samples.size() > 1) {
        double acc = 0.0;
        for (double v : samples) acc += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(acc / static_cast<double>(samples.size() - 1));
    }
    return s;
}

struct RunRecord {
    // per run: video-level truths and predictions for one family/task
    std::vector<std::string> video_ids;
    std::vector<int> cls_true, cls_pred;
    std::vector<double> reg_true, reg_pred;
};

nlohmann::json predictions_json(const std::vector<std::vector<RunRecord>>& per_family_runs,
                                const std::vector<ModelFamily>& families, Task task) {
    nlohmann::json out = nlohmann::json::object();
    for (std::size_t f = 0; f < families.size(); ++f) {
        nlohmann::json list = nlohmann::json::array();
        for (std::size_t run = 0; run < per_family_runs[f].size(); ++run) {
            const auto& rec = per_family_runs[f][run];
            for (std::size_t i = 0; i < rec.video_ids.size(); ++i) {
                nlohmann::json e = {{"video", rec.video_ids[i]}, {"run", run}};
                if (task == Task::Classify) {
                    e["truth"] = rec.cls_true[i];
                    e["pred"] = rec.cls_pred[i];
                } else {
                    e["truth"] = rec.reg_true[i];
                    e["pred"] = rec.reg_pred[i];
                }
                list.push_back(std::move(e));
            }
        }
        out[to_string(families[f])] = std::move(list);
    }
    return out;
}

void append_task_cells(EvalReport& report, const EvalConfig& config, Task task,
                       const std::vector<std::vector<RunRecord>>& per_family_runs,
                       const std::vector<nlohmann::json>& chosen_hyper) {
    std::vector<ReportCell> cells;
    for (std::size_t f = 0; f < config.families.size(); ++f) {
        ReportCell cell;
        cell.task = task;
        cell.family = to_string(config.families[f]);
        if (!chosen_hyper.empty()) cell.chosen_hyper = chosen_hyper[f];
        std::vector<double> acc, f1, pre, re, mae, rmse;
        for (const auto& rec : per_family_runs[f]) {
            if (rec.video_ids.empty()) continue;
            if (task == Task::Classify) {
                const auto m = classification_metrics(rec.cls_true, rec.cls_pred);
                acc.push_back(m.accuracy);
                f1.push_back(m.f1);
                pre.push_back(m.precision);
                re.push_back(m.recall);
            } else {
                const auto m = regression_metrics(rec.reg_true, rec.reg_pred);
                mae.push_back(m.mae);
                rmse.push_back(m.rmse);
            }
        }
        cell.accuracy = summarise(acc);
        cell.f1 = summarise(f1);
        cell.precision = summarise(pre);
        cell.recall = summarise(re);
        cell.mae = summarise(mae);
        cell.rmse = summarise(rmse);
        cells.push_back(std::move(cell));
    }
    // best family: highest mean F1 for classification, lowest mean MAE for regression
    std::size_t best = 0;
    for (std::size_t f = 1; f < cells.size(); ++f) {
        if (task == Task::Classify ? cells[f].f1.mean > cells[best].f1.mean
                                   : cells[f].mae.mean < cells[best].mae.mean) {
            best = f;
        }
    }
    ReportCell best_cell = cells[best];
    best_cell.best_of = best_cell.family;
    best_cell.family = "best";
    cells.push_back(std::move(best_cell));
    for (auto& c : cells) report.cells.push_back(std::move(c));
}

nlohmann::json base_provenance(const EvalConfig& config, const Codebook& cb) {
    nlohmann::json j;
    j["protocol"] = config.protocol == EvalConfig::Protocol::Kfold ? "kfold" : "transfer";
    j["datasets"] = config.datasets;
    j["test_datasets"] = config.test_datasets;
    j["codebook_source"] = config.codebook_source;
    j["codebook_fingerprint"] = cb.fingerprint.hash();
    j["codebook_source_videos"] = cb.source_videos;
    j["chunk_seconds"] = config.chunk_seconds;
    j["repetitions"] = config.repetitions;
    j["folds"] = config.folds;
    j["seed"] = config.seed;
    nlohmann::json fams = nlohmann::json::array();
    for (auto f : config.families) fams.push_back(to_string(f));
    j["families"] = fams;
    return j;
}

}  // namespace

EvalReport run_kfold(const EvalConfig& config, const std::vector<Corpus>& corpora) {
    if (config.folds < 2) throw ConfigError("k-fold evaluation needs folds >= 2");
    if (config.repetitions < 1) throw ConfigError("k-fold evaluation needs repetitions >= 1");
    if (config.datasets.empty()) throw ConfigError("no datasets configured");
    if (config.families.empty()) throw ConfigError("no model families configured");

    const Codebook cb = discover_from_source(config, corpora);

    std::vector<VideoFeatures> videos;
    for (const auto& name : config.datasets) {
        auto part = corpus_features(cb, find_corpus(corpora, name), config.chunk_seconds,
                                    config.jobs, config.tables);
        videos.insert(videos.end(), std::make_move_iterator(part.begin()),
                      std::make_move_iterator(part.end()));
    }
    const int n_videos = static_cast<int>(videos.size());
    if (n_videos < config.folds) {
        throw ConfigError("pooled video count " + std::to_string(n_videos) +
                          " is below the fold count " + std::to_string(config.folds));
    }
    std::vector<int> labels01(videos.size());
    for (std::size_t i = 0; i < videos.size(); ++i) labels01[i] = videos[i].label01;
    if (config.classify) {
        int c0 = 0, c1 = 0;
        for (int l : labels01) (l == 0 ? c0 : c1)++;
        if (c0 < 2 || c1 < 2) {
            throw ConfigError(
                "stratified folds need at least two videos per class; got low=" +
                std::to_string(c0) + " high=" + std::to_string(c1) +
                " (a single-video class would leave some train split single-class)");
        }
    }

    const int total_runs = config.repetitions * config.folds;
    std::vector<Task> tasks;
    if (config.classify) tasks.push_back(Task::Classify);
    if (config.regress) tasks.push_back(Task::Regress);
    if (tasks.empty()) throw ConfigError("nothing to run: classification and regression disabled");

    // per task -> per family -> per run; slots preallocated so parallel runs
    // only ever touch their own entries
    std::vector<std::vector<std::vector<RunRecord>>> records(tasks.size());
    for (auto& r : records) {
        r.assign(config.families.size(),
                 std::vector<RunRecord>(static_cast<std::size_t>(total_runs)));
    }

    // fold assignments per repetition, derived from the master seed
    std::vector<std::vector<int>> fold_of(static_cast<std::size_t>(config.repetitions));
    for (int rep = 0; rep < config.repetitions; ++rep) {
        Rng rng(mix_seed(config.seed, 0x666f6c64, static_cast<std::uint64_t>(rep)));
        fold_of[static_cast<std::size_t>(rep)] = stratified_folds(labels01, config.folds, rng);
    }

    parallel_for(total_runs, config.jobs, [&](int run) {
        const int rep = run / config.folds;
        const int fold = run % config.folds;
        const auto& assignment = fold_of[static_cast<std::size_t>(rep)];

        std::vector<int> train_videos, test_videos;
        for (int v = 0; v < n_videos; ++v) {
            (assignment[static_cast<std::size_t>(v)] == fold ? test_videos : train_videos)
                .push_back(v);
        }
        if (test_videos.empty()) return;  // more folds than videos in a class is already rejected

        Eigen::VectorXd train_labels, train_sev;
        const Eigen::MatrixXd train_X = stack_rows(videos, train_videos, train_labels, train_sev);
        const Normaliser norm = fit_normaliser(train_X);
        const Eigen::MatrixXd train_Z = apply_normaliser(norm, train_X);

        for (std::size_t f = 0; f < config.families.size(); ++f) {
            for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
                const Task task = tasks[ti];
                ModelSpec spec = config.model_defaults;
                spec.family = config.families[f];
                spec.task = task;
                spec.seed = mix_seed(config.seed, 0x6b666f6c,
                                     static_cast<std::uint64_t>(run),
                                     static_cast<std::uint64_t>(f * 2 + (task == Task::Regress)));
                const TrainedModel model = train_model(
                    spec, train_Z, task == Task::Classify ? train_labels : train_sev);

                RunRecord& rec = records[ti][f][static_cast<std::size_t>(run)];
                for (int v : test_videos) {
                    const auto& vf = videos[static_cast<std::size_t>(v)];
                    const Eigen::MatrixXd Z = apply_normaliser(norm, vf.rows);
                    rec.video_ids.push_back(vf.qualified_id);
                    if (task == Task::Classify) {
                        rec.cls_true.push_back(vf.label01);
                        rec.cls_pred.push_back(aggregate_video_label(predict_labels(model, Z)));
                    } else {
                        const Eigen::VectorXd preds = predict_values(model, Z);
                        std::vector<double> chunk_preds(preds.data(), preds.data() + preds.size());
                        rec.reg_true.push_back(vf.severity);
                        rec.reg_pred.push_back(aggregate_video_value(chunk_preds));
                    }
                }
            }
        }
    });

    EvalReport report;
    report.provenance = base_provenance(config, cb);
    nlohmann::json preds = nlohmann::json::object();
    for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
        append_task_cells(report, config, tasks[ti], records[ti], {});
        preds[to_string(tasks[ti])] = predictions_json(records[ti], config.families, tasks[ti]);
    }
    report.predictions = std::move(preds);
    return report;
}

EvalReport run_transfer(const EvalConfig& config, const std::vector<Corpus>& corpora) {
    if (config.datasets.empty() || config.test_datasets.empty()) {
        throw ProtocolError("transfer needs non-empty train and test corpus sets");
    }
    std::set<std::string> train_names(config.datasets.begin(), config.datasets.end());
    for (const auto& t : config.test_datasets) {
        if (train_names.count(t) > 0) {
            throw ProtocolError("corpus '" + t + "' appears in both train and test sets");
        }
    }
    // video ids must not leak between the two sides either
    std::set<std::string> train_ids;
    for (const auto& name : config.datasets) {
        for (const auto& r : find_corpus(corpora, name).manifest.records) {
            train_ids.insert(r.video_id);
        }
    }
    for (const auto& name : config.test_datasets) {
        for (const auto& r : find_corpus(corpora, name).manifest.records) {
            if (train_ids.count(r.video_id) > 0) {
                throw ProtocolError("video '" + r.video_id +
                                    "' appears in both train and test corpora");
            }
        }
    }
    if (config.families.empty()) throw ConfigError("no model families configured");

    const Codebook cb = discover_from_source(config, corpora);

    std::vector<VideoFeatures> train_videos, test_videos;
    for (const auto& name : config.datasets) {
        auto part = corpus_features(cb, find_corpus(corpora, name), config.chunk_seconds,
                                    config.jobs, config.tables);
        train_videos.insert(train_videos.end(), std::make_move_iterator(part.begin()),
                            std::make_move_iterator(part.end()));
    }
    for (const auto& name : config.test_datasets) {
        auto part = corpus_features(cb, find_corpus(corpora, name), config.chunk_seconds,
                                    config.jobs, config.tables);
        test_videos.insert(test_videos.end(), std::make_move_iterator(part.begin()),
                           std::make_move_iterator(part.end()));
    }
    if (train_videos.size() < 2) throw ConfigError("transfer needs at least 2 training videos");

    std::vector<int> all_train(train_videos.size());
    for (std::size_t i = 0; i < all_train.size(); ++i) all_train[i] = static_cast<int>(i);
    Eigen::VectorXd train_labels, train_sev;
    const Eigen::MatrixXd train_X = stack_rows(train_videos, all_train, train_labels, train_sev);
    const Normaliser norm = fit_normaliser(train_X);
    const Eigen::MatrixXd train_Z = apply_normaliser(norm, train_X);

    std::vector<Task> tasks;
    if (config.classify) tasks.push_back(Task::Classify);
    if (config.regress) tasks.push_back(Task::Regress);
    if (tasks.empty()) throw ConfigError("nothing to run: classification and regression disabled");

    EvalReport report;
    report.provenance = base_provenance(config, cb);
    nlohmann::json preds = nlohmann::json::object();

    for (Task task : tasks) {
        std::vector<std::vector<RunRecord>> per_family(config.families.size());
        std::vector<nlohmann::json> chosen(config.families.size());
        for (std::size_t f = 0; f < config.families.size(); ++f) {
            const auto specs = grid_specs(config.grid, config.model_defaults,
                                          config.families[f], task);
            // model selection: best metric on the training videos themselves
            TrainedModel best_model;
            double best_score = 0.0;
            bool have_best = false;
            for (std::size_t g = 0; g < specs.size(); ++g) {
                ModelSpec spec = specs[g];
                spec.seed = mix_seed(config.seed, 0x7472616e, static_cast<std::uint64_t>(g),
                                     static_cast<std::uint64_t>(f * 2 + (task == Task::Regress)));
                const TrainedModel model = train_model(
                    spec, train_Z, task == Task::Classify ? train_labels : train_sev);

                std::vector<int> yt_cls, yp_cls;
                std::vector<double> yt_reg, yp_reg;
                for (const auto& vf : train_videos) {
                    const Eigen::MatrixXd Z = apply_normaliser(norm, vf.rows);
                    if (task == Task::Classify) {
                        yt_cls.push_back(vf.label01);
                        yp_cls.push_back(aggregate_video_label(predict_labels(model, Z)));
                    } else {
                        const Eigen::VectorXd p = predict_values(model, Z);
                        std::vector<double> chunk_preds(p.data(), p.data() + p.size());
                        yt_reg.push_back(vf.severity);
                        yp_reg.push_back(aggregate_video_value(chunk_preds));
                    }
                }
                const double score = task == Task::Classify
                                         ? classification_metrics(yt_cls, yp_cls).accuracy
                                         : -regression_metrics(yt_reg, yp_reg).mae;
                if (!have_best || score > best_score) {
                    have_best = true;
                    best_score = score;
                    best_model = model;
                    chosen[f] = spec_to_json(spec);
                }
            }

            RunRecord rec;
            for (const auto& vf : test_videos) {
                const Eigen::MatrixXd Z = apply_normaliser(norm, vf.rows);
                rec.video_ids.push_back(vf.qualified_id);
                if (task == Task::Classify) {
                    rec.cls_true.push_back(vf.label01);
                    rec.cls_pred.push_back(aggregate_video_label(predict_labels(best_model, Z)));
                } else {
                    const Eigen::VectorXd p = predict_values(best_model, Z);
                    std::vector<double> chunk_preds(p.data(), p.data() + p.size());
                    rec.reg_true.push_back(vf.severity);
                    rec.reg_pred.push_back(aggregate_video_value(chunk_preds));
                }
            }
            per_family[f].push_back(std::move(rec));
        }
        append_task_cells(report, config, task, per_family, chosen);
        preds[to_string(task)] = predictions_json(per_family, config.families, task);
    }
    report.predictions = std::move(preds);
    return report;
}

namespace {

nlohmann::json summary_to_json(const MetricSummary& s) {
    return {{"mean", s.mean}, {"std", s.stddev}, {"runs", s.runs}};
}

MetricSummary summary_from_json(const nlohmann::json& j) {
    MetricSummary s;
    s.mean = j.at("mean").get<double>();
    s.stddev = j.at("std").get<double>();
    s.runs = j.at("runs").get<int>();
    return s;
}

std::string cell_datasets(const nlohmann::json& provenance, bool test) {
    std::string out;
    for (const auto& d : provenance.at(test ? "test_datasets" : "datasets")) {
        if (!out.empty()) out += '+';
        out += d.get<std::string>();
    }
    return out;
}

std::string fmt_pm(const MetricSummary& s) {
    if (s.runs == 0) return "-";
    std::string out = format_double(s.mean);
    if (s.runs > 1) out += " +/- " + format_double(s.stddev);
    return out;
}

}  // namespace

void write_report(const EvalReport& report, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);

    nlohmann::json j;
    j["provenance"] = report.provenance;
    j["predictions"] = report.predictions;
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : report.cells) {
        nlohmann::json e;
        e["task"] = to_string(c.task);
        e["family"] = c.family;
        e["best_of"] = c.best_of;
        e["accuracy"] = summary_to_json(c.accuracy);
        e["f1"] = summary_to_json(c.f1);
        e["precision"] = summary_to_json(c.precision);
        e["recall"] = summary_to_json(c.recall);
        e["mae"] = summary_to_json(c.mae);
        e["rmse"] = summary_to_json(c.rmse);
        e["chosen_hyper"] = c.chosen_hyper;
        cells.push_back(std::move(e));
    }
    j["cells"] = std::move(cells);
    {
        std::ofstream f(dir / "report.json", std::ios::trunc);
        if (!f) throw DataError("cannot write report.json in " + out_dir);
        f << j.dump(2) << '\n';
    }
    {
        std::ofstream f(dir / "report.csv", std::ios::trunc);
        if (!f) throw DataError("cannot write report.csv in " + out_dir);
        f << "protocol,codebook_source,train_datasets,test_datasets,task,family,best_of,"
             "acc_mean,acc_std,f1_mean,f1_std,pre_mean,pre_std,re_mean,re_std,"
             "mae_mean,mae_std,rmse_mean,rmse_std,runs\n";
        const std::string protocol = report.provenance.at("protocol").get<std::string>();
        const std::string source = report.provenance.at("codebook_source").get<std::string>();
        const std::string train_ds = cell_datasets(report.provenance, false);
        const std::string test_ds = cell_datasets(report.provenance, true);
        for (const auto& c : report.cells) {
            f << protocol << ',' << source << ',' << train_ds << ',' << test_ds << ','
              << to_string(c.task) << ',' << c.family << ',' << c.best_of << ','
              << format_double(c.accuracy.mean) << ',' << format_double(c.accuracy.stddev) << ','
              << format_double(c.f1.mean) << ',' << format_double(c.f1.stddev) << ','
              << format_double(c.precision.mean) << ',' << format_double(c.precision.stddev) << ','
              << format_double(c.recall.mean) << ',' << format_double(c.recall.stddev) << ','
              << format_double(c.mae.mean) << ',' << format_double(c.mae.stddev) << ','
              << format_double(c.rmse.mean) << ',' << format_double(c.rmse.stddev) << ','
              << std::max({c.accuracy.runs, c.mae.runs}) << '\n';
        }
    }
    {
        std::ofstream f(dir / "report.txt", std::ios::trunc);
        if (!f) throw DataError("cannot write report.txt in " + out_dir);
        f << "protocol: " << report.provenance.at("protocol").get<std::string>()
          << "  codebook: " << report.provenance.at("codebook_source").get<std::string>()
          << "  train: " << cell_datasets(report.provenance, false);
        const std::string test_ds = cell_datasets(report.provenance, true);
        if (!test_ds.empty()) f << "  test: " << test_ds;
        f << "  chunk: " << report.provenance.at("chunk_seconds").get<int>() << "s\n\n";
        for (const auto& c : report.cells) {
            f << to_string(c.task) << '\t' << c.family;
            if (!c.best_of.empty()) f << " (" << c.best_of << ')';
            if (c.task == Task::Classify) {
                f << "\tAcc " << fmt_pm(c.accuracy) << "\tF1 " << fmt_pm(c.f1) << "\tPre "
                  << fmt_pm(c.precision) << "\tRe " << fmt_pm(c.recall);
            } else {
                f << "\tMAE " << fmt_pm(c.mae) << "\tRMSE " << fmt_pm(c.rmse);
            }
            if (!c.chosen_hyper.is_null() && !c.chosen_hyper.empty()) {
                f << "\thyper " << c.chosen_hyper.dump();
            }
            f << '\n';
        }
    }
}

EvalReport load_report_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open report: " + path);
    nlohmann::json j;
    try {
        f >> j;
        EvalReport report;
        report.provenance = j.at("provenance");
        report.predictions = j.at("predictions");
        for (const auto& e : j.at("cells")) {
            ReportCell c;
            c.task = task_from_string(e.at("task").get<std::string>());
            c.family = e.at("family").get<std::string>();
            c.best_of = e.at("best_of").get<std::string>();
            c.accuracy = summary_from_json(e.at("accuracy"));
            c.f1 = summary_from_json(e.at("f1"));
            c.precision = summary_from_json(e.at("precision"));
            c.recall = summary_from_json(e.at("recall"));
            c.mae = summary_from_json(e.at("mae"));
            c.rmse = summary_from_json(e.at("rmse"));
            c.chosen_hyper = e.value("chosen_hyper", nlohmann::json());
            report.cells.push_back(std::move(c));
        }
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("report parse error in " + path + ": " + e.what());
    }
}

}  // namespace kineme
