#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kineme/config.hpp"
#include "kineme/eval.hpp"
#include "kineme/synth.hpp"

namespace fs = std::filesystem;
using namespace kineme;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int jobs = -1;
};

PipelineConfig effective_config(const GlobalOpts& g) {
    PipelineConfig c;
    if (!g.config_path.empty()) c = load_pipeline_config(g.config_path);
    if (g.seed_set) {
        c.seed = g.seed;
        c.synth.seed = g.seed;
    }
    if (g.jobs >= 0) c.jobs = g.jobs;
    return c;
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : csv) {
        if (ch == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

// Parse every series referenced by a manifest; paths resolve relative to the
// manifest's directory.
std::vector<AngleSeries> load_corpus_series(const std::string& manifest_path,
                                            const CorpusManifest& manifest,
                                            const IngestConfig& ingest, int jobs) {
    const fs::path base = fs::path(manifest_path).parent_path();
    std::vector<AngleSeries> series(manifest.records.size());
    std::vector<std::string> errors(manifest.records.size());
    parallel_for(static_cast<int>(manifest.records.size()), jobs, [&](int i) {
        const auto& rec = manifest.records[static_cast<std::size_t>(i)];
        fs::path p(rec.series_path);
        if (p.is_relative()) p = base / p;
        try {
            series[static_cast<std::size_t>(i)] =
                parse_pose_csv(p.string(), ingest, rec.video_id);
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(i)] = e.what();
        }
    });
    for (const auto& e : errors) {
        if (!e.empty()) throw DataError(e);
    }
    return series;
}

Corpus load_named_corpus(const std::string& name, const std::string& manifest_path,
                         const IngestConfig& ingest, int jobs) {
    Corpus c;
    c.name = name;
    c.manifest = load_manifest(manifest_path);
    c.series = load_corpus_series(manifest_path, c.manifest, ingest, jobs);
    return c;
}

void echo_config(const fs::path& path, const PipelineConfig& c) {
    write_effective_config(path.string(), c);
}

int cmd_synth(const GlobalOpts& g, const std::string& spec_path, const std::string& out_dir,
              int videos_per_class) {
    PipelineConfig cfg = effective_config(g);
    if (!spec_path.empty()) {
        cfg.synth = load_generator_spec(spec_path);
        if (g.seed_set) cfg.synth.seed = g.seed;
    }
    if (videos_per_class > 0) cfg.synth.videos_per_class = videos_per_class;
    const SynthCorpus corpus = generate_corpus(cfg.synth);
    write_corpus(corpus, out_dir, cfg.ingest);
    echo_config(fs::path(out_dir) / "effective_config.json", cfg);
    std::cout << "wrote " << corpus.series.size() << " videos to " << out_dir << "\n";
    return 0;
}

int cmd_ingest(const GlobalOpts& g, const std::string& manifest_path,
               const std::string& out_dir) {
    const PipelineConfig cfg = effective_config(g);
    const CorpusManifest manifest = load_manifest(manifest_path);
    const auto series = load_corpus_series(manifest_path, manifest, cfg.ingest, cfg.jobs);

    fs::create_directories(out_dir);
    CorpusManifest out_manifest = manifest;
    int warned = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const std::string file = manifest.records[i].video_id + ".csv";
        write_pose_csv((fs::path(out_dir) / file).string(), series[i], cfg.ingest);
        out_manifest.records[i].series_path = file;
        warned += series[i].warnings.empty() ? 0 : 1;
    }
    write_manifest((fs::path(out_dir) / "manifest.csv").string(), out_manifest);
    echo_config(fs::path(out_dir) / "effective_config.json", cfg);

    std::ofstream summary(fs::path(out_dir) / "summary.txt", std::ios::trunc);
    summary << "videos: " << series.size() << "\nquality warnings: " << warned << '\n';
    for (const auto& s : series) {
        for (const auto& w : s.warnings) summary << s.video_id << ": " << w << '\n';
    }
    std::cout << "ingested " << series.size() << " videos into " << out_dir << "\n";
    return 0;
}

int cmd_learn(const GlobalOpts& g, const std::string& manifest_path, const std::string& out_file,
              const std::string& source_tag, int nmf_rank, int components) {
    PipelineConfig cfg = effective_config(g);
    if (nmf_rank > 0) cfg.nmf_rank = nmf_rank;
    if (components > 0) cfg.gmm_components = components;

    const CorpusManifest manifest = load_manifest(manifest_path);
    const auto series = load_corpus_series(manifest_path, manifest, cfg.ingest, cfg.jobs);

    DiscoveryConfig dc = cfg.discovery_config(cfg.seed);
    dc.source_tag = source_tag.empty() ? fs::path(manifest_path).stem().string() : source_tag;
    const Codebook cb = discover_kinemes(series, manifest, dc);
    save_codebook(cb, out_file);
    echo_config(out_file + ".config.json", cfg);
    std::cout << "codebook: " << cb.gmm.components << " kinemes from "
              << cb.source_videos.size() << " low-labelled videos -> " << out_file << "\n";
    return 0;
}

int cmd_encode(const GlobalOpts& g, const std::string& codebook_path,
               const std::string& manifest_path, const std::string& out_file) {
    const PipelineConfig cfg = effective_config(g);
    const Codebook cb = load_codebook(codebook_path);
    const CorpusManifest manifest = load_manifest(manifest_path);
    const auto series = load_corpus_series(manifest_path, manifest, cfg.ingest, cfg.jobs);

    std::vector<KinemeSequence> sequences(series.size());
    parallel_for(static_cast<int>(series.size()), cfg.jobs, [&](int i) {
        sequences[static_cast<std::size_t>(i)] =
            encode_series(cb, series[static_cast<std::size_t>(i)]);
    });

    std::ofstream f(out_file, std::ios::trunc);
    if (!f) throw DataError("cannot open for writing: " + out_file);
    f << "video_id,segment_index,kineme,residual\n";  // kineme ids are 1-based here
    for (const auto& seq : sequences) {
        for (std::size_t s = 0; s < seq.labels.size(); ++s) {
            f << seq.video_id << ',' << s << ',' << seq.labels[s] + 1 << ','
              << format_double(seq.residuals[s]) << '\n';
        }
    }
    echo_config(out_file + ".config.json", cfg);
    std::cout << "encoded " << sequences.size() << " videos -> " << out_file << "\n";
    return 0;
}

int cmd_features(const GlobalOpts& g, const std::string& codebook_path,
                 const std::string& manifest_path, int chunk_seconds,
                 const std::string& out_file) {
    PipelineConfig cfg = effective_config(g);
    if (chunk_seconds > 0) cfg.chunk_seconds = chunk_seconds;
    const Codebook cb = load_codebook(codebook_path);
    const CorpusManifest manifest = load_manifest(manifest_path);
    const auto series = load_corpus_series(manifest_path, manifest, cfg.ingest, cfg.jobs);

    std::vector<std::vector<ChunkFeatures>> all(series.size());
    parallel_for(static_cast<int>(series.size()), cfg.jobs, [&](int i) {
        all[static_cast<std::size_t>(i)] =
            series_features(cb, series[static_cast<std::size_t>(i)], cfg.chunk_seconds);
    });

    const SeverityTables tables = cfg.severity_tables();
    FeatureTable table;
    for (std::size_t i = 0; i < all.size(); ++i) {
        const auto& rec = manifest.records[i];
        for (const auto& chunk : all[i]) {
            FeatureRow row;
            row.features = chunk;
            row.label = rec.binary_label;
            row.severity = static_cast<double>(tables.to_qids(rec.scale, rec.raw_score));
            table.rows.push_back(std::move(row));
        }
    }
    write_feature_csv(out_file, table);
    echo_config(out_file + ".config.json", cfg);
    std::cout << "wrote " << table.rows.size() << " chunk rows -> " << out_file << "\n";
    return 0;
}

int cmd_train(const GlobalOpts& g, const std::string& features_path, const std::string& family,
              const std::string& task, const std::string& out_file) {
    const PipelineConfig cfg = effective_config(g);
    const FeatureTable table = read_feature_csv(features_path);
    if (table.rows.empty()) throw DataError("no feature rows in " + features_path);

    const Eigen::MatrixXd X = table.matrix();
    const Normaliser norm = fit_normaliser(X);
    const Eigen::MatrixXd Z = apply_normaliser(norm, X);

    ModelSpec spec = cfg.model_defaults;
    spec.family = family_from_string(family);
    spec.task = task_from_string(task);
    spec.seed = mix_seed(cfg.seed, 0x747261696e);

    Eigen::VectorXd y(Z.rows());
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        const auto& row = table.rows[static_cast<std::size_t>(i)];
        y(i) = spec.task == Task::Classify ? (row.label == BinaryLabel::High ? 1.0 : 0.0)
                                           : row.severity;
    }
    TrainedModel model = train_model(spec, Z, y);
    model.normaliser_fingerprint = norm.fingerprint();
    save_model(model, out_file);
    echo_config(out_file + ".config.json", cfg);
    std::cout << "trained " << family << '/' << task << " on " << Z.rows() << " rows -> "
              << out_file << "\n";
    return 0;
}

int cmd_eval(const GlobalOpts& g, const std::vector<std::string>& corpus_args,
             const std::string& protocol, const std::string& codebook_source,
             const std::string& datasets, const std::string& train_sets,
             const std::string& test_sets, int chunk_seconds, int reps, int folds,
             const std::string& families, const std::string& task, const std::string& out_dir) {
    PipelineConfig cfg = effective_config(g);
    if (chunk_seconds > 0) cfg.chunk_seconds = chunk_seconds;
    if (reps > 0) cfg.repetitions = reps;
    if (folds > 0) cfg.folds = folds;

    std::vector<Corpus> corpora;
    for (const auto& arg : corpus_args) {
        const auto eq = arg.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("--corpus expects NAME=manifest.csv, got '" + arg + "'");
        }
        corpora.push_back(load_named_corpus(arg.substr(0, eq), arg.substr(eq + 1), cfg.ingest,
                                            cfg.jobs));
    }
    if (corpora.empty()) throw ConfigError("eval needs at least one --corpus NAME=manifest.csv");

    EvalConfig ec;
    ec.codebook_source = codebook_source.empty() ? corpora.front().name : codebook_source;
    ec.chunk_seconds = cfg.chunk_seconds;
    ec.repetitions = cfg.repetitions;
    ec.folds = cfg.folds;
    ec.seed = cfg.seed;
    ec.jobs = cfg.jobs;
    ec.discovery = cfg.discovery_config(cfg.seed);
    ec.model_defaults = cfg.model_defaults;
    ec.grid = cfg.grid;
    ec.tables = cfg.severity_tables();
    if (!families.empty()) {
        ec.families.clear();
        for (const auto& f : split_list(families)) ec.families.push_back(family_from_string(f));
    }
    if (task == "classify") {
        ec.regress = false;
    } else if (task == "regress") {
        ec.classify = false;
    } else if (task != "both") {
        throw ConfigError("--task must be classify|regress|both");
    }

    EvalReport report;
    if (protocol == "kfold") {
        ec.protocol = EvalConfig::Protocol::Kfold;
        if (!datasets.empty()) {
            ec.datasets = split_list(datasets);
        } else {
            for (const auto& c : corpora) ec.datasets.push_back(c.name);
        }
        report = run_kfold(ec, corpora);
    } else if (protocol == "transfer") {
        ec.protocol = EvalConfig::Protocol::Transfer;
        ec.datasets = split_list(train_sets);
        ec.test_datasets = split_list(test_sets);
        report = run_transfer(ec, corpora);
    } else {
        throw ConfigError("--protocol must be kfold|transfer");
    }
    report.provenance["config"] = config_to_json(cfg);
    write_report(report, out_dir);
    echo_config(fs::path(out_dir) / "effective_config.json", cfg);
    std::cout << "report written to " << out_dir << "\n";
    return 0;
}

int cmd_report(const std::string& in_file, const std::string& out_dir) {
    const EvalReport report = load_report_json(in_file);
    write_report(report, out_dir);
    std::cout << "report re-rendered to " << out_dir << "\n";
    return 0;
}

int cmd_config(const GlobalOpts& g, const std::string& out_file) {
    const PipelineConfig cfg = effective_config(g);
    if (out_file.empty()) {
        std::cout << config_to_json(cfg).dump(2) << "\n";
    } else {
        write_effective_config(out_file, cfg);
        std::cout << "config written to " << out_file << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kineme: head-motion unit discovery and severity estimation pipeline"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "pipeline config JSON");
    auto* seed_opt = app.add_option("--seed", g.seed, "master seed (overrides config)");
    app.add_option("--jobs", g.jobs, "worker threads (0 = all cores)");

    auto* synth = app.add_subcommand("synth", "generate a labelled synthetic corpus");
    std::string synth_spec, synth_out;
    int synth_vpc = 0;
    synth->add_option("--spec", synth_spec, "generator spec JSON");
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--videos-per-class", synth_vpc, "override videos per class");

    auto* ingest = app.add_subcommand("ingest", "validate and canonicalise a corpus");
    std::string ingest_manifest, ingest_out;
    ingest->add_option("--manifest", ingest_manifest, "corpus manifest CSV")->required();
    ingest->add_option("--out", ingest_out, "output directory")->required();

    auto* learn = app.add_subcommand("learn", "discover a kineme codebook");
    std::string learn_manifest, learn_out, learn_tag;
    int learn_rank = 0, learn_k = 0;
    learn->add_option("--manifest", learn_manifest, "corpus manifest CSV")->required();
    learn->add_option("--out", learn_out, "codebook output file")->required();
    learn->add_option("--source-tag", learn_tag, "codebook source tag");
    learn->add_option("--nmf-rank", learn_rank, "NMF rank q");
    learn->add_option("--kinemes", learn_k, "kineme count k");

    auto* encode = app.add_subcommand("encode", "encode series as kineme sequences");
    std::string enc_cb, enc_manifest, enc_out;
    encode->add_option("--codebook", enc_cb, "codebook file")->required();
    encode->add_option("--manifest", enc_manifest, "corpus manifest CSV")->required();
    encode->add_option("--out", enc_out, "sequence CSV output")->required();

    auto* features = app.add_subcommand("features", "compute chunk feature CSV");
    std::string feat_cb, feat_manifest, feat_out;
    int feat_chunk = 0;
    features->add_option("--codebook", feat_cb, "codebook file")->required();
    features->add_option("--manifest", feat_manifest, "corpus manifest CSV")->required();
    features->add_option("--chunk-seconds", feat_chunk, "chunk length (60|75|90|120)");
    features->add_option("--out", feat_out, "feature CSV output")->required();

    auto* train = app.add_subcommand("train", "train one model on a feature CSV");
    std::string train_features, train_family = "forest", train_task = "classify", train_out;
    train->add_option("--features", train_features, "feature CSV")->required();
    train->add_option("--family", train_family, "forest|boosted|svm");
    train->add_option("--task", train_task, "classify|regress");
    train->add_option("--out", train_out, "model output file")->required();

    auto* eval = app.add_subcommand("eval", "run an evaluation protocol");
    std::vector<std::string> eval_corpora;
    std::string eval_protocol = "kfold", eval_source, eval_datasets, eval_train, eval_test;
    std::string eval_families, eval_task = "both", eval_out;
    int eval_chunk = 0, eval_reps = 0, eval_folds = 0;
    eval->add_option("--corpus", eval_corpora, "NAME=manifest.csv (repeatable)")->required();
    eval->add_option("--protocol", eval_protocol, "kfold|transfer");
    eval->add_option("--codebook-source", eval_source, "corpus supplying the kineme codebook");
    eval->add_option("--datasets", eval_datasets, "k-fold pool, comma separated");
    eval->add_option("--train", eval_train, "transfer train corpora, comma separated");
    eval->add_option("--test", eval_test, "transfer test corpora, comma separated");
    eval->add_option("--chunk-seconds", eval_chunk, "chunk length (60|75|90|120)");
    eval->add_option("--reps", eval_reps, "repetitions");
    eval->add_option("--folds", eval_folds, "folds");
    eval->add_option("--families", eval_families, "model families, comma separated");
    eval->add_option("--task", eval_task, "classify|regress|both");
    eval->add_option("--out", eval_out, "report output directory")->required();

    auto* report = app.add_subcommand("report", "re-render a saved report");
    std::string report_in, report_out;
    report->add_option("--in", report_in, "report.json path")->required();
    report->add_option("--out", report_out, "output directory")->required();

    auto* config = app.add_subcommand("config", "print or write the effective config");
    std::string config_out;
    config->add_option("--out", config_out, "write to this path instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    g.seed_set = seed_opt->count() > 0;

    try {
        if (synth->parsed()) return cmd_synth(g, synth_spec, synth_out, synth_vpc);
        if (ingest->parsed()) return cmd_ingest(g, ingest_manifest, ingest_out);
        if (learn->parsed()) {
            return cmd_learn(g, learn_manifest, learn_out, learn_tag, learn_rank, learn_k);
        }
        if (encode->parsed()) return cmd_encode(g, enc_cb, enc_manifest, enc_out);
        if (features->parsed()) {
            return cmd_features(g, feat_cb, feat_manifest, feat_chunk, feat_out);
        }
        if (train->parsed()) {
            return cmd_train(g, train_features, train_family, train_task, train_out);
        }
        if (eval->parsed()) {
            return cmd_eval(g, eval_corpora, eval_protocol, eval_source, eval_datasets,
                            eval_train, eval_test, eval_chunk, eval_reps, eval_folds,
                            eval_families, eval_task, eval_out);
        }
        if (report->parsed()) return cmd_report(report_in, report_out);
        if (config->parsed()) return cmd_config(g, config_out);
    } catch (const ConfigError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "error: data: " << e.what() << "\n";
        return 3;
    } catch (const ProtocolError& e) {
        std::cerr << "error: protocol: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 5;
    }
    return 2;
}
