#include "kineme/codebook.hpp"

#include <algorithm>
#include <cstring>

#include "kineme/container.hpp"

namespace kineme {

std::uint64_t CodebookFingerprint::hash() const {
    std::uint64_t h = fnv1a64(&segment_samples, sizeof(segment_samples));
    h = fnv1a64(&hop_samples, sizeof(hop_samples), h);
    h = fnv1a64(&sample_rate_hz, sizeof(sample_rate_hz), h);
    h = fnv1a64(&offset_degrees, sizeof(offset_degrees), h);
    h = fnv1a64(&canonical_samples, sizeof(canonical_samples), h);
    h = fnv1a64(&nmf_rank, sizeof(nmf_rank), h);
    h = fnv1a64(&gmm_components, sizeof(gmm_components), h);
    h = fnv1a64(&nmf_seed, sizeof(nmf_seed), h);
    h = fnv1a64(&gmm_seed, sizeof(gmm_seed), h);
    return h;
}

IngestConfig fingerprint_ingest_config(const CodebookFingerprint& fp) {
    IngestConfig cfg;
    cfg.segment_samples = fp.segment_samples;
    cfg.hop_samples = fp.hop_samples;
    cfg.sample_rate_hz = fp.sample_rate_hz;
    cfg.offset_degrees = fp.offset_degrees;
    cfg.duration_seconds = fp.canonical_samples / fp.sample_rate_hz;
    return cfg;
}

Codebook discover_kinemes(std::span<const AngleSeries> corpus, const CorpusManifest& manifest,
                          const DiscoveryConfig& config) {
    std::vector<SegmentMatrix> pooled;
    std::vector<std::string> sources;
    for (const auto& series : corpus) {
        const ManifestRecord* rec = manifest.find(series.video_id);
        if (rec == nullptr) {
            throw ConfigError("video '" + series.video_id + "' is not in the manifest");
        }
        if (rec->binary_label != BinaryLabel::Low) continue;
        pooled.push_back(segment_series(series, config.ingest));
        sources.push_back(series.video_id);
    }
    if (pooled.empty()) {
        throw ConfigError("kineme discovery needs at least one low-labelled video");
    }
    SegmentMatrix segments = concat_segments(pooled);
    if (segments.segment_count() < config.gmm_components) {
        throw ConfigError("pooled segment count " + std::to_string(segments.segment_count()) +
                          " is below the requested component count " +
                          std::to_string(config.gmm_components));
    }

    NmfFit fit = fit_nmf(segments.columns, config.nmf_rank, config.nmf_seed, config.nmf_tol,
                         config.nmf_max_iter);
    GmmModel gmm = fit_gmm(fit.coefficients, config.gmm_components, config.gmm_seed,
                           config.gmm_tol, config.gmm_max_iter);

    Codebook cb;
    cb.kinemes = fit.model.basis * gmm.means;
    cb.nmf = std::move(fit.model);
    cb.gmm = std::move(gmm);
    cb.fingerprint.segment_samples = config.ingest.segment_samples;
    cb.fingerprint.hop_samples = config.ingest.hop_samples;
    cb.fingerprint.sample_rate_hz = config.ingest.sample_rate_hz;
    cb.fingerprint.offset_degrees = config.ingest.offset_degrees;
    cb.fingerprint.canonical_samples = config.ingest.canonical_samples();
    cb.fingerprint.nmf_rank = config.nmf_rank;
    cb.fingerprint.gmm_components = config.gmm_components;
    cb.fingerprint.nmf_seed = config.nmf_seed;
    cb.fingerprint.gmm_seed = config.gmm_seed;
    cb.source_tag = config.source_tag;
    std::sort(sources.begin(), sources.end());
    cb.source_videos = std::move(sources);
    return cb;
}

KinemeSequence encode_series(const Codebook& cb, const AngleSeries& series) {
    if (series.sample_rate_hz != cb.fingerprint.sample_rate_hz ||
        series.rows() != cb.fingerprint.canonical_samples) {
        throw ConfigError("series '" + series.video_id +
                          "' does not match the codebook fingerprint (rate " +
                          format_double(series.sample_rate_hz) + " Hz, " +
                          std::to_string(series.rows()) + " samples)");
    }
    const IngestConfig cfg = fingerprint_ingest_config(cb.fingerprint);
    const SegmentMatrix segments = segment_series(series, cfg);
    const int s = segments.segment_count();

    KinemeSequence seq;
    seq.video_id = series.video_id;
    seq.labels.resize(static_cast<std::size_t>(s));
    seq.coefficients.resize(cb.nmf.basis.cols(), s);
    seq.residuals.resize(static_cast<std::size_t>(s));
    for (int i = 0; i < s; ++i) {
        Projection p = project_segment(cb.nmf.basis, segments.columns.col(i));
        seq.labels[static_cast<std::size_t>(i)] = assign_component(cb.gmm, p.coefficients);
        seq.coefficients.col(i) = p.coefficients;
        seq.residuals[static_cast<std::size_t>(i)] = p.residual_norm;
    }
    return seq;
}

Eigen::VectorXd reconstruct_segment(const Codebook& cb, int label) {
    if (label < 0 || label >= cb.gmm.components) {
        throw ContractError("kineme label " + std::to_string(label) + " out of range [0, " +
                            std::to_string(cb.gmm.components - 1) + "]");
    }
    return cb.kinemes.col(label);
}

namespace {

nlohmann::json fingerprint_to_json(const CodebookFingerprint& fp) {
    return {{"segment_samples", fp.segment_samples},
            {"hop_samples", fp.hop_samples},
            {"sample_rate_hz", fp.sample_rate_hz},
            {"offset_degrees", fp.offset_degrees},
            {"canonical_samples", fp.canonical_samples},
            {"nmf_rank", fp.nmf_rank},
            {"gmm_components", fp.gmm_components},
            {"nmf_seed", fp.nmf_seed},
            {"gmm_seed", fp.gmm_seed}};
}

CodebookFingerprint fingerprint_from_json(const nlohmann::json& j) {
    CodebookFingerprint fp;
    fp.segment_samples = j.at("segment_samples").get<int>();
    fp.hop_samples = j.at("hop_samples").get<int>();
    fp.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    fp.offset_degrees = j.at("offset_degrees").get<double>();
    fp.canonical_samples = j.at("canonical_samples").get<int>();
    fp.nmf_rank = j.at("nmf_rank").get<int>();
    fp.gmm_components = j.at("gmm_components").get<int>();
    fp.nmf_seed = j.at("nmf_seed").get<std::uint64_t>();
    fp.gmm_seed = j.at("gmm_seed").get<std::uint64_t>();
    return fp;
}

Eigen::MatrixXd vector_to_matrix(const std::vector<double>& v) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), 1);
    for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
    return m;
}

std::vector<double> matrix_to_vector(const Eigen::MatrixXd& m) {
    std::vector<double> v(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.size(); ++i) v[static_cast<std::size_t>(i)] = m(i);
    return v;
}

}  // namespace

void save_codebook(const Codebook& cb, const std::string& path) {
    Container c;
    c.kind = kKindCodebook;
    c.meta["fingerprint"] = fingerprint_to_json(cb.fingerprint);
    c.meta["source_tag"] = cb.source_tag;
    c.meta["source_videos"] = cb.source_videos;
    c.meta["nmf_rank"] = cb.nmf.rank;
    c.meta["nmf_seed"] = cb.nmf.seed;
    c.meta["gmm_components"] = cb.gmm.components;
    c.meta["gmm_seed"] = cb.gmm.seed;
    c.meta["gmm_final_loglik"] = cb.gmm.final_loglik;
    c.meta["gmm_means_clamped"] = cb.gmm.means_clamped;
    c.meta["gmm_degenerate"] = cb.gmm.degenerate;
    c.matrices["basis"] = cb.nmf.basis;
    c.matrices["nmf_objective_trace"] = vector_to_matrix(cb.nmf.objective_trace);
    c.matrices["means"] = cb.gmm.means;
    c.matrices["variances"] = cb.gmm.variances;
    c.matrices["weights"] = cb.gmm.weights;
    c.matrices["gmm_loglik_trace"] = vector_to_matrix(cb.gmm.loglik_trace);
    c.matrices["kinemes"] = cb.kinemes;
    write_container(path, c);
}

Codebook load_codebook(const std::string& path) {
    Container c = read_container(path, kKindCodebook);
    Codebook cb;
    try {
        cb.fingerprint = fingerprint_from_json(c.meta.at("fingerprint"));
        cb.source_tag = c.meta.at("source_tag").get<std::string>();
        cb.source_videos = c.meta.at("source_videos").get<std::vector<std::string>>();
        cb.nmf.rank = c.meta.at("nmf_rank").get<int>();
        cb.nmf.seed = c.meta.at("nmf_seed").get<std::uint64_t>();
        cb.gmm.components = c.meta.at("gmm_components").get<int>();
        cb.gmm.seed = c.meta.at("gmm_seed").get<std::uint64_t>();
        cb.gmm.final_loglik = c.meta.at("gmm_final_loglik").get<double>();
        cb.gmm.means_clamped = c.meta.at("gmm_means_clamped").get<bool>();
        cb.gmm.degenerate = c.meta.at("gmm_degenerate").get<bool>();
        cb.nmf.basis = c.matrices.at("basis");
        cb.nmf.objective_trace = matrix_to_vector(c.matrices.at("nmf_objective_trace"));
        cb.gmm.means = c.matrices.at("means");
        cb.gmm.variances = c.matrices.at("variances");
        cb.gmm.weights = c.matrices.at("weights");
        cb.gmm.loglik_trace = matrix_to_vector(c.matrices.at("gmm_loglik_trace"));
        cb.kinemes = c.matrices.at("kinemes");
    } catch (const std::out_of_range&) {
        throw DataError("codebook container is missing required fields: " + path);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("codebook container field error in " + path + ": " + e.what());
    }
    // Consistency re-check: the stored kineme matrix must equal basis * means.
    const Eigen::MatrixXd recomputed = cb.nmf.basis * cb.gmm.means;
    if (recomputed.rows() != cb.kinemes.rows() || recomputed.cols() != cb.kinemes.cols() ||
        (recomputed - cb.kinemes).cwiseAbs().maxCoeff() != 0.0) {
        throw DataError("codebook kineme matrix is inconsistent with basis * means: " + path);
    }
    return cb;
}

}  // namespace kineme
