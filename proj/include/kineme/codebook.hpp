#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kineme/gmm.hpp"
#include "kineme/ingest.hpp"
#include "kineme/nmf.hpp"

namespace kineme {

// Everything a series must agree on before it can be encoded with a codebook.
struct CodebookFingerprint {
    int segment_samples = 50;
    int hop_samples = 25;
    double sample_rate_hz = 10.0;
    double offset_degrees = 180.0;
    int canonical_samples = 3000;
    int nmf_rank = 16;
    int gmm_components = 16;
    std::uint64_t nmf_seed = 0;
    std::uint64_t gmm_seed = 0;

    bool operator==(const CodebookFingerprint&) const = default;
    std::uint64_t hash() const;
};

// Learned motion-unit codebook: NMF basis, mixture over coefficient space,
// and the unit centers mapped back to pose space (kinemes = basis * means).
struct Codebook {
    NmfModel nmf;
    GmmModel gmm;
    Eigen::MatrixXd kinemes;  // m x k, column j reshapes to an l x 3 trajectory
    CodebookFingerprint fingerprint;
    std::string source_tag;
    std::vector<std::string> source_videos;  // low-labelled videos that trained it
};

struct KinemeSequence {
    std::string video_id;
    std::vector<int> labels;        // 0-based kineme index per segment
    Eigen::MatrixXd coefficients;   // q x s
    std::vector<double> residuals;  // projection residual norm per segment
};

struct DiscoveryConfig {
    IngestConfig ingest;
    int nmf_rank = 16;
    double nmf_tol = kNmfDefaultTol;
    int nmf_max_iter = kNmfDefaultMaxIter;
    int gmm_components = 16;
    double gmm_tol = kGmmDefaultTol;
    int gmm_max_iter = kGmmDefaultMaxIter;
    std::uint64_t nmf_seed = 1;
    std::uint64_t gmm_seed = 2;
    std::string source_tag = "corpus";
};

// Learn a codebook from the low-labelled cohort only: pool segments from
// every manifest record with binary_label == low, factorise, cluster the
// coefficient columns, and map cluster centers back to pose space.
Codebook discover_kinemes(std::span<const AngleSeries> corpus, const CorpusManifest& manifest,
                          const DiscoveryConfig& config);

// Express a canonical series as a kineme sequence: per segment, project onto
// the basis and take the maximum-posterior mixture component.
KinemeSequence encode_series(const Codebook& cb, const AngleSeries& series);

// Pose-space trajectory of one kineme, [pitch | yaw | roll] blocks.
Eigen::VectorXd reconstruct_segment(const Codebook& cb, int label);

void save_codebook(const Codebook& cb, const std::string& path);
Codebook load_codebook(const std::string& path);

// IngestConfig consistent with a codebook's fingerprint (for segmentation).
IngestConfig fingerprint_ingest_config(const CodebookFingerprint& fp);

}  // namespace kineme
