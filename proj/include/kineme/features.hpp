#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "kineme/codebook.hpp"
#include "kineme/ingest.hpp"

namespace kineme {

// The 8 x 3 reconstruction-error statistics for one temporal chunk,
// ordered (pitch, yaw, roll) x (min, max, range, mean, median, std,
// skewness, kurtosis).
struct ChunkFeatures {
    std::string video_id;
    int chunk_index = 0;
    std::array<double, 24> values{};
};

const std::array<std::string, 24>& feature_names();

// Signed per-sample difference between an observed segment and a kineme
// trajectory, blocks [d_p | d_y | d_r].
Eigen::VectorXd difference_vector(const Eigen::VectorXd& segment,
                                  const Eigen::VectorXd& reconstruction);

// Signed sums of a difference vector over its pitch/yaw/roll blocks.
struct AxisSums {
    double pitch = 0.0;
    double yaw = 0.0;
    double roll = 0.0;
};
AxisSums segment_sum(const Eigen::VectorXd& difference, int segment_samples);

// Statistics of the absolute sums across a chunk's segments. Sample standard
// deviation (n-1 divisor); skewness/kurtosis are the standardised 3rd/4th
// central moments (kurtosis is not excess); all three are defined as 0 for a
// single segment or zero variance.
ChunkFeatures chunk_statistics(const std::vector<AxisSums>& sums, const std::string& video_id,
                               int chunk_index);

// Full per-video feature pass: encode, reconstruct per label, difference,
// sum, and summarise per chunk.
std::vector<ChunkFeatures> series_features(const Codebook& cb, const AngleSeries& series,
                                           int chunk_seconds);

// Column z-normalisation fitted on training rows only. Columns with
// near-zero spread (< 1e-12) are centred but not scaled.
struct Normaliser {
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;  // 0 marks a pass-through (centre-only) column

    std::uint64_t fingerprint() const;
};

Normaliser fit_normaliser(const Eigen::MatrixXd& train_rows);
Eigen::MatrixXd apply_normaliser(const Normaliser& n, const Eigen::MatrixXd& rows);

// Feature rows with labels/severity targets, as exported to CSV.
struct FeatureRow {
    ChunkFeatures features;
    BinaryLabel label = BinaryLabel::Low;
    double severity = 0.0;  // QIDS-converted target
};

struct FeatureTable {
    std::vector<FeatureRow> rows;

    Eigen::MatrixXd matrix() const;  // one row per chunk, 24 columns
};

// CSV with header video_id, chunk_index, 24 named feature columns, label,
// severity.
void write_feature_csv(const std::string& path, const FeatureTable& table);
FeatureTable read_feature_csv(const std::string& path);

}  // namespace kineme
