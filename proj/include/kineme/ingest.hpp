#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "kineme/common.hpp"

namespace kineme {

// How pose CSVs are read and turned into canonical series. Defaults follow
// the common pose-tracker export convention (frame, timestamp, pose_R*).
struct IngestConfig {
    std::string frame_column = "frame";
    std::string time_column = "timestamp";
    std::string pitch_column = "pose_Rx";
    std::string yaw_column = "pose_Ry";
    std::string roll_column = "pose_Rz";
    std::string success_column = "success";  // optional in the file

    enum class Unit { Radians, Degrees };
    Unit unit = Unit::Radians;

    double sample_rate_hz = 10.0;    // canonical rate
    double duration_seconds = 300.0; // canonical duration
    double offset_degrees = 180.0;   // applied before wrapping into [0, 360)
    int segment_samples = 50;        // l
    int hop_samples = 25;

    double min_valid_seconds = 10.0;
    double drop_warn_fraction = 0.2;

    int canonical_samples() const {
        return static_cast<int>(sample_rate_hz * duration_seconds + 0.5);
    }
};

// Uniformly sampled pitch/yaw/roll trajectory for one video, degrees in
// [0, 360). Canonical series have exactly canonical_samples() rows.
struct AngleSeries {
    std::string video_id;
    Eigen::Matrix<double, Eigen::Dynamic, 3> samples;  // columns: pitch, yaw, roll
    double sample_rate_hz = 10.0;
    std::vector<std::string> warnings;

    int rows() const { return static_cast<int>(samples.rows()); }
};

// One flattened segment per column, laid out [pitch block | yaw | roll].
struct SegmentMatrix {
    Eigen::MatrixXd columns;              // m x s
    std::vector<std::string> video_ids;   // per column
    std::vector<int> start_samples;       // per column, 0-based

    int segment_count() const { return static_cast<int>(columns.cols()); }
};

enum class Scale { Bdi, Hrsd, QidsSr };
enum class BinaryLabel { Low, High };

std::string to_string(Scale s);
Scale scale_from_string(const std::string& s);
std::string to_string(BinaryLabel l);
BinaryLabel label_from_string(const std::string& s);

struct ManifestRecord {
    std::string video_id;
    std::string series_path;
    Scale scale = Scale::QidsSr;
    int raw_score = 0;
    BinaryLabel binary_label = BinaryLabel::Low;
};

struct CorpusManifest {
    std::vector<ManifestRecord> records;

    const ManifestRecord* find(const std::string& video_id) const;
};

// Binary thresholds per severity scale: a score above the threshold is the
// high/depressed class. QIDS-SR manifests carry their label authoritatively,
// so there is no cross-check threshold for that scale here.
inline constexpr int kBdiLowMax = 13;
inline constexpr int kHrsdLowMax = 7;

// Parse one pose CSV into a canonical series: convert to degrees, apply the
// offset, wrap into [0, 360), drop tracker-failure rows, interpolate over
// gaps, and resample so exactly canonical_samples() values cover the first
// duration_seconds (shorter sources are resampled proportionally faster).
AngleSeries parse_pose_csv(const std::string& path, const IngestConfig& config,
                           const std::string& video_id = "");

// Slice a canonical series into overlapping segments (one per column).
SegmentMatrix segment_series(const AngleSeries& series, const IngestConfig& config);

// Concatenate per-video segment matrices, preserving provenance.
SegmentMatrix concat_segments(const std::vector<SegmentMatrix>& parts);

// Non-overlapping chunks tiling the series from t = 0; a chunk owns the
// segments that fall entirely inside it. A trailing partial chunk is dropped.
struct ChunkRange {
    int chunk_index = 0;
    int first_segment = 0;  // index into segment_series() column order
    int segment_count = 0;
};

inline constexpr int kSupportedChunkSeconds[4] = {60, 75, 90, 120};

std::vector<ChunkRange> chunk_boundaries(int total_samples, double sample_rate_hz,
                                         int chunk_seconds, const IngestConfig& config);

// Manifest CSV: header video_id,series_path,scale,raw_score,binary_label.
// BDI/HRSD labels are validated against the scale thresholds.
CorpusManifest load_manifest(const std::string& path);
void write_manifest(const std::string& path, const CorpusManifest& manifest);

// Emit a series as a tracker-style pose CSV (degrees, offset removed) that
// parse_pose_csv round-trips back to the same canonical samples.
void write_pose_csv(const std::string& path, const AngleSeries& series,
                    const IngestConfig& config);

}  // namespace kineme
