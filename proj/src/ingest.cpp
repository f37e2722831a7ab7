#include "kineme/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace kineme {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) fields.push_back(trim(cur));
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

bool parse_number(const std::string& s, double& out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    const char* begin = t.data();
    const char* end = t.data() + t.size();
    auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc() && res.ptr == end && std::isfinite(out);
}

bool parse_int(const std::string& s, int& out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    const char* begin = t.data();
    const char* end = t.data() + t.size();
    auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc() && res.ptr == end;
}

int find_column(const std::vector<std::string>& header, const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
}

int require_column(const std::vector<std::string>& header, const std::string& name,
                   const std::string& path) {
    const int idx = find_column(header, name);
    if (idx < 0) throw DataError("missing column '" + name + "' in " + path);
    return idx;
}

}  // namespace

std::string to_string(Scale s) {
    switch (s) {
        case Scale::Bdi: return "BDI";
        case Scale::Hrsd: return "HRSD";
        case Scale::QidsSr: return "QIDS-SR";
    }
    return "?";
}

Scale scale_from_string(const std::string& s) {
    if (s == "BDI") return Scale::Bdi;
    if (s == "HRSD") return Scale::Hrsd;
    if (s == "QIDS-SR") return Scale::QidsSr;
    throw DataError("unknown severity scale '" + s + "'");
}

std::string to_string(BinaryLabel l) { return l == BinaryLabel::Low ? "low" : "high"; }

BinaryLabel label_from_string(const std::string& s) {
    if (s == "low") return BinaryLabel::Low;
    if (s == "high") return BinaryLabel::High;
    throw DataError("unknown binary label '" + s + "' (expected low|high)");
}

const ManifestRecord* CorpusManifest::find(const std::string& video_id) const {
    for (const auto& r : records) {
        if (r.video_id == video_id) return &r;
    }
    return nullptr;
}

AngleSeries parse_pose_csv(const std::string& path, const IngestConfig& config,
                           const std::string& video_id) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open pose CSV: " + path);

    std::string line;
    if (!std::getline(f, line)) throw DataError("empty pose CSV: " + path);
    const auto header = split_csv_line(line);
    require_column(header, config.frame_column, path);
    const int time_idx = require_column(header, config.time_column, path);
    const int pitch_idx = require_column(header, config.pitch_column, path);
    const int yaw_idx = require_column(header, config.yaw_column, path);
    const int roll_idx = require_column(header, config.roll_column, path);
    const int success_idx = find_column(header, config.success_column);
    const int max_idx = std::max({time_idx, pitch_idx, yaw_idx, roll_idx, success_idx});

    struct Row {
        double t, p, y, r;
    };
    std::vector<Row> rows;
    long total = 0;
    long dropped = 0;
    while (std::getline(f, line)) {
        if (trim(line).empty()) continue;
        ++total;
        const auto fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) <= max_idx) {
            ++dropped;
            continue;
        }
        double success = 1.0;
        if (success_idx >= 0 && !parse_number(fields[success_idx], success)) success = 0.0;
        Row row{};
        if (success == 0.0 || !parse_number(fields[time_idx], row.t) ||
            !parse_number(fields[pitch_idx], row.p) || !parse_number(fields[yaw_idx], row.y) ||
            !parse_number(fields[roll_idx], row.r)) {
            ++dropped;
            continue;
        }
        rows.push_back(row);
    }

    const double scale = config.unit == IngestConfig::Unit::Radians ? kDegreesPerRadian : 1.0;
    for (auto& row : rows) {
        row.p = row.p * scale + config.offset_degrees;
        row.y = row.y * scale + config.offset_degrees;
        row.r = row.r * scale + config.offset_degrees;
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.t < b.t; });

    if (rows.size() < 2 || rows.back().t - rows.front().t < config.min_valid_seconds) {
        throw DataError("insufficient data in " + path + ": fewer than " +
                        format_double(config.min_valid_seconds) + "s of valid samples");
    }

    AngleSeries series;
    series.video_id = video_id.empty() ? std::filesystem::path(path).stem().string() : video_id;
    series.sample_rate_hz = config.sample_rate_hz;
    if (total > 0 &&
        static_cast<double>(dropped) / static_cast<double>(total) > config.drop_warn_fraction) {
        series.warnings.push_back("quality: " + std::to_string(dropped) + "/" +
                                  std::to_string(total) + " rows dropped");
    }

    const int n = config.canonical_samples();
    const double t0 = rows.front().t;
    const double span = rows.back().t - t0;
    const double duration = std::min(span, config.duration_seconds);
    const double delta = duration / static_cast<double>(n);

    series.samples.resize(n, 3);
    std::size_t hi = 1;  // rows[hi-1].t <= t < rows[hi].t, advanced monotonically
    for (int j = 0; j < n; ++j) {
        const double t = t0 + static_cast<double>(j) * delta;
        while (hi < rows.size() && rows[hi].t < t) ++hi;
        const Row& lo_row = rows[hi - 1];
        double w = 0.0;
        const Row& hi_row = hi < rows.size() ? rows[hi] : rows.back();
        if (hi < rows.size() && hi_row.t > lo_row.t) {
            w = (t - lo_row.t) / (hi_row.t - lo_row.t);
            if (w < 0.0) w = 0.0;
            if (w > 1.0) w = 1.0;
        }
        series.samples(j, 0) = wrap_degrees(lo_row.p + w * (hi_row.p - lo_row.p));
        series.samples(j, 1) = wrap_degrees(lo_row.y + w * (hi_row.y - lo_row.y));
        series.samples(j, 2) = wrap_degrees(lo_row.r + w * (hi_row.r - lo_row.r));
    }
    return series;
}

SegmentMatrix segment_series(const AngleSeries& series, const IngestConfig& config) {
    const int T = series.rows();
    const int l = config.segment_samples;
    const int hop = config.hop_samples;
    if (T != config.canonical_samples()) {
        throw ContractError("segment_series requires a canonical series of " +
                            std::to_string(config.canonical_samples()) + " samples, got " +
                            std::to_string(T) + " for " + series.video_id);
    }
    const int s = (T - l) / hop + 1;
    SegmentMatrix out;
    out.columns.resize(3 * l, s);
    out.video_ids.assign(static_cast<std::size_t>(s), series.video_id);
    out.start_samples.resize(static_cast<std::size_t>(s));
    for (int i = 0; i < s; ++i) {
        const int start = hop * i;
        out.start_samples[static_cast<std::size_t>(i)] = start;
        for (int axis = 0; axis < 3; ++axis) {
            out.columns.block(axis * l, i, l, 1) = series.samples.block(start, axis, l, 1);
        }
    }
    return out;
}

SegmentMatrix concat_segments(const std::vector<SegmentMatrix>& parts) {
    SegmentMatrix out;
    if (parts.empty()) return out;
    Eigen::Index total = 0;
    for (const auto& p : parts) total += p.columns.cols();
    out.columns.resize(parts.front().columns.rows(), total);
    out.video_ids.reserve(static_cast<std::size_t>(total));
    out.start_samples.reserve(static_cast<std::size_t>(total));
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        if (p.columns.rows() != out.columns.rows()) {
            throw ContractError("cannot concatenate segment matrices of differing row counts");
        }
        out.columns.middleCols(at, p.columns.cols()) = p.columns;
        out.video_ids.insert(out.video_ids.end(), p.video_ids.begin(), p.video_ids.end());
        out.start_samples.insert(out.start_samples.end(), p.start_samples.begin(),
                                 p.start_samples.end());
        at += p.columns.cols();
    }
    return out;
}

std::vector<ChunkRange> chunk_boundaries(int total_samples, double sample_rate_hz,
                                         int chunk_seconds, const IngestConfig& config) {
    bool supported = false;
    for (int s : kSupportedChunkSeconds) supported = supported || s == chunk_seconds;
    if (!supported) {
        throw ConfigError("unsupported chunk size " + std::to_string(chunk_seconds) +
                          "s (supported: 60, 75, 90, 120)");
    }
    const int l = config.segment_samples;
    const int hop = config.hop_samples;
    const int chunk_samples = static_cast<int>(chunk_seconds * sample_rate_hz + 0.5);
    const int n_chunks = total_samples / chunk_samples;  // trailing partial chunk dropped
    const int total_segments = total_samples >= l ? (total_samples - l) / hop + 1 : 0;

    std::vector<ChunkRange> chunks;
    chunks.reserve(static_cast<std::size_t>(n_chunks));
    for (int c = 0; c < n_chunks; ++c) {
        const int lo_sample = c * chunk_samples;
        const int hi_sample = (c + 1) * chunk_samples;
        const int first = (lo_sample + hop - 1) / hop;  // ceil
        int last = (hi_sample - l) / hop;
        if (last > total_segments - 1) last = total_segments - 1;
        if (last < first) continue;
        chunks.push_back(ChunkRange{c, first, last - first + 1});
    }
    return chunks;
}

CorpusManifest load_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open manifest: " + path);
    std::string line;
    if (!std::getline(f, line)) throw DataError("empty manifest: " + path);
    const auto header = split_csv_line(line);
    const int id_idx = require_column(header, "video_id", path);
    const int path_idx = require_column(header, "series_path", path);
    const int scale_idx = require_column(header, "scale", path);
    const int score_idx = require_column(header, "raw_score", path);
    const int label_idx = require_column(header, "binary_label", path);
    const int max_idx = std::max({id_idx, path_idx, scale_idx, score_idx, label_idx});

    CorpusManifest manifest;
    std::map<std::string, int> seen;
    int row_no = 1;
    while (std::getline(f, line)) {
        ++row_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        const std::string where = path + ":" + std::to_string(row_no);
        if (static_cast<int>(fields.size()) <= max_idx) {
            throw DataError("manifest row has too few fields at " + where);
        }
        ManifestRecord rec;
        rec.video_id = fields[id_idx];
        rec.series_path = fields[path_idx];
        if (rec.video_id.empty()) throw DataError("empty video_id at " + where);
        if (auto [it, inserted] = seen.emplace(rec.video_id, row_no); !inserted) {
            throw DataError("duplicate video_id '" + rec.video_id + "' at " + where +
                            " (first seen at row " + std::to_string(it->second) + ")");
        }
        try {
            rec.scale = scale_from_string(fields[scale_idx]);
            rec.binary_label = label_from_string(fields[label_idx]);
        } catch (const DataError& e) {
            throw DataError(std::string(e.what()) + " at " + where);
        }
        if (!parse_int(fields[score_idx], rec.raw_score)) {
            throw DataError("invalid raw_score '" + fields[score_idx] + "' at " + where);
        }

        int max_score = 0;
        switch (rec.scale) {
            case Scale::Bdi: max_score = 63; break;
            case Scale::Hrsd: max_score = 52; break;
            case Scale::QidsSr: max_score = 27; break;
        }
        if (rec.raw_score < 0 || rec.raw_score > max_score) {
            throw DataError("raw_score " + std::to_string(rec.raw_score) + " out of range [0, " +
                            std::to_string(max_score) + "] for scale " + to_string(rec.scale) +
                            " at " + where);
        }
        // QIDS-SR manifests carry their label as ground truth; BDI/HRSD labels
        // must agree with the scale threshold.
        if (rec.scale == Scale::Bdi || rec.scale == Scale::Hrsd) {
            const int low_max = rec.scale == Scale::Bdi ? kBdiLowMax : kHrsdLowMax;
            const BinaryLabel expected =
                rec.raw_score > low_max ? BinaryLabel::High : BinaryLabel::Low;
            if (expected != rec.binary_label) {
                throw DataError("binary_label '" + to_string(rec.binary_label) +
                                "' contradicts " + to_string(rec.scale) + " score " +
                                std::to_string(rec.raw_score) + " at " + where);
            }
        }
        manifest.records.push_back(std::move(rec));
    }
    return manifest;
}

void write_manifest(const std::string& path, const CorpusManifest& manifest) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot open for writing: " + path);
    f << "video_id,series_path,scale,raw_score,binary_label\n";
    for (const auto& r : manifest.records) {
        f << r.video_id << ',' << r.series_path << ',' << to_string(r.scale) << ','
          << r.raw_score << ',' << to_string(r.binary_label) << '\n';
    }
    if (!f) throw DataError("write failed: " + path);
}

void write_pose_csv(const std::string& path, const AngleSeries& series,
                    const IngestConfig& config) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot open for writing: " + path);
    f << config.frame_column << ',' << config.time_column << ',' << config.pitch_column << ','
      << config.yaw_column << ',' << config.roll_column << ',' << config.success_column << '\n';
    const int n = series.rows();
    const double delta = config.duration_seconds / static_cast<double>(n);
    const double scale = config.unit == IngestConfig::Unit::Radians ? 1.0 / kDegreesPerRadian : 1.0;
    // One extra row repeating the final sample so the written span covers the
    // full canonical duration and re-parsing lands on exact sample times.
    for (int j = 0; j <= n; ++j) {
        const int src = std::min(j, n - 1);
        f << j << ',' << format_double(static_cast<double>(j) * delta);
        for (int axis = 0; axis < 3; ++axis) {
            const double deg = series.samples(src, axis) - config.offset_degrees;
            f << ',' << format_double(deg * scale);
        }
        f << ",1\n";
    }
    if (!f) throw DataError("write failed: " + path);
}

}  // namespace kineme
