#include "kineme/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace kineme {

const std::array<std::string, 24>& feature_names() {
    static const std::array<std::string, 24> names = [] {
        const char* axes[3] = {"pitch", "yaw", "roll"};
        const char* stats[8] = {"min", "max", "range", "mean", "median", "std", "skewness", "kurtosis"};
        std::array<std::string, 24> out;
        for (int a = 0; a < 3; ++a) {
            for (int s = 0; s < 8; ++s) {
                out[static_cast<std::size_t>(a * 8 + s)] = std::string(axes[a]) + "_" + stats[s];
            }
        }
        return out;
    }();
    return names;
}

Eigen::VectorXd difference_vector(const Eigen::VectorXd& segment,
                                  const Eigen::VectorXd& reconstruction) {
    if (segment.size() != reconstruction.size()) {
        throw ContractError("difference_vector: length mismatch " +
                            std::to_string(segment.size()) + " vs " +
                            std::to_string(reconstruction.size()));
    }
    return segment - reconstruction;
}

AxisSums segment_sum(const Eigen::VectorXd& difference, int segment_samples) {
    if (difference.size() != 3 * segment_samples) {
        throw ContractError("segment_sum: expected 3 blocks of " +
                            std::to_string(segment_samples) + " entries");
    }
    // sequential accumulation, in index order
    AxisSums s;
    for (int i = 0; i < segment_samples; ++i) s.pitch += difference(i);
    for (int i = 0; i < segment_samples; ++i) s.yaw += difference(segment_samples + i);
    for (int i = 0; i < segment_samples; ++i) s.roll += difference(2 * segment_samples + i);
    return s;
}

namespace {

std::array<double, 8> stats_of(std::vector<double> a) {
    const std::size_t n = a.size();
    std::array<double, 8> out{};
    std::sort(a.begin(), a.end());
    const double mn = a.front();
    const double mx = a.back();
    double mean = 0.0;
    for (double v : a) mean += v;
    mean /= static_cast<double>(n);
    const double median =
        n % 2 == 1 ? a[n / 2] : 0.5 * (a[n / 2 - 1] + a[n / 2]);

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : a) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    const double pop_m2 = m2 / static_cast<double>(n);
    double stddev = 0.0, skew = 0.0, kurt = 0.0;
    if (n > 1 && pop_m2 > 0.0) {
        stddev = std::sqrt(m2 / static_cast<double>(n - 1));
        const double pop_m3 = m3 / static_cast<double>(n);
        const double pop_m4 = m4 / static_cast<double>(n);
        skew = pop_m3 / std::pow(pop_m2, 1.5);
        kurt = pop_m4 / (pop_m2 * pop_m2);
    }
    out = {mn, mx, mx - mn, mean, median, stddev, skew, kurt};
    return out;
}

}  // namespace

ChunkFeatures chunk_statistics(const std::vector<AxisSums>& sums, const std::string& video_id,
                               int chunk_index) {
    if (sums.empty()) throw ContractError("chunk_statistics: empty chunk");
    ChunkFeatures f;
    f.video_id = video_id;
    f.chunk_index = chunk_index;
    std::vector<double> abs_sums(sums.size());
    for (int axis = 0; axis < 3; ++axis) {
        for (std::size_t i = 0; i < sums.size(); ++i) {
            const double v =
                axis == 0 ? sums[i].pitch : (axis == 1 ? sums[i].yaw : sums[i].roll);
            abs_sums[i] = std::abs(v);
        }
        const auto stats = stats_of(abs_sums);
        for (int s = 0; s < 8; ++s) f.values[static_cast<std::size_t>(axis * 8 + s)] = stats[s];
    }
    return f;
}

std::vector<ChunkFeatures> series_features(const Codebook& cb, const AngleSeries& series,
                                           int chunk_seconds) {
    const IngestConfig cfg = fingerprint_ingest_config(cb.fingerprint);
    const SegmentMatrix segments = segment_series(series, cfg);
    const KinemeSequence seq = encode_series(cb, series);
    const auto chunks =
        chunk_boundaries(series.rows(), series.sample_rate_hz, chunk_seconds, cfg);

    std::vector<ChunkFeatures> out;
    out.reserve(chunks.size());
    for (const auto& chunk : chunks) {
        std::vector<AxisSums> sums;
        sums.reserve(static_cast<std::size_t>(chunk.segment_count));
        for (int i = chunk.first_segment; i < chunk.first_segment + chunk.segment_count; ++i) {
            const int label = seq.labels[static_cast<std::size_t>(i)];
            const Eigen::VectorXd d =
                difference_vector(segments.columns.col(i), cb.kinemes.col(label));
            sums.push_back(segment_sum(d, cfg.segment_samples));
        }
        out.push_back(chunk_statistics(sums, series.video_id, chunk.chunk_index));
    }
    return out;
}

std::uint64_t Normaliser::fingerprint() const {
    std::uint64_t h = fnv1a64(mean.data(), sizeof(double) * static_cast<std::size_t>(mean.size()));
    return fnv1a64(stddev.data(), sizeof(double) * static_cast<std::size_t>(stddev.size()), h);
}

Normaliser fit_normaliser(const Eigen::MatrixXd& train_rows) {
    if (train_rows.rows() == 0) throw ContractError("fit_normaliser: no training rows");
    const Eigen::Index n = train_rows.rows();
    Normaliser out;
    out.mean = train_rows.colwise().mean();
    out.stddev.resize(train_rows.cols());
    for (Eigen::Index c = 0; c < train_rows.cols(); ++c) {
        double ss = (train_rows.col(c).array() - out.mean(c)).square().sum();
        const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        out.stddev(c) = sd < 1e-12 ? 0.0 : sd;
    }
    return out;
}

Eigen::MatrixXd apply_normaliser(const Normaliser& n, const Eigen::MatrixXd& rows) {
    if (rows.cols() != n.mean.size()) {
        throw ContractError("apply_normaliser: column count mismatch");
    }
    Eigen::MatrixXd out = rows;
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
        out.col(c).array() -= n.mean(c);
        if (n.stddev(c) > 0.0) out.col(c).array() /= n.stddev(c);
    }
    return out;
}

Eigen::MatrixXd FeatureTable::matrix() const {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), 24);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (int c = 0; c < 24; ++c) {
            m(static_cast<Eigen::Index>(i), c) = rows[i].features.values[static_cast<std::size_t>(c)];
        }
    }
    return m;
}

void write_feature_csv(const std::string& path, const FeatureTable& table) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot open for writing: " + path);
    f << "video_id,chunk_index";
    for (const auto& name : feature_names()) f << ',' << name;
    f << ",label,severity\n";
    for (const auto& row : table.rows) {
        f << row.features.video_id << ',' << row.features.chunk_index;
        for (double v : row.features.values) f << ',' << format_double(v);
        f << ',' << to_string(row.label) << ',' << format_double(row.severity) << '\n';
    }
    if (!f) throw DataError("write failed: " + path);
}

FeatureTable read_feature_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open feature CSV: " + path);
    std::string line;
    if (!std::getline(f, line)) throw DataError("empty feature CSV: " + path);

    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
            header.push_back(cell);
        }
    }
    std::vector<std::string> expected = {"video_id", "chunk_index"};
    for (const auto& n : feature_names()) expected.push_back(n);
    expected.push_back("label");
    expected.push_back("severity");
    if (header != expected) throw DataError("unexpected feature CSV header in " + path);

    FeatureTable table;
    int row_no = 1;
    while (std::getline(f, line)) {
        ++row_no;
        if (line.empty() || line == "\r") continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) {
            while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
            cells.push_back(cell);
        }
        if (cells.size() != expected.size()) {
            throw DataError("bad field count at " + path + ":" + std::to_string(row_no));
        }
        FeatureRow row;
        row.features.video_id = cells[0];
        row.features.chunk_index = std::stoi(cells[1]);
        for (int c = 0; c < 24; ++c) {
            const std::string& s = cells[static_cast<std::size_t>(2 + c)];
            double v = 0.0;
            auto res = std::from_chars(s.data(), s.data() + s.size(), v);
            if (res.ec != std::errc()) {
                throw DataError("bad feature value at " + path + ":" + std::to_string(row_no));
            }
            row.features.values[static_cast<std::size_t>(c)] = v;
        }
        row.label = label_from_string(cells[26]);
        double sev = 0.0;
        const std::string& s = cells[27];
        auto res = std::from_chars(s.data(), s.data() + s.size(), sev);
        if (res.ec != std::errc()) {
            throw DataError("bad severity at " + path + ":" + std::to_string(row_no));
        }
        row.severity = sev;
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace kineme
