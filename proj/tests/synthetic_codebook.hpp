#pragma once

#include <cmath>

#include "kineme/codebook.hpp"

// Hand-constructed codebook whose kinemes are 25-sample periodic trajectories
// (each 50-sample axis block repeats a 25-sample pattern). A series that tiles
// one such kineme therefore matches it bit-exactly at *every* hop offset,
// which makes label recovery and the zero-reconstruction-error path testable
// without any fitting.
inline kineme::Codebook make_periodic_codebook(int k, double amplitude = 10.0) {
    using namespace kineme;
    const int l = 50;
    const int m = 3 * l;

    // One integer frequency per kineme: the oscillating parts are mutually
    // orthogonal over the 25-sample period, so each kineme has a unique
    // non-negative representation in the basis built from them.
    Eigen::MatrixXd kinemes(m, k);
    for (int j = 0; j < k; ++j) {
        const double cycles = 1.0 + j;
        for (int axis = 0; axis < 3; ++axis) {
            for (int t = 0; t < l; ++t) {
                const double phase = 2.0 * M_PI * cycles * (t % 25) / 25.0;
                kinemes(axis * l + t, j) = 180.0 + amplitude * std::sin(phase + 0.7 * axis);
            }
        }
    }

    Codebook cb;
    cb.nmf.rank = k;
    cb.nmf.basis.resize(m, k);
    cb.gmm.components = k;
    cb.gmm.means = Eigen::MatrixXd::Zero(k, k);
    cb.gmm.variances = Eigen::MatrixXd::Constant(k, k, 1.0);
    cb.gmm.weights = Eigen::VectorXd::Constant(k, 1.0 / k);
    for (int j = 0; j < k; ++j) {
        const double norm = kinemes.col(j).norm();
        cb.nmf.basis.col(j) = kinemes.col(j) / norm;
        cb.gmm.means(j, j) = norm;
    }
    cb.kinemes = cb.nmf.basis * cb.gmm.means;
    cb.fingerprint.segment_samples = l;
    cb.fingerprint.hop_samples = 25;
    cb.fingerprint.sample_rate_hz = 10.0;
    cb.fingerprint.offset_degrees = 180.0;
    cb.fingerprint.canonical_samples = 3000;
    cb.fingerprint.nmf_rank = k;
    cb.fingerprint.gmm_components = k;
    cb.source_tag = "synthetic-periodic";
    return cb;
}

// Canonical series tiling one kineme of a periodic codebook, bit-exact on the
// hop grid.
inline kineme::AngleSeries tile_kineme(const kineme::Codebook& cb, int label,
                                       const std::string& id) {
    using namespace kineme;
    AngleSeries s;
    s.video_id = id;
    s.sample_rate_hz = cb.fingerprint.sample_rate_hz;
    const int n = cb.fingerprint.canonical_samples;
    const int l = cb.fingerprint.segment_samples;
    s.samples.resize(n, 3);
    for (int t = 0; t < n; ++t) {
        for (int axis = 0; axis < 3; ++axis) {
            s.samples(t, axis) = cb.kinemes(axis * l + (t % 25), label);
        }
    }
    return s;
}
