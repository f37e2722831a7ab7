#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "kineme/common.hpp"

namespace kineme {

// Diagonal-covariance Gaussian mixture over NMF coefficient columns.
// Means live in the non-negative coefficient space; any negative entries
// left by EM are clamped to zero after fitting and the model re-scored.
struct GmmModel {
    int components = 0;          // k
    Eigen::MatrixXd means;       // q x k
    Eigen::MatrixXd variances;   // q x k, per-dimension diagonal entries
    Eigen::VectorXd weights;     // k, simplex
    std::vector<double> loglik_trace;  // total log-likelihood per EM iteration
    double final_loglik = 0.0;   // re-score after the post-fit mean clamp
    std::uint64_t seed = 0;
    bool means_clamped = false;  // a negative mean entry was clamped post-fit
    bool degenerate = false;     // a component stayed collapsed after re-seeding
};

inline constexpr double kGmmDefaultTol = 1e-6;
inline constexpr int kGmmDefaultMaxIter = 300;
inline constexpr double kGmmVarianceFloor = 1e-6;
inline constexpr double kGmmCollapseWeight = 1e-8;
inline constexpr int kGmmReseedAttempts = 3;

// EM fit. Means start from k-means++ seeding followed by 10 Lloyd steps;
// every step with a given seed is deterministic. Collapsed components
// (weight below kGmmCollapseWeight) are re-seeded from the datum farthest
// from the sample mean, at most kGmmReseedAttempts times each, after which
// the model is flagged degenerate.
GmmModel fit_gmm(const Eigen::MatrixXd& coefficients, int k, std::uint64_t seed,
                 double tol = kGmmDefaultTol, int max_iter = kGmmDefaultMaxIter);

// Maximum-posterior component for one coefficient vector: argmax over j of
// weight_j * N(x; mean_j, var_j). Ties break to the lowest index. 0-based.
int assign_component(const GmmModel& model, const Eigen::VectorXd& x);

// Posterior responsibilities for one point (sums to 1).
Eigen::VectorXd responsibilities(const GmmModel& model, const Eigen::VectorXd& x);

// Total log-likelihood of a column-per-sample matrix under the model.
double log_likelihood(const GmmModel& model, const Eigen::MatrixXd& data);

}  // namespace kineme
