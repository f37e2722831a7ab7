#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "kineme/common.hpp"

namespace kineme {

// Non-negative basis learned by minimising ||H - BC||_F^2 with multiplicative
// updates. Columns of the basis are scaled to unit L2 norm after fitting (the
// compensating scale moves into the coefficient rows), which pins down the
// factorisation scale so codebooks are comparable across runs.
struct NmfModel {
    Eigen::MatrixXd basis;  // m x q, columns unit L2 norm, entries >= 0
    int rank = 0;
    std::vector<double> objective_trace;  // ||H - BC||_F^2 after each update sweep
    std::uint64_t seed = 0;
};

struct NmfFit {
    NmfModel model;
    Eigen::MatrixXd coefficients;  // q x n
};

inline constexpr double kNmfDefaultTol = 1e-6;
inline constexpr int kNmfDefaultMaxIter = 500;
inline constexpr double kNmfEpsilon = 1e-12;  // division guard in update rules

// Fit by alternating multiplicative updates (Frobenius loss). Both factors
// start from seeded uniform draws in (0.1, 1.1); every update keeps the
// iterates non-negative and never increases the objective. Stops when the
// relative objective improvement drops below `tol` or after `max_iter`
// sweeps.
NmfFit fit_nmf(const Eigen::MatrixXd& data, int rank, std::uint64_t seed,
               double tol = kNmfDefaultTol, int max_iter = kNmfDefaultMaxIter);

struct Projection {
    Eigen::VectorXd coefficients;  // length q, >= 0
    double residual_norm = 0.0;    // ||h - B c||_2
};

inline constexpr double kProjectionTol = 1e-8;
inline constexpr int kProjectionMaxIter = 300;

// Non-negative least squares against a frozen basis: multiplicative updates
// on the coefficient vector only, from a uniform positive start.
Projection project_segment(const Eigen::MatrixXd& basis, const Eigen::VectorXd& segment,
                           double tol = kProjectionTol, int max_iter = kProjectionMaxIter);

}  // namespace kineme
