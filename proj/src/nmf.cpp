#include "kineme/nmf.hpp"

#include <cmath>
#include <limits>

namespace kineme {

NmfFit fit_nmf(const Eigen::MatrixXd& data, int rank, std::uint64_t seed, double tol,
               int max_iter) {
    const Eigen::Index m = data.rows();
    const Eigen::Index n = data.cols();
    if (m == 0 || n == 0) throw ContractError("fit_nmf: empty matrix");
    if (data.minCoeff() < 0.0) throw ContractError("fit_nmf: input must be non-negative");
    if (rank < 1) throw ConfigError("fit_nmf: rank must be >= 1");
    if (rank > std::min(m, n)) {
        throw ConfigError("fit_nmf: rank " + std::to_string(rank) + " exceeds min(m, n) = " +
                          std::to_string(std::min(m, n)));
    }
    if (max_iter < 1) throw ConfigError("fit_nmf: max_iter must be >= 1");

    Rng rng(seed);
    Eigen::MatrixXd basis(m, rank);
    Eigen::MatrixXd coeff(rank, n);
    for (Eigen::Index j = 0; j < rank; ++j) {
        for (Eigen::Index i = 0; i < m; ++i) basis(i, j) = rng.uniform(0.1, 1.1);
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < rank; ++i) coeff(i, j) = rng.uniform(0.1, 1.1);
    }

    NmfFit fit;
    fit.model.rank = rank;
    fit.model.seed = seed;
    auto& trace = fit.model.objective_trace;
    trace.reserve(static_cast<std::size_t>(std::min(max_iter, 1024)));

    for (int it = 0; it < max_iter; ++it) {
        // C <- C .* (B'H) ./ (B'B C + eps)
        const Eigen::MatrixXd bt_h = basis.transpose() * data;
        const Eigen::MatrixXd gram_b = basis.transpose() * basis;
        coeff.array() *= bt_h.array() / ((gram_b * coeff).array() + kNmfEpsilon);
        // B <- B .* (H C') ./ (B C C' + eps)
        const Eigen::MatrixXd h_ct = data * coeff.transpose();
        const Eigen::MatrixXd gram_c = coeff * coeff.transpose();
        basis.array() *= h_ct.array() / ((basis * gram_c).array() + kNmfEpsilon);

        const double objective = (data - basis * coeff).squaredNorm();
        trace.push_back(objective);
        if (trace.size() >= 2) {
            const double prev = trace[trace.size() - 2];
            if (prev - objective <= tol * std::max(prev, kNmfEpsilon)) break;
        }
    }

    // Unit-norm basis columns; the scale moves into the coefficient rows.
    for (Eigen::Index j = 0; j < rank; ++j) {
        const double norm = basis.col(j).norm();
        if (norm > 0.0) {
            basis.col(j) /= norm;
            coeff.row(j) *= norm;
        }
    }
    fit.model.basis = std::move(basis);
    fit.coefficients = std::move(coeff);
    return fit;
}

namespace {

double nnls_objective(const Eigen::MatrixXd& gram, const Eigen::VectorXd& bt_h, double h_sq,
                      const Eigen::VectorXd& c) {
    return std::max(0.0, h_sq - 2.0 * c.dot(bt_h) + c.dot(gram * c));
}

// Active-set refinement of an approximate NNLS solution: solve the
// unconstrained least squares on the current support, drop coordinates that
// come back negative, and admit coordinates whose gradient is still positive,
// until the KKT conditions hold. Multiplicative updates converge too slowly
// near zero-bound optima to meet the projection accuracy contract on their
// own; this finisher closes that gap and never returns a worse objective
// than its starting point.
Eigen::VectorXd refine_active_set(const Eigen::MatrixXd& gram, const Eigen::VectorXd& bt_h,
                                  const Eigen::VectorXd& start) {
    const Eigen::Index q = gram.rows();
    const double scale = std::max(1.0, bt_h.cwiseAbs().maxCoeff());
    const double support_tol = 1e-8 * std::max(1.0, start.maxCoeff());
    const double kkt_tol = 1e-10 * scale;

    std::vector<bool> active(static_cast<std::size_t>(q), false);
    for (Eigen::Index j = 0; j < q; ++j) active[static_cast<std::size_t>(j)] = start(j) > support_tol;

    Eigen::VectorXd c = Eigen::VectorXd::Zero(q);
    const int iter_cap = static_cast<int>(3 * q + 8);
    for (int it = 0; it < iter_cap; ++it) {
        std::vector<Eigen::Index> support;
        for (Eigen::Index j = 0; j < q; ++j) {
            if (active[static_cast<std::size_t>(j)]) support.push_back(j);
        }
        c.setZero();
        if (!support.empty()) {
            const Eigen::Index s = static_cast<Eigen::Index>(support.size());
            Eigen::MatrixXd gs(s, s);
            Eigen::VectorXd bs(s);
            for (Eigen::Index a = 0; a < s; ++a) {
                bs(a) = bt_h(support[static_cast<std::size_t>(a)]);
                for (Eigen::Index b = 0; b < s; ++b) {
                    gs(a, b) = gram(support[static_cast<std::size_t>(a)],
                                    support[static_cast<std::size_t>(b)]);
                }
            }
            const Eigen::VectorXd cs = gs.ldlt().solve(bs);
            Eigen::Index worst = -1;
            double worst_val = -1e-12 * scale;
            for (Eigen::Index a = 0; a < s; ++a) {
                if (cs(a) < worst_val) {
                    worst_val = cs(a);
                    worst = support[static_cast<std::size_t>(a)];
                }
            }
            if (worst >= 0) {
                active[static_cast<std::size_t>(worst)] = false;
                continue;
            }
            for (Eigen::Index a = 0; a < s; ++a) {
                c(support[static_cast<std::size_t>(a)]) = std::max(0.0, cs(a));
            }
        }
        // KKT: every excluded coordinate must have a non-positive gradient
        const Eigen::VectorXd w = bt_h - gram * c;
        Eigen::Index add = -1;
        double best = kkt_tol;
        for (Eigen::Index j = 0; j < q; ++j) {
            if (!active[static_cast<std::size_t>(j)] && w(j) > best) {
                best = w(j);
                add = j;
            }
        }
        if (add < 0) break;
        active[static_cast<std::size_t>(add)] = true;
    }
    return c;
}

}  // namespace

Projection project_segment(const Eigen::MatrixXd& basis, const Eigen::VectorXd& segment,
                           double tol, int max_iter) {
    if (basis.rows() != segment.size()) {
        throw ContractError("project_segment: basis rows " + std::to_string(basis.rows()) +
                            " != segment length " + std::to_string(segment.size()));
    }
    if (segment.size() > 0 && segment.minCoeff() < 0.0) {
        throw ContractError("project_segment: segment must be non-negative");
    }
    const Eigen::Index q = basis.cols();
    const Eigen::VectorXd bt_h = basis.transpose() * segment;
    const Eigen::MatrixXd gram = basis.transpose() * basis;
    const double h_sq = segment.squaredNorm();

    Eigen::VectorXd c = Eigen::VectorXd::Constant(q, 1.0);
    // objective ||h - Bc||^2 = h'h - 2 c'(B'h) + c'G c, tracked cheaply
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd gc = gram * c;
        c.array() *= bt_h.array() / (gc.array() + kNmfEpsilon);
        const double objective = nnls_objective(gram, bt_h, h_sq, c);
        if (std::isfinite(prev) && prev - objective <= tol * std::max(prev, kNmfEpsilon)) {
            prev = objective;
            break;
        }
        prev = objective;
    }

    const Eigen::VectorXd refined = refine_active_set(gram, bt_h, c);
    if (nnls_objective(gram, bt_h, h_sq, refined) <= nnls_objective(gram, bt_h, h_sq, c)) {
        c = refined;
    }

    Projection out;
    out.residual_norm = (segment - basis * c).norm();
    out.coefficients = std::move(c);
    return out;
}

}  // namespace kineme
