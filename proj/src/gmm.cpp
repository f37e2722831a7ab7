#include "kineme/gmm.hpp"

#include <cmath>
#include <limits>

namespace kineme {

namespace {

constexpr double kLogTwoPi = 1.8378770664093453;

// Per-component log densities (k) for one point, including log weight.
void component_log_scores(const GmmModel& model, const Eigen::VectorXd& x,
                          Eigen::VectorXd& scores) {
    const Eigen::Index q = model.means.rows();
    const Eigen::Index k = model.means.cols();
    scores.resize(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        double s = model.weights(j) > 0.0 ? std::log(model.weights(j))
                                          : -std::numeric_limits<double>::infinity();
        for (Eigen::Index d = 0; d < q; ++d) {
            const double v = model.variances(d, j);
            const double diff = x(d) - model.means(d, j);
            s += -0.5 * (kLogTwoPi + std::log(v)) - diff * diff / (2.0 * v);
        }
        scores(j) = s;
    }
}

double log_sum_exp(const Eigen::VectorXd& v) {
    const double mx = v.maxCoeff();
    if (!std::isfinite(mx)) return mx;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) acc += std::exp(v(i) - mx);
    return mx + std::log(acc);
}

// k-means++ seeding plus a fixed number of Lloyd refinement steps.
Eigen::MatrixXd kmeans_init(const Eigen::MatrixXd& data, int k, Rng& rng,
                            std::vector<int>& assignment) {
    const Eigen::Index q = data.rows();
    const Eigen::Index n = data.cols();
    Eigen::MatrixXd centers(q, k);

    centers.col(0) = data.col(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
    Eigen::VectorXd dist2 =
        (data.colwise() - centers.col(0)).colwise().squaredNorm().transpose();
    for (int j = 1; j < k; ++j) {
        const double total = dist2.sum();
        Eigen::Index pick = 0;
        if (total > 0.0) {
            double target = rng.uniform() * total;
            for (Eigen::Index i = 0; i < n; ++i) {
                target -= dist2(i);
                if (target <= 0.0) {
                    pick = i;
                    break;
                }
                pick = i;
            }
        } else {
            pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
        }
        centers.col(j) = data.col(pick);
        dist2 = dist2.cwiseMin((data.colwise() - centers.col(j)).colwise().squaredNorm().transpose());
    }

    assignment.assign(static_cast<std::size_t>(n), 0);
    for (int step = 0; step < 10; ++step) {
        // assign
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = (data.col(i) - centers.col(0)).squaredNorm();
            for (int j = 1; j < k; ++j) {
                const double d = (data.col(i) - centers.col(j)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = j;
                }
            }
            assignment[static_cast<std::size_t>(i)] = best;
        }
        // update
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(q, k);
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int j = assignment[static_cast<std::size_t>(i)];
            sums.col(j) += data.col(i);
            ++counts[static_cast<std::size_t>(j)];
        }
        for (int j = 0; j < k; ++j) {
            if (counts[static_cast<std::size_t>(j)] > 0) {
                centers.col(j) = sums.col(j) / counts[static_cast<std::size_t>(j)];
            } else {
                // move an empty center onto the point farthest from its center
                Eigen::Index far = 0;
                double far_d = -1.0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    const int a = assignment[static_cast<std::size_t>(i)];
                    const double d = (data.col(i) - centers.col(a)).squaredNorm();
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                centers.col(j) = data.col(far);
            }
        }
    }
    // final assignment for covariance/weight seeding
    for (Eigen::Index i = 0; i < n; ++i) {
        int best = 0;
        double best_d = (data.col(i) - centers.col(0)).squaredNorm();
        for (int j = 1; j < k; ++j) {
            const double d = (data.col(i) - centers.col(j)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        assignment[static_cast<std::size_t>(i)] = best;
    }
    return centers;
}

}  // namespace

GmmModel fit_gmm(const Eigen::MatrixXd& coefficients, int k, std::uint64_t seed, double tol,
                 int max_iter) {
    const Eigen::Index q = coefficients.rows();
    const Eigen::Index n = coefficients.cols();
    if (k < 1) throw ConfigError("fit_gmm: k must be >= 1");
    if (n < k) {
        throw ConfigError("fit_gmm: need at least k = " + std::to_string(k) + " samples, got " +
                          std::to_string(n));
    }

    GmmModel model;
    model.components = k;
    model.seed = seed;

    Rng rng(mix_seed(seed, 0x676d6d));
    std::vector<int> assignment;
    model.means = kmeans_init(coefficients, k, rng, assignment);

    const Eigen::VectorXd global_mean = coefficients.rowwise().mean();
    Eigen::VectorXd global_var(q);
    for (Eigen::Index d = 0; d < q; ++d) {
        global_var(d) = std::max(
            kGmmVarianceFloor,
            (coefficients.row(d).array() - global_mean(d)).square().mean());
    }

    model.variances.resize(q, k);
    model.weights.resize(k);
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int a : assignment) ++counts[static_cast<std::size_t>(a)];
    for (int j = 0; j < k; ++j) {
        Eigen::VectorXd var = Eigen::VectorXd::Zero(q);
        if (counts[static_cast<std::size_t>(j)] > 0) {
            for (Eigen::Index i = 0; i < n; ++i) {
                if (assignment[static_cast<std::size_t>(i)] == j) {
                    var += (coefficients.col(i) - model.means.col(j)).array().square().matrix();
                }
            }
            var /= counts[static_cast<std::size_t>(j)];
        }
        for (Eigen::Index d = 0; d < q; ++d) {
            model.variances(d, j) =
                var(d) > kGmmVarianceFloor ? var(d) : std::max(kGmmVarianceFloor, global_var(d));
        }
        model.weights(j) =
            std::max(1.0, static_cast<double>(counts[static_cast<std::size_t>(j)])) /
            static_cast<double>(n);
    }
    model.weights /= model.weights.sum();

    const Eigen::Index far_datum = [&]() {
        Eigen::Index far = 0;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double d = (coefficients.col(i) - global_mean).squaredNorm();
            if (d > far_d) {
                far_d = d;
                far = i;
            }
        }
        return far;
    }();

    std::vector<int> reseeds(static_cast<std::size_t>(k), 0);
    Eigen::MatrixXd resp(n, k);
    Eigen::VectorXd scores(k);
    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter; ++it) {
        // E-step
        double total_ll = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            component_log_scores(model, coefficients.col(i), scores);
            const double lse = log_sum_exp(scores);
            total_ll += lse;
            for (int j = 0; j < k; ++j) resp(i, j) = std::exp(scores(j) - lse);
        }
        model.loglik_trace.push_back(total_ll);
        if (it > 0 && total_ll - prev_ll <= tol * std::max(std::abs(prev_ll), 1.0)) break;
        prev_ll = total_ll;

        // M-step
        for (int j = 0; j < k; ++j) {
            const double nj = resp.col(j).sum();
            double weight = nj / static_cast<double>(n);
            if (weight < kGmmCollapseWeight) {
                if (reseeds[static_cast<std::size_t>(j)] < kGmmReseedAttempts) {
                    ++reseeds[static_cast<std::size_t>(j)];
                    model.means.col(j) = coefficients.col(far_datum);
                    model.variances.col(j) = global_var;
                    model.weights(j) = 1.0 / static_cast<double>(n);
                    continue;
                }
                model.degenerate = true;
            }
            model.weights(j) = weight;
            if (nj > 0.0) {
                model.means.col(j) = (coefficients * resp.col(j)) / nj;
                for (Eigen::Index d = 0; d < q; ++d) {
                    const double v =
                        (coefficients.row(d).transpose().array() - model.means(d, j))
                            .square()
                            .matrix()
                            .dot(resp.col(j)) /
                        nj;
                    model.variances(d, j) = std::max(kGmmVarianceFloor, v);
                }
            }
        }
        model.weights /= model.weights.sum();
    }

    // Keep cluster centers in the non-negative coefficient space, then
    // re-score once so final_loglik matches the stored parameters.
    if (model.means.minCoeff() < 0.0) {
        model.means = model.means.cwiseMax(0.0);
        model.means_clamped = true;
    }
    model.final_loglik = log_likelihood(model, coefficients);
    return model;
}

int assign_component(const GmmModel& model, const Eigen::VectorXd& x) {
    Eigen::VectorXd scores;
    component_log_scores(model, x, scores);
    int best = 0;
    for (int j = 1; j < model.components; ++j) {
        if (scores(j) > scores(best)) best = j;
    }
    return best;
}

Eigen::VectorXd responsibilities(const GmmModel& model, const Eigen::VectorXd& x) {
    Eigen::VectorXd scores;
    component_log_scores(model, x, scores);
    const double lse = log_sum_exp(scores);
    Eigen::VectorXd r(model.components);
    for (int j = 0; j < model.components; ++j) r(j) = std::exp(scores(j) - lse);
    return r;
}

double log_likelihood(const GmmModel& model, const Eigen::MatrixXd& data) {
    Eigen::VectorXd scores;
    double total = 0.0;
    for (Eigen::Index i = 0; i < data.cols(); ++i) {
        component_log_scores(model, data.col(i), scores);
        total += log_sum_exp(scores);
    }
    return total;
}

}  // namespace kineme
