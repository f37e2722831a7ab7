#include <doctest.h>

#include <cmath>

#include "kineme/nmf.hpp"

using namespace kineme;

TEST_SUITE_BEGIN("nmf");

namespace {

Eigen::MatrixXd random_nonneg(Eigen::Index rows, Eigen::Index cols, Rng& rng, double lo = 0.0,
                              double hi = 1.0) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(lo, hi);
    }
    return m;
}

double objective(const Eigen::MatrixXd& basis, const Eigen::VectorXd& c,
                 const Eigen::VectorXd& h) {
    return (h - basis * c).squaredNorm();
}

}  // namespace

TEST_CASE("an exactly rank-1 matrix factorises to near-zero residual") {
    Rng rng(31);
    const Eigen::MatrixXd b = random_nonneg(8, 1, rng, 0.2, 1.2);
    const Eigen::MatrixXd c = random_nonneg(1, 12, rng, 0.2, 1.2);
    const Eigen::MatrixXd H = b * c;
    const NmfFit fit = fit_nmf(H, 1, 99, 1e-12, 2000);
    CHECK(fit.model.objective_trace.back() < 1e-6 * H.squaredNorm());
    CHECK((H - fit.model.basis * fit.coefficients).squaredNorm() < 1e-6 * H.squaredNorm());
}

TEST_CASE("the zero matrix fits immediately with zero coefficients") {
    const Eigen::MatrixXd H = Eigen::MatrixXd::Zero(5, 7);
    const NmfFit fit = fit_nmf(H, 2, 1);
    REQUIRE(!fit.model.objective_trace.empty());
    CHECK(fit.model.objective_trace.front() == 0.0);
    CHECK(fit.coefficients.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("identical inputs and seed give a bitwise-identical basis") {
    Rng rng(7);
    const Eigen::MatrixXd H = random_nonneg(12, 20, rng);
    const NmfFit a = fit_nmf(H, 3, 123);
    const NmfFit b = fit_nmf(H, 3, 123);
    CHECK(a.model.basis == b.model.basis);
    CHECK(a.coefficients == b.coefficients);
    const NmfFit c = fit_nmf(H, 3, 124);
    CHECK(a.model.basis != c.model.basis);
}

TEST_CASE("objective trace never increases and iterates stay non-negative") {
    Rng rng(17);
    for (int rep = 0; rep < 5; ++rep) {
        const Eigen::MatrixXd H = random_nonneg(20, 30, rng);
        const NmfFit fit = fit_nmf(H, 3, 1000 + static_cast<std::uint64_t>(rep), 0.0, 120);
        const auto& trace = fit.model.objective_trace;
        REQUIRE(trace.size() > 1);
        for (std::size_t i = 1; i < trace.size(); ++i) {
            CHECK(trace[i] <= trace[i - 1] + 1e-9);
        }
        CHECK(fit.model.basis.minCoeff() >= 0.0);
        CHECK(fit.coefficients.minCoeff() >= 0.0);
    }
}

TEST_CASE("basis columns come back with unit L2 norm") {
    Rng rng(23);
    const Eigen::MatrixXd H = random_nonneg(15, 25, rng, 0.1, 2.0);
    const NmfFit fit = fit_nmf(H, 4, 5);
    for (int j = 0; j < 4; ++j) {
        CHECK(fit.model.basis.col(j).norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("contract and config errors") {
    Eigen::MatrixXd H = Eigen::MatrixXd::Constant(4, 4, 1.0);
    H(1, 2) = -0.5;
    CHECK_THROWS_AS(fit_nmf(H, 2, 1), ContractError);
    const Eigen::MatrixXd ok = Eigen::MatrixXd::Constant(4, 6, 1.0);
    CHECK_THROWS_AS(fit_nmf(ok, 5, 1), ConfigError);
    CHECK_THROWS_AS(fit_nmf(ok, 0, 1), ConfigError);
}

TEST_CASE("projecting a basis column recovers that column") {
    Rng rng(41);
    Eigen::MatrixXd basis = random_nonneg(30, 4, rng, 0.05, 1.0);
    for (int j = 0; j < 4; ++j) basis.col(j) /= basis.col(j).norm();
    for (int j = 0; j < 4; ++j) {
        const Projection p = project_segment(basis, basis.col(j));
        CHECK(p.residual_norm < 1e-6);
        // dominant coefficient belongs to column j
        int arg = 0;
        p.coefficients.maxCoeff(&arg);
        CHECK(arg == j);
    }
}

TEST_CASE("projecting zero gives zero coefficients") {
    Rng rng(43);
    Eigen::MatrixXd basis = random_nonneg(10, 3, rng);
    const Projection p = project_segment(basis, Eigen::VectorXd::Zero(10));
    CHECK(p.coefficients.cwiseAbs().maxCoeff() == 0.0);
    CHECK(p.residual_norm == 0.0);
}

TEST_CASE("projection beats a 0.01-step grid oracle on small instances") {
    Rng rng(47);
    for (int rep = 0; rep < 20; ++rep) {
        Eigen::MatrixXd basis = random_nonneg(6, 2, rng, 0.05, 1.0);
        basis.col(0) /= basis.col(0).norm();
        basis.col(1) /= basis.col(1).norm();
        Eigen::VectorXd h(6);
        for (int i = 0; i < 6; ++i) h(i) = rng.uniform();

        const Projection p = project_segment(basis, h);
        const double ours = objective(basis, p.coefficients, h);

        // grid oracle over [0,3]^2
        const Eigen::Matrix2d gram = basis.transpose() * basis;
        const Eigen::Vector2d bth = basis.transpose() * h;
        const double hsq = h.squaredNorm();
        double grid_best = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= 300; ++i) {
            for (int j = 0; j <= 300; ++j) {
                const Eigen::Vector2d c(0.01 * i, 0.01 * j);
                const double f = hsq - 2.0 * c.dot(bth) + c.dot(gram * c);
                grid_best = std::min(grid_best, f);
            }
        }
        CHECK(ours <= grid_best + 1e-6);
    }
}

TEST_CASE("projection objective scales quadratically with the input") {
    Rng rng(53);
    Eigen::MatrixXd basis = random_nonneg(12, 3, rng, 0.05, 1.0);
    for (int j = 0; j < 3; ++j) basis.col(j) /= basis.col(j).norm();
    Eigen::VectorXd h(12);
    for (int i = 0; i < 12; ++i) h(i) = rng.uniform(0.0, 2.0);
    for (double alpha : {0.5, 2.0, 7.0}) {
        const Projection base = project_segment(basis, h);
        const Projection scaled = project_segment(basis, (alpha * h).eval());
        const double f_base = objective(basis, base.coefficients, h);
        const double f_scaled = objective(basis, scaled.coefficients, (alpha * h).eval());
        CHECK(f_scaled == doctest::Approx(alpha * alpha * f_base).epsilon(1e-6));
    }
}

TEST_CASE("dimension mismatch is a contract violation") {
    Eigen::MatrixXd basis = Eigen::MatrixXd::Constant(5, 2, 0.5);
    CHECK_THROWS_AS(project_segment(basis, Eigen::VectorXd::Ones(6)), ContractError);
}

TEST_SUITE_END();
