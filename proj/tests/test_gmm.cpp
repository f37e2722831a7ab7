#include <doctest.h>

#include <cmath>

#include "kineme/gmm.hpp"

using namespace kineme;

TEST_SUITE_BEGIN("gmm");

namespace {

// two spherical clouds in the positive quadrant, 10 sigma apart
Eigen::MatrixXd two_clouds(int per_cluster, double sigma, Rng& rng, std::vector<int>& truth) {
    Eigen::MatrixXd data(2, 2 * per_cluster);
    truth.resize(static_cast<std::size_t>(2 * per_cluster));
    const double cx[2] = {3.0, 13.0};
    for (int i = 0; i < 2 * per_cluster; ++i) {
        const int cls = i < per_cluster ? 0 : 1;
        truth[static_cast<std::size_t>(i)] = cls;
        data(0, i) = cx[cls] + sigma * rng.normal();
        data(1, i) = 3.0 + sigma * rng.normal();
    }
    return data;
}

// direct (non-log) density, independent of the implementation path
double direct_posterior_score(const GmmModel& m, const Eigen::VectorXd& x, int j) {
    double dens = m.weights(j);
    for (Eigen::Index d = 0; d < x.size(); ++d) {
        const double v = m.variances(d, j);
        const double diff = x(d) - m.means(d, j);
        dens *= std::exp(-diff * diff / (2.0 * v)) / std::sqrt(2.0 * M_PI * v);
    }
    return dens;
}

}  // namespace

TEST_CASE("well-separated clusters are recovered almost exactly") {
    Rng rng(61);
    std::vector<int> truth;
    const Eigen::MatrixXd data = two_clouds(250, 1.0, rng, truth);
    const GmmModel model = fit_gmm(data, 2, 77);

    // match components to true centers
    const int j0 = model.means(0, 0) < model.means(0, 1) ? 0 : 1;
    const int j1 = 1 - j0;
    CHECK((model.means.col(j0) - Eigen::Vector2d(3.0, 3.0)).norm() < 0.1);
    CHECK((model.means.col(j1) - Eigen::Vector2d(13.0, 3.0)).norm() < 0.1);

    int correct = 0;
    for (Eigen::Index i = 0; i < data.cols(); ++i) {
        const int got = assign_component(model, data.col(i)) == j0 ? 0 : 1;
        correct += got == truth[static_cast<std::size_t>(i)] ? 1 : 0;
    }
    CHECK(static_cast<double>(correct) / static_cast<double>(data.cols()) >= 0.999);

    const auto& trace = model.loglik_trace;
    REQUIRE(trace.size() >= 2);
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] >= trace[i - 1] - 1e-7);
}

TEST_CASE("n == k distinct points pin one mean per point, guarded by the floor") {
    Eigen::MatrixXd data(2, 3);
    data << 0.0, 5.0, 9.0, 1.0, 4.0, 8.0;
    const GmmModel model = fit_gmm(data, 3, 5);
    CHECK(std::isfinite(model.loglik_trace.back()));
    CHECK(model.variances.minCoeff() >= kGmmVarianceFloor);
    for (Eigen::Index i = 0; i < 3; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j < 3; ++j) {
            best = std::min(best, (model.means.col(j) - data.col(i)).norm());
        }
        CHECK(best < 1e-6);
    }
}

TEST_CASE("identical data, k and seed give identical means") {
    Rng rng(71);
    std::vector<int> truth;
    const Eigen::MatrixXd data = two_clouds(40, 1.0, rng, truth);
    const GmmModel a = fit_gmm(data, 2, 7);
    const GmmModel b = fit_gmm(data, 2, 7);
    CHECK(a.means == b.means);
    CHECK(a.weights == b.weights);
    CHECK(a.loglik_trace == b.loglik_trace);
}

TEST_CASE("responsibilities lie on the simplex") {
    Rng rng(73);
    std::vector<int> truth;
    const Eigen::MatrixXd data = two_clouds(50, 1.5, rng, truth);
    const GmmModel model = fit_gmm(data, 3, 11);
    for (int i = 0; i < 20; ++i) {
        Eigen::VectorXd x(2);
        x << rng.uniform(0.0, 16.0), rng.uniform(0.0, 6.0);
        const Eigen::VectorXd r = responsibilities(model, x);
        CHECK(r.minCoeff() >= 0.0);
        CHECK(r.sum() == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("assignment maximises the posterior against a direct density oracle") {
    Rng rng(79);
    GmmModel model;
    model.components = 3;
    model.seed = 0;
    model.means.resize(2, 3);
    model.means << 1.0, 4.0, 2.5, 1.0, 2.0, 5.0;
    model.variances.resize(2, 3);
    model.variances << 0.5, 2.0, 1.0, 1.5, 0.7, 0.3;
    model.weights.resize(3);
    model.weights << 0.2, 0.5, 0.3;
    for (int i = 0; i < 500; ++i) {
        Eigen::VectorXd x(2);
        x << rng.uniform(-2.0, 7.0), rng.uniform(-2.0, 8.0);
        int oracle = 0;
        double best = -1.0;
        for (int j = 0; j < 3; ++j) {
            const double s = direct_posterior_score(model, x, j);
            if (s > best) {
                best = s;
                oracle = j;
            }
        }
        CHECK(assign_component(model, x) == oracle);
    }
}

TEST_CASE("a point at a component mean with uniform weights picks that component") {
    GmmModel model;
    model.components = 4;
    model.means.resize(2, 4);
    model.means << 0.0, 3.0, 6.0, 9.0, 0.0, 3.0, 6.0, 9.0;
    model.variances = Eigen::MatrixXd::Constant(2, 4, 1.0);
    model.weights = Eigen::VectorXd::Constant(4, 0.25);
    for (int j = 0; j < 4; ++j) {
        CHECK(assign_component(model, model.means.col(j)) == j);
    }
}

TEST_CASE("exact ties break to the lowest index") {
    GmmModel model;
    model.components = 2;
    model.means.resize(1, 2);
    model.means << 2.0, 2.0;  // identical components
    model.variances = Eigen::MatrixXd::Constant(1, 2, 1.0);
    model.weights = Eigen::VectorXd::Constant(2, 0.5);
    Eigen::VectorXd x(1);
    x << 5.0;
    CHECK(assign_component(model, x) == 0);
}

TEST_CASE("assignment is invariant under common positive weight rescaling") {
    Rng rng(83);
    GmmModel model;
    model.components = 3;
    model.means.resize(2, 3);
    model.means << 0.0, 2.0, 4.0, 1.0, 3.0, 0.5;
    model.variances = Eigen::MatrixXd::Constant(2, 3, 0.8);
    model.weights.resize(3);
    model.weights << 0.1, 0.6, 0.3;
    GmmModel scaled = model;
    scaled.weights *= 37.5;  // deliberately unnormalised
    for (int i = 0; i < 200; ++i) {
        Eigen::VectorXd x(2);
        x << rng.uniform(-1.0, 5.0), rng.uniform(-1.0, 4.0);
        CHECK(assign_component(model, x) == assign_component(scaled, x));
    }
}

TEST_CASE("config errors") {
    const Eigen::MatrixXd small = Eigen::MatrixXd::Random(2, 3).cwiseAbs();
    CHECK_THROWS_AS(fit_gmm(small, 4, 1), ConfigError);
    CHECK_THROWS_AS(fit_gmm(small, 0, 1), ConfigError);
}

TEST_SUITE_END();
