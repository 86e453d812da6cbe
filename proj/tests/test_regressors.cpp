#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "noro/regressors.hpp"
#include "noro/rng.hpp"

using namespace noro;

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, Rng& rng) {
    Eigen::MatrixXd x(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) x(i, j) = rng.gaussian();
    return x;
}

}  // namespace

TEST_CASE("ridge recovers exact linear data with lambda 0") {
    Eigen::MatrixXd x(5, 1);
    x << 0, 1, 2, 3, 4;
    const Eigen::VectorXd y = 2.0 * x.col(0).array() + 1.0;
    const models::Ridge model(x, y, 0.0);
    CHECK(model.coefficients()(0) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(model.intercept() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK((model.predict(x) - y).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("ridge shrinks to the mean as lambda grows") {
    Rng rng(1);
    const auto x = random_matrix(50, 3, rng);
    Eigen::VectorXd y(50);
    for (int i = 0; i < 50; ++i) y(i) = x(i, 0) + rng.gaussian(0, 0.1);
    RegressorSpec spec;
    spec.kind = RegressorKind::kRidge;
    spec.hyper["lambda"] = 1e9;
    const auto model = fit(spec, x, y);
    CHECK((model->predict(x).array() - y.mean()).abs().maxCoeff() < 1e-5);
}

TEST_CASE("ridge rejects a singular system at lambda 0") {
    Eigen::MatrixXd x(4, 2);
    x << 1, 1, 2, 2, 3, 3, 4, 4;  // rank 1
    Eigen::VectorXd y(4);
    y << 1, 2, 3, 5;
    CHECK_THROWS_WITH_AS(models::Ridge(x, y, 0.0),
                         doctest::Contains("lambda"), std::runtime_error);
}

TEST_CASE("knn with k=1 recalls training targets") {
    Rng rng(2);
    const auto x = random_matrix(30, 4, rng);
    Eigen::VectorXd y(30);
    for (int i = 0; i < 30; ++i) y(i) = rng.gaussian();
    RegressorSpec spec;
    spec.kind = RegressorKind::kKnn;
    spec.hyper["k"] = 1;
    const auto model = fit(spec, x, y);
    CHECK((model->predict(x) - y).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gpr interpolates training points") {
    Rng rng(3);
    const auto x = random_matrix(20, 2, rng);
    Eigen::VectorXd y(20);
    for (int i = 0; i < 20; ++i) y(i) = std::sin(x(i, 0));
    RegressorSpec spec;
    spec.kind = RegressorKind::kGpr;
    spec.hyper["length_scale"] = 0.5;  // well-conditioned kernel
    const auto model = fit(spec, x, y);
    CHECK((model->predict(x) - y).cwiseAbs().maxCoeff() < 10 * 1e-6);
}

TEST_CASE("gpr validates jitter") {
    Eigen::MatrixXd x(3, 1);
    x << 1, 2, 3;
    Eigen::VectorXd y(3);
    y << 1, 2, 3;
    RegressorSpec spec;
    spec.kind = RegressorKind::kGpr;
    spec.hyper["jitter"] = 0.0;
    CHECK_THROWS_AS(fit(spec, x, y), std::runtime_error);
}

TEST_CASE("bagged trees with degenerate depth predict the mean") {
    Rng rng(4);
    const auto x = random_matrix(40, 3, rng);
    Eigen::VectorXd y(40);
    for (int i = 0; i < 40; ++i) y(i) = rng.gaussian();
    RegressorSpec spec;
    spec.kind = RegressorKind::kBaggedTrees;
    spec.hyper["max_depth"] = 0;  // every tree is a single leaf
    const auto model = fit(spec, x, y);
    const auto pred = model->predict(x);
    // each leaf is the mean of its bootstrap sample, close to mean(y)
    CHECK((pred.array() - pred(0)).abs().maxCoeff() < 1e-12);
    CHECK(pred(0) == doctest::Approx(y.mean()).epsilon(0.2));
}

TEST_CASE("neural regressor is deterministic per seed") {
    Rng rng(5);
    const auto x = random_matrix(80, 3, rng);
    Eigen::VectorXd y(80);
    for (int i = 0; i < 80; ++i) y(i) = x(i, 0) - 0.5 * x(i, 2);
    RegressorSpec spec;
    spec.kind = RegressorKind::kNeural;
    spec.hyper["max_iter"] = 50;
    const auto a = fit(spec, x, y)->predict(x);
    const auto b = fit(spec, x, y)->predict(x);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("every kind beats the constant-mean predictor on training data") {
    Rng rng(6);
    const auto x = random_matrix(120, 4, rng);
    Eigen::VectorXd y(120);
    for (int i = 0; i < 120; ++i)
        y(i) = x(i, 0) + 0.3 * x(i, 1) * x(i, 1) + 0.05 * rng.gaussian();
    const double baseline = std::sqrt((y.array() - y.mean()).square().mean());

    for (auto kind : {RegressorKind::kRidge, RegressorKind::kKnn,
                      RegressorKind::kNeural, RegressorKind::kBaggedTrees,
                      RegressorKind::kGpr}) {
        RegressorSpec spec;
        spec.kind = kind;
        const auto model = fit(spec, x, y);
        const double rmse =
            std::sqrt((model->predict(x) - y).array().square().mean());
        INFO("kind = ", to_string(kind));
        CHECK(rmse <= baseline);
    }
}

TEST_CASE("all kinds accept augmented-width inputs") {
    Rng rng(7);
    const auto x = random_matrix(60, 32, rng);
    Eigen::VectorXd y(60);
    for (int i = 0; i < 60; ++i) y(i) = x(i, 0);
    for (auto kind : {RegressorKind::kRidge, RegressorKind::kKnn,
                      RegressorKind::kNeural, RegressorKind::kBaggedTrees,
                      RegressorKind::kGpr}) {
        RegressorSpec spec;
        spec.kind = kind;
        spec.hyper["max_iter"] = 20;
        const auto model = fit(spec, x, y);
        CHECK(model->predict(x).allFinite());
        CHECK_THROWS_AS(model->predict(random_matrix(3, 5, rng)),
                        std::runtime_error);
    }
}

TEST_CASE("bagging reduces variance against its own member trees") {
    Rng rng(8);
    const auto x_train = random_matrix(200, 3, rng);
    const auto x_test = random_matrix(200, 3, rng);
    auto make_y = [&](const Eigen::MatrixXd& x, Rng& r) {
        Eigen::VectorXd y(x.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            y(i) = std::sin(2.0 * x(i, 0)) + 0.5 * r.gaussian();
        return y;
    };
    const auto y_train = make_y(x_train, rng);
    const auto y_test = make_y(x_test, rng);

    RegressorSpec spec;
    spec.kind = RegressorKind::kBaggedTrees;
    const models::BaggedTrees model(x_train, y_train, spec);
    const double ensemble_rmse =
        std::sqrt((model.predict(x_test) - y_test).array().square().mean());
    double mean_single = 0.0;
    for (const auto& tree : model.forest().trees) {
        Eigen::VectorXd pred(x_test.rows());
        for (Eigen::Index i = 0; i < x_test.rows(); ++i)
            pred(i) = tree.predict_row(x_test.row(i));
        mean_single += std::sqrt((pred - y_test).array().square().mean());
    }
    mean_single /= static_cast<double>(model.forest().trees.size());
    CHECK(ensemble_rmse <= mean_single);
}

TEST_CASE("fit validates inputs") {
    RegressorSpec spec;
    Eigen::MatrixXd x(1, 2);
    x << 1, 2;
    Eigen::VectorXd y(1);
    y << 1;
    CHECK_THROWS_AS(fit(spec, x, y), std::runtime_error);
    CHECK_THROWS_AS(regressor_kind_from_string("lightgbm"), std::runtime_error);
    CHECK(regressor_kind_from_string("bagged") == RegressorKind::kBaggedTrees);
}
