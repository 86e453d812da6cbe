#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "noro/dataset.hpp"
#include "noro/noise.hpp"
#include "noro/synthetic.hpp"

using namespace noro;

TEST_CASE("feature_power") {
    Eigen::MatrixXd x(2, 2);
    x << 1, 0, -1, 0;
    const auto p = feature_power(x);
    CHECK(p(0) == doctest::Approx(1.0));
    CHECK(p(1) == 0.0);
    CHECK_THROWS_AS(feature_power(Eigen::MatrixXd()), std::runtime_error);
}

TEST_CASE("z-scored columns have unit power") {
    const Dataset ds = make_synthetic_dataset({.rows = 500, .subjects = 10});
    const auto st = zscore_fit(ds.features, ds.motor);
    const auto z = zscore_apply(ds.features, st);
    const auto p = feature_power(z);
    for (int j = 0; j < kNumFeatures; ++j)
        CHECK(p(j) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("noise_variances") {
    Eigen::VectorXd p(3);
    p << 2.0, 1.0, 0.0;
    const auto v10 = noise_variances(p, 10.0);
    CHECK(v10(0) == doctest::Approx(0.2));
    CHECK(v10(2) == 0.0);
    const auto v0 = noise_variances(p, 0.0);
    CHECK(v0(0) == doctest::Approx(2.0));
    CHECK(v0(1) == doctest::Approx(1.0));
    const auto spec = make_noise_spec(p, 10.0, 1);
    CHECK((spec.variances -
           spec.feature_powers * std::pow(10.0, -1.0))
              .cwiseAbs()
              .maxCoeff() == 0.0);
}

TEST_CASE("inject: no-noise sentinel, determinism, zero-power columns") {
    Eigen::MatrixXd x(4, 2);
    x << 1, 0, 2, 0, 3, 0, 4, 0;
    CHECK((inject(x, kNoNoise, 5) - x).norm() == 0.0);

    const auto a = inject(x, 10.0, 5);
    const auto b = inject(x, 10.0, 5);
    const auto c = inject(x, 10.0, 6);
    CHECK((a - b).norm() == 0.0);
    CHECK((a - c).norm() > 0.0);
    CHECK((a.col(1) - x.col(1)).norm() == 0.0);  // zero power, no noise
}

TEST_CASE("noise draws depend on the spec, not the data values") {
    Eigen::MatrixXd x1 = Eigen::MatrixXd::Random(20, 3);
    Eigen::MatrixXd x2 = Eigen::MatrixXd::Random(20, 3);
    Eigen::VectorXd powers(3);
    powers << 1.0, 2.0, 0.5;
    const auto spec = make_noise_spec(powers, 10.0, 77);
    const Eigen::MatrixXd n1 = inject(x1, spec) - x1;
    const Eigen::MatrixXd n2 = inject(x2, spec) - x2;
    CHECK((n1 - n2).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("empirical SNR calibration on canonical-size features") {
    const Dataset ds = make_synthetic_dataset();
    const auto st = zscore_fit(ds.features, ds.motor);
    const auto z = zscore_apply(ds.features, st);
    const auto powers = feature_power(z);

    for (double snr : {5.0, 10.0, 20.0, 30.0}) {
        const auto noisy = inject(z, make_noise_spec(powers, snr, 321));
        const Eigen::MatrixXd noise = noisy - z;
        for (int j = 0; j < kNumFeatures; ++j) {
            const double noise_var = noise.col(j).array().square().mean();
            const double empirical = 10.0 * std::log10(powers(j) / noise_var);
            CHECK(std::abs(empirical - snr) < 0.5);
        }
    }
}
