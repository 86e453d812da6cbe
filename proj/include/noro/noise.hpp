#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "noro/rng.hpp"

namespace noro {

// SNR sentinel for the no-noise mode.
inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

struct NoiseSpec {
    double snr_db = kNoNoise;
    Eigen::VectorXd feature_powers;
    Eigen::VectorXd variances;
    std::uint64_t seed = 0;
};

// P_j = mean of squares of column j.
inline Eigen::VectorXd feature_power(const Eigen::MatrixXd& x) {
    if (x.rows() == 0) throw std::runtime_error("feature_power: empty matrix");
    return x.array().square().colwise().mean();
}

// sigma_j^2 = P_j * 10^(-SNR/10)
inline Eigen::VectorXd noise_variances(const Eigen::VectorXd& powers,
                                       double snr_db) {
    if (std::isinf(snr_db)) return Eigen::VectorXd::Zero(powers.size());
    return powers * std::pow(10.0, -snr_db / 10.0);
}

inline NoiseSpec make_noise_spec(const Eigen::VectorXd& powers, double snr_db,
                                 std::uint64_t seed) {
    NoiseSpec spec;
    spec.snr_db = snr_db;
    spec.feature_powers = powers;
    spec.variances = noise_variances(powers, snr_db);
    spec.seed = seed;
    return spec;
}

// Adds independent per-cell gaussian noise with per-column variance. Draws
// depend only on (shape, variances, seed), never on the values of x.
inline Eigen::MatrixXd inject(const Eigen::MatrixXd& x, const NoiseSpec& spec) {
    if (spec.variances.size() != x.cols())
        throw std::runtime_error("inject: variance count mismatch");
    if (std::isinf(spec.snr_db)) return x;
    Rng rng(spec.seed);
    Eigen::MatrixXd out = x;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double sd = std::sqrt(spec.variances(j));
        if (sd == 0.0) continue;
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            out(i, j) += rng.gaussian(0.0, sd);
    }
    return out;
}

// Powers computed on the matrix being corrupted.
inline Eigen::MatrixXd inject(const Eigen::MatrixXd& x, double snr_db,
                              std::uint64_t seed) {
    return inject(x, make_noise_spec(feature_power(x), snr_db, seed));
}

}  // namespace noro
