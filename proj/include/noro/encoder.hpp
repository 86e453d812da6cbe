#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "noro/binning.hpp"
#include "noro/rng.hpp"

namespace noro {

enum class AlphaConvention {
    kAnchorRow,   // N from the anchor bin of each row (formula as written)
    kSymmetric,   // symmetrized: mean of the two anchor-row values
};

// Distance coefficients between bins, one anchor bin per row. For anchor m
// (1-indexed) the binomial width is N = 2*max(m, K-m) and
// alpha[m][n] = C(N, n-m+N/2) / C(N, N/2), computed in log space.
inline Eigen::MatrixXd distance_coefficients(
    int k, AlphaConvention convention = AlphaConvention::kAnchorRow) {
    if (k < 1) throw std::runtime_error("distance_coefficients: K must be >= 1");
    auto log_choose = [](double n, double r) {
        return std::lgamma(n + 1.0) - std::lgamma(r + 1.0) -
               std::lgamma(n - r + 1.0);
    };
    Eigen::MatrixXd alpha(k, k);
    for (int m = 1; m <= k; ++m) {
        const double n_width = 2.0 * std::max(m, k - m);
        const double half = n_width / 2.0;
        const double log_peak = log_choose(n_width, half);
        for (int n = 1; n <= k; ++n) {
            const double idx = static_cast<double>(n - m) + half;
            alpha(m - 1, n - 1) = std::exp(log_choose(n_width, idx) - log_peak);
        }
        alpha(m - 1, m - 1) = 1.0;
    }
    if (convention == AlphaConvention::kSymmetric)
        alpha = 0.5 * (alpha + alpha.transpose()).eval();
    return alpha;
}

// H = tanh(XW)
inline Eigen::MatrixXd encoder_forward(const Eigen::MatrixXd& w,
                                       const Eigen::MatrixXd& x) {
    if (x.cols() != w.rows())
        throw std::runtime_error("encoder_forward: shape mismatch");
    return (x * w).array().tanh();
}

// X' = [X | tanh(XW)]
inline Eigen::MatrixXd augment(const Eigen::MatrixXd& w,
                               const Eigen::MatrixXd& x) {
    const Eigen::MatrixXd h = encoder_forward(w, x);
    Eigen::MatrixXd out(x.rows(), x.cols() + h.cols());
    out << x, h;
    return out;
}

// L = -sum_j [ h_j'c_i - log sum_k exp(alpha_ik h_j'c_k) ], i = bin(j).
// Centers are an explicit argument; the training loop fixes them per epoch.
inline double contrastive_loss(const Eigen::MatrixXd& h,
                               const Eigen::MatrixXd& centers,
                               const std::vector<int>& assignment,
                               const Eigen::MatrixXd& alpha) {
    const int k = static_cast<int>(centers.rows());
    if (!h.allFinite() || !centers.allFinite())
        throw std::runtime_error("contrastive_loss: non-finite input");
    if (static_cast<Eigen::Index>(assignment.size()) != h.rows())
        throw std::runtime_error("contrastive_loss: assignment size mismatch");

    const Eigen::MatrixXd scores = h * centers.transpose();  // M x K
    double loss = 0.0;
    Eigen::VectorXd a(k);
    for (Eigen::Index j = 0; j < h.rows(); ++j) {
        const int i = assignment[static_cast<std::size_t>(j)] - 1;
        for (int c = 0; c < k; ++c) a(c) = alpha(i, c) * scores(j, c);
        const double mx = a.maxCoeff();
        const double lse = mx + std::log((a.array() - mx).exp().sum());
        loss -= scores(j, i) - lse;
    }
    return loss;
}

// Analytic gradient of contrastive_loss w.r.t. W through H = tanh(XW),
// centers held constant.
inline Eigen::MatrixXd loss_gradient(const Eigen::MatrixXd& w,
                                     const Eigen::MatrixXd& x,
                                     const Eigen::MatrixXd& centers,
                                     const std::vector<int>& assignment,
                                     const Eigen::MatrixXd& alpha) {
    if (x.cols() != w.rows())
        throw std::runtime_error("loss_gradient: shape mismatch");
    const int k = static_cast<int>(centers.rows());
    const Eigen::MatrixXd h = encoder_forward(w, x);
    const Eigen::MatrixXd scores = h * centers.transpose();

    Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(h.rows(), h.cols());
    Eigen::VectorXd a(k), p(k);
    for (Eigen::Index j = 0; j < h.rows(); ++j) {
        const int i = assignment[static_cast<std::size_t>(j)] - 1;
        for (int c = 0; c < k; ++c) a(c) = alpha(i, c) * scores(j, c);
        const double mx = a.maxCoeff();
        p = (a.array() - mx).exp();
        p /= p.sum();
        dh.row(j) -= centers.row(i);
        for (int c = 0; c < k; ++c)
            dh.row(j) += p(c) * alpha(i, c) * centers.row(c);
    }
    // through tanh: dL/dZ = dL/dH * (1 - H^2)
    const Eigen::MatrixXd dz = dh.array() * (1.0 - h.array().square());
    return x.transpose() * dz;
}

struct TrainConfig {
    int k = 5;
    int epochs_per_fold = 200;
    int folds = 10;
    double learning_rate = 1e-3;
    double grad_clip = 1.0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 2024;
    AlphaConvention alpha_convention = AlphaConvention::kAnchorRow;
};

struct EncoderWeights {
    Eigen::MatrixXd w;  // D x D'
    BinningModel binning;
    TrainConfig config;
    double validation_loss = 0.0;
};

struct EpochLogEntry {
    int fold = 0;
    int epoch = 0;  // global epoch index
    double train_loss = 0.0;
    double valid_loss = 0.0;
};

// Alg.: assign bins, build alpha once, random init W; each epoch recompute
// H and centers, full-batch Adam step with global-norm gradient clipping.
// Folds rotate the validation block; the weights with the lowest validation
// loss ever seen are returned.
inline EncoderWeights train_encoder(const Eigen::MatrixXd& pool_features,
                                    const std::vector<std::vector<int>>& fold_train,
                                    const std::vector<std::vector<int>>& fold_valid,
                                    const BinningModel& binning,
                                    const TrainConfig& cfg,
                                    std::vector<EpochLogEntry>* log = nullptr) {
    const auto d = pool_features.cols();
    const auto d_prime = d;
    const Eigen::MatrixXd alpha =
        distance_coefficients(cfg.k, cfg.alpha_convention);

    Rng rng(cfg.seed);
    const double init_scale = 1.0 / std::sqrt(static_cast<double>(d));
    Eigen::MatrixXd w(d, d_prime);
    for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index c = 0; c < d_prime; ++c)
            w(r, c) = rng.uniform(-init_scale, init_scale);

    Eigen::MatrixXd m1 = Eigen::MatrixXd::Zero(d, d_prime);
    Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(d, d_prime);
    Eigen::MatrixXd best_w = w;
    double best_valid = std::numeric_limits<double>::infinity();
    int step = 0;

    for (std::size_t f = 0; f < fold_train.size(); ++f) {
        Eigen::MatrixXd x_train(static_cast<Eigen::Index>(fold_train[f].size()), d);
        Eigen::MatrixXd x_valid(static_cast<Eigen::Index>(fold_valid[f].size()), d);
        for (std::size_t i = 0; i < fold_train[f].size(); ++i)
            x_train.row(static_cast<Eigen::Index>(i)) =
                pool_features.row(fold_train[f][i]);
        for (std::size_t i = 0; i < fold_valid[f].size(); ++i)
            x_valid.row(static_cast<Eigen::Index>(i)) =
                pool_features.row(fold_valid[f][i]);

        std::vector<int> train_bins(fold_train[f].size());
        for (std::size_t i = 0; i < fold_train[f].size(); ++i)
            train_bins[i] =
                assign_bin(binning, x_train(static_cast<Eigen::Index>(i),
                                            binning.feature_index));
        std::vector<int> valid_bins(fold_valid[f].size());
        for (std::size_t i = 0; i < fold_valid[f].size(); ++i)
            valid_bins[i] =
                assign_bin(binning, x_valid(static_cast<Eigen::Index>(i),
                                            binning.feature_index));

        for (int epoch = 0; epoch < cfg.epochs_per_fold; ++epoch) {
            const Eigen::MatrixXd h = encoder_forward(w, x_train);
            const Eigen::MatrixXd centers =
                compute_bin_centers(h, train_bins, cfg.k);
            const double train_loss =
                contrastive_loss(h, centers, train_bins, alpha);
            if (!std::isfinite(train_loss))
                throw std::runtime_error("train_encoder: loss diverged at epoch " +
                                         std::to_string(step + 1));

            Eigen::MatrixXd g =
                loss_gradient(w, x_train, centers, train_bins, alpha);
            const double gnorm = g.norm();
            if (gnorm > cfg.grad_clip) g *= cfg.grad_clip / gnorm;

            ++step;
            m1 = cfg.adam_beta1 * m1 + (1.0 - cfg.adam_beta1) * g;
            m2 = cfg.adam_beta2 * m2.array().matrix() +
                 (1.0 - cfg.adam_beta2) * g.array().square().matrix();
            const double bc1 = 1.0 - std::pow(cfg.adam_beta1, step);
            const double bc2 = 1.0 - std::pow(cfg.adam_beta2, step);
            w -= (cfg.learning_rate * (m1.array() / bc1) /
                  ((m2.array() / bc2).sqrt() + cfg.adam_eps))
                     .matrix();

            const Eigen::MatrixXd h_valid = encoder_forward(w, x_valid);
            const double valid_loss =
                contrastive_loss(h_valid, centers, valid_bins, alpha);
            if (valid_loss < best_valid) {
                best_valid = valid_loss;
                best_w = w;
            }
            if (log)
                log->push_back({static_cast<int>(f), step, train_loss, valid_loss});
        }
    }

    EncoderWeights out;
    out.w = best_w;
    out.binning = binning;
    out.config = cfg;
    out.validation_loss = best_valid;
    return out;
}

}  // namespace noro
