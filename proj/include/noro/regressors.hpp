#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "noro/forest.hpp"
#include "noro/rng.hpp"

namespace noro {

enum class RegressorKind { kRidge, kKnn, kNeural, kBaggedTrees, kGpr };

inline RegressorKind regressor_kind_from_string(const std::string& s) {
    if (s == "ridge") return RegressorKind::kRidge;
    if (s == "knn") return RegressorKind::kKnn;
    if (s == "neural") return RegressorKind::kNeural;
    if (s == "bagged") return RegressorKind::kBaggedTrees;
    if (s == "gpr") return RegressorKind::kGpr;
    throw std::runtime_error(
        "unknown model '" + s + "' (valid: ridge, knn, neural, bagged, gpr)");
}

inline std::string to_string(RegressorKind k) {
    switch (k) {
        case RegressorKind::kRidge: return "ridge";
        case RegressorKind::kKnn: return "knn";
        case RegressorKind::kNeural: return "neural";
        case RegressorKind::kBaggedTrees: return "bagged";
        case RegressorKind::kGpr: return "gpr";
    }
    return "?";
}

struct RegressorSpec {
    RegressorKind kind = RegressorKind::kRidge;
    std::map<std::string, double> hyper;
    std::uint64_t seed = 2024;

    double get(const std::string& key, double fallback) const {
        auto it = hyper.find(key);
        return it == hyper.end() ? fallback : it->second;
    }
};

class TrainedModel {
public:
    virtual ~TrainedModel() = default;
    virtual Eigen::VectorXd predict(const Eigen::MatrixXd& x) const = 0;
    virtual RegressorKind kind() const = 0;
    Eigen::Index input_dim = 0;

protected:
    void check_dim(const Eigen::MatrixXd& x) const {
        if (x.cols() != input_dim)
            throw std::runtime_error("predict: expected " +
                                     std::to_string(input_dim) + " columns, got " +
                                     std::to_string(x.cols()));
    }
};

namespace models {

class Ridge final : public TrainedModel {
public:
    Ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda) {
        if (lambda < 0) throw std::runtime_error("ridge: lambda must be >= 0");
        input_dim = x.cols();
        x_mean_ = x.colwise().mean();
        y_mean_ = y.mean();
        const Eigen::MatrixXd xc = x.rowwise() - x_mean_;
        const Eigen::VectorXd yc = y.array() - y_mean_;
        Eigen::MatrixXd a = xc.transpose() * xc;
        a.diagonal().array() += lambda;
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
        if (ldlt.info() != Eigen::Success ||
            (lambda == 0.0 &&
             Eigen::FullPivLU<Eigen::MatrixXd>(a).rank() < a.rows()))
            throw std::runtime_error(
                "ridge: singular normal equations; use lambda > 0");
        coef_ = ldlt.solve(xc.transpose() * yc);
    }

    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override {
        check_dim(x);
        return ((x.rowwise() - x_mean_) * coef_).array() + y_mean_;
    }
    RegressorKind kind() const override { return RegressorKind::kRidge; }

    Eigen::VectorXd coefficients() const { return coef_; }
    double intercept() const { return y_mean_ - x_mean_.dot(coef_); }

private:
    Eigen::VectorXd coef_;
    Eigen::RowVectorXd x_mean_;
    double y_mean_ = 0.0;
};

class Knn final : public TrainedModel {
public:
    Knn(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int k)
        : x_(x), y_(y), k_(k) {
        if (k < 1) throw std::runtime_error("knn: k must be >= 1");
        input_dim = x.cols();
    }

    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override {
        check_dim(x);
        const int k = std::min<int>(k_, static_cast<int>(x_.rows()));
        Eigen::VectorXd out(x.rows());
        std::vector<std::pair<double, int>> d(static_cast<std::size_t>(x_.rows()));
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            for (Eigen::Index t = 0; t < x_.rows(); ++t)
                d[static_cast<std::size_t>(t)] = {
                    (x_.row(t) - x.row(i)).squaredNorm(), static_cast<int>(t)};
            std::partial_sort(d.begin(), d.begin() + k, d.end());
            double s = 0.0;
            for (int j = 0; j < k; ++j) s += y_(d[static_cast<std::size_t>(j)].second);
            out(i) = s / k;
        }
        return out;
    }
    RegressorKind kind() const override { return RegressorKind::kKnn; }

private:
    Eigen::MatrixXd x_;
    Eigen::VectorXd y_;
    int k_;
};

// One hidden layer of ReLU units trained by seeded minibatch SGD with
// momentum; stops early when the epoch loss improvement drops below tol.
class Neural final : public TrainedModel {
public:
    Neural(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
           const RegressorSpec& spec) {
        input_dim = x.cols();
        const int hidden = static_cast<int>(spec.get("hidden", 32));
        const int max_iter = static_cast<int>(spec.get("max_iter", 2000));
        const double lr = spec.get("learning_rate", 1e-2);
        const double l2 = spec.get("alpha", 1e-3);
        const double tol = spec.get("tol", 1e-3);
        const int batch = static_cast<int>(spec.get("batch", 200));
        const double momentum = 0.9;

        Rng rng(spec.seed);
        const double s1 = std::sqrt(2.0 / static_cast<double>(input_dim));
        const double s2 = std::sqrt(2.0 / static_cast<double>(hidden));
        w1_.resize(input_dim, hidden);
        for (Eigen::Index r = 0; r < w1_.rows(); ++r)
            for (Eigen::Index c = 0; c < w1_.cols(); ++c)
                w1_(r, c) = rng.gaussian(0.0, s1);
        b1_ = Eigen::VectorXd::Zero(hidden);
        w2_.resize(hidden);
        for (Eigen::Index r = 0; r < hidden; ++r) w2_(r) = rng.gaussian(0.0, s2);
        b2_ = 0.0;

        Eigen::MatrixXd v_w1 = Eigen::MatrixXd::Zero(input_dim, hidden);
        Eigen::VectorXd v_b1 = Eigen::VectorXd::Zero(hidden);
        Eigen::VectorXd v_w2 = Eigen::VectorXd::Zero(hidden);
        double v_b2 = 0.0;

        y_mean_ = y.mean();
        const Eigen::VectorXd yc = y.array() - y_mean_;

        const auto m = static_cast<int>(x.rows());
        std::vector<int> order(static_cast<std::size_t>(m));
        std::iota(order.begin(), order.end(), 0);
        double best_loss = std::numeric_limits<double>::infinity();
        Eigen::MatrixXd best_w1 = w1_;
        Eigen::VectorXd best_b1 = b1_, best_w2 = w2_;
        double best_b2 = b2_;
        int stall = 0;

        for (int epoch = 0; epoch < max_iter; ++epoch) {
            shuffle(order, rng);
            double epoch_loss = 0.0;
            for (int start = 0; start < m; start += batch) {
                const int bs = std::min(batch, m - start);
                Eigen::MatrixXd xb(bs, input_dim);
                Eigen::VectorXd yb(bs);
                for (int i = 0; i < bs; ++i) {
                    xb.row(i) = x.row(order[static_cast<std::size_t>(start + i)]);
                    yb(i) = yc(order[static_cast<std::size_t>(start + i)]);
                }
                const Eigen::MatrixXd z1 =
                    (xb * w1_).rowwise() + b1_.transpose();
                const Eigen::MatrixXd a1 = z1.array().max(0.0);
                const Eigen::VectorXd pred = (a1 * w2_).array() + b2_;
                const Eigen::VectorXd err = pred - yb;
                epoch_loss += err.squaredNorm();

                const Eigen::VectorXd dpred = 2.0 * err / bs;
                const Eigen::VectorXd g_w2 =
                    a1.transpose() * dpred + l2 * w2_;
                const double g_b2 = dpred.sum();
                Eigen::MatrixXd da1 = dpred * w2_.transpose();
                da1 = (z1.array() > 0.0).select(da1, 0.0);
                const Eigen::MatrixXd g_w1 = xb.transpose() * da1 + l2 * w1_;
                const Eigen::VectorXd g_b1 = da1.colwise().sum();

                v_w1 = momentum * v_w1 - lr * g_w1;
                v_b1 = momentum * v_b1 - lr * g_b1;
                v_w2 = momentum * v_w2 - lr * g_w2;
                v_b2 = momentum * v_b2 - lr * g_b2;
                w1_ += v_w1;
                b1_ += v_b1;
                w2_ += v_w2;
                b2_ += v_b2;
            }
            epoch_loss /= m;
            if (epoch_loss < best_loss - tol) {
                best_loss = epoch_loss;
                best_w1 = w1_;
                best_b1 = b1_;
                best_w2 = w2_;
                best_b2 = b2_;
                stall = 0;
            } else if (++stall >= 10) {
                break;
            }
        }
        w1_ = best_w1;
        b1_ = best_b1;
        w2_ = best_w2;
        b2_ = best_b2;
    }

    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override {
        check_dim(x);
        const Eigen::MatrixXd a1 =
            ((x * w1_).rowwise() + b1_.transpose()).array().max(0.0);
        return (a1 * w2_).array() + b2_ + y_mean_;
    }
    RegressorKind kind() const override { return RegressorKind::kNeural; }

private:
    Eigen::MatrixXd w1_;
    Eigen::VectorXd b1_;
    Eigen::VectorXd w2_;
    double b2_ = 0.0;
    double y_mean_ = 0.0;
};

class BaggedTrees final : public TrainedModel {
public:
    BaggedTrees(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                const RegressorSpec& spec) {
        input_dim = x.cols();
        ForestParams params;
        params.n_trees = static_cast<int>(spec.get("n_trees", 10));
        params.min_leaf = static_cast<int>(spec.get("min_leaf", 1));
        params.max_depth = static_cast<int>(spec.get("max_depth", -1));
        params.feature_subsample = static_cast<int>(x.cols());  // plain bagging
        params.bootstrap = true;
        forest_ = fit_random_forest(x, y, params, spec.seed);
    }

    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override {
        check_dim(x);
        return forest_.predict(x);
    }
    RegressorKind kind() const override { return RegressorKind::kBaggedTrees; }

    const RandomForest& forest() const { return forest_; }

private:
    RandomForest forest_;
};

// RBF kernel, zero prior mean, Cholesky of K + jitter*I. No hyperparameter
// optimization.
class Gpr final : public TrainedModel {
public:
    Gpr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
        const RegressorSpec& spec)
        : x_(x),
          length_scale_(spec.get("length_scale", 3.0)),
          signal_var_(spec.get("signal_variance", 1.0)) {
        const double jitter = spec.get("jitter", 1e-6);
        if (jitter <= 0) throw std::runtime_error("gpr: jitter must be > 0");
        input_dim = x.cols();
        Eigen::MatrixXd k = kernel(x, x);
        k.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(k);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error(
                "gpr: Cholesky factorization failed; increase jitter");
        alpha_ = llt.solve(y);
    }

    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override {
        check_dim(x);
        return kernel(x, x_) * alpha_;
    }
    RegressorKind kind() const override { return RegressorKind::kGpr; }

private:
    Eigen::MatrixXd kernel(const Eigen::MatrixXd& a,
                           const Eigen::MatrixXd& b) const {
        const Eigen::VectorXd an = a.rowwise().squaredNorm();
        const Eigen::VectorXd bn = b.rowwise().squaredNorm();
        Eigen::MatrixXd d2 = (-2.0 * a * b.transpose());
        d2.colwise() += an;
        d2.rowwise() += bn.transpose();
        return signal_var_ *
               (-d2.array().max(0.0) / (2.0 * length_scale_ * length_scale_))
                   .exp();
    }

    Eigen::MatrixXd x_;
    Eigen::VectorXd alpha_;
    double length_scale_;
    double signal_var_;
};

}  // namespace models

inline std::unique_ptr<TrainedModel> fit(const RegressorSpec& spec,
                                         const Eigen::MatrixXd& x,
                                         const Eigen::VectorXd& y) {
    if (x.rows() < 2 || y.size() != x.rows())
        throw std::runtime_error("fit: need at least 2 rows and matching labels");
    switch (spec.kind) {
        case RegressorKind::kRidge:
            return std::make_unique<models::Ridge>(x, y, spec.get("lambda", 1.0));
        case RegressorKind::kKnn:
            return std::make_unique<models::Knn>(
                x, y, static_cast<int>(spec.get("k", 5)));
        case RegressorKind::kNeural:
            return std::make_unique<models::Neural>(x, y, spec);
        case RegressorKind::kBaggedTrees:
            return std::make_unique<models::BaggedTrees>(x, y, spec);
        case RegressorKind::kGpr:
            return std::make_unique<models::Gpr>(x, y, spec);
    }
    throw std::runtime_error("fit: unknown regressor kind");
}

}  // namespace noro
