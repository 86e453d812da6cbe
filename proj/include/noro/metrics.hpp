#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace noro {

struct ErrorTriple {
    double rmse = 0.0;
    double mae = 0.0;
    double median_ae = 0.0;
};

inline ErrorTriple error_triple(const Eigen::VectorXd& y,
                                const Eigen::VectorXd& y_hat) {
    if (y.size() == 0 || y.size() != y_hat.size())
        throw std::runtime_error("error_triple: empty or mismatched vectors");
    const Eigen::ArrayXd abs_err = (y - y_hat).array().abs();
    ErrorTriple t;
    t.rmse = std::sqrt(abs_err.square().mean());
    t.mae = abs_err.mean();
    std::vector<double> e(abs_err.data(), abs_err.data() + abs_err.size());
    std::sort(e.begin(), e.end());
    const std::size_t n = e.size();
    t.median_ae = (n % 2 == 1) ? e[n / 2] : 0.5 * (e[n / 2 - 1] + e[n / 2]);
    return t;
}

struct MetricStat {
    double mean = 0.0;
    double std = 0.0;  // sample std (divide by T-1); 0 for a single trial
};

struct TrialSummary {
    MetricStat rmse, mae, median_ae;
    int trials = 0;
};

namespace detail {

inline MetricStat stat_of(const std::vector<double>& v) {
    MetricStat s;
    const double n = static_cast<double>(v.size());
    for (double x : v) s.mean += x;
    s.mean /= n;
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.std = std::sqrt(ss / (n - 1.0));
    }
    return s;
}

}  // namespace detail

inline TrialSummary aggregate_trials(const std::vector<ErrorTriple>& trials) {
    if (trials.empty()) throw std::runtime_error("aggregate_trials: no trials");
    std::vector<double> r, m, d;
    for (const auto& t : trials) {
        r.push_back(t.rmse);
        m.push_back(t.mae);
        d.push_back(t.median_ae);
    }
    TrialSummary s;
    s.rmse = detail::stat_of(r);
    s.mae = detail::stat_of(m);
    s.median_ae = detail::stat_of(d);
    s.trials = static_cast<int>(trials.size());
    return s;
}

struct RelativeErrorEstimate {
    double delta_hat = 0.0;
    double sigma_hat = 0.0;
};

// delta = (E_x' - E_x)/E_x with the first-order error-propagation estimate
// of its spread.
inline RelativeErrorEstimate relative_error(const MetricStat& base,
                                            const MetricStat& augmented) {
    if (base.mean <= 0.0 || augmented.mean <= 0.0)
        throw std::runtime_error("relative_error: means must be positive");
    RelativeErrorEstimate r;
    r.delta_hat = (augmented.mean - base.mean) / base.mean;
    const double ratio = augmented.mean / base.mean;
    r.sigma_hat =
        ratio * std::sqrt(base.std * base.std / (base.mean * base.mean) +
                          augmented.std * augmented.std /
                              (augmented.mean * augmented.mean));
    return r;
}

struct SignificanceResult {
    bool significant = false;
    double p = 1.0;
};

// Two-sided Welch t-test over per-trial errors.
inline SignificanceResult significance_flag(const std::vector<double>& a,
                                            const std::vector<double>& b,
                                            double level = 0.05) {
    if (a.size() < 2 || b.size() != a.size())
        throw std::runtime_error(
            "significance_flag: need >= 2 trials with equal counts");
    const MetricStat sa = detail::stat_of(a);
    const MetricStat sb = detail::stat_of(b);
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double va = sa.std * sa.std / na;
    const double vb = sb.std * sb.std / nb;
    SignificanceResult res;
    if (va + vb == 0.0) {
        res.p = (sa.mean == sb.mean) ? 1.0 : 0.0;
        res.significant = res.p < level;
        return res;
    }
    const double t = (sa.mean - sb.mean) / std::sqrt(va + vb);
    const double dof = (va + vb) * (va + vb) /
                       (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    const boost::math::students_t dist(dof);
    res.p = 2.0 * boost::math::cdf(dist, -std::abs(t));
    res.significant = res.p < level;
    return res;
}

// Paired two-sided t-test over per-trial differences.
inline SignificanceResult significance_flag_paired(const std::vector<double>& a,
                                                   const std::vector<double>& b,
                                                   double level = 0.05) {
    if (a.size() < 2 || b.size() != a.size())
        throw std::runtime_error(
            "significance_flag_paired: need >= 2 paired trials");
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
    const MetricStat sd = detail::stat_of(diff);
    SignificanceResult res;
    if (sd.std == 0.0) {
        res.p = (sd.mean == 0.0) ? 1.0 : 0.0;
        res.significant = res.p < level;
        return res;
    }
    const double n = static_cast<double>(a.size());
    const double t = sd.mean / (sd.std / std::sqrt(n));
    const boost::math::students_t dist(n - 1.0);
    res.p = 2.0 * boost::math::cdf(dist, -std::abs(t));
    res.significant = res.p < level;
    return res;
}

struct ClusterQuality {
    double silhouette = 0.0;
    double calinski_harabasz = 0.0;
};

inline double silhouette(const Eigen::MatrixXd& points,
                         const std::vector<int>& labels) {
    const auto n = points.rows();
    if (static_cast<Eigen::Index>(labels.size()) != n)
        throw std::runtime_error("silhouette: label count mismatch");
    std::vector<int> distinct(labels);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2)
        throw std::runtime_error("silhouette: need at least 2 clusters");

    std::vector<int> index_of(static_cast<std::size_t>(
        *std::max_element(distinct.begin(), distinct.end()) + 1));
    for (std::size_t c = 0; c < distinct.size(); ++c)
        index_of[static_cast<std::size_t>(distinct[c])] = static_cast<int>(c);
    std::vector<int> counts(distinct.size(), 0);
    for (int l : labels) ++counts[static_cast<std::size_t>(index_of[static_cast<std::size_t>(l)])];

    double total = 0.0;
    std::vector<double> mean_dist(distinct.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        std::fill(mean_dist.begin(), mean_dist.end(), 0.0);
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            const auto c = static_cast<std::size_t>(
                index_of[static_cast<std::size_t>(labels[static_cast<std::size_t>(j)])]);
            mean_dist[c] += (points.row(i) - points.row(j)).norm();
        }
        const auto own = static_cast<std::size_t>(
            index_of[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])]);
        if (counts[own] <= 1) continue;  // singleton cluster scores 0
        const double a = mean_dist[own] / (counts[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < distinct.size(); ++c)
            if (c != own && counts[c] > 0)
                b = std::min(b, mean_dist[c] / counts[c]);
        const double denom = std::max(a, b);
        if (denom > 0.0) total += (b - a) / denom;
    }
    return total / static_cast<double>(n);
}

inline double calinski_harabasz(const Eigen::MatrixXd& points,
                                const std::vector<int>& labels) {
    const auto n = points.rows();
    if (static_cast<Eigen::Index>(labels.size()) != n)
        throw std::runtime_error("calinski_harabasz: label count mismatch");
    std::vector<int> distinct(labels);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    const auto g = distinct.size();
    if (g < 2)
        throw std::runtime_error("calinski_harabasz: need at least 2 clusters");

    const Eigen::RowVectorXd global_mean = points.colwise().mean();
    double between = 0.0, within = 0.0;
    for (std::size_t c = 0; c < g; ++c) {
        Eigen::RowVectorXd centroid = Eigen::RowVectorXd::Zero(points.cols());
        int count = 0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (labels[static_cast<std::size_t>(i)] == distinct[c]) {
                centroid += points.row(i);
                ++count;
            }
        centroid /= count;
        between += count * (centroid - global_mean).squaredNorm();
        for (Eigen::Index i = 0; i < n; ++i)
            if (labels[static_cast<std::size_t>(i)] == distinct[c])
                within += (points.row(i) - centroid).squaredNorm();
    }
    if (within == 0.0)
        return between > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return (between / static_cast<double>(g - 1)) /
           (within / static_cast<double>(n - g));
}

// First two principal components (for plotting exports).
inline Eigen::MatrixXd pca_2d(const Eigen::MatrixXd& x) {
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - mean;
    const Eigen::MatrixXd cov =
        centered.transpose() * centered / static_cast<double>(x.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    const auto d = x.cols();
    Eigen::MatrixXd basis(d, 2);
    basis.col(0) = es.eigenvectors().col(d - 1);
    basis.col(1) = es.eigenvectors().col(d - 2);
    return centered * basis;
}

}  // namespace noro
