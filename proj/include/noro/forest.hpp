#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <vector>

#include "noro/rng.hpp"

namespace noro {

struct ForestParams {
    int n_trees = 100;
    int max_depth = -1;  // -1: unbounded
    int min_leaf = 5;
    int feature_subsample = -1;  // -1: ceil(D/3)
    bool bootstrap = true;
};

// Variance-reduction regression tree. Nodes are stored in a flat array;
// leaves have left == -1.
struct TreeNode {
    int split_feature = -1;
    double split_threshold = 0.0;
    int left = -1;
    int right = -1;
    double prediction = 0.0;
    int n_samples = 0;
    double impurity = 0.0;        // variance of targets at this node
    double impurity_decrease = 0.0;  // weighted decrease achieved by the split
};

struct RegressionTree {
    std::vector<TreeNode> nodes;

    double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
        int n = 0;
        while (nodes[static_cast<std::size_t>(n)].left >= 0) {
            const auto& nd = nodes[static_cast<std::size_t>(n)];
            n = x(nd.split_feature) < nd.split_threshold ? nd.left : nd.right;
        }
        return nodes[static_cast<std::size_t>(n)].prediction;
    }
};

namespace detail {

struct SplitResult {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double decrease = 0.0;  // impurity decrease weighted by node fraction
};

// Exact best split over midpoints of consecutive sorted unique values.
// First-best wins ties so tree growth is deterministic.
inline SplitResult best_split(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                              const std::vector<int>& rows,
                              const std::vector<int>& features, int min_leaf,
                              double node_variance, double total_rows) {
    SplitResult best;
    const auto n = static_cast<int>(rows.size());
    std::vector<std::pair<double, double>> vals(rows.size());

    for (int f : features) {
        for (std::size_t i = 0; i < rows.size(); ++i)
            vals[i] = {x(rows[i], f), y(rows[i])};
        std::sort(vals.begin(), vals.end());
        if (vals.front().first == vals.back().first) continue;

        double left_sum = 0.0, left_sq = 0.0;
        double right_sum = 0.0, right_sq = 0.0;
        for (const auto& [v, t] : vals) {
            right_sum += t;
            right_sq += t * t;
        }
        for (int i = 0; i < n - 1; ++i) {
            const double t = vals[static_cast<std::size_t>(i)].second;
            left_sum += t;
            left_sq += t * t;
            right_sum -= t;
            right_sq -= t * t;
            const double v = vals[static_cast<std::size_t>(i)].first;
            const double v_next = vals[static_cast<std::size_t>(i + 1)].first;
            if (v == v_next) continue;
            const int nl = i + 1, nr = n - nl;
            if (nl < min_leaf || nr < min_leaf) continue;
            const double var_l = left_sq / nl - (left_sum / nl) * (left_sum / nl);
            const double var_r =
                right_sq / nr - (right_sum / nr) * (right_sum / nr);
            const double weighted_child =
                (nl * var_l + nr * var_r) / static_cast<double>(n);
            const double decrease =
                (node_variance - weighted_child) * (n / total_rows);
            if (decrease > best.decrease + 1e-15 ||
                (!best.found && decrease > 1e-15)) {
                best.found = true;
                best.feature = f;
                best.threshold = 0.5 * (v + v_next);
                best.decrease = decrease;
            }
        }
    }
    return best;
}

inline int grow(RegressionTree& tree, const Eigen::MatrixXd& x,
                const Eigen::VectorXd& y, std::vector<int>& rows, int depth,
                const ForestParams& params, int n_features_per_split,
                double total_rows, Rng& rng) {
    const auto n = static_cast<double>(rows.size());
    double sum = 0.0, sq = 0.0;
    for (int r : rows) {
        sum += y(r);
        sq += y(r) * y(r);
    }
    const double mean = sum / n;
    const double variance = std::max(0.0, sq / n - mean * mean);

    TreeNode node;
    node.prediction = mean;
    node.n_samples = static_cast<int>(rows.size());
    node.impurity = variance;
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(node);

    const bool depth_ok = params.max_depth < 0 || depth < params.max_depth;
    if (!depth_ok || rows.size() < 2 * static_cast<std::size_t>(params.min_leaf) ||
        variance <= 1e-15)
        return node_id;

    // sample candidate features without replacement
    std::vector<int> all_features(static_cast<std::size_t>(x.cols()));
    std::iota(all_features.begin(), all_features.end(), 0);
    shuffle(all_features, rng);
    all_features.resize(static_cast<std::size_t>(
        std::min<int>(n_features_per_split, static_cast<int>(x.cols()))));
    std::sort(all_features.begin(), all_features.end());

    const auto split = best_split(x, y, rows, all_features, params.min_leaf,
                                  variance, total_rows);
    if (!split.found) return node_id;

    std::vector<int> left_rows, right_rows;
    for (int r : rows) {
        if (x(r, split.feature) < split.threshold)
            left_rows.push_back(r);
        else
            right_rows.push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    const int left_id = grow(tree, x, y, left_rows, depth + 1, params,
                             n_features_per_split, total_rows, rng);
    const int right_id = grow(tree, x, y, right_rows, depth + 1, params,
                              n_features_per_split, total_rows, rng);
    auto& nd = tree.nodes[static_cast<std::size_t>(node_id)];
    nd.split_feature = split.feature;
    nd.split_threshold = split.threshold;
    nd.left = left_id;
    nd.right = right_id;
    nd.impurity_decrease = split.decrease;
    return node_id;
}

}  // namespace detail

inline RegressionTree fit_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               const ForestParams& params, std::uint64_t seed) {
    if (x.rows() == 0) throw std::runtime_error("fit_tree: empty input");
    Rng rng(seed);
    std::vector<int> rows;
    const auto m = x.rows();
    rows.reserve(static_cast<std::size_t>(m));
    if (params.bootstrap) {
        for (Eigen::Index i = 0; i < m; ++i)
            rows.push_back(static_cast<int>(
                rng.below(static_cast<std::uint64_t>(m))));
    } else {
        for (Eigen::Index i = 0; i < m; ++i) rows.push_back(static_cast<int>(i));
    }
    const int fps = params.feature_subsample > 0
                        ? params.feature_subsample
                        : static_cast<int>(
                              std::ceil(static_cast<double>(x.cols()) / 3.0));
    RegressionTree tree;
    detail::grow(tree, x, y, rows, 0, params, fps,
                 static_cast<double>(rows.size()), rng);
    return tree;
}

struct RandomForest {
    std::vector<RegressionTree> trees;
    Eigen::Index n_features = 0;

    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const {
        if (x.cols() != n_features)
            throw std::runtime_error("forest predict: column count mismatch");
        Eigen::VectorXd out = Eigen::VectorXd::Zero(x.rows());
        for (const auto& t : trees)
            for (Eigen::Index i = 0; i < x.rows(); ++i)
                out(i) += t.predict_row(x.row(i));
        return out / static_cast<double>(trees.size());
    }
};

inline RandomForest fit_random_forest(const Eigen::MatrixXd& x,
                                      const Eigen::VectorXd& y,
                                      const ForestParams& params,
                                      std::uint64_t seed) {
    if (x.rows() == 0 || y.size() != x.rows())
        throw std::runtime_error("fit_random_forest: empty or mismatched input");
    RandomForest forest;
    forest.n_features = x.cols();
    forest.trees.resize(static_cast<std::size_t>(params.n_trees));

    // per-tree derived seeds; trees are independent
    Rng base(seed);
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(params.n_trees));
    for (auto& s : seeds) s = base.next_u64();

    const unsigned n_threads =
        std::min<unsigned>(std::thread::hardware_concurrency(),
                           static_cast<unsigned>(params.n_trees));
    if (n_threads <= 1) {
        for (int t = 0; t < params.n_trees; ++t)
            forest.trees[static_cast<std::size_t>(t)] =
                fit_tree(x, y, params, seeds[static_cast<std::size_t>(t)]);
    } else {
        std::vector<std::thread> workers;
        for (unsigned w = 0; w < n_threads; ++w) {
            workers.emplace_back([&, w] {
                for (int t = static_cast<int>(w); t < params.n_trees;
                     t += static_cast<int>(n_threads))
                    forest.trees[static_cast<std::size_t>(t)] =
                        fit_tree(x, y, params, seeds[static_cast<std::size_t>(t)]);
            });
        }
        for (auto& th : workers) th.join();
    }
    return forest;
}

// Mean Decrease in Impurity: per tree, sum the impurity decreases by split
// feature (already weighted by node sample fraction), normalize per tree,
// then average over trees. A forest with no impurity to reduce reports the
// uniform vector.
inline Eigen::VectorXd mdi_importance(const RandomForest& forest) {
    const auto d = forest.n_features;
    Eigen::VectorXd total = Eigen::VectorXd::Zero(d);
    int contributing = 0;
    for (const auto& tree : forest.trees) {
        Eigen::VectorXd per_tree = Eigen::VectorXd::Zero(d);
        for (const auto& nd : tree.nodes)
            if (nd.left >= 0) per_tree(nd.split_feature) += nd.impurity_decrease;
        const double s = per_tree.sum();
        if (s > 0.0) {
            total += per_tree / s;
            ++contributing;
        }
    }
    if (contributing == 0)
        return Eigen::VectorXd::Constant(d, 1.0 / static_cast<double>(d));
    Eigen::VectorXd out = total / static_cast<double>(contributing);
    return out / out.sum();
}

// MDI averaged over several independently seeded forests.
inline Eigen::VectorXd averaged_importances(const Eigen::MatrixXd& x,
                                            const Eigen::VectorXd& y,
                                            const ForestParams& params,
                                            std::uint64_t base_seed,
                                            int repeats) {
    if (repeats < 1) throw std::runtime_error("averaged_importances: repeats >= 1");
    Eigen::VectorXd total = Eigen::VectorXd::Zero(x.cols());
    for (int t = 0; t < repeats; ++t)
        total += mdi_importance(fit_random_forest(
            x, y, params, base_seed + static_cast<std::uint64_t>(t)));
    return total / static_cast<double>(repeats);
}

// Argmax of the elementwise mean of the two importance vectors; ties break
// toward the lowest index.
inline int select_binning_feature(const Eigen::VectorXd& importance_motor,
                                  const Eigen::VectorXd& importance_total) {
    if (importance_motor.size() != importance_total.size())
        throw std::runtime_error("select_binning_feature: length mismatch");
    const Eigen::VectorXd combined =
        0.5 * (importance_motor + importance_total);
    int best = 0;
    for (Eigen::Index j = 1; j < combined.size(); ++j)
        if (combined(j) > combined(best)) best = static_cast<int>(j);
    return best;
}

}  // namespace noro
