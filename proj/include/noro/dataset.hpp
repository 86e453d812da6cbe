#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "noro/rng.hpp"

namespace noro {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr int kNumFeatures = 16;

inline const std::array<std::string, 22>& csv_columns() {
    static const std::array<std::string, 22> cols = {
        "subject#",      "age",           "sex",           "test_time",
        "motor_UPDRS",   "total_UPDRS",   "Jitter(%)",     "Jitter(Abs)",
        "Jitter:RAP",    "Jitter:PPQ5",   "Jitter:DDP",    "Shimmer",
        "Shimmer(dB)",   "Shimmer:APQ3",  "Shimmer:APQ5",  "Shimmer:APQ11",
        "Shimmer:DDA",   "NHR",           "HNR",           "RPDE",
        "DFA",           "PPE"};
    return cols;
}

inline std::vector<std::string> feature_names() {
    const auto& cols = csv_columns();
    return std::vector<std::string>(cols.begin() + 6, cols.end());
}

struct Dataset {
    Matrix features;   // M x 16 speech features
    Vector motor;      // Motor UPDRS
    Vector total;      // Total UPDRS
    std::vector<int> subject_ids;
    std::vector<std::string> names;  // feature column names
    // metadata, never part of the feature matrix
    std::vector<double> age, sex, test_time;

    Eigen::Index rows() const { return features.rows(); }
};

struct NormalizationStats {
    Vector feature_means;
    Vector feature_stds;
    std::vector<bool> degenerate;  // per column: std was < 1e-12, forced to 1
    double label_mean = 0.0;
    double label_std = 1.0;
    bool label_degenerate = false;
};

struct FoldSplit {
    int fold_index = 0;
    std::vector<int> train_rows;
    std::vector<int> valid_rows;
    std::vector<int> test_rows;
};

namespace detail {

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

inline std::string strip(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_cell(const std::string& raw, std::size_t row,
                         const std::string& col) {
    const std::string s = strip(raw);
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw std::runtime_error("non-numeric cell at row " +
                                 std::to_string(row) + ", column " + col +
                                 ": '" + s + "'");
    }
    if (pos != s.size() || !std::isfinite(v))
        throw std::runtime_error("non-numeric cell at row " +
                                 std::to_string(row) + ", column " + col +
                                 ": '" + s + "'");
    return v;
}

}  // namespace detail

// Parses the telemonitoring CSV. Header must carry the canonical 22 columns
// in order; rows are kept in file order.
inline Dataset parse_csv(const std::string& text) {
    std::stringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty file");

    const auto header = detail::split_line(line);
    const auto& canon = csv_columns();
    if (header.size() != canon.size())
        throw std::runtime_error("expected " + std::to_string(canon.size()) +
                                 " columns, got " +
                                 std::to_string(header.size()));
    for (std::size_t j = 0; j < canon.size(); ++j) {
        if (detail::strip(header[j]) != canon[j])
            throw std::runtime_error("missing or misplaced column: expected '" +
                                     canon[j] + "' at position " +
                                     std::to_string(j) + ", got '" +
                                     detail::strip(header[j]) + "'");
    }

    std::vector<std::array<double, 22>> rows;
    std::size_t row_no = 0;
    while (std::getline(in, line)) {
        ++row_no;
        if (detail::strip(line).empty()) continue;
        const auto cells = detail::split_line(line);
        if (cells.size() != canon.size())
            throw std::runtime_error("row " + std::to_string(row_no) + " has " +
                                     std::to_string(cells.size()) +
                                     " cells, expected " +
                                     std::to_string(canon.size()));
        std::array<double, 22> vals{};
        for (std::size_t j = 0; j < canon.size(); ++j)
            vals[j] = detail::parse_cell(cells[j], row_no, canon[j]);
        rows.push_back(vals);
    }
    if (rows.empty()) throw std::runtime_error("no data rows");

    Dataset ds;
    const auto m = static_cast<Eigen::Index>(rows.size());
    ds.features.resize(m, kNumFeatures);
    ds.motor.resize(m);
    ds.total.resize(m);
    ds.subject_ids.resize(rows.size());
    ds.age.resize(rows.size());
    ds.sex.resize(rows.size());
    ds.test_time.resize(rows.size());
    ds.names = feature_names();
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        ds.subject_ids[static_cast<std::size_t>(i)] = static_cast<int>(r[0]);
        ds.age[static_cast<std::size_t>(i)] = r[1];
        ds.sex[static_cast<std::size_t>(i)] = r[2];
        ds.test_time[static_cast<std::size_t>(i)] = r[3];
        ds.motor(i) = r[4];
        ds.total(i) = r[5];
        for (int j = 0; j < kNumFeatures; ++j) ds.features(i, j) = r[6 + j];
    }
    return ds;
}

// Population convention (divide by M); constant columns get std 1 and a flag.
inline NormalizationStats zscore_fit(const Matrix& x, const Vector& labels) {
    if (x.rows() < 2) throw std::runtime_error("zscore_fit needs at least 2 rows");
    if (labels.size() != x.rows())
        throw std::runtime_error("label length does not match matrix rows");
    const double m = static_cast<double>(x.rows());

    NormalizationStats st;
    st.feature_means = x.colwise().mean();
    st.feature_stds.resize(x.cols());
    st.degenerate.assign(static_cast<std::size_t>(x.cols()), false);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double var =
            (x.col(j).array() - st.feature_means(j)).square().sum() / m;
        double sd = std::sqrt(var);
        if (sd < 1e-12) {
            sd = 1.0;
            st.degenerate[static_cast<std::size_t>(j)] = true;
        }
        st.feature_stds(j) = sd;
    }

    st.label_mean = labels.mean();
    const double lvar = (labels.array() - st.label_mean).square().sum() / m;
    st.label_std = std::sqrt(lvar);
    if (st.label_std < 1e-12) {
        st.label_std = 1.0;
        st.label_degenerate = true;
    }
    return st;
}

inline Matrix zscore_apply(const Matrix& x, const NormalizationStats& st) {
    if (x.cols() != st.feature_means.size())
        throw std::runtime_error("zscore_apply: column count mismatch");
    return (x.rowwise() - st.feature_means.transpose()).array().rowwise() /
           st.feature_stds.transpose().array();
}

inline Matrix zscore_invert(const Matrix& z, const NormalizationStats& st) {
    if (z.cols() != st.feature_means.size())
        throw std::runtime_error("zscore_invert: column count mismatch");
    return (z.array().rowwise() * st.feature_stds.transpose().array())
               .rowwise() +
           st.feature_means.transpose().array();
}

inline Vector zscore_apply_labels(const Vector& y, const NormalizationStats& st) {
    return (y.array() - st.label_mean) / st.label_std;
}

inline Vector zscore_invert_labels(const Vector& z, const NormalizationStats& st) {
    return z.array() * st.label_std + st.label_mean;
}

// One seeded shuffle fixes the train+valid pool and the test set; the 10
// folds rotate which block of the pool is validation. Canonical counts are
// 2700/300/2875; other sizes scale proportionally.
inline std::vector<FoldSplit> split_folds(Eigen::Index m, std::uint64_t seed,
                                          int n_folds = 10) {
    if (m < 20) throw std::runtime_error("split_folds needs at least 20 rows");

    Eigen::Index pool_size;
    if (m == 5875) {
        pool_size = 3000;
    } else {
        pool_size = static_cast<Eigen::Index>(
            std::llround(static_cast<double>(m) * 3000.0 / 5875.0));
        pool_size -= pool_size % n_folds;  // whole validation blocks
        if (pool_size < n_folds) pool_size = n_folds;
    }
    const Eigen::Index block = pool_size / n_folds;

    std::vector<int> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    shuffle(order, rng);

    const std::vector<int> pool(order.begin(), order.begin() + pool_size);
    const std::vector<int> test(order.begin() + pool_size, order.end());

    std::vector<FoldSplit> folds;
    folds.reserve(static_cast<std::size_t>(n_folds));
    for (int f = 0; f < n_folds; ++f) {
        FoldSplit fs;
        fs.fold_index = f;
        fs.test_rows = test;
        const auto vb = static_cast<std::size_t>(f) * static_cast<std::size_t>(block);
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (i >= vb && i < vb + static_cast<std::size_t>(block))
                fs.valid_rows.push_back(pool[i]);
            else
                fs.train_rows.push_back(pool[i]);
        }
        folds.push_back(std::move(fs));
    }
    return folds;
}

inline Matrix select_rows(const Matrix& x, const std::vector<int>& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
    return out;
}

inline Vector select_rows(const Vector& v, const std::vector<int>& rows) {
    Vector out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = v(rows[i]);
    return out;
}

}  // namespace noro
