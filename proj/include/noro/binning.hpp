#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace noro {

// Equal-width binning of one feature column. Bins are 1-indexed.
struct BinningModel {
    int feature_index = -1;
    int k = 1;
    double lo = 0.0;
    double hi = 0.0;
    bool degenerate = false;  // hi == lo on the fit column

    double width() const { return (hi - lo) / static_cast<double>(k); }
};

inline BinningModel fit_binning(const Eigen::VectorXd& column, int k,
                                int feature_index = -1) {
    if (column.size() == 0) throw std::runtime_error("fit_binning: empty column");
    if (k < 1) throw std::runtime_error("fit_binning: K must be >= 1");
    BinningModel m;
    m.feature_index = feature_index;
    m.k = k;
    m.lo = column.minCoeff();
    m.hi = column.maxCoeff();
    m.degenerate = (m.hi == m.lo);
    return m;
}

// Half-open intervals [lo+(k-1)w, lo+kw); anything at or above the last edge
// lands in bin K, anything below lo clamps to bin 1.
inline int assign_bin(const BinningModel& m, double value) {
    if (m.degenerate) return m.k;
    if (value < m.lo) return 1;
    const double w = m.width();
    const int k = 1 + static_cast<int>(std::floor((value - m.lo) / w));
    return k < 1 ? 1 : (k > m.k ? m.k : k);
}

inline std::vector<int> assign_bins(const BinningModel& m,
                                    const Eigen::VectorXd& column) {
    std::vector<int> out(static_cast<std::size_t>(column.size()));
    for (Eigen::Index i = 0; i < column.size(); ++i)
        out[static_cast<std::size_t>(i)] = assign_bin(m, column(i));
    return out;
}

// Per-bin means of the encoded rows. An empty bin takes the center of the
// nearest non-empty bin (index distance); with two equidistant non-empty
// bins it takes the average of their centers.
inline Eigen::MatrixXd compute_bin_centers(const Eigen::MatrixXd& h,
                                           const std::vector<int>& assignment,
                                           int k) {
    if (h.rows() == 0) throw std::runtime_error("compute_bin_centers: no rows");
    if (static_cast<Eigen::Index>(assignment.size()) != h.rows())
        throw std::runtime_error("compute_bin_centers: assignment size mismatch");

    Eigen::MatrixXd centers = Eigen::MatrixXd::Zero(k, h.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
        const int b = assignment[static_cast<std::size_t>(i)];
        if (b < 1 || b > k)
            throw std::runtime_error("compute_bin_centers: bin out of range");
        centers.row(b - 1) += h.row(i);
        ++counts[static_cast<std::size_t>(b - 1)];
    }
    for (int b = 0; b < k; ++b)
        if (counts[static_cast<std::size_t>(b)] > 0)
            centers.row(b) /= counts[static_cast<std::size_t>(b)];

    for (int b = 0; b < k; ++b) {
        if (counts[static_cast<std::size_t>(b)] > 0) continue;
        int left = -1, right = -1;
        for (int d = 1; d < k; ++d) {
            if (left < 0 && b - d >= 0 && counts[static_cast<std::size_t>(b - d)] > 0)
                left = b - d;
            if (right < 0 && b + d < k && counts[static_cast<std::size_t>(b + d)] > 0)
                right = b + d;
            if (left >= 0 || right >= 0) {
                if (left >= 0 && right >= 0 && (b - left) == (right - b))
                    centers.row(b) =
                        0.5 * (centers.row(left) + centers.row(right));
                else if (left >= 0 && (right < 0 || (b - left) < (right - b)))
                    centers.row(b) = centers.row(left);
                else
                    centers.row(b) = centers.row(right);
                break;
            }
        }
    }
    return centers;
}

}  // namespace noro
