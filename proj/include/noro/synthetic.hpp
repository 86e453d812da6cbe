#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "noro/dataset.hpp"
#include "noro/rng.hpp"

namespace noro {

// Deterministic surrogate telemonitoring dataset with the canonical schema:
// 42 subjects, 16 speech features at their real-world scales, two UPDRS
// targets. Two latent factors drive the columns; DFA is the cleanest proxy
// of the severity factor, so it dominates feature importance for both
// targets, and features are strongly subject-correlated.
struct SyntheticParams {
    Eigen::Index rows = 5875;
    int subjects = 42;
    std::uint64_t seed = 7;
    double motor_noise = 7.5;  // residual std of Motor UPDRS
    double total_noise = 9.0;  // residual std of Total UPDRS
};

inline Dataset make_synthetic_dataset(const SyntheticParams& p = {}) {
    Rng rng(p.seed);
    Dataset ds;
    const auto m = p.rows;
    ds.features.resize(m, kNumFeatures);
    ds.motor.resize(m);
    ds.total.resize(m);
    ds.subject_ids.resize(static_cast<std::size_t>(m));
    ds.age.resize(static_cast<std::size_t>(m));
    ds.sex.resize(static_cast<std::size_t>(m));
    ds.test_time.resize(static_cast<std::size_t>(m));
    ds.names = feature_names();

    // subject-level state: four broad disease stages with within-stage
    // spread, plus an independent voice-quality factor
    std::vector<double> severity(static_cast<std::size_t>(p.subjects));
    std::vector<double> voice_quality(static_cast<std::size_t>(p.subjects));
    std::vector<double> ages(static_cast<std::size_t>(p.subjects));
    std::vector<double> sexes(static_cast<std::size_t>(p.subjects));
    for (int u = 0; u < p.subjects; ++u) {
        severity[static_cast<std::size_t>(u)] =
            0.70 * (u % 4 - 1.5) + rng.gaussian(0.0, 0.25);
        voice_quality[static_cast<std::size_t>(u)] =
            0.55 * (u / 4 % 4 - 1.5) + rng.gaussian(0.0, 0.10);
        ages[static_cast<std::size_t>(u)] = std::floor(rng.uniform(36.0, 86.0));
        sexes[static_cast<std::size_t>(u)] = rng.below(2) ? 1.0 : 0.0;
    }

    // rows per subject: near-even split of m
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(p.subjects),
                                     m / p.subjects);
    for (Eigen::Index r = 0; r < m % p.subjects; ++r)
        ++counts[static_cast<std::size_t>(r)];

    // lognormal jitter/shimmer/NHR block at typical magnitudes
    const double log_base[12] = {
        std::log(6.0e-3),  // Jitter(%)
        std::log(4.5e-5),  // Jitter(Abs)
        std::log(3.0e-3),  // Jitter:RAP
        std::log(3.3e-3),  // Jitter:PPQ5
        std::log(9.0e-3),  // Jitter:DDP
        std::log(3.4e-2),  // Shimmer
        std::log(3.1e-1),  // Shimmer(dB)
        std::log(1.7e-2),  // Shimmer:APQ3
        std::log(2.0e-2),  // Shimmer:APQ5
        std::log(2.7e-2),  // Shimmer:APQ11
        std::log(5.1e-2),  // Shimmer:DDA
        std::log(3.2e-2),  // NHR
    };
    const double kG1Load = 0.80, kG2Load = 0.22, kRowNoise = 0.32;

    Eigen::Index row = 0;
    for (int u = 0; u < p.subjects; ++u) {
        double drift = 0.0;
        double t = rng.uniform(0.0, 5.0);
        for (Eigen::Index r = 0; r < counts[static_cast<std::size_t>(u)]; ++r) {
            drift += rng.gaussian(0.0, 0.005);  // slow severity progression
            t += rng.uniform(0.8, 1.8);
            const double g1 = severity[static_cast<std::size_t>(u)] + drift +
                              rng.gaussian(0.0, 0.11);
            const double g2 = voice_quality[static_cast<std::size_t>(u)] +
                              rng.gaussian(0.0, 0.20);

            for (int j = 0; j < 12; ++j)
                ds.features(row, j) =
                    std::exp(log_base[j] + kG1Load * g1 + kG2Load * g2 +
                             rng.gaussian(0.0, kRowNoise));
            // HNR (dB scale, decreases with severity)
            ds.features(row, 12) =
                21.7 - 3.0 * g1 - 0.5 * g2 + rng.gaussian(0.0, 2.0);
            // RPDE
            ds.features(row, 13) =
                0.54 + 0.09 * std::tanh(0.5 * g1 + rng.gaussian(0.0, 0.25));
            // DFA: the cleanest severity proxy
            ds.features(row, 14) =
                0.62 + 0.10 * std::tanh(0.25 * g1 + rng.gaussian(0.0, 0.015));
            // PPE
            ds.features(row, 15) =
                0.22 + 0.045 * (0.55 * g1 + rng.gaussian(0.0, 0.30));

            ds.motor(row) = 21.0 + 7.5 * g1 + 1.8 * g2 +
                            rng.gaussian(0.0, p.motor_noise);
            ds.total(row) = 27.0 + 9.5 * g1 + 2.2 * g2 +
                            rng.gaussian(0.0, p.total_noise);

            ds.subject_ids[static_cast<std::size_t>(row)] = u + 1;
            ds.age[static_cast<std::size_t>(row)] = ages[static_cast<std::size_t>(u)];
            ds.sex[static_cast<std::size_t>(row)] = sexes[static_cast<std::size_t>(u)];
            ds.test_time[static_cast<std::size_t>(row)] = t;
            ++row;
        }
    }
    return ds;
}

inline std::string dataset_to_csv(const Dataset& ds) {
    std::ostringstream out;
    const auto& cols = csv_columns();
    for (std::size_t j = 0; j < cols.size(); ++j)
        out << cols[j] << (j + 1 < cols.size() ? "," : "\n");
    out << std::setprecision(12);
    for (Eigen::Index i = 0; i < ds.rows(); ++i) {
        out << ds.subject_ids[static_cast<std::size_t>(i)] << ','
            << ds.age[static_cast<std::size_t>(i)] << ','
            << ds.sex[static_cast<std::size_t>(i)] << ','
            << ds.test_time[static_cast<std::size_t>(i)] << ','
            << ds.motor(i) << ',' << ds.total(i);
        for (int j = 0; j < kNumFeatures; ++j) out << ',' << ds.features(i, j);
        out << '\n';
    }
    return out.str();
}

inline void write_csv(const Dataset& ds, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << dataset_to_csv(ds);
}

inline Dataset load_csv_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open dataset: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_csv(ss.str());
}

}  // namespace noro
