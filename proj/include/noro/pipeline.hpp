#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "noro/binning.hpp"
#include "noro/dataset.hpp"
#include "noro/encoder.hpp"
#include "noro/metrics.hpp"
#include "noro/noise.hpp"
#include "noro/regressors.hpp"

namespace noro {

using json = nlohmann::ordered_json;

enum class Target { kMotor, kTotal };

inline std::string to_string(Target t) {
    return t == Target::kMotor ? "motor" : "total";
}

struct ExperimentConfig {
    std::string dataset_path;
    std::string target = "both";  // motor | total | both
    int k = 5;
    std::vector<double> snr_list = {kNoNoise};  // kNoNoise = no extra noise
    std::vector<RegressorKind> models = {
        RegressorKind::kRidge, RegressorKind::kKnn, RegressorKind::kNeural,
        RegressorKind::kBaggedTrees, RegressorKind::kGpr};
    std::map<std::string, std::map<std::string, double>> model_overrides;
    int trials = 10;
    std::uint64_t base_seed = 2024;
    std::string output_dir = ".";
    int fold_limit = 10;  // evaluate the first N folds
    bool denormalize = false;
    bool subject_disjoint_split = false;
    bool paired_test = false;  // paired t instead of Welch
    bool power_scope_train = false;  // noise powers from the train split only
    AlphaConvention alpha_convention = AlphaConvention::kAnchorRow;
    int encoder_epochs_per_fold = 200;
};

inline std::string snr_label(double snr) {
    if (std::isinf(snr)) return "none";
    std::ostringstream ss;
    ss << snr;
    return ss.str();
}

struct CellKey {
    std::string target;
    std::string model;
    double snr;
    std::string variant;  // "baseline" | "noro"

    bool operator<(const CellKey& o) const {
        return std::tie(target, model, snr, variant) <
               std::tie(o.target, o.model, o.snr, o.variant);
    }
};

struct RelativeCell {
    std::string target, model, metric;
    double snr;
    RelativeErrorEstimate estimate;
    SignificanceResult significance;
};

struct ClusterCell {
    std::string space;  // "original" | "augmented"
    bool noisy = false;
    double snr = kNoNoise;
    double silhouette = 0.0;
    double calinski_harabasz = 0.0;
};

struct PcaPoint {
    std::string space;
    bool noisy;
    double pc1, pc2;
    int bin;
};

struct ExperimentReport {
    json config_echo;
    std::map<CellKey, std::vector<ErrorTriple>> trials;  // per-trial, fold-avg
    std::map<CellKey, TrialSummary> cells;
    std::vector<RelativeCell> relative;
    std::vector<ClusterCell> cluster_quality;
    std::vector<PcaPoint> pca;
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a,
                              std::uint64_t b) {
    std::uint64_t s = base ^ (a * 0x9e3779b97f4a7c15ULL) ^
                      (b * 0xc2b2ae3d27d4eb4fULL);
    return splitmix64(s);
}

inline std::vector<FoldSplit> make_splits(const Dataset& ds,
                                          const ExperimentConfig& cfg) {
    if (!cfg.subject_disjoint_split)
        return split_folds(ds.rows(), cfg.base_seed);
    // group rows by subject, shuffle subjects, fill the pool subject by
    // subject until it reaches the target size
    std::map<int, std::vector<int>> by_subject;
    for (Eigen::Index i = 0; i < ds.rows(); ++i)
        by_subject[ds.subject_ids[static_cast<std::size_t>(i)]].push_back(
            static_cast<int>(i));
    std::vector<int> subjects;
    for (const auto& [s, _] : by_subject) subjects.push_back(s);
    Rng rng(cfg.base_seed);
    shuffle(subjects, rng);
    const auto pool_target = static_cast<std::size_t>(
        std::llround(static_cast<double>(ds.rows()) * 3000.0 / 5875.0));
    std::vector<int> pool, test;
    for (int s : subjects) {
        auto& rows = by_subject[s];
        if (pool.size() < pool_target)
            pool.insert(pool.end(), rows.begin(), rows.end());
        else
            test.insert(test.end(), rows.begin(), rows.end());
    }
    shuffle(pool, rng);
    const std::size_t block = pool.size() / 10;
    std::vector<FoldSplit> folds;
    for (int f = 0; f < 10; ++f) {
        FoldSplit fs;
        fs.fold_index = f;
        fs.test_rows = test;
        const std::size_t vb = static_cast<std::size_t>(f) * block;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (i >= vb && i < vb + block)
                fs.valid_rows.push_back(pool[i]);
            else
                fs.train_rows.push_back(pool[i]);
        }
        folds.push_back(std::move(fs));
    }
    return folds;
}

inline ErrorTriple average_triples(const std::vector<ErrorTriple>& v) {
    ErrorTriple out;
    for (const auto& t : v) {
        out.rmse += t.rmse;
        out.mae += t.mae;
        out.median_ae += t.median_ae;
    }
    const double n = static_cast<double>(v.size());
    out.rmse /= n;
    out.mae /= n;
    out.median_ae /= n;
    return out;
}

}  // namespace detail

// Trains the encoder on the clean normalized pool with the 10-fold
// validation rotation. Normalization stats come from the pool itself.
inline EncoderWeights train_encoder_on_dataset(const Dataset& ds,
                                               int binning_feature,
                                               const ExperimentConfig& cfg,
                                               std::vector<EpochLogEntry>* log = nullptr) {
    const auto folds = detail::make_splits(ds, cfg);
    // pool = train+valid of any fold
    std::vector<int> pool = folds[0].train_rows;
    pool.insert(pool.end(), folds[0].valid_rows.begin(),
                folds[0].valid_rows.end());

    const Matrix pool_x = select_rows(ds.features, pool);
    const NormalizationStats stats =
        zscore_fit(pool_x, select_rows(ds.motor, pool));
    const Matrix pool_z = zscore_apply(pool_x, stats);

    // fold indices relative to the pool matrix
    std::map<int, int> pos;
    for (std::size_t i = 0; i < pool.size(); ++i)
        pos[pool[i]] = static_cast<int>(i);
    std::vector<std::vector<int>> fold_train, fold_valid;
    for (const auto& f : folds) {
        std::vector<int> tr, va;
        for (int r : f.train_rows) tr.push_back(pos[r]);
        for (int r : f.valid_rows) va.push_back(pos[r]);
        fold_train.push_back(std::move(tr));
        fold_valid.push_back(std::move(va));
    }

    const BinningModel binning =
        fit_binning(pool_z.col(binning_feature), cfg.k, binning_feature);

    TrainConfig tc;
    tc.k = cfg.k;
    tc.epochs_per_fold = cfg.encoder_epochs_per_fold;
    tc.folds = static_cast<int>(folds.size());
    tc.seed = cfg.base_seed;
    tc.alpha_convention = cfg.alpha_convention;
    return train_encoder(pool_z, fold_train, fold_valid, binning, tc, log);
}

inline ExperimentReport run_pipeline(const Dataset& ds,
                                     const EncoderWeights& encoder,
                                     const ExperimentConfig& cfg) {
    if (cfg.trials < 1) throw std::runtime_error("run_pipeline: trials >= 1");
    if (cfg.models.empty()) throw std::runtime_error("run_pipeline: no models");

    const auto folds = detail::make_splits(ds, cfg);
    const int n_folds = std::min<int>(cfg.fold_limit,
                                      static_cast<int>(folds.size()));

    std::vector<Target> targets;
    if (cfg.target == "motor" || cfg.target == "both")
        targets.push_back(Target::kMotor);
    if (cfg.target == "total" || cfg.target == "both")
        targets.push_back(Target::kTotal);
    if (targets.empty())
        throw std::runtime_error("run_pipeline: target must be motor|total|both");

    ExperimentReport report;

    for (double snr : cfg.snr_list) {
        for (int trial = 0; trial < cfg.trials; ++trial) {
            const std::uint64_t trial_seed =
                cfg.base_seed + static_cast<std::uint64_t>(trial);
            // per (target, model, variant): fold triples to average
            std::map<CellKey, std::vector<ErrorTriple>> fold_triples;

            for (int f = 0; f < n_folds; ++f) {
                const auto& split = folds[static_cast<std::size_t>(f)];
                const Matrix train_x_raw = select_rows(ds.features, split.train_rows);
                const Matrix test_x_raw = select_rows(ds.features, split.test_rows);

                for (Target target : targets) {
                    const Vector& labels =
                        target == Target::kMotor ? ds.motor : ds.total;
                    const Vector train_y_raw = select_rows(labels, split.train_rows);
                    const Vector test_y_raw = select_rows(labels, split.test_rows);

                    const NormalizationStats stats =
                        zscore_fit(train_x_raw, train_y_raw);
                    Matrix train_z = zscore_apply(train_x_raw, stats);
                    Matrix test_z = zscore_apply(test_x_raw, stats);
                    const Vector train_y = zscore_apply_labels(train_y_raw, stats);
                    const Vector test_y = zscore_apply_labels(test_y_raw, stats);

                    if (!std::isinf(snr)) {
                        const Eigen::VectorXd train_powers =
                            feature_power(train_z);
                        const Eigen::VectorXd test_powers =
                            cfg.power_scope_train ? train_powers
                                                  : feature_power(test_z);
                        train_z = inject(train_z,
                                         make_noise_spec(
                                             train_powers, snr,
                                             detail::mix_seed(trial_seed,
                                                              static_cast<std::uint64_t>(f), 1)));
                        test_z = inject(test_z,
                                        make_noise_spec(
                                            test_powers, snr,
                                            detail::mix_seed(trial_seed,
                                                             static_cast<std::uint64_t>(f), 2)));
                    }

                    const Matrix train_aug = augment(encoder.w, train_z);
                    const Matrix test_aug = augment(encoder.w, test_z);

                    for (RegressorKind kind : cfg.models) {
                        RegressorSpec spec;
                        spec.kind = kind;
                        spec.seed = cfg.base_seed;
                        auto ov = cfg.model_overrides.find(to_string(kind));
                        if (ov != cfg.model_overrides.end()) spec.hyper = ov->second;

                        for (bool use_aug : {false, true}) {
                            const Matrix& tr = use_aug ? train_aug : train_z;
                            const Matrix& te = use_aug ? test_aug : test_z;
                            ErrorTriple triple;
                            try {
                                const auto model = fit(spec, tr, train_y);
                                Vector pred = model->predict(te);
                                Vector y = test_y;
                                if (cfg.denormalize) {
                                    pred = zscore_invert_labels(pred, stats);
                                    y = test_y_raw;
                                }
                                triple = error_triple(y, pred);
                            } catch (const std::exception& e) {
                                throw std::runtime_error(
                                    "pipeline failure (fold " + std::to_string(f) +
                                    ", model " + to_string(kind) + ", snr " +
                                    snr_label(snr) + ", trial " +
                                    std::to_string(trial) + "): " + e.what());
                            }
                            CellKey key{to_string(target), to_string(kind), snr,
                                        use_aug ? "noro" : "baseline"};
                            fold_triples[key].push_back(triple);
                        }
                    }
                }
            }
            for (auto& [key, triples] : fold_triples)
                report.trials[key].push_back(detail::average_triples(triples));
        }
    }

    for (const auto& [key, triples] : report.trials)
        report.cells[key] = aggregate_trials(triples);

    // relative error + significance per (target, model, snr, metric)
    for (const auto& [key, base_summary] : report.cells) {
        if (key.variant != "baseline") continue;
        CellKey aug_key = key;
        aug_key.variant = "noro";
        const auto it = report.cells.find(aug_key);
        if (it == report.cells.end()) continue;
        const auto& base_trials = report.trials.at(key);
        const auto& aug_trials = report.trials.at(aug_key);

        struct MetricAccess {
            const char* name;
            double ErrorTriple::* member;
            MetricStat TrialSummary::* stat;
        };
        const MetricAccess metrics[] = {
            {"rmse", &ErrorTriple::rmse, &TrialSummary::rmse},
            {"mae", &ErrorTriple::mae, &TrialSummary::mae},
            {"median_ae", &ErrorTriple::median_ae, &TrialSummary::median_ae}};
        for (const auto& m : metrics) {
            RelativeCell rc;
            rc.target = key.target;
            rc.model = key.model;
            rc.snr = key.snr;
            rc.metric = m.name;
            rc.estimate = relative_error(base_summary.*(m.stat),
                                         it->second.*(m.stat));
            if (base_trials.size() >= 2) {
                std::vector<double> a, b;
                for (const auto& t : base_trials) a.push_back(t.*(m.member));
                for (const auto& t : aug_trials) b.push_back(t.*(m.member));
                rc.significance = cfg.paired_test
                                      ? significance_flag_paired(a, b)
                                      : significance_flag(a, b);
            }
            report.relative.push_back(rc);
        }
    }

    // cluster quality + 2-D projection of the test features, clean and at
    // each requested SNR, in original and augmented space
    {
        const auto& split = folds[0];
        const Matrix train_x_raw = select_rows(ds.features, split.train_rows);
        const Matrix test_x_raw = select_rows(ds.features, split.test_rows);
        const NormalizationStats stats =
            zscore_fit(train_x_raw, select_rows(ds.motor, split.train_rows));
        const Matrix test_z = zscore_apply(test_x_raw, stats);
        const std::vector<int> bins = assign_bins(
            encoder.binning, test_z.col(encoder.binning.feature_index));

        auto add_space = [&](const Matrix& z, bool noisy, double snr) {
            const Matrix aug = augment(encoder.w, z);
            for (const auto& [space, pts] :
                 {std::pair<std::string, const Matrix*>{"original", &z},
                  {"augmented", &aug}}) {
                // metrics are computed on the full feature space; the 2-D
                // projection is emitted only for external plotting
                const Matrix proj = pca_2d(*pts);
                ClusterCell cc;
                cc.space = space;
                cc.noisy = noisy;
                cc.snr = snr;
                cc.silhouette = silhouette(*pts, bins);
                cc.calinski_harabasz = calinski_harabasz(*pts, bins);
                report.cluster_quality.push_back(cc);
                for (Eigen::Index i = 0; i < proj.rows(); ++i)
                    report.pca.push_back({space, noisy, proj(i, 0), proj(i, 1),
                                          bins[static_cast<std::size_t>(i)]});
            }
        };

        add_space(test_z, false, kNoNoise);
        for (double snr : cfg.snr_list) {
            if (std::isinf(snr)) continue;
            const Matrix noisy = inject(
                test_z, make_noise_spec(feature_power(test_z), snr,
                                        detail::mix_seed(cfg.base_seed, 0, 2)));
            add_space(noisy, true, snr);
        }
    }

    return report;
}

// ---------------------------------------------------------------------------
// serialization

inline json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["dataset_path"] = cfg.dataset_path;
    j["target"] = cfg.target;
    j["k"] = cfg.k;
    json snrs = json::array();
    for (double s : cfg.snr_list) snrs.push_back(snr_label(s));
    j["snr_list"] = snrs;
    json models = json::array();
    for (auto m : cfg.models) models.push_back(to_string(m));
    j["models"] = models;
    j["model_overrides"] = cfg.model_overrides;
    j["trials"] = cfg.trials;
    j["base_seed"] = cfg.base_seed;
    j["output_dir"] = cfg.output_dir;
    j["fold_limit"] = cfg.fold_limit;
    j["denormalize"] = cfg.denormalize;
    j["subject_disjoint_split"] = cfg.subject_disjoint_split;
    j["paired_test"] = cfg.paired_test;
    j["power_scope_train"] = cfg.power_scope_train;
    j["alpha_convention"] =
        cfg.alpha_convention == AlphaConvention::kAnchorRow ? "anchor_row"
                                                            : "symmetric";
    j["encoder_epochs_per_fold"] = cfg.encoder_epochs_per_fold;
    return j;
}

inline json report_to_json(const ExperimentReport& report) {
    json j;
    j["config_echo"] = report.config_echo;
    json cells = json::array();
    for (const auto& [key, s] : report.cells) {
        json c;
        c["target"] = key.target;
        c["model"] = key.model;
        c["snr"] = snr_label(key.snr);
        c["variant"] = key.variant;
        c["rmse"] = {{"mean", s.rmse.mean}, {"std", s.rmse.std}};
        c["mae"] = {{"mean", s.mae.mean}, {"std", s.mae.std}};
        c["median_ae"] = {{"mean", s.median_ae.mean}, {"std", s.median_ae.std}};
        c["trials"] = s.trials;
        cells.push_back(c);
    }
    j["per_cell"] = cells;
    json rel = json::array();
    for (const auto& r : report.relative) {
        json c;
        c["target"] = r.target;
        c["model"] = r.model;
        c["snr"] = snr_label(r.snr);
        c["metric"] = r.metric;
        c["delta_hat"] = r.estimate.delta_hat;
        c["sigma_hat"] = r.estimate.sigma_hat;
        c["significant"] = r.significance.significant;
        c["p"] = r.significance.p;
        rel.push_back(c);
    }
    j["relative"] = rel;
    json cq = json::array();
    for (const auto& c : report.cluster_quality) {
        json e;
        e["space"] = c.space;
        e["noisy"] = c.noisy;
        e["snr"] = snr_label(c.snr);
        e["silhouette"] = c.silhouette;
        e["ch"] = c.calinski_harabasz;
        cq.push_back(e);
    }
    j["cluster_quality"] = cq;
    return j;
}

inline std::string report_to_csv(const ExperimentReport& report) {
    std::ostringstream out;
    out << "target,model,snr,variant,rmse_mean,rmse_std,mae_mean,mae_std,"
           "median_ae_mean,median_ae_std,trials\n";
    out << std::setprecision(12);
    for (const auto& [key, s] : report.cells)
        out << key.target << ',' << key.model << ',' << snr_label(key.snr)
            << ',' << key.variant << ',' << s.rmse.mean << ',' << s.rmse.std
            << ',' << s.mae.mean << ',' << s.mae.std << ',' << s.median_ae.mean
            << ',' << s.median_ae.std << ',' << s.trials << '\n';
    return out.str();
}

inline std::string pca_to_csv(const ExperimentReport& report) {
    std::ostringstream out;
    out << "space,noisy,pc1,pc2,bin\n";
    out << std::setprecision(9);
    for (const auto& p : report.pca)
        out << p.space << ',' << (p.noisy ? 1 : 0) << ',' << p.pc1 << ','
            << p.pc2 << ',' << p.bin << '\n';
    return out.str();
}

inline json encoder_to_json(const EncoderWeights& enc) {
    json j;
    j["d"] = enc.w.rows();
    j["d_prime"] = enc.w.cols();
    j["k"] = enc.binning.k;
    j["feature_index"] = enc.binning.feature_index;
    j["lo"] = enc.binning.lo;
    j["hi"] = enc.binning.hi;
    json w = json::array();
    for (Eigen::Index r = 0; r < enc.w.rows(); ++r)
        for (Eigen::Index c = 0; c < enc.w.cols(); ++c)
            w.push_back(enc.w(r, c));
    j["weights"] = w;
    j["train_config"] = {
        {"epochs_per_fold", enc.config.epochs_per_fold},
        {"folds", enc.config.folds},
        {"learning_rate", enc.config.learning_rate},
        {"grad_clip", enc.config.grad_clip},
        {"alpha_convention",
         enc.config.alpha_convention == AlphaConvention::kAnchorRow
             ? "anchor_row"
             : "symmetric"}};
    j["seed"] = enc.config.seed;
    j["validation_loss"] = enc.validation_loss;
    return j;
}

inline EncoderWeights encoder_from_json(const json& j) {
    EncoderWeights enc;
    const Eigen::Index d = j.at("d");
    const Eigen::Index dp = j.at("d_prime");
    enc.w.resize(d, dp);
    const auto& w = j.at("weights");
    if (static_cast<Eigen::Index>(w.size()) != d * dp)
        throw std::runtime_error("encoder_from_json: weight count mismatch");
    for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index c = 0; c < dp; ++c)
            enc.w(r, c) = w[static_cast<std::size_t>(r * dp + c)];
    enc.binning.k = j.at("k");
    enc.binning.feature_index = j.at("feature_index");
    enc.binning.lo = j.at("lo");
    enc.binning.hi = j.at("hi");
    enc.binning.degenerate = (enc.binning.lo == enc.binning.hi);
    const auto& tc = j.at("train_config");
    enc.config.k = enc.binning.k;
    enc.config.epochs_per_fold = tc.at("epochs_per_fold");
    enc.config.folds = tc.at("folds");
    enc.config.learning_rate = tc.at("learning_rate");
    enc.config.grad_clip = tc.at("grad_clip");
    enc.config.alpha_convention =
        tc.at("alpha_convention") == "symmetric" ? AlphaConvention::kSymmetric
                                                 : AlphaConvention::kAnchorRow;
    enc.config.seed = j.at("seed");
    enc.validation_loss = j.at("validation_loss");
    return enc;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << text;
}

}  // namespace noro
