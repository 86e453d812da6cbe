// Acceptance harness: one pass/fail line per criterion, non-zero exit if
// any criterion fails. Criteria marked with a runtime budget also fail if
// they exceed it.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "noro/encoder.hpp"
#include "noro/forest.hpp"
#include "noro/metrics.hpp"
#include "noro/noise.hpp"
#include "noro/pipeline.hpp"
#include "noro/synthetic.hpp"

namespace fs = std::filesystem;
using namespace noro;

namespace {

int g_failures = 0;

class Criterion {
  public:
    Criterion(int id, std::string name, double budget_seconds)
        : id_(id), name_(std::move(name)), budget_(budget_seconds),
          start_(std::chrono::steady_clock::now()) {}

    void finish(bool ok, const std::string& detail) {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          start_)
                .count();
        const bool in_budget = budget_ <= 0.0 || secs < budget_;
        const bool pass = ok && in_budget;
        if (!pass) ++g_failures;
        std::printf("criterion %2d: %s  (%.1fs)  %s%s%s\n", id_,
                    pass ? "PASS" : "FAIL", secs, name_.c_str(),
                    detail.empty() ? "" : " — ", detail.c_str());
        std::fflush(stdout);
        if (ok && !in_budget) {
            std::printf("              runtime %.1fs exceeds budget %.0fs\n",
                        secs, budget_);
        }
    }

  private:
    int id_;
    std::string name_;
    double budget_;
    std::chrono::steady_clock::time_point start_;
};

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(4);
    ss << v;
    return ss.str();
}

// ---- criterion 1: distance-coefficient matrix properties -----------------

void criterion_alpha() {
    Criterion c(1, "alpha-matrix properties", 1.0);
    bool ok = true;
    std::string detail;
    for (int k = 1; k <= 50 && ok; ++k) {
        const Eigen::MatrixXd a = distance_coefficients(k);
        for (int m = 0; m < k && ok; ++m) {
            if (a(m, m) != 1.0) {
                ok = false;
                detail = "diagonal not 1 at K=" + std::to_string(k);
            }
            for (int n = 0; n < k && ok; ++n) {
                if (!(a(m, n) > 0.0)) {
                    ok = false;
                    detail = "non-positive entry at K=" + std::to_string(k);
                }
            }
            // monotone decay away from the anchor along the row
            for (int n = m + 1; n < k && ok; ++n)
                if (!(a(m, n) < a(m, n - 1))) {
                    ok = false;
                    detail = "right decay violated at K=" + std::to_string(k);
                }
            for (int n = m - 1; n >= 0 && ok; --n)
                if (!(a(m, n) < a(m, n + 1))) {
                    ok = false;
                    detail = "left decay violated at K=" + std::to_string(k);
                }
        }
    }
    if (ok) {
        const Eigen::MatrixXd a5 = distance_coefficients(5);
        if (std::abs(a5(0, 1) - 0.8) > 1e-12 ||
            std::abs(a5(2, 4) - 0.3) > 1e-12) {
            ok = false;
            detail = "spot values: alpha(1,2)=" + fmt(a5(0, 1)) +
                     " alpha(3,5)=" + fmt(a5(2, 4));
        } else {
            detail = "K=1..50; alpha(1,2)=0.8 alpha(3,5)=0.3";
        }
    }
    c.finish(ok, detail);
}

// ---- criterion 2: analytic gradient vs central finite differences --------

void criterion_gradient() {
    Criterion c(2, "contrastive-loss gradient check", 5.0);
    Rng rng(99);
    double worst = 0.0;
    for (int inst = 0; inst < 20; ++inst) {
        const int m = 6 + static_cast<int>(rng.below(7));
        const int d = 2 + static_cast<int>(rng.below(3));
        const int k = 2 + static_cast<int>(rng.below(3));
        Eigen::MatrixXd x(m, d), w(d, d);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < d; ++j) x(i, j) = rng.gaussian(0.0, 1.0);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) w(i, j) = rng.gaussian(0.0, 0.5);
        std::vector<int> bins(static_cast<std::size_t>(m));
        for (auto& b : bins) b = 1 + static_cast<int>(rng.below(
                                     static_cast<std::uint64_t>(k)));
        const Eigen::MatrixXd alpha = distance_coefficients(k);
        const Eigen::MatrixXd centers =
            compute_bin_centers(encoder_forward(w, x), bins, k);

        const Eigen::MatrixXd g = loss_gradient(w, x, centers, bins, alpha);
        Eigen::MatrixXd g_fd(d, d);
        const double h = 1e-5;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                Eigen::MatrixXd wp = w, wm = w;
                wp(i, j) += h;
                wm(i, j) -= h;
                g_fd(i, j) = (contrastive_loss(encoder_forward(wp, x), centers,
                                               bins, alpha) -
                              contrastive_loss(encoder_forward(wm, x), centers,
                                               bins, alpha)) /
                             (2.0 * h);
            }
        worst = std::max(worst, (g - g_fd).norm() /
                                    std::max(1e-12, g_fd.norm()));
    }
    c.finish(worst < 1e-4, "max relative error " + fmt(worst));
}

// ---- criterion 3: SNR calibration ----------------------------------------

void criterion_noise(const Dataset& ds) {
    Criterion c(3, "noise calibration within 0.5 dB", 5.0);
    const auto stats = zscore_fit(ds.features, ds.motor);
    const Eigen::MatrixXd z = zscore_apply(ds.features, stats);
    const Eigen::VectorXd powers = feature_power(z);
    double worst = 0.0;
    for (double snr : {5.0, 10.0, 20.0, 30.0}) {
        const Eigen::MatrixXd noisy =
            inject(z, make_noise_spec(powers, snr, 1234));
        const Eigen::MatrixXd delta = noisy - z;
        for (Eigen::Index j = 0; j < z.cols(); ++j) {
            const double np = delta.col(j).squaredNorm() /
                              static_cast<double>(z.rows());
            const double snr_emp = 10.0 * std::log10(powers(j) / np);
            worst = std::max(worst, std::abs(snr_emp - snr));
        }
    }
    c.finish(worst < 0.5, "max deviation " + fmt(worst) + " dB");
}

// ---- criterion 4: binning oracle -----------------------------------------

void criterion_binning() {
    Criterion c(4, "binning oracle + empty-bin fallback", 1.0);
    Rng rng(5);
    bool ok = true;
    std::string detail;
    for (int k : {2, 5, 25, 50}) {
        Eigen::VectorXd col(200);
        for (Eigen::Index i = 0; i < col.size(); ++i)
            col(i) = rng.uniform(-3.0, 3.0);
        const BinningModel m = fit_binning(col, k);
        const double w = m.width();
        for (int t = 0; t < 10000 && ok; ++t) {
            const double v = rng.uniform(-3.5, 3.5);
            // brute force: smallest bin whose upper edge is above v
            int brute = k;
            for (int b = 1; b <= k; ++b)
                if (v < m.lo + static_cast<double>(b) * w) {
                    brute = b;
                    break;
                }
            if (v < m.lo) brute = 1;
            if (assign_bin(m, v) != brute) {
                ok = false;
                detail = "mismatch at K=" + std::to_string(k) + " v=" + fmt(v);
            }
        }
    }
    if (ok) {
        // hand cases: rows in bins 1 and 5 of K=5; bin 3 is equidistant,
        // bin 2 is nearer to 1, bin 4 nearer to 5
        Eigen::MatrixXd h(2, 1);
        h << 1.0, 5.0;
        const Eigen::MatrixXd centers =
            compute_bin_centers(h, std::vector<int>{1, 5}, 5);
        ok = centers(0, 0) == 1.0 && centers(4, 0) == 5.0 &&
             centers(1, 0) == 1.0 && centers(3, 0) == 5.0 &&
             centers(2, 0) == 3.0;
        if (!ok) detail = "empty-bin fallback wrong";
        // all empties fall back to the single non-empty bin
        if (ok) {
            Eigen::MatrixXd h1(1, 1);
            h1 << 2.0;
            const Eigen::MatrixXd c1 =
                compute_bin_centers(h1, std::vector<int>{2}, 4);
            ok = c1(0, 0) == 2.0 && c1(1, 0) == 2.0 && c1(2, 0) == 2.0 &&
                 c1(3, 0) == 2.0;
            if (!ok) detail = "single-bin fallback wrong";
        }
    }
    c.finish(ok, detail);
}

// ---- criterion 5: metric and error-propagation oracles -------------------

void criterion_metrics() {
    Criterion c(5, "error-triple + sigma-propagation oracles", 10.0);
    Rng rng(17);
    bool ok = true;
    std::string detail;
    for (int t = 0; t < 1000 && ok; ++t) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(60));
        Eigen::VectorXd y(n), yh(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            y(i) = rng.gaussian(0.0, 2.0);
            yh(i) = y(i) + rng.gaussian(0.0, 1.0);
        }
        const ErrorTriple tr = error_triple(y, yh);
        // naive reference
        std::vector<double> abs_err;
        double se = 0.0, ae = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double e = std::abs(y(i) - yh(i));
            se += e * e;
            ae += e;
            abs_err.push_back(e);
        }
        std::sort(abs_err.begin(), abs_err.end());
        const double rmse = std::sqrt(se / static_cast<double>(n));
        const double mae = ae / static_cast<double>(n);
        const double med =
            n % 2 == 1 ? abs_err[static_cast<std::size_t>(n / 2)]
                       : 0.5 * (abs_err[static_cast<std::size_t>(n / 2 - 1)] +
                                abs_err[static_cast<std::size_t>(n / 2)]);
        if (std::abs(tr.rmse - rmse) > 1e-12 || std::abs(tr.mae - mae) > 1e-12 ||
            std::abs(tr.median_ae - med) > 1e-12) {
            ok = false;
            detail = "error_triple mismatch";
        }
    }
    if (ok) {
        // sigma_hat vs Monte-Carlo std of the ratio at CV <= 0.1
        double worst = 0.0;
        for (const auto& [mu_a, sd_a, mu_b, sd_b] :
             std::vector<std::array<double, 4>>{{1.0, 0.05, 0.9, 0.06},
                                                {2.0, 0.2, 1.6, 0.1},
                                                {0.8, 0.04, 0.85, 0.08}}) {
            MetricStat base{mu_a, sd_a}, aug{mu_b, sd_b};
            const double sigma = relative_error(base, aug).sigma_hat;
            std::vector<double> ratios(10000);
            for (auto& r : ratios)
                r = rng.gaussian(mu_b, sd_b) / rng.gaussian(mu_a, sd_a);
            const MetricStat mc = detail::stat_of(ratios);
            worst = std::max(worst, std::abs(sigma - mc.std) / mc.std);
        }
        ok = worst < 0.30;
        detail = "worst sigma deviation " + fmt(worst);
    }
    c.finish(ok, detail);
}

// ---- criterion 6: feature selection ranks DFA first ----------------------

void criterion_selection(const Dataset& ds) {
    Criterion c(6, "averaged MDI ranks DFA first for both targets", 120.0);
    const auto stats = zscore_fit(ds.features, ds.motor);
    const Eigen::MatrixXd z = zscore_apply(ds.features, stats);
    ForestParams params;
    const Eigen::VectorXd imp_motor =
        averaged_importances(z, ds.motor, params, 2024, 10);
    const Eigen::VectorXd imp_total =
        averaged_importances(z, ds.total, params, 3024, 10);
    Eigen::Index am, at;
    imp_motor.maxCoeff(&am);
    imp_total.maxCoeff(&at);
    const int dfa = 14;
    c.finish(am == dfa && at == dfa && select_binning_feature(imp_motor, imp_total) == dfa,
             "motor top=" + ds.names[static_cast<std::size_t>(am)] +
                 " total top=" + ds.names[static_cast<std::size_t>(at)]);
}

// ---- criterion 7: no-noise bagged-trees magnitude ------------------------

void criterion_no_noise(const Dataset& ds, const EncoderWeights& enc) {
    Criterion c(7, "no-noise bagged Motor RMSE in [0.70, 1.00]", 180.0);
    ExperimentConfig cfg;
    cfg.target = "motor";
    cfg.models = {RegressorKind::kBaggedTrees};
    cfg.trials = 1;
    const auto report = run_pipeline(ds, enc, cfg);
    const CellKey key{"motor", "bagged", kNoNoise, "baseline"};
    const double rmse = report.cells.at(key).rmse.mean;
    c.finish(rmse >= 0.70 && rmse <= 1.00, "rmse " + fmt(rmse));
}

// ---- criteria 8 + 9: SNR=10 robustness -----------------------------------

void criteria_robustness(const Dataset& ds, const EncoderWeights& enc) {
    Criterion c8(8, "GPR delta <= -0.10 and significant at SNR=10", 900.0);
    ExperimentConfig cfg;
    cfg.target = "motor";
    cfg.models = {RegressorKind::kGpr, RegressorKind::kBaggedTrees};
    cfg.snr_list = {10.0};
    cfg.trials = 10;
    cfg.fold_limit = 1;
    const auto report = run_pipeline(ds, enc, cfg);

    double delta_gpr = 0.0, delta_bag = 0.0;
    bool sig_gpr = false, found_gpr = false, found_bag = false;
    for (const auto& r : report.relative) {
        if (r.metric != "rmse") continue;
        if (r.model == "gpr") {
            delta_gpr = r.estimate.delta_hat;
            sig_gpr = r.significance.significant;
            found_gpr = true;
        } else if (r.model == "bagged") {
            delta_bag = r.estimate.delta_hat;
            found_bag = true;
        }
    }
    c8.finish(found_gpr && delta_gpr <= -0.10 && sig_gpr,
              "delta " + fmt(delta_gpr) +
                  (sig_gpr ? " (significant)" : " (not significant)"));

    Criterion c9(9, "|delta| bagged < |delta| GPR (inherent robustness)", 0.0);
    c9.finish(found_gpr && found_bag &&
                  std::abs(delta_bag) < std::abs(delta_gpr),
              "|" + fmt(delta_bag) + "| vs |" + fmt(delta_gpr) + "|");
}

// ---- criterion 10: feature-space cluster property at SNR=30 --------------

void criterion_feature_space(const Dataset& ds, const EncoderWeights& enc) {
    Criterion c(10, "CH ordering in augmented space at SNR=30", 120.0);
    ExperimentConfig cfg;
    cfg.target = "motor";
    cfg.models = {RegressorKind::kRidge};
    cfg.snr_list = {30.0};
    cfg.trials = 1;
    cfg.fold_limit = 1;
    const auto report = run_pipeline(ds, enc, cfg);

    double ch_orig = 0, ch_aug = 0, chn_orig = 0, chn_aug = 0;
    for (const auto& q : report.cluster_quality) {
        if (q.space == "original" && !q.noisy) ch_orig = q.calinski_harabasz;
        if (q.space == "augmented" && !q.noisy) ch_aug = q.calinski_harabasz;
        if (q.space == "original" && q.noisy) chn_orig = q.calinski_harabasz;
        if (q.space == "augmented" && q.noisy) chn_aug = q.calinski_harabasz;
    }
    const double drop_orig = ch_orig - chn_orig;
    const double drop_aug = ch_aug - chn_aug;
    const bool ok = chn_aug > chn_orig && drop_aug < drop_orig;
    c.finish(ok, "noisy CH " + fmt(chn_aug) + " > " + fmt(chn_orig) +
                     "; drop " + fmt(drop_aug) + " < " + fmt(drop_orig));
}

// ---- criterion 11: bin-count sweep ---------------------------------------

void criterion_bin_sweep(const Dataset& ds, const fs::path& dir) {
    Criterion c(11, "K sweep {5..30} trains and emits curve data", 1200.0);
    bool ok = true;
    std::string detail = "delta(K):";
    std::ostringstream csv;
    csv << "k,model,metric,delta_hat\n";
    try {
        for (int k : {5, 10, 15, 20, 25, 30}) {
            ExperimentConfig cfg;
            cfg.k = k;
            cfg.target = "motor";
            cfg.models = {RegressorKind::kRidge};
            cfg.snr_list = {30.0};
            cfg.trials = 1;
            cfg.fold_limit = 1;
            const EncoderWeights enc = train_encoder_on_dataset(ds, 14, cfg);
            const auto report = run_pipeline(ds, enc, cfg);
            bool has_curve = false;
            for (const auto& r : report.relative) {
                if (!std::isfinite(r.estimate.delta_hat)) ok = false;
                csv << k << ',' << r.model << ',' << r.metric << ','
                    << r.estimate.delta_hat << '\n';
                if (r.metric == "rmse") {
                    has_curve = true;
                    detail += " " + fmt(r.estimate.delta_hat);
                }
            }
            if (!has_curve) ok = false;
        }
        write_text_file((dir / "bin_sweep.csv").string(), csv.str());
    } catch (const std::exception& e) {
        ok = false;
        detail = e.what();
    }
    c.finish(ok, detail);
}

// ---- criterion 12: CLI determinism ---------------------------------------

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void criterion_determinism(const fs::path& dir) {
    Criterion c(12, "CLI evaluate is byte-deterministic", 600.0);
    const std::string cli = NORO_CLI_PATH;
    const fs::path data = dir / "data.csv";
    const fs::path enc_dir = dir / "enc";
    const fs::path rep_dir = dir / "rep";
    auto run = [&](const std::string& cmd) {
        return std::system((cmd + " > /dev/null 2>&1").c_str()) == 0;
    };
    bool ok =
        run(cli + " synth --output " + data.string() + " --seed 7 --rows 5875") &&
        run(cli + " train-encoder --dataset " + data.string() +
            " --feature 14 --out " + enc_dir.string());
    const std::string eval_cmd =
        cli + " evaluate --dataset " + data.string() + " --encoder " +
        (enc_dir / "encoder.json").string() +
        " --snr 30 --models ridge --trials 2 --folds 1 --target motor --out " +
        rep_dir.string();
    std::string first, second;
    if (ok && run(eval_cmd)) {
        first = read_file(rep_dir / "report.json");
        ok = !first.empty();
    } else {
        ok = false;
    }
    if (ok && run(eval_cmd)) {
        second = read_file(rep_dir / "report.json");
    } else {
        ok = false;
    }
    c.finish(ok && first == second,
             ok ? (first == second ? "reports identical" : "reports differ")
                : "CLI invocation failed");
}

}  // namespace

int main() {
    const fs::path dir = fs::temp_directory_path() / "noro_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);

    criterion_alpha();
    criterion_gradient();

    const Dataset ds = make_synthetic_dataset();
    criterion_noise(ds);
    criterion_binning();
    criterion_metrics();
    criterion_selection(ds);

    ExperimentConfig cfg;
    const EncoderWeights enc = train_encoder_on_dataset(ds, 14, cfg);
    criterion_no_noise(ds, enc);
    criteria_robustness(ds, enc);
    criterion_feature_space(ds, enc);
    criterion_bin_sweep(ds, dir);
    criterion_determinism(dir);

    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
