// noro: noise-robust UPDRS prediction experiments.
//
// Subcommands: synth, ingest, select-features, train-encoder, evaluate,
// report. Every output embeds the resolved configuration; identical
// config + seed reproduces identical files.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "noro/forest.hpp"
#include "noro/pipeline.hpp"
#include "noro/synthetic.hpp"

namespace fs = std::filesystem;
using noro::json;

namespace {

struct CommonOpts {
    std::string dataset;
    std::string output_dir = ".";
    std::uint64_t seed = 2024;
};

std::vector<double> parse_snr_list(const std::string& text, bool no_noise) {
    std::vector<double> out;
    if (no_noise || text.empty() || text == "none") {
        out.push_back(noro::kNoNoise);
        if (text.empty() || text == "none") return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "none")
            out.push_back(noro::kNoNoise);
        else
            out.push_back(std::stod(item));
    }
    return out;
}

void apply_config_file(const std::string& path, noro::ExperimentConfig& cfg) {
    // simple key=value lines; '#' starts a comment; model overrides use
    // model.param=value
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file: " + path);
    std::string line;
    while (std::getline(f, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto strip = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = strip(line.substr(0, eq));
        const std::string val = strip(line.substr(eq + 1));
        if (key.empty()) continue;
        const auto dot = key.find('.');
        if (dot != std::string::npos) {
            cfg.model_overrides[key.substr(0, dot)][key.substr(dot + 1)] =
                std::stod(val);
        } else if (key == "bins") {
            cfg.k = std::stoi(val);
        } else if (key == "trials") {
            cfg.trials = std::stoi(val);
        } else if (key == "seed") {
            cfg.base_seed = std::stoull(val);
        } else if (key == "target") {
            cfg.target = val;
        } else if (key == "snr") {
            cfg.snr_list = parse_snr_list(val, false);
        } else if (key == "fold_limit") {
            cfg.fold_limit = std::stoi(val);
        } else if (key == "denormalize") {
            cfg.denormalize = (val == "true" || val == "1");
        } else {
            throw std::runtime_error("unknown config key: " + key);
        }
    }
}

int run_synth(const std::string& out, std::uint64_t seed, int rows) {
    noro::SyntheticParams p;
    p.seed = seed;
    p.rows = rows;
    noro::write_csv(noro::make_synthetic_dataset(p), out);
    std::cout << "wrote " << out << " (" << rows << " rows)\n";
    return 0;
}

int run_ingest(const CommonOpts& opts) {
    const auto ds = noro::load_csv_file(opts.dataset);
    std::vector<int> subjects(ds.subject_ids);
    std::sort(subjects.begin(), subjects.end());
    subjects.erase(std::unique(subjects.begin(), subjects.end()), subjects.end());
    json j;
    j["rows"] = ds.rows();
    j["features"] = ds.features.cols();
    j["subjects"] = subjects.size();
    j["feature_names"] = ds.names;
    std::cout << j.dump(2) << "\n";
    return 0;
}

int run_select_features(const CommonOpts& opts, int repeats) {
    const auto ds = noro::load_csv_file(opts.dataset);
    const auto stats = noro::zscore_fit(ds.features, ds.motor);
    const auto z = noro::zscore_apply(ds.features, stats);

    noro::ForestParams params;
    const auto imp_motor =
        noro::averaged_importances(z, ds.motor, params, opts.seed, repeats);
    const auto imp_total =
        noro::averaged_importances(z, ds.total, params, opts.seed + 1000, repeats);
    const int selected = noro::select_binning_feature(imp_motor, imp_total);

    json j;
    j["trials"] = repeats;
    j["seed"] = opts.seed;
    json per_feature = json::array();
    for (int f = 0; f < noro::kNumFeatures; ++f) {
        per_feature.push_back(
            {{"name", ds.names[static_cast<std::size_t>(f)]},
             {"motor", imp_motor(f)},
             {"total", imp_total(f)},
             {"combined", 0.5 * (imp_motor(f) + imp_total(f))}});
    }
    j["importances"] = per_feature;
    j["selected_index"] = selected;
    j["selected_name"] = ds.names[static_cast<std::size_t>(selected)];

    fs::create_directories(opts.output_dir);
    const auto path = fs::path(opts.output_dir) / "feature_selection.json";
    noro::write_text_file(path.string(), j.dump(2) + "\n");
    std::cout << "selected " << ds.names[static_cast<std::size_t>(selected)]
              << " (index " << selected << "); wrote " << path.string() << "\n";
    return 0;
}

int run_train_encoder(const CommonOpts& opts, noro::ExperimentConfig cfg,
                      int binning_feature) {
    const auto ds = noro::load_csv_file(opts.dataset);
    cfg.base_seed = opts.seed;
    if (binning_feature < 0) {
        noro::ForestParams params;
        const auto stats = noro::zscore_fit(ds.features, ds.motor);
        const auto z = noro::zscore_apply(ds.features, stats);
        binning_feature = noro::select_binning_feature(
            noro::averaged_importances(z, ds.motor, params, opts.seed, 10),
            noro::averaged_importances(z, ds.total, params, opts.seed + 1000, 10));
    }

    std::vector<noro::EpochLogEntry> log;
    const auto encoder =
        noro::train_encoder_on_dataset(ds, binning_feature, cfg, &log);

    fs::create_directories(opts.output_dir);
    const auto enc_path = fs::path(opts.output_dir) / "encoder.json";
    noro::write_text_file(enc_path.string(),
                          noro::encoder_to_json(encoder).dump(2) + "\n");
    std::ostringstream csv;
    csv << "fold,epoch,train_loss,valid_loss\n" << std::setprecision(12);
    for (const auto& e : log)
        csv << e.fold << ',' << e.epoch << ',' << e.train_loss << ','
            << e.valid_loss << '\n';
    const auto log_path = fs::path(opts.output_dir) / "training_log.csv";
    noro::write_text_file(log_path.string(), csv.str());
    std::cout << "trained encoder (validation loss " << encoder.validation_loss
              << "); wrote " << enc_path.string() << "\n";
    return 0;
}

void write_report_files(const noro::ExperimentReport& report,
                        const std::string& output_dir) {
    fs::create_directories(output_dir);
    noro::write_text_file(
        (fs::path(output_dir) / "report.json").string(),
        noro::report_to_json(report).dump(2) + "\n");
    noro::write_text_file((fs::path(output_dir) / "report.csv").string(),
                          noro::report_to_csv(report));
    noro::write_text_file((fs::path(output_dir) / "pca_projection.csv").string(),
                          noro::pca_to_csv(report));
}

int run_evaluate(const CommonOpts& opts, noro::ExperimentConfig cfg,
                 const std::string& encoder_path, bool train_first) {
    const auto ds = noro::load_csv_file(opts.dataset);
    cfg.base_seed = opts.seed;
    cfg.dataset_path = opts.dataset;
    cfg.output_dir = opts.output_dir;

    noro::EncoderWeights encoder;
    if (train_first || encoder_path.empty()) {
        noro::ForestParams params;
        const auto stats = noro::zscore_fit(ds.features, ds.motor);
        const auto z = noro::zscore_apply(ds.features, stats);
        const int selected = noro::select_binning_feature(
            noro::averaged_importances(z, ds.motor, params, opts.seed, 10),
            noro::averaged_importances(z, ds.total, params, opts.seed + 1000, 10));
        encoder = noro::train_encoder_on_dataset(ds, selected, cfg);
    } else {
        std::ifstream f(encoder_path);
        if (!f) throw std::runtime_error("cannot open encoder: " + encoder_path);
        encoder = noro::encoder_from_json(json::parse(f));
        cfg.k = encoder.binning.k;
    }

    auto report = noro::run_pipeline(ds, encoder, cfg);
    report.config_echo = noro::config_to_json(cfg);
    write_report_files(report, opts.output_dir);
    std::cout << "wrote report to " << opts.output_dir << "\n";
    return 0;
}

int run_report(const std::string& report_path, const std::string& output_dir) {
    std::ifstream f(report_path);
    if (!f) throw std::runtime_error("cannot open report: " + report_path);
    const json j = json::parse(f);

    // re-render the flat CSV from a stored JSON report
    std::ostringstream out;
    out << "target,model,snr,variant,rmse_mean,rmse_std,mae_mean,mae_std,"
           "median_ae_mean,median_ae_std,trials\n";
    out << std::setprecision(12);
    for (const auto& c : j.at("per_cell"))
        out << c.at("target").get<std::string>() << ','
            << c.at("model").get<std::string>() << ','
            << c.at("snr").get<std::string>() << ','
            << c.at("variant").get<std::string>() << ','
            << c.at("rmse").at("mean").get<double>() << ','
            << c.at("rmse").at("std").get<double>() << ','
            << c.at("mae").at("mean").get<double>() << ','
            << c.at("mae").at("std").get<double>() << ','
            << c.at("median_ae").at("mean").get<double>() << ','
            << c.at("median_ae").at("std").get<double>() << ','
            << c.at("trials").get<int>() << '\n';
    fs::create_directories(output_dir);
    const auto path = fs::path(output_dir) / "report.csv";
    noro::write_text_file(path.string(), out.str());
    std::cout << "wrote " << path.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"noise-robust UPDRS prediction experiments"};
    app.require_subcommand(1);

    CommonOpts opts;
    noro::ExperimentConfig cfg;
    std::string snr_text = "none";
    std::string models_text = "ridge,knn,neural,bagged,gpr";
    std::string config_file, encoder_path, report_path;
    std::string alpha_convention = "anchor_row";
    bool no_noise = false, train_first = false;
    int repeats = 10, binning_feature = -1, synth_rows = 5875;
    std::string synth_out = "synthetic.csv";

    auto add_common = [&](CLI::App* cmd, bool needs_dataset = true) {
        if (needs_dataset)
            cmd->add_option("--dataset", opts.dataset, "dataset CSV path")
                ->required();
        cmd->add_option("--out", opts.output_dir, "output directory");
        cmd->add_option("--seed", opts.seed, "base random seed");
    };

    auto* synth = app.add_subcommand("synth",
                                     "generate a surrogate telemonitoring CSV");
    synth->add_option("--output", synth_out, "output CSV path");
    synth->add_option("--rows", synth_rows, "number of samples");
    synth->add_option("--seed", opts.seed, "generator seed");

    auto* ingest = app.add_subcommand("ingest", "parse and summarize a dataset");
    add_common(ingest);

    auto* select = app.add_subcommand("select-features",
                                      "random-forest MDI feature report");
    add_common(select);
    select->add_option("--trials", repeats, "forests to average per target");

    auto* train = app.add_subcommand("train-encoder",
                                     "contrastive-learning encoder training");
    add_common(train);
    train->add_option("--bins", cfg.k, "bin count K");
    train->add_option("--epochs", cfg.encoder_epochs_per_fold,
                      "epochs per fold");
    train->add_option("--feature", binning_feature,
                      "binning feature index (default: select by MDI)");
    train->add_option("--alpha-convention", alpha_convention,
                      "anchor_row|symmetric");

    auto* evaluate = app.add_subcommand("evaluate", "run the evaluation pipeline");
    add_common(evaluate);
    evaluate->add_option("--encoder", encoder_path, "trained encoder JSON");
    evaluate->add_flag("--train-first", train_first,
                       "train the encoder before evaluating");
    evaluate->add_option("--snr", snr_text, "dB list, e.g. 10,20,30 or none");
    evaluate->add_flag("--no-noise", no_noise, "no extra noise");
    evaluate->add_option("--models", models_text,
                         "comma list: ridge,knn,neural,bagged,gpr");
    evaluate->add_option("--trials", cfg.trials, "repeated trials");
    evaluate->add_option("--bins", cfg.k, "bin count K (with --train-first)");
    evaluate->add_option("--target", cfg.target, "motor|total|both");
    evaluate->add_option("--folds", cfg.fold_limit, "folds to evaluate");
    evaluate->add_option("--config", config_file, "key=value config file");
    evaluate->add_flag("--denormalize", cfg.denormalize,
                       "report errors in raw label units");
    evaluate->add_flag("--subject-disjoint", cfg.subject_disjoint_split,
                       "subject-grouped pool/test split");
    evaluate->add_flag("--paired-test", cfg.paired_test,
                       "paired t-test instead of Welch");
    evaluate->add_flag("--power-train-only", cfg.power_scope_train,
                       "noise powers from the training split");

    auto* report = app.add_subcommand("report",
                                      "re-render CSV from a stored JSON report");
    report->add_option("--report", report_path, "report JSON path")->required();
    report->add_option("--out", opts.output_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return run_synth(synth_out, opts.seed, synth_rows);
        if (ingest->parsed()) return run_ingest(opts);
        if (select->parsed()) return run_select_features(opts, repeats);
        if (train->parsed()) {
            cfg.alpha_convention = alpha_convention == "symmetric"
                                       ? noro::AlphaConvention::kSymmetric
                                       : noro::AlphaConvention::kAnchorRow;
            return run_train_encoder(opts, cfg, binning_feature);
        }
        if (evaluate->parsed()) {
            if (!config_file.empty()) apply_config_file(config_file, cfg);
            // flags win over the config file
            cfg.snr_list = parse_snr_list(no_noise ? "none" : snr_text, false);
            cfg.models.clear();
            std::stringstream ss(models_text);
            std::string m;
            while (std::getline(ss, m, ','))
                cfg.models.push_back(noro::regressor_kind_from_string(m));
            return run_evaluate(opts, cfg, encoder_path, train_first);
        }
        if (report->parsed()) return run_report(report_path, opts.output_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
