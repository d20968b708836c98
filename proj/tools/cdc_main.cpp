// cdc: command-line driver for the dual-head clustering/calibration engine.
//
// Subcommands: gen, init, train, eval, report. Every artifact-producing
// command writes a <output>.manifest.json capturing the resolved
// configuration, paths, seed and timestamps, so a run can be reproduced
// bit-exactly from the manifest alone.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cdc/dataio.hpp"
#include "cdc/error.hpp"
#include "cdc/kmeans.hpp"
#include "cdc/metrics.hpp"
#include "cdc/numerics.hpp"
#include "cdc/protoinit.hpp"
#include "cdc/trainer.hpp"

namespace {

using nlohmann::json;

std::string iso_now() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

struct Manifest {
    std::string command;
    json config = json::object();
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::uint64_t seed = 0;
    std::string start_time;

    void write(const std::string& primary_output, int exit_status) const {
        json j;
        j["command"] = command;
        j["config"] = config;
        j["inputs"] = inputs;
        j["outputs"] = outputs;
        j["seed"] = seed;
        j["start_time"] = start_time;
        j["end_time"] = iso_now();
        j["exit_status"] = exit_status;
        std::ofstream out(primary_output + ".manifest.json");
        out << j.dump(2) << "\n";
    }
};

json config_json(const cdc::TrainConfig& cfg) {
    json j;
    j["epochs"] = cfg.epochs;
    j["batch"] = cfg.batch;
    j["sub_batch"] = cfg.sub_batch;
    j["mini_clusters"] = cfg.mini_clusters;
    j["classes"] = cfg.classes;
    j["hidden"] = cfg.hidden;
    j["encoder_mode"] = cfg.encoder_mode == cdc::EncoderMode::Adapter ? "adapter" : "identity";
    j["lr_encoder"] = cfg.lr_encoder;
    j["lr_head"] = cfg.lr_head;
    j["w_en"] = cfg.w_en;
    j["weak_noise"] = cfg.weak_noise;
    j["strong_noise"] = cfg.strong_noise;
    j["strong_dropout"] = cfg.strong_dropout;
    j["seed"] = cfg.seed;
    j["ece_bins"] = cfg.ece_bins;
    j["single_head"] = cfg.single_head;
    j["no_init"] = cfg.no_init;
    if (cfg.fixed_threshold)
        j["fixed_threshold"] = *cfg.fixed_threshold;
    else
        j["fixed_threshold"] = nullptr;
    j["no_stop_gradient"] = cfg.no_stop_gradient;
    j["no_cal_update"] = cfg.no_cal_update;
    return j;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

// Flat `key = value` config handling. Values become --key=value arguments
// appended after the explicit command line, skipping any option already
// present there, which gives the precedence command line > environment >
// config file > built-in default.
std::string extract_config_path(std::vector<std::string>& args) {
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw cdc::InvalidInput("--config needs a file path");
            std::string path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                       args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
            return path;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            std::string path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            return path;
        }
    }
    return {};
}

bool has_flag(const std::vector<std::string>& args, const std::string& flag) {
    for (const std::string& a : args)
        if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
}

void apply_config_file(const std::string& path, std::vector<std::string>& args) {
    std::ifstream in(path);
    if (!in) throw cdc::FormatError(path + ": cannot open");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string::size_type hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            std::string::size_type a = s.find_first_not_of(" \t\r");
            std::string::size_type b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        std::string stripped = trim(line);
        if (stripped.empty()) continue;
        std::string::size_type eq = stripped.find('=');
        if (eq == std::string::npos)
            throw cdc::FormatError(path + ": line " + std::to_string(lineno) +
                                   " is not `key = value`");
        std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));
        if (key.empty())
            throw cdc::FormatError(path + ": line " + std::to_string(lineno) + " has an empty key");
        for (char& c : key)
            if (c == '_') c = '-';
        std::string flag = "--" + key;
        if (!has_flag(args, flag)) args.push_back(flag + "=" + value);
    }
}

// Reliability diagram: per-bin accuracy (filled) and mean confidence
// (outline) bars with the identity diagonal and an ECE annotation.
std::string reliability_svg(const cdc::CalibrationReport& rep) {
    const double w = 640, h = 480, ml = 70, mr = 20, mt = 40, mb = 60;
    const double pw = w - ml - mr, ph = h - mt - mb;
    auto xmap = [&](double v) { return ml + v * pw; };
    auto ymap = [&](double v) { return mt + (1.0 - v) * ph; };

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(w) + "\" height=\"" + fmt(h) +
         "\" viewBox=\"0 0 " + fmt(w) + " " + fmt(h) + "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        double v = t / 4.0;
        s += "<line x1=\"" + fmt(xmap(v)) + "\" y1=\"" + fmt(mt) + "\" x2=\"" + fmt(xmap(v)) +
             "\" y2=\"" + fmt(mt + ph) + "\" stroke=\"#dddddd\"/>\n";
        s += "<line x1=\"" + fmt(ml) + "\" y1=\"" + fmt(ymap(v)) + "\" x2=\"" + fmt(ml + pw) +
             "\" y2=\"" + fmt(ymap(v)) + "\" stroke=\"#dddddd\"/>\n";
        s += "<text x=\"" + fmt(xmap(v)) + "\" y=\"" + fmt(h - mb + 20) +
             "\" font-size=\"12\" text-anchor=\"middle\">" + fmt(v) + "</text>\n";
        s += "<text x=\"" + fmt(ml - 8) + "\" y=\"" + fmt(ymap(v) + 4) +
             "\" font-size=\"12\" text-anchor=\"end\">" + fmt(v) + "</text>\n";
    }
    for (const cdc::EceBin& b : rep.bins) {
        double x0 = xmap(b.lower), x1 = xmap(b.upper);
        double bw = (x1 - x0) * 0.8, pad = (x1 - x0) * 0.1;
        if (b.count > 0) {
            s += "<rect x=\"" + fmt(x0 + pad) + "\" y=\"" + fmt(ymap(b.accuracy)) + "\" width=\"" +
                 fmt(bw) + "\" height=\"" + fmt(ymap(0.0) - ymap(b.accuracy)) +
                 "\" fill=\"#4878a8\" fill-opacity=\"0.85\"/>\n";
            s += "<rect x=\"" + fmt(x0 + pad) + "\" y=\"" + fmt(ymap(b.mean_confidence)) +
                 "\" width=\"" + fmt(bw) + "\" height=\"" +
                 fmt(ymap(0.0) - ymap(b.mean_confidence)) +
                 "\" fill=\"none\" stroke=\"#d06048\" stroke-width=\"1.5\"/>\n";
        }
    }
    s += "<line x1=\"" + fmt(xmap(0.0)) + "\" y1=\"" + fmt(ymap(0.0)) + "\" x2=\"" +
         fmt(xmap(1.0)) + "\" y2=\"" + fmt(ymap(1.0)) +
         "\" stroke=\"#555555\" stroke-dasharray=\"6,4\"/>\n";
    s += "<text x=\"" + fmt(ml + 10) + "\" y=\"" + fmt(mt - 12) + "\" font-size=\"15\">ECE = " +
         fmt(rep.ece) + "  (acc " + fmt(rep.acc) + ", n " + std::to_string(rep.n) + ")</text>\n";
    s += "<text x=\"" + fmt(ml + pw / 2) + "\" y=\"" + fmt(h - 14) +
         "\" font-size=\"14\" text-anchor=\"middle\">confidence</text>\n";
    s += "<text x=\"18\" y=\"" + fmt(mt + ph / 2) + "\" font-size=\"14\" transform=\"rotate(-90 18 " +
         fmt(mt + ph / 2) + ")\" text-anchor=\"middle\">accuracy / mean confidence</text>\n";
    s += "</svg>\n";
    return s;
}

// Risk-coverage curve at bin resolution: bins admitted in descending
// confidence order, risk = cumulative error fraction among admitted samples.
std::string risk_coverage_svg(const cdc::CalibrationReport& rep) {
    struct Point {
        double coverage, risk;
    };
    std::vector<Point> pts;
    double seen = 0.0, errors = 0.0;
    double total = static_cast<double>(rep.n);
    for (auto it = rep.bins.rbegin(); it != rep.bins.rend(); ++it) {
        if (it->count == 0) continue;
        seen += static_cast<double>(it->count);
        errors += (1.0 - it->accuracy) * static_cast<double>(it->count);
        pts.push_back({seen / total, errors / seen});
    }

    const double w = 640, h = 480, ml = 70, mr = 20, mt = 40, mb = 60;
    const double pw = w - ml - mr, ph = h - mt - mb;
    double max_risk = 0.05;
    for (const Point& p : pts) max_risk = std::max(max_risk, p.risk);
    auto xmap = [&](double v) { return ml + v * pw; };
    auto ymap = [&](double v) { return mt + (1.0 - v / max_risk) * ph; };

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(w) + "\" height=\"" + fmt(h) +
         "\" viewBox=\"0 0 " + fmt(w) + " " + fmt(h) + "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        double v = t / 4.0;
        s += "<line x1=\"" + fmt(xmap(v)) + "\" y1=\"" + fmt(mt) + "\" x2=\"" + fmt(xmap(v)) +
             "\" y2=\"" + fmt(mt + ph) + "\" stroke=\"#dddddd\"/>\n";
        s += "<line x1=\"" + fmt(ml) + "\" y1=\"" + fmt(ymap(v * max_risk)) + "\" x2=\"" +
             fmt(ml + pw) + "\" y2=\"" + fmt(ymap(v * max_risk)) + "\" stroke=\"#dddddd\"/>\n";
        s += "<text x=\"" + fmt(xmap(v)) + "\" y=\"" + fmt(h - mb + 20) +
             "\" font-size=\"12\" text-anchor=\"middle\">" + fmt(v) + "</text>\n";
        s += "<text x=\"" + fmt(ml - 8) + "\" y=\"" + fmt(ymap(v * max_risk) + 4) +
             "\" font-size=\"12\" text-anchor=\"end\">" + fmt(v * max_risk) + "</text>\n";
    }
    if (!pts.empty()) {
        std::string poly;
        for (const Point& p : pts)
            poly += fmt(xmap(p.coverage)) + "," + fmt(ymap(p.risk)) + " ";
        s += "<polyline points=\"" + poly +
             "\" fill=\"none\" stroke=\"#4878a8\" stroke-width=\"2\"/>\n";
        for (const Point& p : pts)
            s += "<circle cx=\"" + fmt(xmap(p.coverage)) + "\" cy=\"" + fmt(ymap(p.risk)) +
                 "\" r=\"3\" fill=\"#4878a8\"/>\n";
    }
    s += "<text x=\"" + fmt(ml + 10) + "\" y=\"" + fmt(mt - 12) + "\" font-size=\"15\">AURC = " +
         fmt(rep.aurc) + "</text>\n";
    s += "<text x=\"" + fmt(ml + pw / 2) + "\" y=\"" + fmt(h - 14) +
         "\" font-size=\"14\" text-anchor=\"middle\">coverage</text>\n";
    s += "<text x=\"18\" y=\"" + fmt(mt + ph / 2) + "\" font-size=\"14\" transform=\"rotate(-90 18 " +
         fmt(mt + ph / 2) + ")\" text-anchor=\"middle\">risk</text>\n";
    s += "</svg>\n";
    return s;
}


bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Features from a binary .cdcf file or a d0,...,dD-1[,label] CSV. A label
// column in the CSV fills `labels` when no separate label file is given.
cdc::Matrix load_features(const std::string& path, std::vector<int>* labels) {
    if (ends_with(path, ".csv")) {
        auto [m, csv_labels] = cdc::read_csv_features(path);
        if (labels && labels->empty() && !csv_labels.empty()) *labels = std::move(csv_labels);
        return std::move(m);
    }
    return cdc::read_features(path);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw cdc::FormatError(path + ": cannot open for writing");
    out << text;
}

void add_config_options(CLI::App* cmd, cdc::TrainConfig& cfg, std::string& encoder_mode,
                        double& fixed_threshold, bool& fixed_threshold_set) {
    cmd->add_option("--epochs", cfg.epochs, "Training epochs");
    cmd->add_option("--batch", cfg.batch, "Batch size B");
    cmd->add_option("--sub-batch", cfg.sub_batch, "Sub-batch size");
    cmd->add_option("--mini-clusters", cfg.mini_clusters, "Mini-clusters K per batch");
    cmd->add_option("--classes", cfg.classes, "Number of clusters C");
    cmd->add_option("--hidden", cfg.hidden, "Hidden units H");
    cmd->add_option("--encoder", encoder_mode, "Encoder mode: adapter|identity")
        ->check(CLI::IsMember({"adapter", "identity"}));
    cmd->add_option("--lr-encoder", cfg.lr_encoder, "Encoder learning rate");
    cmd->add_option("--lr-head", cfg.lr_head, "Head learning rate");
    cmd->add_option("--w-en", cfg.w_en, "Balance-entropy weight");
    cmd->add_option("--weak-noise", cfg.weak_noise, "Weak augmentation noise sigma");
    cmd->add_option("--strong-noise", cfg.strong_noise, "Strong augmentation noise sigma");
    cmd->add_option("--strong-dropout", cfg.strong_dropout, "Strong augmentation dropout rate");
    cmd->add_option("--seed", cfg.seed, "Random seed");
    cmd->add_option("--ece-bins", cfg.ece_bins, "Calibration bins");
    cmd->add_flag("--single-head", cfg.single_head,
                  "Drive selection from the clustering head's own confidence");
    cmd->add_flag("--no-init", cfg.no_init, "Random head init instead of prototypes");
    cmd->add_option("--fixed-threshold", fixed_threshold,
                    "Replace dynamic budgets with a fixed confidence threshold")
        ->each([&fixed_threshold_set](const std::string&) { fixed_threshold_set = true; });
    cmd->add_flag("--no-stop-gradient", cfg.no_stop_gradient,
                  "Let the calibration loss update the encoder too");
    cmd->add_flag("--no-cal-update", cfg.no_cal_update, "Skip calibration-head updates");
}

int run(int argc, char** argv) {
    CLI::App app{"Dual-head deep clustering with confidence calibration"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a synthetic Gaussian-mixture dataset");
    cdc::MixtureSpec spec;
    std::string gen_features, gen_labels;
    std::string config_dummy;
    gen->add_option("--config", config_dummy, "Config file (key = value lines)");
    gen->add_option("--n", spec.n, "Sample count")->required();
    gen->add_option("--d", spec.d, "Feature dimension")->required();
    gen->add_option("--c", spec.c, "Mixture components")->required();
    gen->add_option("--separation", spec.separation, "Inter-center distance in std units")
        ->required();
    gen->add_option("--seed", spec.seed, "Random seed");
    gen->add_option("--features-out", gen_features, "Output feature file")->required();
    gen->add_option("--labels-out", gen_labels, "Output label file")->required();

    // shared training config for init/train
    cdc::TrainConfig cfg;
    std::string encoder_mode = "adapter";
    double fixed_threshold = 0.0;
    bool fixed_threshold_set = false;

    auto* init = app.add_subcommand("init", "Prototype-initialize heads and write a checkpoint");
    std::string init_features, init_labels, init_out, init_report;
    init->add_option("--config", config_dummy, "Config file (key = value lines)");
    init->add_option("--features", init_features, "Input feature file")->required();
    init->add_option("--labels", init_labels, "Optional label file (enables accuracy fields)");
    init->add_option("--out", init_out, "Output checkpoint")->required();
    init->add_option("--report-out", init_report, "Init report JSON (default <out>.init.json)");
    add_config_options(init, cfg, encoder_mode, fixed_threshold, fixed_threshold_set);

    auto* train = app.add_subcommand("train", "Train the dual-head model");
    std::string train_features, train_labels, train_out, train_log;
    train->add_option("--config", config_dummy, "Config file (key = value lines)");
    train->add_option("--features", train_features, "Input feature file")->required();
    train->add_option("--labels", train_labels, "Optional label file (enables the metric log)");
    train->add_option("--out", train_out, "Output checkpoint")->required();
    train->add_option("--metrics-log", train_log, "Per-epoch metric CSV (needs --labels)");
    add_config_options(train, cfg, encoder_mode, fixed_threshold, fixed_threshold_set);

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint against labels");
    std::string eval_ckpt, eval_features, eval_labels, eval_out, eval_head = "cal";
    std::size_t eval_bins = 15;
    eval->add_option("--config", config_dummy, "Config file (key = value lines)");
    eval->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
    eval->add_option("--features", eval_features, "Feature file")->required();
    eval->add_option("--labels", eval_labels, "Label file (optional when the CSV has a label column)");
    eval->add_option("--out", eval_out, "Report CSV output")->required();
    eval->add_option("--head", eval_head, "Head to evaluate: cal|clu")
        ->check(CLI::IsMember({"cal", "clu"}));
    eval->add_option("--ece-bins", eval_bins, "Calibration bins");

    auto* report = app.add_subcommand("report", "Render SVG diagrams from a report CSV");
    std::string rep_in, rep_rel, rep_rc;
    report->add_option("--config", config_dummy, "Config file (key = value lines)");
    report->add_option("--in", rep_in, "Report CSV")->required();
    report->add_option("--reliability-out", rep_rel, "Reliability diagram SVG")->required();
    report->add_option("--risk-coverage-out", rep_rc, "Risk-coverage curve SVG")->required();

    // Precedence: command line > CDC_SEED > config file > defaults. The env
    // seed and config values are appended as arguments unless already given.
    std::vector<std::string> args(argv + 1, argv + argc);
    std::string config_path = extract_config_path(args);
    if (!has_flag(args, "--seed")) {
        if (const char* env = std::getenv("CDC_SEED")) args.emplace_back("--seed=" + std::string(env));
    }
    if (!config_path.empty()) apply_config_file(config_path, args);
    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(std::move(rev));  // CLI11 consumes reversed argument lists
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);  // prints help or the usage error
        return code == 0 ? 0 : 2;
    }

    cfg.encoder_mode =
        encoder_mode == "identity" ? cdc::EncoderMode::Identity : cdc::EncoderMode::Adapter;
    if (fixed_threshold_set) cfg.fixed_threshold = fixed_threshold;

    if (gen->parsed()) {
        Manifest man;
        man.command = "gen";
        man.start_time = iso_now();
        man.seed = spec.seed;
        man.config = {{"n", spec.n},       {"d", spec.d},
                      {"c", spec.c},       {"separation", spec.separation},
                      {"seed", spec.seed}};
        man.outputs = {gen_features, gen_labels};
        auto [features, labels] = cdc::gen_mixture(spec);
        cdc::write_features(gen_features, features);
        cdc::write_labels(gen_labels, labels);
        man.write(gen_features, 0);
        std::cout << "wrote " << gen_features << " (" << features.rows << "x" << features.cols
                  << ") and " << gen_labels << "\n";
        return 0;
    }

    if (init->parsed()) {
        Manifest man;
        man.command = "init";
        man.start_time = iso_now();
        man.seed = cfg.seed;
        man.config = config_json(cfg);
        man.inputs = {init_features};
        std::vector<int> csv_labels;
        cdc::Matrix features = load_features(init_features, &csv_labels);

        cdc::InitReport init_rep;
        cdc::TrainState st = cdc::init_state(features, cfg, &init_rep.alignment_rate);
        cdc::Checkpoint ckpt{std::move(st), cfg.digest()};
        cdc::save_checkpoint(init_out, ckpt);
        man.outputs = {init_out};

        json rep;
        rep["alignment_rate"] = init_rep.alignment_rate;
        if (!init_labels.empty() || !csv_labels.empty()) {
            std::vector<int> labels =
                init_labels.empty() ? csv_labels : cdc::read_labels(init_labels);
            if (!init_labels.empty()) man.inputs.push_back(init_labels);
            cdc::RngState km_seed(cfg.seed ^ 0x6B6D65616E73ULL);
            cdc::KMeansResult km = cdc::kmeans(features, cfg.classes, km_seed, 100, 1e-6, nullptr, 10);
            std::vector<int> km_pred(km.assignment.begin(), km.assignment.end());
            init_rep.kmeans_acc_features = cdc::hungarian_acc(km_pred, labels).acc;

            cdc::Matrix probs = cdc::predict(ckpt, features);
            std::vector<int> pred(probs.rows);
            for (std::size_t i = 0; i < probs.rows; ++i)
                pred[i] = static_cast<int>(cdc::argmax_tiebreak(probs.row(i), probs.cols));
            init_rep.head_acc_post_init = cdc::hungarian_acc(pred, labels).acc;
            rep["kmeans_acc_features"] = init_rep.kmeans_acc_features;
            rep["head_acc_post_init"] = init_rep.head_acc_post_init;
        }
        std::string report_path = init_report.empty() ? init_out + ".init.json" : init_report;
        write_text(report_path, rep.dump(2) + "\n");
        man.outputs.push_back(report_path);
        man.write(init_out, 0);
        std::cout << rep.dump(2) << "\n";
        return 0;
    }

    if (train->parsed()) {
        Manifest man;
        man.command = "train";
        man.start_time = iso_now();
        man.seed = cfg.seed;
        man.config = config_json(cfg);
        man.inputs = {train_features};
        std::vector<int> labels;
        cdc::Matrix features = load_features(train_features, &labels);
        if (!train_labels.empty()) {
            labels = cdc::read_labels(train_labels);
            man.inputs.push_back(train_labels);
        }

        std::vector<cdc::EpochMetrics> log;
        cdc::Checkpoint ckpt =
            cdc::train(features, cfg, labels.empty() ? nullptr : &labels,
                       labels.empty() ? nullptr : &log, &std::cerr);
        cdc::save_checkpoint(train_out, ckpt);
        man.outputs = {train_out};

        if (!train_log.empty() && !log.empty()) {
            std::string csv =
                "epoch,acc_cal,ece_cal,acc_clu,ece_clu,nmi_cal,ari_cal,auroc_cal,aurc_cal,"
                "fpr95_cal,selected_fraction\n";
            char buf[256];
            for (const cdc::EpochMetrics& em : log) {
                std::snprintf(buf, sizeof(buf),
                              "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                              em.epoch, em.acc_cal, em.ece_cal, em.acc_clu, em.ece_clu, em.nmi_cal,
                              em.ari_cal, em.auroc_cal, em.aurc_cal, em.fpr95_cal,
                              em.selected_fraction);
                csv += buf;
            }
            write_text(train_log, csv);
            man.outputs.push_back(train_log);
        }
        man.write(train_out, 0);
        std::cout << "wrote " << train_out << "\n";
        return 0;
    }

    if (eval->parsed()) {
        Manifest man;
        man.command = "eval";
        man.start_time = iso_now();
        man.config = {{"head", eval_head}, {"ece_bins", eval_bins}};
        man.inputs = {eval_ckpt, eval_features, eval_labels};
        cdc::Checkpoint ckpt = cdc::load_checkpoint(eval_ckpt);
        std::vector<int> labels;
        cdc::Matrix features = load_features(eval_features, &labels);
        if (!eval_labels.empty()) labels = cdc::read_labels(eval_labels);
        if (labels.empty()) throw cdc::InvalidInput("eval needs labels (file or CSV column)");
        man.seed = ckpt.state.rng.seed;

        cdc::Matrix probs = eval_head == "clu" ? cdc::predict_clustering(ckpt.state, features)
                                               : cdc::predict(ckpt, features);
        cdc::CalibrationReport rep = cdc::make_report(probs, labels, eval_bins);
        write_text(eval_out, cdc::report_to_csv(rep));
        man.outputs = {eval_out};
        man.write(eval_out, 0);
        std::printf("acc=%.4f nmi=%.4f ari=%.4f ece=%.4f auroc=%.4f aurc=%.4f fpr95=%.4f\n",
                    rep.acc, rep.nmi, rep.ari, rep.ece, rep.auroc, rep.aurc, rep.fpr95);
        return 0;
    }

    if (report->parsed()) {
        Manifest man;
        man.command = "report";
        man.start_time = iso_now();
        man.inputs = {rep_in};
        std::ifstream in(rep_in);
        if (!in) throw cdc::FormatError(rep_in + ": cannot open");
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        cdc::CalibrationReport rep = cdc::report_from_csv(text);
        write_text(rep_rel, reliability_svg(rep));
        write_text(rep_rc, risk_coverage_svg(rep));
        man.outputs = {rep_rel, rep_rc};
        man.write(rep_rel, 0);
        std::cout << "wrote " << rep_rel << " and " << rep_rc << "\n";
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const cdc::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
