// rlgnet command-line entry point: prepare, stats, train, eval, ablate, sweep.

#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "rlgnet/cli.hpp"

namespace {

using rlgnet::RunConfig;

// defaults -> config file -> explicit flags, last writer wins.
struct CommonOpts {
    std::string dataset;
    std::string data_root;
    std::string out_dir;
    std::string config_file;
    std::vector<std::string> overrides;  // key=value
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--dataset", opts.dataset, "dataset name (directory under the data root)");
    cmd->add_option("--data-root", opts.data_root,
                    "dataset root directory (default: $RLGNET_DATA or .)");
    cmd->add_option("--out", opts.out_dir, "artifact/output directory (default: runs)");
    cmd->add_option("--config", opts.config_file, "flat key=value config file");
    cmd->add_option("--set", opts.overrides, "config override key=value (repeatable)")
        ->expected(-1);
}

RunConfig build_config(const CommonOpts& opts) {
    RunConfig cfg;
    cfg.data_root = rlgnet::default_data_root();
    if (!opts.config_file.empty()) cfg.apply_file(opts.config_file);
    if (!opts.dataset.empty()) cfg.dataset = opts.dataset;
    if (!opts.data_root.empty()) cfg.data_root = opts.data_root;
    if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
    for (const auto& kv : opts.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw rlgnet::Error(rlgnet::errc::config, "--set expects key=value, got: " + kv);
        cfg.apply(kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.finalize();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"RLGNet: repeating/local/global history ensemble for TKG extrapolation"};
    app.require_subcommand(1);

    CommonOpts prepare_opts, stats_opts, train_opts, eval_opts, ablate_opts, sweep_opts;

    auto* prepare = app.add_subcommand("prepare", "build snapshot and candidate-index caches");
    add_common(prepare, prepare_opts);

    auto* stats = app.add_subcommand("stats", "repeating-fact proportions per top_k (CSV)");
    add_common(stats, stats_opts);
    std::string k_list_text = "5,10,20,30,100,inf";
    stats->add_option("--k-list", k_list_text, "comma-separated top_k values; 'inf' allowed");

    auto* train = app.add_subcommand("train", "train one module");
    add_common(train, train_opts);
    std::string train_module = "local";
    bool train_verbose = false;
    train->add_option("--module", train_module, "local | global | repeat");
    train->add_flag("--verbose", train_verbose, "per-epoch progress on stdout");

    auto* eval = app.add_subcommand("eval", "ensemble evaluation on the test split");
    add_common(eval, eval_opts);
    std::string eval_modules = "local,global,repeat";
    eval->add_option("--modules", eval_modules, "comma- or plus-separated module subset");

    auto* ablate = app.add_subcommand("ablate", "evaluate module combinations");
    add_common(ablate, ablate_opts);
    std::string combos_text;
    ablate->add_option("--combos", combos_text,
                       "comma-separated combos like local+global,global+repeat "
                       "(default: all supported)");

    auto* sweep = app.add_subcommand("sweep", "evaluate (retraining when needed) over a grid");
    add_common(sweep, sweep_opts);
    std::string sweep_param = "alpha";
    std::string sweep_values = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0";
    std::string sweep_modules = "local,global,repeat";
    sweep->add_option("--param", sweep_param, "config key to sweep (e.g. alpha, omega, top_k)");
    sweep->add_option("--values", sweep_values, "comma-separated values");
    sweep->add_option("--modules", sweep_modules, "modules to use (retrained if needed)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (prepare->parsed()) {
            const RunConfig cfg = build_config(prepare_opts);
            const auto r = rlgnet::cli::cmd_prepare(cfg);
            std::cout << (r.cache_hit ? "cache hit" : "prepared") << ": " << cfg.dataset
                      << " |E|=" << r.num_entities << " |R|=" << r.num_relations_raw
                      << " |T|=" << r.num_snapshots << "\n";
        } else if (stats->parsed()) {
            const RunConfig cfg = build_config(stats_opts);
            const auto rows = rlgnet::cli::cmd_stats(cfg, rlgnet::cli::parse_k_list(k_list_text));
            std::cout << "top_k,repeating_proportion_pct\n";
            for (const auto& row : rows)
                std::cout << rlgnet::cli::k_label(row.k) << "," << row.proportion_pct << "\n";
        } else if (train->parsed()) {
            RunConfig cfg = build_config(train_opts);
            cfg.module = train_module;
            const auto result = rlgnet::cli::cmd_train(cfg, !train_verbose);
            std::cout << "trained " << cfg.module << ": best epoch " << result.best.epoch
                      << ", val MRR " << result.best.val_mrr << "\n";
        } else if (eval->parsed()) {
            const RunConfig cfg = build_config(eval_opts);
            const auto report =
                rlgnet::cli::cmd_eval(cfg, rlgnet::cli::parse_module_list(eval_modules));
            rlgnet::cli::print_report(report);
        } else if (ablate->parsed()) {
            const RunConfig cfg = build_config(ablate_opts);
            std::vector<std::vector<std::string>> combos;
            if (combos_text.empty()) {
                combos = rlgnet::cli::default_ablation_combos();
            } else {
                std::stringstream ss(combos_text);
                std::string combo;
                while (std::getline(ss, combo, ','))
                    if (!combo.empty()) combos.push_back(rlgnet::cli::parse_module_list(combo));
            }
            const auto reports = rlgnet::cli::cmd_ablate(cfg, combos);
            for (const auto& r : reports) rlgnet::cli::print_report(r);
        } else if (sweep->parsed()) {
            const RunConfig cfg = build_config(sweep_opts);
            std::vector<std::string> values;
            std::stringstream ss(sweep_values);
            std::string v;
            while (std::getline(ss, v, ','))
                if (!v.empty()) values.push_back(v);
            const auto runs = rlgnet::cli::cmd_sweep(
                cfg, sweep_param, values, rlgnet::cli::parse_module_list(sweep_modules));
            std::cout << sweep_param << ",mrr\n";
            for (const auto& run : runs) std::cout << run.value << "," << run.report.mrr << "\n";
        }
    } catch (const rlgnet::Error& e) {
        std::cerr << "error[" << e.code() << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error[E_INTERNAL]: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
