#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rlgnet/config.hpp"
#include "rlgnet/dataset.hpp"
#include "rlgnet/eval.hpp"
#include "rlgnet/history.hpp"
#include "rlgnet/train.hpp"

namespace rlgnet::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline std::string iso_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

inline std::string hash_hex(uint64_t h) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

struct Paths {
    fs::path out;
    std::string ds;

    fs::path seq_cache() const { return out / (ds + ".seq"); }
    fs::path index_cache() const { return out / (ds + ".idx"); }
    fs::path prepare_manifest() const { return out / (ds + ".prepare.json"); }
    fs::path stats_csv() const { return out / (ds + ".stats.csv"); }
    fs::path checkpoint(const std::string& module) const {
        return out / (ds + "." + module + ".ckpt");
    }
    fs::path train_csv(const std::string& module) const {
        return out / (ds + "." + module + ".train.csv");
    }
    fs::path train_manifest(const std::string& module) const {
        return out / (ds + "." + module + ".train.json");
    }
    fs::path eval_report(const std::string& mode, const std::string& combo) const {
        return out / (ds + ".eval." + mode + "." + combo + ".json");
    }
    fs::path sweep_csv(const std::string& param) const {
        return out / (ds + ".sweep." + param + ".csv");
    }
};

inline Paths paths_for(const RunConfig& cfg) {
    return Paths{fs::path(cfg.out_dir), cfg.dataset};
}

inline void write_json(const fs::path& path, const json& doc) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream os(path);
    if (!os) throw Error(errc::io, "cannot write " + path.string());
    os << doc.dump(2) << "\n";
}

inline json manifest_base(const RunConfig& cfg, const std::string& command) {
    return json{{"command", command},
                {"dataset", cfg.dataset},
                {"config_hash", hash_hex(cfg.hash())},
                {"seed", cfg.seed},
                {"created", iso_now()}};
}

// ---- prepare ---------------------------------------------------------------

struct PrepareResult {
    bool cache_hit = false;
    int32_t num_entities = 0;
    int32_t num_relations_raw = 0;
    int32_t num_snapshots = 0;
};

inline SnapshotSequence require_sequence(const RunConfig& cfg) {
    const Paths p = paths_for(cfg);
    std::ifstream is(p.seq_cache(), std::ios::binary);
    if (!is)
        throw Error(errc::missing_artifact,
                    "missing prepared sequence " + p.seq_cache().string() +
                        " (run `rlgnet prepare --dataset " + cfg.dataset + "` first)");
    return load_sequence(is);
}

inline CandidateIndex require_index(const RunConfig& cfg) {
    const Paths p = paths_for(cfg);
    std::ifstream is(p.index_cache(), std::ios::binary);
    if (!is)
        throw Error(errc::missing_artifact,
                    "missing prepared index " + p.index_cache().string() +
                        " (run `rlgnet prepare --dataset " + cfg.dataset + "` first)");
    return CandidateIndex::load(is);
}

inline PrepareResult cmd_prepare(const RunConfig& cfg) {
    const Paths p = paths_for(cfg);
    PrepareResult result;

    // Idempotence: a manifest with the same config hash plus intact artifacts
    // means there is nothing to rebuild.
    if (fs::exists(p.prepare_manifest()) && fs::exists(p.seq_cache()) &&
        fs::exists(p.index_cache())) {
        std::ifstream mf(p.prepare_manifest());
        json doc;
        try {
            mf >> doc;
        } catch (...) {
            doc = json::object();
        }
        if (doc.value("config_hash", "") == hash_hex(cfg.hash())) {
            std::ifstream is(p.seq_cache(), std::ios::binary);
            const SnapshotSequence seq = load_sequence(is);
            result.cache_hit = true;
            result.num_entities = seq.num_entities;
            result.num_relations_raw = seq.num_relations_raw;
            result.num_snapshots = seq.num_snapshots();
            return result;
        }
    }

    SnapshotSequence raw = load_dataset(cfg.data_root, cfg.dataset);
    SnapshotSequence seq = add_reverse_relations(raw);
    CandidateIndex index = build_index(seq, seq.test_start);

    fs::create_directories(p.out);
    {
        std::ofstream os(p.seq_cache(), std::ios::binary);
        if (!os) throw Error(errc::io, "cannot write " + p.seq_cache().string());
        save_sequence(seq, os);
    }
    {
        std::ofstream os(p.index_cache(), std::ios::binary);
        if (!os) throw Error(errc::io, "cannot write " + p.index_cache().string());
        index.save(os);
    }

    json manifest = manifest_base(cfg, "prepare");
    manifest["cache_hit"] = false;
    manifest["num_entities"] = seq.num_entities;
    manifest["num_relations_raw"] = seq.num_relations_raw;
    manifest["num_snapshots"] = seq.num_snapshots();
    manifest["num_facts_augmented"] = seq.num_facts();
    manifest["valid_start"] = seq.valid_start;
    manifest["test_start"] = seq.test_start;
    manifest["entity_labels_present"] =
        fs::exists(fs::path(cfg.data_root) / cfg.dataset / "entity2id.txt");
    manifest["artifacts"] = json{{"sequence", p.seq_cache().string()},
                                 {"index", p.index_cache().string()}};
    write_json(p.prepare_manifest(), manifest);

    result.num_entities = seq.num_entities;
    result.num_relations_raw = seq.num_relations_raw;
    result.num_snapshots = seq.num_snapshots();
    return result;
}

// ---- stats -----------------------------------------------------------------

struct StatsRow {
    int32_t k = 0;  // kNoTruncation encodes infinity
    double proportion_pct = 0.0;
};

inline std::vector<StatsRow> compute_stats(const SnapshotSequence& seq,
                                           const std::vector<int32_t>& k_list) {
    std::vector<StatsRow> rows;
    rows.reserve(k_list.size());
    for (int32_t k : k_list) rows.push_back({k, repeating_proportion(seq, k)});
    return rows;
}

inline std::string k_label(int32_t k) {
    return k == kNoTruncation ? "inf" : std::to_string(k);
}

inline std::vector<int32_t> parse_k_list(const std::string& text) {
    std::vector<int32_t> ks;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        if (item == "inf" || item == "INF" || item == "Inf")
            ks.push_back(kNoTruncation);
        else {
            int v;
            try {
                v = std::stoi(item);
            } catch (...) {
                throw Error(errc::config, "bad top_k value: " + item);
            }
            if (v < 1) throw Error(errc::config, "top_k values must be >= 1");
            ks.push_back(v);
        }
    }
    if (ks.empty()) throw Error(errc::config, "empty top_k list");
    return ks;
}

inline std::vector<StatsRow> cmd_stats(const RunConfig& cfg,
                                       const std::vector<int32_t>& k_list) {
    const SnapshotSequence seq = require_sequence(cfg);
    const auto rows = compute_stats(seq, k_list);
    const Paths p = paths_for(cfg);
    fs::create_directories(p.out);
    std::ofstream os(p.stats_csv());
    if (!os) throw Error(errc::io, "cannot write " + p.stats_csv().string());
    os << "top_k,repeating_proportion_pct\n";
    for (const auto& r : rows)
        os << k_label(r.k) << "," << std::setprecision(12) << r.proportion_pct << "\n";
    return rows;
}

// ---- train -----------------------------------------------------------------

inline LocalConfig local_config(const RunConfig& cfg, const SnapshotSequence& seq) {
    LocalConfig c;
    c.num_entities = seq.num_entities;
    c.num_relations = seq.num_relations_total();
    c.dim = cfg.dim;
    c.time_dim = cfg.time_dim;
    c.layers = cfg.omega;
    c.window = cfg.m;
    c.conv_filters = cfg.conv_filters;
    c.kernel = cfg.kernel;
    c.dropout = cfg.dropout;
    return c;
}

inline GlobalConfig global_config(const RunConfig& cfg, const SnapshotSequence& seq) {
    GlobalConfig c;
    c.num_entities = seq.num_entities;
    c.num_relations = seq.num_relations_total();
    c.dim = cfg.dim;
    c.num_dim = cfg.dim;
    c.top_k_all = cfg.top_k_all;
    c.conv_filters = cfg.conv_filters;
    c.kernel = cfg.kernel;
    c.dropout = cfg.dropout;
    return c;
}

inline RepeatConfig repeat_config(const RunConfig& cfg, const SnapshotSequence& seq) {
    RepeatConfig c;
    c.num_entities = seq.num_entities;
    c.num_relations = seq.num_relations_total();
    c.dim = cfg.dim;
    c.num_dim = cfg.dim;
    c.top_k = cfg.top_k;
    return c;
}

inline uint64_t module_seed(const RunConfig& cfg, const std::string& module) {
    return cfg.seed ^ io::fnv1a("module:" + module);
}

inline TrainConfig train_config(const RunConfig& cfg, ModuleId id) {
    TrainConfig tc;
    tc.module = id;
    tc.lr = cfg.lr;
    tc.lr_decay = cfg.lr_decay;
    tc.lr_step = cfg.lr_step;
    tc.max_epochs = cfg.max_epochs;
    tc.early_stop = cfg.early_stop;
    tc.grad_clip = cfg.grad_clip;
    tc.seed = cfg.seed;
    tc.top_k = cfg.top_k;
    tc.static_graph_constraint = cfg.static_graph_constraint;
    return tc;
}

inline TrainResult cmd_train(const RunConfig& cfg, bool quiet = true) {
    const SnapshotSequence seq = require_sequence(cfg);
    const ModuleId id = module_from_name(cfg.module);
    TrainConfig tc = train_config(cfg, id);
    if (!quiet)
        tc.log_sink = [&](const std::string& line) {
            std::cout << "[train " << cfg.module << "] " << line << "\n";
        };

    TrainResult result;
    nn::ParamStore* store = nullptr;
    std::unique_ptr<LocalModule> local;
    std::unique_ptr<GlobalModule> global;
    std::unique_ptr<RepeatModule> repeat;
    switch (id) {
        case ModuleId::local:
            local = std::make_unique<LocalModule>(local_config(cfg, seq),
                                                  module_seed(cfg, "local"));
            result = train_local(*local, seq, tc);
            store = &local->params();
            break;
        case ModuleId::global:
            global = std::make_unique<GlobalModule>(global_config(cfg, seq),
                                                    module_seed(cfg, "global"));
            result = train_global(*global, seq, tc);
            store = &global->params();
            break;
        case ModuleId::repeat:
            repeat = std::make_unique<RepeatModule>(repeat_config(cfg, seq),
                                                    module_seed(cfg, "repeat"));
            result = train_repeat(*repeat, seq, tc);
            store = &repeat->params();
            break;
    }

    const Paths p = paths_for(cfg);
    fs::create_directories(p.out);
    CheckpointMeta meta = result.best;
    meta.config_text = cfg.canonical_text();
    save_checkpoint(p.checkpoint(cfg.module), meta, *store);

    std::ofstream csv(p.train_csv(cfg.module));
    csv << "epoch,loss,val_mrr,lr,seconds\n";
    for (const auto& row : result.log)
        csv << row.epoch << "," << std::setprecision(12) << row.loss << "," << row.val_mrr
            << "," << row.lr << "," << row.seconds << "\n";

    json manifest = manifest_base(cfg, "train");
    manifest["module"] = cfg.module;
    manifest["best_epoch"] = result.best.epoch;
    manifest["best_val_mrr"] = result.best.val_mrr;
    manifest["epochs_run"] = result.log.size();
    manifest["artifacts"] = json{{"checkpoint", p.checkpoint(cfg.module).string()},
                                 {"metrics_csv", p.train_csv(cfg.module).string()}};
    write_json(p.train_manifest(cfg.module), manifest);
    return result;
}

// ---- eval / ablate ----------------------------------------------------------

struct LoadedEnsemble {
    std::unique_ptr<LocalModule> local;
    std::unique_ptr<GlobalModule> global;
    std::unique_ptr<RepeatModule> repeat;

    Ensemble view() const {
        return Ensemble{local.get(), global.get(), repeat.get()};
    }
};

inline std::vector<std::string> parse_module_list(const std::string& text) {
    const char delim = text.find('+') != std::string::npos ? '+' : ',';
    std::vector<std::string> mods;
    std::string item;
    std::stringstream ss(text);
    while (std::getline(ss, item, delim))
        if (!item.empty()) mods.push_back(item);
    return mods;
}

inline LoadedEnsemble load_ensemble(const RunConfig& cfg, const SnapshotSequence& seq,
                                    const std::vector<std::string>& modules) {
    const Paths p = paths_for(cfg);
    LoadedEnsemble e;
    for (const auto& m : modules) {
        if (m == "local") {
            e.local = std::make_unique<LocalModule>(local_config(cfg, seq),
                                                    module_seed(cfg, "local"));
            load_checkpoint(p.checkpoint("local"), "local", e.local->params());
        } else if (m == "global") {
            e.global = std::make_unique<GlobalModule>(global_config(cfg, seq),
                                                      module_seed(cfg, "global"));
            load_checkpoint(p.checkpoint("global"), "global", e.global->params());
        } else if (m == "repeat") {
            e.repeat = std::make_unique<RepeatModule>(repeat_config(cfg, seq),
                                                      module_seed(cfg, "repeat"));
            load_checkpoint(p.checkpoint("repeat"), "repeat", e.repeat->params());
        } else {
            throw Error(errc::config, "unknown module '" + m + "' (local|global|repeat)");
        }
    }
    return e;
}

inline EnsembleConfig ensemble_config(const RunConfig& cfg) {
    EnsembleConfig ec;
    ec.alpha = cfg.alpha;
    ec.mode = cfg.mode == "multi_step" ? EvalMode::multi_step : EvalMode::single_step;
    ec.fusion = cfg.fusion == "raw" ? FusionStrategy::raw : FusionStrategy::probability;
    ec.unfiltered_also = cfg.unfiltered_metrics;
    return ec;
}

inline json report_to_json(const EvalReport& r, const RunConfig& cfg) {
    json doc = manifest_base(cfg, "eval");
    doc["combo"] = r.combo;
    doc["mode"] = r.mode;
    doc["fusion"] = r.fusion;
    doc["alpha"] = r.alpha;
    doc["num_queries"] = r.num_queries;
    doc["mrr"] = r.mrr;
    json hits = json::object();
    for (const auto& [k, v] : r.hits) hits["hits@" + std::to_string(k)] = v;
    doc["hits"] = hits;
    doc["module_mrr"] = r.module_mrr;
    if (r.mrr_unfiltered >= 0) doc["mrr_unfiltered"] = r.mrr_unfiltered;
    json rows = json::array();
    for (const auto& row : r.per_timestamp)
        rows.push_back({{"t", row.t}, {"num_queries", row.num_queries}, {"mrr", row.mrr}});
    doc["per_timestamp"] = rows;
    doc["max_history_frontier"] = r.max_history_frontier;
    doc["max_local_history_end"] = r.max_local_history_end;
    doc["tie_break"] = "optimistic (strictly-greater counting)";
    return doc;
}

inline void print_report(const EvalReport& r, std::ostream& os = std::cout) {
    os << "combo=" << r.combo << " mode=" << r.mode << " fusion=" << r.fusion
       << " alpha=" << r.alpha << "\n";
    os << "  queries " << r.num_queries << "  MRR " << std::fixed << std::setprecision(4)
       << r.mrr;
    for (const auto& [k, v] : r.hits) os << "  H@" << k << " " << v;
    os << "\n" << std::defaultfloat;
    for (const auto& [name, v] : r.module_mrr) os << "  [" << name << "] MRR " << v << "\n";
}

inline EvalReport cmd_eval(const RunConfig& cfg, const std::vector<std::string>& modules,
                           bool write_report = true) {
    const SnapshotSequence seq = require_sequence(cfg);
    const LoadedEnsemble ens = load_ensemble(cfg, seq, modules);
    const EvalReport report = evaluate(ens.view(), seq, ensemble_config(cfg));
    if (write_report) {
        const Paths p = paths_for(cfg);
        write_json(p.eval_report(report.mode, report.combo), report_to_json(report, cfg));
    }
    return report;
}

inline const std::vector<std::vector<std::string>>& default_ablation_combos() {
    static const std::vector<std::vector<std::string>> combos{
        {"local"},
        {"global"},
        {"local", "global"},
        {"global", "repeat"},
        {"local", "repeat"},
        {"local", "global", "repeat"},
    };
    return combos;
}

inline std::vector<EvalReport> cmd_ablate(const RunConfig& cfg,
                                          const std::vector<std::vector<std::string>>& combos) {
    std::vector<EvalReport> reports;
    for (const auto& combo : combos) {
        if (combo.size() == 1 && combo[0] == "repeat")
            throw Error(errc::unsupported,
                        "combination {repeat} is unsupported: it can only predict repeating facts");
        reports.push_back(cmd_eval(cfg, combo));
    }
    return reports;
}

// ---- sweep -----------------------------------------------------------------

struct SweepRun {
    std::string value;
    EvalReport report;
};

// Re-evaluates (and retrains when the parameter affects training) for each
// value, then writes one report per value plus a summary curve CSV.
inline std::vector<SweepRun> cmd_sweep(const RunConfig& base,
                                       const std::string& param,
                                       const std::vector<std::string>& values,
                                       const std::vector<std::string>& modules) {
    if (values.empty()) throw Error(errc::config, "sweep: no values given");
    const bool eval_only = param == "alpha" || param == "fusion" || param == "mode";
    std::vector<SweepRun> runs;
    for (const auto& value : values) {
        RunConfig cfg = base;
        cfg.apply(param, value);
        cfg.validate();
        if (!eval_only) {
            for (const auto& m : modules) {
                RunConfig tc = cfg;
                tc.module = m;
                cmd_train(tc);
            }
        }
        EvalReport report = cmd_eval(cfg, modules, /*write_report=*/false);
        const Paths p = paths_for(cfg);
        json doc = report_to_json(report, cfg);
        doc["sweep_param"] = param;
        doc["sweep_value"] = value;
        write_json(p.out / (p.ds + ".sweep." + param + "." + value + ".json"), doc);
        runs.push_back({value, std::move(report)});
    }
    const Paths p = paths_for(base);
    std::ofstream csv(p.sweep_csv(param));
    if (!csv) throw Error(errc::io, "cannot write " + p.sweep_csv(param).string());
    csv << param << ",mrr";
    if (!runs.empty())
        for (const auto& [k, _] : runs.front().report.hits) csv << ",hits@" << k;
    csv << "\n";
    for (const auto& run : runs) {
        csv << run.value << "," << std::setprecision(12) << run.report.mrr;
        for (const auto& [_, v] : run.report.hits) csv << "," << v;
        csv << "\n";
    }
    return runs;
}

}  // namespace rlgnet::cli
