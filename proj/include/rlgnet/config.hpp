#pragma once

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rlgnet/io_util.hpp"
#include "rlgnet/types.hpp"

namespace rlgnet {

// One run's knobs, resolved from per-dataset defaults, an optional flat
// key=value config file, and command-line overrides (in that order).
struct RunConfig {
    std::string dataset = "ICEWS14";
    std::string data_root = ".";
    std::string out_dir = "runs";
    std::string module = "local";
    std::string mode = "single_step";
    std::string fusion = "probability";
    double alpha = -1.0;  // -1 resolves to the per-dataset default
    int m = -1;           // adjacent history length; -1 resolves per dataset
    int omega = 1;
    int top_k = 20;
    int top_k_all = 200;
    int dim = 200;
    int time_dim = 48;
    double lr = 0.001;
    double lr_decay = 0.8;
    int lr_step = -1;  // -1 resolves per dataset
    int max_epochs = 30;
    int early_stop = 5;
    double grad_clip = 1.0;
    double dropout = 0.2;
    int conv_filters = 50;
    int kernel = 3;
    uint64_t seed = 0;
    bool static_graph_constraint = false;  // accepted, no-op in this artifact
    bool unfiltered_metrics = false;

    static std::string lower(std::string s) {
        std::transform(s.begin(), s.end(), s.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        return s;
    }

    // Fill the -1 fields from the published per-dataset setup.
    void finalize() {
        const std::string d = lower(dataset);
        const bool yearly = d == "wiki" || d == "yago";
        if (m < 0) {
            if (yearly) m = 1;
            else if (d == "icews05-15") m = 15;
            else m = 10;
        }
        if (lr_step < 0) lr_step = yearly ? 2 : 10;
        if (alpha < 0) {
            if (yearly) alpha = 0.9;
            else if (d == "gdelt") alpha = 0.1;
            else alpha = 0.8;
        }
        validate();
    }

    void validate() const {
        if (alpha < 0.0 || alpha > 1.0) throw Error(errc::config, "alpha must lie in [0, 1]");
        if (lr <= 0.0) throw Error(errc::config, "lr must be positive");
        if (lr_decay <= 0.0 || lr_decay > 1.0)
            throw Error(errc::config, "lr_decay must lie in (0, 1]");
        if (m < 1) throw Error(errc::config, "m must be >= 1");
        if (omega < 1) throw Error(errc::config, "omega must be >= 1");
        if (top_k < 1 || top_k_all < 1) throw Error(errc::config, "top_k values must be >= 1");
        if (dim < 2 || dim % 2 != 0) throw Error(errc::config, "dim must be an even integer >= 2");
        if (time_dim < 2 || time_dim % 2 != 0)
            throw Error(errc::config, "time_dim must be an even integer >= 2");
        if (mode != "single_step" && mode != "multi_step")
            throw Error(errc::config, "mode must be single_step or multi_step");
        if (fusion != "probability" && fusion != "raw")
            throw Error(errc::config, "fusion must be probability or raw");
        if (dropout < 0.0 || dropout >= 1.0)
            throw Error(errc::config, "dropout must lie in [0, 1)");
    }

    void apply(const std::string& key, const std::string& value) {
        auto as_int = [&] {
            try {
                return std::stoi(value);
            } catch (...) {
                throw Error(errc::config, "bad integer for " + key + ": " + value);
            }
        };
        auto as_double = [&] {
            try {
                return std::stod(value);
            } catch (...) {
                throw Error(errc::config, "bad number for " + key + ": " + value);
            }
        };
        auto as_bool = [&] {
            const std::string v = lower(value);
            if (v == "1" || v == "true" || v == "yes") return true;
            if (v == "0" || v == "false" || v == "no") return false;
            throw Error(errc::config, "bad boolean for " + key + ": " + value);
        };
        if (key == "dataset") dataset = value;
        else if (key == "data_root") data_root = value;
        else if (key == "out_dir") out_dir = value;
        else if (key == "module") module = value;
        else if (key == "mode") mode = value;
        else if (key == "fusion") fusion = value;
        else if (key == "alpha") alpha = as_double();
        else if (key == "m") m = as_int();
        else if (key == "omega") omega = as_int();
        else if (key == "top_k") top_k = as_int();
        else if (key == "top_k_all") top_k_all = as_int();
        else if (key == "dim") dim = as_int();
        else if (key == "time_dim") time_dim = as_int();
        else if (key == "lr") lr = as_double();
        else if (key == "lr_decay") lr_decay = as_double();
        else if (key == "lr_step") lr_step = as_int();
        else if (key == "max_epochs") max_epochs = as_int();
        else if (key == "early_stop") early_stop = as_int();
        else if (key == "grad_clip") grad_clip = as_double();
        else if (key == "dropout") dropout = as_double();
        else if (key == "conv_filters") conv_filters = as_int();
        else if (key == "kernel") kernel = as_int();
        else if (key == "seed") seed = static_cast<uint64_t>(std::stoull(value));
        else if (key == "static_graph_constraint") static_graph_constraint = as_bool();
        else if (key == "unfiltered_metrics") unfiltered_metrics = as_bool();
        else throw Error(errc::config, "unknown config key: " + key);
    }

    // Flat key=value file; '#' starts a comment line.
    void apply_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw Error(errc::io, "cannot open config file " + path.string());
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw Error(errc::config,
                            path.string() + ":" + std::to_string(lineno) + ": expected key=value");
            auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(" \t\r");
                const auto e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
            };
            apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
    }

    // Canonical sorted key=value text; checkpoints and manifests embed it and
    // hash it.
    std::string canonical_text() const {
        std::map<std::string, std::string> kv;
        auto num = [](double v) {
            std::ostringstream os;
            os << v;
            return os.str();
        };
        kv["dataset"] = dataset;
        kv["module"] = module;
        kv["mode"] = mode;
        kv["fusion"] = fusion;
        kv["alpha"] = num(alpha);
        kv["m"] = std::to_string(m);
        kv["omega"] = std::to_string(omega);
        kv["top_k"] = std::to_string(top_k);
        kv["top_k_all"] = std::to_string(top_k_all);
        kv["dim"] = std::to_string(dim);
        kv["time_dim"] = std::to_string(time_dim);
        kv["lr"] = num(lr);
        kv["lr_decay"] = num(lr_decay);
        kv["lr_step"] = std::to_string(lr_step);
        kv["max_epochs"] = std::to_string(max_epochs);
        kv["early_stop"] = std::to_string(early_stop);
        kv["grad_clip"] = num(grad_clip);
        kv["dropout"] = num(dropout);
        kv["conv_filters"] = std::to_string(conv_filters);
        kv["kernel"] = std::to_string(kernel);
        kv["seed"] = std::to_string(seed);
        kv["static_graph_constraint"] = static_graph_constraint ? "1" : "0";
        std::string out;
        for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
        return out;
    }

    uint64_t hash() const { return io::fnv1a(canonical_text()); }
};

// Dataset root resolution: flag > config file > RLGNET_DATA > cwd.
inline std::string default_data_root() {
    const char* env = std::getenv("RLGNET_DATA");
    return env ? env : ".";
}

}  // namespace rlgnet
