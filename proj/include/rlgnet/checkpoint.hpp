#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "rlgnet/io_util.hpp"
#include "rlgnet/nn.hpp"
#include "rlgnet/types.hpp"

namespace rlgnet {

inline constexpr const char* kCheckpointMagic = "RLGCKP01";

struct CheckpointMeta {
    std::string module_id;  // "local" | "global" | "repeat"
    int32_t epoch = 0;
    double val_mrr = 0.0;
    std::string config_text;  // canonical key=value snapshot
};

inline void save_checkpoint(const std::filesystem::path& path, const CheckpointMeta& meta,
                            const nn::ParamStore& store) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(errc::io, "cannot write " + path.string());
    os.write(kCheckpointMagic, 8);
    io::write_string(os, meta.module_id);
    io::write_pod<int32_t>(os, meta.epoch);
    io::write_pod<double>(os, meta.val_mrr);
    io::write_string(os, meta.config_text);
    io::write_pod<uint64_t>(os, store.all().size());
    for (const auto& p : store.all()) {
        io::write_string(os, p->name);
        io::write_pod<int64_t>(os, p->value.rows());
        io::write_pod<int64_t>(os, p->value.cols());
        os.write(reinterpret_cast<const char*>(p->value.data()),
                 static_cast<std::streamsize>(sizeof(double) * p->value.size()));
    }
    if (!os) throw Error(errc::io, "short write to " + path.string());
}

inline CheckpointMeta peek_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error(errc::missing_artifact, "checkpoint not found: " + path.string());
    io::expect_magic(is, kCheckpointMagic, "checkpoint " + path.string());
    CheckpointMeta meta;
    meta.module_id = io::read_string(is);
    meta.epoch = io::read_pod<int32_t>(is);
    meta.val_mrr = io::read_pod<double>(is);
    meta.config_text = io::read_string(is);
    return meta;
}

// Loads parameter values into an already-constructed store of matching
// shapes. Bit-identical round trip: values are written raw.
inline CheckpointMeta load_checkpoint(const std::filesystem::path& path,
                                      const std::string& expect_module,
                                      nn::ParamStore& store) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error(errc::missing_artifact, "checkpoint not found: " + path.string());
    io::expect_magic(is, kCheckpointMagic, "checkpoint " + path.string());
    CheckpointMeta meta;
    meta.module_id = io::read_string(is);
    if (meta.module_id != expect_module)
        throw Error(errc::validation, path.string() + ": checkpoint holds module '" +
                                          meta.module_id + "', expected '" + expect_module + "'");
    meta.epoch = io::read_pod<int32_t>(is);
    meta.val_mrr = io::read_pod<double>(is);
    meta.config_text = io::read_string(is);
    const auto n = io::read_pod<uint64_t>(is);
    if (n != store.all().size())
        throw Error(errc::validation,
                    path.string() + ": parameter count mismatch (config incompatibility)");
    for (uint64_t i = 0; i < n; ++i) {
        const std::string name = io::read_string(is);
        const auto rows = io::read_pod<int64_t>(is);
        const auto cols = io::read_pod<int64_t>(is);
        nn::Parameter* p = store.find(name);
        if (!p) throw Error(errc::validation, path.string() + ": unknown parameter " + name);
        if (p->value.rows() != rows || p->value.cols() != cols)
            throw Error(errc::validation,
                        path.string() + ": shape mismatch for " + name +
                            " (config incompatibility)");
        is.read(reinterpret_cast<char*>(p->value.data()),
                static_cast<std::streamsize>(sizeof(double) * p->value.size()));
        if (!is) throw Error(errc::io, path.string() + ": truncated parameter data");
    }
    return meta;
}

}  // namespace rlgnet
