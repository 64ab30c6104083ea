#pragma once
// Versioned binary checkpoint:
//
//   "DEMNCKPT"              8 bytes magic
//   u32 version             little-endian
//   u64 manifest length     little-endian
//   manifest                UTF-8 JSON (config, vocabulary, parameter table)
//   payload                 every parameter's values as little-endian f64, in
//                           manifest order
//   u64 checksum            FNV-1a 64 over all preceding bytes

#include <filesystem>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "demn/trainer.hpp"

namespace demn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
    TrainConfig config;
    std::size_t epoch = 0;  // epoch whose parameters are stored
    double best_dev_acc = 0.0;
};

struct LoadedCheckpoint {
    CheckpointMeta meta;
    data::Vocab vocab;
    std::unique_ptr<Model> model;
};

std::string encode_checkpoint(const Model& model, const data::Vocab& vocab, const CheckpointMeta& meta);
LoadedCheckpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Model& model, const data::Vocab& vocab,
                     const CheckpointMeta& meta);
/// Throws ChecksumMismatch when the file was altered or truncated.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Reads only the JSON manifest (no checksum verification).
nlohmann::json read_manifest(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes);

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

}  // namespace demn
