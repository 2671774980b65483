#pragma once

// Checkpoints: little-endian binary with the run configuration echoed as
// text and a directory of named f64 tensors (values plus Adam moments).
//
//   "SRCK" u32 version
//   u32 text_len, text          run config and model shape, key = value
//   u64 epochs_completed, i64 adam_step
//   u32 tensor_count, then per tensor:
//     u32 name_len, name, u32 trainable, u32 ndim, u32 dims[ndim],
//     f64 value[size], f64 m[size], f64 v[size]

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "surreal/config.hpp"
#include "surreal/model.hpp"

namespace surreal {

struct LoadedCheckpoint {
    RunConfig run;
    ArchConfig arch;
    std::size_t epochs_completed = 0;
    Model model;
};

std::vector<std::uint8_t> encode_checkpoint(const Model& model, const RunConfig& run, const ArchConfig& arch,
                                            std::size_t epochs_completed);
LoadedCheckpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const Model& model, const RunConfig& run,
                     const ArchConfig& arch, std::size_t epochs_completed);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace surreal
