#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "neuroscan/model.hpp"

namespace neuroscan {

/// Checkpoint layout (all integers little-endian):
///   magic "NSPM" | u16 version | u32 arch-id length | arch-id UTF-8 |
///   u32 parameter-record count | per parameter:
///     u32 name length | name UTF-8 | u8 rank | u32 dims... | f32 values...
/// The arch-id string carries the hyperparameters needed to rebuild the
/// module stack; load restores parameter values on top of it.
std::vector<uint8_t> save_checkpoint(const Model& model);
Model load_checkpoint(std::span<const uint8_t> bytes);

void save_checkpoint_file(const Model& model, const std::filesystem::path& path);
Model load_checkpoint_file(const std::filesystem::path& path);

}  // namespace neuroscan
