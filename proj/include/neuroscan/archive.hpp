#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "neuroscan/dataset.hpp"

namespace neuroscan {

/// Sample archive layout (all integers little-endian):
///   magic "NSDS" | u16 version | u32 class count | per class: u32 length +
///   UTF-8 name | u32 sample count | per sample: u16 class index | u8
///   synthetic flag | u32 height | u32 width | f32 values (row-major,
///   single channel).
void write_archive(const LabeledSet& set, const std::filesystem::path& path);
LabeledSet read_archive(const std::filesystem::path& path);

/// FNV-1a 64 of a file's bytes, as 16 hex digits (manifest integrity field).
std::string file_hash_hex(const std::filesystem::path& path);

}  // namespace neuroscan
