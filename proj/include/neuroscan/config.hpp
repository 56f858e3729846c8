#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "neuroscan/diffusion.hpp"
#include "neuroscan/model.hpp"
#include "neuroscan/smote.hpp"

namespace neuroscan {

/// One JSON document drives every pipeline stage. CLI flags override fields
/// after the file is parsed; unset fields resolve to the defaults below
/// (training defaults depend on the selected architecture).
struct ExperimentConfig {
  std::filesystem::path dataset_root;
  std::filesystem::path output_dir = "out";
  uint64_t seed = 42;

  double train_fraction = 0.8;
  DiffusionParams diffusion;
  int resize_mini_cnn = 224;
  int resize_toy_vit = 72;
  SmoteParams smote;

  std::string arch = "mini_cnn";
  TrainConfig train;
  ViTConfig vit;

  int resize_target() const {
    return arch == "toy_vit" ? resize_toy_vit : resize_mini_cnn;
  }
};

struct ConfigOverrides {
  std::optional<uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> arch;
  std::optional<std::string> dataset;
  std::optional<int> iterations;
  std::optional<double> kappa;
  std::optional<double> lambda;
  std::optional<int> k_neighbors;
  std::optional<std::string> target;  // integer or "max-class"
  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::optional<double> lr;
};

/// Parse and validate a config file. `env_seed` is the NEUROSCAN_SEED
/// fallback, used only when neither flag nor file provides a seed.
ExperimentConfig load_config(const std::filesystem::path& path,
                             const ConfigOverrides& overrides,
                             const char* env_seed = nullptr);

/// In-memory variant for tests and defaults (json_text may be "{}" plus a
/// schema_version).
ExperimentConfig parse_config(const std::string& json_text,
                              const ConfigOverrides& overrides,
                              const char* env_seed = nullptr);

}  // namespace neuroscan
