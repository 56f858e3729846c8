#include "neuroscan/config.hpp"

#include <fstream>

#include <json.hpp>

#include "neuroscan/error.hpp"

namespace neuroscan {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) {
  raise(ErrorCode::config_error, "config: " + what);
}

ConductanceKind parse_variant(const std::string& v) {
  if (v == "exponential") return ConductanceKind::exponential;
  if (v == "rational") return ConductanceKind::rational;
  bad("diffusion.variant must be 'exponential' or 'rational'");
}

OptimizerKind parse_optimizer(const std::string& v) {
  if (v == "sgd") return OptimizerKind::sgd;
  if (v == "adam") return OptimizerKind::adam;
  bad("train.optimizer must be 'sgd' or 'adam'");
}

void parse_target(const json& v, SmoteParams& smote) {
  if (v.is_string()) {
    if (v.get<std::string>() != "max-class")
      bad("smote.target_per_class must be an integer or \"max-class\"");
    smote.target_per_class.reset();
  } else if (v.is_number_unsigned() || v.is_number_integer()) {
    const int64_t t = v.get<int64_t>();
    if (t < 1) bad("smote.target_per_class must be >= 1");
    smote.target_per_class = static_cast<size_t>(t);
  } else if (!v.is_null()) {
    bad("smote.target_per_class must be an integer or \"max-class\"");
  }
}

void validate(const ExperimentConfig& cfg) {
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0))
    bad("split.train_fraction must lie in (0, 1)");
  if (cfg.arch != "mini_cnn" && cfg.arch != "toy_vit")
    bad("arch must be 'mini_cnn' or 'toy_vit'");
  if (cfg.diffusion.kappa <= 0.0) bad("diffusion.kappa must be > 0");
  if (cfg.diffusion.lambda < 0.0 || cfg.diffusion.lambda > 0.25)
    bad("diffusion.lambda must lie in [0, 0.25]");
  if (cfg.diffusion.iterations < 0) bad("diffusion.iterations must be >= 0");
  if (cfg.resize_mini_cnn < 4 || cfg.resize_toy_vit < 1)
    bad("resize targets must be positive");
  if (cfg.smote.k_neighbors < 1) bad("smote.k_neighbors must be >= 1");
  if (cfg.train.epochs < 1) bad("train.epochs must be >= 1");
  if (cfg.train.batch_size < 1) bad("train.batch_size must be >= 1");
  if (cfg.train.learning_rate <= 0.0) bad("train.learning_rate must be > 0");
  if (cfg.vit.patch_size < 1 ||
      cfg.resize_toy_vit % cfg.vit.patch_size != 0)
    bad("toy_vit resize target must be divisible by vit.patch_size");
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text,
                              const ConfigOverrides& overrides,
                              const char* env_seed) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    bad(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) bad("document must be a JSON object");
  if (!j.contains("schema_version") || !j["schema_version"].is_number() ||
      j["schema_version"].get<int>() != 1)
    bad("schema_version must be 1");

  ExperimentConfig cfg;
  bool seed_from_file = false;

  try {
    if (j.contains("dataset_root"))
      cfg.dataset_root = j["dataset_root"].get<std::string>();
    if (j.contains("output_dir"))
      cfg.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("seed")) {
      cfg.seed = j["seed"].get<uint64_t>();
      seed_from_file = true;
    }
    if (j.contains("arch")) cfg.arch = j["arch"].get<std::string>();

    if (j.contains("split")) {
      const json& s = j["split"];
      if (s.contains("train_fraction"))
        cfg.train_fraction = s["train_fraction"].get<double>();
    }
    if (j.contains("diffusion")) {
      const json& d = j["diffusion"];
      if (d.contains("iterations"))
        cfg.diffusion.iterations = d["iterations"].get<int>();
      if (d.contains("lambda")) cfg.diffusion.lambda = d["lambda"].get<double>();
      if (d.contains("kappa")) cfg.diffusion.kappa = d["kappa"].get<double>();
      if (d.contains("variant"))
        cfg.diffusion.variant = parse_variant(d["variant"].get<std::string>());
    }
    if (j.contains("resize")) {
      const json& r = j["resize"];
      if (r.contains("mini_cnn")) cfg.resize_mini_cnn = r["mini_cnn"].get<int>();
      if (r.contains("toy_vit")) cfg.resize_toy_vit = r["toy_vit"].get<int>();
    }
    if (j.contains("smote")) {
      const json& s = j["smote"];
      if (s.contains("k_neighbors"))
        cfg.smote.k_neighbors = static_cast<size_t>(s["k_neighbors"].get<int>());
      if (s.contains("target_per_class")) parse_target(s["target_per_class"], cfg.smote);
    }

    // Training defaults follow the selected architecture (the two columns of
    // the hyperparameter table): mini_cnn batch 32 / lr 1e-4, toy_vit batch
    // 16 / lr 1e-3, both 100 epochs.
    const std::string arch_for_defaults =
        overrides.arch ? *overrides.arch : cfg.arch;
    if (arch_for_defaults == "toy_vit") {
      cfg.train.batch_size = 16;
      cfg.train.learning_rate = 1e-3;
    }
    if (j.contains("train")) {
      const json& t = j["train"];
      if (t.contains("epochs")) cfg.train.epochs = t["epochs"].get<int>();
      if (t.contains("batch_size"))
        cfg.train.batch_size = t["batch_size"].get<int>();
      if (t.contains("learning_rate"))
        cfg.train.learning_rate = t["learning_rate"].get<double>();
      if (t.contains("optimizer"))
        cfg.train.optimizer = parse_optimizer(t["optimizer"].get<std::string>());
    }
    if (j.contains("vit")) {
      const json& v = j["vit"];
      if (v.contains("patch_size")) cfg.vit.patch_size = v["patch_size"].get<int>();
      if (v.contains("embed_dim")) cfg.vit.embed_dim = v["embed_dim"].get<int>();
      if (v.contains("num_heads")) cfg.vit.num_heads = v["num_heads"].get<int>();
      if (v.contains("transformer_layers"))
        cfg.vit.transformer_layers = v["transformer_layers"].get<int>();
      if (v.contains("mlp_hidden")) cfg.vit.mlp_hidden = v["mlp_hidden"].get<int>();
    }
  } catch (const json::exception& e) {
    bad(std::string("field has the wrong type: ") + e.what());
  }

  // Seed precedence: flag > config file > NEUROSCAN_SEED > default.
  if (!seed_from_file && env_seed != nullptr) {
    try {
      cfg.seed = std::stoull(env_seed);
    } catch (const std::exception&) {
      bad("NEUROSCAN_SEED is not an unsigned integer");
    }
  }
  if (overrides.seed) cfg.seed = *overrides.seed;
  if (overrides.out) cfg.output_dir = *overrides.out;
  if (overrides.arch) cfg.arch = *overrides.arch;
  if (overrides.dataset) cfg.dataset_root = *overrides.dataset;
  if (overrides.iterations) cfg.diffusion.iterations = *overrides.iterations;
  if (overrides.kappa) cfg.diffusion.kappa = *overrides.kappa;
  if (overrides.lambda) cfg.diffusion.lambda = *overrides.lambda;
  if (overrides.k_neighbors)
    cfg.smote.k_neighbors = static_cast<size_t>(*overrides.k_neighbors);
  if (overrides.target) {
    if (*overrides.target == "max-class") {
      cfg.smote.target_per_class.reset();
    } else {
      try {
        cfg.smote.target_per_class = std::stoull(*overrides.target);
      } catch (const std::exception&) {
        bad("--target must be an integer or 'max-class'");
      }
    }
  }
  if (overrides.epochs) cfg.train.epochs = *overrides.epochs;
  if (overrides.batch_size) cfg.train.batch_size = *overrides.batch_size;
  if (overrides.lr) cfg.train.learning_rate = *overrides.lr;

  // The ViT image size always tracks the resize target.
  cfg.vit.image_size = cfg.resize_toy_vit;

  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             const ConfigOverrides& overrides,
                             const char* env_seed) {
  std::ifstream in(path);
  if (!in)
    raise(ErrorCode::io_error, "cannot open config: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config(text, overrides, env_seed);
}

}  // namespace neuroscan
