#include "neuroscan/pipeline.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "neuroscan/archive.hpp"
#include "neuroscan/checkpoint.hpp"
#include "neuroscan/dataset.hpp"
#include "neuroscan/diffusion.hpp"
#include "neuroscan/error.hpp"
#include "neuroscan/rng.hpp"
#include "neuroscan/smote.hpp"

namespace neuroscan {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kLockName = ".neuroscan.lock";

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::io_error, "cannot write: " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) raise(ErrorCode::io_error, "write failed: " + path.string());
}

json read_manifest(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in)
    raise(ErrorCode::io_error,
          "missing manifest (run preprocess first): " +
              (dir / "manifest.json").string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    raise(ErrorCode::decode_error,
          std::string("manifest: invalid JSON: ") + e.what());
  }
}

void write_manifest(const fs::path& dir, const json& manifest) {
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

json counts_json(const LabeledSet& set) {
  json counts = json::object();
  const auto per_class = set.class_counts();
  for (size_t i = 0; i < set.class_names.size(); ++i)
    counts[set.class_names[i]] = per_class[i];
  return counts;
}

Image preprocess_image(const Image& img, const ExperimentConfig& cfg) {
  Image gray = to_grayscale(img);
  Image smooth = denoise(gray, cfg.diffusion);
  Image sized = resize_bilinear(smooth, cfg.resize_target(), cfg.resize_target());
  return normalize(sized);
}

std::string short_arch(const std::string& arch_id) {
  const size_t open = arch_id.find('(');
  return open == std::string::npos ? arch_id : arch_id.substr(0, open);
}

}  // namespace

OutputLock::OutputLock(const fs::path& dir) {
  fs::create_directories(dir);
  path_ = dir / kLockName;
  std::FILE* fp = std::fopen(path_.string().c_str(), "wx");
  if (!fp) {
    path_.clear();
    raise(ErrorCode::lock_error,
          "output directory is locked by another command: " + dir.string());
  }
  std::fclose(fp);
}

OutputLock::~OutputLock() {
  if (!path_.empty()) {
    std::error_code ec;
    fs::remove(path_, ec);
  }
}

uint64_t stage_seed(const ExperimentConfig& cfg, const std::string& stage) {
  return derive_seed(cfg.seed, "stage/" + stage);
}

void cmd_preprocess(const ExperimentConfig& cfg) {
  OutputLock lock(cfg.output_dir);

  LabeledSet raw = scan_dataset(cfg.dataset_root);
  auto [train_set, test_set] =
      split_stratified(raw, cfg.train_fraction, stage_seed(cfg, "split"));

  for (Sample& s : train_set.samples) s.image = preprocess_image(s.image, cfg);
  for (Sample& s : test_set.samples) s.image = preprocess_image(s.image, cfg);

  write_archive(train_set, cfg.output_dir / "train.nsds");
  write_archive(test_set, cfg.output_dir / "test.nsds");
  write_text(cfg.output_dir / "distribution.csv",
             distribution_csv(distribution(train_set)));

  json manifest;
  manifest["schema_version"] = 1;
  manifest["dataset_root"] = cfg.dataset_root.string();
  manifest["seed"] = cfg.seed;
  manifest["classes"] = raw.class_names;
  json stage;
  stage["stage_seed"] = stage_seed(cfg, "split");
  stage["train_fraction"] = cfg.train_fraction;
  stage["diffusion"] = {
      {"iterations", cfg.diffusion.iterations},
      {"lambda", cfg.diffusion.lambda},
      {"kappa", cfg.diffusion.kappa},
      {"variant", cfg.diffusion.variant == ConductanceKind::exponential
                      ? "exponential"
                      : "rational"}};
  stage["resize"] = cfg.resize_target();
  stage["arch"] = cfg.arch;
  // Identical preprocessing is applied to the held-out test images.
  stage["applies_to_test"] = true;
  stage["train_counts"] = counts_json(train_set);
  stage["test_counts"] = counts_json(test_set);
  stage["archives"] = {
      {"train.nsds", file_hash_hex(cfg.output_dir / "train.nsds")},
      {"test.nsds", file_hash_hex(cfg.output_dir / "test.nsds")}};
  manifest["stages"]["preprocess"] = stage;
  write_manifest(cfg.output_dir, manifest);
}

void cmd_balance(const ExperimentConfig& cfg) {
  OutputLock lock(cfg.output_dir);
  json manifest = read_manifest(cfg.output_dir);

  LabeledSet train_set = read_archive(cfg.output_dir / "train.nsds");
  SmoteParams params = cfg.smote;
  params.seed = stage_seed(cfg, "smote");
  BalanceReport report;
  LabeledSet balanced = balance(train_set, params, &report);
  write_archive(balanced, cfg.output_dir / "train_balanced.nsds");

  json stage;
  stage["stage_seed"] = params.seed;
  stage["k_neighbors"] = params.k_neighbors;
  if (params.target_per_class)
    stage["target_per_class"] = *params.target_per_class;
  else
    stage["target_per_class"] = "max-class";
  stage["counts"] = counts_json(balanced);
  json added = json::object(), removed = json::object();
  for (size_t i = 0; i < balanced.class_names.size(); ++i) {
    added[balanced.class_names[i]] = report.added_per_class[i];
    removed[balanced.class_names[i]] = report.removed_per_class[i];
  }
  stage["synthetic_added"] = added;
  stage["removed"] = removed;
  stage["archives"] = {
      {"train_balanced.nsds",
       file_hash_hex(cfg.output_dir / "train_balanced.nsds")}};
  manifest["stages"]["balance"] = stage;
  write_manifest(cfg.output_dir, manifest);
}

std::vector<EpochStats> cmd_train(const ExperimentConfig& cfg) {
  OutputLock lock(cfg.output_dir);

  const fs::path balanced = cfg.output_dir / "train_balanced.nsds";
  const fs::path plain = cfg.output_dir / "train.nsds";
  const fs::path source = fs::exists(balanced) ? balanced : plain;
  LabeledSet train_set = read_archive(source);
  if (train_set.samples.empty())
    raise(ErrorCode::invalid_argument, "train: archive has no samples");

  // Pre-flight: archive geometry must match the configured input size.
  const int target = cfg.resize_target();
  for (const Sample& s : train_set.samples)
    if (s.image.height != target || s.image.width != target)
      raise(ErrorCode::config_error,
            "train: archive sample size does not match the configured resize "
            "target; re-run preprocess with this architecture");

  const uint64_t train_stage = stage_seed(cfg, "train");
  Model model;
  if (cfg.arch == "toy_vit") {
    ViTConfig vit = cfg.vit;
    vit.image_size = target;
    model = build_toy_vit(vit, train_set.num_classes(),
                          derive_seed(train_stage, "model"));
  } else {
    model = build_mini_cnn(train_set.num_classes(), target,
                           derive_seed(train_stage, "model"));
  }

  TrainConfig tc = cfg.train;
  tc.seed = derive_seed(train_stage, "loop");
  const std::vector<EpochStats> history = train(model, train_set, tc);

  save_checkpoint_file(model, cfg.output_dir / "model.ckpt");
  std::string csv = "epoch,loss,accuracy\n";
  char line[128];
  for (size_t e = 0; e < history.size(); ++e) {
    std::snprintf(line, sizeof(line), "%zu,%.17g,%.17g\n", e + 1,
                  history[e].loss, history[e].accuracy);
    csv += line;
  }
  write_text(cfg.output_dir / "history.csv", csv);
  return history;
}

MetricsReport cmd_evaluate(const ExperimentConfig& cfg,
                           const fs::path& checkpoint) {
  OutputLock lock(cfg.output_dir);

  const fs::path ckpt_path =
      checkpoint.empty() ? cfg.output_dir / "model.ckpt" : checkpoint;
  Model model = load_checkpoint_file(ckpt_path);
  LabeledSet test_set = read_archive(cfg.output_dir / "test.nsds");
  if (test_set.samples.empty())
    raise(ErrorCode::invalid_argument, "evaluate: test archive has no samples");
  if (test_set.num_classes() != model.num_classes)
    raise(ErrorCode::checkpoint_format,
          "evaluate: checkpoint expects " + std::to_string(model.num_classes) +
              " classes, archive has " +
              std::to_string(test_set.num_classes()));
  const Sample& first = test_set.samples.front();
  if (static_cast<size_t>(first.image.height) != model.input_shape[1] ||
      static_cast<size_t>(first.image.width) != model.input_shape[2])
    raise(ErrorCode::checkpoint_format,
          "evaluate: checkpoint input shape does not match the test archive");

  std::vector<std::vector<double>> scores;
  std::vector<int> labels;
  scores.reserve(test_set.samples.size());
  for (const Sample& s : test_set.samples) {
    scores.push_back(predict(model, s.image));
    labels.push_back(s.label);
  }

  MetricsReport report = evaluate_predictions(scores, labels,
                                              test_set.class_names,
                                              short_arch(model.arch_id));
  write_text(cfg.output_dir / "report.json", report_json(report));
  write_text(cfg.output_dir / "confusion.csv", confusion_csv(report.matrix));
  for (size_t c = 0; c < test_set.class_names.size(); ++c) {
    if (report.auc_degenerate[c]) continue;
    RocCurve curve = roc_curve(scores, labels, static_cast<int>(c));
    write_text(cfg.output_dir / ("roc_" + test_set.class_names[c] + ".csv"),
               roc_csv(curve));
  }
  return report;
}

void cmd_report(const std::vector<fs::path>& reports,
                const fs::path& table_path) {
  std::string csv = "model,accuracy,f1,precision,recall,averaging\n";
  char line[256];
  for (const fs::path& path : reports) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::io_error, "cannot open report: " + path.string());
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      raise(ErrorCode::io_error,
            "invalid report JSON " + path.string() + ": " + e.what());
    }
    if (!j.contains("model") || !j.contains("accuracy") || !j.contains("macro"))
      raise(ErrorCode::io_error,
            "report missing required keys: " + path.string());
    std::snprintf(line, sizeof(line), "%s,%.4f,%.4f,%.4f,%.4f,macro\n",
                  j["model"].get<std::string>().c_str(),
                  j["accuracy"].get<double>(),
                  j["macro"]["f1"].get<double>(),
                  j["macro"]["precision"].get<double>(),
                  j["macro"]["recall"].get<double>());
    csv += line;
  }
  write_text(table_path, csv);
}

}  // namespace neuroscan
