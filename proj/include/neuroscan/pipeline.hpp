#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "neuroscan/config.hpp"
#include "neuroscan/metrics.hpp"
#include "neuroscan/model.hpp"

namespace neuroscan {

/// Advisory lock file guarding an output directory; a second command on the
/// same directory fails with lock_error while the first runs.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::filesystem::path path_;
};

/// Stage seeds fan out from the experiment seed by hashing the stage name:
/// derive_seed(seed, "stage/<name>").
uint64_t stage_seed(const ExperimentConfig& cfg, const std::string& stage);

/// grayscale -> denoise -> resize -> normalize for every sample (train and
/// test alike); writes train.nsds, test.nsds, manifest.json and
/// distribution.csv (distribution of the original training portion).
void cmd_preprocess(const ExperimentConfig& cfg);

/// SMOTE-balance the training archive only; writes train_balanced.nsds and
/// updates the manifest. The test archive is never read or written.
void cmd_balance(const ExperimentConfig& cfg);

/// Train the selected architecture on the balanced archive (falls back to
/// the unbalanced one); writes model.ckpt and history.csv.
std::vector<EpochStats> cmd_train(const ExperimentConfig& cfg);

/// Evaluate a checkpoint on the test archive; writes report.json,
/// confusion.csv and roc_<class>.csv.
MetricsReport cmd_evaluate(const ExperimentConfig& cfg,
                           const std::filesystem::path& checkpoint = {});

/// Merge MetricsReport JSON files into one comparison table
/// (model,accuracy,f1,precision,recall,averaging; macro convention).
void cmd_report(const std::vector<std::filesystem::path>& reports,
                const std::filesystem::path& table_path);

}  // namespace neuroscan
