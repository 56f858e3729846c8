#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "neuroscan/config.hpp"
#include "neuroscan/error.hpp"
#include "neuroscan/pipeline.hpp"
#include "neuroscan/synthcorpus.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  neuroscan::ConfigOverrides overrides;
};

void add_common_options(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config JSON");
  cmd->add_option("--seed", args.overrides.seed, "experiment seed (wins over config and NEUROSCAN_SEED)");
  cmd->add_option("--out", args.overrides.out, "output directory");
  cmd->add_option("--arch", args.overrides.arch, "mini_cnn or toy_vit");
  cmd->add_option("--dataset", args.overrides.dataset, "dataset root directory");
  cmd->add_option("--iterations", args.overrides.iterations, "diffusion iterations");
  cmd->add_option("--kappa", args.overrides.kappa, "diffusion edge threshold");
  cmd->add_option("--lambda", args.overrides.lambda, "diffusion step weight");
  cmd->add_option("--k-neighbors", args.overrides.k_neighbors, "SMOTE neighbor count");
  cmd->add_option("--target", args.overrides.target, "SMOTE per-class target or 'max-class'");
  cmd->add_option("--epochs", args.overrides.epochs, "training epochs");
  cmd->add_option("--batch-size", args.overrides.batch_size, "training batch size");
  cmd->add_option("--lr", args.overrides.lr, "learning rate");
}

neuroscan::ExperimentConfig resolve_config(const CommonArgs& args) {
  const char* env_seed = std::getenv("NEUROSCAN_SEED");
  if (!args.config_path.empty())
    return neuroscan::load_config(args.config_path, args.overrides, env_seed);
  return neuroscan::parse_config("{\"schema_version\":1}", args.overrides,
                                 env_seed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"neuroscan: deterministic image-classification pipeline "
               "(denoise, balance, train, evaluate)"};
  app.require_subcommand(1);

  CommonArgs preprocess_args, balance_args, train_args, evaluate_args;
  std::string checkpoint_path;
  std::vector<std::string> report_inputs;
  std::string table_path = "report_table.csv";
  neuroscan::CorpusSpec corpus;
  std::string corpus_out;

  CLI::App* preprocess = app.add_subcommand(
      "preprocess", "decode, denoise, resize, normalize and split the dataset");
  add_common_options(preprocess, preprocess_args);

  CLI::App* balance_cmd = app.add_subcommand(
      "balance", "SMOTE-balance the training archive");
  add_common_options(balance_cmd, balance_args);

  CLI::App* train_cmd = app.add_subcommand(
      "train", "train the selected architecture");
  add_common_options(train_cmd, train_args);

  CLI::App* evaluate_cmd = app.add_subcommand(
      "evaluate", "evaluate a checkpoint on the test archive");
  add_common_options(evaluate_cmd, evaluate_args);
  evaluate_cmd->add_option("--checkpoint", checkpoint_path,
                           "checkpoint path (default <out>/model.ckpt)");

  CLI::App* report_cmd = app.add_subcommand(
      "report", "merge report JSON files into a comparison table");
  report_cmd->add_option("reports", report_inputs, "report.json files")
      ->required();
  report_cmd->add_option("--table", table_path, "output CSV path");

  CLI::App* synth_cmd = app.add_subcommand(
      "synth", "generate the seeded synthetic shape corpus");
  synth_cmd->add_option("--out", corpus_out, "corpus root directory")->required();
  synth_cmd->add_option("--per-class", corpus.images_per_class, "images per class");
  synth_cmd->add_option("--size", corpus.image_size, "image side length");
  synth_cmd->add_option("--noise", corpus.noise_amplitude, "pixel noise amplitude");
  synth_cmd->add_option("--seed", corpus.seed, "corpus seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage_error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (preprocess->parsed()) {
      neuroscan::cmd_preprocess(resolve_config(preprocess_args));
    } else if (balance_cmd->parsed()) {
      neuroscan::cmd_balance(resolve_config(balance_args));
    } else if (train_cmd->parsed()) {
      const auto history = neuroscan::cmd_train(resolve_config(train_args));
      if (!history.empty())
        std::cout << "final epoch: loss " << history.back().loss
                  << ", accuracy " << history.back().accuracy << "\n";
    } else if (evaluate_cmd->parsed()) {
      const auto report =
          neuroscan::cmd_evaluate(resolve_config(evaluate_args), checkpoint_path);
      std::cout << "accuracy " << report.accuracy << ", macro f1 "
                << report.macro.f1 << "\n";
    } else if (report_cmd->parsed()) {
      std::vector<std::filesystem::path> paths(report_inputs.begin(),
                                               report_inputs.end());
      neuroscan::cmd_report(paths, table_path);
    } else if (synth_cmd->parsed()) {
      neuroscan::generate_shape_corpus(corpus_out, corpus);
    }
  } catch (const neuroscan::Error& e) {
    std::cerr << e.code_name() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
