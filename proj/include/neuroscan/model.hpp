#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "neuroscan/dataset.hpp"
#include "neuroscan/tensor.hpp"

namespace neuroscan {

struct Param {
  std::string name;
  Tensor* value;
};

/// Gradient accumulators, one per named parameter, iterated in parameter
/// order so reductions are bit-stable.
class Grads {
 public:
  Grads() = default;
  explicit Grads(const std::vector<Param>& params);

  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  void zero();
  void add(const Grads& other);
  std::vector<std::pair<std::string, Tensor>>& entries() { return entries_; }
  const std::vector<std::pair<std::string, Tensor>>& entries() const {
    return entries_;
  }

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::unordered_map<std::string, size_t> index_;
};

struct ForwardHooks {
  // Called with every attention probability matrix (rows sum to 1).
  std::function<void(const std::string& layer, const Tensor& probs)> on_attention;
};

/// Values saved during forward for the matching backward, pushed and popped
/// stack-wise. One tape per in-flight sample keeps batch parallelism safe.
struct Tape {
  std::vector<Tensor> saved;
  ForwardHooks* hooks = nullptr;

  void push(Tensor t) { saved.push_back(std::move(t)); }
  Tensor pop();
};

class Module {
 public:
  virtual ~Module() = default;
  virtual Tensor forward(const Tensor& x, Tape& tape) const = 0;
  virtual Tensor backward(const Tensor& grad, Tape& tape, Grads& grads) const = 0;
  virtual void collect_params(std::vector<Param>& out) = 0;
};

struct Model {
  std::string arch_id;  // architecture plus its hyperparameters
  std::vector<size_t> input_shape;  // {1, H, W}
  size_t num_classes = 0;
  std::vector<std::unique_ptr<Module>> stack;
  std::vector<Param> params;

  Tensor forward(const Tensor& x, Tape& tape) const;
  Tensor backward(const Tensor& grad, Tape& tape, Grads& grads) const;
  /// Forward with a throwaway tape.
  Tensor run(const Tensor& x, ForwardHooks* hooks = nullptr) const;
};

// Layer factories: the same modules the architecture builders assemble,
// exposed for composition and unit-level gradient checks.
std::unique_ptr<Module> make_conv2d(const std::string& name, size_t in_c,
                                    size_t out_c, size_t kernel, int padding);
std::unique_ptr<Module> make_relu();
std::unique_ptr<Module> make_maxpool2x2();
std::unique_ptr<Module> make_flatten();
std::unique_ptr<Module> make_dense(const std::string& name, size_t in_dim,
                                   size_t out_dim);
std::unique_ptr<Module> make_layernorm(const std::string& name, size_t dim);
std::unique_ptr<Module> make_softmax();
std::unique_ptr<Module> make_patchify(int patch);
std::unique_ptr<Module> make_positional(const std::string& name, size_t tokens,
                                        size_t embed);
std::unique_ptr<Module> make_self_attention(const std::string& name,
                                            size_t embed, size_t heads);
std::unique_ptr<Module> make_transformer_block(const std::string& name,
                                               size_t embed, size_t heads,
                                               size_t mlp_hidden);
std::unique_ptr<Module> make_mean_pool();

/// He-uniform for weights (seeded per parameter name), ones for layernorm
/// gains, zeros for biases.
void init_params(std::vector<Param>& params, uint64_t seed);

/// conv(8,3x3,same) -> relu -> pool -> conv(16,3x3,same) -> relu -> pool ->
/// dense(64) -> relu -> dense(classes) -> softmax. At the 224x224x1 input the
/// stages are 8x224x224 -> 8x112x112 -> 16x112x112 -> 16x56x56 -> 50176 ->
/// 64 -> classes.
Model build_mini_cnn(size_t num_classes, int input_size = 224,
                     uint64_t seed = 0);

struct ViTConfig {
  int image_size = 72;
  int patch_size = 3;
  int embed_dim = 64;
  int num_heads = 4;
  int transformer_layers = 8;
  int mlp_hidden = 128;

  int num_patches() const {
    const int g = image_size / patch_size;
    return g * g;
  }
};

/// patchify -> linear patch embedding -> learned positional embedding ->
/// pre-norm transformer blocks (MHSA + MLP, residual) -> mean pool ->
/// dense -> softmax.
Model build_toy_vit(const ViTConfig& config, size_t num_classes,
                    uint64_t seed = 0);

enum class OptimizerKind { sgd, adam };

struct TrainConfig {
  int epochs = 100;
  int batch_size = 32;
  double learning_rate = 1e-4;
  OptimizerKind optimizer = OptimizerKind::adam;
  uint64_t seed = 0;
};

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate);
  /// Applies one update. Every parameter must have a gradient entry.
  void step(const std::vector<Param>& params, const Grads& grads);

 private:
  OptimizerKind kind_;
  double lr_;
  int64_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

struct EpochStats {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Minibatch training: seeded reshuffle per epoch, forward/backward per
/// batch, one optimizer step per batch. Gradient accumulation uses a fixed
/// number of slots reduced in slot order, so results are bit-identical for
/// any thread count.
std::vector<EpochStats> train(Model& model, const LabeledSet& train_set,
                              const TrainConfig& config);

/// Softmax probabilities for one image; length num_classes, sums to 1.
std::vector<double> predict(const Model& model, const Image& img);

size_t argmax_index(const std::vector<double>& values);

}  // namespace neuroscan
