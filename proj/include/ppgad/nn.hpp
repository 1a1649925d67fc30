#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ppgad/augment.hpp"
#include "ppgad/types.hpp"

namespace ppgad::nn {

// Encoder-classifier topology:
//
//   input (input_len, 1)
//   conv  kernel K, channels C, valid padding, no activation
//   blocks x [conv K same + ELU, conv K same + ELU, max-pool 2/2]
//   flatten -> dense latent_dim + ReLU  (the representation)
//   dense n_classes + softmax            (the pretext classifier)
//
// The defaults reproduce the 686,756-parameter reference network.
struct ArchitectureSpec {
  std::size_t input_len = 512;
  std::size_t kernel = 64;
  std::size_t channels = 32;
  std::size_t blocks = 5;
  std::size_t latent_dim = 64;
  std::size_t n_classes = 4;

  // Throws ConfigError when any length would collapse below 1.
  void validate() const;

  std::size_t head_len() const { return input_len - kernel + 1; }
  // Length of each block's input; back() is the flattened length / channels.
  std::vector<std::size_t> block_lengths() const;
  std::size_t flat_len() const;
  std::size_t parameter_count() const;

  friend bool operator==(const ArchitectureSpec&, const ArchitectureSpec&) = default;
};

struct TensorInfo {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

// All trainable tensors stored contiguously in one buffer.
//
// Layout, in order: head.kernel [C][1][K], head.bias [C],
// block{j}.conv{1,2}.kernel [C][C][K] and .bias [C], latent.kernel [D][F],
// latent.bias [D], output.kernel [n_classes][D], output.bias [n_classes].
// Gradients use the same type and layout.
class ModelParams {
 public:
  explicit ModelParams(const ArchitectureSpec& spec);

  const ArchitectureSpec& spec() const { return spec_; }
  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  std::span<double> tensor(std::size_t i);
  std::span<const double> tensor(std::size_t i) const;
  // Looks a tensor up by name; throws ContractViolation if absent.
  std::span<const double> tensor(const std::string& name) const;

  friend bool operator==(const ModelParams& a, const ModelParams& b) {
    return a.spec_ == b.spec_ && a.values_ == b.values_;
  }

 private:
  ArchitectureSpec spec_;
  std::vector<TensorInfo> tensors_;
  std::vector<double> values_;
};

// Glorot-uniform kernels and zero biases, deterministic in `seed`.
ModelParams init_params(const ArchitectureSpec& spec, std::uint64_t seed);

struct LayerShape {
  std::string name;
  std::size_t length = 0;
  std::size_t channels = 0;

  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

// Output shapes of every layer, computed from the spec alone.
std::vector<LayerShape> layer_shapes(const ArchitectureSpec& spec);

// Output shapes recorded while actually running one input through the net.
std::vector<LayerShape> traced_shapes(const ModelParams& params, std::span<const double> input);

struct ForwardOutput {
  std::vector<std::vector<double>> latents;
  std::vector<std::vector<double>> logits;
  std::vector<std::vector<double>> probs;
};

ForwardOutput forward(const ModelParams& params, const std::vector<Window>& batch);

// Mean of -log p(true class) with probabilities floored at 1e-12.
double cross_entropy_loss(const std::vector<std::vector<double>>& probs,
                          const std::vector<augment::TransformClass>& labels);

struct LossAndGradient {
  double loss = 0.0;
  ModelParams gradient;
};

// Mean cross-entropy over the batch and its exact gradient.
LossAndGradient backward(const ModelParams& params, const std::vector<Window>& batch,
                         const std::vector<augment::TransformClass>& labels);

// Same, over borrowed inputs; `probs_out` (optional) receives the batch's
// predicted probabilities.
LossAndGradient loss_and_gradient(const ModelParams& params,
                                  std::span<const std::span<const double>> inputs,
                                  std::span<const int> class_indices,
                                  std::vector<std::vector<double>>* probs_out = nullptr);

struct AdamHyper {
  double learning_rate = 1e-4;
  double decay = 0.0;  // inverse-time decay per update
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;  // updates taken so far
};

// Learning rate used for update number `step` (zero-based).
double adam_learning_rate(const AdamHyper& hyper, std::uint64_t step);

// One bias-corrected Adam update with lr = lr0 / (1 + decay * step).
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               const AdamHyper& hyper);

struct TrainConfig {
  double learning_rate = 1e-4;
  double decay = 1e-3;
  std::size_t batch_size = 64;
  std::size_t epochs = 400;
  std::uint64_t seed = 0;
  std::size_t repeats = 1;

  // Settings used for the 500 Hz finger recordings.
  static TrainConfig ptt_ppg() { return {1e-5, 1e-4, 64, 400, 0, 5}; }
  // Settings used for the 64 Hz wrist recordings.
  static TrainConfig dalia() { return {1e-4, 1e-3, 64, 400, 0, 5}; }

  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;  // mean training loss over the epoch
  double auc = 0.0;   // macro one-vs-rest AUC of the epoch's predictions

  friend bool operator==(const EpochStats&, const EpochStats&) = default;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochStats> trace;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Trains the encoder-classifier on the four-class pretext task. The dataset
// is reshuffled every epoch from a stream derived from config.seed.
TrainResult train_pretext(const std::vector<augment::LabeledWindow>& dataset,
                          const ArchitectureSpec& spec, const TrainConfig& config,
                          const EpochCallback& on_epoch = {});

// Macro-averaged one-vs-rest AUC of the classifier on a labeled set.
double pretext_auc(const ModelParams& params,
                   const std::vector<augment::LabeledWindow>& dataset);

// Frozen-encoder features: the post-ReLU latent vector of each window.
std::vector<std::vector<double>> encode(const ModelParams& params,
                                        const std::vector<Window>& windows);
std::vector<double> encode(const ModelParams& params, std::span<const double> input);

// Self-describing checkpoint: header line, JSON metadata line, then the
// parameter buffer as little-endian IEEE-754 doubles.
struct Checkpoint {
  ModelParams params;
  TrainConfig train;
  std::uint64_t seed = 0;
  std::string version;
};

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ppgad::nn
