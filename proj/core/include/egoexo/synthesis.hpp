#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "egoexo/dataset.hpp"
#include "egoexo/image.hpp"
#include "egoexo/nn/adam.hpp"
#include "egoexo/nn/checkpoint.hpp"
#include "egoexo/nn/layers.hpp"

namespace egoexo::synthesis {

using nn::Tensor;

/// U-Net encoder/decoder with skip connections. Each down block halves the
/// resolution, so `image_size` must be divisible by 2^depth.
struct GeneratorConfig {
  int image_size = 256;
  int depth = 8;
  int base_width = 64;
  int max_mult = 8;
  int channels = 3;
  /// Zero the final transposed convolution so the untrained output is tanh(0).
  bool zero_tail = false;
  std::uint64_t seed = 0;

  int width(int level) const;
  void validate() const;
};

/// Patch discriminator over the (condition, candidate) channel stack.
/// `layers` = 3 gives the 70x70 receptive field.
struct DiscriminatorConfig {
  int layers = 3;
  int base_width = 64;
  int channels = 3;
  std::uint64_t seed = 1;

  void validate() const;
};

template <class T>
class Generator {
 public:
  explicit Generator(const GeneratorConfig& cfg);

  Tensor<T> infer(const Tensor<T>& exo) const;
  Tensor<T> forward(const Tensor<T>& exo);
  Tensor<T> backward(const Tensor<T>& dy);

  std::vector<nn::Parameter<T>*> params();
  std::vector<nn::Buffer<T>> buffers();
  const GeneratorConfig& config() const noexcept { return cfg_; }

 private:
  GeneratorConfig cfg_;
  std::vector<nn::Sequential<T>> down_;
  std::vector<nn::Sequential<T>> up_;
  std::vector<int> skip_channels_;
};

template <class T>
class Discriminator {
 public:
  explicit Discriminator(const DiscriminatorConfig& cfg);

  /// Patch logits (N, 1, h, w) for candidate images conditioned on `cond`.
  Tensor<T> infer(const Tensor<T>& cond, const Tensor<T>& candidate) const;
  Tensor<T> forward(const Tensor<T>& cond, const Tensor<T>& candidate);
  /// Returns (d cond, d candidate).
  std::pair<Tensor<T>, Tensor<T>> backward(const Tensor<T>& dlogits);

  std::vector<nn::Parameter<T>*> params();
  const DiscriminatorConfig& config() const noexcept { return cfg_; }

 private:
  DiscriminatorConfig cfg_;
  nn::Sequential<T> net_;
  int cond_channels_ = 3;
};

/// Clamp applied to probabilities inside every logarithm.
inline constexpr double kProbEpsilon = 1e-7;

/// Mean of -log(clamp(sigmoid(z))). Writes d/dz into `grad` when given.
template <class T>
T bce_real(const Tensor<T>& logits, Tensor<T>* grad);

/// Mean of -log(1 - clamp(sigmoid(z))).
template <class T>
T bce_fake(const Tensor<T>& logits, Tensor<T>* grad);

/// -[mean log D(real) + mean log(1 - D(fake))].
template <class T>
T discriminator_loss(const Tensor<T>& real_logits, const Tensor<T>& fake_logits, Tensor<T>* grad_real,
                     Tensor<T>* grad_fake);

/// Non-saturating generator loss -mean log D(fake).
template <class T>
T generator_adversarial_loss(const Tensor<T>& fake_logits, Tensor<T>* grad);

/// Mean absolute difference; gradient is with respect to `pred`.
template <class T>
T l1_loss(const Tensor<T>& target, const Tensor<T>& pred, Tensor<T>* grad);

struct AdversarialLosses {
  double loss_d = 0.0;
  double loss_g_adv = 0.0;
};

template <class T>
AdversarialLosses adversarial_loss(const Discriminator<T>& d, const Tensor<T>& exo, const Tensor<T>& ego,
                                   const Tensor<T>& fake_ego);

/// L1 between frames after normalization to [-1, 1].
double l1_loss(const Frame& ego, const Frame& fake_ego);

struct SynthesisConfig {
  double lambda = 100.0;
  int epochs = 15;
  int batch_size = 1;
  nn::AdamOptions adam{2e-4, 0.5, 0.999, 1e-8};
  std::uint64_t seed = 0;
  /// Save every N epochs (the final epoch is always saved); 0 saves only the
  /// final epoch.
  int checkpoint_every = 1;
  /// Cap on training pairs drawn from the split (0 = all), taken in manifest
  /// order.
  int max_pairs = 0;
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;

  void validate() const;
};

/// adv + lambda * l1.
double combined_loss(double adv, double l1, const SynthesisConfig& cfg);

std::string to_json(const SynthesisConfig& cfg);
SynthesisConfig synthesis_config_from_json(const std::string& text);

/// (1, 3, H, W) tensor in [-1, 1].
template <class T = float>
Tensor<T> frame_to_tensor(const Frame& f);
/// Inverse of frame_to_tensor for one sample, rounded and clamped to [0, 255].
Frame tensor_to_frame(const Tensor<float>& t, int sample = 0);

struct StepLosses {
  double loss_d = 0.0;
  double loss_g_adv = 0.0;
  double l1 = 0.0;
  double total = 0.0;
};

struct EpochLog {
  int epoch = 0;
  int d_steps = 0;
  int g_steps = 0;
  double loss_d = 0.0;
  double loss_g_adv = 0.0;
  double l1 = 0.0;
  double total = 0.0;
};

/// Generator + discriminator + both optimizers; one object per training run.
class SynthesisTrainer {
 public:
  explicit SynthesisTrainer(const SynthesisConfig& cfg);

  /// Alternating discriminator then generator update on one batch.
  StepLosses train_step(const Tensor<float>& exo, const Tensor<float>& ego);

  nn::Checkpoint checkpoint(int epoch) const;
  /// Loads weights (and optimizer state when present).
  void load(const nn::Checkpoint& ckpt);

  Generator<float>& generator() noexcept { return *gen_; }
  const Generator<float>& generator() const noexcept { return *gen_; }
  Discriminator<float>& discriminator() noexcept { return *disc_; }
  const SynthesisConfig& config() const noexcept { return cfg_; }
  long long steps() const noexcept { return opt_g_->steps(); }

 private:
  SynthesisConfig cfg_;
  std::unique_ptr<Generator<float>> gen_;
  std::unique_ptr<Discriminator<float>> disc_;
  std::unique_ptr<nn::Adam<float>> opt_g_;
  std::unique_ptr<nn::Adam<float>> opt_d_;
};

inline constexpr const char* kSynthesisKind = "synthesis";

/// Inference-only wrapper around a trained generator.
class SynthesisModel {
 public:
  explicit SynthesisModel(const GeneratorConfig& cfg);
  static SynthesisModel from_checkpoint(const nn::Checkpoint& ckpt);

  /// Resizes nothing: `exo` must already match the generator's input size.
  Frame generate(const Frame& exo) const;
  Generator<float>& generator() noexcept { return gen_; }
  const Generator<float>& generator() const noexcept { return gen_; }

 private:
  Generator<float> gen_;
};

/// generate(g, I_exo) with ShapeError on wrong input size.
Frame generate(const Generator<float>& g, const Frame& exo);

struct TrainOptions {
  std::filesystem::path out_dir;
  /// Pretrained checkpoint to start from; nullopt trains from scratch.
  std::optional<std::filesystem::path> init;
  /// Resume optimizer state and epoch counter from `init`.
  bool resume = false;
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochLog> epochs;
  std::vector<std::filesystem::path> checkpoints;
};

TrainResult train(const Manifest& m, const SynthesisConfig& cfg, const TrainOptions& opts);

/// Writes generated ego frames for every exo frame of `split` to
/// `out_dir/<sequence id>/%06d.png` at generator resolution.
void generate_split(const SynthesisModel& model, const Manifest& m, Split split, const std::filesystem::path& out_dir);

}  // namespace egoexo::synthesis
