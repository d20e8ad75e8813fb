#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "egoexo/dataset.hpp"
#include "egoexo/flow.hpp"
#include "egoexo/nn/adam.hpp"
#include "egoexo/nn/checkpoint.hpp"
#include "egoexo/nn/layers.hpp"
#include "egoexo/ranking.hpp"

namespace egoexo::retrieval {

using nn::Tensor;

enum class Variant { rgb, flow };

std::string to_string(Variant v);
Variant parse_variant(std::string_view s);
std::string to_string(GalleryKind k);
GalleryKind parse_gallery_kind(std::string_view s);

inline constexpr int kEmbeddingDim = 512;

/// Stride-2 conv stages (conv 3x3, batch norm, ReLU), global average pooling
/// and a fully connected head.
struct EncoderConfig {
  int input_size = 128;
  int channels = 3;
  std::vector<int> widths{32, 64, 128, 256, 512};
  int embedding_dim = kEmbeddingDim;
  /// Zero the head so every input maps to the zero vector.
  bool zero_head = false;
  std::uint64_t seed = 0;

  void validate() const;
};

template <class T>
class Encoder {
 public:
  Encoder(const EncoderConfig& cfg, const std::string& prefix);

  /// (N, C, S, S) -> (N, D, 1, 1).
  Tensor<T> infer(const Tensor<T>& x) const;
  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& dy);

  std::vector<nn::Parameter<T>*> params();
  std::vector<nn::Buffer<T>> buffers();
  const EncoderConfig& config() const noexcept { return cfg_; }

 private:
  void check_input(const Tensor<T>& x) const;

  EncoderConfig cfg_;
  nn::Sequential<T> net_;
};

/// Contrastive loss for one pair: d^2 for label 0, max(0, m - d)^2 for label 1.
double contrastive_loss(std::span<const float> ego, std::span<const float> exo, int label, double margin);

/// Mean contrastive loss over a batch of (N, D, 1, 1) embeddings. Gradients
/// with respect to both inputs are written when requested.
template <class T>
T contrastive_loss(const Tensor<T>& ego, const Tensor<T>& exo, std::span<const int> labels, double margin,
                   Tensor<T>* grad_ego, Tensor<T>* grad_exo);

enum class ViewSide { ego, exo };

/// View-specific encoders that do not share weights.
class EmbeddingModel {
 public:
  explicit EmbeddingModel(const EncoderConfig& cfg, double margin = 1.0);

  std::vector<float> encode(ViewSide view, const Tensor<float>& x) const;
  /// Batched encode; returns one row per sample.
  std::vector<std::vector<float>> encode_batch(ViewSide view, const Tensor<float>& x) const;

  Encoder<float>& encoder(ViewSide v) noexcept { return v == ViewSide::ego ? ego_ : exo_; }
  const Encoder<float>& encoder(ViewSide v) const noexcept { return v == ViewSide::ego ? ego_ : exo_; }
  std::vector<nn::Parameter<float>*> params();
  std::vector<nn::Buffer<float>> buffers();

  const EncoderConfig& config() const noexcept { return ego_.config(); }
  int input_channels() const noexcept { return ego_.config().channels; }
  int embedding_dim() const noexcept { return ego_.config().embedding_dim; }
  double margin() const noexcept { return margin_; }
  bool trained() const noexcept { return trained_; }
  void set_trained(bool t) noexcept { trained_ = t; }

 private:
  Encoder<float> ego_;
  Encoder<float> exo_;
  double margin_;
  bool trained_ = false;
};

/// Key of one network input: sequence index in the manifest and time index.
struct FrameKey {
  int sequence = 0;
  int t = 0;
  auto operator<=>(const FrameKey&) const = default;
};

struct PairSample {
  FrameKey ego;
  FrameKey exo;
  int label = 0;  // 0 positive, 1 negative
};

struct SamplingOptions {
  int neg_ratio = 3;
  /// Share of negatives drawn from the same sequence (t1 != t2); the rest come
  /// from other sequences of the split.
  double within_fraction = 0.5;
  std::uint64_t seed = 0;
};

/// Positive pairs for every usable time index of `split` followed by their
/// negatives, in shuffled order. Flow skips t = 0, which has no predecessor.
std::vector<PairSample> sample_pairs(const Manifest& m, Split split, Variant variant, const SamplingOptions& opts);

struct InputOptions {
  Variant variant = Variant::rgb;
  int input_size = 128;
  double flow_sigma = kDefaultFlowSigma;
  /// Precomputed EFLO files laid out as <dir>/<sequence id>/<view>/%06d.flo.
  std::optional<std::filesystem::path> flow_dir;
};

/// Lazily materialized, cached network inputs for one manifest.
class InputCache {
 public:
  InputCache(const Manifest& m, InputOptions opts);

  const Tensor<float>& get(ViewSide view, FrameKey key);
  const Manifest& manifest() const noexcept { return *m_; }
  const InputOptions& options() const noexcept { return opts_; }

 private:
  void load_sequence(ViewSide view, int sequence);

  const Manifest* m_;
  InputOptions opts_;
  std::map<std::pair<int, int>, std::vector<Tensor<float>>> cache_;  // (view, sequence) -> by t
  GradientFlowEstimator estimator_;
};

/// RGB frame to a (1, 3, S, S) tensor in [-1, 1].
Tensor<float> rgb_input(const Frame& f, int size);
/// Flow field resized to S x S with rescaled vectors, as (1, 2, S, S).
Tensor<float> flow_input(const FlowField& f, int size);

/// First time index with a valid input for the variant.
int first_time(Variant v);

struct RetrievalConfig {
  Variant variant = Variant::rgb;
  EncoderConfig encoder;
  double margin = 1.0;
  SamplingOptions sampling;
  int epochs = 10;
  int batch_size = 16;
  nn::AdamOptions adam{1e-3, 0.9, 0.999, 1e-8};
  double flow_sigma = kDefaultFlowSigma;
  std::optional<std::filesystem::path> flow_dir;
  /// Cap on positives per epoch (0 = all); negatives scale with neg_ratio.
  int max_positives = 0;
  /// Evaluate validation CMC-AUC after each epoch.
  bool validate_each_epoch = true;
  std::uint64_t seed = 0;

  void validate() const;
};

std::string to_json(const RetrievalConfig& cfg);
RetrievalConfig retrieval_config_from_json(const std::string& text);

inline constexpr const char* kRetrievalKind = "retrieval";

nn::Checkpoint make_checkpoint(EmbeddingModel& model, const RetrievalConfig& cfg, nn::Adam<float>* opt, int epoch);
/// Model plus the config it was trained with.
std::pair<EmbeddingModel, RetrievalConfig> load_model(const nn::Checkpoint& ckpt);

struct RetrievalEpochLog {
  int epoch = 0;
  int steps = 0;
  int samples = 0;
  double loss = 0.0;
  std::optional<double> val_auc;
};

struct RetrievalTrainOptions {
  std::filesystem::path out_dir;
  /// Pretrained weights; required when `adapt` is set.
  std::optional<std::filesystem::path> init;
  /// Freeze the fully connected head and update only the conv stages.
  bool adapt = false;
  std::function<void(const RetrievalEpochLog&)> on_epoch;
};

struct RetrievalTrainResult {
  EmbeddingModel model;
  std::vector<RetrievalEpochLog> epochs;
  std::vector<std::filesystem::path> checkpoints;
};

RetrievalTrainResult train(const Manifest& m, const RetrievalConfig& cfg, const RetrievalTrainOptions& opts);

struct GalleryEntry {
  std::string id;
  std::vector<float> embedding;
};

struct Gallery {
  GalleryKind kind = GalleryKind::F_exo;
  Variant variant = Variant::rgb;
  std::vector<GalleryEntry> entries;

  int dim() const noexcept { return entries.empty() ? 0 : static_cast<int>(entries.front().embedding.size()); }
  /// Index of `id`, or -1.
  int find(std::string_view id) const;
  /// Sorts entries by id and rejects duplicates or mixed dimensions.
  void normalize();
};

std::string_view view_name(ViewSide v);
/// "<sequence id>/<view>/<%06d t>"; synthesized ego frames use view "synth".
std::string source_id(const PairedSequence& s, std::string_view view, int t);
/// Swaps the view component of a source id.
std::string with_view(std::string_view id, std::string_view view);
/// View component matched by queries against a gallery of `kind`.
std::string_view gallery_view(GalleryKind kind);

/// One entry per usable frame of `split` in `view`. Ground-truth sources
/// encode frames listed in the manifest.
Gallery build_gallery(const EmbeddingModel& model, InputCache& inputs, Split split, ViewSide view);

/// Encodes `<dir>/<sequence id>/%06d.png` images with the ego stream. Kind is F'_ego.
Gallery build_synthesized_gallery(const EmbeddingModel& model, const Manifest& m, Split split,
                                  const std::filesystem::path& dir);

/// Ascending Euclidean ranking; equal distances keep gallery (id) order.
RankingResult retrieve(std::span<const float> query, std::string_view query_id, std::string_view truth_id,
                       const Gallery& gallery);

/// Ranks every query entry against `gallery`, matching by sequence and time.
std::vector<RankingResult> retrieve_all(const Gallery& queries, const Gallery& gallery);

void write_gallery(const std::filesystem::path& path, const Gallery& g);
Gallery read_gallery(const std::filesystem::path& path);

/// Query view and gallery view for an evaluation direction string
/// ("ego2exo" or "exo2ego").
std::pair<ViewSide, ViewSide> parse_direction(std::string_view s);

/// Encodes both views of `split` and ranks query view against gallery view.
std::vector<RankingResult> evaluate(const EmbeddingModel& model, InputCache& inputs, Split split,
                                    ViewSide query_view = ViewSide::ego);

}  // namespace egoexo::retrieval
