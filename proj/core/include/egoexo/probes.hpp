#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "egoexo/metrics.hpp"
#include "egoexo/retrieval.hpp"
#include "egoexo/svm.hpp"
#include "egoexo/synthesis.hpp"

namespace egoexo::probes {

/// Rows: which features the classifier was fit on. Columns: which test
/// features it is evaluated on. Both use the order ego, exo, both.
enum class Side { ego = 0, exo = 1, both = 2 };
std::string_view to_string(Side s);

struct ProbeReport {
  std::array<std::array<double, 3>, 3> accuracy{};
  double chance = 0.0;
  int classes = 0;
  std::vector<std::string> class_names;
  int train_samples = 0;  // per view
  int test_samples = 0;   // per view
  bool permuted = false;

  double at(Side fit, Side eval) const { return accuracy[static_cast<int>(fit)][static_cast<int>(eval)]; }
};

struct ProbeOptions {
  /// Shuffle training labels before fitting (null calibration).
  bool permute_labels = false;
  /// Z-score features with training statistics.
  bool standardize = false;
  std::uint64_t seed = 0;
  Split train_split = Split::train;
  Split test_split = Split::test;
  svm::SvmOptions svm;
};

/// Fits ego-only, exo-only and pooled linear SVMs on embeddings of the train
/// split and scores each on ego, exo and pooled test embeddings.
ProbeReport view_invariance_test(const retrieval::EmbeddingModel& model, retrieval::InputCache& inputs,
                                 const ProbeOptions& opts = {});

std::string to_json(const ProbeReport& r);
std::string to_csv(const ProbeReport& r);

/// Produces I'_ego for an exo frame at time `t` of `s`.
using SynthesizeFn = std::function<Frame(const PairedSequence& s, int t, const Frame& exo)>;

/// Wraps a generator; exo frames are resized to its input size first.
SynthesizeFn generator_fn(const synthesis::SynthesisModel& model);

struct SynthRetrievalResult {
  metrics::CMCCurve vs_exo;
  metrics::CMCCurve vs_ego;
};

/// Encodes synthesized ego frames with the ego stream (F'_ego) and ranks the
/// ground-truth entries of F_exo and F_ego for each.
SynthRetrievalResult synthesized_retrieval_test(const SynthesizeFn& synth, const retrieval::EmbeddingModel& model,
                                                retrieval::InputCache& inputs, Split split);

}  // namespace egoexo::probes
