#include "egoexo/probes.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "json.hpp"

namespace egoexo::probes {

using retrieval::Gallery;
using retrieval::ViewSide;

std::string_view to_string(Side s) {
  switch (s) {
    case Side::ego: return "ego";
    case Side::exo: return "exo";
    case Side::both: return "both";
  }
  return "?";
}

namespace {

struct Labeled {
  std::vector<std::vector<float>> x;
  std::vector<int> y;
  std::vector<std::string> ids;
};

Labeled label_gallery(const Gallery& g, const Manifest& m) {
  Labeled out;
  for (const auto& e : g.entries) {
    const auto first = e.id.find('/');
    const auto last = e.id.rfind('/');
    const auto* s = m.find(e.id.substr(0, first));
    if (!s) fail(ErrorKind::MissingLabels, "no sequence for " + e.id);
    const int t = std::stoi(e.id.substr(last + 1));
    out.x.push_back(e.embedding);
    out.y.push_back(class_index(m.modality, s->ego_frames.at(t).action));
    out.ids.push_back(e.id);
  }
  return out;
}

// Pooled set ordered by id so the fit does not depend on concatenation order.
Labeled pool(const Labeled& a, const Labeled& b) {
  std::vector<std::pair<const Labeled*, std::size_t>> idx;
  for (std::size_t i = 0; i < a.x.size(); ++i) idx.emplace_back(&a, i);
  for (std::size_t i = 0; i < b.x.size(); ++i) idx.emplace_back(&b, i);
  std::sort(idx.begin(), idx.end(), [](const auto& l, const auto& r) { return l.first->ids[l.second] < r.first->ids[r.second]; });
  Labeled out;
  for (const auto& [src, i] : idx) {
    out.x.push_back(src->x[i]);
    out.y.push_back(src->y[i]);
    out.ids.push_back(src->ids[i]);
  }
  return out;
}

struct Standardizer {
  std::vector<double> mean, inv_std;

  explicit Standardizer(const Labeled& train) {
    const std::size_t d = train.x.front().size();
    mean.assign(d, 0.0);
    inv_std.assign(d, 0.0);
    for (const auto& v : train.x) {
      for (std::size_t j = 0; j < d; ++j) mean[j] += v[j];
    }
    for (auto& m : mean) m /= static_cast<double>(train.x.size());
    for (const auto& v : train.x) {
      for (std::size_t j = 0; j < d; ++j) inv_std[j] += (v[j] - mean[j]) * (v[j] - mean[j]);
    }
    for (auto& s : inv_std) {
      const double sd = std::sqrt(s / static_cast<double>(train.x.size()));
      s = sd > 1e-12 ? 1.0 / sd : 1.0;
    }
  }

  void apply(Labeled& l) const {
    for (auto& v : l.x) {
      for (std::size_t j = 0; j < v.size(); ++j) v[j] = static_cast<float>((v[j] - mean[j]) * inv_std[j]);
    }
  }
};

}  // namespace

ProbeReport view_invariance_test(const retrieval::EmbeddingModel& model, retrieval::InputCache& inputs,
                                 const ProbeOptions& opts) {
  if (!model.trained()) fail(ErrorKind::UntrainedModel, "view-invariance test needs a trained model");
  const auto& m = inputs.manifest();
  auto features = [&](Split split, ViewSide view) {
    return label_gallery(retrieval::build_gallery(model, inputs, split, view), m);
  };
  Labeled train[3], test[3];
  train[0] = features(opts.train_split, ViewSide::ego);
  train[1] = features(opts.train_split, ViewSide::exo);
  test[0] = features(opts.test_split, ViewSide::ego);
  test[1] = features(opts.test_split, ViewSide::exo);
  if (train[0].x.empty() || test[0].x.empty()) fail(ErrorKind::MissingLabels, "train or test split has no frames");
  if (opts.permute_labels) {
    std::mt19937_64 rng(opts.seed);
    for (int v = 0; v < 2; ++v) std::shuffle(train[v].y.begin(), train[v].y.end(), rng);
  }
  train[2] = pool(train[0], train[1]);
  test[2] = pool(test[0], test[1]);
  if (opts.standardize) {
    const Standardizer z(train[2]);
    for (auto& l : train) z.apply(l);
    for (auto& l : test) z.apply(l);
  }

  ProbeReport r;
  const auto vocab = vocabulary(m.modality);
  r.classes = static_cast<int>(vocab.size());
  r.chance = 1.0 / r.classes;
  for (auto a : vocab) r.class_names.emplace_back(to_string(a));
  r.train_samples = static_cast<int>(train[0].x.size());
  r.test_samples = static_cast<int>(test[0].x.size());
  r.permuted = opts.permute_labels;
  for (int fit = 0; fit < 3; ++fit) {
    svm::LinearSvm clf;
    auto so = opts.svm;
    so.seed = opts.seed + static_cast<std::uint64_t>(fit) * 101;
    clf.fit(train[fit].x, train[fit].y, so);
    for (int ev = 0; ev < 3; ++ev) r.accuracy[fit][ev] = clf.accuracy(test[ev].x, test[ev].y);
  }
  return r;
}

std::string to_json(const ProbeReport& r) {
  nlohmann::json grid;
  for (int fit = 0; fit < 3; ++fit) {
    nlohmann::json row;
    for (int ev = 0; ev < 3; ++ev) row[std::string(to_string(static_cast<Side>(ev)))] = r.accuracy[fit][ev];
    grid[std::string(to_string(static_cast<Side>(fit))) + "_only"] = row;
  }
  grid.erase("both_only");
  nlohmann::json both;
  for (int ev = 0; ev < 3; ++ev) both[std::string(to_string(static_cast<Side>(ev)))] = r.accuracy[2][ev];
  grid["both_views"] = both;
  return nlohmann::json{{"accuracy", grid},
                        {"chance", r.chance},
                        {"classes", r.class_names},
                        {"train_samples_per_view", r.train_samples},
                        {"test_samples_per_view", r.test_samples},
                        {"permuted_labels", r.permuted}}
      .dump(2);
}

std::string to_csv(const ProbeReport& r) {
  static const char* rows[] = {"ego-only", "exo-only", "both-views"};
  std::ostringstream os;
  os << "classifier,ego,exo,both\n";
  for (int fit = 0; fit < 3; ++fit) {
    os << rows[fit];
    for (int ev = 0; ev < 3; ++ev) os << ',' << r.accuracy[fit][ev];
    os << '\n';
  }
  return os.str();
}

SynthesizeFn generator_fn(const synthesis::SynthesisModel& model) {
  return [&model](const PairedSequence&, int, const Frame& exo) {
    const int size = model.generator().config().image_size;
    return model.generate(resize_bilinear(exo, size, size));
  };
}

SynthRetrievalResult synthesized_retrieval_test(const SynthesizeFn& synth, const retrieval::EmbeddingModel& model,
                                                retrieval::InputCache& inputs, Split split) {
  if (model.input_channels() != 3) fail(ErrorKind::InvalidArgument, "synthesized retrieval needs the RGB variant");
  const auto& m = inputs.manifest();
  const int size = model.config().input_size;
  Gallery synth_gallery;
  synth_gallery.kind = GalleryKind::F_prime_ego;
  for (const auto* s : sequences_in(m, split)) {
    for (int t = 0; t < static_cast<int>(s->length()); ++t) {
      const Frame fake = synth(*s, t, read_png(s->exo_frame_path(t)));
      synth_gallery.entries.push_back(
          {retrieval::source_id(*s, retrieval::gallery_view(GalleryKind::F_prime_ego), t),
           model.encode(ViewSide::ego, retrieval::rgb_input(fake, size))});
    }
  }
  if (synth_gallery.entries.empty()) fail(ErrorKind::DataEmpty, "split has no frames");
  synth_gallery.normalize();
  const auto f_exo = retrieval::build_gallery(model, inputs, split, ViewSide::exo);
  const auto f_ego = retrieval::build_gallery(model, inputs, split, ViewSide::ego);
  return {metrics::cmc(retrieval::retrieve_all(synth_gallery, f_exo)),
          metrics::cmc(retrieval::retrieve_all(synth_gallery, f_ego))};
}

}  // namespace egoexo::probes
