#include "egoexo/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include "egoexo/metrics.hpp"
#include "json.hpp"

namespace egoexo::retrieval {

using nlohmann::json;

std::string to_string(Variant v) { return v == Variant::rgb ? "rgb" : "flow"; }

Variant parse_variant(std::string_view s) {
  if (s == "rgb") return Variant::rgb;
  if (s == "flow") return Variant::flow;
  fail(ErrorKind::InvalidArgument, "unknown variant '" + std::string(s) + "'");
}

std::string to_string(GalleryKind k) {
  switch (k) {
    case GalleryKind::F_ego: return "F_ego";
    case GalleryKind::F_prime_ego: return "F'_ego";
    case GalleryKind::F_exo: return "F_exo";
  }
  return "?";
}

GalleryKind parse_gallery_kind(std::string_view s) {
  if (s == "F_ego") return GalleryKind::F_ego;
  if (s == "F'_ego" || s == "F_prime_ego") return GalleryKind::F_prime_ego;
  if (s == "F_exo") return GalleryKind::F_exo;
  fail(ErrorKind::SchemaError, "unknown gallery kind '" + std::string(s) + "'");
}

void EncoderConfig::validate() const {
  if (channels != 2 && channels != 3) fail(ErrorKind::InvalidArgument, "encoder input channels must be 2 or 3");
  if (widths.empty()) fail(ErrorKind::InvalidArgument, "encoder needs at least one stage");
  if (embedding_dim < 1) fail(ErrorKind::InvalidArgument, "embedding dim must be >= 1");
  const int stride = 1 << widths.size();
  if (input_size < stride || input_size % stride != 0) {
    fail(ErrorKind::InvalidArgument, "input size " + std::to_string(input_size) + " not divisible by " +
                                         std::to_string(stride));
  }
}

template <class T>
Encoder<T>::Encoder(const EncoderConfig& cfg, const std::string& prefix) : cfg_(cfg) {
  cfg_.validate();
  std::mt19937_64 rng(cfg.seed);
  int in = cfg.channels;
  for (std::size_t i = 0; i < cfg.widths.size(); ++i) {
    const std::string name = prefix + ".stage" + std::to_string(i);
    net_.template add<nn::Conv2d<T>>(name + ".conv", in, cfg.widths[i], 3, 2, 1, rng, 0.0);
    net_.template add<nn::BatchNorm2d<T>>(name + ".bn", cfg.widths[i]);
    net_.template add<nn::ReLU<T>>();
    in = cfg.widths[i];
  }
  net_.template add<nn::GlobalAvgPool<T>>();
  auto& fc = net_.template add<nn::Linear<T>>(prefix + ".fc", in, cfg.embedding_dim, rng);
  if (cfg.zero_head) {
    fc.weight().value.fill(T(0));
    fc.bias().value.fill(T(0));
  }
}

template <class T>
void Encoder<T>::check_input(const Tensor<T>& x) const {
  if (x.c() != cfg_.channels || x.h() != cfg_.input_size || x.w() != cfg_.input_size) {
    fail(ErrorKind::ShapeError, "encoder expects (N," + std::to_string(cfg_.channels) + "," +
                                    std::to_string(cfg_.input_size) + "," + std::to_string(cfg_.input_size) +
                                    "), got " + x.shape_string());
  }
}

template <class T>
Tensor<T> Encoder<T>::infer(const Tensor<T>& x) const {
  check_input(x);
  return net_.infer(x);
}

template <class T>
Tensor<T> Encoder<T>::forward(const Tensor<T>& x) {
  check_input(x);
  return net_.forward(x);
}

template <class T>
Tensor<T> Encoder<T>::backward(const Tensor<T>& dy) {
  return net_.backward(dy);
}

template <class T>
std::vector<nn::Parameter<T>*> Encoder<T>::params() {
  std::vector<nn::Parameter<T>*> out;
  net_.collect(out);
  return out;
}

template <class T>
std::vector<nn::Buffer<T>> Encoder<T>::buffers() {
  std::vector<nn::Buffer<T>> out;
  net_.collect_buffers(out);
  return out;
}

template class Encoder<float>;
template class Encoder<double>;

double contrastive_loss(std::span<const float> ego, std::span<const float> exo, int label, double margin) {
  if (ego.size() != exo.size()) fail(ErrorKind::DimensionMismatch, "embedding dims differ");
  if (!(margin > 0.0)) fail(ErrorKind::InvalidArgument, "margin must be > 0");
  double d2 = 0.0;
  for (std::size_t i = 0; i < ego.size(); ++i) {
    const double diff = static_cast<double>(ego[i]) - exo[i];
    d2 += diff * diff;
  }
  if (label == 0) return d2;
  const double gap = std::max(0.0, margin - std::sqrt(d2));
  return gap * gap;
}

template <class T>
T contrastive_loss(const Tensor<T>& ego, const Tensor<T>& exo, std::span<const int> labels, double margin,
                   Tensor<T>* grad_ego, Tensor<T>* grad_exo) {
  if (!ego.same_shape(exo)) fail(ErrorKind::DimensionMismatch, "embedding batches differ in shape");
  if (static_cast<int>(labels.size()) != ego.n()) fail(ErrorKind::DimensionMismatch, "label count != batch size");
  if (!(margin > 0.0)) fail(ErrorKind::InvalidArgument, "margin must be > 0");
  const int n = ego.n();
  const std::size_t dim = ego.sample_size();
  if (grad_ego) *grad_ego = Tensor<T>::like(ego);
  if (grad_exo) *grad_exo = Tensor<T>::like(exo);
  T total = 0;
  for (int i = 0; i < n; ++i) {
    const T* a = ego.sample(i);
    const T* b = exo.sample(i);
    T d2 = 0;
    for (std::size_t j = 0; j < dim; ++j) d2 += (a[j] - b[j]) * (a[j] - b[j]);
    // dL/d(a - b) as a multiple of (a - b).
    T scale = 0;
    if (labels[i] == 0) {
      total += d2;
      scale = T(2);
    } else {
      const T d = std::sqrt(d2);
      const T gap = static_cast<T>(margin) - d;
      if (gap > 0) {
        total += gap * gap;
        if (d > 0) scale = -T(2) * gap / d;
      }
    }
    scale /= static_cast<T>(n);
    if (scale != 0) {
      for (std::size_t j = 0; j < dim; ++j) {
        const T g = scale * (a[j] - b[j]);
        if (grad_ego) grad_ego->sample(i)[j] = g;
        if (grad_exo) grad_exo->sample(i)[j] = -g;
      }
    }
  }
  return total / static_cast<T>(n);
}

template float contrastive_loss<float>(const Tensor<float>&, const Tensor<float>&, std::span<const int>, double,
                                       Tensor<float>*, Tensor<float>*);
template double contrastive_loss<double>(const Tensor<double>&, const Tensor<double>&, std::span<const int>, double,
                                         Tensor<double>*, Tensor<double>*);

namespace {

EncoderConfig offset_seed(EncoderConfig cfg, std::uint64_t offset) {
  cfg.seed += offset;
  return cfg;
}

}  // namespace

EmbeddingModel::EmbeddingModel(const EncoderConfig& cfg, double margin)
    : ego_(cfg, "ego"), exo_(offset_seed(cfg, 0x9e3779b9ULL), "exo"), margin_(margin) {
  if (!(margin > 0.0)) fail(ErrorKind::InvalidArgument, "margin must be > 0");
}

std::vector<std::vector<float>> EmbeddingModel::encode_batch(ViewSide view, const Tensor<float>& x) const {
  const auto y = encoder(view).infer(x);
  std::vector<std::vector<float>> out(y.n());
  for (int i = 0; i < y.n(); ++i) out[i].assign(y.sample(i), y.sample(i) + y.sample_size());
  return out;
}

std::vector<float> EmbeddingModel::encode(ViewSide view, const Tensor<float>& x) const {
  if (x.n() != 1) fail(ErrorKind::ShapeError, "encode takes a single sample");
  return encode_batch(view, x).front();
}

std::vector<nn::Parameter<float>*> EmbeddingModel::params() {
  auto out = ego_.params();
  for (auto* p : exo_.params()) out.push_back(p);
  return out;
}

std::vector<nn::Buffer<float>> EmbeddingModel::buffers() {
  auto out = ego_.buffers();
  for (auto& b : exo_.buffers()) out.push_back(b);
  return out;
}

int first_time(Variant v) { return v == Variant::flow ? 1 : 0; }

std::vector<PairSample> sample_pairs(const Manifest& m, Split split, Variant variant, const SamplingOptions& opts) {
  if (opts.neg_ratio < 0) fail(ErrorKind::InvalidArgument, "neg_ratio must be >= 0");
  const int t0 = first_time(variant);
  std::vector<int> seqs;
  for (int i = 0; i < static_cast<int>(m.sequences.size()); ++i) {
    const auto& s = m.sequences[i];
    if (s.split == split && static_cast<int>(s.length()) > t0) seqs.push_back(i);
  }
  if (seqs.empty()) fail(ErrorKind::DataEmpty, "split " + std::string(to_string(split)) + " has no usable frames");

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto len = [&](int seq) { return static_cast<int>(m.sequences[seq].length()); };

  std::vector<PairSample> out;
  for (std::size_t si = 0; si < seqs.size(); ++si) {
    const int seq = seqs[si];
    for (int t = t0; t < len(seq); ++t) {
      out.push_back({{seq, t}, {seq, t}, 0});
      for (int j = 0; j < opts.neg_ratio; ++j) {
        const bool within = seqs.size() == 1 || coin(rng) < opts.within_fraction;
        if (within) {
          const int usable = len(seq) - t0;
          if (usable < 2) continue;
          int t2 = uniform(t0, len(seq) - 2);
          if (t2 >= t) ++t2;
          out.push_back({{seq, t}, {seq, t2}, 1});
        } else {
          int idx = uniform(0, static_cast<int>(seqs.size()) - 2);
          if (idx >= static_cast<int>(si)) ++idx;
          const int other = seqs[idx];
          const int hi = len(other) - 1;
          if (hi == t0 && t0 == t) continue;
          int t2 = t;
          while (t2 == t) t2 = uniform(t0, hi);
          out.push_back({{seq, t}, {other, t2}, 1});
        }
      }
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

Tensor<float> rgb_input(const Frame& f, int size) {
  const Frame r = (f.height() == size && f.width() == size) ? f : resize_bilinear(f, size, size);
  Tensor<float> t(1, 3, size, size);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) t.at(0, c, y, x) = static_cast<float>(r.at(y, x, c) / 127.5 - 1.0);
    }
  }
  return t;
}

namespace {
float compress(float v) { return std::copysign(std::log1p(std::abs(v) / 0.05f), v); }
}  // namespace

Tensor<float> flow_input(const FlowField& f, int size) {
  const FlowField r = (f.height() == size && f.width() == size) ? f : resize_flow(f, size, size);
  Tensor<float> t(1, 2, size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      t.at(0, 0, y, x) = compress(r.dx(y, x));
      t.at(0, 1, y, x) = compress(r.dy(y, x));
    }
  }
  return t;
}

std::string_view view_name(ViewSide v) { return v == ViewSide::ego ? "ego" : "exo"; }

InputCache::InputCache(const Manifest& m, InputOptions opts) : m_(&m), opts_(std::move(opts)) {}

void InputCache::load_sequence(ViewSide view, int sequence) {
  const auto& s = m_->sequences.at(sequence);
  const int n = static_cast<int>(s.length());
  auto path = [&](int t) { return view == ViewSide::ego ? s.ego_frame_path(t) : s.exo_frame_path(t); };
  std::vector<Tensor<float>> items(n);
  if (opts_.variant == Variant::rgb) {
    for (int t = 0; t < n; ++t) items[t] = rgb_input(read_png(path(t)), opts_.input_size);
  } else if (opts_.flow_dir) {
    for (int t = 1; t < n; ++t) {
      items[t] = flow_input(read_flow(flow_file(*opts_.flow_dir, s.id, view_name(view), t)), opts_.input_size);
    }
  } else {
    std::vector<Frame> frames;
    frames.reserve(n);
    for (int t = 0; t < n; ++t) frames.push_back(read_png(path(t)));
    const auto fs = smooth_temporal(compute_flow_sequence(frames, estimator_), opts_.flow_sigma);
    for (int t = 1; t < n; ++t) items[t] = flow_input(fs.flows[t - 1], opts_.input_size);
  }
  cache_[{static_cast<int>(view), sequence}] = std::move(items);
}

const Tensor<float>& InputCache::get(ViewSide view, FrameKey key) {
  const std::pair<int, int> k{static_cast<int>(view), key.sequence};
  auto it = cache_.find(k);
  if (it == cache_.end()) {
    load_sequence(view, key.sequence);
    it = cache_.find(k);
  }
  const auto& items = it->second;
  if (key.t < 0 || key.t >= static_cast<int>(items.size()) || items[key.t].empty()) {
    fail(ErrorKind::InvalidArgument, "no input for time index " + std::to_string(key.t));
  }
  return items[key.t];
}

void RetrievalConfig::validate() const {
  encoder.validate();
  const int want = variant == Variant::rgb ? 3 : 2;
  if (encoder.channels != want) {
    fail(ErrorKind::InvalidArgument, "variant " + to_string(variant) + " needs " + std::to_string(want) + " channels");
  }
  if (!(margin > 0.0)) fail(ErrorKind::InvalidArgument, "margin must be > 0");
  if (epochs < 1) fail(ErrorKind::InvalidArgument, "epochs must be >= 1");
  if (batch_size < 1) fail(ErrorKind::InvalidArgument, "batch size must be >= 1");
  if (flow_sigma < 0.0) fail(ErrorKind::NegativeSigma, "flow sigma must be >= 0");
}

std::string to_json(const RetrievalConfig& c) {
  json j{
      {"variant", to_string(c.variant)},
      {"encoder",
       {{"input_size", c.encoder.input_size},
        {"channels", c.encoder.channels},
        {"widths", c.encoder.widths},
        {"embedding_dim", c.encoder.embedding_dim},
        {"zero_head", c.encoder.zero_head},
        {"seed", c.encoder.seed}}},
      {"margin", c.margin},
      {"neg_ratio", c.sampling.neg_ratio},
      {"within_fraction", c.sampling.within_fraction},
      {"sampling_seed", c.sampling.seed},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"lr", c.adam.lr},
      {"beta1", c.adam.beta1},
      {"beta2", c.adam.beta2},
      {"flow_sigma", c.flow_sigma},
      {"max_positives", c.max_positives},
      {"validate_each_epoch", c.validate_each_epoch},
      {"seed", c.seed},
  };
  if (c.flow_dir) j["flow_dir"] = c.flow_dir->string();
  return j.dump();
}

RetrievalConfig retrieval_config_from_json(const std::string& text) {
  RetrievalConfig c;
  try {
    const json j = json::parse(text);
    if (j.contains("variant")) c.variant = parse_variant(j["variant"].get<std::string>());
    if (j.contains("encoder")) {
      const auto& e = j["encoder"];
      c.encoder.input_size = e.value("input_size", c.encoder.input_size);
      c.encoder.channels = e.value("channels", c.encoder.channels);
      c.encoder.widths = e.value("widths", c.encoder.widths);
      c.encoder.embedding_dim = e.value("embedding_dim", c.encoder.embedding_dim);
      c.encoder.zero_head = e.value("zero_head", c.encoder.zero_head);
      c.encoder.seed = e.value("seed", c.encoder.seed);
    }
    c.margin = j.value("margin", c.margin);
    c.sampling.neg_ratio = j.value("neg_ratio", c.sampling.neg_ratio);
    c.sampling.within_fraction = j.value("within_fraction", c.sampling.within_fraction);
    c.sampling.seed = j.value("sampling_seed", c.sampling.seed);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.adam.lr = j.value("lr", c.adam.lr);
    c.adam.beta1 = j.value("beta1", c.adam.beta1);
    c.adam.beta2 = j.value("beta2", c.adam.beta2);
    c.flow_sigma = j.value("flow_sigma", c.flow_sigma);
    c.max_positives = j.value("max_positives", c.max_positives);
    c.validate_each_epoch = j.value("validate_each_epoch", c.validate_each_epoch);
    c.seed = j.value("seed", c.seed);
    if (j.contains("flow_dir")) c.flow_dir = j["flow_dir"].get<std::string>();
  } catch (const json::exception& e) {
    fail(ErrorKind::SchemaError, std::string("retrieval config: ") + e.what());
  }
  return c;
}

nn::Checkpoint make_checkpoint(EmbeddingModel& model, const RetrievalConfig& cfg, nn::Adam<float>* opt, int epoch) {
  nn::Checkpoint c;
  c.kind = kRetrievalKind;
  c.config_json = to_json(cfg);
  c.epoch = epoch;
  c.params = nn::export_params(model.params());
  c.buffers = nn::export_buffers(model.buffers());
  if (opt) {
    c.step = opt->steps();
    nn::export_adam(*opt, "adam", c.optimizer);
  }
  return c;
}

std::pair<EmbeddingModel, RetrievalConfig> load_model(const nn::Checkpoint& ckpt) {
  if (ckpt.kind != kRetrievalKind) fail(ErrorKind::CheckpointIncompatible, "checkpoint kind '" + ckpt.kind + "'");
  auto cfg = retrieval_config_from_json(ckpt.config_json);
  cfg.encoder.zero_head = false;
  EmbeddingModel model(cfg.encoder, cfg.margin);
  nn::import_params(ckpt.params, model.params());
  nn::import_buffers(ckpt.buffers, model.buffers());
  model.set_trained(true);
  return {std::move(model), cfg};
}

namespace {

Tensor<float> gather(InputCache& cache, ViewSide view, std::span<const FrameKey> keys) {
  std::vector<const Tensor<float>*> items;
  items.reserve(keys.size());
  for (const auto& k : keys) items.push_back(&cache.get(view, k));
  return nn::stack<float>(items);
}

std::string epoch_name(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "retr_epoch%04d.ckpt", epoch);
  return buf;
}

}  // namespace

RetrievalTrainResult train(const Manifest& m, const RetrievalConfig& cfg, const RetrievalTrainOptions& opts) {
  cfg.validate();
  if (opts.adapt && !opts.init) fail(ErrorKind::InvalidArgument, "adapt requires a pretrained init checkpoint");

  EmbeddingModel model(cfg.encoder, cfg.margin);
  nn::Adam<float> opt(model.params(), cfg.adam);
  if (opts.init) {
    const auto ckpt = nn::load_checkpoint(*opts.init);
    if (ckpt.kind != kRetrievalKind) fail(ErrorKind::CheckpointIncompatible, "checkpoint kind '" + ckpt.kind + "'");
    const auto init_cfg = retrieval_config_from_json(ckpt.config_json);
    if (init_cfg.variant != cfg.variant) {
      fail(ErrorKind::CheckpointIncompatible, "init checkpoint variant " + to_string(init_cfg.variant));
    }
    nn::import_params(ckpt.params, model.params());
    nn::import_buffers(ckpt.buffers, model.buffers());
  }
  if (opts.adapt) opt.freeze(nn::ParamGroup::head);

  InputCache cache(m, {cfg.variant, cfg.encoder.input_size, cfg.flow_sigma, cfg.flow_dir});
  const bool has_val = !sequences_in(m, Split::val).empty();

  RetrievalTrainResult result{std::move(model), {}, {}};
  auto& net = result.model;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto sampling = cfg.sampling;
    sampling.seed = cfg.sampling.seed * 1000003ULL + cfg.seed * 7919ULL + static_cast<std::uint64_t>(epoch);
    auto pairs = sample_pairs(m, Split::train, cfg.variant, sampling);
    if (cfg.max_positives > 0) {
      const std::size_t cap = static_cast<std::size_t>(cfg.max_positives) * (1 + cfg.sampling.neg_ratio);
      if (pairs.size() > cap) pairs.resize(cap);
    }

    RetrievalEpochLog log;
    log.epoch = epoch;
    std::vector<FrameKey> ego_keys, exo_keys;
    std::vector<int> labels;
    for (std::size_t b = 0; b < pairs.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(pairs.size(), b + cfg.batch_size);
      ego_keys.clear();
      exo_keys.clear();
      labels.clear();
      for (std::size_t i = b; i < e; ++i) {
        ego_keys.push_back(pairs[i].ego);
        exo_keys.push_back(pairs[i].exo);
        labels.push_back(pairs[i].label);
      }
      const auto x_ego = gather(cache, ViewSide::ego, ego_keys);
      const auto x_exo = gather(cache, ViewSide::exo, exo_keys);
      opt.zero_grad();
      const auto e_ego = net.encoder(ViewSide::ego).forward(x_ego);
      const auto e_exo = net.encoder(ViewSide::exo).forward(x_exo);
      Tensor<float> g_ego, g_exo;
      const float loss = contrastive_loss<float>(e_ego, e_exo, labels, cfg.margin, &g_ego, &g_exo);
      net.encoder(ViewSide::ego).backward(g_ego);
      net.encoder(ViewSide::exo).backward(g_exo);
      opt.step();
      log.loss += static_cast<double>(loss) * static_cast<double>(e - b);
      log.samples += static_cast<int>(e - b);
      ++log.steps;
    }
    if (log.samples > 0) log.loss /= log.samples;
    net.set_trained(true);
    if (cfg.validate_each_epoch && has_val) log.val_auc = metrics::cmc(evaluate(net, cache, Split::val)).auc;
    result.epochs.push_back(log);
    if (opts.on_epoch) opts.on_epoch(log);

    if (!opts.out_dir.empty()) {
      const auto path = opts.out_dir / epoch_name(epoch);
      nn::save_checkpoint(path, make_checkpoint(net, cfg, &opt, epoch));
      result.checkpoints.push_back(path);
    }
  }
  return result;
}

int Gallery::find(std::string_view id) const {
  const auto it = std::lower_bound(entries.begin(), entries.end(), id,
                                   [](const GalleryEntry& e, std::string_view v) { return e.id < v; });
  if (it != entries.end() && it->id == id) return static_cast<int>(it - entries.begin());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

void Gallery::normalize() {
  std::sort(entries.begin(), entries.end(), [](const GalleryEntry& a, const GalleryEntry& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].id == entries[i - 1].id) fail(ErrorKind::SchemaError, "duplicate gallery id " + entries[i].id);
  }
  for (const auto& e : entries) {
    if (e.embedding.size() != entries.front().embedding.size()) {
      fail(ErrorKind::DimensionMismatch, "gallery embeddings differ in dimension");
    }
  }
}

std::string source_id(const PairedSequence& s, std::string_view view, int t) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06d", t);
  return s.id + "/" + std::string(view) + "/" + buf;
}

std::string with_view(std::string_view id, std::string_view view) {
  const auto last = id.rfind('/');
  const auto first = last == std::string_view::npos ? std::string_view::npos : id.rfind('/', last - 1);
  if (first == std::string_view::npos) fail(ErrorKind::SchemaError, "malformed source id '" + std::string(id) + "'");
  return std::string(id.substr(0, first + 1)) + std::string(view) + std::string(id.substr(last));
}

std::string_view gallery_view(GalleryKind kind) {
  switch (kind) {
    case GalleryKind::F_ego: return "ego";
    case GalleryKind::F_prime_ego: return "synth";
    case GalleryKind::F_exo: return "exo";
  }
  return "?";
}

namespace {

constexpr int kEncodeBatch = 32;

// Encodes (key, id) items in batches and appends them to `g`.
template <class Fetch>
void encode_into(const EmbeddingModel& model, ViewSide view, std::size_t count, Fetch fetch,
                 const std::vector<std::string>& ids, Gallery& g) {
  std::vector<Tensor<float>> owned;
  for (std::size_t b = 0; b < count; b += kEncodeBatch) {
    const std::size_t e = std::min(count, b + kEncodeBatch);
    owned.clear();
    for (std::size_t i = b; i < e; ++i) owned.push_back(fetch(i));
    std::vector<const Tensor<float>*> ptrs;
    for (const auto& t : owned) ptrs.push_back(&t);
    const auto rows = model.encode_batch(view, nn::stack<float>(ptrs));
    for (std::size_t i = b; i < e; ++i) g.entries.push_back({ids[i], rows[i - b]});
  }
}

}  // namespace

Gallery build_gallery(const EmbeddingModel& model, InputCache& inputs, Split split, ViewSide view) {
  const auto& m = inputs.manifest();
  Gallery g;
  g.kind = view == ViewSide::ego ? GalleryKind::F_ego : GalleryKind::F_exo;
  g.variant = inputs.options().variant;
  const int t0 = first_time(g.variant);
  std::vector<FrameKey> keys;
  std::vector<std::string> ids;
  for (int i = 0; i < static_cast<int>(m.sequences.size()); ++i) {
    const auto& s = m.sequences[i];
    if (s.split != split) continue;
    for (int t = t0; t < static_cast<int>(s.length()); ++t) {
      keys.push_back({i, t});
      ids.push_back(source_id(s, view_name(view), t));
    }
  }
  encode_into(model, view, keys.size(), [&](std::size_t i) { return inputs.get(view, keys[i]); }, ids, g);
  g.normalize();
  return g;
}

Gallery build_synthesized_gallery(const EmbeddingModel& model, const Manifest& m, Split split,
                                  const std::filesystem::path& dir) {
  if (model.input_channels() != 3) fail(ErrorKind::InvalidArgument, "synthesized gallery needs the RGB variant");
  Gallery g;
  g.kind = GalleryKind::F_prime_ego;
  g.variant = Variant::rgb;
  std::vector<std::filesystem::path> paths;
  std::vector<std::string> ids;
  for (const auto* s : sequences_in(m, split)) {
    for (int t = 0; t < static_cast<int>(s->length()); ++t) {
      char name[32];
      std::snprintf(name, sizeof name, "%06d.png", t);
      paths.push_back(dir / s->id / name);
      ids.push_back(source_id(*s, gallery_view(GalleryKind::F_prime_ego), t));
    }
  }
  const int size = model.config().input_size;
  encode_into(model, ViewSide::ego, paths.size(), [&](std::size_t i) { return rgb_input(read_png(paths[i]), size); },
              ids, g);
  g.normalize();
  return g;
}

RankingResult retrieve(std::span<const float> query, std::string_view query_id, std::string_view truth_id,
                       const Gallery& gallery) {
  const int truth = gallery.find(truth_id);
  if (truth < 0) fail(ErrorKind::TruthMissing, "truth '" + std::string(truth_id) + "' not in gallery");
  const std::size_t n = gallery.entries.size();
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = gallery.entries[i].embedding;
    if (e.size() != query.size()) fail(ErrorKind::DimensionMismatch, "query and gallery dims differ");
    double s = 0.0;
    for (std::size_t j = 0; j < e.size(); ++j) {
      const double d = static_cast<double>(query[j]) - e[j];
      s += d * d;
    }
    dist[i] = std::sqrt(s);
  }
  RankingResult r;
  r.query_id = std::string(query_id);
  r.kind = gallery.kind;
  r.order.resize(n);
  std::iota(r.order.begin(), r.order.end(), 0U);
  std::sort(r.order.begin(), r.order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (dist[a] != dist[b]) return dist[a] < dist[b];
    return gallery.entries[a].id < gallery.entries[b].id;
  });
  r.rank_of_truth = static_cast<int>(std::find(r.order.begin(), r.order.end(), static_cast<std::uint32_t>(truth)) -
                                     r.order.begin()) + 1;
  return r;
}

std::vector<RankingResult> retrieve_all(const Gallery& queries, const Gallery& gallery) {
  std::vector<RankingResult> out;
  out.reserve(queries.entries.size());
  const auto view = gallery_view(gallery.kind);
  for (const auto& q : queries.entries) out.push_back(retrieve(q.embedding, q.id, with_view(q.id, view), gallery));
  return out;
}

namespace {

constexpr char kGalleryMagic[4] = {'E', 'E', 'M', 'B'};

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) fail(ErrorKind::SchemaError, "truncated gallery file");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& os, float f) {
  std::uint32_t v;
  std::memcpy(&v, &f, 4);
  put_u32(os, v);
}

float get_f32(std::istream& is) {
  const std::uint32_t v = get_u32(is);
  float f;
  std::memcpy(&f, &v, 4);
  return f;
}

}  // namespace

void write_gallery(const std::filesystem::path& path, const Gallery& g) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::MissingFile, "cannot write " + path.string());
  const json header{{"format", "egoexo-gallery"},
                    {"version", 1},
                    {"kind", to_string(g.kind)},
                    {"variant", to_string(g.variant)},
                    {"count", g.entries.size()},
                    {"dim", g.dim()}};
  os << header.dump() << '\n';
  os.write(kGalleryMagic, 4);
  put_u32(os, static_cast<std::uint32_t>(g.entries.size()));
  put_u32(os, static_cast<std::uint32_t>(g.dim()));
  for (const auto& e : g.entries) {
    for (float v : e.embedding) put_f32(os, v);
  }
  for (const auto& e : g.entries) {
    put_u32(os, static_cast<std::uint32_t>(e.id.size()));
    os.write(e.id.data(), static_cast<std::streamsize>(e.id.size()));
  }
  if (!os) fail(ErrorKind::MissingFile, "failed writing " + path.string());
}

Gallery read_gallery(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::MissingFile, "cannot open " + path.string());
  std::string line;
  std::getline(is, line);
  Gallery g;
  try {
    const json header = json::parse(line);
    g.kind = parse_gallery_kind(header.at("kind").get<std::string>());
    g.variant = parse_variant(header.at("variant").get<std::string>());
  } catch (const json::exception& e) {
    fail(ErrorKind::SchemaError, "gallery header: " + std::string(e.what()));
  } catch (const Error& e) {
    fail(ErrorKind::SchemaError, "gallery header: " + std::string(e.what()));
  }
  char magic[4] = {};
  if (!is.read(magic, 4) || std::memcmp(magic, kGalleryMagic, 4) != 0) {
    fail(ErrorKind::SchemaError, "bad gallery magic in " + path.string());
  }
  const std::uint32_t count = get_u32(is);
  const std::uint32_t dim = get_u32(is);
  g.entries.resize(count);
  for (auto& e : g.entries) {
    e.embedding.resize(dim);
    for (auto& v : e.embedding) v = get_f32(is);
  }
  for (auto& e : g.entries) {
    const std::uint32_t len = get_u32(is);
    if (len > (1U << 16)) fail(ErrorKind::SchemaError, "gallery id too long");
    e.id.resize(len);
    if (!is.read(e.id.data(), len)) fail(ErrorKind::SchemaError, "truncated gallery id table");
  }
  g.normalize();
  return g;
}

std::pair<ViewSide, ViewSide> parse_direction(std::string_view s) {
  if (s == "ego2exo") return {ViewSide::ego, ViewSide::exo};
  if (s == "exo2ego") return {ViewSide::exo, ViewSide::ego};
  fail(ErrorKind::InvalidArgument, "direction must be ego2exo or exo2ego");
}

std::vector<RankingResult> evaluate(const EmbeddingModel& model, InputCache& inputs, Split split, ViewSide query_view) {
  const ViewSide other = query_view == ViewSide::ego ? ViewSide::exo : ViewSide::ego;
  const auto queries = build_gallery(model, inputs, split, query_view);
  const auto gallery = build_gallery(model, inputs, split, other);
  if (queries.entries.empty()) fail(ErrorKind::DataEmpty, "split " + std::string(to_string(split)) + " is empty");
  return retrieve_all(queries, gallery);
}

}  // namespace egoexo::retrieval
