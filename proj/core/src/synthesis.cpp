#include "egoexo/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "json.hpp"

namespace egoexo::synthesis {

using nlohmann::json;

int GeneratorConfig::width(int level) const { return base_width * std::min(1 << level, max_mult); }

void GeneratorConfig::validate() const {
  if (depth < 2) fail(ErrorKind::InvalidArgument, "generator depth must be >= 2");
  if (base_width < 1 || max_mult < 1 || channels < 1) fail(ErrorKind::InvalidArgument, "generator widths must be >= 1");
  if (image_size <= 0 || image_size % (1 << depth) != 0) {
    fail(ErrorKind::InvalidArgument, "image size " + std::to_string(image_size) + " not divisible by 2^" +
                                         std::to_string(depth));
  }
}

void DiscriminatorConfig::validate() const {
  if (layers < 1 || base_width < 1 || channels < 1) fail(ErrorKind::InvalidArgument, "bad discriminator config");
}

template <class T>
Generator<T>::Generator(const GeneratorConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  std::mt19937_64 rng(cfg.seed);
  const int d = cfg.depth;
  down_.resize(d);
  up_.resize(d);
  auto name = [](const char* kind, int i) { return std::string("gen.") + kind + std::to_string(i); };

  down_[0].template add<nn::Conv2d<T>>(name("down", 0), cfg.channels, cfg.width(0), 4, 2, 1, rng);
  for (int i = 1; i < d; ++i) {
    down_[i].template add<nn::LeakyReLU<T>>(0.2);
    down_[i].template add<nn::Conv2d<T>>(name("down", i), cfg.width(i - 1), cfg.width(i), 4, 2, 1, rng);
    if (i < d - 1) down_[i].template add<nn::InstanceNorm2d<T>>(name("down", i) + ".norm", cfg.width(i));
  }
  // Innermost up block sees only the bottleneck; the others see skip ++ up.
  up_[d - 1].template add<nn::ReLU<T>>();
  up_[d - 1].template add<nn::ConvTranspose2d<T>>(name("up", d - 1), cfg.width(d - 1), cfg.width(d - 2), 4, 2, 1, rng);
  up_[d - 1].template add<nn::InstanceNorm2d<T>>(name("up", d - 1) + ".norm", cfg.width(d - 2));
  for (int i = d - 2; i >= 1; --i) {
    up_[i].template add<nn::ReLU<T>>();
    up_[i].template add<nn::ConvTranspose2d<T>>(name("up", i), 2 * cfg.width(i), cfg.width(i - 1), 4, 2, 1, rng);
    up_[i].template add<nn::InstanceNorm2d<T>>(name("up", i) + ".norm", cfg.width(i - 1));
  }
  up_[0].template add<nn::ReLU<T>>();
  auto& tail = up_[0].template add<nn::ConvTranspose2d<T>>(name("up", 0), 2 * cfg.width(0), cfg.channels, 4, 2, 1, rng);
  up_[0].template add<nn::Tanh<T>>();
  if (cfg.zero_tail) {
    tail.weight().value.fill(T(0));
    tail.bias().value.fill(T(0));
  }
  for (int i = 0; i < d; ++i) skip_channels_.push_back(cfg.width(i));
}

template <class T>
Tensor<T> Generator<T>::infer(const Tensor<T>& exo) const {
  if (exo.c() != cfg_.channels || exo.h() != cfg_.image_size || exo.w() != cfg_.image_size) {
    fail(ErrorKind::ShapeError, "generator expects (N," + std::to_string(cfg_.channels) + "," +
                                    std::to_string(cfg_.image_size) + "," + std::to_string(cfg_.image_size) +
                                    "), got " + exo.shape_string());
  }
  const int d = cfg_.depth;
  std::vector<Tensor<T>> acts(d);
  acts[0] = down_[0].infer(exo);
  for (int i = 1; i < d; ++i) acts[i] = down_[i].infer(acts[i - 1]);
  Tensor<T> u = up_[d - 1].infer(acts[d - 1]);
  for (int i = d - 2; i >= 0; --i) u = up_[i].infer(nn::concat_channels(acts[i], u));
  return u;
}

template <class T>
Tensor<T> Generator<T>::forward(const Tensor<T>& exo) {
  if (exo.c() != cfg_.channels || exo.h() != cfg_.image_size || exo.w() != cfg_.image_size) {
    fail(ErrorKind::ShapeError, "generator input shape " + exo.shape_string());
  }
  const int d = cfg_.depth;
  std::vector<Tensor<T>> acts(d);
  acts[0] = down_[0].forward(exo);
  for (int i = 1; i < d; ++i) acts[i] = down_[i].forward(acts[i - 1]);
  Tensor<T> u = up_[d - 1].forward(acts[d - 1]);
  for (int i = d - 2; i >= 0; --i) u = up_[i].forward(nn::concat_channels(acts[i], u));
  return u;
}

template <class T>
Tensor<T> Generator<T>::backward(const Tensor<T>& dy) {
  const int d = cfg_.depth;
  std::vector<Tensor<T>> dacts(d);
  Tensor<T> du = dy;
  for (int i = 0; i <= d - 2; ++i) {
    const Tensor<T> dcat = up_[i].backward(du);
    nn::split_channels(dcat, skip_channels_[i], dacts[i], du);
  }
  dacts[d - 1] = up_[d - 1].backward(du);
  for (int i = d - 1; i >= 1; --i) dacts[i - 1] += down_[i].backward(dacts[i]);
  return down_[0].backward(dacts[0]);
}

template <class T>
std::vector<nn::Parameter<T>*> Generator<T>::params() {
  std::vector<nn::Parameter<T>*> out;
  for (auto& s : down_) s.collect(out);
  for (auto& s : up_) s.collect(out);
  return out;
}

template <class T>
std::vector<nn::Buffer<T>> Generator<T>::buffers() {
  std::vector<nn::Buffer<T>> out;
  for (auto& s : down_) s.collect_buffers(out);
  for (auto& s : up_) s.collect_buffers(out);
  return out;
}

template <class T>
Discriminator<T>::Discriminator(const DiscriminatorConfig& cfg) : cfg_(cfg), cond_channels_(cfg.channels) {
  cfg_.validate();
  std::mt19937_64 rng(cfg.seed);
  auto width = [&](int n) { return cfg.base_width * std::min(1 << n, 8); };
  auto name = [](int i) { return "disc.conv" + std::to_string(i); };
  net_.template add<nn::Conv2d<T>>(name(0), 2 * cfg.channels, width(0), 4, 2, 1, rng);
  net_.template add<nn::LeakyReLU<T>>(0.2);
  for (int n = 1; n < cfg.layers; ++n) {
    net_.template add<nn::Conv2d<T>>(name(n), width(n - 1), width(n), 4, 2, 1, rng);
    net_.template add<nn::InstanceNorm2d<T>>(name(n) + ".norm", width(n));
    net_.template add<nn::LeakyReLU<T>>(0.2);
  }
  const int last = cfg.layers;
  net_.template add<nn::Conv2d<T>>(name(last), width(last - 1), width(last), 4, 1, 1, rng);
  net_.template add<nn::InstanceNorm2d<T>>(name(last) + ".norm", width(last));
  net_.template add<nn::LeakyReLU<T>>(0.2);
  net_.template add<nn::Conv2d<T>>(name(last + 1), width(last), 1, 4, 1, 1, rng);
}

template <class T>
Tensor<T> Discriminator<T>::infer(const Tensor<T>& cond, const Tensor<T>& candidate) const {
  return net_.infer(nn::concat_channels(cond, candidate));
}

template <class T>
Tensor<T> Discriminator<T>::forward(const Tensor<T>& cond, const Tensor<T>& candidate) {
  return net_.forward(nn::concat_channels(cond, candidate));
}

template <class T>
std::pair<Tensor<T>, Tensor<T>> Discriminator<T>::backward(const Tensor<T>& dlogits) {
  const Tensor<T> d = net_.backward(dlogits);
  std::pair<Tensor<T>, Tensor<T>> out;
  nn::split_channels(d, cond_channels_, out.first, out.second);
  return out;
}

template <class T>
std::vector<nn::Parameter<T>*> Discriminator<T>::params() {
  std::vector<nn::Parameter<T>*> out;
  net_.collect(out);
  return out;
}

namespace {

template <class T>
T sigmoid(T z) {
  return z >= 0 ? T(1) / (T(1) + std::exp(-z)) : std::exp(z) / (T(1) + std::exp(z));
}

}  // namespace

template <class T>
T bce_real(const Tensor<T>& logits, Tensor<T>* grad) {
  const T eps = static_cast<T>(kProbEpsilon);
  const T n = static_cast<T>(logits.size());
  if (grad) *grad = Tensor<T>::like(logits);
  T loss = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const T p = sigmoid(logits[i]);
    const T pc = std::clamp(p, eps, T(1) - eps);
    loss -= std::log(pc);
    if (grad && p == pc) (*grad)[i] = -(T(1) - p) / n;
  }
  return loss / n;
}

template <class T>
T bce_fake(const Tensor<T>& logits, Tensor<T>* grad) {
  const T eps = static_cast<T>(kProbEpsilon);
  const T n = static_cast<T>(logits.size());
  if (grad) *grad = Tensor<T>::like(logits);
  T loss = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const T p = sigmoid(logits[i]);
    const T pc = std::clamp(p, eps, T(1) - eps);
    loss -= std::log(T(1) - pc);
    if (grad && p == pc) (*grad)[i] = p / n;
  }
  return loss / n;
}

template <class T>
T discriminator_loss(const Tensor<T>& real_logits, const Tensor<T>& fake_logits, Tensor<T>* grad_real,
                     Tensor<T>* grad_fake) {
  return bce_real(real_logits, grad_real) + bce_fake(fake_logits, grad_fake);
}

template <class T>
T generator_adversarial_loss(const Tensor<T>& fake_logits, Tensor<T>* grad) {
  return bce_real(fake_logits, grad);
}

template <class T>
T l1_loss(const Tensor<T>& target, const Tensor<T>& pred, Tensor<T>* grad) {
  target.require_same(pred);
  const T n = static_cast<T>(pred.size());
  if (grad) *grad = Tensor<T>::like(pred);
  T sum = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const T diff = pred[i] - target[i];
    sum += std::abs(diff);
    if (grad) (*grad)[i] = (diff > 0 ? T(1) : diff < 0 ? T(-1) : T(0)) / n;
  }
  return sum / n;
}

template <class T>
AdversarialLosses adversarial_loss(const Discriminator<T>& d, const Tensor<T>& exo, const Tensor<T>& ego,
                                   const Tensor<T>& fake_ego) {
  const auto real = d.infer(exo, ego);
  const auto fake = d.infer(exo, fake_ego);
  return {static_cast<double>(discriminator_loss<T>(real, fake, nullptr, nullptr)),
          static_cast<double>(generator_adversarial_loss<T>(fake, nullptr))};
}

template <class T>
Tensor<T> frame_to_tensor(const Frame& f) {
  Tensor<T> t(1, Frame::kChannels, f.height(), f.width());
  for (int c = 0; c < Frame::kChannels; ++c) {
    for (int y = 0; y < f.height(); ++y) {
      for (int x = 0; x < f.width(); ++x) t.at(0, c, y, x) = static_cast<T>(f.at(y, x, c) / 127.5 - 1.0);
    }
  }
  return t;
}

Frame tensor_to_frame(const Tensor<float>& t, int sample) {
  if (t.c() != Frame::kChannels) fail(ErrorKind::ShapeError, "expected a 3-channel tensor");
  Frame f(t.h(), t.w());
  for (int c = 0; c < Frame::kChannels; ++c) {
    for (int y = 0; y < t.h(); ++y) {
      for (int x = 0; x < t.w(); ++x) {
        const double v = (static_cast<double>(t.at(sample, c, y, x)) + 1.0) * 127.5;
        f.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return f;
}

double l1_loss(const Frame& ego, const Frame& fake_ego) {
  if (ego.height() != fake_ego.height() || ego.width() != fake_ego.width()) {
    fail(ErrorKind::ShapeError, "l1_loss frames differ in size");
  }
  return l1_loss<double>(frame_to_tensor<double>(ego), frame_to_tensor<double>(fake_ego), nullptr);
}

double combined_loss(double adv, double l1, const SynthesisConfig& cfg) { return adv + cfg.lambda * l1; }

void SynthesisConfig::validate() const {
  if (!(lambda >= 0.0)) fail(ErrorKind::InvalidArgument, "lambda must be >= 0");
  if (epochs < 1) fail(ErrorKind::InvalidArgument, "epochs must be >= 1");
  if (batch_size < 1) fail(ErrorKind::InvalidArgument, "batch size must be >= 1");
  if (generator.channels != discriminator.channels) {
    fail(ErrorKind::InvalidArgument, "generator and discriminator channel counts differ");
  }
  generator.validate();
  discriminator.validate();
}

std::string to_json(const SynthesisConfig& c) {
  json j{
      {"lambda", c.lambda},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"lr", c.adam.lr},
      {"beta1", c.adam.beta1},
      {"beta2", c.adam.beta2},
      {"seed", c.seed},
      {"checkpoint_every", c.checkpoint_every},
      {"max_pairs", c.max_pairs},
      {"generator",
       {{"image_size", c.generator.image_size},
        {"depth", c.generator.depth},
        {"base_width", c.generator.base_width},
        {"max_mult", c.generator.max_mult},
        {"channels", c.generator.channels},
        {"zero_tail", c.generator.zero_tail},
        {"seed", c.generator.seed}}},
      {"discriminator",
       {{"layers", c.discriminator.layers},
        {"base_width", c.discriminator.base_width},
        {"channels", c.discriminator.channels},
        {"seed", c.discriminator.seed}}},
  };
  return j.dump();
}

SynthesisConfig synthesis_config_from_json(const std::string& text) {
  SynthesisConfig c;
  try {
    const json j = json::parse(text);
    c.lambda = j.value("lambda", c.lambda);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.adam.lr = j.value("lr", c.adam.lr);
    c.adam.beta1 = j.value("beta1", c.adam.beta1);
    c.adam.beta2 = j.value("beta2", c.adam.beta2);
    c.seed = j.value("seed", c.seed);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    c.max_pairs = j.value("max_pairs", c.max_pairs);
    if (j.contains("generator")) {
      const auto& g = j["generator"];
      c.generator.image_size = g.value("image_size", c.generator.image_size);
      c.generator.depth = g.value("depth", c.generator.depth);
      c.generator.base_width = g.value("base_width", c.generator.base_width);
      c.generator.max_mult = g.value("max_mult", c.generator.max_mult);
      c.generator.channels = g.value("channels", c.generator.channels);
      c.generator.zero_tail = g.value("zero_tail", c.generator.zero_tail);
      c.generator.seed = g.value("seed", c.generator.seed);
    }
    if (j.contains("discriminator")) {
      const auto& d = j["discriminator"];
      c.discriminator.layers = d.value("layers", c.discriminator.layers);
      c.discriminator.base_width = d.value("base_width", c.discriminator.base_width);
      c.discriminator.channels = d.value("channels", c.discriminator.channels);
      c.discriminator.seed = d.value("seed", c.discriminator.seed);
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::SchemaError, std::string("synthesis config: ") + e.what());
  }
  return c;
}

SynthesisTrainer::SynthesisTrainer(const SynthesisConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  gen_ = std::make_unique<Generator<float>>(cfg_.generator);
  disc_ = std::make_unique<Discriminator<float>>(cfg_.discriminator);
  opt_g_ = std::make_unique<nn::Adam<float>>(gen_->params(), cfg_.adam);
  opt_d_ = std::make_unique<nn::Adam<float>>(disc_->params(), cfg_.adam);
}

StepLosses SynthesisTrainer::train_step(const Tensor<float>& exo, const Tensor<float>& ego) {
  StepLosses out;
  Tensor<float> fake = gen_->forward(exo);

  // Discriminator: real pair, then generated pair (generator held fixed).
  opt_d_->zero_grad();
  Tensor<float> g_real, g_fake;
  // Forward/backward must interleave because layers cache one pass.
  {
    const auto real_logits = disc_->forward(exo, ego);
    const float lr = bce_real(real_logits, &g_real);
    disc_->backward(g_real);
    const auto fake_logits = disc_->forward(exo, fake);
    const float lf = bce_fake(fake_logits, &g_fake);
    disc_->backward(g_fake);
    out.loss_d = static_cast<double>(lr) + lf;
  }
  opt_d_->step();

  // Generator: non-saturating adversarial term through the updated D plus L1.
  opt_g_->zero_grad();
  opt_d_->zero_grad();
  const auto logits = disc_->forward(exo, fake);
  Tensor<float> g_adv;
  out.loss_g_adv = generator_adversarial_loss(logits, &g_adv);
  auto [dcond, dfake] = disc_->backward(g_adv);
  Tensor<float> g_l1;
  out.l1 = l1_loss(ego, fake, &g_l1);
  const float lambda = static_cast<float>(cfg_.lambda);
  for (std::size_t i = 0; i < dfake.size(); ++i) dfake[i] += lambda * g_l1[i];
  gen_->backward(dfake);
  opt_g_->step();
  opt_d_->zero_grad();

  out.total = combined_loss(out.loss_g_adv, out.l1, cfg_);
  return out;
}

nn::Checkpoint SynthesisTrainer::checkpoint(int epoch) const {
  nn::Checkpoint c;
  c.kind = kSynthesisKind;
  c.config_json = to_json(cfg_);
  c.epoch = epoch;
  c.step = opt_g_->steps();
  auto gp = gen_->params();
  auto dp = disc_->params();
  c.params = nn::export_params(gp);
  for (auto& a : nn::export_params(dp)) c.params.push_back(std::move(a));
  c.buffers = nn::export_buffers(gen_->buffers());
  nn::export_adam(*opt_g_, "adam_g", c.optimizer);
  nn::export_adam(*opt_d_, "adam_d", c.optimizer);
  return c;
}

void SynthesisTrainer::load(const nn::Checkpoint& ckpt) {
  if (ckpt.kind != kSynthesisKind) fail(ErrorKind::CheckpointIncompatible, "checkpoint kind '" + ckpt.kind + "'");
  nn::import_params(ckpt.params, gen_->params());
  nn::import_params(ckpt.params, disc_->params());
  nn::import_buffers(ckpt.buffers, gen_->buffers());
  nn::import_adam(ckpt.optimizer, "adam_g", *opt_g_);
  nn::import_adam(ckpt.optimizer, "adam_d", *opt_d_);
}

SynthesisModel::SynthesisModel(const GeneratorConfig& cfg) : gen_(cfg) {}

SynthesisModel SynthesisModel::from_checkpoint(const nn::Checkpoint& ckpt) {
  if (ckpt.kind != kSynthesisKind) fail(ErrorKind::CheckpointIncompatible, "checkpoint kind '" + ckpt.kind + "'");
  const auto cfg = synthesis_config_from_json(ckpt.config_json);
  SynthesisModel m(cfg.generator);
  nn::import_params(ckpt.params, m.gen_.params());
  nn::import_buffers(ckpt.buffers, m.gen_.buffers());
  return m;
}

Frame generate(const Generator<float>& g, const Frame& exo) {
  const auto& cfg = g.config();
  if (exo.height() != cfg.image_size || exo.width() != cfg.image_size) {
    fail(ErrorKind::ShapeError, "generator input must be " + std::to_string(cfg.image_size) + "x" +
                                    std::to_string(cfg.image_size));
  }
  return tensor_to_frame(g.infer(frame_to_tensor<float>(exo)));
}

Frame SynthesisModel::generate(const Frame& exo) const { return synthesis::generate(gen_, exo); }

namespace {

struct PairTensors {
  Tensor<float> exo;
  Tensor<float> ego;
};

std::vector<PairTensors> load_pairs(const Manifest& m, Split split, int size, int max_pairs) {
  std::vector<PairTensors> out;
  for (const auto pair : iterate_aligned_pairs(m, split, m.exo_kind)) {
    if (max_pairs > 0 && static_cast<int>(out.size()) >= max_pairs) break;
    const auto& s = *pair.sequence;
    const int t = pair.ego->time_index;
    out.push_back({frame_to_tensor<float>(resize_bilinear(read_png(s.exo_frame_path(t)), size, size)),
                   frame_to_tensor<float>(resize_bilinear(read_png(s.ego_frame_path(t)), size, size))});
  }
  return out;
}

std::string epoch_name(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "synth_epoch%04d.ckpt", epoch);
  return buf;
}

}  // namespace

TrainResult train(const Manifest& m, const SynthesisConfig& cfg, const TrainOptions& opts) {
  cfg.validate();
  SynthesisTrainer trainer(cfg);
  int start_epoch = 0;
  if (opts.init) {
    const auto ckpt = nn::load_checkpoint(*opts.init);
    trainer.load(ckpt);
    if (opts.resume) start_epoch = static_cast<int>(ckpt.epoch);
  }

  const auto pairs = load_pairs(m, Split::train, cfg.generator.image_size, cfg.max_pairs);
  if (pairs.empty()) fail(ErrorKind::DataEmpty, "no training pairs in manifest");

  TrainResult result;
  std::vector<std::size_t> order(pairs.size());
  for (int epoch = start_epoch + 1; epoch <= cfg.epochs; ++epoch) {
    // Epoch order depends only on (seed, epoch), so a resumed run matches.
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(cfg.seed * 1000003ULL + static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), rng);
    EpochLog log;
    log.epoch = epoch;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(order.size(), b + cfg.batch_size);
      std::vector<const Tensor<float>*> xs, ys;
      for (std::size_t i = b; i < e; ++i) {
        xs.push_back(&pairs[order[i]].exo);
        ys.push_back(&pairs[order[i]].ego);
      }
      const auto l = trainer.train_step(nn::stack<float>(xs), nn::stack<float>(ys));
      ++log.d_steps;
      ++log.g_steps;
      log.loss_d += l.loss_d;
      log.loss_g_adv += l.loss_g_adv;
      log.l1 += l.l1;
      log.total += l.total;
    }
    const double n = std::max(1, log.g_steps);
    log.loss_d /= n;
    log.loss_g_adv /= n;
    log.l1 /= n;
    log.total /= n;
    result.epochs.push_back(log);
    if (opts.on_epoch) opts.on_epoch(log);

    const bool due = cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0;
    if (!opts.out_dir.empty() && (due || epoch == cfg.epochs)) {
      const auto path = opts.out_dir / epoch_name(epoch);
      nn::save_checkpoint(path, trainer.checkpoint(epoch));
      result.checkpoints.push_back(path);
    }
  }
  return result;
}

void generate_split(const SynthesisModel& model, const Manifest& m, Split split, const std::filesystem::path& out_dir) {
  const auto& g = model.generator().config();
  for (const auto* s : sequences_in(m, split)) {
    for (int t = 0; t < static_cast<int>(s->length()); ++t) {
      const Frame exo = resize_bilinear(read_png(s->exo_frame_path(t)), g.image_size, g.image_size);
      char name[32];
      std::snprintf(name, sizeof name, "%06d.png", t);
      write_png(out_dir / s->id / name, model.generate(exo));
    }
  }
}

template class Generator<float>;
template class Generator<double>;
template class Discriminator<float>;
template class Discriminator<double>;

#define EGOEXO_INSTANTIATE_LOSSES(T)                                                                           \
  template T bce_real<T>(const Tensor<T>&, Tensor<T>*);                                                       \
  template T bce_fake<T>(const Tensor<T>&, Tensor<T>*);                                                       \
  template T discriminator_loss<T>(const Tensor<T>&, const Tensor<T>&, Tensor<T>*, Tensor<T>*);               \
  template T generator_adversarial_loss<T>(const Tensor<T>&, Tensor<T>*);                                     \
  template T l1_loss<T>(const Tensor<T>&, const Tensor<T>&, Tensor<T>*);                                      \
  template AdversarialLosses adversarial_loss<T>(const Discriminator<T>&, const Tensor<T>&, const Tensor<T>&, \
                                                 const Tensor<T>&);                                          \
  template Tensor<T> frame_to_tensor<T>(const Frame&);

EGOEXO_INSTANTIATE_LOSSES(float)
EGOEXO_INSTANTIATE_LOSSES(double)

#undef EGOEXO_INSTANTIATE_LOSSES

}  // namespace egoexo::synthesis
