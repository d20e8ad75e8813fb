#include "context.hpp"

#include <fstream>
#include <sstream>

#include "egoexo/error.hpp"

namespace egoexo::cli {

std::string Context::require(const std::string& key, const std::string& flag) const {
  auto v = cfg.get("io", key);
  if (!v || v->empty()) throw UsageError(command + ": " + flag + " is required");
  return *v;
}

std::string Context::io(const std::string& key, std::string fallback) const {
  return cfg.get_string("io", key, std::move(fallback));
}

void Context::start() {
  std::filesystem::create_directories(out());
  log = JsonlLogger(out() / "log.jsonl", parse_log_level(cfg.log_level));
  std::ofstream(out() / "run_config.toml") << "# " << command << "\n" << to_toml(cfg);
  log.info("start", {{"command", command}, {"seed", static_cast<long long>(cfg.seed)}, {"workers", cfg.workers}});
}

Manifest load_manifest_arg(const Context& ctx) { return load_manifest(ctx.require("manifest", "--manifest")); }

Split split_arg(const Context& ctx, const std::string& fallback) { return parse_split(ctx.io("split", fallback)); }

namespace {

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      fail(ErrorKind::SchemaError, "expected a comma-separated integer list, got '" + text + "'");
    }
  }
  return out;
}

std::uint64_t seed_of(const RunConfig& cfg, const std::string& section) {
  const auto v = cfg.get(section, "seed");
  if (!v) return cfg.seed;
  try {
    return std::stoull(*v);
  } catch (const std::exception&) {
    fail(ErrorKind::SchemaError, section + ".seed: expected an integer, got '" + *v + "'");
  }
}

}  // namespace

synthesis::SynthesisConfig synthesis_config(const RunConfig& cfg) {
  const std::string s = "synthesis";
  synthesis::SynthesisConfig c;
  c.lambda = cfg.get_double(s, "lambda", c.lambda);
  c.epochs = cfg.get_int(s, "epochs", c.epochs);
  c.batch_size = cfg.get_int(s, "batch_size", c.batch_size);
  c.adam.lr = cfg.get_double(s, "lr", c.adam.lr);
  c.adam.beta1 = cfg.get_double(s, "beta1", c.adam.beta1);
  c.adam.beta2 = cfg.get_double(s, "beta2", c.adam.beta2);
  c.checkpoint_every = cfg.get_int(s, "checkpoint_every", c.checkpoint_every);
  c.max_pairs = cfg.get_int(s, "max_pairs", c.max_pairs);
  c.seed = seed_of(cfg, s);
  c.generator.image_size = cfg.get_int(s, "image_size", c.generator.image_size);
  c.generator.depth = cfg.get_int(s, "depth", c.generator.depth);
  c.generator.base_width = cfg.get_int(s, "base_width", c.generator.base_width);
  c.generator.max_mult = cfg.get_int(s, "max_mult", c.generator.max_mult);
  c.generator.seed = c.seed;
  c.discriminator.layers = cfg.get_int(s, "disc_layers", c.discriminator.layers);
  c.discriminator.base_width = cfg.get_int(s, "disc_width", c.discriminator.base_width);
  c.discriminator.seed = c.seed + 1;
  c.validate();
  return c;
}

retrieval::RetrievalConfig retrieval_config(const RunConfig& cfg) {
  const std::string s = "retrieval";
  retrieval::RetrievalConfig c;
  c.variant = retrieval::parse_variant(cfg.get_string(s, "variant", "rgb"));
  c.encoder.channels = c.variant == retrieval::Variant::rgb ? 3 : 2;
  c.encoder.input_size = cfg.get_int(s, "input_size", c.encoder.input_size);
  if (const auto w = cfg.get(s, "widths")) c.encoder.widths = parse_int_list(*w);
  c.encoder.embedding_dim = cfg.get_int(s, "embedding_dim", c.encoder.embedding_dim);
  c.margin = cfg.get_double(s, "margin", c.margin);
  c.sampling.neg_ratio = cfg.get_int(s, "neg_ratio", c.sampling.neg_ratio);
  c.sampling.within_fraction = cfg.get_double(s, "within_fraction", c.sampling.within_fraction);
  c.epochs = cfg.get_int(s, "epochs", c.epochs);
  c.batch_size = cfg.get_int(s, "batch_size", c.batch_size);
  c.adam.lr = cfg.get_double(s, "lr", c.adam.lr);
  c.adam.beta1 = cfg.get_double(s, "beta1", c.adam.beta1);
  c.adam.beta2 = cfg.get_double(s, "beta2", c.adam.beta2);
  c.flow_sigma = cfg.get_double("flow", "sigma", c.flow_sigma);
  if (const auto d = cfg.get(s, "flow_dir"); d && !d->empty()) c.flow_dir = *d;
  c.max_positives = cfg.get_int(s, "max_positives", c.max_positives);
  c.validate_each_epoch = cfg.get_bool(s, "validate_each_epoch", c.validate_each_epoch);
  c.seed = seed_of(cfg, s);
  c.sampling.seed = c.seed;
  c.encoder.seed = c.seed;
  c.validate();
  return c;
}

retrieval::InputOptions input_options(const RunConfig& cfg, const retrieval::RetrievalConfig& rc) {
  retrieval::InputOptions o;
  o.variant = rc.variant;
  o.input_size = rc.encoder.input_size;
  o.flow_sigma = cfg.get_double("flow", "sigma", rc.flow_sigma);
  if (const auto d = cfg.get("retrieval", "flow_dir"); d && !d->empty()) o.flow_dir = *d;
  else o.flow_dir = rc.flow_dir;
  return o;
}

}  // namespace egoexo::cli
