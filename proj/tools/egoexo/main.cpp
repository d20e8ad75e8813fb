#include <deque>
#include <functional>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "egoexo/error.hpp"

namespace egoexo::cli {
namespace {

/// A subcommand flag that lands in `cfg.sections[section][key]` when given.
struct Binding {
  CLI::Option* option = nullptr;
  std::string section;
  std::string key;
  std::string value;
  std::vector<std::string> values;
  bool flag = false;
  bool is_flag = false;
};

class Binder {
 public:
  void option(CLI::App* app, const std::string& name, const std::string& section, const std::string& key,
              const std::string& help) {
    auto& b = add(section, key);
    b.option = app->add_option(name, b.value, help);
  }
  void list(CLI::App* app, const std::string& name, const std::string& section, const std::string& key,
            const std::string& help) {
    auto& b = add(section, key);
    b.option = app->add_option(name, b.values, help);
  }
  void flag(CLI::App* app, const std::string& name, const std::string& section, const std::string& key,
            const std::string& help) {
    auto& b = add(section, key);
    b.is_flag = true;
    b.option = app->add_flag(name, b.flag, help);
  }

  void apply(RunConfig& cfg) const {
    for (const auto& b : bindings_) {
      if (b.option->count() == 0) continue;
      if (b.is_flag) {
        cfg.set(b.section, b.key, b.flag ? "true" : "false");
      } else if (!b.values.empty()) {
        std::string joined;
        for (std::size_t i = 0; i < b.values.size(); ++i) joined += (i ? "," : "") + b.values[i];
        cfg.set(b.section, b.key, joined);
      } else {
        cfg.set(b.section, b.key, b.value);
      }
    }
  }

 private:
  Binding& add(const std::string& section, const std::string& key) {
    auto& b = bindings_.emplace_back();
    b.section = section;
    b.key = key;
    return b;
  }

  std::deque<Binding> bindings_;
};

struct Globals {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  int workers = 1;
  std::string log_level;
  std::vector<std::string> sets;
};

void apply_set(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw UsageError("--set expects section.key=value, got '" + assignment + "'");
  }
  cfg.set(assignment.substr(0, dot), assignment.substr(dot + 1, eq - dot - 1), assignment.substr(eq + 1));
}

int run(int argc, char** argv) {
  CLI::App app{"Exocentric/egocentric view synthesis, retrieval and evaluation toolkit", "egoexo"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  auto* o_config = app.add_option("--config", g.config, "TOML run config; flags override its values");
  auto* o_seed = app.add_option("--seed", g.seed, "Global random seed");
  auto* o_out = app.add_option("--out", g.out, "Output directory");
  auto* o_workers = app.add_option("--workers", g.workers, "Worker pool size")->check(CLI::PositiveNumber);
  auto* o_level = app.add_option("--log-level", g.log_level, "debug, info, warn or error")
                      ->check(CLI::IsMember({"debug", "info", "warn", "error"}));
  app.add_option("--set", g.sets, "Override a config value: section.key=value");

  Binder bind;
  std::string command;
  std::function<void(Context&)> action;
  auto on = [&](CLI::App* sub, std::string name, void (*fn)(Context&)) {
    sub->callback([&, name, fn] {
      command = name;
      action = fn;
    });
  };

  auto* toygen = app.add_subcommand("toygen", "Generate a procedural paired ego/exo dataset");
  bind.option(toygen, "--scenes", "toygen", "scenes", "Number of scenes");
  bind.option(toygen, "--seqs", "toygen", "seqs", "Sequences per scene");
  bind.option(toygen, "--len", "toygen", "len", "Frames per sequence");
  bind.option(toygen, "--size", "toygen", "image_size", "Image side in pixels");
  bind.option(toygen, "--exo-kind", "toygen", "exo_kind", "side or top");
  bind.option(toygen, "--style", "toygen", "style", "Scene style A or B");
  bind.option(toygen, "--jitter", "toygen", "jitter", "Maximum ego head sway in degrees");
  bind.option(toygen, "--prefix", "toygen", "prefix", "Sequence id prefix");
  bind.option(toygen, "--spec", "io", "spec", "JSON scene/script spec for a single sequence");
  on(toygen, "toygen", cmd_toygen);

  auto* flow = app.add_subcommand("flow", "Optical flow extraction");
  flow->require_subcommand(1);
  auto* flow_compute = flow->add_subcommand("compute", "Compute smoothed flow for a split");
  bind.option(flow_compute, "--manifest", "io", "manifest", "Dataset manifest");
  bind.option(flow_compute, "--split", "io", "split", "train, val, test or all");
  bind.option(flow_compute, "--sigma", "flow", "sigma", "Temporal smoothing sigma in frames");
  on(flow_compute, "flow compute", cmd_flow_compute);

  auto* synth = app.add_subcommand("synth", "Exo-to-ego image synthesis");
  synth->require_subcommand(1);
  auto* synth_train = synth->add_subcommand("train", "Train the conditional GAN");
  bind.option(synth_train, "--manifest", "io", "manifest", "Dataset manifest");
  bind.option(synth_train, "--init", "io", "init", "Checkpoint to start from");
  bind.option(synth_train, "--epochs", "synthesis", "epochs", "Training epochs");
  bind.option(synth_train, "--image-size", "synthesis", "image_size", "Generator resolution");
  bind.option(synth_train, "--max-pairs", "synthesis", "max_pairs", "Cap on training pairs (0 = all)");
  on(synth_train, "synth train", cmd_synth_train);
  auto* synth_generate = synth->add_subcommand("generate", "Synthesize ego frames for a split");
  bind.option(synth_generate, "--ckpt", "io", "ckpt", "Synthesis checkpoint");
  bind.option(synth_generate, "--manifest", "io", "manifest", "Dataset manifest");
  bind.option(synth_generate, "--split", "io", "split", "train, val or test");
  on(synth_generate, "synth generate", cmd_synth_generate);

  auto* retr = app.add_subcommand("retr", "Cross-view retrieval");
  retr->require_subcommand(1);
  auto* retr_train = retr->add_subcommand("train", "Train the two-stream embedding network");
  bind.option(retr_train, "--variant", "retrieval", "variant", "rgb or flow");
  bind.option(retr_train, "--manifest", "io", "manifest", "Dataset manifest");
  bind.option(retr_train, "--init", "io", "init", "Checkpoint to start from");
  bind.flag(retr_train, "--adapt", "retrieval", "adapt", "Fine-tune conv layers only (requires --init)");
  bind.option(retr_train, "--flow-dir", "retrieval", "flow_dir", "Precomputed flow directory");
  bind.option(retr_train, "--epochs", "retrieval", "epochs", "Training epochs");
  on(retr_train, "retr train", cmd_retr_train);
  auto* retr_gallery = retr->add_subcommand("gallery", "Encode a split into a gallery file");
  bind.option(retr_gallery, "--ckpt", "io", "ckpt", "Retrieval checkpoint");
  bind.option(retr_gallery, "--manifest", "io", "manifest", "Dataset manifest");
  bind.option(retr_gallery, "--split", "io", "split", "train, val or test");
  bind.option(retr_gallery, "--kind", "io", "kind", "F_ego, F_exo or F_prime_ego");
  bind.option(retr_gallery, "--synth-dir", "io", "synth_dir", "Synthesized frames for F_prime_ego");
  bind.option(retr_gallery, "--flow-dir", "retrieval", "flow_dir", "Precomputed flow directory");
  on(retr_gallery, "retr gallery", cmd_retr_gallery);
  auto* retr_query = retr->add_subcommand("query", "Rank a gallery for every query embedding");
  bind.option(retr_query, "--queries", "io", "queries", "Query gallery file");
  bind.option(retr_query, "--gallery", "io", "gallery", "Gallery file");
  bind.option(retr_query, "--top", "io", "top", "Ids listed per query");
  on(retr_query, "retr query", cmd_retr_query);

  auto* eval = app.add_subcommand("eval", "Evaluation reports");
  eval->require_subcommand(1);
  auto* eval_synth = eval->add_subcommand("synth", "IS, SSIM, PSNR and sharpness difference");
  bind.option(eval_synth, "--ckpt", "io", "ckpt", "Synthesis checkpoint");
  bind.option(eval_synth, "--manifest", "io", "manifest", "Dataset manifest");
  bind.option(eval_synth, "--split", "io", "split", "train, val or test");
  on(eval_synth, "eval synth", cmd_eval_synth);
  auto* eval_retr = eval->add_subcommand("retr", "CMC curve and AUC");
  bind.option(eval_retr, "--ckpt", "io", "ckpt", "Retrieval checkpoint");
  bind.option(eval_retr, "--manifest", "io", "manifest", "Dataset manifest");
  bind.option(eval_retr, "--split", "io", "split", "train, val or test");
  bind.option(eval_retr, "--direction", "io", "direction", "ego2exo or exo2ego");
  bind.option(eval_retr, "--flow-dir", "retrieval", "flow_dir", "Precomputed flow directory");
  bind.option(eval_retr, "--queries", "io", "queries", "Query gallery file");
  bind.option(eval_retr, "--gallery", "io", "gallery", "Gallery file");
  on(eval_retr, "eval retr", cmd_eval_retr);

  auto* probe = app.add_subcommand("probe", "Embedding probes");
  probe->require_subcommand(1);
  auto* probe_inv = probe->add_subcommand("invariance", "Linear action classifiers over embeddings");
  bind.option(probe_inv, "--ckpt", "io", "ckpt", "Retrieval checkpoint");
  bind.option(probe_inv, "--manifest", "io", "manifest", "Dataset manifest");
  bind.option(probe_inv, "--flow-dir", "retrieval", "flow_dir", "Precomputed flow directory");
  bind.flag(probe_inv, "--permute", "probes", "permute", "Shuffle training labels (null calibration)");
  bind.flag(probe_inv, "--standardize", "probes", "standardize", "Standardize features before fitting");
  on(probe_inv, "probe invariance", cmd_probe_invariance);
  auto* probe_sr = probe->add_subcommand("synth-retrieval", "Retrieve matches for synthesized ego frames");
  bind.option(probe_sr, "--synth-ckpt", "io", "synth_ckpt", "Synthesis checkpoint");
  bind.option(probe_sr, "--retr-ckpt", "io", "retr_ckpt", "RGB retrieval checkpoint");
  bind.option(probe_sr, "--manifest", "io", "manifest", "Dataset manifest");
  bind.option(probe_sr, "--split", "io", "split", "train, val or test");
  on(probe_sr, "probe synth-retrieval", cmd_probe_synth_retrieval);

  auto* plot = app.add_subcommand("plot", "Render CSV series to a PNG line plot");
  bind.list(plot, "--in", "io", "inputs", "CSV files (x,y or series,x,y)");
  bind.option(plot, "--png", "io", "png", "Output image (default <out>/plot.png)");
  on(plot, "plot", cmd_plot);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  Context ctx;
  ctx.command = command;
  try {
    if (o_config->count() > 0) ctx.cfg = load_run_config(g.config);
    if (o_seed->count() > 0) ctx.cfg.seed = g.seed;
    if (o_out->count() > 0) ctx.cfg.out_dir = g.out;
    if (o_workers->count() > 0) ctx.cfg.workers = g.workers;
    if (o_level->count() > 0) ctx.cfg.log_level = g.log_level;
    bind.apply(ctx.cfg);
    for (const auto& s : g.sets) apply_set(ctx.cfg, s);
    ctx.start();
    action(ctx);
    ctx.log.info("done");
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    ctx.log.error("failed", {{"error", std::string(e.name())}, {"message", e.what()}});
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    ctx.log.error("failed", {{"message", std::string(e.what())}});
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace
}  // namespace egoexo::cli

int main(int argc, char** argv) { return egoexo::cli::run(argc, argv); }
