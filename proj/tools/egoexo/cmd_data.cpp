#include <fstream>
#include <iostream>
#include <sstream>

#include "commands.hpp"
#include "egoexo/error.hpp"
#include "egoexo/flow.hpp"
#include "egoexo/toygen.hpp"

namespace egoexo::cli {

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::MissingFile, path.string() + " not found");
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

void cmd_toygen(Context& ctx) {
  const auto& cfg = ctx.cfg;
  Manifest m;
  if (const auto spec = ctx.io("spec"); !spec.empty()) {
    auto req = toygen::parse_sequence_request(read_text(spec));
    req.options.out_dir = ctx.out();
    m.modality = Modality::synthetic;
    m.exo_kind = req.options.exo_kind;
    m.sequences.push_back(toygen::generate_pair_sequence(req.scene, req.script, req.options));
    m.counts = m.recount();
    write_manifest(ctx.out() / "manifest.json", m);
  } else {
    const std::string s = "toygen";
    toygen::DatasetOptions o;
    o.scenes = cfg.get_int(s, "scenes", o.scenes);
    o.sequences_per_scene = cfg.get_int(s, "seqs", o.sequences_per_scene);
    o.length = cfg.get_int(s, "len", o.length);
    o.image_size = cfg.get_int(s, "image_size", o.image_size);
    o.jitter_max_deg = cfg.get_double(s, "jitter", o.jitter_max_deg);
    o.exo_kind = parse_exo_kind(cfg.get_string(s, "exo_kind", "side"));
    o.style = toygen::parse_style(cfg.get_string(s, "style", "A"));
    o.id_prefix = cfg.get_string(s, "prefix", "");
    o.seed = cfg.seed;
    m = toygen::generate_dataset(o, ctx.out());
  }
  const auto total = m.counts.total();
  ctx.log.info("toygen", {{"sequences", static_cast<long long>(m.sequences.size())}, {"pairs", total.frames}});
  std::cout << "sequences " << m.sequences.size() << "\naligned pairs " << total.frames << "\nmanifest "
            << (ctx.out() / "manifest.json").string() << "\n";
}

void cmd_flow_compute(Context& ctx) {
  const Manifest m = load_manifest_arg(ctx);
  GradientFlowOptions fo;
  fo.levels = ctx.cfg.get_int("flow", "levels", fo.levels);
  fo.iterations = ctx.cfg.get_int("flow", "iterations", fo.iterations);
  fo.window_sigma = ctx.cfg.get_double("flow", "window_sigma", fo.window_sigma);
  fo.smoothness = ctx.cfg.get_double("flow", "smoothness", fo.smoothness);
  const double sigma = ctx.cfg.get_double("flow", "sigma", kDefaultFlowSigma);
  const GradientFlowEstimator est(fo);

  const std::string which = ctx.io("split", "all");
  std::vector<Split> splits;
  if (which == "all") splits = {Split::train, Split::val, Split::test};
  else splits = {parse_split(which)};

  int written = 0;
  for (const Split s : splits) {
    const int n = write_flow_split(m, s, est, sigma, ctx.out());
    ctx.log.info("flow", {{"split", std::string(to_string(s))}, {"fields", n}});
    written += n;
  }
  std::cout << "flow fields " << written << " -> " << ctx.out().string() << "\n";
}

}  // namespace egoexo::cli
