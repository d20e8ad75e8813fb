#include <fstream>
#include <iostream>
#include <sstream>

#include "commands.hpp"
#include "egoexo/error.hpp"
#include "egoexo/metrics.hpp"
#include "egoexo/nn/checkpoint.hpp"
#include "egoexo/plot.hpp"
#include "egoexo/probes.hpp"
#include "json.hpp"

namespace egoexo::cli {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::MissingFile, "cannot write " + path.string());
  os << text;
}

plot::Series cmc_series(const std::string& name, const metrics::CMCCurve& c) {
  plot::Series s{name, {}, {}};
  for (std::size_t k = 0; k < c.values.size(); ++k) {
    s.x.push_back(static_cast<double>(k + 1));
    s.y.push_back(c.values[k]);
  }
  return s;
}

plot::Series chance_series(int n) {
  plot::Series s{"chance", {}, {}};
  for (int k = 1; k <= n; ++k) {
    s.x.push_back(k);
    s.y.push_back(static_cast<double>(k) / n);
  }
  return s;
}

plot::PlotOptions cmc_plot_options(int gallery_size) {
  plot::PlotOptions o;
  o.x_range = std::pair{1.0, static_cast<double>(std::max(gallery_size, 2))};
  o.y_range = std::pair{0.0, 1.0};
  return o;
}

double chance_auc(int n) { return (n + 1.0) / (2.0 * n); }

nlohmann::json curve_summary(const metrics::CMCCurve& c, std::size_t queries) {
  return {{"auc", c.auc}, {"gallery_size", c.gallery_size}, {"queries", queries}, {"chance_auc", chance_auc(c.gallery_size)}};
}

}  // namespace

void cmd_eval_synth(Context& ctx) {
  const auto model = synthesis::SynthesisModel::from_checkpoint(nn::load_checkpoint(ctx.require("ckpt", "--ckpt")));
  const Manifest m = load_manifest_arg(ctx);
  const Split split = split_arg(ctx, "test");
  const int size = model.generator().config().image_size;
  std::vector<Frame> truth;
  std::vector<Frame> generated;
  for (const auto pair : iterate_aligned_pairs(m, split, m.exo_kind)) {
    const auto& s = *pair.sequence;
    const int t = pair.ego->time_index;
    truth.push_back(resize_bilinear(read_png(s.ego_frame_path(t)), size, size));
    generated.push_back(model.generate(resize_bilinear(read_png(s.exo_frame_path(t)), size, size)));
  }
  const metrics::ColorHistogramClassifier clf;
  const auto scores = metrics::score_synthesis(truth, generated, clf);
  write_text(ctx.out() / "synth_report.json", metrics::to_json(scores));
  write_text(ctx.out() / "synth_report.csv", metrics::to_csv(scores));
  ctx.log.info("eval_synth", {{"frames", scores.frames},
                              {"is_all", scores.is_all},
                              {"ssim", scores.ssim},
                              {"psnr", scores.psnr},
                              {"sharp_diff", scores.sharp_diff}});
  std::cout << metrics::to_csv(scores);
}

void cmd_eval_retr(Context& ctx) {
  std::vector<RankingResult> results;
  if (!ctx.io("gallery").empty() || !ctx.io("queries").empty()) {
    const auto queries = retrieval::read_gallery(ctx.require("queries", "--queries"));
    const auto gallery = retrieval::read_gallery(ctx.require("gallery", "--gallery"));
    results = retrieval::retrieve_all(queries, gallery);
  } else {
    auto [model, rc] = retrieval::load_model(nn::load_checkpoint(ctx.require("ckpt", "--ckpt")));
    const Manifest m = load_manifest_arg(ctx);
    retrieval::InputCache inputs(m, input_options(ctx.cfg, rc));
    const auto query_view = retrieval::parse_direction(ctx.io("direction", "ego2exo")).first;
    results = retrieval::evaluate(model, inputs, split_arg(ctx, "test"), query_view);
  }
  const auto curve = metrics::cmc(results);
  plot::write_csv(ctx.out() / "cmc.csv", {cmc_series("cmc", curve)}, "k", "cmc");
  plot::write_line_plot(ctx.out() / "cmc.png",
                        {cmc_series("cmc", curve), chance_series(curve.gallery_size)},
                        cmc_plot_options(curve.gallery_size));
  write_text(ctx.out() / "retr_summary.json", curve_summary(curve, results.size()).dump(2));
  ctx.log.info("eval_retr", {{"auc", curve.auc}, {"gallery_size", curve.gallery_size}});
  std::cout << "auc " << curve.auc << " (chance " << chance_auc(curve.gallery_size) << ", gallery "
            << curve.gallery_size << ")\n";
}

void cmd_probe_invariance(Context& ctx) {
  auto [model, rc] = retrieval::load_model(nn::load_checkpoint(ctx.require("ckpt", "--ckpt")));
  const Manifest m = load_manifest_arg(ctx);
  retrieval::InputCache inputs(m, input_options(ctx.cfg, rc));
  probes::ProbeOptions o;
  o.permute_labels = ctx.cfg.get_bool("probes", "permute", false);
  o.standardize = ctx.cfg.get_bool("probes", "standardize", false);
  o.seed = ctx.cfg.seed;
  o.train_split = parse_split(ctx.cfg.get_string("probes", "train_split", "train"));
  o.test_split = parse_split(ctx.cfg.get_string("probes", "test_split", "test"));
  o.svm.c = ctx.cfg.get_double("probes", "c", o.svm.c);
  o.svm.seed = ctx.cfg.seed;
  const auto report = probes::view_invariance_test(model, inputs, o);
  write_text(ctx.out() / "probe.json", probes::to_json(report));
  write_text(ctx.out() / "probe.csv", probes::to_csv(report));
  ctx.log.info("probe", {{"chance", report.chance},
                         {"ego_ego", report.at(probes::Side::ego, probes::Side::ego)},
                         {"exo_exo", report.at(probes::Side::exo, probes::Side::exo)},
                         {"both_both", report.at(probes::Side::both, probes::Side::both)}});
  std::cout << probes::to_csv(report) << "chance," << report.chance << "\n";
}

void cmd_probe_synth_retrieval(Context& ctx) {
  const auto synth =
      synthesis::SynthesisModel::from_checkpoint(nn::load_checkpoint(ctx.require("synth_ckpt", "--synth-ckpt")));
  auto [model, rc] = retrieval::load_model(nn::load_checkpoint(ctx.require("retr_ckpt", "--retr-ckpt")));
  const Manifest m = load_manifest_arg(ctx);
  retrieval::InputCache inputs(m, input_options(ctx.cfg, rc));
  const auto r = probes::synthesized_retrieval_test(probes::generator_fn(synth), model, inputs, split_arg(ctx, "test"));
  plot::write_csv(ctx.out() / "cmc_vs_exo.csv", {cmc_series("vs_exo", r.vs_exo)}, "k", "cmc");
  plot::write_csv(ctx.out() / "cmc_vs_ego.csv", {cmc_series("vs_ego", r.vs_ego)}, "k", "cmc");
  plot::write_line_plot(ctx.out() / "synth_retrieval.png",
                        {cmc_series("F_exo", r.vs_exo), cmc_series("F_ego", r.vs_ego)},
                        cmc_plot_options(r.vs_exo.gallery_size));
  const nlohmann::json summary = {{"vs_exo", curve_summary(r.vs_exo, 0)}, {"vs_ego", curve_summary(r.vs_ego, 0)}};
  write_text(ctx.out() / "synth_retrieval.json", summary.dump(2));
  ctx.log.info("synth_retrieval", {{"auc_vs_exo", r.vs_exo.auc}, {"auc_vs_ego", r.vs_ego.auc}});
  std::cout << "auc vs F_exo " << r.vs_exo.auc << "\nauc vs F_ego " << r.vs_ego.auc << "\n";
}

void cmd_plot(Context& ctx) {
  std::vector<plot::Series> all;
  std::stringstream ss(ctx.require("inputs", "--in"));
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::filesystem::path p(item);
    for (auto s : plot::read_csv(p)) {
      if (s.name.empty()) s.name = p.stem().string();
      all.push_back(std::move(s));
    }
  }
  if (all.empty()) fail(ErrorKind::EmptyInput, "no series to plot");
  const std::filesystem::path png = ctx.io("png", (ctx.out() / "plot.png").string());
  plot::write_line_plot(png, all);
  auto csv = png;
  csv.replace_extension(".csv");
  plot::write_csv(csv, all);
  ctx.log.info("plot", {{"series", static_cast<long long>(all.size())}, {"png", png.string()}});
  std::cout << "plot " << png.string() << "\n";
}

}  // namespace egoexo::cli
