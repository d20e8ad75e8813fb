#include <algorithm>
#include <fstream>
#include <iostream>

#include "commands.hpp"
#include "egoexo/error.hpp"
#include "egoexo/metrics.hpp"
#include "egoexo/nn/checkpoint.hpp"

namespace egoexo::cli {

using retrieval::Gallery;
using egoexo::GalleryKind;

void cmd_synth_train(Context& ctx) {
  const Manifest m = load_manifest_arg(ctx);
  const auto cfg = synthesis_config(ctx.cfg);
  synthesis::TrainOptions opts;
  opts.out_dir = ctx.out();
  if (const auto init = ctx.io("init"); !init.empty()) opts.init = init;
  opts.on_epoch = [&](const synthesis::EpochLog& e) {
    ctx.log.info("synth_epoch", {{"epoch", e.epoch},
                                 {"loss_d", e.loss_d},
                                 {"loss_g_adv", e.loss_g_adv},
                                 {"l1", e.l1},
                                 {"total", e.total}});
    std::cout << "epoch " << e.epoch << " loss_d " << e.loss_d << " loss_g_adv " << e.loss_g_adv << " l1 " << e.l1
              << "\n";
  };
  const auto result = synthesis::train(m, cfg, opts);
  if (!result.checkpoints.empty()) std::cout << "checkpoint " << result.checkpoints.back().string() << "\n";
}

void cmd_synth_generate(Context& ctx) {
  const auto model = synthesis::SynthesisModel::from_checkpoint(nn::load_checkpoint(ctx.require("ckpt", "--ckpt")));
  const Manifest m = load_manifest_arg(ctx);
  const Split split = split_arg(ctx, "test");
  synthesis::generate_split(model, m, split, ctx.out());
  ctx.log.info("synth_generate", {{"split", std::string(to_string(split))}});
  std::cout << "generated " << to_string(split) << " -> " << ctx.out().string() << "\n";
}

void cmd_retr_train(Context& ctx) {
  const Manifest m = load_manifest_arg(ctx);
  const auto cfg = retrieval_config(ctx.cfg);
  retrieval::RetrievalTrainOptions opts;
  opts.out_dir = ctx.out();
  if (const auto init = ctx.io("init"); !init.empty()) opts.init = init;
  opts.adapt = ctx.cfg.get_bool("retrieval", "adapt", false);
  opts.on_epoch = [&](const retrieval::RetrievalEpochLog& e) {
    LogFields f{{"epoch", e.epoch}, {"steps", e.steps}, {"samples", e.samples}, {"loss", e.loss}};
    if (e.val_auc) f.emplace_back("val_auc", *e.val_auc);
    ctx.log.info("retr_epoch", f);
    std::cout << "epoch " << e.epoch << " loss " << e.loss;
    if (e.val_auc) std::cout << " val_auc " << *e.val_auc;
    std::cout << "\n";
  };
  const auto result = retrieval::train(m, cfg, opts);
  if (!result.checkpoints.empty()) std::cout << "checkpoint " << result.checkpoints.back().string() << "\n";
}

void cmd_retr_gallery(Context& ctx) {
  auto [model, rc] = retrieval::load_model(nn::load_checkpoint(ctx.require("ckpt", "--ckpt")));
  const Manifest m = load_manifest_arg(ctx);
  const Split split = split_arg(ctx, "test");
  const GalleryKind kind = retrieval::parse_gallery_kind(ctx.io("kind", "F_exo"));
  Gallery g;
  if (kind == GalleryKind::F_prime_ego) {
    g = retrieval::build_synthesized_gallery(model, m, split, ctx.require("synth_dir", "--synth-dir"));
  } else {
    retrieval::InputCache inputs(m, input_options(ctx.cfg, rc));
    const auto view = kind == GalleryKind::F_ego ? retrieval::ViewSide::ego : retrieval::ViewSide::exo;
    g = retrieval::build_gallery(model, inputs, split, view);
  }
  const char* stem = kind == GalleryKind::F_ego ? "F_ego" : kind == GalleryKind::F_exo ? "F_exo" : "F_prime_ego";
  const auto path = ctx.out() / ("gallery_" + std::string(stem) + ".eemb");
  retrieval::write_gallery(path, g);
  ctx.log.info("gallery", {{"kind", retrieval::to_string(kind)}, {"entries", static_cast<long long>(g.entries.size())}});
  std::cout << "gallery " << g.entries.size() << " entries -> " << path.string() << "\n";
}

void cmd_retr_query(Context& ctx) {
  const Gallery queries = retrieval::read_gallery(ctx.require("queries", "--queries"));
  const Gallery gallery = retrieval::read_gallery(ctx.require("gallery", "--gallery"));
  const auto results = retrieval::retrieve_all(queries, gallery);
  const int top = std::max(1, ctx.cfg.get_int("io", "top", 5));
  const auto path = ctx.out() / "rankings.csv";
  std::ofstream os(path);
  os << "query,rank_of_truth";
  for (int k = 1; k <= top; ++k) os << ",top" << k;
  os << "\n";
  for (const auto& r : results) {
    os << r.query_id << ',' << r.rank_of_truth;
    for (int k = 0; k < top; ++k) {
      os << ',';
      if (k < r.gallery_size()) os << gallery.entries[r.order[k]].id;
    }
    os << "\n";
  }
  const auto curve = metrics::cmc(results);
  ctx.log.info("query", {{"queries", static_cast<long long>(results.size())}, {"auc", curve.auc}});
  std::cout << "queries " << results.size() << " auc " << curve.auc << " -> " << path.string() << "\n";
}

}  // namespace egoexo::cli
