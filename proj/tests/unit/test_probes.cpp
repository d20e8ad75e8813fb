#include <gtest/gtest.h>

#include <filesystem>

#include "egoexo/error.hpp"
#include "egoexo/probes.hpp"
#include "egoexo/toygen.hpp"
#include "json.hpp"

using namespace egoexo;
using namespace egoexo::probes;
namespace fs = std::filesystem;

namespace {

const Manifest& tiny_dataset() {
  static const Manifest m = [] {
    toygen::DatasetOptions o;
    o.scenes = 2;
    o.sequences_per_scene = 3;
    o.length = 4;
    o.image_size = 24;
    const auto dir = fs::temp_directory_path() / "egoexo_test_probes" / "data";
    fs::remove_all(dir);
    return toygen::generate_dataset(o, dir);
  }();
  return m;
}

retrieval::EmbeddingModel tiny_model() {
  retrieval::EncoderConfig cfg;
  cfg.input_size = 16;
  cfg.widths = {4, 8};
  cfg.embedding_dim = 6;
  cfg.seed = 11;
  retrieval::EmbeddingModel model(cfg);
  model.set_trained(true);
  return model;
}

ErrorKind kind_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no egoexo::Error thrown";
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST(ViewInvariance, GridShapeAndCounts) {
  const auto& m = tiny_dataset();
  const auto model = tiny_model();
  retrieval::InputCache inputs(m, {retrieval::Variant::rgb, 16, kDefaultFlowSigma, std::nullopt});
  const auto r = view_invariance_test(model, inputs);
  EXPECT_EQ(r.classes, static_cast<int>(vocabulary(m.modality).size()));
  EXPECT_DOUBLE_EQ(r.chance, 1.0 / r.classes);
  EXPECT_EQ(r.train_samples, static_cast<int>(iterate_aligned_pairs(m, Split::train, m.exo_kind).size()));
  EXPECT_EQ(r.test_samples, static_cast<int>(iterate_aligned_pairs(m, Split::test, m.exo_kind).size()));
  for (const auto& row : r.accuracy) {
    for (double a : row) {
      EXPECT_GE(a, 0.0);
      EXPECT_LE(a, 1.0);
    }
  }
  // The pooled column is the mean of the ego and exo columns.
  for (int fit = 0; fit < 3; ++fit) {
    EXPECT_NEAR(r.accuracy[fit][2], 0.5 * (r.accuracy[fit][0] + r.accuracy[fit][1]), 1e-12);
  }
  EXPECT_FALSE(r.permuted);

  const auto again = view_invariance_test(model, inputs);
  EXPECT_EQ(again.accuracy, r.accuracy);
}

TEST(ViewInvariance, TrainSplitScoresAtLeastChance) {
  const auto& m = tiny_dataset();
  const auto model = tiny_model();
  retrieval::InputCache inputs(m, {retrieval::Variant::rgb, 16, kDefaultFlowSigma, std::nullopt});
  ProbeOptions o;
  o.test_split = Split::train;
  o.standardize = true;
  o.svm.c = 1e4;
  o.svm.max_epochs = 5000;
  const auto r = view_invariance_test(model, inputs, o);
  EXPECT_GE(r.at(Side::ego, Side::ego), r.chance);
  EXPECT_GE(r.at(Side::exo, Side::exo), r.chance);
}

TEST(ViewInvariance, Errors) {
  const auto& m = tiny_dataset();
  retrieval::EncoderConfig cfg;
  cfg.input_size = 16;
  cfg.widths = {4};
  cfg.embedding_dim = 3;
  const retrieval::EmbeddingModel untrained(cfg);
  retrieval::InputCache inputs(m, {retrieval::Variant::rgb, 16, kDefaultFlowSigma, std::nullopt});
  EXPECT_EQ(kind_of([&] { view_invariance_test(untrained, inputs); }), ErrorKind::UntrainedModel);
}

TEST(Report, JsonAndCsvLayout) {
  ProbeReport r;
  r.accuracy = {{{0.5, 0.25, 0.375}, {0.1, 0.2, 0.15}, {1.0, 0.0, 0.5}}};
  r.chance = 0.2;
  r.classes = 5;
  r.class_names = {"a", "b", "c", "d", "e"};
  const auto j = nlohmann::json::parse(to_json(r));
  EXPECT_DOUBLE_EQ(j["accuracy"]["ego_only"]["exo"].get<double>(), 0.25);
  EXPECT_DOUBLE_EQ(j["accuracy"]["both_views"]["ego"].get<double>(), 1.0);
  EXPECT_FALSE(j["accuracy"].contains("both_only"));
  EXPECT_EQ(j["classes"].size(), 5u);
  const auto csv = to_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "classifier,ego,exo,both");
  EXPECT_NE(csv.find("exo-only,0.1,0.2,0.15\n"), std::string::npos);
}

TEST(SynthesizedRetrieval, GroundTruthSynthesisRanksFirstAgainstEgo) {
  const auto& m = tiny_dataset();
  const auto model = tiny_model();
  retrieval::InputCache inputs(m, {retrieval::Variant::rgb, 16, kDefaultFlowSigma, std::nullopt});
  const SynthesizeFn oracle = [](const PairedSequence& s, int t, const Frame&) { return read_png(s.ego_frame_path(t)); };
  const auto r = synthesized_retrieval_test(oracle, model, inputs, Split::test);
  EXPECT_DOUBLE_EQ(r.vs_ego.values.front(), 1.0);
  EXPECT_DOUBLE_EQ(r.vs_ego.auc, 1.0);
  EXPECT_GT(r.vs_exo.gallery_size, 0);
  EXPECT_LE(r.vs_exo.auc, 1.0);

  retrieval::EncoderConfig cfg;
  cfg.input_size = 16;
  cfg.channels = 2;
  cfg.widths = {4};
  const retrieval::EmbeddingModel flow_model(cfg);
  EXPECT_EQ(kind_of([&] { synthesized_retrieval_test(oracle, flow_model, inputs, Split::test); }),
            ErrorKind::InvalidArgument);
}
