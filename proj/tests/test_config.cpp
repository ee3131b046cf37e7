#include <doctest.h>

#include "isarec/config.hpp"
#include "isarec/error.hpp"
#include "test_util.hpp"

using namespace isarec;

TEST_CASE("config text round-trips every key") {
  PipelineConfig c;
  c.set("pipeline.dataset_root", "/data/oa2");
  c.set("pipeline.modality", "fused");
  c.set("pipeline.splits", "B,D");
  c.set("isa.step_size", "0.123456789012345");
  c.set("classifier.gamma_grid", "2^-3,0.1,7");
  c.set("vocabulary.seed", "18446744073709551615");
  const std::string text = c.to_text();
  const auto back = PipelineConfig::from_text(text);
  CHECK(back.to_text() == text);
  for (const auto& k : c.keys()) CHECK(back.get(k) == c.get(k));
  CHECK(back.eval.grid.gamma_values == std::vector<double>{0.125, 0.1, 7.0});
  CHECK(back.eval.pretrain.train.step_size == 0.123456789012345);
  CHECK(back.eval.only_subjects == std::vector<std::string>{"B", "D"});
  CHECK(back.eval.features == FeatureSet::Fused);

  // defaults survive too
  CHECK(PipelineConfig::from_text(PipelineConfig().to_text()).to_text() == PipelineConfig().to_text());
}

TEST_CASE("default grids are powers of two") {
  PipelineConfig c;
  const auto& C = c.eval.grid.c_values;
  REQUIRE_FALSE(C.empty());
  for (double v : C) CHECK(std::exp2(std::round(std::log2(v))) == v);
  c.set("classifier.c_grid", "2^-5, 2^15");
  CHECK(c.eval.grid.c_values == std::vector<double>{1.0 / 32, 32768.0});
}

TEST_CASE("changing the layer-1 block or grid re-derives the layer-2 extent") {
  PipelineConfig c;
  c.set("patch_sampling.layer1_block", "10,10,6");
  c.set("patch_sampling.grid_stride", "4,4,4");
  const auto& b2 = c.eval.pretrain.geometry.layer2;
  CHECK(b2.sx == 14);
  CHECK(b2.sy == 14);
  CHECK(b2.st == 10);
  c.set("patch_sampling.grid", "3,2,2");
  CHECK(c.eval.pretrain.geometry.layer2.sx == 18);
  CHECK_NOTHROW(c.eval.pretrain.geometry.validate());
}

TEST_CASE("config parser: comments, whitespace and errors") {
  const auto c = PipelineConfig::from_text(
      "# leading comment\n\n[pipeline]\n  modality =  depth   # trailing\nthreads=3\n"
      "[isa]\nmax_iters = 7\n");
  CHECK(c.eval.features == FeatureSet::Depth);
  CHECK(c.eval.threads == 3);
  CHECK(c.eval.pretrain.train.max_iters == 7);

  CHECK_THROWS_AS(PipelineConfig::from_text("[isa]\nbogus = 1\n"), InputError);
  CHECK_THROWS_AS(PipelineConfig::from_text("threads = 1\n"), InputError);
  CHECK_THROWS_AS(PipelineConfig::from_text("[isa\n"), InputError);
  CHECK_THROWS_AS(PipelineConfig::from_text("[isa]\nmax_iters\n"), InputError);
  try {
    PipelineConfig::from_text("[isa]\n\nmax_iters = -1\n");
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("config line 3") != std::string::npos);
  }

  PipelineConfig d;
  CHECK_THROWS_AS(d.set("classifier.folds", "1"), InputError);
  CHECK_THROWS_AS(d.set("pipeline.modality", "rgb"), InputError);
  CHECK_THROWS_AS(d.set("pipeline.pretrain_set", "test"), InputError);
  CHECK_THROWS_AS(d.set("classifier.c_grid", "0"), InputError);
  CHECK_THROWS_AS(d.set("patch_sampling.grid", "2,2"), InputError);
  CHECK_THROWS_AS(d.set("nosection", "1"), InputError);
  CHECK_THROWS_AS(d.get("isa.nothing"), InputError);
}

TEST_CASE("config file loading") {
  testutil::TempDir dir("conf");
  testutil::write_text(dir / "a.conf", "[vocabulary]\nwords = 33\n");
  CHECK(PipelineConfig::from_file(dir / "a.conf").eval.kmeans.words == 33);
  CHECK_THROWS_AS(PipelineConfig::from_file(dir / "missing.conf"), InputError);
}
