#include <doctest.h>

#include <filesystem>

#include "oracles.hpp"
#include "rcnet/network.hpp"

using namespace rcnet;

namespace {

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.backbone_widths = {4, 6, 8};
  cfg.change_widths = {4, 6, 8};
  return cfg;
}

} // namespace

TEST_CASE("default config is valid and describes three tapped stages") {
  const ModelConfig cfg;
  CHECK(cfg.violations().empty());
  CHECK(cfg.stages() == 3);
  CHECK(cfg.spatial_multiple() == 4);
}

TEST_CASE("config validation lists every violation") {
  ModelConfig cfg;
  cfg.decoder_levels = 2;
  cfg.change_widths = {16, 33, 64};
  cfg.arpp_dilations = {1, 1};
  const auto v = cfg.violations();
  CHECK(v.size() >= 3);
  try {
    cfg.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError &e) {
    const std::string msg = e.what();
    CHECK(msg.find("decoder_levels") != std::string::npos);
    CHECK(msg.find("33") != std::string::npos);
    CHECK(msg.find("repeats") != std::string::npos);
  }
}

TEST_CASE("raw-input backbone needs no decoder") {
  ModelConfig cfg;
  cfg.backbone = Backbone::raw_input;
  cfg.backbone_widths = {};
  cfg.change_widths = {8};
  cfg.decoder_levels = 0;
  CHECK(cfg.violations().empty());
  CHECK(cfg.spatial_multiple() == 1);
  const Model m = build_model(cfg, 1);
  oracle::Gen g(1);
  const auto y = infer(m, g.tensor<float>(Dims5{1, 3, 3, 7, 5}, 0, 1));
  CHECK(y.dims() == Dims5{1, 1, 1, 7, 5});
  cfg.decoder_levels = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("config text round-trips") {
  ModelConfig cfg;
  cfg.backbone = Backbone::stacked_k_blocks;
  cfg.blocks_per_stage = 2;
  cfg.backbone_widths = {8, 8};
  cfg.change_widths = {8, 12};
  cfg.decoder_levels = 2;
  cfg.change_module = ChangeModule::retro;
  cfg.arpp_dilations = {};
  const KvConfig kv = KvConfig::parse("[model]\n" + cfg.to_text());
  CHECK(ModelConfig::from_kv(kv.section("model")) == cfg);
}

TEST_CASE("build produces named, Glorot-bounded parameters") {
  const ModelConfig cfg = small_config();
  const Model m = build_model(cfg, 3);
  const auto &ps = m.graph.params();
  for (const char *name : {"stage0.conv0.w", "stage2.conv0.b", "change1.d3.retro.w",
                           "change0.d1.spatial_b.w", "decoder0.deconv.w",
                           "decoder1.fuse.w", "head.w", "head.b"})
    CHECK(ps.contains(name));
  const auto &w = ps["change1.d3.retro.w"];
  CHECK(w.dims() == Dims5{3, 6, 2, 3, 3});
  const double bound = std::sqrt(6.0 / ((6 + 3) * 18.0));
  for (float v : w.flat())
    CHECK(std::abs(v) <= bound);
  for (float v : ps["stage1.conv0.b"].flat())
    CHECK(v == 0.0f);
  CHECK(build_model(cfg, 3).graph.params() == ps);
  CHECK_FALSE(build_model(cfg, 4).graph.params() == ps);
}

TEST_CASE("infer enforces clip preconditions") {
  const Model m = build_model(small_config(), 1);
  oracle::Gen g(2);
  CHECK(infer(m, g.tensor<float>(Dims5{2, 3, 4, 8, 12}, 0, 1)).dims() ==
        Dims5{2, 1, 1, 8, 12});
  CHECK_THROWS_AS(infer(m, g.tensor<float>(Dims5{1, 3, 1, 8, 8})), TemporalError);
  CHECK_THROWS_AS(infer(m, g.tensor<float>(Dims5{1, 3, 4, 6, 8})), ShapeError);
  CHECK_THROWS_AS(infer(m, g.tensor<float>(Dims5{1, 2, 4, 8, 8})), ShapeError);
}

TEST_CASE("static clips give identical output for any length") {
  for (ChangeModule cm : {ChangeModule::arpp, ChangeModule::retro}) {
    ModelConfig cfg = small_config();
    cfg.change_module = cm;
    if (cm != ChangeModule::arpp)
      cfg.arpp_dilations = {};
    const Model m = build_model(cfg, 5);
    oracle::Gen g(3);
    const auto frame = g.static_clip<float>(Dims5{1, 3, 1, 8, 8});
    auto clip = [&](std::size_t L) {
      Tensor5f c(Dims5{1, 3, L, 8, 8});
      for (std::size_t ch = 0; ch < 3; ++ch)
        for (std::size_t l = 0; l < L; ++l)
          std::copy(frame.plane(0, ch, 0), frame.plane(0, ch, 0) + 64, c.plane(0, ch, l));
      return c;
    };
    CHECK(oracle::max_abs_diff(infer(m, clip(4)), infer(m, clip(6))) < 1e-6);
  }
}

TEST_CASE("outputs depend on historical frames") {
  const Model m = build_model(small_config(), 6);
  oracle::Gen g(4);
  const auto x = g.tensor<float>(Dims5{1, 3, 4, 8, 8}, 0, 1);
  const auto y = infer(m, x);
  for (std::size_t l = 0; l < 3; ++l) {
    auto x2 = x;
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t k = 0; k < 64; ++k)
        x2.plane(0, c, l)[k] = static_cast<float>(g.uniform(0, 1));
    CHECK(oracle::max_abs_diff(infer(m, x2), y) > 0.0);
  }
}

TEST_CASE("multi-scale inference equals the resize/infer/mean composition") {
  const Model m = build_model(small_config(), 7);
  oracle::Gen g(5);
  const auto x = g.tensor<float>(Dims5{1, 3, 4, 16, 16}, 0, 1);
  const auto p1 = infer(m, x);
  const auto p2 = bilinear_resize(infer(m, bilinear_resize(x, 8, 8)), 16, 16);
  Tensor5f ref(p1.dims());
  for (std::size_t k = 0; k < ref.size(); ++k)
    ref.data()[k] = (p1.data()[k] + p2.data()[k]) / 2.0f;
  CHECK(oracle::max_abs_diff(infer_multiscale(m, x, {1.0, 0.5}), ref) < 1e-6);
  CHECK(infer_multiscale(m, x, {1.0}) == p1);
  CHECK_THROWS_AS(infer_multiscale(m, x, {}), ConfigError);
}

TEST_CASE("checkpoint save/load preserves inference bitwise") {
  const Model m = build_model(small_config(), 8);
  const auto path = (std::filesystem::temp_directory_path() / "rcnet_ckpt_test.rcnet").string();
  save_checkpoint(m, path);
  const Model back = load_checkpoint(path);
  std::filesystem::remove(path);
  CHECK(back.config == m.config);
  CHECK(back.seed == 8);
  oracle::Gen g(6);
  const auto x = g.tensor<float>(Dims5{1, 3, 4, 8, 8}, 0, 1);
  CHECK(infer(back, x) == infer(m, x));
  CHECK(checkpoint_bytes(back) == checkpoint_bytes(m));
}

TEST_CASE("corrupted checkpoints are rejected with the right error") {
  const auto bytes = checkpoint_bytes(build_model(small_config(), 9));
  {
    auto bad = bytes;
    bad[1] = 'X';
    CHECK_THROWS_AS(checkpoint_from_bytes(bad), MagicError);
  }
  {
    auto bad = bytes;
    bad[6] = 2; // version field follows the 6-byte magic
    CHECK_THROWS_AS(checkpoint_from_bytes(bad), VersionError);
  }
  {
    auto bad = bytes;
    bad.resize(bytes.size() / 2);
    CHECK_THROWS_AS(checkpoint_from_bytes(bad), TruncationError);
  }
  {
    auto bad = bytes;
    bad.push_back(0);
    CHECK_THROWS_AS(checkpoint_from_bytes(bad), FormatError);
  }
}
