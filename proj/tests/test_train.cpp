#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "rcnet/metrics.hpp"
#include "rcnet/train.hpp"

using namespace rcnet;

namespace {

Tensor5f probs(std::initializer_list<float> v) {
  Tensor5f t(Dims5{1, 1, 1, 1, v.size()});
  std::copy(v.begin(), v.end(), t.data());
  return t;
}

Mask2 labels(std::initializer_list<int> v) {
  Mask2 m(1, 1, v.size());
  std::size_t k = 0;
  for (int x : v)
    m.data[k++] = static_cast<std::uint8_t>(x);
  return m;
}

double oracle_bce(const Tensor5f &p, const Mask2 &y, double alpha, double eps) {
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double q = std::clamp(static_cast<double>(p.data()[k]), eps, 1.0 - eps);
    acc += y.data[k] ? alpha * std::log(q) : std::log(1.0 - q);
  }
  return -acc / static_cast<double>(p.size());
}

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.backbone_widths = {4, 4, 6};
  cfg.change_widths = {4, 4, 6};
  cfg.arpp_dilations = {1, 2};
  return cfg;
}

std::vector<ClipSample> tiny_pool(std::uint64_t seed, std::size_t n) {
  oracle::Gen g(seed);
  std::vector<ClipSample> pool;
  for (std::size_t k = 0; k < n; ++k) {
    ClipSample s;
    s.clip = g.tensor<float>(Dims5{1, 3, 3, 8, 8}, 0, 1);
    s.mask = Mask2(1, 8, 8);
    for (auto &m : s.mask.data)
      m = g.uniform(0, 1) < 0.25 ? 1 : 0;
    s.scenario = k % 2 ? "odd" : "even";
    s.refresh_fg_ratio();
    pool.push_back(std::move(s));
  }
  return pool;
}

OptimConfig quick_optim(std::size_t iters) {
  OptimConfig o;
  o.base_lr = 0.01;
  o.batch_size = 4;
  o.max_iters = iters;
  return o;
}

} // namespace

TEST_CASE("weighted BCE on worked examples") {
  const LossConfig cfg;
  CHECK(weighted_bce(probs({0.5f}), labels({0}), cfg).loss ==
        doctest::Approx(std::log(2.0)));
  CHECK(weighted_bce(probs({0.5f}), labels({1}), cfg).loss ==
        doctest::Approx(4.0 * std::log(2.0)));
  CHECK(weighted_bce(probs({1.0f, 0.0f}), labels({1, 0}), cfg).loss <
        1e-6);
  const auto r = weighted_bce(probs({0.0f}), labels({1}), cfg);
  CHECK(std::isfinite(r.loss));
  CHECK(r.loss == doctest::Approx(-4.0 * std::log(1e-7)));
}

TEST_CASE("weighted BCE gradient matches the analytic derivative") {
  oracle::Gen g(1);
  Tensor5f p = g.tensor<float>(Dims5{2, 1, 1, 3, 3}, 0.05, 0.95);
  Mask2 y(2, 3, 3);
  for (auto &v : y.data)
    v = g.uniform(0, 1) < 0.5 ? 1 : 0;
  const LossConfig cfg;
  const auto r = weighted_bce(p, y, cfg);
  CHECK(r.loss == doctest::Approx(oracle_bce(p, y, 4.0, 1e-7)).epsilon(1e-6));
  const double n = static_cast<double>(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double q = p.data()[k];
    const double want = y.data[k] ? -4.0 / (q * n) : 1.0 / ((1.0 - q) * n);
    CHECK(r.grad.data()[k] == doctest::Approx(want).epsilon(1e-5));
  }
}

TEST_CASE("foreground weight raises loss monotonically and ignores background-only") {
  oracle::Gen g(2);
  const Tensor5f p = g.tensor<float>(Dims5{1, 1, 1, 4, 4}, 0.1, 0.9);
  Mask2 mixed(1, 4, 4), bg(1, 4, 4);
  mixed.data[3] = mixed.data[9] = 1;
  double prev = -1.0;
  for (double a : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    LossConfig cfg;
    cfg.alpha = a;
    const double l = weighted_bce(p, mixed, cfg).loss;
    CHECK(l > prev);
    prev = l;
  }
  LossConfig lo, hi;
  lo.alpha = 1.0;
  hi.alpha = 9.0;
  CHECK(weighted_bce(p, bg, lo).loss == weighted_bce(p, bg, hi).loss);
}

TEST_CASE("loss config and dims are validated") {
  LossConfig bad;
  bad.alpha = -1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = LossConfig{};
  bad.epsilon = 0.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(weighted_bce(probs({0.5f, 0.5f}), labels({1}), LossConfig{}),
                  ShapeError);
}

TEST_CASE("learning-rate schedule steps at decay boundaries") {
  const OptimConfig o;
  CHECK(o.lr_at(0) == 1e-6);
  CHECK(o.lr_at(19999) == 1e-6);
  CHECK(o.lr_at(20000) == doctest::Approx(1e-7));
  CHECK(o.lr_at(40000) == doctest::Approx(1e-8));
  OptimConfig bad;
  bad.lr_decay_factor = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = OptimConfig{};
  bad.momentum = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = OptimConfig{};
  bad.decay_every_iters = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("SGD update rule with momentum and weight decay") {
  ParamStore<float> ps;
  ps.add("w", probs({1.0f, -2.0f}));
  GradStore<float> gs;
  gs.names = {"w"};
  gs.grads = {probs({0.5f, 0.25f})};
  OptimConfig o;
  o.base_lr = 0.0;
  TrainState st;
  sgd_step(ps, st, gs, o);
  CHECK(ps["w"] == probs({1.0f, -2.0f}));
  CHECK(st.iter == 1);

  OptimConfig gd;
  gd.base_lr = 0.1;
  gd.momentum = 0.0;
  gd.weight_decay = 0.0;
  TrainState st2;
  sgd_step(ps, st2, gs, gd);
  CHECK(ps["w"].data()[0] == doctest::Approx(0.95));
  CHECK(ps["w"].data()[1] == doctest::Approx(-2.025));

  ParamStore<float> pm;
  pm.add("w", probs({1.0f}));
  GradStore<float> gm;
  gm.names = {"w"};
  gm.grads = {probs({1.0f})};
  OptimConfig mo;
  mo.base_lr = 0.1;
  mo.momentum = 0.5;
  mo.weight_decay = 0.1;
  TrainState sm;
  double p = 1.0, v = 0.0;
  for (int step = 0; step < 4; ++step) {
    v = 0.5 * v + 1.0 + 0.1 * p;
    p -= 0.1 * v;
    sgd_step(pm, sm, gm, mo);
    CHECK(pm["w"].data()[0] == doctest::Approx(p).epsilon(1e-6));
  }
  // Zero gradient afterwards: velocity decays geometrically.
  gm.grads = {probs({0.0f})};
  mo.weight_decay = 0.0;
  const float before = pm["w"].data()[0];
  sgd_step(pm, sm, gm, mo);
  CHECK(pm["w"].data()[0] == doctest::Approx(before - 0.1 * 0.5 * v).epsilon(1e-6));
}

TEST_CASE("non-finite gradients abort without touching parameters") {
  ParamStore<float> ps;
  ps.add("a", probs({1.0f}));
  ps.add("b", probs({2.0f}));
  GradStore<float> gs;
  gs.names = {"a", "b"};
  gs.grads = {probs({0.1f}), probs({std::numeric_limits<float>::quiet_NaN()})};
  const auto before = ps;
  TrainState st;
  OptimConfig o;
  o.base_lr = 0.1;
  try {
    sgd_step(ps, st, gs, o);
    FAIL("expected NumericError");
  } catch (const NumericError &e) {
    CHECK(std::string(e.what()).find("b") != std::string::npos);
  }
  CHECK(ps == before);
  CHECK(st.iter == 0);
}

TEST_CASE("zero iterations leave the model unchanged") {
  Model m = build_model(tiny_config(), 1);
  const auto before = m.graph.params();
  TrainingSampler s(tiny_pool(1, 6), SamplerConfig{}, 2);
  const auto res = train(m, s, LossConfig{}, quick_optim(0), TrainOptions{});
  CHECK(res.log.empty());
  CHECK(m.graph.params() == before);
}

TEST_CASE("first logged loss equals the oracle loss of the first batch") {
  const auto pool = tiny_pool(2, 6);
  SamplerConfig sc;
  sc.augment = AugmentConfig::none();
  Model m = build_model(tiny_config(), 3);
  const Model fresh = m;
  TrainingSampler replay(pool, sc, 4);
  const Batch b = next_training_batch(replay, 4, true);
  const double want = oracle_bce(infer(fresh, b.clips), b.masks, 4.0, 1e-7);
  TrainingSampler s(pool, sc, 4);
  const auto res = train(m, s, LossConfig{}, quick_optim(3), TrainOptions{});
  REQUIRE(res.log.size() == 2);
  CHECK(res.log[0].iter == 1);
  CHECK(res.log[1].iter == 3);
  CHECK(res.log[0].loss == doctest::Approx(want).epsilon(1e-5));
  CHECK_FALSE(m.graph.params() == fresh.graph.params());
  CHECK(res.state.iter == 3);
}

TEST_CASE("training is deterministic for fixed seeds") {
  auto run = [] {
    Model m = build_model(tiny_config(), 5);
    TrainingSampler s(tiny_pool(3, 6), SamplerConfig{}, 6);
    TrainOptions opts;
    opts.log_every = 2;
    const auto res = train(m, s, LossConfig{}, quick_optim(4), opts);
    return std::make_pair(res.log_text(), checkpoint_bytes(m));
  };
  const auto a = run(), b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
  CHECK(a.first.rfind("iter 1 lr 0.01 loss ", 0) == 0);
}

TEST_CASE("static synthesis fills the second half of each batch") {
  TrainingSampler s(tiny_pool(4, 6), SamplerConfig{}, 7);
  const Batch b = next_training_batch(s, 4, true);
  const std::size_t plane = 64;
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t l = 0; l < 3; ++l)
        CHECK(std::equal(b.clips.plane(k, c, 2), b.clips.plane(k, c, 2) + plane,
                         b.clips.plane(k + 2, c, l)));
  for (std::size_t k = 2 * plane; k < 4 * plane; ++k)
    CHECK(b.masks.data[k] == 0);
  CHECK_THROWS_AS(next_training_batch(s, 3, true), ConfigError);
  CHECK(next_training_batch(s, 3, false).clips.dims().n == 3);
}

TEST_CASE("confusion counts and precision/recall/F") {
  const auto c = confusion(probs({0.9f, 0.5f, 0.49f, 0.1f, 0.7f}), labels({1, 0, 1, 0, 1}));
  CHECK(c == EvalCounts{2, 1, 1, 1});
  const Prf p = prf(EvalCounts{3, 1, 2, 10});
  CHECK(p.precision == doctest::Approx(0.75));
  CHECK(p.recall == doctest::Approx(0.6));
  CHECK(p.f_measure == doctest::Approx(2.0 / 3.0));
  const Prf z = prf(EvalCounts{0, 0, 0, 5});
  CHECK(z.precision == 0.0);
  CHECK(z.recall == 0.0);
  CHECK(z.f_measure == 0.0);
}

TEST_CASE("prf matches the count formula on random counts") {
  oracle::Gen g(9);
  for (int k = 0; k < 1000; ++k) {
    const EvalCounts c{g.index(0, 50), g.index(0, 50), g.index(0, 50), g.index(0, 50)};
    const Prf p = prf(c);
    const double tp = c.tp, fp = c.fp, fn = c.fn;
    const double f = tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
    CHECK(std::abs(p.f_measure - f) < 1e-12);
  }
}

TEST_CASE("evaluate aggregates counts and skips unusable samples") {
  const Model m = build_model(tiny_config(), 11);
  auto pool = tiny_pool(5, 4);
  const std::vector<double> scales{1.0};

  const EvalReport one = evaluate(m, std::span(pool.data(), 1), scales);
  const EvalCounts c0 = confusion(infer(m, pool[0].clip), pool[0].mask);
  CHECK(one.overall == c0);
  CHECK(one.evaluated == 1);

  std::vector<ClipSample> dup{pool[0], pool[0]};
  const EvalReport two = evaluate(m, dup, scales);
  CHECK(two.overall.tp == 2 * c0.tp);
  CHECK(two.overall.fn == 2 * c0.fn);
  CHECK(std::abs(prf(two.overall).f_measure - prf(c0).f_measure) < 1e-12);

  EvalCounts brute;
  std::map<std::string, EvalCounts> per;
  for (const auto &s : pool) {
    const Tensor5f p = infer(m, s.clip);
    EvalCounts c;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const bool pred = p.data()[k] >= 0.5f, truth = s.mask.data[k] == 1;
      c.tp += pred && truth;
      c.fp += pred && !truth;
      c.fn += !pred && truth;
      c.tn += !pred && !truth;
    }
    brute += c;
    per[s.scenario] += c;
  }
  ClipSample broken = pool[1];
  broken.clip = Tensor5f(Dims5{1, 3, 3, 6, 6});
  broken.mask = Mask2(1, 6, 6);
  pool.push_back(broken);
  const EvalReport rep = evaluate(m, pool, scales, 2);
  CHECK(rep.overall == brute);
  CHECK(rep.per_scenario == per);
  CHECK(rep.evaluated == 4);
  CHECK(rep.skipped == 1);
  CHECK(rep.warnings.size() == 1);
  CHECK(rep.text().find("Average") != std::string::npos);
  CHECK(rep.header().find("threshold 0.5") != std::string::npos);

  CHECK_THROWS_AS(evaluate(m, std::span<const ClipSample>{}, scales), ConfigError);
  CHECK_THROWS_AS(evaluate(m, pool, {}), ConfigError);
}

TEST_CASE("probability stats average over samples") {
  const Model m = build_model(tiny_config(), 12);
  const auto pool = tiny_pool(6, 3);
  const auto st = probability_stats(m, pool);
  double sum = 0.0, fg = 0.0, n = 0.0;
  for (const auto &s : pool) {
    const Tensor5f p = infer(m, s.clip);
    for (float v : p.flat()) {
      sum += v;
      fg += v >= 0.5f;
      n += 1;
    }
  }
  CHECK(st.mean_probability == doctest::Approx(sum / n));
  CHECK(st.foreground_rate == doctest::Approx(fg / n));
}
