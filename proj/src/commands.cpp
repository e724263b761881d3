#include "rcnet/commands.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "rcnet/clip_io.hpp"
#include "rcnet/gradcheck_suite.hpp"
#include "rcnet/metrics.hpp"
#include "rcnet/network.hpp"
#include "rcnet/tensor_io.hpp"

namespace fs = std::filesystem;

namespace rcnet {

namespace {

std::vector<std::string> split_list(const std::string &text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos)
      continue;
    const auto e = item.find_last_not_of(" \t");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::vector<ScenarioSpec> select_scenarios(const std::string &list) {
  const auto all = standard_scenarios();
  std::vector<ScenarioSpec> out;
  for (const auto &want : split_list(list)) {
    bool found = false;
    for (const auto &sc : all)
      if (sc.tag == want || sc.tag.rfind(want + "/", 0) == 0) {
        out.push_back(sc);
        found = true;
      }
    if (!found)
      throw ConfigError("unknown scenario '" + want + "'");
  }
  if (out.empty())
    throw ConfigError("no scenarios selected");
  return out;
}

std::string now_utc() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string require_out(const CommandOptions &o, const char *cmd) {
  if (o.out.empty())
    throw ConfigError(std::string(cmd) + ": --out is required");
  fs::create_directories(o.out);
  return o.out;
}

void write_text(const fs::path &path, const std::string &text) {
  write_file_bytes(path.string(), std::vector<std::uint8_t>(text.begin(), text.end()));
}

void write_run_manifest(const CommandOptions &o, const std::string &command,
                        const RunConfig &cfg) {
  nlohmann::json j;
  j["command"] = command;
  j["config"] = o.config;
  j["corpus"] = o.corpus;
  j["inputs"] = o.positional;
  j["seed"] = cfg.seed;
  j["output_dir"] = o.out;
  j["tool_version"] = kToolVersion;
  j["timestamp"] = now_utc();
  j["workers"] = cfg.workers;
  write_text(fs::path(o.out) / "run_manifest.json", j.dump(2) + "\n");
}

RunConfig resolve(const CommandOptions &o) {
  RunConfig cfg = RunConfig::load(o.config);
  if (o.seed)
    cfg.seed = *o.seed;
  if (o.scales)
    cfg.eval_scales = *o.scales;
  if (o.max_iters)
    cfg.optim.max_iters = *o.max_iters;
  if (o.no_static_synthesis)
    cfg.train.static_synthesis = false;
  if (o.workers)
    cfg.workers = *o.workers;
  return cfg;
}

std::vector<ClipSample> load_corpus_or_throw(const std::string &manifest,
                                             std::ostream &out) {
  if (manifest.empty())
    throw ConfigError("--corpus is required");
  CorpusLoad c = load_corpus(manifest);
  for (const auto &f : c.failures)
    out << "warning: skipped " << f << "\n";
  if (c.samples.empty())
    throw ConfigError("corpus '" + manifest + "' has no readable samples");
  return std::move(c.samples);
}

const std::string &positional(const CommandOptions &o, std::size_t k,
                              const char *what) {
  if (o.positional.size() <= k)
    throw ConfigError(std::string("missing ") + what);
  return o.positional[k];
}

OpKind parse_op(const std::string &name) {
  if (name == "atrous_retro_conv")
    return OpKind::retro_conv;
  for (OpKind k : {OpKind::conv3d, OpKind::retro_conv, OpKind::temporal_avg_pool,
                   OpKind::deconv2x2, OpKind::relu, OpKind::sigmoid,
                   OpKind::maxpool2, OpKind::concat})
    if (op_name(k) == name)
      return k;
  throw ConfigError("unknown op kind '" + name + "'");
}

} // namespace

RunConfig RunConfig::from_kv(const KvConfig &kv) {
  RunConfig c;
  if (kv.has_section("model"))
    c.model = ModelConfig::from_kv(kv.section("model"));
  c.seed = kv.has_section("run") ? kv.section("run").u64("seed", c.seed) : c.seed;

  if (kv.has_section("synth")) {
    const KvSection &s = kv.section("synth");
    SynthConfig &sy = c.synth;
    if (s.has("scenarios"))
      sy.scenarios = select_scenarios(s.str("scenarios", ""));
    if (s.has("stationary_prob"))
      for (auto &scenario : sy.scenarios)
        scenario.stationary_prob = s.real("stationary_prob", 0.0);
    sy.clips_per_scenario = s.u64("clips_per_scenario", sy.clips_per_scenario);
    sy.source_h = s.u64("source_h", sy.source_h);
    sy.source_w = s.u64("source_w", sy.source_w);
    sy.length = s.u64("length", sy.length);
    sy.max_crops_per_scene = s.u64("max_crops_per_scene", sy.max_crops_per_scene);
    sy.filter = s.flag("filter", sy.filter);
    SamplerConfig &sc = sy.sampler;
    sc.fg_lo = s.real("fg_lo", sc.fg_lo);
    sc.fg_hi = s.real("fg_hi", sc.fg_hi);
    sc.interval_min = s.u64("interval_min", sc.interval_min);
    sc.interval_max = s.u64("interval_max", sc.interval_max);
    sc.crop.scales = s.reals("scales", sc.crop.scales);
    sc.crop.crop_h = s.u64("crop_h", sc.crop.crop_h);
    sc.crop.crop_w = s.u64("crop_w", sc.crop.crop_w);
    sc.crop.stride_h = s.u64("stride_h", sc.crop.stride_h);
    sc.crop.stride_w = s.u64("stride_w", sc.crop.stride_w);
  }

  if (kv.has_section("train")) {
    const KvSection &t = kv.section("train");
    OptimConfig &op = c.optim;
    op.base_lr = t.real("base_lr", op.base_lr);
    op.lr_decay_factor = t.real("lr_decay_factor", op.lr_decay_factor);
    op.decay_every_iters = t.u64("decay_every_iters", op.decay_every_iters);
    op.momentum = t.real("momentum", op.momentum);
    op.weight_decay = t.real("weight_decay", op.weight_decay);
    op.batch_size = t.u64("batch_size", op.batch_size);
    op.max_iters = t.u64("max_iters", op.max_iters);
    c.train.static_synthesis = t.flag("static_synthesis", c.train.static_synthesis);
    c.train.log_every = t.u64("log_every", c.train.log_every);
    c.loss.alpha = t.real("alpha", c.loss.alpha);
    c.loss.epsilon = t.real("epsilon", c.loss.epsilon);
    if (!t.flag("augment", true))
      c.augment = AugmentConfig::none();
  }

  if (kv.has_section("eval")) {
    const KvSection &e = kv.section("eval");
    c.eval_scales = e.reals("scales", c.eval_scales);
    c.workers = e.u64("workers", c.workers);
  }

  c.model.validate();
  c.synth.sampler.validate();
  c.loss.validate();
  c.optim.validate();
  if (c.eval_scales.empty())
    throw ConfigError("eval scales must not be empty");
  return c;
}

RunConfig RunConfig::load(const std::string &path) {
  return from_kv(path.empty() ? KvConfig{} : KvConfig::load(path));
}

std::vector<std::size_t> fg_histogram(const std::vector<ClipSample> &samples,
                                      std::size_t buckets) {
  std::vector<std::size_t> h(buckets, 0);
  for (const auto &s : samples) {
    auto b = static_cast<std::size_t>(s.fg_ratio * static_cast<double>(buckets));
    h[std::min(b, buckets - 1)]++;
  }
  return h;
}

int cmd_synth(const CommandOptions &o, std::ostream &out) {
  const RunConfig cfg = resolve(o);
  const std::string dir = require_out(o, "synth");
  write_run_manifest(o, "synth", cfg);
  SynthConfig sc = cfg.synth;
  sc.seed = cfg.seed;
  const std::vector<ClipSample> corpus = synthesize_corpus(sc);

  std::vector<std::string> entries;
  std::map<std::string, std::size_t> per_scenario;
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    std::ostringstream name;
    name << "clip_" << std::setw(5) << std::setfill('0') << k << ".rcclip";
    save_clip(corpus[k], (fs::path(dir) / name.str()).string());
    entries.push_back(name.str());
    per_scenario[corpus[k].scenario]++;
  }
  write_manifest((fs::path(dir) / "manifest.txt").string(), entries,
                 std::string(kToolVersion) + " synth seed " +
                     std::to_string(cfg.seed));

  out << "wrote " << corpus.size() << " clips to " << dir << "\n";
  for (const auto &[tag, n] : per_scenario)
    out << "  " << std::left << std::setw(26) << tag << n << "\n";
  out << "fg_ratio histogram:\n";
  const auto hist = fg_histogram(corpus);
  for (std::size_t b = 0; b < hist.size(); ++b)
    out << "  [" << std::fixed << std::setprecision(1) << b / 10.0 << ", "
        << (b + 1) / 10.0 << (b + 1 == hist.size() ? "]" : ")") << " "
        << hist[b] << "\n";
  return kExitOk;
}

int cmd_train(const CommandOptions &o, std::ostream &out) {
  const RunConfig cfg = resolve(o);
  const std::string dir = require_out(o, "train");
  std::vector<ClipSample> pool = load_corpus_or_throw(o.corpus, out);
  write_run_manifest(o, "train", cfg);

  Model model = build_model(cfg.model, cfg.seed);
  SamplerConfig sc = cfg.synth.sampler;
  sc.augment = cfg.augment;
  TrainingSampler sampler(std::move(pool), sc, cfg.seed + 1);
  const TrainResult res =
      train(model, sampler, cfg.loss, cfg.optim, cfg.train,
            [&](const LossLogEntry &e) {
              out << "iter " << e.iter << " lr " << e.lr << " loss " << e.loss
                  << std::endl;
            });
  write_text(fs::path(dir) / "train_log.txt", res.log_text());
  save_checkpoint(model, (fs::path(dir) / "model.rcnet").string());
  out << "checkpoint written to " << (fs::path(dir) / "model.rcnet").string()
      << "\n";
  return kExitOk;
}

int cmd_eval(const CommandOptions &o, std::ostream &out) {
  const RunConfig cfg = resolve(o);
  const Model model = load_checkpoint(positional(o, 0, "checkpoint path"));
  if (o.corpus.empty())
    throw ConfigError("--corpus is required");
  CorpusLoad c = load_corpus(o.corpus);
  if (c.samples.empty())
    throw ConfigError("corpus '" + o.corpus + "' has no readable samples");
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    write_run_manifest(o, "eval", cfg);
  }
  EvalReport rep = evaluate(model, c.samples, cfg.eval_scales, cfg.workers);
  rep.skipped += c.failures.size();
  rep.warnings.insert(rep.warnings.begin(), c.failures.begin(), c.failures.end());
  out << rep.text();
  if (!o.out.empty()) {
    write_text(fs::path(o.out) / "report.txt", rep.text());
    write_text(fs::path(o.out) / "metrics.json", rep.json());
  }
  return kExitOk;
}

int cmd_infer(const CommandOptions &o, std::ostream &out) {
  const RunConfig cfg = resolve(o);
  const Model model = load_checkpoint(positional(o, 0, "checkpoint path"));
  const ClipSample clip = load_clip(positional(o, 1, "clip path"));
  const std::string dir = require_out(o, "infer");
  write_run_manifest(o, "infer", cfg);
  const Tensor5f prob = infer_multiscale(model, clip.clip, cfg.eval_scales);
  save_tensor((fs::path(dir) / "probability.rten").string(), prob);
  const Dims5 &d = prob.dims();
  Mask2 mask(1, d.h, d.w);
  for (std::size_t k = 0; k < prob.size(); ++k)
    mask.data[k] = prob.data()[k] >= kDefaultThreshold ? 1 : 0;
  write_pgm((fs::path(dir) / "mask.pgm").string(), mask);
  out << "foreground fraction "
      << static_cast<double>(mask.count_ones()) / static_cast<double>(d.h * d.w)
      << "\n";
  return kExitOk;
}

int cmd_gradcheck(const CommandOptions &o, std::ostream &out) {
  SuiteOptions so;
  if (!o.config.empty()) {
    const KvConfig kv = KvConfig::load(o.config);
    if (kv.has_section("model"))
      so.model = ModelConfig::from_kv(kv.section("model"));
    if (kv.has_section("gradcheck")) {
      const KvSection &g = kv.section("gradcheck");
      so.check.epsilon = g.real("epsilon", so.check.epsilon);
      so.check.tolerance = g.real("tolerance", so.check.tolerance);
      so.check.samples_per_tensor =
          g.u64("samples_per_tensor", so.check.samples_per_tensor);
    }
  }
  so.model.validate();
  if (o.seed)
    so.seed = *o.seed;
  if (!o.inject_fault.empty())
    so.fault = parse_op(o.inject_fault);
  out << "gradient check (double precision, epsilon " << so.check.epsilon
      << ", tolerance " << so.check.tolerance << ")\n";
  const SuiteReport rep = run_gradcheck_suite(so);
  out << rep.text();
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    write_text(fs::path(o.out) / "gradcheck.txt", rep.text());
  }
  if (!rep.passed()) {
    out << "failing cases:";
    for (const auto &n : rep.failed())
      out << ' ' << n;
    out << "\n";
    return kExitNumeric;
  }
  return kExitOk;
}

int run_command(const std::string &name, const CommandOptions &o,
                std::ostream &out, std::ostream &err) {
  try {
    if (name == "synth")
      return cmd_synth(o, out);
    if (name == "train")
      return cmd_train(o, out);
    if (name == "eval")
      return cmd_eval(o, out);
    if (name == "infer")
      return cmd_infer(o, out);
    if (name == "gradcheck")
      return cmd_gradcheck(o, out);
    err << "unknown command '" << name << "'\n";
    return kExitUsage;
  } catch (const ConfigError &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const SpecError &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError &e) {
    err << "numeric abort: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

} // namespace rcnet
