#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rcnet/binary_io.hpp"
#include "rcnet/clip_io.hpp"
#include "rcnet/commands.hpp"
#include "rcnet/network.hpp"

using namespace rcnet;
namespace fs = std::filesystem;

namespace {

const char *kConfig = R"(# small run used by the command tests
[model]
backbone_widths = 4, 4, 6
change_widths = 4, 4, 6
arpp_dilations = 1, 2

[synth]
scenarios = static-texture/slow, dynamic-sinusoid/fast
clips_per_scenario = 50
source_h = 64
source_w = 64
crop_h = 32
crop_w = 32
stride_h = 32
stride_w = 32
scales = 1

[train]
base_lr = 0.01
batch_size = 4
max_iters = 3
log_every = 1

[run]
seed = 5
)";

struct Workspace {
  fs::path root;
  explicit Workspace(const std::string &name)
      : root(fs::temp_directory_path() / ("rcnet_cli_" + name)) {
    fs::remove_all(root);
    fs::create_directories(root);
    std::ofstream(root / "run.cfg") << kConfig;
  }
  ~Workspace() { fs::remove_all(root); }
  std::string path(const std::string &rel) const { return (root / rel).string(); }
};

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run(const std::string &cmd, const CommandOptions &o) {
  std::ostringstream out, err;
  const int code = run_command(cmd, o, out, err);
  return {code, out.str(), err.str()};
}

CommandOptions base(const Workspace &w) {
  CommandOptions o;
  o.config = w.path("run.cfg");
  return o;
}

Outcome synth(const Workspace &w, const std::string &dir) {
  CommandOptions o = base(w);
  o.out = w.path(dir);
  return run("synth", o);
}

std::vector<std::uint8_t> bytes_of(const std::string &p) { return read_file_bytes(p); }

} // namespace

TEST_CASE("synth writes the balanced corpus, manifest and histogram") {
  Workspace w("synth");
  const Outcome r = synth(w, "corpus");
  REQUIRE(r.code == kExitOk);
  const auto entries = read_manifest(w.path("corpus/manifest.txt"));
  CHECK(entries.size() == 100);
  std::size_t files = 0;
  for (const auto &e : fs::directory_iterator(w.path("corpus")))
    files += e.path().extension() == ".rcclip";
  CHECK(files == 100);
  CHECK(fs::exists(w.path("corpus/run_manifest.json")));
  CHECK(r.out.find("static-texture/slow") != std::string::npos);
  CHECK(r.out.find("dynamic-sinusoid/fast") != std::string::npos);

  std::size_t hist_total = 0;
  std::istringstream lines(r.out);
  std::string line;
  while (std::getline(lines, line))
    if (line.find("  [") == 0)
      hist_total += std::stoul(line.substr(line.rfind(' ') + 1));
  CHECK(hist_total == 100);

  const auto s = load_clip(w.path("corpus/" + entries[7]));
  CHECK(s.clip.dims() == Dims5{1, 3, 4, 32, 32});

  REQUIRE(synth(w, "again").code == kExitOk);
  for (std::size_t k : {0u, 42u, 99u})
    CHECK(bytes_of(w.path("corpus/" + entries[k])) ==
          bytes_of(w.path("again/" + entries[k])));
}

TEST_CASE("train with zero iterations saves the freshly initialised model") {
  Workspace w("train0");
  REQUIRE(synth(w, "corpus").code == kExitOk);
  CommandOptions o = base(w);
  o.corpus = w.path("corpus/manifest.txt");
  o.out = w.path("run");
  o.max_iters = 0;
  REQUIRE(run("train", o).code == kExitOk);
  const RunConfig cfg = RunConfig::load(w.path("run.cfg"));
  CHECK(load_checkpoint(w.path("run/model.rcnet")).graph.params() ==
        build_model(cfg.model, 5).graph.params());
}

TEST_CASE("training, evaluation and inference are deterministic end to end") {
  Workspace w("pipeline");
  REQUIRE(synth(w, "corpus").code == kExitOk);
  CommandOptions t = base(w);
  t.corpus = w.path("corpus/manifest.txt");
  t.out = w.path("a");
  const Outcome ta = run("train", t);
  REQUIRE(ta.code == kExitOk);
  t.out = w.path("b");
  REQUIRE(run("train", t).code == kExitOk);
  CHECK(bytes_of(w.path("a/model.rcnet")) == bytes_of(w.path("b/model.rcnet")));
  CHECK(bytes_of(w.path("a/train_log.txt")) == bytes_of(w.path("b/train_log.txt")));
  CHECK(ta.out.find("iter 3 ") != std::string::npos);

  t.no_static_synthesis = true;
  t.out = w.path("c");
  REQUIRE(run("train", t).code == kExitOk);
  CHECK(bytes_of(w.path("a/model.rcnet")) != bytes_of(w.path("c/model.rcnet")));

  CommandOptions e = base(w);
  e.positional = {w.path("a/model.rcnet")};
  e.corpus = w.path("corpus/manifest.txt");
  e.scales = std::vector<double>{1.0, 0.5};
  e.out = w.path("eval");
  const Outcome er = run("eval", e);
  REQUIRE(er.code == kExitOk);
  CHECK(er.out.find("# scales: 1 0.5") != std::string::npos);
  CHECK(er.out.find("Average") != std::string::npos);
  CHECK(fs::exists(w.path("eval/metrics.json")));

  CommandOptions i = base(w);
  const auto clip = w.path("corpus/" + read_manifest(w.path("corpus/manifest.txt"))[3]);
  i.positional = {w.path("a/model.rcnet"), clip};
  i.out = w.path("inf1");
  const Outcome ir = run("infer", i);
  REQUIRE(ir.code == kExitOk);
  CHECK(ir.out.find("foreground fraction") != std::string::npos);
  const auto pgm = bytes_of(w.path("inf1/mask.pgm"));
  const std::string header = "P5\n32 32\n255\n";
  REQUIRE(pgm.size() == header.size() + 32 * 32);
  CHECK(std::string(pgm.begin(), pgm.begin() + header.size()) == header);
  i.out = w.path("inf2");
  REQUIRE(run("infer", i).code == kExitOk);
  CHECK(bytes_of(w.path("inf1/probability.rten")) ==
        bytes_of(w.path("inf2/probability.rten")));
  CHECK(pgm == bytes_of(w.path("inf2/mask.pgm")));
}

TEST_CASE("exit codes separate usage and data errors") {
  Workspace w("errors");
  {
    std::ofstream(w.path("empty.txt")) << "# nothing\n";
    const Model m = build_model(RunConfig::load(w.path("run.cfg")).model, 1);
    save_checkpoint(m, w.path("m.rcnet"));
    CommandOptions e = base(w);
    e.positional = {w.path("m.rcnet")};
    e.corpus = w.path("empty.txt");
    CHECK(run("eval", e).code == kExitUsage);
    e.corpus.clear();
    CHECK(run("eval", e).code == kExitUsage);
  }
  {
    std::ofstream(w.path("bad.rcclip"), std::ios::binary) << "RCCLIP1 truncated";
    CommandOptions i = base(w);
    i.positional = {w.path("m.rcnet"), w.path("bad.rcclip")};
    i.out = w.path("inf");
    const Outcome r = run("infer", i);
    CHECK(r.code == kExitData);
    CHECK_FALSE(r.err.empty());
  }
  {
    CommandOptions o;
    o.config = w.path("missing.cfg");
    o.out = w.path("x");
    CHECK(run("synth", o).code != kExitOk);
    CHECK(run("frobnicate", CommandOptions{}).code == kExitUsage);
    CommandOptions s = base(w);
    CHECK(run("synth", s).code == kExitUsage); // --out missing
  }
}

TEST_CASE("gradcheck passes and an injected fault exits with the numeric code") {
  CommandOptions o;
  const Outcome ok = run("gradcheck", o);
  CHECK(ok.code == kExitOk);
  CHECK(ok.out.find("[PASS] model") != std::string::npos);
  o.inject_fault = "retro_conv";
  const Outcome bad = run("gradcheck", o);
  CHECK(bad.code == kExitNumeric);
  CHECK(bad.out.find("failing cases:") != std::string::npos);
  CHECK(bad.out.find("retro_conv") != std::string::npos);
  o.inject_fault = "no_such_op";
  CHECK(run("gradcheck", o).code == kExitUsage);
}

TEST_CASE("run config applies synth keys to every selected scenario") {
  const KvConfig kv = KvConfig::parse(
      "[synth]\nscenarios = noise-field\nstationary_prob = 0\n[train]\nbatch_size = 6\n");
  const RunConfig cfg = RunConfig::from_kv(kv);
  REQUIRE(cfg.synth.scenarios.size() == 2);
  for (const auto &s : cfg.synth.scenarios) {
    CHECK(s.background == BackgroundKind::noise_field);
    CHECK(s.stationary_prob == 0.0);
  }
  CHECK(cfg.optim.batch_size == 6);
  CHECK_THROWS_AS(RunConfig::from_kv(KvConfig::parse("[synth]\nscenarios = lava\n")),
                  ConfigError);
}
