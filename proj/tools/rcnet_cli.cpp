#include <iostream>

#include <CLI11.hpp>

#include "rcnet/commands.hpp"

int main(int argc, char **argv) {
  CLI::App app{"Retrospective-convolution change detection toolkit"};
  app.set_version_flag("--version", rcnet::kToolVersion);
  app.require_subcommand(1);

  rcnet::CommandOptions o;
  std::uint64_t seed = 0;
  std::vector<double> scales;
  std::size_t max_iters = 0, workers = 1;

  auto common = [&](CLI::App *sub) {
    sub->add_option("--config", o.config, "key=value config file")
        ->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--seed", seed, "master seed");
  };

  auto *synth = app.add_subcommand("synth", "synthesize a clip corpus");
  common(synth);

  auto *train = app.add_subcommand("train", "train a model on a corpus");
  common(train);
  train->add_option("--corpus", o.corpus, "corpus manifest")->required();
  train->add_option("--max-iters", max_iters, "override iteration count");
  train->add_flag("--no-static-synthesis", o.no_static_synthesis,
                  "train on native samples only");

  auto *eval = app.add_subcommand("eval", "evaluate a checkpoint on a corpus");
  common(eval);
  eval->add_option("checkpoint", o.positional, "model checkpoint")->required();
  eval->add_option("--corpus", o.corpus, "corpus manifest")->required();
  eval->add_option("--scales", scales, "inference scales, e.g. 1,0.5")
      ->delimiter(',');
  eval->add_option("--workers", workers, "evaluation threads");

  auto *infer = app.add_subcommand("infer", "predict the change mask of one clip");
  common(infer);
  infer->add_option("paths", o.positional, "checkpoint then clip file")
      ->expected(2)
      ->required();
  infer->add_option("--scales", scales, "inference scales")->delimiter(',');

  auto *grad = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  common(grad);
  grad->add_flag("--f64", o.f64, "double precision (always used)");
  grad->add_option("--inject-fault", o.inject_fault,
                   "corrupt the backward rule of this op kind");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : rcnet::kExitUsage;
  }

  CLI::App *sub = app.get_subcommands().front();
  if (sub->count("--seed"))
    o.seed = seed;
  if (sub->get_option_no_throw("--scales") && sub->count("--scales"))
    o.scales = scales;
  if (sub->get_option_no_throw("--max-iters") && sub->count("--max-iters"))
    o.max_iters = max_iters;
  if (sub->get_option_no_throw("--workers") && sub->count("--workers"))
    o.workers = workers;
  return rcnet::run_command(sub->get_name(), o, std::cout, std::cerr);
}
