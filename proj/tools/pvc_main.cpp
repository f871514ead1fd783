// Copyright 2026 The PVC Authors
// pvc: command-line front end for the voice-conversion pipeline.
//
// Licensed under the Apache License, Version 2.0

#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "pvc/cli.hpp"
#include "pvc/errors.hpp"
#include "pvc/log.hpp"
#include "pvc/run_config.hpp"
#include "pvc/version.hpp"

namespace {

struct GlobalArgs {
  std::string config_path;
  std::string out_dir;
  std::string mode;
  uint64_t seed = 0;
  bool seed_set = false;
};

pvc::RunConfig resolve_config(const GlobalArgs& g) {
  pvc::RunConfig cfg = g.config_path.empty()
                           ? pvc::parse_run_config(pvc::Json::object())
                           : pvc::load_run_config(g.config_path);
  if (g.seed_set) {
    cfg.seed = g.seed;
    cfg.training.seed = g.seed;
  }
  if (!g.out_dir.empty()) cfg.paths.out_dir = g.out_dir;
  if (!g.mode.empty())
    cfg.training.mode = pvc::prosody_mode_from_name(g.mode);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pvc: expressive voice conversion with discrete prosody codes"};
  app.set_version_flag("--version", pvc::kVersion);
  app.require_subcommand(1);

  GlobalArgs global;
  app.add_option("--config", global.config_path, "run configuration (JSON)");
  app.add_option("--out", global.out_dir, "output directory override");
  app.add_option("--mode", global.mode, "prosody mode override")
      ->check(CLI::IsMember({"none", "base", "rdpf", "adpf"}));
  auto* seed_opt = app.add_option("--seed", global.seed, "seed override");

  app.add_subcommand("extract", "extract mel/F0/content caches from wavs");
  app.add_subcommand("train-codebook", "train the product quantizer");
  app.add_subcommand("train", "train the conversion model");

  auto* convert = app.add_subcommand("convert", "convert an utterance");
  pvc::ConvertArgs convert_args;
  convert->add_option("--input", convert_args.input_wav, "source wav")
      ->required();
  convert
      ->add_option("--target-speaker", convert_args.target_speaker,
                   "target speaker label or index")
      ->required();
  convert->add_option("--alignment", convert_args.alignment_path,
                      "alignment file (adpf mode)");

  app.add_subcommand("evaluate", "score converted utterances");

  auto* inspect = app.add_subcommand("inspect-filter",
                                     "audit prosody filter structure");
  pvc::InspectArgs inspect_args;
  inspect->add_option("--input", inspect_args.input_cache, "feature cache")
      ->required();
  inspect->add_option("--alignment", inspect_args.alignment_path,
                      "alignment file (adpf)");
  inspect->add_option("--tau", inspect_args.tau, "fixed rate (rdpf)");

  CLI11_PARSE(app, argc, argv);
  global.seed_set = seed_opt->count() > 0;

  try {
    pvc::RunConfig cfg = resolve_config(global);
    if (app.got_subcommand("extract")) return pvc::cmd_extract(cfg);
    if (app.got_subcommand("train-codebook"))
      return pvc::cmd_train_codebook(cfg);
    if (app.got_subcommand("train")) return pvc::cmd_train(cfg);
    if (app.got_subcommand("convert")) {
      convert_args.mode_override = global.mode;
      return pvc::cmd_convert(cfg, convert_args);
    }
    if (app.got_subcommand("evaluate")) return pvc::cmd_evaluate(cfg);
    if (app.got_subcommand("inspect-filter")) {
      inspect_args.mode = global.mode.empty() ? "rdpf" : global.mode;
      return pvc::cmd_inspect_filter(cfg, inspect_args, std::cout);
    }
  } catch (const pvc::Error& ex) {
    pvc::log_error(ex.what());
    return 1;
  } catch (const std::exception& ex) {
    pvc::log_error(std::string("unexpected failure: ") + ex.what());
    return 2;
  }
  return 0;
}
