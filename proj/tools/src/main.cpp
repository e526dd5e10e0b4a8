// ratebench: rating-prediction benchmark CLI.
//
//   ratebench fixture  --kind movielens --out data/ml-raw
//   ratebench prepare  --kind movielens --raw data/ml-raw --out data/ml
//   ratebench run      --data data/ml --model user --out runs/user
//   ratebench run      --data data/ml --config configs/tfmlp.yaml --out runs/tfmlp
//   ratebench search   --data data/ml --config configs/tfmlp.yaml --trials 30 --out runs/s
//   ratebench curve    --data data/ml --config configs/tfmlp.yaml \
//                      --fractions 0.01,0.05,0.2,1.0 --out runs/curve
//
// Configs are YAML (JSON accepted); any key can be overridden on the command
// line with --set dotted.path=value. Every report embeds the resolved config.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <string>
#include <vector>

#include "ratebench/harness/config.hpp"
#include "ratebench/harness/prepared.hpp"
#include "ratebench/harness/runner.hpp"
#include "ratebench/harness/search.hpp"
#include "ratebench/synth.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct ConfigArgs {
  std::string config_path;
  std::string data_dir;
  std::string model;
  std::vector<std::string> sets;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config file (YAML or JSON)");
  cmd->add_option("--data", args.data_dir, "prepared dataset directory");
  cmd->add_option("--model", args.model,
                  "model kind shortcut (global|item|user|mf|mlp|transformer_mlp|llm)");
  cmd->add_option("--set", args.sets, "override, e.g. --set train.steps=2000")
      ->take_all();
}

json resolve_config_json(const ConfigArgs& args) {
  json cfg = json::object();
  if (!args.config_path.empty()) {
    cfg = ratebench::harness::load_config_file(args.config_path);
    if (!cfg.is_object()) {
      throw std::invalid_argument("config file must hold a mapping at the top level");
    }
  }
  if (!args.model.empty()) {
    if (!cfg.contains("model") || !cfg["model"].is_object()) {
      cfg["model"] = json::object();
    }
    cfg["model"]["kind"] = args.model;
  }
  if (!args.data_dir.empty()) cfg["dataset"]["prepared_dir"] = args.data_dir;
  for (const std::string& s : args.sets) ratebench::harness::apply_override(cfg, s);
  return cfg;
}

int run_fixture(const std::string& kind, const std::string& out,
                const std::string& spec_file, double scale, std::uint64_t seed,
                bool seed_given) {
  using ratebench::synth::SynthSpec;
  json overlay = json::object();
  if (!spec_file.empty()) {
    std::ifstream in(spec_file);
    if (!in) throw std::runtime_error("cannot read spec file: " + spec_file);
    in >> overlay;
  }
  const std::string effective_kind = overlay.value("kind", kind);
  SynthSpec spec = effective_kind == "amazon" ? SynthSpec::amazon_replica()
                                              : SynthSpec::movielens_replica();
  if (!overlay.empty()) {
    json base = json::parse(spec.to_json());
    base.update(overlay);
    spec = SynthSpec::from_json(base.dump());
  }
  if (scale != 1.0) spec = spec.scaled(scale);
  if (seed_given) spec.seed = seed;

  const auto summary = spec.kind == "amazon"
                           ? ratebench::synth::write_amazon_files(spec, out)
                           : ratebench::synth::write_movielens_files(spec, out);
  std::ofstream spec_out(fs::path(out) / "synth_spec.json");
  spec_out << spec.to_json() << '\n';
  std::cout << "wrote " << spec.kind << " fixture -> " << out << '\n'
            << "  users            " << summary.n_users << '\n'
            << "  catalog records  " << summary.n_catalog_records << '\n'
            << "  events           " << summary.n_events << '\n'
            << "  filtered events  " << summary.n_filtered_events << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rating prediction benchmark toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "ratebench 0.1.0");

  // fixture
  auto* fixture = app.add_subcommand("fixture", "generate a synthetic raw dataset");
  std::string fx_kind = "movielens", fx_out, fx_spec;
  double fx_scale = 1.0;
  std::uint64_t fx_seed = 0;
  fixture->add_option("--kind", fx_kind, "movielens | amazon")
      ->check(CLI::IsMember({"movielens", "amazon"}));
  fixture->add_option("--out", fx_out, "output directory")->required();
  fixture->add_option("--spec-file", fx_spec, "JSON generator-spec overrides");
  fixture->add_option("--scale", fx_scale, "scale user/item/event counts");
  auto* fx_seed_opt = fixture->add_option("--seed", fx_seed, "generator seed");

  // prepare
  auto* prepare = app.add_subcommand("prepare", "raw files -> canonical dataset");
  ratebench::harness::PrepareOptions prep;
  std::string prep_raw, prep_out;
  prepare->add_option("--kind", prep.kind, "movielens | amazon")
      ->required()
      ->check(CLI::IsMember({"movielens", "amazon"}));
  prepare->add_option("--raw", prep_raw, "raw dataset directory")->required();
  prepare->add_option("--out", prep_out, "output directory")->required();
  prepare->add_option("--split", prep.split_fraction, "train fraction (default 0.9)");
  prepare->add_option("--min-count", prep.vocab_min_count,
                      "title-token vocabulary threshold");

  // run
  auto* run = app.add_subcommand("run", "train/evaluate one configuration");
  ConfigArgs run_args;
  std::string run_out;
  bool run_save = false;
  add_config_options(run, run_args);
  run->add_option("--out", run_out, "report directory")->required();
  run->add_flag("--save-model", run_save, "write model.ckpt next to the report");

  // search
  auto* search = app.add_subcommand("search", "seeded uniform random search");
  ConfigArgs search_args;
  std::string search_out;
  ratebench::harness::SearchOptions search_opts;
  add_config_options(search, search_args);
  search->add_option("--out", search_out, "report directory")->required();
  search->add_option("--trials", search_opts.n_trials, "number of trials");
  search->add_option("--seed", search_opts.seed, "search seed");
  search->add_option("--budget-steps", search_opts.budget_steps,
                     "training steps per trial");
  search->add_option("--workers", search_opts.workers, "parallel trial slots");

  // curve
  auto* curve = app.add_subcommand("curve", "data-efficiency curve");
  ConfigArgs curve_args;
  std::string curve_out;
  std::vector<double> curve_fractions{0.01, 0.05, 0.2, 1.0};
  std::size_t curve_workers = 1;
  add_config_options(curve, curve_args);
  curve->add_option("--out", curve_out, "report directory")->required();
  curve->add_option("--fractions", curve_fractions, "ascending fractions in (0,1]")
      ->delimiter(',');
  curve->add_option("--workers", curve_workers, "parallel point slots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*fixture) {
      return run_fixture(fx_kind, fx_out, fx_spec, fx_scale, fx_seed,
                         fx_seed_opt->count() > 0);
    }
    if (*prepare) {
      prep.raw_dir = prep_raw;
      prep.out_dir = prep_out;
      ratebench::harness::cmd_prepare(prep, std::cout);
      return 0;
    }
    if (*run) {
      const auto config =
          ratebench::harness::ExperimentConfig::from_json(resolve_config_json(run_args));
      ratebench::harness::RunOptions options;
      options.save_model = run_save;
      const auto result =
          ratebench::harness::cmd_run(config, run_out, std::cout, options);
      return result.ok ? 0 : 1;
    }
    if (*search) {
      const json cfg = resolve_config_json(search_args);
      const auto config = ratebench::harness::ExperimentConfig::from_json(cfg);
      auto space = ratebench::harness::SearchSpace::defaults(config.model_config.kind);
      if (cfg.contains("search")) {
        space = ratebench::harness::SearchSpace::from_json(cfg.at("search"), space);
      }
      ratebench::harness::cmd_search(config, space, search_opts, search_out, std::cout);
      return 0;
    }
    if (*curve) {
      const auto config = ratebench::harness::ExperimentConfig::from_json(
          resolve_config_json(curve_args));
      const auto points = ratebench::harness::cmd_curve(config, curve_fractions,
                                                        curve_workers, curve_out,
                                                        std::cout);
      for (const auto& p : points) {
        if (!p.ok) return 1;
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
