#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cli/commands.hpp"
#include "dasein/version.hpp"

namespace {

using dasein::cli::ExperimentConfig;

struct CommonOpts {
  std::string config_file;
  std::vector<std::string> sets;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool plots = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_file, "key = value config file (a manifest also works)");
  cmd->add_option("--set", o.sets, "override a config key, e.g. --set train.epochs=40");
  cmd->add_option("--out", o.out, "output directory (overrides output.dir)");
  cmd->add_option("--seed", o.seed, "experiment seed");
  cmd->add_flag("--plots", o.plots, "emit SVG plots alongside CSV outputs");
}

ExperimentConfig build_config(const CommonOpts& o, const std::vector<std::string>& extra = {}) {
  std::vector<std::string> overrides = extra;
  if (!o.out.empty()) overrides.push_back("output.dir=" + o.out);
  if (o.seed) overrides.push_back("seed=" + std::to_string(*o.seed));
  if (o.plots) overrides.push_back("plots=1");
  for (const std::string& s : o.sets) overrides.push_back(s);
  std::optional<std::filesystem::path> file;
  if (!o.config_file.empty()) file = o.config_file;
  return ExperimentConfig::load(file, overrides);
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(std::stod(part));
  return out;
}

std::vector<unsigned> parse_seed_list(const std::string& csv) {
  std::vector<unsigned> out;
  std::stringstream ss(csv);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(static_cast<unsigned>(std::stoul(part)));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dasein: two-step transferable deployment for semantic edge inference"};
  app.set_version_flag("--version", dasein::kVersion);
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate the synthetic shifted dataset pair");
  CommonOpts synth_o;
  add_common(synth, synth_o);
  std::string synth_archive;
  synth->add_option("--archive-out", synth_archive, "archive path (default <out>/synth.dsyn)");

  // train-uda
  auto* uda = app.add_subcommand("train-uda", "phase 1: adversarial-free alignment training");
  CommonOpts uda_o;
  add_common(uda, uda_o);
  std::optional<double> uda_lambda;
  std::optional<double> uda_snr;
  uda->add_option("--lambda", uda_lambda, "alignment weight (0 = supervised source baseline)");
  uda->add_option("--snr", uda_snr, "source-environment SNR in dB");

  // finetune-kd
  auto* kd = app.add_subcommand("finetune-kd", "phase 2: distillation fine-tune to the target SNR");
  CommonOpts kd_o;
  add_common(kd, kd_o);
  std::string kd_ckpt;
  std::optional<double> kd_target_snr;
  std::optional<int> kd_epochs;
  kd->add_option("--checkpoint", kd_ckpt, "phase-1 checkpoint (theta_t.ckpt)")->required();
  kd->add_option("--target-snr", kd_target_snr, "deployment SNR in dB");
  kd->add_option("--finetune-epochs", kd_epochs, "fine-tune epoch count");

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on the target domain");
  CommonOpts ev_o;
  add_common(ev, ev_o);
  std::string ev_ckpt, ev_method = "dasein";
  std::optional<double> ev_target_snr;
  ev->add_option("--checkpoint", ev_ckpt, "model checkpoint")->required();
  ev->add_option("--method", ev_method, "reporting tag: test-d | dasein-s1 | dasein");
  ev->add_option("--target-snr", ev_target_snr, "deployment SNR in dB");

  // sweep
  auto* sw = app.add_subcommand("sweep", "accuracy sweep over an SNR grid or CR list");
  CommonOpts sw_o;
  add_common(sw, sw_o);
  dasein::cli::SweepArgs sweep_args;
  std::string sw_list, sw_seeds, sw_name;
  std::vector<std::string> sw_models;
  sw->add_option("--axis", sweep_args.axis, "snr | cr")->required();
  sw->add_option("--from", sweep_args.from, "axis start");
  sw->add_option("--to", sweep_args.to, "axis end");
  sw->add_option("--step", sweep_args.step, "axis step");
  sw->add_option("--list", sw_list, "explicit axis values, comma separated");
  sw->add_option("--seeds", sw_seeds, "seeds, comma separated (default 1,2,3)");
  sw->add_option("--model", sw_models, "tag=checkpoint pair (snr axis), repeatable");
  sw->add_flag("--finetune", sweep_args.finetune, "cr axis: run phase 2 per point");
  sw->add_option("--jobs", sweep_args.jobs, "parallel sweep workers");
  sw->add_option("--name", sw_name, "output file stem");

  // digital-debug
  auto* dbg = app.add_subcommand("digital-debug", "dump the digital chain for a feature vector");
  dasein::cli::DigitalDebugArgs dbg_args;
  std::vector<double> dbg_values;
  std::optional<double> dbg_snr;
  dbg->add_option("--value", dbg_values, "feature entry, repeatable")->required();
  dbg->add_option("--qb", dbg_args.q_b, "quantizer bits");
  dbg->add_option("--r", dbg_args.r, "surrogate recursion depth");
  dbg->add_option("--z-min", dbg_args.z_min, "lower bound");
  dbg->add_option("--z-max", dbg_args.z_max, "upper bound");
  dbg->add_option("--snr", dbg_snr, "add channel noise at this SNR (dB)");
  dbg->add_option("--seed", dbg_args.seed, "noise seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : dasein::cli::kExitConfigError;
  }

  return dasein::cli::run_guarded([&]() -> int {
    if (synth->parsed()) {
      std::vector<std::string> extra;
      if (!synth_archive.empty()) extra.push_back("data.archive=" + synth_archive);
      return dasein::cli::cmd_synth(build_config(synth_o, extra));
    }
    if (uda->parsed()) {
      std::vector<std::string> extra;
      if (uda_lambda) extra.push_back("train.lambda=" + std::to_string(*uda_lambda));
      if (uda_snr) extra.push_back("channel.snr_db=" + std::to_string(*uda_snr));
      return dasein::cli::cmd_train_uda(build_config(uda_o, extra));
    }
    if (kd->parsed()) {
      std::vector<std::string> extra;
      if (kd_target_snr)
        extra.push_back("channel.target_snr_db=" + std::to_string(*kd_target_snr));
      if (kd_epochs) extra.push_back("train.finetune_epochs=" + std::to_string(*kd_epochs));
      return dasein::cli::cmd_finetune_kd(build_config(kd_o, extra), kd_ckpt);
    }
    if (ev->parsed()) {
      std::vector<std::string> extra;
      if (ev_target_snr)
        extra.push_back("channel.target_snr_db=" + std::to_string(*ev_target_snr));
      return dasein::cli::cmd_eval(build_config(ev_o, extra), ev_ckpt, ev_method);
    }
    if (sw->parsed()) {
      if (!sw_list.empty()) sweep_args.list = parse_double_list(sw_list);
      if (!sw_seeds.empty()) sweep_args.seeds = parse_seed_list(sw_seeds);
      sweep_args.name = sw_name;
      for (const std::string& m : sw_models) {
        const auto eq = m.find('=');
        if (eq == std::string::npos)
          throw dasein::ConfigError("sweep: --model needs tag=checkpoint");
        sweep_args.models.emplace_back(m.substr(0, eq), m.substr(eq + 1));
      }
      return dasein::cli::cmd_sweep(build_config(sw_o), sweep_args);
    }
    if (dbg->parsed()) {
      dbg_args.values = dbg_values;
      if (dbg_snr) {
        dbg_args.with_noise = true;
        dbg_args.snr_db = *dbg_snr;
      }
      return dasein::cli::cmd_digital_debug(dbg_args, std::cout);
    }
    return dasein::cli::kExitConfigError;
  });
}
