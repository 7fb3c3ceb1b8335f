#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli/commands.hpp"
#include "dasein/config.hpp"

using namespace dasein;
using namespace dasein::cli;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// small fixture config: fast end-to-end runs
std::vector<std::string> tiny_overrides(const fs::path& out) {
  return {
      "output.dir=" + out.string(), "data.classes=3",      "data.n_per_class=4",
      "data.k_devices=4",           "data.view_size=8",    "data.canvas=12",
      "model.a_in=16",              "model.cr=0.25",       "model.conv_filters=4",
      "model.decoder_hidden=32",    "train.epochs=2",      "train.finetune_epochs=1",
      "train.batch=4",              "train.eval_draws=2",  "seed=5",
  };
}

}  // namespace

TEST_CASE("defaults mirror the published training parameters") {
  const ExperimentConfig cfg = ExperimentConfig::load(std::nullopt, {});
  CHECK(cfg.batch == 16);
  CHECK(cfg.epochs == 100);
  CHECK(cfg.lr_sre == 1e-3);
  CHECK(cfg.lr_cce == 1e-2);
  CHECK(cfg.lr_dec == 1e-2);
  CHECK(cfg.momentum == 0.9);
  CHECK(cfg.weight_decay == 5e-4);
  CHECK(cfg.lambda == 0.1);
  CHECK(cfg.finetune_epochs == 20);
  CHECK(cfg.lambda1 == 0.1);
  CHECK(cfg.lambda2 == 0.5);
  CHECK(cfg.q_b == 2);
  CHECK(cfg.surrogate_r == 3);
  CHECK(cfg.cr == 0.1);
}

TEST_CASE("file parsing, overrides, and precedence") {
  const fs::path dir = fresh_dir("dasein_cfg_test");
  const fs::path file = dir / "exp.cfg";
  std::ofstream(file) << "# comment line\n"
                      << "train.epochs = 42\n"
                      << "model.cr = 0.25   # trailing comment\n"
                      << "channel.mode = analog\n";
  const ExperimentConfig cfg = ExperimentConfig::load(file, {"train.epochs=7"});
  CHECK(cfg.epochs == 7);  // flag wins over file
  CHECK(cfg.cr == 0.25);
  CHECK(cfg.mode == "analog");

  CHECK_THROWS_AS(ExperimentConfig::load(file, {"no_such_key=1"}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::load(file, {"train.epochs=abc"}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::load(file, {"broken"}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::load(dir / "missing.cfg", {}), ConfigError);

  std::ofstream(file) << "train.epochs\n";
  CHECK_THROWS_AS(ExperimentConfig::load(file, {}), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("cross-field validation") {
  CHECK_THROWS_AS(ExperimentConfig::load(std::nullopt, {"model.cr=0"}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::load(std::nullopt, {"model.cr=1.5"}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::load(std::nullopt, {"data.classes=1"}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::load(std::nullopt, {"channel.mode=fm"}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::load(std::nullopt, {"channel.q_b=0", "channel.mode=digital"}),
                  ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::load(std::nullopt, {"data.kind=directory"}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::load(std::nullopt, {"train.epsilon=1"}), ConfigError);
  // quantizer settings only matter in digital mode
  CHECK_NOTHROW(ExperimentConfig::load(std::nullopt, {"channel.q_b=0"}));
  CHECK(ExperimentConfig::load(std::nullopt, {"channel.mode=digital"})
            .target_channel()
            .quantizer.has_value());
  CHECK_FALSE(ExperimentConfig::load(std::nullopt, {}).target_channel().quantizer.has_value());
}

TEST_CASE("resolved config round-trips through a manifest") {
  const fs::path dir = fresh_dir("dasein_manifest_test");
  const ExperimentConfig cfg =
      ExperimentConfig::load(std::nullopt, tiny_overrides(dir / "run"));
  RunPaths paths = prepare_output_dir(cfg);
  write_manifest(paths, cfg, "train-uda");
  CHECK(fs::exists(paths.manifest));
  CHECK(fs::is_directory(paths.checkpoints));
  CHECK(fs::is_directory(paths.metrics));
  CHECK(fs::is_directory(paths.plots));

  const ExperimentConfig back = ExperimentConfig::load(paths.manifest, {});
  CHECK(back.resolved() == cfg.resolved());
  fs::remove_all(dir);
}

TEST_CASE("exit code taxonomy") {
  CHECK(run_guarded([] { return kExitOk; }) == 0);
  CHECK(run_guarded([]() -> int { throw ConfigError("x"); }) == 2);
  CHECK(run_guarded([]() -> int { throw DataError("x"); }) == 3);
  CHECK(run_guarded([]() -> int { throw DimensionError("x"); }) == 3);
  CHECK(run_guarded([]() -> int { throw NumericError("x"); }) == 4);
  CHECK(run_guarded([]() -> int { throw std::runtime_error("x"); }) == 1);
}

TEST_CASE("train / finetune / eval command round trip") {
  const fs::path dir = fresh_dir("dasein_cmd_test");
  const ExperimentConfig cfg =
      ExperimentConfig::load(std::nullopt, tiny_overrides(dir / "run"));

  CHECK(cmd_train_uda(cfg) == 0);
  const fs::path ckpt = dir / "run/checkpoints/theta_t.ckpt";
  CHECK(fs::exists(ckpt));
  CHECK(fs::exists(dir / "run/metrics/step1.csv"));
  CHECK(fs::exists(dir / "run/manifest"));

  CHECK(cmd_finetune_kd(cfg, ckpt) == 0);
  CHECK(fs::exists(dir / "run/checkpoints/theta_st.ckpt"));
  CHECK(fs::exists(dir / "run/metrics/step2.csv"));

  CHECK(cmd_eval(cfg, ckpt, "dasein-s1") == 0);
  CHECK(fs::exists(dir / "run/metrics/eval_dasein-s1.csv"));
  CHECK(fs::exists(dir / "run/metrics/confusion_dasein-s1.csv"));
  CHECK_THROWS_AS(cmd_eval(cfg, ckpt, "bogus"), ConfigError);

  // corrupted checkpoint refuses to load
  std::ofstream(ckpt) << "garbage";
  CHECK(run_guarded([&] { return cmd_finetune_kd(cfg, ckpt); }) == kExitDataError);
  fs::remove_all(dir);
}

TEST_CASE("synth command writes a reloadable archive") {
  const fs::path dir = fresh_dir("dasein_synth_cmd");
  ExperimentConfig cfg = ExperimentConfig::load(std::nullopt, tiny_overrides(dir / "run"));
  CHECK(cmd_synth(cfg) == 0);
  const fs::path archive = dir / "run/synth.dsyn";
  REQUIRE(fs::exists(archive));

  auto [src, tgt] = data::load_synth_archive(archive);
  CHECK(src.class_count == 3);
  CHECK(src.size() == 12);
  CHECK(tgt.size() == 12);
  fs::remove_all(dir);
}

TEST_CASE("sweep command over a small snr grid") {
  const fs::path dir = fresh_dir("dasein_sweep_cmd");
  ExperimentConfig cfg = ExperimentConfig::load(std::nullopt, tiny_overrides(dir / "run"));
  REQUIRE(cmd_train_uda(cfg) == 0);

  SweepArgs args;
  args.axis = "snr";
  args.from = -5;
  args.to = 5;
  args.step = 5;
  args.seeds = {1, 2};
  args.models = {{"dasein-s1", (dir / "run/checkpoints/theta_t.ckpt").string()}};
  CHECK(cmd_sweep(cfg, args) == 0);

  std::ifstream is(dir / "run/metrics/sweep_snr.csv");
  std::string header, line;
  std::getline(is, header);
  CHECK(header == "axis,method,seed,accuracy");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 6);  // 3 axis points x 2 seeds

  SweepArgs bad;
  bad.axis = "snr";
  CHECK(run_guarded([&] { return cmd_sweep(cfg, bad); }) == kExitConfigError);
  fs::remove_all(dir);
}

TEST_CASE("digital debug table shows the worked chain") {
  DigitalDebugArgs args;
  args.values = {0.9, 0.0};
  args.q_b = 2;
  std::ostringstream os;
  CHECK(cmd_digital_debug(args, os) == 0);
  const std::string out = os.str();
  CHECK(out.find("2.85") != std::string::npos);   // g(0.9)
  CHECK(out.find("1.5") != std::string::npos);    // g(0.0)
  CHECK(out.find("11") != std::string::npos);     // bits of index 3
  CHECK(out.find("symbols:") != std::string::npos);
  CHECK(out.find("reconstruction") == std::string::npos);  // column is named zhat

  DigitalDebugArgs noisy = args;
  noisy.with_noise = true;
  noisy.snr_db = 5.0;
  std::ostringstream os2;
  CHECK(cmd_digital_debug(noisy, os2) == 0);
  CHECK(os2.str().find("sigma=") != std::string::npos);

  DigitalDebugArgs empty;
  std::ostringstream os3;
  CHECK(run_guarded([&] { return cmd_digital_debug(empty, os3); }) == kExitConfigError);
}
