#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dasein/channel_analog.hpp"
#include "dasein/datapipe.hpp"
#include "dasein/model.hpp"
#include "dasein/trainer.hpp"

namespace dasein::cli {

/// Flat experiment description parsed from a key = value file with CLI
/// overrides (precedence: flags > file > defaults). Builders below assemble
/// the typed configs the core modules consume.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string output_dir = "runs/exp";
  bool plots = false;

  // data
  std::string data_kind = "synthetic";  // synthetic | directory | archive
  int classes = 5;
  int n_per_class = 40;
  int k_devices = 4;
  int view_size = 16;
  int canvas = 24;
  int channels = 3;
  std::string source_dir;
  std::string target_dir;
  std::string archive;
  bool shift_identity = false;
  double shift_rotation_deg = 45.0;
  double shift_translate_x = 0.0;
  double shift_translate_y = 0.0;
  double shift_cluster_radius = 6.0;
  double shift_scatter = 1.1;
  double shift_blob_sigma = 2.2;
  double shift_pixel_noise = 0.02;
  double shift_source_background = 0.0;
  double shift_target_background = 0.0;
  std::array<double, 3> shift_source_gain{1.0, 0.65, 0.35};
  std::array<double, 3> shift_target_gain{0.45, 0.75, 0.95};

  // model
  std::string profile = "conv";  // conv | dense
  int a_in = 64;
  double cr = 0.1;
  int conv_filters = 6;
  int hidden = 64;
  int decoder_hidden = 256;

  // channel
  std::string mode = "analog";  // analog | digital
  double snr_db = 5.0;          // source-environment SNR (phase 1, teacher)
  double target_snr_db = 5.0;   // deployment SNR (phase 2 student, eval)
  int q_b = 2;
  int surrogate_r = 3;
  double z_min = -1.0;
  double z_max = 1.0;

  // train
  int epochs = 100;
  int finetune_epochs = 20;
  int batch = 16;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double lr_sre = 1e-3;
  double lr_cce = 1e-2;
  double lr_dec = 1e-2;
  double lambda = 0.1;
  double lambda1 = 0.1;
  double lambda2 = 0.5;
  double epsilon = 0.9;
  int eval_draws = 5;
  int eval_every = 1;
  bool soft_target_weights = false;
  std::string kd_orientation = "teacher_target";  // teacher_target | as_printed
  std::string bandwidth = "median";               // median | fixed
  double bandwidth_sigma = 1.0;

  static ExperimentConfig load(const std::optional<std::filesystem::path>& file,
                               const std::vector<std::string>& overrides);
  /// Applies one "key=value" assignment; unknown keys raise ConfigError.
  void apply(const std::string& key, const std::string& value);
  void validate() const;

  /// Every key with its current value, canonical order, round-trippable.
  std::vector<std::pair<std::string, std::string>> resolved() const;

  net::ModelConfig model_config() const;
  data::ShiftSpec shift_spec() const;
  train::TrainPlan train_plan() const;
  channel::QuantizerSpec quantizer_spec() const;
  channel::ChannelSpec source_channel() const;
  channel::ChannelSpec target_channel() const;
};

/// Loads (or synthesizes) the source/target dataset pair described by the
/// config.
std::pair<data::DomainDataset, data::DomainDataset> load_datasets(const ExperimentConfig& cfg);

/// Output layout: <output_dir>/{checkpoints,metrics,plots}/ plus a manifest
/// holding the fully resolved config; re-running from the manifest reproduces
/// the run.
struct RunPaths {
  std::filesystem::path root, checkpoints, metrics, plots, manifest;
};
RunPaths prepare_output_dir(const ExperimentConfig& cfg);
void write_manifest(const RunPaths& paths, const ExperimentConfig& cfg,
                    const std::string& command);

}  // namespace dasein::cli
