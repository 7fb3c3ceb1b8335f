#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "dasein/config.hpp"

namespace dasein::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitDataError = 3;
inline constexpr int kExitNumericError = 4;

/// Runs a command body and maps the error taxonomy onto exit codes.
int run_guarded(const std::function<int()>& body);

/// Generates the synthetic dataset pair and writes it as a reloadable archive.
int cmd_synth(const ExperimentConfig& cfg);

/// Phase-1 training; writes checkpoints/theta_t.ckpt and metrics/step1.csv.
int cmd_train_uda(const ExperimentConfig& cfg);

/// Phase-2 fine-tuning from a phase-1 checkpoint toward the target SNR;
/// writes checkpoints/theta_st.ckpt and metrics/step2.csv.
int cmd_finetune_kd(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint);

/// Evaluates a checkpoint on the target dataset under the target channel.
/// method is a reporting tag: test-d | dasein-s1 | dasein.
int cmd_eval(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint,
             const std::string& method);

struct SweepArgs {
  std::string axis;  // snr | cr
  double from = 0.0, to = 0.0, step = 0.0;
  std::vector<double> list;       // explicit axis values (overrides from/to/step)
  std::vector<unsigned> seeds{1, 2, 3};
  int jobs = 1;
  // snr axis: trained checkpoints per method tag
  std::vector<std::pair<std::string, std::string>> models;
  // cr axis: retrain per point; include phase 2 when set
  bool finetune = false;
  std::string name;  // output file stem, defaults to the axis name
};
int cmd_sweep(const ExperimentConfig& cfg, const SweepArgs& args);

struct DigitalDebugArgs {
  std::vector<double> values;
  int q_b = 2;
  int r = 3;
  double z_min = -1.0;
  double z_max = 1.0;
  bool with_noise = false;
  double snr_db = 5.0;
  std::uint64_t seed = 1;
};
/// Dumps the full digital chain for one feature vector as a table:
/// value -> index -> bits -> symbols -> received -> reconstruction.
int cmd_digital_debug(const DigitalDebugArgs& args, std::ostream& os);

}  // namespace dasein::cli
