#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dasein/channel_analog.hpp"
#include "dasein/datapipe.hpp"
#include "dasein/losses.hpp"
#include "dasein/model.hpp"

namespace dasein::train {

/// Hyperparameters of both training phases. Defaults: batch 16, 100 epochs,
/// group learning rates 1e-3 / 1e-2 / 1e-2, momentum-SGD (0.9) with weight
/// decay 5e-4, lambda 0.1, 20 fine-tune epochs with lambda1 0.1, lambda2 0.5.
struct TrainPlan {
  int epochs = 100;
  int finetune_epochs = 20;
  int batch = 16;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double lr_sre = 1e-3;
  double lr_cce = 1e-2;
  double lr_dec = 1e-2;
  loss::LossWeights weights;
  loss::KernelSpec kernel;
  loss::KdOrientation kd_orientation = loss::KdOrientation::teacher_target;
  bool soft_target_weights = false;
  int eval_draws = 5;  // channel-noise draws averaged per accuracy evaluation
  int eval_every = 1;
  std::uint64_t seed = 1;

  void validate() const;
};

/// eta0 / (1 + 10 e/E)^0.75.
double lr_anneal(double eta0, int epoch, int total_epochs);

struct GroupLearningRates {
  double sre = 0.0, cce = 0.0, dec = 0.0;
};

/// Classical momentum SGD with decoupled per-group learning rates; weight
/// decay enters as an additive L2 gradient term. Velocity persists across
/// steps.
class SgdOptimizer {
 public:
  SgdOptimizer(const net::Model& m, double momentum, double weight_decay);
  void step(net::Model& m, net::ModelGrads& grads, const GroupLearningRates& lr);

 private:
  net::ModelGrads velocity_;
  double momentum_;
  double weight_decay_;
};

// --- batch pipeline (forward through model + channel, exact backward) ---

/// Pre-drawn standard-normal channel noise, [sample][device], so a batch loss
/// is a deterministic function of the parameters.
using NoiseBank = std::vector<std::vector<Vec>>;
NoiseBank draw_noise_bank(int samples, int devices, int dim, RngStream& rng);

struct Step1BatchInput {
  std::vector<const data::MultiViewSample*> source;
  std::vector<int> source_labels;
  std::vector<const data::MultiViewSample*> target;
};
Step1BatchInput gather(const data::PairedBatch& batch);

/// Phase-1 batch objective (forward only); deterministic given the banks.
loss::Step1Loss step1_loss(const net::Model& m, const Step1BatchInput& batch,
                           const channel::ChannelSpec& ch, const NoiseBank& source_noise,
                           const NoiseBank& target_noise, const TrainPlan& plan, int epoch);
/// Same objective plus exact parameter gradients.
loss::Step1Loss step1_loss_and_grads(const net::Model& m, const Step1BatchInput& batch,
                                     const channel::ChannelSpec& ch,
                                     const NoiseBank& source_noise, const NoiseBank& target_noise,
                                     const TrainPlan& plan, int epoch, net::ModelGrads& grads);

/// Phase-2 batch objective; the teacher runs on target data under its own
/// channel, gradients flow through the student only.
loss::Step2Loss step2_loss(const net::Model& student, const net::Model& teacher,
                           const Step1BatchInput& batch, const channel::ChannelSpec& student_ch,
                           const channel::ChannelSpec& teacher_ch, const NoiseBank& source_noise,
                           const NoiseBank& target_noise, const NoiseBank& teacher_noise,
                           const TrainPlan& plan);
loss::Step2Loss step2_loss_and_grads(const net::Model& student, const net::Model& teacher,
                                     const Step1BatchInput& batch,
                                     const channel::ChannelSpec& student_ch,
                                     const channel::ChannelSpec& teacher_ch,
                                     const NoiseBank& source_noise, const NoiseBank& target_noise,
                                     const NoiseBank& teacher_noise, const TrainPlan& plan,
                                     net::ModelGrads& grads);

// --- training phases ---

struct EpochMetrics {
  int epoch = 0;
  double loss_ce = 0.0;
  double loss_uda = 0.0;
  double loss_kd = 0.0;
  double delta = 0.0;
  double lr_sre = 0.0, lr_cce = 0.0, lr_dec = 0.0;
  double source_acc = 0.0;
  double target_acc = 0.0;
};

struct TrainResult {
  net::Model model;
  std::vector<EpochMetrics> curve;
};

/// Phase-2 model pair: both start as deep copies of the phase-1 result; only
/// the student is updated afterwards.
struct TeacherStudentPair {
  net::Model teacher;
  net::Model student;

  static TeacherStudentPair duplicate(const net::Model& theta) { return {theta, theta}; }
};

/// Phase 1: paired epochs over both domains under the source-environment
/// channel, objective L1 with warm-up, annealed group learning rates.
TrainResult train_step1(const TrainPlan& plan, const data::DomainDataset& source,
                        const data::DomainDataset& target, net::Model model,
                        const channel::ChannelSpec& ch);

/// Phase 2: duplicates theta into a frozen teacher (forwarding under
/// teacher_ch, its reliable regime) and a student trained under student_ch
/// with objective L2. finetune_epochs == 0 returns the input parameters.
TrainResult train_step2(const TrainPlan& plan, const data::DomainDataset& source,
                        const data::DomainDataset& target, const net::Model& theta,
                        const channel::ChannelSpec& teacher_ch,
                        const channel::ChannelSpec& student_ch);

struct EvalResult {
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> per_draw;
};

/// Accuracy on a labeled dataset with channel noise resampled per pass,
/// averaged over `draws` passes (inference path: full transceiver in digital
/// mode). Deterministic in eval_seed.
EvalResult evaluate(const net::Model& m, const data::DomainDataset& ds,
                    const channel::ChannelSpec& ch, int draws, std::uint64_t eval_seed);
/// Per-sample predictions for one noise draw.
std::vector<int> predict_labels(const net::Model& m, const data::DomainDataset& ds,
                                const channel::ChannelSpec& ch, std::uint64_t eval_seed,
                                int draw = 0);

/// Direct deployment baseline: evaluation only, no parameter updates.
EvalResult test_direct(const net::Model& theta_source, const data::DomainDataset& target,
                       const channel::ChannelSpec& ch, int draws, std::uint64_t eval_seed);

void write_metrics_csv(const std::filesystem::path& path, std::span<const EpochMetrics> curve);

}  // namespace dasein::train
