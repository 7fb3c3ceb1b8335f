#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dasein/common.hpp"
#include "dasein/model.hpp"

namespace dasein::loss {

using net::PredictionDist;

/// Probabilities are clamped at this floor inside every log.
inline constexpr double kProbFloor = 1e-12;

enum class BandwidthMode { fixed, median_heuristic };

struct KernelSpec {
  double sigma_b = 1.0;
  BandwidthMode mode = BandwidthMode::median_heuristic;
};

/// exp(-||x1-x2||^2 / (2 sigma_b^2)).
double gaussian_kernel(const Vec& x1, const Vec& x2, double sigma_b);

/// sigma_b^2 = median of pairwise squared distances / 2, falling back to 1
/// when the median vanishes. Needs at least two samples.
double median_bandwidth(std::span<const Vec> samples);

/// Bandwidth for one batch: fixed value, or the median heuristic over the
/// union of both sample sets. Treated as a constant in backpropagation.
double resolve_bandwidth(const KernelSpec& spec, std::span<const Vec> a, std::span<const Vec> b);

/// V-statistic MMD estimate (diagonal kernel terms included): always >= 0,
/// zero when both empirical distributions coincide.
double mmd_v(std::span<const Vec> xs, std::span<const Vec> xt, const KernelSpec& spec);

/// Row-normalized per-class weights: w(i,c) = rows(i,c) / colsum_c, with
/// all-zero columns mapped to zero weights.
Mat class_weights(const Mat& rows);

/// Class-weighted MMD over per-class subdomains, averaged over classes.
/// Source weights come from ground-truth labels; target weights from the
/// predicted distributions (hard argmax one-hot by default, soft rows when
/// soft_target_weights is set). Weights are constants for gradients.
double lmmd(std::span<const Vec> z_source, std::span<const int> y_source,
            std::span<const Vec> z_target, std::span<const PredictionDist> p_target,
            int class_count, const KernelSpec& spec, bool soft_target_weights = false);

struct LmmdGrad {
  double value = 0.0;
  std::vector<Vec> d_source;  // d value / d z_source[i]
  std::vector<Vec> d_target;
};
LmmdGrad lmmd_with_grad(std::span<const Vec> z_source, std::span<const int> y_source,
                        std::span<const Vec> z_target, std::span<const PredictionDist> p_target,
                        int class_count, const KernelSpec& spec,
                        bool soft_target_weights = false);

/// -sum_c y_c log max(p_c, floor).
double cross_entropy(const Vec& probs, const Vec& one_hot);
/// d cross_entropy / d probs (zero where the clamp is active).
Vec cross_entropy_grad(const Vec& probs, const Vec& one_hot);

/// Warm-up factor 2/(1+exp(-10 e/E)) - 1: zero at e=0, increasing toward 1.
double warmup_delta(int epoch, int total_epochs);

/// m_i = 1 iff the teacher's confidence exceeds epsilon.
std::vector<std::uint8_t> kd_mask(std::span<const PredictionDist> teacher, double epsilon);

/// Distillation cross-entropy orientation. teacher_target is the standard
/// form -sum p_tc log p_st; as_printed puts the log on the teacher.
enum class KdOrientation { teacher_target, as_printed };

/// Mean over masked samples of the per-sample cross-entropy between student
/// and teacher distributions; an empty mask yields 0.
double kd_ce_masked(std::span<const PredictionDist> student,
                    std::span<const PredictionDist> teacher,
                    std::span<const std::uint8_t> mask, KdOrientation orientation);
/// Per-sample gradient of the (unmasked, unaveraged) KD term wrt the student
/// distribution.
Vec kd_ce_grad_student(const Vec& p_student, const Vec& p_teacher, KdOrientation orientation);

/// Objective weights for both training phases. The generic distillation
/// mixing pair maps onto the composite objective as (soft, hard) =
/// (lambda2, 1).
struct LossWeights {
  double lambda = 0.1;    // phase-1 alignment weight
  double lambda1 = 0.1;   // phase-2 alignment weight
  double lambda2 = 0.5;   // phase-2 distillation weight
  double epsilon = 0.9;   // confidence threshold for the distillation mask

  double kd_soft_weight() const { return lambda2; }
  double kd_hard_weight() const { return 1.0; }
  void validate() const;
};

struct Step1Loss {
  double ce = 0.0;
  double uda = 0.0;
  double delta = 0.0;
  double total = 0.0;
};

struct Step2Loss {
  double ce = 0.0;
  double uda = 0.0;
  double kd = 0.0;
  double total = 0.0;
  int kept = 0;  // samples surviving the confidence mask
};

/// L1 = mean source CE + delta(e,E) * lambda * LMMD on post-channel features.
Step1Loss loss_step1(std::span<const PredictionDist> source_preds,
                     std::span<const int> source_labels, std::span<const Vec> source_feats,
                     std::span<const Vec> target_feats,
                     std::span<const PredictionDist> target_preds, int class_count,
                     const LossWeights& w, const KernelSpec& kernel, int epoch, int total_epochs,
                     bool soft_target_weights = false);

/// L2 = mean source CE on the student + lambda1 * LMMD + lambda2 * masked KD.
Step2Loss loss_step2(std::span<const PredictionDist> student_source_preds,
                     std::span<const int> source_labels,
                     std::span<const Vec> student_source_feats,
                     std::span<const Vec> student_target_feats,
                     std::span<const PredictionDist> student_target_preds,
                     std::span<const PredictionDist> teacher_target_preds, int class_count,
                     const LossWeights& w, const KernelSpec& kernel, KdOrientation orientation,
                     bool soft_target_weights = false);

Vec one_hot(int label, int class_count);

}  // namespace dasein::loss
