#include "dasein/losses.hpp"

#include <algorithm>
#include <cmath>

namespace dasein::loss {

namespace {

Mat source_weight_rows(std::span<const int> labels, int class_count) {
  Mat rows = Mat::Zero(static_cast<Eigen::Index>(labels.size()), class_count);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= class_count)
      throw DataError("lmmd: source label out of range");
    rows(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return rows;
}

Mat target_weight_rows(std::span<const PredictionDist> preds, int class_count, bool soft) {
  Mat rows = Mat::Zero(static_cast<Eigen::Index>(preds.size()), class_count);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const PredictionDist& p = preds[i];
    if (p.probs.size() != class_count) throw DimensionError("lmmd: prediction width mismatch");
    if (soft)
      rows.row(static_cast<Eigen::Index>(i)) = p.probs.transpose();
    else
      rows(static_cast<Eigen::Index>(i), p.label) = 1.0;
  }
  return rows;
}

struct LmmdParts {
  Mat ws, wt;     // class-normalized weights
  Mat css, ctt, cst;  // pairwise weight coefficients summed over classes
  double sigma_b = 1.0;
};

LmmdParts lmmd_parts(std::span<const Vec> z_source, std::span<const int> y_source,
                     std::span<const Vec> z_target, std::span<const PredictionDist> p_target,
                     int class_count, const KernelSpec& spec, bool soft) {
  if (z_source.empty() || z_target.empty()) throw DataError("lmmd: empty sample set");
  if (z_source.size() != y_source.size()) throw DimensionError("lmmd: source label count");
  if (z_target.size() != p_target.size()) throw DimensionError("lmmd: target prediction count");
  if (class_count < 1) throw DataError("lmmd: class_count >= 1 required");

  LmmdParts parts;
  parts.ws = class_weights(source_weight_rows(y_source, class_count));
  parts.wt = class_weights(target_weight_rows(p_target, class_count, soft));
  parts.css = parts.ws * parts.ws.transpose();
  parts.ctt = parts.wt * parts.wt.transpose();
  parts.cst = parts.ws * parts.wt.transpose();
  parts.sigma_b = resolve_bandwidth(spec, z_source, z_target);
  return parts;
}

}  // namespace

double gaussian_kernel(const Vec& x1, const Vec& x2, double sigma_b) {
  if (x1.size() != x2.size()) throw DimensionError("gaussian_kernel: length mismatch");
  if (!(sigma_b > 0.0)) throw ConfigError("gaussian_kernel: bandwidth must be positive");
  return std::exp(-(x1 - x2).squaredNorm() / (2.0 * sigma_b * sigma_b));
}

double median_bandwidth(std::span<const Vec> samples) {
  if (samples.size() < 2) throw DataError("median_bandwidth: need at least two samples");
  std::vector<double> d2;
  d2.reserve(samples.size() * (samples.size() - 1) / 2);
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = i + 1; j < samples.size(); ++j)
      d2.push_back((samples[i] - samples[j]).squaredNorm());
  std::sort(d2.begin(), d2.end());
  const std::size_t n = d2.size();
  const double med = n % 2 == 1 ? d2[n / 2] : 0.5 * (d2[n / 2 - 1] + d2[n / 2]);
  if (!(med > 0.0)) return 1.0;
  return std::sqrt(med / 2.0);
}

double resolve_bandwidth(const KernelSpec& spec, std::span<const Vec> a, std::span<const Vec> b) {
  if (spec.mode == BandwidthMode::fixed) {
    if (!(spec.sigma_b > 0.0)) throw ConfigError("kernel: fixed bandwidth must be positive");
    return spec.sigma_b;
  }
  std::vector<Vec> all;
  all.reserve(a.size() + b.size());
  for (const Vec& v : a) all.push_back(v);
  for (const Vec& v : b) all.push_back(v);
  return median_bandwidth(all);
}

double mmd_v(std::span<const Vec> xs, std::span<const Vec> xt, const KernelSpec& spec) {
  if (xs.empty() || xt.empty()) throw DataError("mmd: empty sample set");
  const double sb = resolve_bandwidth(spec, xs, xt);
  const double ns = static_cast<double>(xs.size());
  const double nt = static_cast<double>(xt.size());

  double ss = 0.0, tt = 0.0, st = 0.0;
  for (const Vec& a : xs)
    for (const Vec& b : xs) ss += gaussian_kernel(a, b, sb);
  for (const Vec& a : xt)
    for (const Vec& b : xt) tt += gaussian_kernel(a, b, sb);
  for (const Vec& a : xs)
    for (const Vec& b : xt) st += gaussian_kernel(a, b, sb);
  return ss / (ns * ns) + tt / (nt * nt) - 2.0 * st / (ns * nt);
}

Mat class_weights(const Mat& rows) {
  Mat w = Mat::Zero(rows.rows(), rows.cols());
  for (Eigen::Index c = 0; c < rows.cols(); ++c) {
    const double colsum = rows.col(c).sum();
    if (colsum > 0.0) w.col(c) = rows.col(c) / colsum;
  }
  return w;
}

double lmmd(std::span<const Vec> z_source, std::span<const int> y_source,
            std::span<const Vec> z_target, std::span<const PredictionDist> p_target,
            int class_count, const KernelSpec& spec, bool soft_target_weights) {
  LmmdParts parts =
      lmmd_parts(z_source, y_source, z_target, p_target, class_count, spec, soft_target_weights);
  const double sb = parts.sigma_b;

  double acc = 0.0;
  for (std::size_t i = 0; i < z_source.size(); ++i)
    for (std::size_t j = 0; j < z_source.size(); ++j)
      acc += parts.css(i, j) * gaussian_kernel(z_source[i], z_source[j], sb);
  for (std::size_t i = 0; i < z_target.size(); ++i)
    for (std::size_t j = 0; j < z_target.size(); ++j)
      acc += parts.ctt(i, j) * gaussian_kernel(z_target[i], z_target[j], sb);
  for (std::size_t i = 0; i < z_source.size(); ++i)
    for (std::size_t j = 0; j < z_target.size(); ++j)
      acc -= 2.0 * parts.cst(i, j) * gaussian_kernel(z_source[i], z_target[j], sb);
  return acc / class_count;
}

LmmdGrad lmmd_with_grad(std::span<const Vec> z_source, std::span<const int> y_source,
                        std::span<const Vec> z_target, std::span<const PredictionDist> p_target,
                        int class_count, const KernelSpec& spec, bool soft_target_weights) {
  LmmdParts parts =
      lmmd_parts(z_source, y_source, z_target, p_target, class_count, spec, soft_target_weights);
  const double sb = parts.sigma_b;
  const double inv_c = 1.0 / class_count;
  const double inv_sb2 = 1.0 / (sb * sb);

  LmmdGrad out;
  out.d_source.assign(z_source.size(), Vec::Zero(z_source.front().size()));
  out.d_target.assign(z_target.size(), Vec::Zero(z_target.front().size()));

  double acc = 0.0;
  // source-source block: value css(i,j) K(i,j); d/dz_i gets a factor 2 since
  // each sample appears on both sides of the symmetric sum.
  for (std::size_t i = 0; i < z_source.size(); ++i)
    for (std::size_t j = 0; j < z_source.size(); ++j) {
      const double k = gaussian_kernel(z_source[i], z_source[j], sb);
      acc += parts.css(i, j) * k;
      if (i != j)
        out.d_source[i] -=
            2.0 * parts.css(i, j) * k * inv_sb2 * (z_source[i] - z_source[j]) * inv_c;
    }
  for (std::size_t i = 0; i < z_target.size(); ++i)
    for (std::size_t j = 0; j < z_target.size(); ++j) {
      const double k = gaussian_kernel(z_target[i], z_target[j], sb);
      acc += parts.ctt(i, j) * k;
      if (i != j)
        out.d_target[i] -=
            2.0 * parts.ctt(i, j) * k * inv_sb2 * (z_target[i] - z_target[j]) * inv_c;
    }
  for (std::size_t i = 0; i < z_source.size(); ++i)
    for (std::size_t j = 0; j < z_target.size(); ++j) {
      const double k = gaussian_kernel(z_source[i], z_target[j], sb);
      acc -= 2.0 * parts.cst(i, j) * k;
      const Vec diff = (z_source[i] - z_target[j]) * (k * inv_sb2 * 2.0 * parts.cst(i, j) * inv_c);
      out.d_source[i] += diff;
      out.d_target[j] -= diff;
    }
  out.value = acc * inv_c;
  return out;
}

double cross_entropy(const Vec& probs, const Vec& one_hot) {
  if (probs.size() != one_hot.size()) throw DimensionError("cross_entropy: length mismatch");
  double acc = 0.0;
  for (Eigen::Index c = 0; c < probs.size(); ++c)
    if (one_hot[c] != 0.0) acc -= one_hot[c] * std::log(std::max(probs[c], kProbFloor));
  return acc;
}

Vec cross_entropy_grad(const Vec& probs, const Vec& one_hot) {
  Vec g = Vec::Zero(probs.size());
  for (Eigen::Index c = 0; c < probs.size(); ++c)
    if (one_hot[c] != 0.0 && probs[c] > kProbFloor) g[c] = -one_hot[c] / probs[c];
  return g;
}

double warmup_delta(int epoch, int total_epochs) {
  if (total_epochs < 1) throw ConfigError("warmup_delta: total epochs >= 1");
  const double x = static_cast<double>(epoch) / total_epochs;
  return 2.0 / (1.0 + std::exp(-10.0 * x)) - 1.0;
}

std::vector<std::uint8_t> kd_mask(std::span<const PredictionDist> teacher, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("kd_mask: epsilon must lie in (0,1)");
  std::vector<std::uint8_t> mask(teacher.size());
  for (std::size_t i = 0; i < teacher.size(); ++i) mask[i] = teacher[i].confidence > epsilon;
  return mask;
}

double kd_ce_masked(std::span<const PredictionDist> student,
                    std::span<const PredictionDist> teacher,
                    std::span<const std::uint8_t> mask, KdOrientation orientation) {
  if (student.size() != teacher.size() || student.size() != mask.size())
    throw DimensionError("kd_ce_masked: length mismatch");
  double acc = 0.0;
  int kept = 0;
  for (std::size_t i = 0; i < student.size(); ++i) {
    if (!mask[i]) continue;
    ++kept;
    const Vec& ps = student[i].probs;
    const Vec& pt = teacher[i].probs;
    if (ps.size() != pt.size()) throw DimensionError("kd_ce_masked: class count mismatch");
    for (Eigen::Index c = 0; c < ps.size(); ++c) {
      if (orientation == KdOrientation::teacher_target)
        acc -= pt[c] * std::log(std::max(ps[c], kProbFloor));
      else
        acc -= ps[c] * std::log(std::max(pt[c], kProbFloor));
    }
  }
  return kept > 0 ? acc / kept : 0.0;
}

Vec kd_ce_grad_student(const Vec& p_student, const Vec& p_teacher, KdOrientation orientation) {
  Vec g = Vec::Zero(p_student.size());
  for (Eigen::Index c = 0; c < p_student.size(); ++c) {
    if (orientation == KdOrientation::teacher_target) {
      if (p_student[c] > kProbFloor) g[c] = -p_teacher[c] / p_student[c];
    } else {
      g[c] = -std::log(std::max(p_teacher[c], kProbFloor));
    }
  }
  return g;
}

void LossWeights::validate() const {
  if (lambda < 0.0 || lambda1 < 0.0 || lambda2 < 0.0)
    throw ConfigError("loss weights must be nonnegative");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0,1)");
}

Vec one_hot(int label, int class_count) {
  if (label < 0 || label >= class_count) throw DataError("one_hot: label out of range");
  Vec v = Vec::Zero(class_count);
  v[label] = 1.0;
  return v;
}

Step1Loss loss_step1(std::span<const PredictionDist> source_preds,
                     std::span<const int> source_labels, std::span<const Vec> source_feats,
                     std::span<const Vec> target_feats,
                     std::span<const PredictionDist> target_preds, int class_count,
                     const LossWeights& w, const KernelSpec& kernel, int epoch, int total_epochs,
                     bool soft_target_weights) {
  if (source_preds.size() != source_labels.size() || source_preds.empty())
    throw DimensionError("loss_step1: source batch mismatch");
  w.validate();

  Step1Loss out;
  for (std::size_t i = 0; i < source_preds.size(); ++i)
    out.ce += cross_entropy(source_preds[i].probs, one_hot(source_labels[i], class_count));
  out.ce /= static_cast<double>(source_preds.size());
  out.delta = warmup_delta(epoch, total_epochs);
  out.uda = lmmd(source_feats, source_labels, target_feats, target_preds, class_count, kernel,
                 soft_target_weights);
  out.total = out.ce + out.delta * w.lambda * out.uda;
  return out;
}

Step2Loss loss_step2(std::span<const PredictionDist> student_source_preds,
                     std::span<const int> source_labels,
                     std::span<const Vec> student_source_feats,
                     std::span<const Vec> student_target_feats,
                     std::span<const PredictionDist> student_target_preds,
                     std::span<const PredictionDist> teacher_target_preds, int class_count,
                     const LossWeights& w, const KernelSpec& kernel, KdOrientation orientation,
                     bool soft_target_weights) {
  if (student_source_preds.size() != source_labels.size() || student_source_preds.empty())
    throw DimensionError("loss_step2: source batch mismatch");
  w.validate();

  Step2Loss out;
  for (std::size_t i = 0; i < student_source_preds.size(); ++i)
    out.ce +=
        cross_entropy(student_source_preds[i].probs, one_hot(source_labels[i], class_count));
  out.ce /= static_cast<double>(student_source_preds.size());
  out.uda = lmmd(student_source_feats, source_labels, student_target_feats, student_target_preds,
                 class_count, kernel, soft_target_weights);
  auto mask = kd_mask(teacher_target_preds, w.epsilon);
  out.kd = kd_ce_masked(student_target_preds, teacher_target_preds, mask, orientation);
  for (auto m : mask) out.kept += m;
  out.total = out.ce + w.lambda1 * out.uda + w.lambda2 * out.kd;
  return out;
}

}  // namespace dasein::loss
