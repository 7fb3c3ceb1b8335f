#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dasein/common.hpp"

namespace dasein::eval {

/// Fraction of exact label matches.
double accuracy(std::span<const int> preds, std::span<const int> truth);

/// Entry (i, j) counts truth = i predicted = j.
Eigen::MatrixXi confusion_matrix(std::span<const int> preds, std::span<const int> truth,
                                 int class_count);

struct SweepCell {
  double axis = 0.0;
  std::string method;
  unsigned seed = 0;
  double accuracy = 0.0;
};

/// Raw per-seed sweep values plus aggregate accessors; the axis is strictly
/// increasing.
struct SweepResult {
  std::vector<double> axis;
  std::vector<std::string> methods;
  std::vector<SweepCell> cells;

  double mean(const std::string& method, double axis_value) const;
  double stddev(const std::string& method, double axis_value) const;
};

using PointEval = std::function<double(double axis_value, unsigned seed)>;
struct MethodEval {
  std::string name;
  PointEval fn;
};

/// Evaluates each method over an SNR grid for every seed. jobs > 1 spreads
/// points over threads; aggregation is order-independent.
SweepResult snr_sweep(const std::vector<MethodEval>& methods, const std::vector<double>& snr_db,
                      const std::vector<unsigned>& seeds, int jobs = 1);

/// Same harness over compression rates; the callback typically retrains a
/// desk-scale pipeline per point.
SweepResult cr_sweep(const std::vector<MethodEval>& methods, const std::vector<double>& cr_values,
                     const std::vector<unsigned>& seeds, int jobs = 1);

/// True when the method's mean accuracy never drops by more than `tolerance`
/// as the axis increases (accuracy nonincreasing as SNR decreases).
bool trend_monotone(const SweepResult& r, const std::string& method, double tolerance);

void write_sweep_csv(const std::filesystem::path& path, const SweepResult& r);
void write_confusion_csv(const std::filesystem::path& path, const Eigen::MatrixXi& cm);
void write_sweep_svg(const std::filesystem::path& path, const SweepResult& r,
                     const std::string& x_label);
void write_confusion_svg(const std::filesystem::path& path, const Eigen::MatrixXi& cm);

}  // namespace dasein::eval
