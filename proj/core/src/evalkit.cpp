#include "dasein/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

namespace dasein::eval {

double accuracy(std::span<const int> preds, std::span<const int> truth) {
  if (preds.empty()) throw DataError("accuracy: empty input");
  if (preds.size() != truth.size()) throw DimensionError("accuracy: length mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == truth[i]) ++hits;
  return static_cast<double>(hits) / preds.size();
}

Eigen::MatrixXi confusion_matrix(std::span<const int> preds, std::span<const int> truth,
                                 int class_count) {
  if (preds.size() != truth.size()) throw DimensionError("confusion: length mismatch");
  Eigen::MatrixXi cm = Eigen::MatrixXi::Zero(class_count, class_count);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= class_count || preds[i] < 0 || preds[i] >= class_count)
      throw DataError("confusion: label out of range");
    cm(truth[i], preds[i]) += 1;
  }
  return cm;
}

namespace {

std::vector<double> collect(const SweepResult& r, const std::string& method, double axis_value) {
  std::vector<double> vals;
  for (const SweepCell& c : r.cells)
    if (c.method == method && c.axis == axis_value) vals.push_back(c.accuracy);
  if (vals.empty()) throw DataError("sweep: no cells for requested method/axis");
  return vals;
}

SweepResult run_sweep(const std::vector<MethodEval>& methods, const std::vector<double>& axis,
                      const std::vector<unsigned>& seeds, int jobs) {
  if (methods.empty() || axis.empty() || seeds.empty())
    throw ConfigError("sweep: methods, axis, and seeds must be nonempty");
  for (std::size_t i = 1; i < axis.size(); ++i)
    if (!(axis[i] > axis[i - 1])) throw ConfigError("sweep: axis must be strictly increasing");

  SweepResult r;
  r.axis = axis;
  for (const MethodEval& m : methods) r.methods.push_back(m.name);
  r.cells.resize(methods.size() * axis.size() * seeds.size());

  auto run_cell = [&](std::size_t flat) {
    const std::size_t per_method = axis.size() * seeds.size();
    const std::size_t mi = flat / per_method;
    const std::size_t ai = (flat % per_method) / seeds.size();
    const std::size_t si = flat % seeds.size();
    SweepCell& cell = r.cells[flat];
    cell.method = methods[mi].name;
    cell.axis = axis[ai];
    cell.seed = seeds[si];
    cell.accuracy = methods[mi].fn(axis[ai], seeds[si]);
  };

  const std::size_t total = r.cells.size();
  if (jobs <= 1) {
    for (std::size_t i = 0; i < total; ++i) run_cell(i);
  } else {
    std::vector<std::thread> pool;
    const int workers = std::min<std::size_t>(jobs, total);
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < total; i += workers) run_cell(i);
      });
    for (auto& t : pool) t.join();
  }
  return r;
}

}  // namespace

double SweepResult::mean(const std::string& method, double axis_value) const {
  const auto vals = collect(*this, method, axis_value);
  double s = 0.0;
  for (double v : vals) s += v;
  return s / vals.size();
}

double SweepResult::stddev(const std::string& method, double axis_value) const {
  const auto vals = collect(*this, method, axis_value);
  if (vals.size() < 2) return 0.0;
  double m = mean(method, axis_value), ss = 0.0;
  for (double v : vals) ss += (v - m) * (v - m);
  return std::sqrt(ss / (vals.size() - 1));
}

SweepResult snr_sweep(const std::vector<MethodEval>& methods, const std::vector<double>& snr_db,
                      const std::vector<unsigned>& seeds, int jobs) {
  return run_sweep(methods, snr_db, seeds, jobs);
}

SweepResult cr_sweep(const std::vector<MethodEval>& methods, const std::vector<double>& cr_values,
                     const std::vector<unsigned>& seeds, int jobs) {
  return run_sweep(methods, cr_values, seeds, jobs);
}

bool trend_monotone(const SweepResult& r, const std::string& method, double tolerance) {
  for (std::size_t i = 1; i < r.axis.size(); ++i)
    if (r.mean(method, r.axis[i]) + tolerance < r.mean(method, r.axis[i - 1])) return false;
  return true;
}

void write_sweep_csv(const std::filesystem::path& path, const SweepResult& r) {
  std::ofstream os(path);
  if (!os) throw DataError("sweep: cannot open " + path.string());
  os << "axis,method,seed,accuracy\n";
  char buf[192];
  for (const SweepCell& c : r.cells) {
    std::snprintf(buf, sizeof(buf), "%.17g,%s,%u,%.17g\n", c.axis, c.method.c_str(), c.seed,
                  c.accuracy);
    os << buf;
  }
}

void write_confusion_csv(const std::filesystem::path& path, const Eigen::MatrixXi& cm) {
  std::ofstream os(path);
  if (!os) throw DataError("confusion: cannot open " + path.string());
  for (Eigen::Index i = 0; i < cm.rows(); ++i) {
    for (Eigen::Index j = 0; j < cm.cols(); ++j) os << cm(i, j) << (j + 1 < cm.cols() ? "," : "");
    os << "\n";
  }
}

namespace {

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

}  // namespace

void write_sweep_svg(const std::filesystem::path& path, const SweepResult& r,
                     const std::string& x_label) {
  const int w = 640, h = 420, ml = 60, mr = 20, mt = 20, mb = 50;
  const double x0 = r.axis.front(), x1 = r.axis.back();
  auto px = [&](double x) {
    return ml + (x1 > x0 ? (x - x0) / (x1 - x0) : 0.5) * (w - ml - mr);
  };
  auto py = [&](double acc) { return h - mb - acc * (h - mt - mb); };

  std::ofstream os(path);
  if (!os) throw DataError("plot: cannot open " + path.string());
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
  os << "<rect width='100%' height='100%' fill='white'/>\n";
  os << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr << "' y2='" << h - mb
     << "' stroke='black'/>\n";
  os << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << h - mb
     << "' stroke='black'/>\n";
  for (double tick : {0.0, 0.25, 0.5, 0.75, 1.0})
    os << "<text x='" << ml - 36 << "' y='" << py(tick) + 4 << "' font-size='11'>" << tick
       << "</text>\n";
  for (double x : r.axis)
    os << "<text x='" << px(x) - 8 << "' y='" << h - mb + 16 << "' font-size='11'>" << x
       << "</text>\n";
  os << "<text x='" << (w / 2 - 20) << "' y='" << h - 12 << "' font-size='12'>" << x_label
     << "</text>\n";

  for (std::size_t mi = 0; mi < r.methods.size(); ++mi) {
    const std::string& method = r.methods[mi];
    const char* color = kPalette[mi % 6];
    os << "<polyline fill='none' stroke='" << color << "' stroke-width='2' points='";
    for (double x : r.axis) os << px(x) << "," << py(r.mean(method, x)) << " ";
    os << "'/>\n";
    os << "<text x='" << w - mr - 140 << "' y='" << mt + 16 * (mi + 1) << "' fill='" << color
       << "' font-size='12'>" << method << "</text>\n";
  }
  os << "</svg>\n";
}

void write_confusion_svg(const std::filesystem::path& path, const Eigen::MatrixXi& cm) {
  const int n = static_cast<int>(cm.rows());
  const int cell = 48, m = 40;
  const int w = m * 2 + n * cell, h = m * 2 + n * cell;
  const int peak = std::max(1, cm.maxCoeff());

  std::ofstream os(path);
  if (!os) throw DataError("plot: cannot open " + path.string());
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
  os << "<rect width='100%' height='100%' fill='white'/>\n";
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double t = static_cast<double>(cm(i, j)) / peak;
      const int blue = 255 - static_cast<int>(t * 200);
      os << "<rect x='" << m + j * cell << "' y='" << m + i * cell << "' width='" << cell
         << "' height='" << cell << "' fill='rgb(" << blue << "," << blue << ",255)'"
         << " stroke='gray'/>\n";
      os << "<text x='" << m + j * cell + cell / 2 - 8 << "' y='" << m + i * cell + cell / 2 + 4
         << "' font-size='12'>" << cm(i, j) << "</text>\n";
    }
  os << "</svg>\n";
}

}  // namespace dasein::eval
