#pragma once

#include <vector>

#include "model.hpp"

namespace acid {

struct SolverOptions {
  ode::Options ode;
  double eps_tail = 1e-10;
  double tau_max = 200.0;  // raised automatically from the model's tail rate
  int squarings = 15;      // L: the operator power taken is 2^L
  double fixed_point_tol = 1e-8;
  double mass_tol = 1e-6;
  double truncation_quantile = 0.999;
  int threads = 0;  // 0 = hardware concurrency
};

/// Equal-volume axis-aligned grid over the (possibly truncated) support of
/// the post-event density. dims() == 0 denotes the degenerate single-cell
/// partition of a model without a sufficient statistic.
class Partition {
 public:
  Partition() = default;
  static Partition regular(std::vector<Interval> box, std::vector<long> cells_per_axis,
                           int reps_per_axis);

  int dims() const { return static_cast<int>(axes_.size()); }
  long cell_count() const { return total_cells_; }
  double cell_volume() const { return volume_; }
  long cells(int axis) const { return static_cast<long>(axes_[axis].size()) - 1; }
  const std::vector<double>& edges(int axis) const { return axes_[axis]; }
  const std::vector<Interval>& box() const { return box_; }

  int reps_per_axis() const { return reps_per_axis_; }
  int reps_per_cell() const { return reps_per_cell_; }

  void multi_index(long flat, long* mi) const;
  long flat_index(const long* mi) const;
  /// Cell containing theta, with out-of-box coordinates clamped to edge cells.
  long locate(const double* theta) const;
  bool contains(const double* theta) const;

  /// rep-th representative point of a cell (reps_per_cell of them, cell
  /// centers when reps_per_axis == 1).
  void representative(long cell, int rep, double* theta_out) const;
  std::vector<double> center(long cell) const;

 private:
  std::vector<std::vector<double>> axes_;
  std::vector<Interval> box_;
  long total_cells_ = 1;
  double volume_ = 1.0;
  int reps_per_axis_ = 1;
  int reps_per_cell_ = 1;
};

/// Builds a partition covering the model's support; unbounded coordinates
/// are truncated using the model's hints (moment-matched Gamma quantile for
/// scalar statistics, flow probing for the two-dimensional filters).
Partition make_partition(const PdmpModel& model, long cells_per_axis, int reps_per_axis,
                         const SolverOptions& opt = {});

/// Quantile of the Gamma distribution with the given mean and variance.
double gamma_quantile(double p, double mean, double variance);

}  // namespace acid
