#pragma once

#include <Eigen/Dense>
#include <vector>

#include "partition.hpp"

namespace acid {

/// Discretized inflow operator of the stationary boundary condition: entry
/// (i, j) is the probability that a sojourn started at cell j's
/// representative ends with a jump targeting cell i. Columns sum to one up
/// to the integrated tail residual.
struct BoundaryMatrix {
  Eigen::MatrixXd op;
  Partition partition;
  std::vector<double> column_sums;
  double clamped_mass_max = 0;   // mass redirected into edge cells
  double tail_residual_max = 0;  // survival mass left when integration stopped
  std::vector<long> leaky_columns;
};

BoundaryMatrix build_boundary_matrix(const PdmpModel& model, const Partition& partition,
                                     const SolverOptions& opt = {});

/// Stationary post-event density on the partition cells, normalized so that
/// its integral equals `norm` (the stationary mean intensity).
struct BoundaryDensity {
  std::vector<double> values;  // density value per cell
  double residual_l1 = 0;      // ||I a - a||_1 / ||a||_1 after convergence
  bool quasi_positive = true;
  double norm = 0;
  int squarings = 0;
};

BoundaryDensity solve_boundary_density(const BoundaryMatrix& matrix, int squarings, double norm,
                                       double tol = 1e-8);

/// Runs a function over [0, n) on a small thread pool (deterministic work
/// split; results must be index-disjoint).
void parallel_for(long n, int threads, const std::function<void(long)>& body);

}  // namespace acid
