#pragma once

#include <vector>

#include "boundary.hpp"

namespace acid {

/// Binned stationary distribution of the conditional intensity.
struct AcidDistribution {
  std::vector<double> edges;    // bin edges, size() == weights.size() + 1
  std::vector<double> weights;  // normalized to sum 1
  double total_mass_raw = 0;    // mass before normalization (diagnostic)
  double mean = 0;
  double variance = 0;
  bool mesh_warning = false;  // one bin holds > 50% of a non-degenerate law

  long bins() const { return static_cast<long>(weights.size()); }
  double dm() const { return edges.size() > 1 ? edges[1] - edges[0] : 0.0; }
  /// CDF evaluated at the bin edges.
  std::vector<double> cdf() const;
  void finalize();  // normalizes and fills moments/warnings
};

struct AcidMeshOptions {
  long bins = 400;
  Interval range{0, 0};  // (0,0) derives the range from the model and partition
};

/// Reconstructs the intensity distribution from the boundary density by
/// accumulating survival-weighted residence times per intensity bin.
AcidDistribution acid_pdf(const PdmpModel& model, const Partition& partition,
                          const BoundaryDensity& density, const AcidMeshOptions& mesh = {},
                          const SolverOptions& opt = {});

/// W1 distance between two binned distributions (mass uniform within bins).
double wasserstein1(const AcidDistribution& a, const AcidDistribution& b);

/// Builds a histogram on the given edges from raw samples.
AcidDistribution histogram(const std::vector<double>& samples, std::vector<double> edges);

/// Fixed point posed directly on the intensity variable, for scalar models
/// whose conditional intensity is the state itself. `max_iters` bounds the
/// power iteration (2^squarings when driven by solver options).
AcidDistribution direct_fixed_point(const PdmpModel& model, long grid_cells, long max_iters,
                                    const SolverOptions& opt = {});

/// Stationary mean intensity used to normalize the boundary density; falls
/// back to 1 / E[sojourn] for renewal-type models without a declared mean.
double normalization_constant(const PdmpModel& model, const SolverOptions& opt = {});

/// Intensity mesh range derived from the model and the partition in use.
Interval resolve_intensity_range(const PdmpModel& model, const Partition& partition);

}  // namespace acid
