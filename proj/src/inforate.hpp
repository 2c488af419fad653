#pragma once

#include <string>
#include <utility>
#include <vector>

#include "distribution.hpp"
#include "zoo.hpp"

namespace acid {

struct MiRateResult {
  double rate = 0;
  double input_term = 0;   // E[phi(lambda)]
  double output_term = 0;  // E[phi(lambda_hat)]
  double truncation_error_bound = 0;
  bool rate_floor_missing = false;  // bound is the last-increment heuristic
};

/// Information rate E[phi(lambda)] - E[phi(lambda_hat)] from a solved
/// boundary density on the given partition.
MiRateResult mi_rate(const PdmpModel& model, const InputLaw& input, const Partition& partition,
                     const BoundaryDensity& density, const SolverOptions& opt = {});

/// Full pipeline: partition, boundary operator, fixed point, rate.
MiRateResult mi_rate_pipeline(const PdmpModel& model, const InputLaw& input, long cells,
                              int reps, const SolverOptions& opt = {});

// --- random telegraph channel analysis (lambda0 = 0) -----------------------
//
// All derivative values follow the normalized-rate convention: d1 and d2 are
// derivatives with respect to k_i / c, and d3 is the gain derivative; the
// rate obeys I(k1, k2, c) = c I(k1/c, k2/c, 1).

/// Rate by adaptive quadrature of the closed-form integrand.
double rt_closed_form_rate(const RandomTelegraphParams& p);

struct RtAnalysis {
  double rate, d1, d2, d3;
};
/// Rate and all three derivatives from one joint sensitivity integration.
RtAnalysis rt_analyze(const RandomTelegraphParams& p);

std::pair<double, double> rt_partial_derivatives(const RandomTelegraphParams& p);
/// Gain derivative via the dedicated gain-sensitivity system.
double rt_gain_derivative(const RandomTelegraphParams& p);

struct NullclinePoint {
  double k1, k2;
};

/// k where the `which`-nullcline crosses the bisection line k2 == k1.
double nullcline_bisection_crossing(int which, double k_lo = 0.05, double k_hi = 0.6);

/// Continuation of d_which I == 0 in the (k1, k2) plane starting from
/// (k1_start, k2_hint); throws LostNullcline if the root escapes.
std::vector<NullclinePoint> trace_nullcline(int which, double k1_start, double k1_end, int steps,
                                            double k2_hint, double tol = 1e-7);

double nullcline_slope(double k1, double k2);      // h' from the implicit function theorem
double nullcline_convexity(double k1, double k2);  // h'' (finite-difference higher partials)

struct PhasePoint {
  double k1, k2, rate, d1, d2;
  char region;  // 'A' [+,-], 'B' [+,+], 'C' [-,+]
};
struct ConstrainedOptimum {
  double k1 = 0, k2 = 0;
  std::string location;  // "corner", "k1_boundary" or "k2_boundary"
};
struct PhasePlaneReport {
  std::vector<PhasePoint> grid;
  std::vector<NullclinePoint> nullcline1, nullcline2;
  bool has_optimum = false;
  ConstrainedOptimum optimum;
};

/// Rate/gradient field on a rectangular grid at c = 1, with the constrained
/// optimum for the box (0, k1_max] x (0, k2_max] classified by region.
PhasePlaneReport phase_plane(double k1_max, double k2_max, int n1, int n2,
                             bool classify_corner = true, bool with_nullclines = false,
                             int threads = 0);

}  // namespace acid
