#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace acid::ode {

struct Options {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  double event_tol = 1e-10;  // time tolerance for crossing refinement
  double h_max = std::numeric_limits<double>::infinity();
  double h_init = 0.0;  // 0 selects an automatic starting step
  long max_steps = 20'000'000;
  int scan_points = 4;  // dense-output subsamples per step used to bracket crossings
};

/// Right-hand side f(t, y) -> dy; `y` and `dydt` have the integrator's dimension.
using Rhs = std::function<void(double t, const double* y, double* dydt)>;

/// Continuous extension of one accepted step, valid on [t0, t1].
class DenseStep {
 public:
  double t0() const { return t0_; }
  double t1() const { return t1_; }
  double h() const { return t1_ - t0_; }
  const double* y1() const { return rcont_[0].data() + dim_; }  // state at t1

  void eval(double t, double* y_out) const;
  double eval_component(double t, int i) const;

 private:
  friend class Dopri5;
  int dim_ = 0;
  double t0_ = 0, t1_ = 0;
  // rcont_[0] holds [y0 | y1]; rcont_[1..4] the interpolation coefficients.
  std::vector<double> rcont_[5];
};

/// Adaptive Dormand-Prince 5(4) with FSAL and a 4th-order dense interpolant.
///
/// integrate() walks from t0 to t_end (t_end may be +inf when the observer
/// stops the run) and hands each accepted step to the observer. Returning
/// false from the observer ends the integration.
class Dopri5 {
 public:
  Dopri5(int dim, Rhs rhs, Options opt = {});

  using StepObserver = std::function<bool(const DenseStep&)>;

  /// Integrates and returns the final state. Throws Error(NonFiniteState)
  /// if the solution stops being finite.
  std::vector<double> integrate(double t0, std::vector<double> y0, double t_end,
                                const StepObserver& observer = {});

 private:
  int dim_;
  Rhs rhs_;
  Options opt_;
};

/// Locates a root of `f` inside [a, b] (f(a), f(b) of opposite sign) by
/// bisection/secant to time tolerance `tol`.
double refine_crossing(const std::function<double(double)>& f, double a, double b,
                       double fa, double fb, double tol);

}  // namespace acid::ode
