#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ode.hpp"

namespace acid {

struct Interval {
  double lo = 0, hi = 0;
  double width() const { return hi - lo; }
};

/// Optional closed forms a model may provide. All are consulted before
/// falling back to numerical integration.
struct AnalyticForms {
  /// Full-state flow solution u(tau, x0).
  std::function<void(double tau, const double* x0, double* x_out)> flow_solution;
  /// Intensity along the flow, m(tau, theta).
  std::function<double(double tau, const double* theta)> intensity;
  /// Survival factor P(tau, theta).
  std::function<double(double tau, const double* theta)> survival;
  /// For scalar theta with monotone decreasing target: time at which the jump
  /// target reaches `level` (negative if already below at tau=0, +inf if never).
  std::function<double(double level, double theta)> target_hit_time;
  /// Survival evaluated at target_hit_time(level, theta), in a stable form.
  std::function<double(double level, double theta)> survival_at_target_level;
  /// Time at which the intensity reaches `level` (same conventions).
  std::function<double(double level, double theta)> intensity_hit_time;
  /// Integral of P dtau while the intensity traverses [m_lo, m_hi] downward.
  std::function<double(double m_lo, double m_hi, double theta)> survival_time_in_band;
  /// log G(z) for the intensity-variable fixed point method (1-d models).
  std::function<double(double z)> direct_log_g;
};

/// Piecewise-deterministic model of a conditional-intensity process.
///
/// The state x in R^state_dim follows dx/dt = flow(x) between events, is
/// mapped by jump_update at events, and drives the event rate through
/// intensity(x). The statistic theta in R^stat_dim recorded at events
/// determines the post-event state via extend(); truncate() recovers theta
/// from a post-event state.
class PdmpModel {
 public:
  std::string name;
  int state_dim = 0;  // dimension of the progressing state
  int stat_dim = 0;   // dimension of theta (0 = renewal-like reset)

  std::function<void(const double* x, double* dx)> flow;
  std::function<void(const double* x, double* x_out)> jump_update;
  std::function<double(const double* x)> intensity;
  std::function<void(const double* theta, double* x_out)> extend;    // theta -> state
  std::function<void(const double* x, double* theta_out)> truncate;  // state -> theta

  /// Support of the post-event density, one interval per theta coordinate.
  /// Unbounded coordinates use hi = +inf; solvers truncate them.
  std::vector<Interval> support;

  /// Values the trailing state components take right after an event, when
  /// they are genuinely constant (informational; extend() is authoritative).
  std::vector<double> reset_constants;

  /// Clamps x back into the admissible region (within small slack) or
  /// returns false when it is genuinely outside.
  std::function<bool(double* x)> admissible;

  /// Provable uniform lower bound m(tau, theta) >= rate_floor (0 if none).
  double rate_floor = 0.0;
  /// Heuristic asymptotic event rate, used to size integration horizons.
  double tail_rate_hint = 0.0;
  /// E[lambda_inf] when the model knows its stationary mean intensity.
  std::optional<double> stationary_mean_intensity;
  /// Declared stationary moments of the conditional intensity, when known.
  std::optional<double> acid_mean;
  std::optional<double> acid_variance;
  /// Range the conditional intensity lives in (used for output meshes).
  std::optional<Interval> intensity_range;
  /// True when m(., theta) and the jump target decrease monotonically.
  bool monotone_decreasing = false;
  /// Representative state for starting path replays (stationary-mean-like).
  std::vector<double> typical_state;
  /// lim V[Y_T]/T when the model declares it.
  std::optional<double> expected_variance_slope;

  AnalyticForms analytic;

  bool has_analytic_column() const {
    return stat_dim == 1 && monotone_decreasing && analytic.target_hit_time &&
           analytic.survival_at_target_level;
  }

  std::vector<double> extended(const double* theta) const {
    std::vector<double> x(state_dim);
    extend(theta, x.data());
    return x;
  }
};

struct FlowTrajectory {
  std::vector<double> theta;
  std::vector<double> taus;                 // strictly increasing from 0
  std::vector<std::vector<double>> states;  // state at each tau
  struct Crossing {
    double tau;
    int query;      // index into the crossing query list
    int direction;  // +1 upward, -1 downward
  };
  std::vector<Crossing> events;
};

struct SurvivalCurve {
  std::vector<double> theta;
  std::vector<double> taus;
  std::vector<double> values;  // P(tau, theta), within [0, 1], nonincreasing
};

/// A level-crossing request against a state component of integrate_flow.
struct CrossingQuery {
  int component = 0;
  double level = 0;
};

FlowTrajectory integrate_flow(const PdmpModel& model, const std::vector<double>& theta,
                              double tau_max, const std::vector<CrossingQuery>& levels = {},
                              const ode::Options& opt = {});

SurvivalCurve survival(const PdmpModel& model, const std::vector<double>& theta,
                       double tau_max, const ode::Options& opt = {});

double conditional_intensity(const PdmpModel& model, const std::vector<double>& theta,
                             double tau, const ode::Options& opt = {});

std::vector<double> jump_target(const PdmpModel& model, const std::vector<double>& theta,
                                double tau, const ode::Options& opt = {});

/// What a sojourn-level integration should watch for level crossings.
enum class ObservableKind { StateComponent, Intensity, TargetComponent };

struct Observable {
  ObservableKind kind = ObservableKind::Intensity;
  int index = 0;  // component for StateComponent / TargetComponent
};

struct LevelSet {
  Observable observable;
  const std::vector<double>* edges = nullptr;  // sorted ascending
};

/// Integrates state, survival factor and optional accumulators over one
/// sojourn, reporting every crossing of the requested level sets.
///
/// The augmented system is
///   x' = F(x),  P' = -l(x) P,  C' = P,  J' = phi(l(x)) P
/// started from x = extend(theta), P = 1, and stopped when P < eps_tail or
/// tau reaches tau_max.
class SojournIntegrator {
 public:
  struct Config {
    ode::Options ode;
    double eps_tail = 1e-10;
    double tau_max = 200.0;
    bool want_time_integral = false;  // accumulate C = int P dtau
    bool want_phi_integral = false;   // accumulate J = int phi(m) P dtau
  };

  struct Crossing {
    double tau;
    int level_set;
    int edge;       // index into that level set's edge array
    int direction;  // +1 upward, -1 downward
    double survival;
    double time_integral;  // C at the crossing (if requested)
  };

  struct Result {
    double tau_end = 0;
    double survival_end = 0;
    double time_integral_end = 0;
    double phi_integral_end = 0;
    double max_intensity = 0;
    std::vector<double> state_end;
    std::vector<Crossing> crossings;
    bool hit_tau_max = false;
  };

  explicit SojournIntegrator(Config cfg) : cfg_(cfg) {}

  Result run(const PdmpModel& model, const double* theta,
             const std::vector<LevelSet>& level_sets = {}) const;

  /// tau_max adapted to the model's tail rate so that P can reach eps_tail.
  static double horizon_for(const PdmpModel& model, const Config& cfg);

 private:
  Config cfg_;
};

/// phi(z) = z ln z, continuously extended by phi(0) = 0.
inline double phi(double z) { return z > 0 ? z * std::log(z) : 0.0; }

}  // namespace acid
