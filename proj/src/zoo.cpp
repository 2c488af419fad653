#include "zoo.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "errors.hpp"

namespace acid {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Runs the silence flow to its attractor; used for horizon heuristics.
std::vector<double> flow_equilibrium(const PdmpModel& model, std::vector<double> x0,
                                     double t_max = 1e5) {
  ode::Rhs rhs = [&model](double, const double* y, double* dy) { model.flow(y, dy); };
  std::vector<double> dx(model.state_dim);
  ode::Options opt;
  opt.rel_tol = 1e-12;
  opt.abs_tol = 1e-14;
  auto observer = [&](const ode::DenseStep& step) {
    model.flow(step.y1(), dx.data());
    double norm = 0;
    for (double v : dx) norm = std::max(norm, std::abs(v));
    return norm > 1e-13;
  };
  return ode::Dopri5(model.state_dim, rhs, opt).integrate(0.0, std::move(x0), t_max, observer);
}

void check_positive(double v, const char* what) {
  require(std::isfinite(v) && v > 0, ErrorCode::InvalidArgument,
          std::string(what) + " must be positive");
}

}  // namespace

// ---------------------------------------------------------------------------
// CTMC input
// ---------------------------------------------------------------------------

void CtmcInput::validate() const {
  const int n = size();
  require(n >= 1, ErrorCode::InvalidArgument, "CTMC needs at least one state");
  require(static_cast<int>(generator.size()) == n && static_cast<int>(rates.size()) == n,
          ErrorCode::InvalidArgument, "generator/rate dimensions do not match state count");
  for (int i = 0; i < n; ++i) {
    require(static_cast<int>(generator[i].size()) == n, ErrorCode::InvalidArgument,
            "generator is not square");
    double row = 0;
    for (int j = 0; j < n; ++j) {
      if (i != j)
        require(generator[i][j] >= 0, ErrorCode::InvalidArgument,
                "off-diagonal generator entries must be nonnegative");
      row += generator[i][j];
    }
    require(std::abs(row) <= 1e-12 * std::max(1.0, -generator[i][i]) + 1e-12,
            ErrorCode::InvalidArgument, "generator rows must sum to zero");
    require(rates[i] >= 0, ErrorCode::InvalidArgument, "state rates must be nonnegative");
  }
  if (n == 1) return;
  // irreducibility by forward and backward reachability from state 0
  auto reach = [&](bool forward) {
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v = 0; v < n; ++v) {
        const double r = forward ? generator[u][v] : generator[v][u];
        if (u != v && r > 0 && !seen[v]) {
          seen[v] = 1;
          stack.push_back(v);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  };
  require(reach(true) && reach(false), ErrorCode::InvalidArgument,
          "CTMC generator is not irreducible");
}

std::vector<double> CtmcInput::stationary() const {
  const int n = size();
  Eigen::MatrixXd A(n + 1, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) A(j, i) = generator[i][j];  // Q^T pi = 0
  for (int i = 0; i < n; ++i) A(n, i) = 1.0;
  b(n) = 1.0;
  Eigen::VectorXd pi = A.colPivHouseholderQr().solve(b);
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = std::max(pi(i), 0.0);
  const double s = std::accumulate(out.begin(), out.end(), 0.0);
  for (double& v : out) v /= s;
  return out;
}

double CtmcInput::mean_rate() const {
  auto pi = stationary();
  double m = 0;
  for (int i = 0; i < size(); ++i) m += pi[i] * rates[i];
  return m;
}

double CtmcInput::mean_phi_rate() const {
  auto pi = stationary();
  double m = 0;
  for (int i = 0; i < size(); ++i) m += pi[i] * phi(rates[i]);
  return m;
}

InputLaw input_law(const CtmcInput& input) {
  return {input.mean_rate(), input.mean_phi_rate()};
}

InputLaw poisson_input_law(double mu, double c) {
  check_positive(mu, "mu");
  check_positive(c, "c");
  // sum the Poisson series until the remaining mass is negligible
  double logp = -mu;  // log pmf at k = 0
  double mean = 0, phim = 0;
  for (int k = 1; k < 4096; ++k) {
    logp += std::log(mu / k);
    const double p = std::exp(logp);
    mean += p * c * k;
    phim += p * phi(c * k);
    if (k > mu && p < 1e-18) break;
  }
  return {mean, phim};
}

// ---------------------------------------------------------------------------
// Random telegraph (with and without dark current)
// ---------------------------------------------------------------------------

TelegraphDerived telegraph_derived(const RandomTelegraphParams& p) {
  check_positive(p.k1, "k1");
  check_positive(p.k2, "k2");
  check_positive(p.c, "c");
  require(p.lambda0 >= 0, ErrorCode::InvalidArgument, "lambda0 must be nonnegative");
  TelegraphDerived d;
  d.dlam = p.c;
  d.lambda1 = p.lambda0 + d.dlam;
  const double b = p.k1 + p.k2 + d.dlam;
  const double disc = std::sqrt(b * b - 4 * p.k1 * d.dlam);
  const double wt1 = 2 * p.k1 * d.dlam / (b + disc);  // stable small root
  const double wt2 = (b + disc) / 2;
  d.omega1 = wt1 + p.lambda0;
  d.omega2 = wt2 + p.lambda0;
  d.domega = d.omega2 - d.omega1;
  d.f_inf = p.lambda0 > 0
                ? (d.omega1 - p.lambda0) * (d.lambda1 - d.omega1) / d.omega1 + d.omega1
                : d.lambda1;
  d.mean_rate = p.lambda0 + d.dlam * p.k1 / (p.k1 + p.k2);
  return d;
}

PdmpModel random_telegraph_model(const RandomTelegraphParams& p) {
  const TelegraphDerived d = telegraph_derived(p);
  const double w1 = d.omega1, w2 = d.omega2, dw = d.domega;
  const double l0 = p.lambda0, l1 = d.lambda1;

  PdmpModel m;
  m.name = l0 > 0 ? "dark_current" : "random_telegraph";
  m.state_dim = 1;
  m.stat_dim = l0 > 0 ? 1 : 0;
  m.flow = [w1, w2](const double* x, double* dx) { dx[0] = (x[0] - w1) * (x[0] - w2); };
  m.intensity = [](const double* x) { return x[0]; };
  m.jump_update = [l0, l1](const double* x, double* out) {
    out[0] = l0 > 0 ? l0 + l1 - l0 * l1 / x[0] : l1;
  };
  if (m.stat_dim == 1) {
    m.extend = [](const double* th, double* x) { x[0] = th[0]; };
    m.truncate = [](const double* x, double* th) { th[0] = x[0]; };
    m.support = {{d.f_inf, l1}};
  } else {
    m.extend = [l1](const double*, double* x) { x[0] = l1; };
    m.truncate = [](const double*, double*) {};
    m.reset_constants = {l1};
  }
  m.admissible = [w1, l1](double* x) {
    if (!std::isfinite(x[0])) return false;
    const double slack = 1e-9 * std::max(1.0, l1);
    if (x[0] < w1 - slack || x[0] > l1 + slack) return false;
    x[0] = std::clamp(x[0], w1, l1);
    return true;
  };
  m.rate_floor = w1;
  m.tail_rate_hint = w1;
  m.monotone_decreasing = true;
  m.stationary_mean_intensity = d.mean_rate;
  m.acid_mean = d.mean_rate;
  m.intensity_range = Interval{w1, l1};
  m.typical_state = {d.mean_rate};

  const bool has_theta = m.stat_dim == 1;
  auto x_of_theta = [l1, has_theta](const double* th) { return has_theta ? th[0] : l1; };
  m.analytic.flow_solution = [w1, w2, dw](double tau, const double* x0, double* out) {
    const double r = (x0[0] - w1) / (w2 - x0[0]);
    out[0] = w2 - dw / (1.0 + r * std::exp(-dw * tau));
  };
  m.analytic.intensity = [w1, w2, dw, x_of_theta](double tau, const double* th) {
    const double x0 = x_of_theta(th);
    const double r = (x0 - w1) / (w2 - x0);
    return w2 - dw / (1.0 + r * std::exp(-dw * tau));
  };
  m.analytic.survival = [w1, w2, dw, x_of_theta](double tau, const double* th) {
    const double x0 = x_of_theta(th);
    return std::exp(-w1 * tau) * (w2 - x0) / dw + std::exp(-w2 * tau) * (x0 - w1) / dw;
  };
  // time until the intensity reaches `level` (raw; negative if already below)
  auto m_hit = [w1, w2, dw](double level, double x0) {
    if (level <= w1) return kInf;
    return (std::log((w2 - level) / (level - w1)) - std::log((w2 - x0) / (x0 - w1))) / dw;
  };
  m.analytic.intensity_hit_time = [m_hit, x_of_theta](double level, double theta) {
    return m_hit(level, x_of_theta(&theta));
  };
  // survival at the moment the intensity equals `level`, in product form
  auto p_at_level = [w1, w2, dw](double level, double x0) {
    if (level <= w1) return 0.0;
    if (level >= x0) return 1.0;
    return std::pow((level - w1) / (x0 - w1), w1 / dw) *
           std::pow((w2 - x0) / (w2 - level), w2 / dw);
  };
  if (l0 > 0) {
    auto f_inv = [l0, l1](double y) { return l0 * l1 / (l0 + l1 - y); };
    m.analytic.target_hit_time = [m_hit, f_inv, w1](double level, double theta) {
      const double x = f_inv(level);
      if (x <= w1) return kInf;
      return m_hit(x, theta);
    };
    m.analytic.survival_at_target_level = [p_at_level, f_inv, w1](double level, double theta) {
      const double x = f_inv(level);
      if (x <= w1) return 0.0;
      return p_at_level(x, theta);
    };
  }
  // int P dtau while the intensity traverses [m_lo, m_hi] downward
  m.analytic.survival_time_in_band = [w1, w2, dw, x_of_theta](double m_lo, double m_hi,
                                                              double theta) {
    const double x0 = x_of_theta(&theta);
    const double hi = std::min(m_hi, x0);
    const double lo = std::max(m_lo, w1);
    if (hi <= lo) return 0.0;
    const double prefac =
        std::pow(w2 - x0, w2 / dw) / (dw * std::pow(x0 - w1, w1 / dw));
    auto bracket = [w1, w2, dw](double v) {
      if (v <= w1) return 0.0;
      return std::pow(v - w1, w1 / dw) / (w1 * std::pow(w2 - v, w1 / dw)) +
             std::pow(v - w1, w2 / dw) / (w2 * std::pow(w2 - v, w2 / dw));
    };
    return prefac * (bracket(hi) - bracket(lo));
  };
  m.analytic.direct_log_g = [w1, w2, dw](double z) {
    return (w1 / dw) * std::log(z - w1) - (w2 / dw) * std::log(w2 - z);
  };
  return m;
}

// ---------------------------------------------------------------------------
// Double On / single Off
// ---------------------------------------------------------------------------

PdmpModel donsoff_model(const DonsoffParams& p) {
  check_positive(p.alpha01, "alpha01");
  check_positive(p.alpha11, "alpha11");
  check_positive(p.alpha10, "alpha10");
  check_positive(p.c, "c");
  const double a01 = p.alpha01, a11 = p.alpha11, a10 = p.alpha10, c = p.c;
  static constexpr double kZFloor = 1e-8;

  PdmpModel m;
  m.name = "donsoff";
  m.state_dim = 2;
  m.stat_dim = 1;
  m.flow = [a01, a11, a10, c](const double* x, double* dx) {
    const double u = x[0];
    const double z = std::max(x[1], kZFloor);
    dx[0] = -a11 * u + a01 * (1 - z) * (1 - u) / z + a10 * u * (1 - u);
    dx[1] = -c * (1 - z) * z + a01 * (1 - z) - a10 * (1 - u) * z;
  };
  m.intensity = [c](const double* x) { return c * x[1]; };
  m.jump_update = [](const double* x, double* out) {
    out[0] = x[0];
    out[1] = 1.0;
  };
  m.extend = [](const double* th, double* x) {
    x[0] = th[0];
    x[1] = 1.0;
  };
  m.truncate = [](const double* x, double* th) { th[0] = x[0]; };
  m.reset_constants = {1.0};
  m.support = {{0.0, 1.0}};
  m.admissible = [](double* x) {
    for (int i = 0; i < 2; ++i) {
      if (!std::isfinite(x[i]) || x[i] < -1e-9 || x[i] > 1 + 1e-9) return false;
      x[i] = std::clamp(x[i], 0.0, 1.0);
    }
    return x[1] >= kZFloor / 2;
  };
  const auto eq = flow_equilibrium(m, {0.5, 0.5});
  m.tail_rate_hint = c * std::max(eq[1], kZFloor);
  m.monotone_decreasing = false;
  const CtmcInput input = donsoff_input(p);
  m.stationary_mean_intensity = input.mean_rate();
  m.acid_mean = m.stationary_mean_intensity;
  m.intensity_range = Interval{std::max(0.0, 0.9 * c * eq[1]), c};
  const auto pi = input.stationary();
  const double z0 = pi[0] + pi[1];
  m.typical_state = {pi[0] / z0, z0};
  return m;
}

// ---------------------------------------------------------------------------
// Hawkes
// ---------------------------------------------------------------------------

PdmpModel hawkes_model(const HawkesParams& p) {
  require(p.mu0 >= 0, ErrorCode::InvalidArgument, "mu0 must be nonnegative");
  check_positive(p.beta, "beta");
  require(p.alpha > p.beta, ErrorCode::Nonstationary,
          "Hawkes stationarity requires alpha > beta");
  const double mu0 = p.mu0, beta = p.beta, alpha = p.alpha;

  PdmpModel m;
  m.name = "hawkes";
  m.state_dim = 1;
  m.stat_dim = 1;
  m.flow = [mu0, alpha](const double* x, double* dx) { dx[0] = -alpha * (x[0] - mu0); };
  m.intensity = [](const double* x) { return x[0]; };
  m.jump_update = [beta](const double* x, double* out) { out[0] = x[0] + beta; };
  m.extend = [](const double* th, double* x) { x[0] = th[0]; };
  m.truncate = [](const double* x, double* th) { th[0] = x[0]; };
  m.support = {{mu0 + beta, kInf}};
  m.admissible = [mu0](double* x) { return std::isfinite(x[0]) && x[0] >= mu0 - 1e-12; };
  m.rate_floor = mu0;
  m.tail_rate_hint = mu0 > 0 ? mu0 : beta;
  m.monotone_decreasing = true;
  m.stationary_mean_intensity = alpha * mu0 / (alpha - beta);
  m.acid_mean = m.stationary_mean_intensity;
  m.acid_variance = alpha * mu0 * beta * beta / (2 * (alpha - beta) * (alpha - beta));
  m.intensity_range = Interval{mu0, kInf};
  m.typical_state = {*m.acid_mean};
  {
    const double decay = alpha - beta;
    m.expected_variance_slope = *m.acid_mean * (alpha / decay) * (alpha / decay);
  }

  m.analytic.flow_solution = [mu0, alpha](double tau, const double* x0, double* out) {
    out[0] = mu0 + std::exp(-alpha * tau) * (x0[0] - mu0);
  };
  m.analytic.intensity = [mu0, alpha](double tau, const double* th) {
    return mu0 + std::exp(-alpha * tau) * (th[0] - mu0);
  };
  m.analytic.survival = [mu0, alpha](double tau, const double* th) {
    return std::exp(-mu0 * tau - (th[0] - mu0) * (1.0 - std::exp(-alpha * tau)) / alpha);
  };
  m.analytic.intensity_hit_time = [mu0, alpha](double level, double theta) {
    if (level <= mu0) return kInf;
    return std::log((theta - mu0) / (level - mu0)) / alpha;
  };
  m.analytic.target_hit_time = [mu0, alpha, beta](double level, double theta) {
    if (level <= mu0 + beta) return kInf;
    return std::log((theta - mu0) / (level - mu0 - beta)) / alpha;
  };
  m.analytic.survival_at_target_level = [mu0, alpha, beta](double level, double theta) {
    if (level <= mu0 + beta) return 0.0;
    if (level >= theta + beta) return 1.0;
    return std::pow((level - beta - mu0) / (theta - mu0), mu0 / alpha) *
           std::exp(-(theta - level + beta) / alpha);
  };
  m.analytic.direct_log_g = [mu0, alpha](double z) {
    return (mu0 / alpha) * std::log(z - mu0) + z / alpha;
  };
  return m;
}

HawkesParams hawkes_from_moments(double mu, double sigma2, double gamma, double c) {
  check_positive(mu, "mu");
  check_positive(sigma2, "sigma2");
  check_positive(gamma, "gamma");
  check_positive(c, "c");
  HawkesParams p;
  p.beta = std::sqrt(gamma * gamma + 2 * c * gamma * sigma2 / mu) - gamma;
  p.alpha = gamma + p.beta;
  p.mu0 = c * mu * gamma / p.alpha;
  return p;
}

// ---------------------------------------------------------------------------
// Gamma filter
// ---------------------------------------------------------------------------

PdmpModel gamma_filter_model(const GammaFilterParams& p) {
  check_positive(p.mu, "mu");
  check_positive(p.sigma2, "sigma2");
  check_positive(p.gamma, "gamma");
  check_positive(p.c, "c");
  const double mu = p.mu, s2 = p.sigma2, g = p.gamma, c = p.c;
  const bool bd = p.variant == GammaFilterParams::Variant::BirthDeath;

  PdmpModel m;
  m.name = bd ? "gamma_filter_bd" : "gamma_filter";
  m.state_dim = 2;
  m.stat_dim = 2;
  m.flow = [mu, s2, g, c, bd](const double* x, double* dx) {
    const double M = std::max(x[0], 1e-12);
    const double S = std::max(x[1], 0.0);
    dx[0] = -g * (M - mu) - c * S;
    dx[1] = bd ? -g * (2 * S - M - mu) - 2 * c * S * S / M
               : -2 * g * (S - (s2 / mu) * M) - 2 * c * S * S / M;
  };
  m.intensity = [c](const double* x) { return c * std::max(x[0], 0.0); };
  m.jump_update = [](const double* x, double* out) {
    const double M = std::max(x[0], 1e-12);
    const double S = std::max(x[1], 0.0);
    out[0] = M + S / M;
    out[1] = S + S * S / (M * M);
  };
  m.extend = [](const double* th, double* x) {
    x[0] = th[0];
    x[1] = th[1];
  };
  m.truncate = [](const double* x, double* th) {
    th[0] = x[0];
    th[1] = x[1];
  };
  m.support = {{0.0, kInf}, {0.0, kInf}};
  m.admissible = [](double* x) {
    if (!std::isfinite(x[0]) || !std::isfinite(x[1])) return false;
    if (x[0] <= 0) return false;
    x[1] = std::max(x[1], 1e-12);  // S is clamped at the positivity floor
    return true;
  };
  const auto eq = flow_equilibrium(m, {mu, s2 * 0.5});
  m.tail_rate_hint = c * std::max(eq[0], 1e-6);
  m.monotone_decreasing = false;
  m.stationary_mean_intensity = c * mu;
  m.acid_mean = c * mu;
  m.acid_variance = c * c * s2;  // moment-matched truncation scale
  m.intensity_range = Interval{0.0, kInf};
  m.typical_state = {mu, std::max(eq[1], 1e-6)};
  m.expected_variance_slope = c * mu + 2 * c * c * s2 / g;
  return m;
}

// ---------------------------------------------------------------------------
// General Snyder filter construction
// ---------------------------------------------------------------------------

PdmpModel snyder_model(const CtmcInput& input) {
  input.validate();
  const int ns = input.size();
  require(ns <= 64, ErrorCode::InvalidArgument, "CTMC inputs are limited to 64 states");
  require(std::any_of(input.rates.begin(), input.rates.end(), [](double r) { return r > 0; }),
          ErrorCode::AllStatesZero, "all input states have zero rate");

  // order states with nonzero rate first; the last listed state is eliminated
  // by probability conservation
  std::vector<int> order;
  for (int i = 0; i < ns; ++i)
    if (input.rates[i] > 0) order.push_back(i);
  const int n_active = static_cast<int>(order.size());
  for (int i = 0; i < ns; ++i)
    if (input.rates[i] == 0) order.push_back(i);

  std::vector<double> lam(ns);
  std::vector<std::vector<double>> q(ns, std::vector<double>(ns));
  for (int i = 0; i < ns; ++i) {
    lam[i] = input.rates[order[i]];
    for (int j = 0; j < ns; ++j) q[i][j] = input.generator[order[i]][order[j]];
  }

  const int n0 = ns - 1;
  const int n = n_active - 1;

  PdmpModel m;
  m.name = "snyder[" + std::to_string(ns) + "]";
  m.state_dim = std::max(n0, 1);
  m.stat_dim = std::max(n, 0);

  auto full_state = [n0, ns](const double* x, double* pi) {
    double sum = 0;
    for (int i = 0; i < n0; ++i) {
      pi[i] = x[i];
      sum += x[i];
    }
    pi[ns - 1] = 1.0 - sum;
  };

  m.flow = [q, lam, n0, ns, full_state](const double* x, double* dx) {
    double pi[64];
    full_state(x, pi);
    double lam_hat = 0;
    for (int i = 0; i < ns; ++i) lam_hat += lam[i] * pi[i];
    for (int i = 0; i < n0; ++i) {
      double drift = 0;
      for (int j = 0; j < ns; ++j) drift += q[j][i] * pi[j];
      dx[i] = drift - (lam[i] - lam_hat) * pi[i];
    }
  };
  m.intensity = [lam, n0, ns, full_state](const double* x) {
    double pi[64];
    full_state(x, pi);
    double lam_hat = 0;
    for (int i = 0; i < ns; ++i) lam_hat += lam[i] * pi[i];
    return std::max(lam_hat, 0.0);
  };
  m.jump_update = [lam, n0, ns, full_state](const double* x, double* out) {
    double pi[64];
    full_state(x, pi);
    double lam_hat = 0;
    for (int i = 0; i < ns; ++i) lam_hat += lam[i] * pi[i];
    require(lam_hat > 0, ErrorCode::FilterBlowup,
            "jump update undefined: filter intensity vanished");
    for (int i = 0; i < n0; ++i) out[i] = lam[i] * pi[i] / lam_hat;
  };
  m.extend = [n, n0, n_active](const double* th, double* x) {
    std::fill(x, x + n0, 0.0);
    double sum = 0;
    for (int i = 0; i < n; ++i) {
      x[i] = th[i];
      sum += th[i];
    }
    if (n_active - 1 < n0) x[n_active - 1] = 1.0 - sum;
  };
  m.truncate = [n](const double* x, double* th) {
    for (int i = 0; i < n; ++i) th[i] = x[i];
  };
  m.support.assign(std::max(n, 0), Interval{0.0, 1.0});
  m.admissible = [n0, ns, full_state](double* x) {
    double pi[64];
    full_state(x, pi);
    for (int i = 0; i < ns; ++i) {
      if (!std::isfinite(pi[i]) || pi[i] < -1e-9 || pi[i] > 1 + 1e-9) return false;
    }
    for (int i = 0; i < n0; ++i) x[i] = std::clamp(x[i], 0.0, 1.0);
    return true;
  };

  const InputLaw law = input_law(input);
  m.stationary_mean_intensity = law.mean;
  m.acid_mean = law.mean;
  const double lam_max = *std::max_element(lam.begin(), lam.end());
  m.intensity_range = Interval{0.0, lam_max};
  {
    std::vector<double> x0(m.state_dim, 0.0);
    auto pi = input.stationary();
    for (int i = 0; i < n0; ++i) x0[i] = pi[order[i]];
    m.typical_state = x0;
    const auto eq = flow_equilibrium(m, x0);
    m.tail_rate_hint = std::max(m.intensity(eq.data()), 1e-8);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Renewal processes
// ---------------------------------------------------------------------------

PdmpModel renewal_model(std::function<double(double)> survival_fn,
                        std::function<double(double)> hazard_fn, double tau_probe) {
  require(static_cast<bool>(survival_fn) && static_cast<bool>(hazard_fn),
          ErrorCode::InvalidArgument, "renewal model needs survival and hazard functions");
  require(std::abs(survival_fn(0.0) - 1.0) <= 1e-12, ErrorCode::InvalidArgument,
          "survival must start at 1");

  PdmpModel m;
  m.name = "renewal";
  m.state_dim = 1;
  m.stat_dim = 0;
  m.flow = [](const double*, double* dx) { dx[0] = 1.0; };
  m.intensity = [hazard_fn](const double* x) { return std::max(hazard_fn(x[0]), 0.0); };
  m.jump_update = [](const double*, double* out) { out[0] = 0.0; };
  m.extend = [](const double*, double* x) { x[0] = 0.0; };
  m.truncate = [](const double*, double*) {};
  m.reset_constants = {0.0};
  m.admissible = [](double* x) { return std::isfinite(x[0]) && x[0] >= 0; };
  m.analytic.survival = [survival_fn](double tau, const double*) { return survival_fn(tau); };
  m.analytic.intensity = [hazard_fn](double tau, const double*) {
    return std::max(hazard_fn(tau), 0.0);
  };
  // probe the hazard range for output meshes and horizon heuristics
  double h_lo = kInf, h_hi = 0;
  for (int i = 0; i <= 200; ++i) {
    const double h = std::max(hazard_fn(tau_probe * i / 200), 0.0);
    h_lo = std::min(h_lo, h);
    h_hi = std::max(h_hi, h);
  }
  m.intensity_range = Interval{h_lo, h_hi};
  m.tail_rate_hint = std::max(hazard_fn(tau_probe), 1e-8);
  m.stationary_mean_intensity.reset();  // mean rate = 1 / E[sojourn], solver-computed
  m.typical_state = {0.0};
  return m;
}

namespace {

// Fritsch-Carlson monotone cubic interpolant of a decreasing survival table.
struct MonotoneCubic {
  std::vector<double> x, y, d;  // knots, values, derivatives

  static MonotoneCubic fit(const std::vector<double>& xs, const std::vector<double>& ys) {
    const size_t n = xs.size();
    MonotoneCubic c;
    c.x = xs;
    c.y = ys;
    c.d.resize(n);
    std::vector<double> delta(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) delta[i] = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
    c.d[0] = delta[0];
    c.d[n - 1] = delta[n - 2];
    for (size_t i = 1; i + 1 < n; ++i) {
      if (delta[i - 1] * delta[i] <= 0)
        c.d[i] = 0;
      else {
        const double w1 = 2 * (xs[i + 1] - xs[i]) + (xs[i] - xs[i - 1]);
        const double w2 = (xs[i + 1] - xs[i]) + 2 * (xs[i] - xs[i - 1]);
        c.d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
      }
    }
    return c;
  }

  void eval(double t, double& v, double& dv) const {
    const size_t n = x.size();
    auto it = std::upper_bound(x.begin(), x.end(), t);
    size_t i = std::min<size_t>(std::max<ptrdiff_t>(it - x.begin() - 1, 0), n - 2);
    const double h = x[i + 1] - x[i];
    const double s = (t - x[i]) / h;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
    v = h00 * y[i] + h * h10 * d[i] + h01 * y[i + 1] + h * h11 * d[i + 1];
    const double g00 = 6 * s * (s - 1), g10 = (1 - s) * (1 - 3 * s);
    const double g01 = -g00, g11 = s * (3 * s - 2);
    dv = (g00 * y[i] + g01 * y[i + 1]) / h + g10 * d[i] + g11 * d[i + 1];
  }
};

}  // namespace

PdmpModel renewal_model_tabulated(const std::vector<double>& tau, const std::vector<double>& p) {
  require(tau.size() == p.size() && tau.size() >= 3, ErrorCode::InvalidArgument,
          "survival table needs at least three (tau, P) pairs");
  require(tau.front() == 0.0 && std::abs(p.front() - 1.0) <= 1e-12, ErrorCode::InvalidArgument,
          "survival table must start at (0, 1)");
  for (size_t i = 0; i + 1 < tau.size(); ++i) {
    require(tau[i + 1] > tau[i], ErrorCode::InvalidArgument, "tau values must increase");
    require(p[i + 1] < p[i] && p[i + 1] > 0, ErrorCode::InvalidArgument,
            "survival values must be strictly decreasing and positive (differentiable hazard)");
  }
  auto cubic = std::make_shared<MonotoneCubic>(MonotoneCubic::fit(tau, p));
  const double t_last = tau.back(), p_last = p.back();
  double v, dv;
  cubic->eval(t_last, v, dv);
  const double h_last = std::max(-dv / v, 1e-12);  // constant-hazard tail beyond the table

  auto surv = [cubic, t_last, p_last, h_last](double t) {
    if (t >= t_last) return p_last * std::exp(-h_last * (t - t_last));
    double vv, dd;
    cubic->eval(t, vv, dd);
    return vv;
  };
  auto haz = [cubic, t_last, h_last](double t) {
    if (t >= t_last) return h_last;
    double vv, dd;
    cubic->eval(t, vv, dd);
    return vv > 0 ? -dd / vv : h_last;
  };
  return renewal_model(surv, haz, t_last);
}

// ---------------------------------------------------------------------------
// Standard CTMC inputs
// ---------------------------------------------------------------------------

CtmcInput telegraph_input(const RandomTelegraphParams& p) {
  const TelegraphDerived d = telegraph_derived(p);
  CtmcInput in;
  in.states = {"off", "on"};
  in.generator = {{-p.k1, p.k1}, {p.k2, -p.k2}};
  in.rates = {p.lambda0, d.lambda1};
  return in;
}

CtmcInput donsoff_input(const DonsoffParams& p) {
  CtmcInput in;
  in.states = {"on1", "on2", "off"};
  in.generator = {{-p.alpha11, p.alpha11, 0.0},
                  {0.0, -p.alpha10, p.alpha10},
                  {p.alpha01, 0.0, -p.alpha01}};
  in.rates = {p.c, p.c, 0.0};
  return in;
}

CtmcInput birth_death_input(double mu, double gamma, double c, int truncation) {
  check_positive(mu, "mu");
  check_positive(gamma, "gamma");
  check_positive(c, "c");
  int K = truncation > 0 ? truncation
                         : static_cast<int>(std::ceil(mu + 12 * std::sqrt(mu) + 20));
  CtmcInput in;
  in.states.resize(K + 1);
  in.rates.resize(K + 1);
  in.generator.assign(K + 1, std::vector<double>(K + 1, 0.0));
  for (int x = 0; x <= K; ++x) {
    in.states[x] = std::to_string(x);
    in.rates[x] = c * x;
    double out = 0;
    if (x < K) {
      in.generator[x][x + 1] = gamma * mu;
      out += gamma * mu;
    }
    if (x > 0) {
      in.generator[x][x - 1] = gamma * x;
      out += gamma * x;
    }
    in.generator[x][x] = -out;
  }
  return in;
}

}  // namespace acid
