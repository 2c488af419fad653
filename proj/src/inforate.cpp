#include "inforate.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace acid {

namespace {

double phi_prime(double z) { return std::log(z) + 1.0; }

struct TelegraphRoots {
  double w1, w2, dw;
};

TelegraphRoots normalized_roots(double K1, double K2) {
  const double b = K1 + K2 + 1.0;
  const double disc = std::sqrt(b * b - 4 * K1);
  return {2 * K1 / (b + disc), (b + disc) / 2, disc};
}

void check_rt(const RandomTelegraphParams& p) {
  require(p.lambda0 == 0.0, ErrorCode::InvalidArgument,
          "closed-form telegraph analysis requires lambda0 == 0");
  require(p.k1 > 0 && p.k2 > 0 && p.c > 0, ErrorCode::InvalidArgument,
          "telegraph rates and gain must be positive");
}

// Joint sensitivity integration at normalized rates (K1, K2); the `c`
// prefactor enters only through the initial values. Returns saturation
// values of (J, J1, J2) = (rate, d1, d2).
RtAnalysis rt_core(double K1, double K2, double c) {
  const TelegraphRoots r = normalized_roots(K1, K2);
  ode::Rhs rhs = [K1, K2](double, const double* y, double* dy) {
    const double rho = y[0], pi = y[1];
    const double rho1 = y[3], pi1 = y[4];
    const double rho2 = y[6], pi2 = y[7];
    const double a = K1 + K2 + 1.0;
    dy[0] = -pi * rho;
    dy[1] = K1 - a * pi + pi * pi;
    dy[2] = -phi(pi) * rho;
    dy[3] = -pi1 * rho - pi * rho1;
    dy[4] = 1.0 - pi - a * pi1 + 2.0 * pi * pi1;
    dy[5] = -phi_prime(pi) * pi1 * rho - phi(pi) * rho1;
    dy[6] = -pi2 * rho - pi * rho2;
    dy[7] = -pi - a * pi2 + 2.0 * pi * pi2;
    dy[8] = -phi_prime(pi) * pi2 * rho - phi(pi) * rho2;
  };
  const double s = K1 + K2;
  std::vector<double> y0 = {c * K1 / s, 1.0, 0.0, c * K2 / (s * s), 0.0,
                            0.0,        -c * K1 / (s * s), 0.0, 0.0};
  const double scale = std::max({std::abs(y0[0]), std::abs(y0[3]), std::abs(y0[6]), 1e-6});
  ode::Options opt;
  opt.rel_tol = 1e-11;
  opt.abs_tol = 1e-14;
  auto observer = [scale](const ode::DenseStep& step) {
    const double* y = step.y1();
    return std::abs(y[0]) + std::abs(y[3]) + std::abs(y[6]) > 1e-15 * scale;
  };
  const double horizon = std::min(4000.0, std::max(200.0, 40.0 / r.w1));
  auto y = ode::Dopri5(9, rhs, opt).integrate(0.0, y0, horizon, observer);
  return {y[2], y[5], y[8], 0.0};
}

}  // namespace

double rt_closed_form_rate(const RandomTelegraphParams& p) {
  check_rt(p);
  const double K1 = p.k1 / p.c, K2 = p.k2 / p.c;
  const TelegraphRoots r = normalized_roots(K1, K2);
  const double ratio = (1.0 - r.w1) / (r.w2 - 1.0);
  auto integrand = [&](double t) {
    const double pi = r.w2 - r.dw / (1.0 + ratio * std::exp(-r.dw * t));
    const double surv = std::exp(-r.w1 * t) * (r.w2 - 1.0) / r.dw +
                        std::exp(-r.w2 * t) * (1.0 - r.w1) / r.dw;
    return phi(pi) * surv;
  };
  // adaptive Simpson with an exponential tail cutoff
  const double horizon = std::min(4000.0, std::max(80.0, 38.0 / r.w1));
  struct Simpson {
    const std::function<double(double)>& f;
    double recurse(double a, double b, double fa, double fm, double fb, double whole, double tol,
                   int depth) const {
      const double m = 0.5 * (a + b);
      const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
      const double flm = f(lm), frm = f(rm);
      const double left = (m - a) / 6 * (fa + 4 * flm + fm);
      const double right = (b - m) / 6 * (fm + 4 * frm + fb);
      if (depth <= 0 || std::abs(left + right - whole) < 15 * tol)
        return left + right + (left + right - whole) / 15;
      return recurse(a, m, fa, flm, fm, left, tol / 2, depth - 1) +
             recurse(m, b, fm, frm, fb, right, tol / 2, depth - 1);
    }
  };
  std::function<double(double)> f = integrand;
  Simpson simpson{f};
  // split at a few scales so the initial transient is resolved
  double total = 0;
  double a = 0;
  for (double b : {1.0, 4.0, 16.0, 64.0, horizon}) {
    if (b <= a || a >= horizon) continue;
    b = std::min(b, horizon);
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6 * (fa + 4 * fm + fb);
    total += simpson.recurse(a, b, fa, fm, fb, whole, 1e-13, 48);
    a = b;
  }
  const double p0 = p.c * K1 / (K1 + K2);
  return -p0 * total;
}

RtAnalysis rt_analyze(const RandomTelegraphParams& p) {
  check_rt(p);
  const double K1 = p.k1 / p.c, K2 = p.k2 / p.c;
  RtAnalysis res = rt_core(K1, K2, p.c);
  // gain derivative from the scaling identity at the normalized point
  const RtAnalysis unit = p.c == 1.0 ? res : rt_core(K1, K2, 1.0);
  res.d3 = unit.rate - K1 * unit.d1 - K2 * unit.d2;
  return res;
}

std::pair<double, double> rt_partial_derivatives(const RandomTelegraphParams& p) {
  const RtAnalysis a = rt_analyze(p);
  return {a.d1, a.d2};
}

double rt_gain_derivative(const RandomTelegraphParams& p) {
  check_rt(p);
  const double K1 = p.k1 / p.c, K2 = p.k2 / p.c;
  const TelegraphRoots r = normalized_roots(K1, K2);
  // gain sensitivity of E[phi(Z)] at c = 1, by differentiating the flow
  ode::Rhs rhs = [K1, K2](double, const double* y, double* dy) {
    const double rho = y[0], pi = y[1], v = y[3], rhoc = y[4];
    const double a = K1 + K2 + 1.0;
    dy[0] = -pi * rho;
    dy[1] = K1 - a * pi + pi * pi;
    dy[2] = -phi(pi) * rho;
    dy[3] = -K1 + (K1 + K2) * pi + (2.0 * pi - a) * v;
    dy[4] = -v * rho - pi * rhoc;
    dy[5] = phi_prime(pi) * v * rho + phi(pi) * rhoc;
  };
  std::vector<double> y0 = {K1 / (K1 + K2), 1.0, 0.0, 0.0, 0.0, 0.0};
  ode::Options opt;
  opt.rel_tol = 1e-11;
  opt.abs_tol = 1e-14;
  auto observer = [](const ode::DenseStep& step) {
    const double* y = step.y1();
    return std::abs(y[0]) + std::abs(y[4]) > 1e-16;
  };
  const double horizon = std::min(4000.0, std::max(200.0, 40.0 / r.w1));
  auto y = ode::Dopri5(6, rhs, opt).integrate(0.0, y0, horizon, observer);
  return y[2] - y[5];  // I(K,1) - d/dc E[phi(Z)]
}

// ---------------------------------------------------------------------------
// information rate from the boundary density
// ---------------------------------------------------------------------------

MiRateResult mi_rate(const PdmpModel& model, const InputLaw& input, const Partition& partition,
                     const BoundaryDensity& density, const SolverOptions& opt) {
  const long n = partition.cell_count();
  require(static_cast<long>(density.values.size()) == n, ErrorCode::InvalidArgument,
          "boundary density does not match partition");

  SojournIntegrator::Config cfg;
  cfg.ode = opt.ode;
  cfg.eps_tail = opt.eps_tail;
  cfg.tau_max = opt.tau_max;
  cfg.want_phi_integral = true;
  SojournIntegrator integ(cfg);

  const int reps = partition.reps_per_cell();
  const double w = partition.cell_volume();

  std::vector<double> out_j(n, 0.0), bound_j(n, 0.0);
  parallel_for(n, opt.threads, [&](long j) {
    std::vector<double> theta(std::max(partition.dims(), 1));
    double acc = 0, bound = 0;
    for (int r = 0; r < reps; ++r) {
      partition.representative(j, r, theta.data());
      auto res = integ.run(model, theta.data());
      acc += res.phi_integral_end;
      const double m_end = model.intensity(res.state_end.data());
      if (model.rate_floor > 0) {
        bound += std::max(phi(res.max_intensity), std::exp(-1.0)) * res.survival_end /
                 model.rate_floor;
      } else {
        bound += std::abs(phi(std::max(m_end, 1e-12))) * res.survival_end /
                 std::max(m_end, 1e-12);
      }
    }
    out_j[j] = density.values[j] * w * acc / reps;
    bound_j[j] = density.values[j] * w * bound / reps;
  });

  MiRateResult res;
  res.input_term = input.phi_mean;
  for (long j = 0; j < n; ++j) {
    res.output_term += out_j[j];
    res.truncation_error_bound += bound_j[j];
  }
  res.rate = res.input_term - res.output_term;
  res.rate_floor_missing = model.rate_floor <= 0;
  return res;
}

MiRateResult mi_rate_pipeline(const PdmpModel& model, const InputLaw& input, long cells,
                              int reps, const SolverOptions& opt) {
  const Partition part = make_partition(model, cells, reps, opt);
  const BoundaryMatrix matrix = build_boundary_matrix(model, part, opt);
  const double norm = normalization_constant(model, opt);
  const BoundaryDensity density =
      solve_boundary_density(matrix, opt.squarings, norm, opt.fixed_point_tol);
  return mi_rate(model, input, part, density, opt);
}

// ---------------------------------------------------------------------------
// nullclines and the phase plane (c = 1)
// ---------------------------------------------------------------------------

namespace {

RtAnalysis analyze_unit(double k1, double k2) {
  return rt_analyze({k1, k2, 1.0, 0.0});
}

double partial(int which, double k1, double k2) {
  const RtAnalysis a = analyze_unit(k1, k2);
  return which == 1 ? a.d1 : a.d2;
}

// Brent-style root of f on [a, b] with f(a) f(b) < 0.
double brent_root(const std::function<double(double)>& f, double a, double b, double tol) {
  double fa = f(a), fb = f(b);
  require(fa * fb <= 0, ErrorCode::LostNullcline, "root not bracketed");
  return ode::refine_crossing(f, a, b, fa, fb, tol);
}

// Richardson-extrapolated central difference with base step h.
double central_diff(const std::function<double(double)>& f, double x, double h) {
  const double d1 = (f(x + h) - f(x - h)) / (2 * h);
  const double d2 = (f(x + h / 2) - f(x - h / 2)) / h;
  return (4 * d2 - d1) / 3;
}

}  // namespace

double nullcline_bisection_crossing(int which, double k_lo, double k_hi) {
  require(which == 1 || which == 2, ErrorCode::InvalidArgument, "which must be 1 or 2");
  auto f = [which](double k) { return partial(which, k, k); };
  return brent_root(f, k_lo, k_hi, 1e-8);
}

std::vector<NullclinePoint> trace_nullcline(int which, double k1_start, double k1_end, int steps,
                                            double k2_hint, double tol) {
  require(which == 1 || which == 2, ErrorCode::InvalidArgument, "which must be 1 or 2");
  require(steps >= 1, ErrorCode::InvalidArgument, "need at least one step");
  std::vector<NullclinePoint> out;
  double k2 = k2_hint;
  for (int i = 0; i <= steps; ++i) {
    const double k1 = k1_start + (k1_end - k1_start) * i / steps;
    auto f = [which, k1](double y) { return partial(which, k1, y); };
    // expand a bracket around the previous solution
    double lo = std::max(1e-4, k2 * 0.7 - 0.02), hi = k2 * 1.4 + 0.02;
    double flo = f(lo), fhi = f(hi);
    int grow = 0;
    while (flo * fhi > 0 && grow++ < 12) {
      lo = std::max(1e-5, lo * 0.6);
      hi = hi * 1.5 + 0.02;
      flo = f(lo);
      fhi = f(hi);
    }
    require(flo * fhi <= 0, ErrorCode::LostNullcline,
            "nullcline lost near k1 = " + std::to_string(k1));
    k2 = ode::refine_crossing(f, lo, hi, flo, fhi, tol);
    out.push_back({k1, k2});
  }
  return out;
}

double nullcline_slope(double k1, double k2) {
  const double h = 1e-3;
  auto d1k1 = [k2](double x) { return partial(1, x, k2); };
  auto d1k2 = [k1](double y) { return partial(1, k1, y); };
  const double d11 = central_diff(d1k1, k1, h);
  const double d12 = central_diff(d1k2, k2, h);
  require(d12 != 0, ErrorCode::LostNullcline, "implicit function derivative is singular");
  return -d11 / d12;
}

double nullcline_convexity(double k1, double k2) {
  const double h = 1e-3;
  auto d1 = [](double x, double y) { return partial(1, x, y); };
  const double d11 = central_diff([&](double x) { return d1(x, k2); }, k1, h);
  const double d12 = central_diff([&](double y) { return d1(k1, y); }, k2, h);
  // third-order partials by second differences of the sensitivity output
  const double h2 = 2e-3;
  const double d111 =
      (d1(k1 + h2, k2) - 2 * d1(k1, k2) + d1(k1 - h2, k2)) / (h2 * h2);
  const double d122 =
      (d1(k1, k2 + h2) - 2 * d1(k1, k2) + d1(k1, k2 - h2)) / (h2 * h2);
  const double d112 = (d1(k1 + h2, k2 + h2) - d1(k1 + h2, k2 - h2) - d1(k1 - h2, k2 + h2) +
                       d1(k1 - h2, k2 - h2)) /
                      (4 * h2 * h2);
  require(d12 != 0, ErrorCode::LostNullcline, "implicit function derivative is singular");
  return 2 * d11 * d112 / (d12 * d12) - d111 / d12 - d11 * d11 * d122 / (d12 * d12 * d12);
}

PhasePlaneReport phase_plane(double k1_max, double k2_max, int n1, int n2, bool classify_corner,
                             bool with_nullclines, int threads) {
  require(k1_max > 0 && k2_max > 0 && n1 >= 1 && n2 >= 1, ErrorCode::InvalidArgument,
          "invalid phase plane grid");
  PhasePlaneReport rep;
  rep.grid.resize(static_cast<size_t>(n1) * n2);
  parallel_for(static_cast<long>(n1) * n2, threads, [&](long idx) {
    const int i = static_cast<int>(idx / n2);
    const int j = static_cast<int>(idx % n2);
    const double k1 = k1_max * (i + 1) / n1;
    const double k2 = k2_max * (j + 1) / n2;
    const RtAnalysis a = analyze_unit(k1, k2);
    char region = '?';
    if (a.d1 > 0 && a.d2 < 0) region = 'A';
    if (a.d1 > 0 && a.d2 > 0) region = 'B';
    if (a.d1 < 0 && a.d2 > 0) region = 'C';
    rep.grid[idx] = {k1, k2, a.rate, a.d1, a.d2, region};
  });

  if (classify_corner) {
    const RtAnalysis corner = analyze_unit(k1_max, k2_max);
    rep.has_optimum = true;
    if (corner.d1 > 0 && corner.d2 > 0) {
      rep.optimum = {k1_max, k2_max, "corner"};
    } else if (corner.d1 > 0) {  // region A: interior in k2
      auto f = [k1_max](double y) { return partial(2, k1_max, y); };
      rep.optimum = {k1_max, brent_root(f, 1e-3, k2_max, 1e-7), "k1_boundary"};
    } else {  // region C: interior in k1
      auto f = [k2_max](double x) { return partial(1, x, k2_max); };
      rep.optimum = {brent_root(f, 1e-3, k1_max, 1e-7), k2_max, "k2_boundary"};
    }
  }

  if (with_nullclines) {
    // start each trace at the bisection crossing when it lies in the box
    for (int which : {1, 2}) {
      try {
        const double kc = nullcline_bisection_crossing(which, 0.05,
                                                       std::min(0.9, std::max(k1_max, k2_max)));
        if (kc < k1_max) {
          auto line = trace_nullcline(which, kc, k1_max, std::max(8, n1), kc);
          (which == 1 ? rep.nullcline1 : rep.nullcline2) = std::move(line);
        }
      } catch (const Error&) {
        // no crossing inside the box; leave the polyline empty
      }
    }
  }
  return rep;
}

}  // namespace acid
