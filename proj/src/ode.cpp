#include "ode.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "errors.hpp"

namespace acid::ode {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
// Error coefficients (5th minus embedded 4th order).
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// Dense-output coefficients.
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

bool all_finite(const double* v, int n) {
  for (int i = 0; i < n; ++i)
    if (!std::isfinite(v[i])) return false;
  return true;
}

}  // namespace

void DenseStep::eval(double t, double* y_out) const {
  const double h = t1_ - t0_;
  const double th = h != 0 ? (t - t0_) / h : 0.0;
  const double th1 = 1.0 - th;
  for (int i = 0; i < dim_; ++i) {
    y_out[i] = rcont_[0][i] +
               th * (rcont_[1][i] + th1 * (rcont_[2][i] + th * (rcont_[3][i] + th1 * rcont_[4][i])));
  }
}

double DenseStep::eval_component(double t, int i) const {
  const double h = t1_ - t0_;
  const double th = h != 0 ? (t - t0_) / h : 0.0;
  const double th1 = 1.0 - th;
  return rcont_[0][i] +
         th * (rcont_[1][i] + th1 * (rcont_[2][i] + th * (rcont_[3][i] + th1 * rcont_[4][i])));
}

Dopri5::Dopri5(int dim, Rhs rhs, Options opt) : dim_(dim), rhs_(std::move(rhs)), opt_(opt) {
  require(dim > 0, ErrorCode::InvalidArgument, "ODE dimension must be positive");
}

std::vector<double> Dopri5::integrate(double t0, std::vector<double> y0, double t_end,
                                      const StepObserver& observer) {
  require(static_cast<int>(y0.size()) == dim_, ErrorCode::InvalidArgument,
          "initial state has wrong dimension");
  require(t_end >= t0, ErrorCode::InvalidArgument, "t_end must be >= t0");
  if (t_end == t0) return y0;

  const int n = dim_;
  std::vector<double> y = std::move(y0);
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n);

  rhs_(t0, y.data(), k1.data());
  require(all_finite(k1.data(), n), ErrorCode::NonFiniteState,
          "non-finite derivative at initial state");

  double t = t0;
  double h = opt_.h_init;
  if (h <= 0) {
    // crude automatic start: limit first step by |y'|/|y| scale
    double dn = 0, yn = 0;
    for (int i = 0; i < n; ++i) {
      dn = std::max(dn, std::abs(k1[i]));
      yn = std::max(yn, std::abs(y[i]));
    }
    h = 0.01 * (yn + 1.0) / (dn + 1.0);
  }
  h = std::min({h, opt_.h_max, t_end - t});

  DenseStep ds;
  ds.dim_ = n;
  for (auto& r : ds.rcont_) r.resize(n);
  ds.rcont_[0].resize(2 * n);

  long steps = 0;
  bool fsal_valid = true;  // k1 currently holds f(t, y)
  while (t < t_end) {
    require(++steps <= opt_.max_steps, ErrorCode::NotConverged,
            "ODE step budget exhausted");
    if (!fsal_valid) rhs_(t, y.data(), k1.data());
    if (t + h * 1.0001 >= t_end) h = t_end - t;

    for (int i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
    rhs_(t + c2 * h, ytmp.data(), k2.data());
    for (int i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    rhs_(t + c3 * h, ytmp.data(), k3.data());
    for (int i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs_(t + c4 * h, ytmp.data(), k4.data());
    for (int i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    rhs_(t + c5 * h, ytmp.data(), k5.data());
    for (int i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    rhs_(t + h, ytmp.data(), k6.data());
    for (int i = 0; i < n; ++i)
      ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    rhs_(t + h, ynew.data(), k7.data());

    // error norm
    double err = 0;
    for (int i = 0; i < n; ++i) {
      const double sk =
          opt_.abs_tol + opt_.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      const double ei =
          h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double q = ei / sk;
      err += q * q;
    }
    err = std::sqrt(err / n);

    if (!std::isfinite(err) || !all_finite(ynew.data(), n)) {
      // retry with a smaller step before giving up
      h *= 0.25;
      fsal_valid = true;
      require(h > 1e-300 * std::max(1.0, std::abs(t)), ErrorCode::NonFiniteState,
              "state became non-finite during integration");
      continue;
    }

    if (err <= 1.0) {
      // accept: build dense output, notify, advance
      ds.t0_ = t;
      ds.t1_ = t + h;
      for (int i = 0; i < n; ++i) {
        const double dy = ynew[i] - y[i];
        const double bspl = h * k1[i] - dy;
        ds.rcont_[0][i] = y[i];
        ds.rcont_[0][n + i] = ynew[i];
        ds.rcont_[1][i] = dy;
        ds.rcont_[2][i] = bspl;
        ds.rcont_[3][i] = dy - h * k7[i] - bspl;
        ds.rcont_[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                               d6 * k6[i] + d7 * k7[i]);
      }
      t += h;
      std::swap(y, ynew);
      std::swap(k1, k7);  // FSAL
      fsal_valid = true;
      if (observer && !observer(ds)) break;
      const double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
      h = std::min({h * std::clamp(fac, 0.2, 10.0), opt_.h_max});
    } else {
      const double fac = 0.9 * std::pow(err, -0.2);
      h *= std::clamp(fac, 0.1, 0.9);
      // k1 still holds f(t, y)
    }
  }
  return y;
}

double refine_crossing(const std::function<double(double)>& f, double a, double b,
                       double fa, double fb, double tol) {
  require(fa == 0.0 || fb == 0.0 || (fa < 0) != (fb < 0), ErrorCode::EventToleranceNotMet,
          "crossing is not bracketed");
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  // bisection with a secant probe each iteration
  for (int it = 0; it < 200 && (b - a) > tol; ++it) {
    double m = 0.5 * (a + b);
    const double denom = fb - fa;
    if (denom != 0) {
      const double s = a - fa * (b - a) / denom;
      if (s > a + 0.1 * (b - a) && s < b - 0.1 * (b - a)) m = s;
    }
    const double fm = f(m);
    if (fm == 0.0) return m;
    if ((fm < 0) == (fa < 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
      fb = fm;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace acid::ode
