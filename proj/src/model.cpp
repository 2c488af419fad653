#include "model.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace acid {

namespace {

// Evaluates one observable from a full state vector. `post` and `theta_buf`
// are scratch areas of state_dim and stat_dim doubles.
double eval_observable(const PdmpModel& model, const Observable& obs, const double* x,
                       double* post, double* theta_buf) {
  switch (obs.kind) {
    case ObservableKind::StateComponent:
      return x[obs.index];
    case ObservableKind::Intensity:
      return model.intensity(x);
    case ObservableKind::TargetComponent: {
      model.jump_update(x, post);
      model.truncate(post, theta_buf);
      return theta_buf[obs.index];
    }
  }
  return 0;
}

}  // namespace

double SojournIntegrator::horizon_for(const PdmpModel& model, const Config& cfg) {
  const double rate = model.tail_rate_hint > 0 ? model.tail_rate_hint : model.rate_floor;
  if (rate <= 0) return cfg.tau_max;
  const double needed = 1.5 * (-std::log(cfg.eps_tail)) / rate;
  return std::max(cfg.tau_max, needed);
}

SojournIntegrator::Result SojournIntegrator::run(const PdmpModel& model, const double* theta,
                                                 const std::vector<LevelSet>& level_sets) const {
  const int nx = model.state_dim;
  const int ip = nx;                                      // survival component
  const int ic = cfg_.want_time_integral ? nx + 1 : -1;   // time integral
  const int ij = cfg_.want_phi_integral ? (ic > 0 ? nx + 2 : nx + 1) : -1;
  const int dim = nx + 1 + (ic > 0 ? 1 : 0) + (ij > 0 ? 1 : 0);

  ode::Rhs rhs = [&model, nx, ip, ic, ij](double, const double* y, double* dy) {
    model.flow(y, dy);
    const double m = model.intensity(y);
    dy[ip] = -m * y[ip];
    if (ic >= 0) dy[ic] = y[ip];
    if (ij >= 0) dy[ij] = phi(m) * y[ip];
  };

  std::vector<double> y0(dim, 0.0);
  model.extend(theta, y0.data());
  y0[ip] = 1.0;

  Result res;
  res.max_intensity = model.intensity(y0.data());
  res.state_end.resize(nx);

  std::vector<double> post(nx), theta_buf(std::max(model.stat_dim, 1));
  std::vector<double> ysb(dim), yref(dim), guard(nx);
  const int nsets = static_cast<int>(level_sets.size());
  std::vector<double> prev_obs(nsets), cur_obs(nsets);
  for (int s = 0; s < nsets; ++s)
    prev_obs[s] = eval_observable(model, level_sets[s].observable, y0.data(), post.data(),
                                  theta_buf.data());

  const int q = std::max(1, cfg_.ode.scan_points);
  std::vector<Crossing> step_hits;

  auto observer = [&](const ode::DenseStep& step) -> bool {
    step_hits.clear();
    for (int j = 1; j <= q; ++j) {
      const double ta = step.t0() + step.h() * (j - 1) / q;
      const double tb = step.t0() + step.h() * j / q;
      step.eval(tb, ysb.data());
      for (int s = 0; s < nsets; ++s) {
        const auto& ls = level_sets[s];
        const double va = prev_obs[s];
        const double vb =
            eval_observable(model, ls.observable, ysb.data(), post.data(), theta_buf.data());
        prev_obs[s] = vb;
        if (va == vb) continue;
        const auto& edges = *ls.edges;
        const double lo = std::min(va, vb), hi = std::max(va, vb);
        auto first = std::upper_bound(edges.begin(), edges.end(), lo);
        auto last = std::lower_bound(edges.begin(), edges.end(), hi);
        const int dir = vb > va ? +1 : -1;
        for (auto it = first; it != last; ++it) {
          const double level = *it;
          auto fn = [&](double t) {
            step.eval(t, yref.data());
            return eval_observable(model, ls.observable, yref.data(), post.data(),
                                   theta_buf.data()) -
                   level;
          };
          const double tc =
              ode::refine_crossing(fn, ta, tb, va - level, vb - level, cfg_.ode.event_tol);
          Crossing c;
          c.tau = tc;
          c.level_set = s;
          c.edge = static_cast<int>(it - edges.begin());
          c.direction = dir;
          c.survival = step.eval_component(tc, ip);
          c.time_integral = ic >= 0 ? step.eval_component(tc, ic) : 0.0;
          step_hits.push_back(c);
        }
      }
    }
    if (!step_hits.empty()) {
      std::sort(step_hits.begin(), step_hits.end(),
                [](const Crossing& a, const Crossing& b) { return a.tau < b.tau; });
      res.crossings.insert(res.crossings.end(), step_hits.begin(), step_hits.end());
    }

    const double* y1 = step.y1();
    res.tau_end = step.t1();
    res.max_intensity = std::max(res.max_intensity, model.intensity(y1));
    if (model.admissible) {
      std::copy(y1, y1 + nx, guard.begin());
      require(model.admissible(guard.data()), ErrorCode::NonFiniteState,
              model.name + ": state left the admissible region");
    }
    return y1[ip] >= cfg_.eps_tail;  // stop once the survival factor is negligible
  };

  const double horizon = horizon_for(model, cfg_);
  std::vector<double> yend = ode::Dopri5(dim, rhs, cfg_.ode).integrate(0.0, y0, horizon, observer);

  std::copy(yend.begin(), yend.begin() + nx, res.state_end.begin());
  res.survival_end = yend[ip];
  res.time_integral_end = ic >= 0 ? yend[ic] : 0.0;
  res.phi_integral_end = ij >= 0 ? yend[ij] : 0.0;
  res.hit_tau_max = res.survival_end >= cfg_.eps_tail;
  return res;
}

FlowTrajectory integrate_flow(const PdmpModel& model, const std::vector<double>& theta,
                              double tau_max, const std::vector<CrossingQuery>& levels,
                              const ode::Options& opt) {
  require(tau_max >= 0, ErrorCode::InvalidArgument, "tau_max must be nonnegative");
  require(static_cast<int>(theta.size()) == model.stat_dim, ErrorCode::InvalidArgument,
          "theta has wrong dimension");

  FlowTrajectory traj;
  traj.theta = theta;
  std::vector<double> x0 = model.extended(theta.data());
  traj.taus.push_back(0.0);
  traj.states.push_back(x0);
  if (tau_max == 0) return traj;

  const int nx = model.state_dim;
  ode::Rhs rhs = [&model](double, const double* y, double* dy) { model.flow(y, dy); };

  std::vector<double> prev(levels.size());
  for (size_t i = 0; i < levels.size(); ++i) prev[i] = x0[levels[i].component] - levels[i].level;

  std::vector<double> ys(nx), tmp(nx);
  auto observer = [&](const ode::DenseStep& step) -> bool {
    const int q = std::max(1, opt.scan_points);
    for (int j = 1; j <= q; ++j) {
      const double ta = step.t0() + step.h() * (j - 1) / q;
      const double tb = step.t0() + step.h() * j / q;
      for (size_t i = 0; i < levels.size(); ++i) {
        const double vb = step.eval_component(tb, levels[i].component) - levels[i].level;
        if (prev[i] != 0 && vb != 0 && (prev[i] < 0) != (vb < 0)) {
          auto fn = [&](double t) {
            return step.eval_component(t, levels[i].component) - levels[i].level;
          };
          const double tc = ode::refine_crossing(fn, ta, tb, prev[i], vb, opt.event_tol);
          traj.events.push_back({tc, static_cast<int>(i), vb > prev[i] ? +1 : -1});
        }
        prev[i] = vb;
      }
    }
    traj.taus.push_back(step.t1());
    const double* y1 = step.y1();
    traj.states.emplace_back(y1, y1 + nx);
    if (model.admissible) {
      std::copy(y1, y1 + nx, tmp.begin());
      require(model.admissible(tmp.data()), ErrorCode::NonFiniteState,
              model.name + ": state left the admissible region");
    }
    return true;
  };

  ode::Dopri5(nx, rhs, opt).integrate(0.0, x0, tau_max, observer);
  std::sort(traj.events.begin(), traj.events.end(),
            [](const FlowTrajectory::Crossing& a, const FlowTrajectory::Crossing& b) {
              return a.tau < b.tau;
            });
  return traj;
}

SurvivalCurve survival(const PdmpModel& model, const std::vector<double>& theta, double tau_max,
                       const ode::Options& opt) {
  require(static_cast<int>(theta.size()) == model.stat_dim, ErrorCode::InvalidArgument,
          "theta has wrong dimension");
  SurvivalCurve curve;
  curve.theta = theta;

  const int nx = model.state_dim;
  ode::Rhs rhs = [&model, nx](double, const double* y, double* dy) {
    model.flow(y, dy);
    dy[nx] = -model.intensity(y) * y[nx];
  };
  std::vector<double> y0 = model.extended(theta.data());
  y0.push_back(1.0);
  curve.taus.push_back(0.0);
  curve.values.push_back(1.0);
  auto observer = [&](const ode::DenseStep& step) -> bool {
    curve.taus.push_back(step.t1());
    curve.values.push_back(step.y1()[nx]);
    return true;
  };
  ode::Dopri5(nx + 1, rhs, opt).integrate(0.0, y0, tau_max, observer);
  return curve;
}

double conditional_intensity(const PdmpModel& model, const std::vector<double>& theta, double tau,
                             const ode::Options& opt) {
  require(tau >= 0, ErrorCode::InvalidArgument, "tau must be nonnegative");
  if (model.analytic.intensity) return model.analytic.intensity(tau, theta.data());
  std::vector<double> x = model.extended(theta.data());
  if (tau > 0) {
    ode::Rhs rhs = [&model](double, const double* y, double* dy) { model.flow(y, dy); };
    x = ode::Dopri5(model.state_dim, rhs, opt).integrate(0.0, x, tau);
  }
  return model.intensity(x.data());
}

std::vector<double> jump_target(const PdmpModel& model, const std::vector<double>& theta,
                                double tau, const ode::Options& opt) {
  require(tau >= 0, ErrorCode::InvalidArgument, "tau must be nonnegative");
  std::vector<double> x = model.extended(theta.data());
  if (tau > 0) {
    if (model.analytic.flow_solution) {
      std::vector<double> xt(model.state_dim);
      model.analytic.flow_solution(tau, x.data(), xt.data());
      x = std::move(xt);
    } else {
      ode::Rhs rhs = [&model](double, const double* y, double* dy) { model.flow(y, dy); };
      x = ode::Dopri5(model.state_dim, rhs, opt).integrate(0.0, x, tau);
    }
  }
  std::vector<double> post(model.state_dim), th(std::max(model.stat_dim, 1));
  model.jump_update(x.data(), post.data());
  model.truncate(post.data(), th.data());
  th.resize(model.stat_dim);
  return th;
}

}  // namespace acid
