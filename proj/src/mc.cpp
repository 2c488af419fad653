#include "mc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "errors.hpp"

namespace acid {

namespace {

using Rng = std::mt19937_64;

double exp_draw(Rng& rng, double rate) {
  if (rate <= 0) return std::numeric_limits<double>::infinity();
  return std::exponential_distribution<double>(rate)(rng);
}

double uniform_draw(Rng& rng) { return std::uniform_real_distribution<double>(0, 1)(rng); }

int sample_discrete(Rng& rng, const std::vector<double>& weights) {
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double u = uniform_draw(rng) * total;
  for (size_t i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u <= 0) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

// One fixed-size RK4 step of the model flow.
void rk4_step(const PdmpModel& model, double h, std::vector<double>& x, double* k) {
  const int n = model.state_dim;
  double* k1 = k;
  double* k2 = k + n;
  double* k3 = k + 2 * n;
  double* k4 = k + 3 * n;
  double* xt = k + 4 * n;
  model.flow(x.data(), k1);
  for (int i = 0; i < n; ++i) xt[i] = x[i] + 0.5 * h * k1[i];
  model.flow(xt, k2);
  for (int i = 0; i < n; ++i) xt[i] = x[i] + 0.5 * h * k2[i];
  model.flow(xt, k3);
  for (int i = 0; i < n; ++i) xt[i] = x[i] + h * k3[i];
  model.flow(xt, k4);
  for (int i = 0; i < n; ++i) x[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
}

// Walks the marginal simulation sojourn by sojourn. on_segment(t0, t1, m0,
// m1, state) receives contiguous path segments no longer than dt, with the
// intensity at both ends and the state at the segment end (nullptr when only
// the closed-form intensity is tracked); on_event(t) fires at each jump.
template <typename SegmentFn, typename EventFn>
long walk_marginal(const PdmpModel& model, double horizon, Rng& rng,
                   std::vector<double> theta0, double dt, SegmentFn&& on_segment,
                   EventFn&& on_event) {
  const int nx = model.state_dim;
  std::vector<double> theta = std::move(theta0);
  if (static_cast<int>(theta.size()) != model.stat_dim) {
    theta.assign(std::max(model.stat_dim, 1), 0.0);
    if (model.stat_dim > 0) {
      // reset statistic reached by an immediate jump from the typical state
      std::vector<double> post(nx);
      model.jump_update(model.typical_state.data(), post.data());
      model.truncate(post.data(), theta.data());
    }
  }

  const bool analytic = model.monotone_decreasing && static_cast<bool>(model.analytic.intensity) &&
                        static_cast<bool>(model.analytic.flow_solution);
  std::vector<double> x(nx), x_prev(nx), post(nx), scratch(5 * nx);
  long truncated = 0;
  double t = 0;
  const double sojourn_cap =
      std::max(2000.0, 200.0 / std::max(model.tail_rate_hint, 1e-6));

  // emits [tau_a, tau_b] of the current sojourn in dt-sized slices
  auto emit_analytic = [&](double tau_a, double tau_b) {
    double a = tau_a;
    double ma = model.analytic.intensity(a, theta.data());
    while (a < tau_b) {
      const double b = std::min(a + dt, tau_b);
      const double mb = model.analytic.intensity(b, theta.data());
      on_segment(t + a, t + b, ma, mb, static_cast<const double*>(nullptr));
      a = b;
      ma = mb;
    }
  };

  while (t < horizon) {
    double tau = 0;
    bool jumped = false;
    if (analytic) {
      // thinning with the running value as bound (intensity decreases)
      double bound = model.analytic.intensity(0.0, theta.data());
      while (!jumped && tau < sojourn_cap && t + tau < horizon) {
        if (bound <= 0) break;
        const double e = exp_draw(rng, bound);
        const double tau_next = tau + e;
        const double m_next = model.analytic.intensity(tau_next, theta.data());
        emit_analytic(tau, std::min({tau_next, sojourn_cap, horizon - t}));
        tau = tau_next;
        if (tau >= sojourn_cap || t + tau >= horizon) break;
        if (uniform_draw(rng) * bound <= m_next) jumped = true;
        bound = m_next;
      }
      if (jumped) {
        model.extend(theta.data(), x.data());
        model.analytic.flow_solution(tau, x.data(), x_prev.data());
        model.jump_update(x_prev.data(), post.data());
        model.truncate(post.data(), theta.data());
      }
    } else {
      // hazard accumulation with fixed RK4 steps
      model.extend(theta.data(), x.data());
      double target = exp_draw(rng, 1.0);
      double hazard = 0;
      double m_prev = model.intensity(x.data());
      while (!jumped && tau < sojourn_cap && t + tau < horizon) {
        const double h = std::min({dt, sojourn_cap - tau, horizon - t - tau});
        x_prev = x;
        rk4_step(model, h, x, scratch.data());
        const double m_new = model.intensity(x.data());
        const double inc = 0.5 * h * (m_prev + m_new);
        if (hazard + inc >= target) {
          const double frac = inc > 0 ? (target - hazard) / inc : 1.0;
          // redo the partial step so the jump sees the state at the crossing
          x = x_prev;
          if (frac * h > 0) rk4_step(model, frac * h, x, scratch.data());
          const double m_j = model.intensity(x.data());
          on_segment(t + tau, t + tau + frac * h, m_prev, m_j, x.data());
          tau += frac * h;
          jumped = true;
          break;
        }
        on_segment(t + tau, t + tau + h, m_prev, m_new, x.data());
        hazard += inc;
        m_prev = m_new;
        tau += h;
      }
      if (jumped) {
        model.jump_update(x.data(), post.data());
        model.truncate(post.data(), theta.data());
      }
    }
    if (!jumped) {
      if (t + tau < horizon && tau >= sojourn_cap) {
        ++truncated;  // sojourn cut off; restart from the reset statistic
        t += tau;
        continue;
      }
      break;  // horizon reached
    }
    t += tau;
    if (t >= horizon) break;
    on_event(t);
  }
  return truncated;
}

double default_burn_in(const PdmpModel& model) {
  if (model.rate_floor > 0) return 50.0 / model.rate_floor;
  if (model.tail_rate_hint > 0) return std::min(500.0, 10.0 / model.tail_rate_hint);
  return 10.0;
}

Estimate mean_and_se(const std::vector<double>& v) {
  const long n = static_cast<long>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double se = n > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0;
  return {mean, se};
}

}  // namespace

uint64_t split_seed(uint64_t master, uint64_t index) {
  uint64_t z = master + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

EventPath simulate_mmpp(const CtmcInput& input, double horizon, uint64_t seed) {
  input.validate();
  require(horizon > 0, ErrorCode::InvalidArgument, "horizon must be positive");
  Rng rng(seed);
  const int ns = input.size();
  const double lam_max = *std::max_element(input.rates.begin(), input.rates.end());

  EventPath path;
  path.horizon = horizon;
  path.seed = seed;

  const auto pi = input.stationary();
  int x = sample_discrete(rng, pi);
  path.input_switch_times.push_back(0.0);
  path.input_states.push_back(x);

  auto exit_rate = [&](int s) { return -input.generator[s][s]; };
  double t = 0;
  double t_switch = t + exp_draw(rng, exit_rate(x));
  double t_prop = t + exp_draw(rng, lam_max);
  std::vector<double> w(ns);
  while (true) {
    const double next = std::min(t_switch, t_prop);
    if (next >= horizon) break;
    t = next;
    if (t_switch <= t_prop) {
      for (int y = 0; y < ns; ++y) w[y] = y == x ? 0.0 : input.generator[x][y];
      x = sample_discrete(rng, w);
      path.input_switch_times.push_back(t);
      path.input_states.push_back(x);
      t_switch = t + exp_draw(rng, exit_rate(x));
    } else {
      if (uniform_draw(rng) * lam_max <= input.rates[x]) path.jump_times.push_back(t);
      t_prop = t + exp_draw(rng, lam_max);
    }
  }
  return path;
}

std::vector<std::pair<double, double>> snyder_replay(const EventPath& events,
                                                     const CtmcInput& input, double dt) {
  const PdmpModel filter = snyder_model(input);
  std::vector<double> x = filter.typical_state;
  std::vector<double> post(filter.state_dim), scratch(5 * filter.state_dim);
  std::vector<std::pair<double, double>> out;
  out.reserve(static_cast<size_t>(events.horizon / dt) + events.jump_times.size() + 2);

  double t = 0;
  out.emplace_back(0.0, filter.intensity(x.data()));
  size_t next_event = 0;
  while (t < events.horizon) {
    const double t_event = next_event < events.jump_times.size()
                               ? events.jump_times[next_event]
                               : events.horizon;
    const double t_stop = std::min(t_event, events.horizon);
    while (t < t_stop) {
      const double h = std::min(dt, t_stop - t);
      rk4_step(filter, h, x, scratch.data());
      require(filter.admissible(x.data()), ErrorCode::FilterBlowup,
              "filter state left the simplex during replay");
      t += h;
      out.emplace_back(t, filter.intensity(x.data()));
    }
    if (next_event >= events.jump_times.size()) break;
    require(filter.intensity(x.data()) > 0, ErrorCode::FilterBlowup,
            "filter intensity vanished at an event");
    filter.jump_update(x.data(), post.data());
    x = post;
    out.emplace_back(t, filter.intensity(x.data()));
    ++next_event;
  }
  return out;
}

EventPath marginal_simulate(const PdmpModel& model, double horizon, uint64_t seed,
                            std::vector<double> theta0, double dt) {
  require(horizon > 0, ErrorCode::InvalidArgument, "horizon must be positive");
  Rng rng(seed);
  EventPath path;
  path.horizon = horizon;
  path.seed = seed;
  path.truncated_sojourns = walk_marginal(
      model, horizon, rng, std::move(theta0), dt,
      [](double, double, double, double, const double*) {},
      [&](double t) { path.jump_times.push_back(t); });
  return path;
}

AcidDistribution empirical_acid(const PdmpModel& model, double horizon, double burn_in,
                                long samples, uint64_t seed, std::vector<double> mesh_edges,
                                int threads, int replicates) {
  require(samples > 0 && horizon > burn_in, ErrorCode::InvalidArgument,
          "sampling window is empty");
  require(mesh_edges.size() >= 2, ErrorCode::InvalidArgument, "mesh needs at least one bin");

  const long bins = static_cast<long>(mesh_edges.size()) - 1;
  std::vector<std::vector<double>> counts(replicates, std::vector<double>(bins, 0.0));
  const long per_rep = (samples + replicates - 1) / replicates;
  const double step = (horizon - burn_in) / per_rep;

  parallel_for(replicates, threads, [&](long r) {
    Rng rng(split_seed(seed, r));
    long k = 0;
    auto segment = [&](double t0, double t1, double m0, double m1, const double*) {
      while (k < per_rep) {
        const double ts = burn_in + k * step;
        if (ts >= t1) break;
        const double frac = t1 > t0 ? std::clamp((ts - t0) / (t1 - t0), 0.0, 1.0) : 0.0;
        const double m = m0 + (m1 - m0) * frac;
        auto it = std::upper_bound(mesh_edges.begin(), mesh_edges.end(), m);
        const long b = std::clamp<long>(it - mesh_edges.begin() - 1, 0, bins - 1);
        counts[r][b] += 1.0;
        ++k;
      }
    };
    walk_marginal(model, horizon, rng, {}, 0.01, segment, [](double) {});
  });

  AcidDistribution h;
  h.edges = std::move(mesh_edges);
  h.weights.assign(bins, 0.0);
  for (int r = 0; r < replicates; ++r)
    for (long b = 0; b < bins; ++b) h.weights[b] += counts[r][b];
  h.finalize();
  return h;
}

McSummary mc_mi_rate(const CtmcInput& input, double horizon, int replicates, uint64_t seed,
                     const McOptions& opt) {
  const PdmpModel filter = snyder_model(input);
  const double burn = opt.burn_in >= 0 ? opt.burn_in : default_burn_in(filter);
  require(horizon > burn, ErrorCode::InvalidArgument, "horizon must exceed the burn-in");

  std::vector<double> rates(replicates);
  parallel_for(replicates, opt.threads, [&](long r) {
    const EventPath path = simulate_mmpp(input, horizon, split_seed(seed, r));
    // input term: piecewise-constant integral of phi(lambda(X_t))
    double a = 0;
    for (size_t i = 0; i < path.input_states.size(); ++i) {
      const double t0 = std::max(path.input_switch_times[i], burn);
      const double t1 =
          i + 1 < path.input_switch_times.size() ? path.input_switch_times[i + 1] : horizon;
      if (t1 > t0) a += (t1 - t0) * phi(input.rates[path.input_states[i]]);
    }
    // output term: filter replay
    std::vector<double> x = filter.typical_state;
    std::vector<double> post(filter.state_dim), scratch(5 * filter.state_dim);
    double b = 0;
    double t = 0;
    size_t ev = 0;
    while (t < horizon) {
      const double t_event =
          ev < path.jump_times.size() ? path.jump_times[ev] : horizon;
      while (t < t_event) {
        const double h = std::min(opt.dt, t_event - t);
        const double m0 = filter.intensity(x.data());
        rk4_step(filter, h, x, scratch.data());
        const double m1 = filter.intensity(x.data());
        if (t >= burn) b += 0.5 * h * (phi(m0) + phi(m1));
        t += h;
      }
      if (ev >= path.jump_times.size()) break;
      filter.jump_update(x.data(), post.data());
      x = post;
      ++ev;
    }
    rates[r] = (a - b) / (horizon - burn);
  });

  McSummary s;
  s.sample_count = replicates;
  s.burn_in = burn;
  s.estimates["rate"] = mean_and_se(rates);
  return s;
}

McSummary mc_mi_rate_filter(const InputLaw& input, const PdmpModel& filter, double horizon,
                            int replicates, uint64_t seed, const McOptions& opt) {
  const double burn = opt.burn_in >= 0 ? opt.burn_in : 0.0;
  require(horizon > burn, ErrorCode::InvalidArgument, "horizon must exceed the burn-in");
  std::vector<double> rates(replicates);
  parallel_for(replicates, opt.threads, [&](long r) {
    Rng rng(split_seed(seed, r));
    double acc = 0;
    auto segment = [&](double t0, double t1, double m0, double m1, const double*) {
      if (t1 <= burn) return;
      t0 = std::max(t0, burn);
      if (t1 > t0) acc += 0.5 * (t1 - t0) * (phi(m0) + phi(m1));
    };
    walk_marginal(filter, horizon, rng, {}, opt.dt, segment, [](double) {});
    rates[r] = input.phi_mean - acc / (horizon - burn);
  });
  McSummary s;
  s.sample_count = replicates;
  s.burn_in = burn;
  s.estimates["rate"] = mean_and_se(rates);
  return s;
}

double path_metric(const EventPath& events, const PdmpModel& filter_a, const PdmpModel& filter_b,
                   double dt) {
  const PdmpModel* models[2] = {&filter_a, &filter_b};
  std::vector<double> x[2] = {filter_a.typical_state, filter_b.typical_state};
  std::vector<double> scratch[2] = {std::vector<double>(5 * filter_a.state_dim),
                                    std::vector<double>(5 * filter_b.state_dim)};
  std::vector<double> post(std::max(filter_a.state_dim, filter_b.state_dim));

  double total = 0;
  double t = 0;
  size_t ev = 0;
  while (t < events.horizon) {
    const double t_event =
        ev < events.jump_times.size() ? events.jump_times[ev] : events.horizon;
    while (t < t_event) {
      const double h = std::min(dt, t_event - t);
      const double d0 = std::abs(models[0]->intensity(x[0].data()) -
                                 models[1]->intensity(x[1].data()));
      for (int i = 0; i < 2; ++i) rk4_step(*models[i], h, x[i], scratch[i].data());
      const double d1 = std::abs(models[0]->intensity(x[0].data()) -
                                 models[1]->intensity(x[1].data()));
      total += 0.5 * h * (d0 + d1);
      t += h;
    }
    if (ev >= events.jump_times.size()) break;
    for (int i = 0; i < 2; ++i) {
      models[i]->jump_update(x[i].data(), post.data());
      std::copy(post.begin(), post.begin() + models[i]->state_dim, x[i].begin());
    }
    ++ev;
  }
  return total / events.horizon;
}

McSummary moment_checks(const PdmpModel& model, double horizon, int replicates, uint64_t seed,
                        const McOptions& opt) {
  const double burn = opt.burn_in >= 0 ? opt.burn_in : default_burn_in(model);
  require(horizon > burn, ErrorCode::InvalidArgument, "horizon must exceed the burn-in");

  std::vector<double> counts(replicates);
  const bool two_dim = model.state_dim == 2 && model.stat_dim == 2;
  std::vector<double> s_means(replicates, 0.0), m_means(replicates, 0.0),
      m_vars(replicates, 0.0);

  parallel_for(replicates, opt.threads, [&](long r) {
    Rng rng(split_seed(seed, r));
    long n_events = 0;
    double tw = 0, sm = 0, smm = 0, ss = 0;
    auto segment = [&](double t0, double t1, double m0, double m1, const double* state) {
      if (t1 <= burn) return;
      t0 = std::max(t0, burn);
      const double h = t1 - t0;
      if (h <= 0) return;
      if (two_dim && state) {
        // filter moments accumulated in intensity units
        const double mm = 0.5 * (m0 + m1);
        tw += h;
        sm += h * mm;
        smm += h * mm * mm;
        ss += h * state[1];
      }
    };
    auto event = [&](double t) {
      if (t > burn) ++n_events;
    };
    walk_marginal(model, horizon, rng, {}, opt.dt, segment, event);
    counts[r] = static_cast<double>(n_events);
    if (two_dim && tw > 0) {
      s_means[r] = ss / tw;
      m_means[r] = sm / tw;
      m_vars[r] = std::max(smm / tw - (sm / tw) * (sm / tw), 0.0);
    }
  });

  const double span = horizon - burn;
  McSummary s;
  s.sample_count = replicates;
  s.burn_in = burn;

  std::vector<double> slopes(replicates);
  for (int r = 0; r < replicates; ++r) slopes[r] = counts[r] / span;
  s.estimates["mean_slope"] = mean_and_se(slopes);

  // variance slope: V[Y] / span with a moment-based standard error
  const double cmean = mean_and_se(counts).value;
  double s2 = 0, s4 = 0;
  for (double c : counts) {
    const double d = c - cmean;
    s2 += d * d;
    s4 += d * d * d * d;
  }
  s2 /= (replicates - 1);
  s4 /= replicates;
  const double var_se = std::sqrt(std::max(s4 - s2 * s2, 0.0) / replicates);
  s.estimates["variance_slope"] = {s2 / span, var_se / span};
  if (model.expected_variance_slope)
    s.estimates["variance_slope_expected"] = {*model.expected_variance_slope, 0.0};
  if (model.stationary_mean_intensity)
    s.estimates["mean_slope_expected"] = {*model.stationary_mean_intensity, 0.0};

  if (two_dim) {
    // E[S] + V[M] in state units; the gain is l(1, .) by construction
    double probe[2] = {1.0, 1.0};
    const double gain = model.intensity(probe);
    std::vector<double> decomp(replicates);
    for (int r = 0; r < replicates; ++r)
      decomp[r] = s_means[r] + m_vars[r] / (gain * gain);
    s.estimates["variance_decomposition"] = mean_and_se(decomp);
  }
  return s;
}

double ks_window_pvalue(const EventPath& a, const EventPath& b, double window, double burn_in) {
  auto window_counts = [&](const EventPath& p) {
    std::vector<double> counts;
    const long n = static_cast<long>((p.horizon - burn_in) / window);
    counts.assign(n, 0.0);
    for (double t : p.jump_times) {
      if (t < burn_in) continue;
      const long w = static_cast<long>((t - burn_in) / window);
      if (w >= 0 && w < n) counts[w] += 1.0;
    }
    return counts;
  };
  std::vector<double> ca = window_counts(a), cb = window_counts(b);
  require(ca.size() > 10 && cb.size() > 10, ErrorCode::InvalidArgument,
          "too few windows for a KS test");
  std::sort(ca.begin(), ca.end());
  std::sort(cb.begin(), cb.end());
  const double n1 = static_cast<double>(ca.size()), n2 = static_cast<double>(cb.size());
  double d = 0, f1 = 0, f2 = 0;
  size_t i = 0, j = 0;
  while (i < ca.size() && j < cb.size()) {
    const double x = std::min(ca[i], cb[j]);
    while (i < ca.size() && ca[i] <= x) f1 = ++i / n1;
    while (j < cb.size() && cb[j] <= x) f2 = ++j / n2;
    d = std::max(d, std::abs(f1 - f2));
  }
  const double ne = std::sqrt(n1 * n2 / (n1 + n2));
  const double lambda = (ne + 0.12 + 0.11 / ne) * d;
  double p = 0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2 * ((k % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    p += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace acid
