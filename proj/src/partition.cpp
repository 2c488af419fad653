#include "partition.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace acid {

namespace {

// Regularized lower incomplete gamma P(a, x), series + continued fraction.
double gamma_p(double a, double x) {
  if (x <= 0) return 0.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - gln);
  }
  double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return 1.0 - std::exp(-x + a * std::log(x) - gln) * h;
}

}  // namespace

double gamma_quantile(double p, double mean, double variance) {
  require(p > 0 && p < 1, ErrorCode::InvalidArgument, "quantile level must be in (0,1)");
  require(mean > 0 && variance > 0, ErrorCode::InvalidArgument,
          "gamma quantile needs positive mean and variance");
  const double shape = mean * mean / variance;
  const double scale = variance / mean;
  double lo = 0.0, hi = mean + 40 * std::sqrt(variance);
  while (gamma_p(shape, hi / scale) < p) hi *= 2;
  for (int i = 0; i < 200 && hi - lo > 1e-13 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (gamma_p(shape, mid / scale) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Partition Partition::regular(std::vector<Interval> box, std::vector<long> cells_per_axis,
                             int reps_per_axis) {
  require(box.size() == cells_per_axis.size(), ErrorCode::InvalidArgument,
          "box/cell dimensions mismatch");
  require(reps_per_axis >= 1, ErrorCode::InvalidArgument, "need at least one representative");
  Partition p;
  p.box_ = box;
  p.reps_per_axis_ = reps_per_axis;
  p.reps_per_cell_ = 1;
  for (size_t ax = 0; ax < box.size(); ++ax) {
    const long n = cells_per_axis[ax];
    require(n >= 1 && box[ax].hi > box[ax].lo, ErrorCode::InvalidArgument,
            "invalid partition axis");
    std::vector<double> e(n + 1);
    for (long i = 0; i <= n; ++i) e[i] = box[ax].lo + (box[ax].hi - box[ax].lo) * i / n;
    p.axes_.push_back(std::move(e));
    p.total_cells_ *= n;
    p.volume_ *= (box[ax].hi - box[ax].lo) / n;
    p.reps_per_cell_ *= reps_per_axis;
  }
  return p;
}

void Partition::multi_index(long flat, long* mi) const {
  for (int ax = dims() - 1; ax >= 0; --ax) {
    const long n = cells(ax);
    mi[ax] = flat % n;
    flat /= n;
  }
}

long Partition::flat_index(const long* mi) const {
  long f = 0;
  for (int ax = 0; ax < dims(); ++ax) f = f * cells(ax) + mi[ax];
  return f;
}

long Partition::locate(const double* theta) const {
  long mi[4] = {0, 0, 0, 0};
  for (int ax = 0; ax < dims(); ++ax) {
    const auto& e = axes_[ax];
    const long n = cells(ax);
    auto it = std::upper_bound(e.begin(), e.end(), theta[ax]);
    long idx = static_cast<long>(it - e.begin()) - 1;
    mi[ax] = std::clamp(idx, 0L, n - 1);
  }
  return flat_index(mi);
}

bool Partition::contains(const double* theta) const {
  for (int ax = 0; ax < dims(); ++ax)
    if (theta[ax] < box_[ax].lo || theta[ax] > box_[ax].hi) return false;
  return true;
}

void Partition::representative(long cell, int rep, double* theta_out) const {
  long mi[4] = {0, 0, 0, 0};
  multi_index(cell, mi);
  int r = rep;
  for (int ax = dims() - 1; ax >= 0; --ax) {
    const int sub = r % reps_per_axis_;
    r /= reps_per_axis_;
    const auto& e = axes_[ax];
    const double w = e[mi[ax] + 1] - e[mi[ax]];
    theta_out[ax] = e[mi[ax]] + w * (sub + 0.5) / reps_per_axis_;
  }
}

std::vector<double> Partition::center(long cell) const {
  std::vector<double> c(std::max(dims(), 1));
  long mi[4] = {0, 0, 0, 0};
  multi_index(cell, mi);
  for (int ax = 0; ax < dims(); ++ax)
    c[ax] = 0.5 * (axes_[ax][mi[ax]] + axes_[ax][mi[ax] + 1]);
  c.resize(dims());
  return c;
}

namespace {

// Box for two-dimensional filters, probed from the dynamically reachable
// region: the ladder of immediate re-jumps bounds the upper reaches, the
// flow-relaxed targets bound the lower edge.
std::vector<Interval> probe_box_2d(const PdmpModel& model, Interval primary_cap,
                                   const SolverOptions& opt) {
  SojournIntegrator::Config cfg;
  cfg.ode = opt.ode;
  cfg.ode.rel_tol = 1e-8;
  cfg.eps_tail = 1e-8;
  cfg.tau_max = opt.tau_max;
  SojournIntegrator integ(cfg);

  Interval seen[2] = {{1e300, -1e300}, {1e300, -1e300}};
  auto note = [&](const double* th) {
    for (int ax = 0; ax < 2; ++ax) {
      seen[ax].lo = std::min(seen[ax].lo, th[ax]);
      seen[ax].hi = std::max(seen[ax].hi, th[ax]);
    }
  };
  auto target_of = [&](const std::vector<double>& state, double* th) {
    std::vector<double> post(model.state_dim);
    model.jump_update(state.data(), post.data());
    model.truncate(post.data(), th);
  };

  double theta[2];
  target_of(model.typical_state, theta);
  note(theta);
  for (int hop = 0; hop < 40 && theta[0] < primary_cap.hi; ++hop) {
    // flow-relaxed target (lower extreme of this sojourn's jump targets)
    if (hop % 5 == 0) {
      auto res = integ.run(model, theta);
      double gend[2];
      target_of(res.state_end, gend);
      note(gend);
    }
    // immediate re-jump (upper extreme)
    double g0[2];
    target_of(model.extended(theta), g0);
    note(g0);
    theta[0] = g0[0];
    theta[1] = g0[1];
  }

  std::vector<Interval> box(2);
  for (int ax = 0; ax < 2; ++ax) {
    const double margin = 0.05 * (seen[ax].hi - seen[ax].lo);
    box[ax].lo = std::max(1e-9, seen[ax].lo - margin);
    box[ax].hi = seen[ax].hi + margin;
  }
  return box;
}

}  // namespace

Partition make_partition(const PdmpModel& model, long cells_per_axis, int reps_per_axis,
                         const SolverOptions& opt) {
  const int n = model.stat_dim;
  if (n == 0) return Partition::regular({}, {}, 1);

  std::vector<Interval> box = model.support;
  bool unbounded = false;
  for (auto& iv : box)
    if (!std::isfinite(iv.hi) || !std::isfinite(iv.lo)) unbounded = true;

  if (unbounded) {
    require(model.acid_mean.has_value(), ErrorCode::SupportNotCovered,
            model.name + ": cannot truncate unbounded support without declared moments");
    if (n == 1) {
      // scalar intensity statistic: truncate at the moment-matched Gamma
      // quantile, anchored at the flow's invariant level; the post-event
      // support sits one jump above the quantile range
      const double mean = *model.acid_mean;
      const double var = model.acid_variance.value_or(mean * mean);
      const double lo = model.intensity_range ? model.intensity_range->lo : 0.0;
      double jump_shift = 0.0;
      if (std::isfinite(model.support[0].lo) && model.support[0].lo > lo)
        jump_shift = model.support[0].lo - lo;
      const double hi = lo + jump_shift + gamma_quantile(opt.truncation_quantile, mean, var);
      box = {{lo, hi}};
    } else if (n == 2) {
      // cap the primary (intensity-carrying) axis at the moment-matched
      // Gamma quantile; the rest of the box comes from probing the dynamics
      const double mean = *model.acid_mean;
      const double var = model.acid_variance.value_or(mean * mean);
      double probe[2] = {1.0, 1.0};
      const double gain = model.intensity(probe) > 0 ? model.intensity(probe) : 1.0;
      Interval cap{1e-9, gamma_quantile(opt.truncation_quantile, mean, var) / gain};
      box = probe_box_2d(model, cap, opt);
      box[0].hi = std::max(box[0].hi, cap.hi);
    } else {
      fail(ErrorCode::SupportNotCovered, "unbounded supports handled for n <= 2 only");
    }
  }

  std::vector<long> cells(n, cells_per_axis);
  if (n == 2) cells[1] = std::max<long>(cells_per_axis / 2, 2);  // coarser auxiliary axis
  return Partition::regular(box, cells, reps_per_axis);
}

}  // namespace acid
