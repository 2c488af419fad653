#include "distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "errors.hpp"

namespace acid {

std::vector<double> AcidDistribution::cdf() const {
  std::vector<double> c(edges.size(), 0.0);
  for (size_t i = 0; i < weights.size(); ++i) c[i + 1] = c[i] + weights[i];
  if (!c.empty() && c.back() > 0)
    for (double& v : c) v /= c.back();
  return c;
}

void AcidDistribution::finalize() {
  total_mass_raw = std::accumulate(weights.begin(), weights.end(), 0.0);
  require(total_mass_raw > 0, ErrorCode::NotConverged, "distribution has no mass");
  for (double& v : weights) v /= total_mass_raw;
  mean = 0;
  double m2 = 0;
  double wmax = 0;
  for (long i = 0; i < bins(); ++i) {
    const double mid = 0.5 * (edges[i] + edges[i + 1]);
    mean += weights[i] * mid;
    m2 += weights[i] * mid * mid;
    wmax = std::max(wmax, weights[i]);
  }
  variance = std::max(m2 - mean * mean, 0.0);
  const double span = edges.back() - edges.front();
  mesh_warning = bins() > 3 && wmax > 0.5 && variance > 1e-6 * span * span;
}

Interval resolve_intensity_range(const PdmpModel& model, const Partition& partition) {
  double lo = model.intensity_range ? model.intensity_range->lo : 0.0;
  double hi = model.intensity_range ? model.intensity_range->hi : 0.0;
  if (!std::isfinite(hi) || hi <= lo) {
    // highest reachable intensity among representative starts
    hi = lo;
    std::vector<double> theta(std::max(partition.dims(), 1));
    for (long j = 0; j < partition.cell_count(); ++j) {
      partition.representative(j, 0, theta.data());
      hi = std::max(hi, model.intensity(model.extended(theta.data()).data()));
      partition.representative(j, partition.reps_per_cell() - 1, theta.data());
      hi = std::max(hi, model.intensity(model.extended(theta.data()).data()));
    }
  }
  if (hi - lo < 1e-12) {  // degenerate law (constant hazard)
    lo -= 0.5;
    hi += 0.5;
  }
  return {lo, hi};
}

AcidDistribution acid_pdf(const PdmpModel& model, const Partition& partition,
                          const BoundaryDensity& density, const AcidMeshOptions& mesh,
                          const SolverOptions& opt) {
  const long ncells = partition.cell_count();
  require(static_cast<long>(density.values.size()) == ncells, ErrorCode::InvalidArgument,
          "boundary density does not match the partition");

  Interval range = mesh.range;
  if (range.hi <= range.lo) range = resolve_intensity_range(model, partition);

  AcidDistribution acid;
  acid.edges.resize(mesh.bins + 1);
  for (long i = 0; i <= mesh.bins; ++i)
    acid.edges[i] = range.lo + (range.hi - range.lo) * i / mesh.bins;
  acid.weights.assign(mesh.bins, 0.0);

  const int reps = partition.reps_per_cell();
  const double w = partition.cell_volume();
  const bool analytic_bands = static_cast<bool>(model.analytic.survival_time_in_band) &&
                              model.monotone_decreasing;

  SojournIntegrator::Config cfg;
  cfg.ode = opt.ode;
  cfg.eps_tail = opt.eps_tail;
  cfg.tau_max = opt.tau_max;
  cfg.want_time_integral = true;
  SojournIntegrator integ(cfg);

  std::vector<std::vector<double>> partials(ncells);
  parallel_for(ncells, opt.threads, [&](long j) {
    std::vector<double> bin_w(mesh.bins, 0.0);
    std::vector<double> theta(std::max(partition.dims(), 1));
    for (int r = 0; r < reps; ++r) {
      partition.representative(j, r, theta.data());
      const double weight = density.values[j] * w / reps;
      if (analytic_bands) {
        const double th = partition.dims() > 0 ? theta[0] : 0.0;
        for (long i = 0; i < mesh.bins; ++i) {
          const double t =
              model.analytic.survival_time_in_band(acid.edges[i], acid.edges[i + 1], th);
          bin_w[i] += weight * t;
        }
      } else {
        LevelSet set{{ObservableKind::Intensity, 0}, &acid.edges};
        auto res = integ.run(model, theta.data(), {set});
        const double m0 = model.intensity(model.extended(theta.data()).data());
        auto bin_of = [&](double v) {
          auto it = std::upper_bound(acid.edges.begin(), acid.edges.end(), v);
          return std::clamp<long>(it - acid.edges.begin() - 1, 0, mesh.bins - 1);
        };
        long bin = bin_of(m0);
        double c_prev = 0;
        for (const auto& c : res.crossings) {
          bin_w[bin] += weight * (c.time_integral - c_prev);
          c_prev = c.time_integral;
          bin = std::clamp<long>(c.direction > 0 ? c.edge : c.edge - 1, 0, mesh.bins - 1);
        }
        bin_w[bin] += weight * (res.time_integral_end - c_prev);
        // remaining tail mass ~ P_end / m at the stopped state
        const double m_end = model.intensity(res.state_end.data());
        if (m_end > 1e-12) bin_w[bin] += weight * res.survival_end / m_end;
      }
    }
    partials[j] = std::move(bin_w);
  });
  for (long j = 0; j < ncells; ++j)
    for (long i = 0; i < mesh.bins; ++i) acid.weights[i] += partials[j][i];

  acid.finalize();
  return acid;
}

double wasserstein1(const AcidDistribution& a, const AcidDistribution& b) {
  // both CDFs are piecewise linear; integrate |F_a - F_b| exactly
  std::vector<double> pts;
  pts.reserve(a.edges.size() + b.edges.size());
  pts.insert(pts.end(), a.edges.begin(), a.edges.end());
  pts.insert(pts.end(), b.edges.begin(), b.edges.end());
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  const auto ca = a.cdf();
  const auto cb = b.cdf();
  auto eval = [](const std::vector<double>& edges, const std::vector<double>& cdf, double x) {
    if (x <= edges.front()) return 0.0;
    if (x >= edges.back()) return 1.0;
    auto it = std::upper_bound(edges.begin(), edges.end(), x);
    const size_t i = it - edges.begin() - 1;
    const double t = (x - edges[i]) / (edges[i + 1] - edges[i]);
    return cdf[i] + t * (cdf[i + 1] - cdf[i]);
  };

  double total = 0;
  double d0 = 0;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    if (i == 0) d0 = eval(a.edges, ca, pts[0]) - eval(b.edges, cb, pts[0]);
    const double d1 = eval(a.edges, ca, pts[i + 1]) - eval(b.edges, cb, pts[i + 1]);
    const double h = pts[i + 1] - pts[i];
    if (d0 == 0.0 && d1 == 0.0) {
    } else if ((d0 >= 0) == (d1 >= 0)) {
      total += 0.5 * (std::abs(d0) + std::abs(d1)) * h;
    } else {
      const double split = h * std::abs(d0) / (std::abs(d0) + std::abs(d1));
      total += 0.5 * (std::abs(d0) * split + std::abs(d1) * (h - split));
    }
    d0 = d1;
  }
  return total;
}

AcidDistribution histogram(const std::vector<double>& samples, std::vector<double> edges) {
  AcidDistribution h;
  h.edges = std::move(edges);
  h.weights.assign(h.edges.size() - 1, 0.0);
  for (double s : samples) {
    auto it = std::upper_bound(h.edges.begin(), h.edges.end(), s);
    const long i = std::clamp<long>(it - h.edges.begin() - 1, 0, h.bins() - 1);
    h.weights[i] += 1.0;
  }
  h.finalize();
  return h;
}

double normalization_constant(const PdmpModel& model, const SolverOptions& opt) {
  if (model.stationary_mean_intensity) return *model.stationary_mean_intensity;
  require(model.stat_dim == 0, ErrorCode::InvalidArgument,
          model.name + ": no stationary mean intensity declared");
  SojournIntegrator::Config cfg;
  cfg.ode = opt.ode;
  cfg.eps_tail = opt.eps_tail;
  cfg.tau_max = opt.tau_max;
  cfg.want_time_integral = true;
  auto res = SojournIntegrator(cfg).run(model, nullptr);
  require(res.time_integral_end > 0, ErrorCode::NotConverged, "mean sojourn time is zero");
  return 1.0 / res.time_integral_end;  // event rate of a renewal process
}

AcidDistribution direct_fixed_point(const PdmpModel& model, long grid_cells, long max_iters,
                                    const SolverOptions& opt) {
  require(model.state_dim == 1, ErrorCode::InvalidArgument,
          "direct method needs a one-dimensional intensity state");
  require(static_cast<bool>(model.analytic.direct_log_g), ErrorCode::InvalidArgument,
          model.name + ": no closed-form integrating factor for the direct method");
  // the conditional intensity must be the state itself
  for (double z : {0.7, 1.3}) {
    require(std::abs(model.intensity(&z) - z) <= 1e-12, ErrorCode::InvalidArgument,
            "direct method applies to models whose intensity is the state");
  }

  Interval range = model.intensity_range.value_or(Interval{0, 0});
  if (!std::isfinite(range.hi) || range.hi <= range.lo) {
    require(model.acid_mean.has_value(), ErrorCode::InvalidArgument,
            "cannot truncate the intensity domain");
    const double var = model.acid_variance.value_or(*model.acid_mean);
    double jump_amp = 0;
    {
      double mid = *model.acid_mean, post;
      model.jump_update(&mid, &post);
      jump_amp = std::max(post - mid, 0.0);
    }
    range.hi = range.lo + gamma_quantile(0.9995, *model.acid_mean, var) + jump_amp;
  }

  const long n = grid_cells;
  const double d = (range.hi - range.lo) / n;
  std::vector<double> mids(n);
  for (long i = 0; i < n; ++i) mids[i] = range.lo + (i + 0.5) * d;

  std::vector<double> drift(n), lg(n), f_of(n), lg_f(n);
  for (long i = 0; i < n; ++i) {
    model.flow(&mids[i], &drift[i]);
    require(drift[i] != 0.0, ErrorCode::SingularKernel,
            "grid point coincides with the flow equilibrium");
    require(drift[i] < 0, ErrorCode::SingularKernel,
            "direct method expects a decreasing flow on the grid");
    lg[i] = model.analytic.direct_log_g(mids[i]);
    model.jump_update(&mids[i], &f_of[i]);
    lg_f[i] = model.analytic.direct_log_g(f_of[i]);
  }

  Eigen::MatrixXd k(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      k(i, j) = f_of[j] >= mids[i]
                    ? mids[j] * std::exp(lg[i] - lg_f[j]) / (-drift[i]) * d
                    : 0.0;

  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / (n * d));
  double residual = 1;
  for (long it = 0; it < max_iters; ++it) {
    Eigen::VectorXd v2 = k * v;
    const double mass = v2.sum() * d;
    require(mass > 0, ErrorCode::NotConverged, "direct iteration lost all mass");
    v2 /= mass;
    residual = (v2 - v).lpNorm<1>() * d;
    v = v2;
    if (residual < 1e-13) break;
  }
  require(residual < opt.fixed_point_tol, ErrorCode::NotConverged,
          "direct fixed point residual " + std::to_string(residual));

  AcidDistribution acid;
  acid.edges.resize(n + 1);
  for (long i = 0; i <= n; ++i) acid.edges[i] = range.lo + i * d;
  acid.weights.resize(n);
  for (long i = 0; i < n; ++i) acid.weights[i] = v(i) * d;
  acid.finalize();
  return acid;
}

}  // namespace acid
