#include "boundary.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "errors.hpp"

namespace acid {

void parallel_for(long n, int threads, const std::function<void(long)>& body) {
  long nt = threads > 0 ? threads : static_cast<long>(std::thread::hardware_concurrency());
  nt = std::max<long>(1, std::min<long>(nt, n));
  if (nt == 1) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const long i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

namespace {

// Closed-form column for scalar statistics with monotone decreasing targets:
// P evaluated at the hit times of the cell edges, differenced.
void analytic_column(const PdmpModel& model, const Partition& part, const double* theta,
                     double* col, double& clamped) {
  const auto& edges = part.edges(0);
  const long n = part.cells(0);
  double prev = model.analytic.survival_at_target_level(edges[0], theta[0]);
  if (prev > 0) clamped += prev;  // mass escaping below the partition
  double below = prev;
  for (long i = 0; i < n; ++i) {
    const double cur = model.analytic.survival_at_target_level(edges[i + 1], theta[0]);
    col[i] += cur - prev;
    prev = cur;
  }
  col[0] += below;  // redirect bottom escape into the first cell
  if (prev < 1.0) {
    col[n - 1] += 1.0 - prev;  // initial segment above the top edge
    clamped = std::max(clamped, 1.0 - prev);
  }
}

// Numeric column: walk the jump-target trajectory through the grid.
void numeric_column(const PdmpModel& model, const Partition& part, const double* theta,
                    const SojournIntegrator& integ, double* col, double& clamped,
                    double& tail_residual) {
  const int dims = part.dims();
  std::vector<LevelSet> sets(dims);
  for (int ax = 0; ax < dims; ++ax)
    sets[ax] = LevelSet{{ObservableKind::TargetComponent, ax}, &part.edges(ax)};

  auto res = integ.run(model, theta, sets);

  // initial cell of g(0, theta)
  std::vector<double> x0 = model.extended(theta);
  std::vector<double> post(model.state_dim), g0(std::max(model.stat_dim, 1));
  model.jump_update(x0.data(), post.data());
  model.truncate(post.data(), g0.data());
  if (!part.contains(g0.data())) clamped = std::max(clamped, 1.0);

  long mi[4] = {0, 0, 0, 0};
  part.multi_index(part.locate(g0.data()), mi);

  double p_prev = 1.0;
  for (const auto& c : res.crossings) {
    const long cell = part.flat_index(mi);
    col[cell] += p_prev - c.survival;
    p_prev = c.survival;
    long idx = c.direction > 0 ? c.edge : c.edge - 1;
    const long ncells = part.cells(c.level_set);
    if (idx < 0 || idx >= ncells) {
      idx = std::clamp(idx, 0L, ncells - 1);
      clamped = std::max(clamped, p_prev);
    }
    mi[c.level_set] = idx;
  }
  if (res.hit_tau_max) {
    // truncated tail: leave the residual unassigned and report it
    col[part.flat_index(mi)] += p_prev - res.survival_end;
    tail_residual = std::max(tail_residual, res.survival_end);
  } else {
    // converged tail: the trajectory has settled in its limit cell
    col[part.flat_index(mi)] += p_prev;
    tail_residual = std::max(tail_residual, res.survival_end);
  }
}

}  // namespace

BoundaryMatrix build_boundary_matrix(const PdmpModel& model, const Partition& partition,
                                     const SolverOptions& opt) {
  BoundaryMatrix out;
  out.partition = partition;
  const long n = partition.cell_count();
  out.op = Eigen::MatrixXd::Zero(n, n);
  out.column_sums.assign(n, 0.0);

  if (partition.dims() == 0) {
    out.op(0, 0) = 1.0;
    out.column_sums[0] = 1.0;
    return out;
  }

  // a bounded declared support must be covered by the partition
  for (int ax = 0; ax < partition.dims(); ++ax) {
    const Interval& sup = model.support[ax];
    if (std::isfinite(sup.lo) && std::isfinite(sup.hi)) {
      require(partition.box()[ax].lo <= sup.lo + 1e-9 && partition.box()[ax].hi >= sup.hi - 1e-9,
              ErrorCode::SupportNotCovered,
              model.name + ": partition does not cover the support");
    }
  }

  SojournIntegrator::Config cfg;
  cfg.ode = opt.ode;
  cfg.eps_tail = opt.eps_tail;
  cfg.tau_max = opt.tau_max;
  SojournIntegrator integ(cfg);

  const bool analytic = model.has_analytic_column();
  const int reps = partition.reps_per_cell();
  std::vector<double> clamped(n, 0.0), tails(n, 0.0);

  parallel_for(n, opt.threads, [&](long j) {
    std::vector<double> col(n, 0.0), acc(n, 0.0);
    std::vector<double> theta(partition.dims());
    double clamp_j = 0, tail_j = 0;
    for (int r = 0; r < reps; ++r) {
      std::fill(col.begin(), col.end(), 0.0);
      partition.representative(j, r, theta.data());
      if (analytic)
        analytic_column(model, partition, theta.data(), col.data(), clamp_j);
      else
        numeric_column(model, partition, theta.data(), integ, col.data(), clamp_j, tail_j);
      for (long i = 0; i < n; ++i) acc[i] += col[i];
    }
    double sum = 0;
    for (long i = 0; i < n; ++i) {
      const double v = std::max(acc[i] / reps, 0.0);
      out.op(i, j) = v;
      sum += v;
    }
    out.column_sums[j] = sum;
    clamped[j] = clamp_j;
    tails[j] = tail_j;
  });

  for (long j = 0; j < n; ++j) {
    out.clamped_mass_max = std::max(out.clamped_mass_max, clamped[j]);
    out.tail_residual_max = std::max(out.tail_residual_max, tails[j]);
    if (out.column_sums[j] < 1.0 - opt.mass_tol) out.leaky_columns.push_back(j);
  }
  return out;
}

BoundaryDensity solve_boundary_density(const BoundaryMatrix& matrix, int squarings, double norm,
                                       double tol) {
  const long n = matrix.op.rows();
  require(norm > 0, ErrorCode::InvalidArgument, "normalization constant must be positive");

  BoundaryDensity out;
  out.norm = norm;
  out.squarings = squarings;
  const double w = matrix.partition.cell_volume();

  if (n == 1) {
    out.values = {norm / w};
    out.residual_l1 = 0;
    return out;
  }

  Eigen::MatrixXd a = matrix.op;
  for (int l = 0; l < squarings; ++l) {
    a = (a * a).eval();
    const double scale = a.colwise().sum().maxCoeff();
    require(scale > 0, ErrorCode::NotConverged, "operator power collapsed to zero");
    a /= scale;
  }
  Eigen::VectorXd v = a * Eigen::VectorXd::Constant(n, 1.0 / n);
  v = v.cwiseMax(0.0);

  out.quasi_positive = false;
  for (long j = 0; j < n && !out.quasi_positive; ++j)
    out.quasi_positive = (a.col(j).array() > 0).all();

  const double denom = v.lpNorm<1>();
  require(denom > 0, ErrorCode::NotConverged, "fixed-point iterate vanished");
  out.residual_l1 = (matrix.op * v - v).lpNorm<1>() / denom;
  require(out.residual_l1 < tol, ErrorCode::NotConverged,
          "fixed-point residual " + std::to_string(out.residual_l1) +
              " above tolerance after " + std::to_string(squarings) + " squarings");

  const double mass = v.sum() * w;
  out.values.resize(n);
  for (long i = 0; i < n; ++i) out.values[i] = v(i) * norm / mass;
  return out;
}

}  // namespace acid
