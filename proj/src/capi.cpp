#include "acid/acid.h"

#include <json.hpp>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "distribution.hpp"
#include "errors.hpp"
#include "inforate.hpp"
#include "io.hpp"
#include "mc.hpp"

using nlohmann::json;

namespace {

thread_local std::string g_last_error;

struct Table {
  std::string header;
  size_t cols = 0;
  std::vector<double> data;  // row-major
};

}  // namespace

struct acid_model {
  acid::LoadedModel loaded;
};

struct acid_result {
  std::string doc;
  std::map<std::string, Table> tables;
};

namespace {

acid_status status_of(const acid::Error& e) {
  using acid::ErrorCode;
  switch (e.code()) {
    case ErrorCode::Ok: return ACID_OK;
    case ErrorCode::InvalidArgument: return ACID_ERR_INVALID_ARGUMENT;
    case ErrorCode::NonFiniteState: return ACID_ERR_NON_FINITE_STATE;
    case ErrorCode::EventToleranceNotMet: return ACID_ERR_EVENT_TOLERANCE;
    case ErrorCode::AllStatesZero: return ACID_ERR_ALL_STATES_ZERO;
    case ErrorCode::Nonstationary: return ACID_ERR_NONSTATIONARY;
    case ErrorCode::SupportNotCovered: return ACID_ERR_SUPPORT_NOT_COVERED;
    case ErrorCode::NotConverged: return ACID_ERR_NOT_CONVERGED;
    case ErrorCode::SingularKernel: return ACID_ERR_SINGULAR_KERNEL;
    case ErrorCode::LostNullcline: return ACID_ERR_LOST_NULLCLINE;
    case ErrorCode::FilterBlowup: return ACID_ERR_FILTER_BLOWUP;
    case ErrorCode::FileNotFound: return ACID_ERR_FILE_NOT_FOUND;
    case ErrorCode::ParseError: return ACID_ERR_PARSE;
    case ErrorCode::IoError: return ACID_ERR_IO;
    case ErrorCode::Internal: return ACID_ERR_INTERNAL;
  }
  return ACID_ERR_INTERNAL;
}

template <typename Fn>
acid_status guarded(Fn&& fn) {
  try {
    fn();
    return ACID_OK;
  } catch (const acid::Error& e) {
    g_last_error = std::string(acid::error_code_name(e.code())) + ": " + e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    g_last_error = std::string("Internal: ") + e.what();
    return ACID_ERR_INTERNAL;
  }
}

acid::SolverOptions solver_options(const json& opts) {
  acid::SolverOptions s;
  if (opts.contains("iters")) s.squarings = opts["iters"].get<int>();
  if (opts.contains("tmax") && opts["tmax"].get<double>() > 0)
    s.tau_max = opts["tmax"].get<double>();
  if (opts.contains("threads")) s.threads = opts["threads"].get<int>();
  return s;
}

long opt_long(const json& o, const char* k, long fb) {
  return o.contains(k) ? o[k].get<long>() : fb;
}
double opt_num(const json& o, const char* k, double fb) {
  return o.contains(k) ? o[k].get<double>() : fb;
}
bool opt_bool(const json& o, const char* k, bool fb) {
  return o.contains(k) ? o[k].get<bool>() : fb;
}

json acid_diag(const acid::BoundaryMatrix& bm, const acid::BoundaryDensity& bd,
               const acid::AcidDistribution& dist) {
  double cmin = 1, cmax = 0;
  for (double s : bm.column_sums) {
    cmin = std::min(cmin, s);
    cmax = std::max(cmax, s);
  }
  return json{{"column_sum_min", cmin},
              {"column_sum_max", cmax},
              {"clamped_mass_max", bm.clamped_mass_max},
              {"tail_residual_max", bm.tail_residual_max},
              {"leaky_columns", bm.leaky_columns.size()},
              {"fixed_point_residual", bd.residual_l1},
              {"quasi_positive", bd.quasi_positive},
              {"boundary_norm", bd.norm},
              {"acid_mass_raw", dist.total_mass_raw},
              {"acid_mean", dist.mean},
              {"acid_variance", dist.variance},
              {"mesh_warning", dist.mesh_warning}};
}

Table boundary_table(const acid::Partition& part, const acid::BoundaryDensity& bd) {
  Table t;
  const int dims = part.dims();
  t.header = "cell_index";
  for (int ax = 0; ax < dims; ++ax) t.header += ",theta" + std::to_string(ax + 1);
  t.header += ",p0";
  t.cols = 2 + dims;
  for (long j = 0; j < part.cell_count(); ++j) {
    t.data.push_back(static_cast<double>(j));
    const auto c = part.center(j);
    for (int ax = 0; ax < dims; ++ax) t.data.push_back(c[ax]);
    t.data.push_back(bd.values[j]);
  }
  return t;
}

Table acid_table(const acid::AcidDistribution& d) {
  Table t;
  t.header = "bin_left,bin_right,weight,density";
  t.cols = 4;
  for (long i = 0; i < d.bins(); ++i) {
    t.data.push_back(d.edges[i]);
    t.data.push_back(d.edges[i + 1]);
    t.data.push_back(d.weights[i]);
    t.data.push_back(d.weights[i] / (d.edges[i + 1] - d.edges[i]));
  }
  return t;
}

long mesh_bins(const acid::PdmpModel& model, const acid::Partition& part, const json& opts) {
  long bins = opt_long(opts, "bins", 400);
  const double dm = opt_num(opts, "mesh", 0.0);
  if (dm > 0) {
    const acid::Interval r = acid::resolve_intensity_range(model, part);
    bins = std::max<long>(2, static_cast<long>(std::ceil((r.hi - r.lo) / dm)));
  }
  return bins;
}

void cmd_acid(const acid::LoadedModel& lm, const json& opts, acid_result* res) {
  const acid::SolverOptions sopt = solver_options(opts);
  const long cells = opt_long(opts, "cells", 200);
  const int reps = static_cast<int>(opt_long(opts, "reps", 1));
  const acid::Partition part = acid::make_partition(lm.model, cells, reps, sopt);
  const acid::BoundaryMatrix bm = acid::build_boundary_matrix(lm.model, part, sopt);
  const double norm = acid::normalization_constant(lm.model, sopt);
  const acid::BoundaryDensity bd =
      acid::solve_boundary_density(bm, sopt.squarings, norm, sopt.fixed_point_tol);
  acid::AcidMeshOptions mo;
  mo.bins = mesh_bins(lm.model, part, opts);
  const acid::AcidDistribution dist = acid::acid_pdf(lm.model, part, bd, mo, sopt);

  res->tables["boundary"] = boundary_table(part, bd);
  res->tables["acid"] = acid_table(dist);
  json doc;
  doc["command"] = "acid";
  doc["model"] = {{"type", lm.type}, {"params", lm.params}};
  doc["settings"] = {{"cells", cells}, {"reps", reps}, {"iters", sopt.squarings},
                     {"bins", mo.bins}, {"tmax", sopt.tau_max}};
  doc["diagnostics"] = acid_diag(bm, bd, dist);
  res->doc = doc.dump(2);
}

void cmd_mirate(const acid::LoadedModel& lm, const json& opts, acid_result* res) {
  acid::require(lm.law.has_value(), acid::ErrorCode::InvalidArgument,
                "information rate needs a Markov-modulated model (telegraph, donsoff, ctmc)");
  const acid::SolverOptions sopt = solver_options(opts);
  const long cells = opt_long(opts, "cells", 200);
  const int reps = static_cast<int>(opt_long(opts, "reps", 1));

  json doc;
  doc["command"] = "mirate";
  doc["model"] = {{"type", lm.type}, {"params", lm.params}};
  doc["settings"] = {{"cells", cells}, {"reps", reps}, {"iters", sopt.squarings}};

  if (opts.contains("lambda0_sweep")) {
    acid::require(lm.type == "random_telegraph" || lm.type == "dark_current",
                  acid::ErrorCode::InvalidArgument,
                  "lambda0_sweep applies to telegraph models");
    Table t;
    t.header = "lambda0,rate";
    t.cols = 2;
    for (double l0 : opts["lambda0_sweep"].get<std::vector<double>>()) {
      acid::RandomTelegraphParams tp;
      tp.k1 = lm.params["k1"].get<double>();
      tp.k2 = lm.params["k2"].get<double>();
      tp.c = lm.params.contains("c") ? lm.params["c"].get<double>() : 1.0;
      tp.lambda0 = l0;
      const acid::PdmpModel m = acid::random_telegraph_model(tp);
      const acid::InputLaw law = acid::input_law(acid::telegraph_input(tp));
      const auto r = acid::mi_rate_pipeline(m, law, cells, reps, sopt);
      t.data.push_back(l0);
      t.data.push_back(r.rate);
    }
    res->tables["sweep"] = std::move(t);
  }

  const auto r = acid::mi_rate_pipeline(lm.model, *lm.law, cells, reps, sopt);
  doc["rate"] = r.rate;
  doc["input_term"] = r.input_term;
  doc["output_term"] = r.output_term;
  doc["truncation_error_bound"] = r.truncation_error_bound;
  if (r.rate_floor_missing) doc["diagnostics"]["rate_floor_missing"] = true;
  res->doc = doc.dump(2);
}

void cmd_phase(const json& opts, acid_result* res) {
  const double k1_max = opt_num(opts, "k1_max", 0.5);
  const double k2_max = opt_num(opts, "k2_max", 0.5);
  const int n1 = static_cast<int>(opt_long(opts, "n1", 16));
  const int n2 = static_cast<int>(opt_long(opts, "n2", 16));
  const bool nullclines = opt_bool(opts, "nullclines", true);
  const int threads = static_cast<int>(opt_long(opts, "threads", 0));
  const acid::PhasePlaneReport rep =
      acid::phase_plane(k1_max, k2_max, n1, n2, true, nullclines, threads);

  Table grid;
  grid.header = "k1,k2,rate,d1,d2,region";
  grid.cols = 6;
  for (const auto& p : rep.grid) {
    grid.data.insert(grid.data.end(), {p.k1, p.k2, p.rate, p.d1, p.d2,
                                       p.region == 'A'   ? 1.0
                                       : p.region == 'B' ? 2.0
                                       : p.region == 'C' ? 3.0
                                                         : 0.0});
  }
  res->tables["grid"] = std::move(grid);
  for (int which : {1, 2}) {
    const auto& line = which == 1 ? rep.nullcline1 : rep.nullcline2;
    if (line.empty()) continue;
    Table t;
    t.header = "k1,k2";
    t.cols = 2;
    for (const auto& p : line) {
      t.data.push_back(p.k1);
      t.data.push_back(p.k2);
    }
    res->tables["nullcline" + std::to_string(which)] = std::move(t);
  }

  json doc;
  doc["command"] = "phase";
  doc["settings"] = {{"k1_max", k1_max}, {"k2_max", k2_max}, {"n1", n1}, {"n2", n2}};
  if (rep.has_optimum)
    doc["optimum"] = {{"k1", rep.optimum.k1},
                      {"k2", rep.optimum.k2},
                      {"location", rep.optimum.location}};
  res->doc = doc.dump(2);
}

void cmd_validate(const acid::LoadedModel& lm, const json& opts, acid_result* res) {
  const acid::SolverOptions sopt = solver_options(opts);
  const long cells = opt_long(opts, "cells", 200);
  const int reps = static_cast<int>(opt_long(opts, "reps", 1));
  const long bins = opt_long(opts, "bins", 200);
  const uint64_t seed = static_cast<uint64_t>(opt_long(opts, "seed", 20240601));

  json doc;
  doc["command"] = "validate";
  doc["model"] = {{"type", lm.type}, {"params", lm.params}};
  doc["settings"] = {{"cells", cells}, {"reps", reps}, {"iters", sopt.squarings},
                     {"bins", bins}, {"seed", seed}};

  if (opts.contains("compare") && opts["compare"] == "hawkes") {
    acid::require(lm.type == "gamma_filter", acid::ErrorCode::InvalidArgument,
                  "the hawkes comparison runs on a gamma_filter model");
    const double mu = lm.params["mu"].get<double>();
    const double c = lm.params.contains("c") ? lm.params["c"].get<double>() : 1.0;
    std::vector<double> s2s = opts.contains("sigma2")
                                  ? opts["sigma2"].get<std::vector<double>>()
                                  : std::vector<double>{lm.params["sigma2"].get<double>()};
    std::vector<double> gammas = opts.contains("gamma")
                                     ? opts["gamma"].get<std::vector<double>>()
                                     : std::vector<double>{lm.params["gamma"].get<double>()};
    Table t;
    t.header = "sigma2,gamma,w1";
    t.cols = 3;
    for (double s2 : s2s) {
      for (double g : gammas) {
        acid::GammaFilterParams gp{mu, s2, g, c, acid::GammaFilterParams::Variant::Cir};
        const acid::PdmpModel gamma_m = acid::gamma_filter_model(gp);
        const acid::PdmpModel hawkes_m = acid::hawkes_model(acid::hawkes_from_moments(mu, s2, g, c));
        acid::AcidMeshOptions mo;
        mo.bins = bins;
        auto run = [&](const acid::PdmpModel& m, long cpa, int r) {
          const acid::Partition part = acid::make_partition(m, cpa, r, sopt);
          const acid::BoundaryMatrix bm = acid::build_boundary_matrix(m, part, sopt);
          const acid::BoundaryDensity bd = acid::solve_boundary_density(
              bm, sopt.squarings, acid::normalization_constant(m, sopt), sopt.fixed_point_tol);
          return acid::acid_pdf(m, part, bd, mo, sopt);
        };
        const acid::AcidDistribution dg = run(gamma_m, cells, reps);
        const acid::AcidDistribution dh = run(hawkes_m, std::max<long>(cells, 200), 3);
        t.data.insert(t.data.end(), {s2, g, acid::wasserstein1(dg, dh)});
      }
    }
    res->tables["w1_grid"] = std::move(t);
    res->doc = doc.dump(2);
    return;
  }

  // default: simulation-free vs Monte Carlo intensity distribution
  const acid::Partition part = acid::make_partition(lm.model, cells, reps, sopt);
  const acid::BoundaryMatrix bm = acid::build_boundary_matrix(lm.model, part, sopt);
  const acid::BoundaryDensity bd = acid::solve_boundary_density(
      bm, sopt.squarings, acid::normalization_constant(lm.model, sopt), sopt.fixed_point_tol);
  acid::AcidMeshOptions mo;
  mo.bins = bins;
  const acid::AcidDistribution dist = acid::acid_pdf(lm.model, part, bd, mo, sopt);

  const long samples = opt_long(opts, "samples", 1000000);
  const int replicates = static_cast<int>(opt_long(opts, "replicates", 8));
  const double rate_scale = lm.model.stationary_mean_intensity.value_or(1.0);
  const double horizon =
      opt_num(opts, "horizon", 0) > 0
          ? opts["horizon"].get<double>()
          : 50.0 / std::max(lm.model.tail_rate_hint, 1e-3) +
                1.2 * static_cast<double>(samples) / std::max(replicates, 1) / rate_scale;
  const double burn = opt_num(opts, "burn_in", 20.0 / std::max(lm.model.tail_rate_hint, 1e-3));
  const acid::AcidDistribution emp = acid::empirical_acid(
      lm.model, horizon, burn, samples, seed, dist.edges, sopt.threads, replicates);

  res->tables["acid"] = acid_table(dist);
  res->tables["empirical"] = acid_table(emp);
  doc["w1"] = acid::wasserstein1(dist, emp);
  doc["diagnostics"] = acid_diag(bm, bd, dist);
  doc["settings"]["samples"] = samples;
  doc["settings"]["horizon"] = horizon;
  doc["settings"]["burn_in"] = burn;
  doc["settings"]["replicates"] = replicates;
  res->doc = doc.dump(2);
}

}  // namespace

extern "C" {

const char* acid_version(void) { return "1.0.0"; }

const char* acid_status_name(acid_status status) {
  switch (status) {
    case ACID_OK: return "Ok";
    case ACID_ERR_INVALID_ARGUMENT: return "InvalidArgument";
    case ACID_ERR_NON_FINITE_STATE: return "NonFiniteState";
    case ACID_ERR_EVENT_TOLERANCE: return "EventToleranceNotMet";
    case ACID_ERR_ALL_STATES_ZERO: return "AllStatesZero";
    case ACID_ERR_NONSTATIONARY: return "Nonstationary";
    case ACID_ERR_SUPPORT_NOT_COVERED: return "SupportNotCovered";
    case ACID_ERR_NOT_CONVERGED: return "NotConverged";
    case ACID_ERR_SINGULAR_KERNEL: return "SingularKernel";
    case ACID_ERR_LOST_NULLCLINE: return "LostNullcline";
    case ACID_ERR_FILTER_BLOWUP: return "FilterBlowup";
    case ACID_ERR_FILE_NOT_FOUND: return "FileNotFound";
    case ACID_ERR_PARSE: return "ParseError";
    case ACID_ERR_IO: return "IoError";
    case ACID_ERR_INTERNAL: return "Internal";
  }
  return "Unknown";
}

const char* acid_last_error(void) { return g_last_error.c_str(); }

acid_status acid_model_from_json(const char* json_text, acid_model** out) {
  if (!json_text || !out) {
    g_last_error = "InvalidArgument: null pointer";
    return ACID_ERR_INVALID_ARGUMENT;
  }
  *out = nullptr;
  return guarded([&] {
    auto m = std::make_unique<acid_model>();
    m->loaded = acid::load_model_text(json_text);
    *out = m.release();
  });
}

acid_status acid_model_from_file(const char* path, acid_model** out) {
  if (!path || !out) {
    g_last_error = "InvalidArgument: null pointer";
    return ACID_ERR_INVALID_ARGUMENT;
  }
  *out = nullptr;
  return guarded([&] {
    auto m = std::make_unique<acid_model>();
    m->loaded = acid::load_model_file(path);
    *out = m.release();
  });
}

void acid_model_free(acid_model* model) { delete model; }

acid_status acid_run(const acid_model* model, const char* command, const char* options_json,
                     acid_result** out) {
  if (!command || !out) {
    g_last_error = "InvalidArgument: null pointer";
    return ACID_ERR_INVALID_ARGUMENT;
  }
  *out = nullptr;
  return guarded([&] {
    json opts = json::object();
    if (options_json && options_json[0] != '\0') {
      opts = json::parse(options_json, nullptr, false);
      acid::require(!opts.is_discarded(), acid::ErrorCode::ParseError,
                    "options are not valid JSON");
    }
    const std::string cmd = command;
    auto res = std::make_unique<acid_result>();
    if (cmd == "phase") {
      cmd_phase(opts, res.get());
    } else {
      acid::require(model != nullptr, acid::ErrorCode::InvalidArgument,
                    "command '" + cmd + "' needs a model");
      if (cmd == "acid")
        cmd_acid(model->loaded, opts, res.get());
      else if (cmd == "mirate")
        cmd_mirate(model->loaded, opts, res.get());
      else if (cmd == "validate")
        cmd_validate(model->loaded, opts, res.get());
      else
        acid::fail(acid::ErrorCode::InvalidArgument, "unknown command '" + cmd + "'");
    }
    *out = res.release();
  });
}

const char* acid_result_json(const acid_result* result) {
  return result ? result->doc.c_str() : "";
}

acid_status acid_result_table(const acid_result* result, const char* name, const double** data,
                              size_t* rows, size_t* cols) {
  if (!result || !name || !data || !rows || !cols) {
    g_last_error = "InvalidArgument: null pointer";
    return ACID_ERR_INVALID_ARGUMENT;
  }
  auto it = result->tables.find(name);
  if (it == result->tables.end()) {
    g_last_error = std::string("InvalidArgument: no table named '") + name + "'";
    return ACID_ERR_INVALID_ARGUMENT;
  }
  *data = it->second.data.data();
  *cols = it->second.cols;
  *rows = it->second.cols ? it->second.data.size() / it->second.cols : 0;
  return ACID_OK;
}

acid_status acid_result_table_header(const acid_result* result, const char* name,
                                     const char** header) {
  if (!result || !name || !header) {
    g_last_error = "InvalidArgument: null pointer";
    return ACID_ERR_INVALID_ARGUMENT;
  }
  auto it = result->tables.find(name);
  if (it == result->tables.end()) {
    g_last_error = std::string("InvalidArgument: no table named '") + name + "'";
    return ACID_ERR_INVALID_ARGUMENT;
  }
  *header = it->second.header.c_str();
  return ACID_OK;
}

void acid_result_free(acid_result* result) { delete result; }

}  // extern "C"
