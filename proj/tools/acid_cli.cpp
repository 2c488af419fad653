// Command-line front end. All computations go through the shared-library C
// API; this binary only assembles options, writes CSV/JSON files and the run
// manifest.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <string>
#include <vector>

#include "acid/acid.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out.good()) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

[[noreturn]] void die(const std::string& code, const std::string& message) {
  json err{{"error", code}, {"message", message}};
  std::cout << err.dump() << "\n";
  std::exit(2);
}

void check(acid_status st) {
  if (st != ACID_OK) die(acid_status_name(st), acid_last_error());
}

// Writes one named table as CSV (17 significant digits, '.' decimal point).
// The `region` column of the phase grid is emitted as its letter.
bool write_table_csv(const acid_result* res, const std::string& name, const fs::path& path) {
  const double* data = nullptr;
  size_t rows = 0, cols = 0;
  if (acid_result_table(res, name.c_str(), &data, &rows, &cols) != ACID_OK) return false;
  const char* header = "";
  acid_result_table_header(res, name.c_str(), &header);

  std::vector<std::string> columns;
  {
    std::string h = header;
    size_t pos = 0;
    while (pos != std::string::npos) {
      const size_t comma = h.find(',', pos);
      columns.push_back(h.substr(pos, comma == std::string::npos ? comma : comma - pos));
      pos = comma == std::string::npos ? comma : comma + 1;
    }
  }

  std::string out;
  out.reserve(rows * cols * 20);
  out += header;
  out += "\n";
  static const char* region_names[] = {"?", "A", "B", "C"};
  for (size_t r = 0; r < rows; ++r) {
    for (size_t c = 0; c < cols; ++c) {
      if (c) out += ",";
      const double v = data[r * cols + c];
      if (c < columns.size() && columns[c] == "region") {
        const int code = static_cast<int>(v);
        out += region_names[(code >= 0 && code <= 3) ? code : 0];
      } else if (c < columns.size() && columns[c] == "cell_index") {
        out += std::to_string(static_cast<long>(v));
      } else {
        out += format_double(v);
      }
    }
    out += "\n";
  }
  write_atomic(path, out);
  return true;
}

struct CommonArgs {
  std::string model_path;
  std::string out_dir = ".";
  long cells = 200;
  long reps = 1;
  long iters = 15;
  double mesh = 0;
  long bins = 400;
  double tmax = 0;
  uint64_t seed = 20240601;
  long samples = 1000000;
  double horizon = 0;
  long threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool needs_model) {
  auto* m = cmd->add_option("--model", a.model_path, "model description JSON file");
  if (needs_model) m->required();
  cmd->add_option("--out", a.out_dir, "output directory");
  cmd->add_option("--cells", a.cells, "partition cells per axis");
  cmd->add_option("--reps", a.reps, "representatives per cell axis");
  cmd->add_option("--iters", a.iters, "fixed-point squarings (power 2^L)");
  cmd->add_option("--mesh", a.mesh, "intensity bin width");
  cmd->add_option("--bins", a.bins, "intensity bin count");
  cmd->add_option("--tmax", a.tmax, "sojourn integration horizon");
  cmd->add_option("--seed", a.seed, "random seed");
  cmd->add_option("--samples", a.samples, "Monte Carlo sample count");
  cmd->add_option("--horizon", a.horizon, "Monte Carlo path horizon");
  cmd->add_option("--threads", a.threads, "worker threads (0 = auto)");
}

json base_options(const CommonArgs& a) {
  json o{{"cells", a.cells}, {"reps", a.reps}, {"iters", a.iters},
         {"bins", a.bins},   {"seed", a.seed}, {"threads", a.threads}};
  if (a.mesh > 0) o["mesh"] = a.mesh;
  if (a.tmax > 0) o["tmax"] = a.tmax;
  return o;
}

struct ModelHandle {
  acid_model* ptr = nullptr;
  ~ModelHandle() { acid_model_free(ptr); }
};

void run_and_emit(const CommonArgs& args, const std::string& command, const json& options,
                  const std::vector<std::string>& tables) {
  const auto t0 = std::chrono::steady_clock::now();

  ModelHandle model;
  if (!args.model_path.empty()) {
    check(acid_model_from_file(args.model_path.c_str(), &model.ptr));
  }
  acid_result* res = nullptr;
  check(acid_run(model.ptr, command.c_str(), options.dump().c_str(), &res));

  const fs::path out_dir(args.out_dir);
  json manifest = json::parse(acid_result_json(res));
  manifest["tool_version"] = acid_version();
  manifest["seed"] = args.seed;
  if (!args.model_path.empty()) manifest["model_file"] = args.model_path;
  manifest["outputs"] = json::array();

  for (const auto& name : tables) {
    const fs::path path = out_dir / (command + "_" + name + ".csv");
    if (write_table_csv(res, name, path))
      manifest["outputs"].push_back(path.string());
  }
  const auto t1 = std::chrono::steady_clock::now();
  manifest["wall_time_seconds"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count() / 1000.0;

  const fs::path mpath = out_dir / (command + "_manifest.json");
  write_atomic(mpath, manifest.dump(2) + "\n");
  acid_result_free(res);

  json summary = manifest;
  summary.erase("outputs");
  std::cout << "wrote " << mpath.string() << "\n";
  for (const auto& name : tables) {
    const fs::path path = out_dir / (command + "_" + name + ".csv");
    if (fs::exists(path)) std::cout << "wrote " << path.string() << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional-intensity distributions and Poisson-channel information rates"};
  app.require_subcommand(1);

  CommonArgs a_acid, a_mirate, a_phase, a_validate;

  auto* c_acid = app.add_subcommand(
      "acid", "boundary density and asymptotic conditional intensity distribution");
  add_common(c_acid, a_acid, true);

  auto* c_mirate = app.add_subcommand("mirate", "mutual information rate");
  add_common(c_mirate, a_mirate, true);
  std::vector<double> lambda0_sweep;
  c_mirate->add_option("--lambda0-sweep", lambda0_sweep,
                       "recompute the rate for each dark current value");

  auto* c_phase = app.add_subcommand("phase", "telegraph-channel phase plane");
  add_common(c_phase, a_phase, false);
  double k1_max = 0.5, k2_max = 0.5;
  long n1 = 16, n2 = 16;
  bool no_nullclines = false;
  c_phase->add_option("--k1-max", k1_max, "grid upper bound in k1");
  c_phase->add_option("--k2-max", k2_max, "grid upper bound in k2");
  c_phase->add_option("--n1", n1, "grid points in k1");
  c_phase->add_option("--n2", n2, "grid points in k2");
  c_phase->add_flag("--no-nullclines", no_nullclines, "skip nullcline tracing");

  auto* c_validate = app.add_subcommand("validate", "Monte Carlo cross-checks");
  add_common(c_validate, a_validate, true);
  std::string compare;
  std::vector<double> sweep_sigma2, sweep_gamma;
  long replicates = 8;
  c_validate->add_option("--compare", compare, "comparison target (hawkes)");
  c_validate->add_option("--sweep-sigma2", sweep_sigma2, "sigma2 values for the comparison");
  c_validate->add_option("--sweep-gamma", sweep_gamma, "gamma values for the comparison");
  c_validate->add_option("--replicates", replicates, "Monte Carlo replicates");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_acid->parsed()) {
      run_and_emit(a_acid, "acid", base_options(a_acid), {"boundary", "acid"});
    } else if (c_mirate->parsed()) {
      json opts = base_options(a_mirate);
      if (!lambda0_sweep.empty()) opts["lambda0_sweep"] = lambda0_sweep;
      run_and_emit(a_mirate, "mirate", opts, {"sweep"});
    } else if (c_phase->parsed()) {
      json opts = base_options(a_phase);
      opts["k1_max"] = k1_max;
      opts["k2_max"] = k2_max;
      opts["n1"] = n1;
      opts["n2"] = n2;
      opts["nullclines"] = !no_nullclines;
      run_and_emit(a_phase, "phase", opts, {"grid", "nullcline1", "nullcline2"});
    } else if (c_validate->parsed()) {
      json opts = base_options(a_validate);
      opts["samples"] = a_validate.samples;
      opts["replicates"] = replicates;
      if (a_validate.horizon > 0) opts["horizon"] = a_validate.horizon;
      if (!compare.empty()) opts["compare"] = compare;
      if (!sweep_sigma2.empty()) opts["sigma2"] = sweep_sigma2;
      if (!sweep_gamma.empty()) opts["gamma"] = sweep_gamma;
      run_and_emit(a_validate, "validate", opts,
                   compare.empty() ? std::vector<std::string>{"acid", "empirical"}
                                   : std::vector<std::string>{"w1_grid"});
    }
  } catch (const std::exception& e) {
    die("IoError", e.what());
  }
  return 0;
}
