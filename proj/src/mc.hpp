#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "distribution.hpp"
#include "zoo.hpp"

namespace acid {

/// One realized counting-process trajectory, with the modulating input path
/// when it was co-simulated.
struct EventPath {
  std::vector<double> jump_times;
  std::vector<double> input_switch_times;  // starts at 0 with the initial state
  std::vector<int> input_states;           // state entered at each switch time
  double horizon = 0;
  uint64_t seed = 0;
  long truncated_sojourns = 0;  // sojourns cut off at the internal cap
};

struct Estimate {
  double value = 0;
  double std_error = 0;
};

struct McSummary {
  long sample_count = 0;
  double burn_in = 0;
  std::map<std::string, Estimate> estimates;
  std::optional<AcidDistribution> histogram;
};

struct McOptions {
  double dt = 0.01;      // replay / hazard-accumulation step
  double burn_in = -1;   // < 0 selects the model-based default
  int threads = 0;
};

/// Derives an independent stream seed (splitmix64).
uint64_t split_seed(uint64_t master, uint64_t index);

/// Exact co-simulation of the input chain and its modulated output
/// (Gillespie for the chain, thinning at the maximal rate for events).
EventPath simulate_mmpp(const CtmcInput& input, double horizon, uint64_t seed);

/// Conditional-intensity path of the exact filter along the given events,
/// sampled on a dt grid augmented with the event instants.
std::vector<std::pair<double, double>> snyder_replay(const EventPath& events,
                                                     const CtmcInput& input, double dt);

/// Simulates the output process alone from its conditional intensity.
/// theta0 empty selects the model's reset statistic.
EventPath marginal_simulate(const PdmpModel& model, double horizon, uint64_t seed,
                            std::vector<double> theta0 = {}, double dt = 0.01);

/// Histogram of the conditional intensity at equispaced sampling times.
AcidDistribution empirical_acid(const PdmpModel& model, double horizon, double burn_in,
                                long samples, uint64_t seed, std::vector<double> mesh_edges,
                                int threads = 0, int replicates = 1);

/// Information-rate estimate with the exact filter (co-simulation + replay).
McSummary mc_mi_rate(const CtmcInput& input, double horizon, int replicates, uint64_t seed,
                     const McOptions& opt = {});

/// Information-rate estimate with an approximate filter, by marginal
/// simulation of the filter itself; the input enters through its law only.
McSummary mc_mi_rate_filter(const InputLaw& input, const PdmpModel& filter, double horizon,
                            int replicates, uint64_t seed, const McOptions& opt = {});

/// Time-average distance between two filters replayed on one event stream.
double path_metric(const EventPath& events, const PdmpModel& filter_a, const PdmpModel& filter_b,
                   double dt = 0.01);

/// Slope of the output count mean/variance and, for two-dimensional filters,
/// the stationary moment decomposition, against declared closed forms.
McSummary moment_checks(const PdmpModel& model, double horizon, int replicates, uint64_t seed,
                        const McOptions& opt = {});

/// Two-sample Kolmogorov-Smirnov p-value for counts in windows of the given
/// length (marginal vs co-simulation equivalence checks).
double ks_window_pvalue(const EventPath& a, const EventPath& b, double window, double burn_in);

}  // namespace acid
