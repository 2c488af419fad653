#pragma once

#include <functional>
#include <string>
#include <vector>

#include "model.hpp"

namespace acid {

/// Finite-state Markov input to a modulated Poisson channel.
struct CtmcInput {
  std::vector<std::string> states;
  std::vector<std::vector<double>> generator;  // Q[i][j] = rate i -> j, rows sum to 0
  std::vector<double> rates;                   // lambda per state

  int size() const { return static_cast<int>(states.size()); }
  void validate() const;
  std::vector<double> stationary() const;  // unique stationary law (requires irreducibility)
  double mean_rate() const;                // E[lambda_inf]
  double mean_phi_rate() const;            // E[phi(lambda_inf)]
};

/// Stationary input law summary used by the information-rate computations.
struct InputLaw {
  double mean = 0;      // E[lambda_inf]
  double phi_mean = 0;  // E[phi(lambda_inf)]
};

struct RandomTelegraphParams {
  double k1 = 0.1;       // Off -> On rate
  double k2 = 0.1;       // On -> Off rate
  double c = 1.0;        // gain; the intensity amplitude is lambda1 - lambda0 = c
  double lambda0 = 0.0;  // dark current
};

/// Quantities derived from the telegraph parameters: equilibrium roots of the
/// filter flow, the reachable infimum of the jump target, and the mean rate.
struct TelegraphDerived {
  double lambda1, dlam;
  double omega1, omega2, domega;
  double f_inf;  // f(omega1), lower edge of the post-event support (lambda0 > 0)
  double mean_rate;
};
TelegraphDerived telegraph_derived(const RandomTelegraphParams& p);

struct DonsoffParams {
  double alpha01 = 0.4;  // Off -> first On
  double alpha11 = 0.8;  // first On -> second On
  double alpha10 = 0.8;  // second On -> Off
  double c = 1.0;
};

struct HawkesParams {
  double mu0 = 0.5;   // base intensity
  double beta = 0.5;  // jump size
  double alpha = 1.0; // kernel decay; stationarity requires alpha > beta
};

struct GammaFilterParams {
  enum class Variant { Cir, BirthDeath };
  double mu = 2.0;
  double sigma2 = 1.0;
  double gamma = 1.0;
  double c = 1.0;
  Variant variant = Variant::Cir;
};

PdmpModel random_telegraph_model(const RandomTelegraphParams& p);
PdmpModel donsoff_model(const DonsoffParams& p);
PdmpModel hawkes_model(const HawkesParams& p);
PdmpModel gamma_filter_model(const GammaFilterParams& p);
PdmpModel snyder_model(const CtmcInput& input);

/// Renewal process with the given survival function and hazard -P'/P.
PdmpModel renewal_model(std::function<double(double)> survival_fn,
                        std::function<double(double)> hazard_fn, double tau_probe = 50.0);
/// Renewal process from a tabulated survival curve (monotone cubic interpolation).
PdmpModel renewal_model_tabulated(const std::vector<double>& tau, const std::vector<double>& p);

/// Matches Hawkes parameters to an input with mean mu, autocovariance
/// sigma2 * exp(-gamma |dt|) and gain c (optimal linear filter at equilibrium).
HawkesParams hawkes_from_moments(double mu, double sigma2, double gamma, double c);

CtmcInput telegraph_input(const RandomTelegraphParams& p);
CtmcInput donsoff_input(const DonsoffParams& p);
/// Birth-death chain with birth rate gamma*mu, per-unit death rate gamma and
/// lambda(x) = c*x, truncated at `truncation` (0 picks mu + 12 sqrt(mu) + 20).
CtmcInput birth_death_input(double mu, double gamma, double c, int truncation = 0);

InputLaw input_law(const CtmcInput& input);
/// Poisson(mu) input law with lambda = c * x, evaluated by direct series summation.
InputLaw poisson_input_law(double mu, double c);

}  // namespace acid
