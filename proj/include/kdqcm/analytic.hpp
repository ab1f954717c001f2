#pragma once

#include <array>
#include <complex>
#include <utility>

#include "kdqcm/model.hpp"

namespace kdqcm {

/// Inputs of the qubit-qubit closed forms. g is the coupling seen by the
/// collision unitary and lambda the coefficient of chi_A in rho_A, so both
/// modes map onto the same expressions.
struct AnalyticParams {
  double hbar = 1.0;
  double omega_s = 1.0;
  double omega_a = 1.0;
  double g = 1.0;
  double tau = 0.1;
  double beta = 1.0;
  double lambda = 0.0;
  double rho11 = 1.0;
  std::complex<double> rho12 = 0.0;

  static AnalyticParams from(const ModelConfig& cfg, const SystemStateParams& state);
  double detuning() const noexcept { return omega_s - omega_a; }
  double pulse_area() const noexcept { return g * tau; }
};

struct AuxiliaryFunctions {
  double c_beta = 0.0;     // 1 + exp(beta hbar omega_a)
  double tau_tilde = 0.0;  // tau sqrt(4 g^2 + Delta^2)
  double a = 0.0;
  double b = 0.0;
  double theta = 0.0;      // atan2(b, a), 0 when a = b = 0
  double j1 = 0.0;         // lambda Re rho12
  double j2 = 0.0;         // lambda Im rho12
  double z_a = 0.0;
};

AuxiliaryFunctions auxiliary(const AnalyticParams& p);

/// Resonant KDQ entries, ordered (in, fin) = (0,0), (0,1), (1,0), (1,1) with
/// index 0 the upper level, matching kdq_distribution.
using KdqQuad = std::array<std::complex<double>, 4>;
KdqQuad resonant_kdq_us(const AnalyticParams& p);
KdqQuad resonant_kdq_q(const AnalyticParams& p);
KdqQuad resonant_kdq_w(const AnalyticParams& p);

/// System energy change after one collision, any detuning.
double delta_e_s(const AnalyticParams& p);
/// (lower, upper): the oscillating term replaced by its extreme values.
std::pair<double, double> delta_e_s_envelopes(const AnalyticParams& p);

double delta_e_sa(const AnalyticParams& p);
/// |Delta| >> g: 4 hbar g lambda r sin(Delta tau / 2) sin(Delta tau / 2 - phi_c).
double delta_e_sa_limit(const AnalyticParams& p);

struct ResonantWorkHeatStats {
  double w_mean = 0.0;
  std::complex<double> w_variance;
  double q_mean = 0.0;
  double q_variance = 0.0;
};
ResonantWorkHeatStats resonant_w_q_stats(const AnalyticParams& p);

struct ResonantNonPositivity {
  double n_re = 0.0;
  double n_im = 0.0;
};
ResonantNonPositivity resonant_nonpositivity(const AnalyticParams& p);

struct ResonantEnergyStats {
  double delta_e_s = 0.0;
  std::complex<double> variance_u_s;
};
ResonantEnergyStats resonant_energy_stats(const AnalyticParams& p);

}  // namespace kdqcm
