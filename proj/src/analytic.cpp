#include "kdqcm/analytic.hpp"

#include <cmath>

#include "kdqcm/error.hpp"

namespace kdqcm {

namespace {

using C = std::complex<double>;

void require_resonance(const AnalyticParams& p, const char* what) {
  const double scale = std::max(std::abs(p.omega_s), std::abs(p.omega_a));
  if (std::abs(p.detuning()) > 1e-12 * scale) {
    throw Error(ErrorCode::ModeMismatch, std::string(what) + ": closed form holds only at resonance");
  }
}

// Thermal weights of the upper (e^{-x}/Z) and lower (e^{x}/Z) ancilla levels.
struct Thermal {
  double x, z, up, down;
};

Thermal thermal(const AnalyticParams& p) {
  const double x = 0.5 * p.beta * p.hbar * p.omega_a;
  const double z = 2.0 * std::cosh(x);
  return {x, z, std::exp(-x) / z, std::exp(x) / z};
}

}  // namespace

AnalyticParams AnalyticParams::from(const ModelConfig& cfg, const SystemStateParams& state) {
  AnalyticParams p;
  p.hbar = cfg.hbar;
  p.omega_s = cfg.omega_s;
  p.omega_a = cfg.omega_a;
  p.g = cfg.effective_coupling();
  p.tau = cfg.tau;
  p.beta = cfg.beta;
  p.lambda = cfg.lambda_eff();
  p.rho11 = state.rho11;
  p.rho12 = std::polar(state.r, state.phi_c);
  return p;
}

AuxiliaryFunctions auxiliary(const AnalyticParams& p) {
  AuxiliaryFunctions f;
  const double d = p.detuning();
  const double rabi = std::sqrt(4.0 * p.g * p.g + d * d);
  f.c_beta = 1.0 + std::exp(p.beta * p.hbar * p.omega_a);
  f.tau_tilde = p.tau * rabi;
  f.j1 = p.lambda * p.rho12.real();
  f.j2 = p.lambda * p.rho12.imag();
  f.a = f.c_beta * f.j2 * rabi;
  f.b = p.g * (f.c_beta * p.rho11 - 1.0) - d * f.c_beta * f.j1;
  f.theta = (f.a == 0.0 && f.b == 0.0) ? 0.0 : std::atan2(f.b, f.a);
  f.z_a = 2.0 * std::cosh(0.5 * p.beta * p.hbar * p.omega_a);
  return f;
}

KdqQuad resonant_kdq_q(const AnalyticParams& p) {
  require_resonance(p, "resonant_kdq_q");
  const Thermal t = thermal(p);
  const double phi = p.pulse_area();
  const double c2 = std::cos(phi) * std::cos(phi);
  const double s2 = std::sin(phi) * std::sin(phi);
  const double r0 = p.rho11;
  const double r1 = 1.0 - p.rho11;
  return {C(r0 * (t.down * c2 + t.up)), C(r0 * t.down * s2), C(r1 * t.up * s2),
          C(r1 * (t.up * c2 + t.down))};
}

KdqQuad resonant_kdq_w(const AnalyticParams& p) {
  require_resonance(p, "resonant_kdq_w");
  const AuxiliaryFunctions f = auxiliary(p);
  const double s = 0.5 * std::sin(2.0 * p.pulse_area());
  return {C(-f.j2 * s, f.j1 * s), C(f.j2 * s, -f.j1 * s), C(-f.j2 * s, -f.j1 * s),
          C(f.j2 * s, f.j1 * s)};
}

KdqQuad resonant_kdq_us(const AnalyticParams& p) {
  const KdqQuad q = resonant_kdq_q(p);
  const KdqQuad w = resonant_kdq_w(p);
  KdqQuad u;
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = q[i] + w[i];
  return u;
}

double delta_e_s(const AnalyticParams& p) {
  const AuxiliaryFunctions f = auxiliary(p);
  const double d = p.detuning();
  const double den = f.c_beta * (4.0 * p.g * p.g + d * d);
  const double amp = std::hypot(f.a, f.b);
  return 2.0 * p.hbar * p.g * p.omega_s / den *
         (p.g * (1.0 - f.c_beta * p.rho11) + d * f.c_beta * f.j1 - amp * std::sin(f.tau_tilde - f.theta));
}

std::pair<double, double> delta_e_s_envelopes(const AnalyticParams& p) {
  const AuxiliaryFunctions f = auxiliary(p);
  const double d = p.detuning();
  const double pre = 2.0 * p.hbar * p.g * p.omega_s / (f.c_beta * (4.0 * p.g * p.g + d * d));
  const double mid = p.g * (1.0 - f.c_beta * p.rho11) + d * f.c_beta * f.j1;
  const double amp = std::hypot(f.a, f.b);
  const double e1 = pre * (mid - amp);
  const double e2 = pre * (mid + amp);
  return {std::min(e1, e2), std::max(e1, e2)};
}

double delta_e_sa(const AnalyticParams& p) {
  const AuxiliaryFunctions f = auxiliary(p);
  const double d = p.detuning();
  const double den = f.c_beta * (4.0 * p.g * p.g + d * d);
  const double half = 0.5 * f.tau_tilde;
  return -4.0 * p.hbar * p.g * d / den * std::hypot(f.a, f.b) * std::sin(half) * std::cos(half - f.theta);
}

double delta_e_sa_limit(const AnalyticParams& p) {
  const double r = std::abs(p.rho12);
  const double phi_c = r == 0.0 ? 0.0 : std::arg(p.rho12);
  const double half = 0.5 * p.detuning() * p.tau;
  return 4.0 * p.hbar * p.g * p.lambda * r * std::sin(half) * std::sin(half - phi_c);
}

ResonantWorkHeatStats resonant_w_q_stats(const AnalyticParams& p) {
  require_resonance(p, "resonant_w_q_stats");
  const AuxiliaryFunctions f = auxiliary(p);
  const Thermal t = thermal(p);
  const double e = p.hbar * p.omega_s;
  const double phi = p.pulse_area();
  const double s2phi = std::sin(2.0 * phi);
  const double sin2 = std::sin(phi) * std::sin(phi);
  ResonantWorkHeatStats out;
  out.w_mean = -e * f.j2 * s2phi;
  out.w_variance = -e * e * s2phi * C(f.j2 * f.j2 * s2phi, f.j1);
  out.q_mean = e * sin2 * (t.up - p.rho11);
  out.q_variance = e * e * sin2 * (std::exp(-t.x) + 2.0 * std::sinh(t.x) * p.rho11) / t.z -
                   out.q_mean * out.q_mean;
  return out;
}

ResonantNonPositivity resonant_nonpositivity(const AnalyticParams& p) {
  require_resonance(p, "resonant_nonpositivity");
  const AuxiliaryFunctions f = auxiliary(p);
  const Thermal t = thermal(p);
  const double phi = p.pulse_area();
  const double sphi = std::sin(phi);
  const double cphi = std::cos(phi);
  ResonantNonPositivity out;
  out.n_re = -1.0;
  for (int k : {1, -1}) {
    const double rho_k = k == 1 ? p.rho11 : 1.0 - p.rho11;
    const double e_k = std::exp(k * t.x) / t.z;
    const double e_mk = std::exp(-k * t.x) / t.z;
    out.n_re += std::abs(sphi) * std::abs(rho_k * e_k * sphi + k * f.j2 * cphi);
    out.n_re += std::abs(0.5 * rho_k * (1.0 + e_mk + e_k * std::cos(2.0 * phi)) -
                         0.5 * k * f.j2 * std::sin(2.0 * phi));
  }
  out.n_im = 2.0 * std::abs(f.j1 * std::sin(2.0 * phi));
  return out;
}

ResonantEnergyStats resonant_energy_stats(const AnalyticParams& p) {
  require_resonance(p, "resonant_energy_stats");
  const AuxiliaryFunctions f = auxiliary(p);
  const Thermal t = thermal(p);
  const double e = p.hbar * p.omega_s;
  const double phi = p.pulse_area();
  const double sin2 = std::sin(phi) * std::sin(phi);
  const double s2phi = std::sin(2.0 * phi);
  ResonantEnergyStats out;
  out.delta_e_s = -e * (p.rho11 - t.up) * sin2 - e * f.j2 * s2phi;
  const double second = e * e * (std::exp(-t.x) + 2.0 * std::sinh(t.x) * p.rho11) / t.z * sin2;
  out.variance_u_s = C(second, -e * e * f.j1 * s2phi) - out.delta_e_s * out.delta_e_s;
  return out;
}

}  // namespace kdqcm
