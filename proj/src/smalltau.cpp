#include "kdqcm/smalltau.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kdqcm/error.hpp"

namespace kdqcm {

namespace {

constexpr double kSideAgreementTol = 1e-10;
constexpr double kRealTol = 1e-9;

// Multiplier of H_int inside H_SA.
double interaction_scale(const ModelConfig& cfg) {
  return cfg.mode == Mode::Exact ? 1.0 : 1.0 / std::sqrt(cfg.tau);
}

void check_system_state(const ComplexMatrix& rho_s) {
  if (rho_s.dim() != 2 || !is_hermitian(rho_s)) {
    throw Error(ErrorCode::InvalidArgument, "smalltau: system state must be a 2x2 Hermitian matrix");
  }
}

double checked_real(Complex z, double scale, const char* what) {
  if (std::abs(z.imag()) > kRealTol * scale) {
    throw Error(ErrorCode::NumericFailure, std::string(what) + " has a non-negligible imaginary part");
  }
  return z.real();
}

}  // namespace

ComplexMatrix coherent_correction_G(const ModelConfig& cfg) {
  const Hamiltonians h = build_hamiltonians(cfg);
  return partial_trace(h.h_int * tensor(pauli::identity(), cfg.chi_a), Subsystem::S);
}

ComplexMatrix ancilla_correction_G(const ComplexMatrix& rho_s, const ModelConfig& cfg) {
  check_system_state(rho_s);
  const Hamiltonians h = build_hamiltonians(cfg);
  return partial_trace(h.h_int * tensor(rho_s, pauli::identity()), Subsystem::A);
}

CoherentWork coherent_work_bch(const ComplexMatrix& rho_s, const ModelConfig& cfg) {
  check_system_state(rho_s);
  const Hamiltonians h = build_hamiltonians(cfg);
  const ComplexMatrix g = coherent_correction_G(cfg);
  const ComplexMatrix g_a = ancilla_correction_G(rho_s, cfg);
  const double c = cfg.lambda_eff() * interaction_scale(cfg);
  const Complex pre(0.0, c * cfg.tau / cfg.hbar);
  const double scale = std::max(cfg.hbar * std::max(std::abs(cfg.omega_s), std::abs(cfg.omega_a)),
                                std::numeric_limits<double>::min()) *
                       std::max(std::abs(c * cfg.tau) * cfg.g, std::numeric_limits<double>::min());

  CoherentWork out;
  out.system_side = checked_real(pre * (commutator(g, h.h_s) * rho_s).trace(), scale, "coherent work");
  out.ancilla_side = checked_real(-pre * (commutator(g_a, h.h_a) * cfg.chi_a).trace(), scale, "coherent work");
  if (is_resonant(cfg) && std::abs(out.system_side - out.ancilla_side) > kSideAgreementTol * scale) {
    throw Error(ErrorCode::NumericFailure, "coherent_work_bch: system-side and ancilla-side values disagree");
  }
  return out;
}

double incoherent_heat_bch(const ComplexMatrix& rho_s, const ModelConfig& cfg) {
  check_system_state(rho_s);
  const Hamiltonians h = build_hamiltonians(cfg);
  const AncillaStates anc = build_ancilla(cfg);
  const double st = interaction_scale(cfg) * cfg.tau;
  const ComplexMatrix rho = tensor(rho_s, anc.rho_a_th);
  const ComplexMatrix dd = commutator(h.h_int, commutator(h.h_int, rho));
  const Complex q = (st * st / (2.0 * cfg.hbar * cfg.hbar)) * (h.h_a_ext * dd).trace();
  return checked_real(q, std::max(std::abs(q.real()), 1.0), "incoherent heat");
}

ComplexMatrix master_equation_rhs(const ComplexMatrix& rho_s, const ModelConfig& cfg) {
  if (cfg.mode != Mode::WeaklyCoherent) {
    throw Error(ErrorCode::ModeMismatch, "master_equation_rhs: requires the weakly coherent mode");
  }
  check_system_state(rho_s);
  const Hamiltonians h = build_hamiltonians(cfg);
  const AncillaStates anc = build_ancilla(cfg);
  const ComplexMatrix g = coherent_correction_G(cfg);
  const ComplexMatrix h_eff = h.h_s + cfg.lambda_tilde * g;
  const ComplexMatrix rho = tensor(rho_s, anc.rho_a_th);
  const ComplexMatrix dd = partial_trace(commutator(h.h_int, commutator(h.h_int, rho)), Subsystem::S);
  return Complex(0.0, -1.0 / cfg.hbar) * commutator(h_eff, rho_s) +
         (-0.5 / (cfg.hbar * cfg.hbar)) * dd;
}

MasterTrajectory integrate_master_equation(const ComplexMatrix& rho_s0, const ModelConfig& cfg,
                                           double t_final, double dt, int record_every) {
  if (cfg.mode != Mode::WeaklyCoherent) {
    throw Error(ErrorCode::ModeMismatch, "integrate_master_equation: requires the weakly coherent mode");
  }
  if (dt == 0.0) dt = cfg.tau / 20.0;
  if (!(dt > 0.0) || dt > cfg.tau * (1.0 + 1e-12)) {
    throw Error(ErrorCode::InvalidArgument, "integrate_master_equation: dt must satisfy 0 < dt <= tau");
  }
  if (!(t_final >= 0.0) || !std::isfinite(t_final)) {
    throw Error(ErrorCode::InvalidArgument, "integrate_master_equation: t_final must be finite and >= 0");
  }
  if (record_every < 1) {
    throw Error(ErrorCode::InvalidArgument, "integrate_master_equation: record_every must be >= 1");
  }
  check_system_state(rho_s0);
  const long steps = std::lround(t_final / dt);
  if (std::abs(static_cast<double>(steps) * dt - t_final) > 1e-9 * std::max(t_final, dt)) {
    throw Error(ErrorCode::InvalidArgument, "integrate_master_equation: t_final must be a multiple of dt");
  }

  const Hamiltonians h = build_hamiltonians(cfg);
  const AncillaStates anc = build_ancilla(cfg);
  const ComplexMatrix h_eff = h.h_s + cfg.lambda_tilde * coherent_correction_G(cfg);
  auto rhs = [&](const ComplexMatrix& r) {
    const ComplexMatrix joint = tensor(r, anc.rho_a_th);
    const ComplexMatrix dd = partial_trace(commutator(h.h_int, commutator(h.h_int, joint)), Subsystem::S);
    return ComplexMatrix(Complex(0.0, -1.0 / cfg.hbar) * commutator(h_eff, r) +
                         (-0.5 / (cfg.hbar * cfg.hbar)) * dd);
  };

  MasterTrajectory out;
  ComplexMatrix rho = rho_s0;
  out.times.push_back(0.0);
  out.states.push_back(rho);
  for (long n = 1; n <= steps; ++n) {
    const ComplexMatrix k1 = rhs(rho);
    const ComplexMatrix k2 = rhs(rho + (0.5 * dt) * k1);
    const ComplexMatrix k3 = rhs(rho + (0.5 * dt) * k2);
    const ComplexMatrix k4 = rhs(rho + dt * k3);
    rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    rho = 0.5 * (rho + rho.adjoint());
    if (n % record_every == 0 || n == steps) {
      out.times.push_back(static_cast<double>(n) * dt);
      out.states.push_back(rho);
    }
  }
  return out;
}

double OperatorWorkSpectrum::moment(int k) const {
  double m = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) m += probs[i] * std::pow(values[i], k);
  return m;
}

OperatorWorkSpectrum operator_approach(const ComplexMatrix& rho_s, const ModelConfig& cfg) {
  check_system_state(rho_s);
  if (!is_resonant(cfg)) {
    throw Error(ErrorCode::ModeMismatch, "operator_approach: defined only for resonant collisions");
  }
  const CollisionModel model(cfg);
  const Hamiltonians& h = model.hamiltonians();
  const ComplexMatrix chi = tensor(pauli::identity(), cfg.chi_a);
  const double lam = cfg.lambda_eff();

  OperatorWorkSpectrum out;
  // w = -u_A, hence the minus sign in front of H_A.
  const ComplexMatrix o1 = -lam * partial_trace(chi * h.h_a_ext, Subsystem::S);
  out.o1_norm = o1.frobenius_norm();
  const ComplexMatrix heis = model.unitary_adjoint() * h.h_a_ext * model.unitary();
  ComplexMatrix o2 = -lam * partial_trace(chi * heis, Subsystem::S);
  o2 = 0.5 * (o2 + o2.adjoint());
  out.o2 = o2;
  const SpectralDecomposition spec = eig_hermitian(o2);
  for (std::size_t i = 0; i < spec.size(); ++i) {
    out.values.push_back(spec.eigenvalues[i]);
    out.probs.push_back((spec.projectors[i] * rho_s).trace().real());
  }
  return out;
}

}  // namespace kdqcm
