#include "kdqcm/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "kdqcm/error.hpp"

namespace kdqcm {

namespace {

constexpr double kPreserveTol = 1e-10;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

bool relative_commutes(const ComplexMatrix& a, const ComplexMatrix& b) {
  const double scale = a.frobenius_norm() * b.frobenius_norm();
  if (scale == 0.0) return true;
  return commutator_norm(a, b) < kPreserveTol * scale;
}

// Off-diagonal element of chi_a in the H_A eigenbasis (|0>, |1>).
double chi_offdiag_abs(const ModelConfig& cfg) { return std::abs(cfg.chi_a(0, 1)); }

}  // namespace

double ModelConfig::lambda_eff() const {
  return mode == Mode::Exact ? lambda : lambda_tilde * std::sqrt(tau);
}

double ModelConfig::effective_coupling() const {
  return mode == Mode::Exact ? g : g / std::sqrt(tau);
}

void ModelConfig::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(omega_s) || !finite(omega_a) || !finite(g) || !finite(tau) || !finite(beta) ||
      !finite(lambda) || !finite(lambda_tilde) || !finite(hbar)) {
    throw Error(ErrorCode::InvalidArgument, "model: all parameters must be finite");
  }
  if (!(g > 0.0)) throw Error(ErrorCode::InvalidArgument, "model: g must be > 0 (got " + fmt(g) + ")");
  if (!(tau > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "model: tau must be > 0 (got " + fmt(tau) + ")");
  }
  if (!(hbar > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "model: hbar must be > 0 (got " + fmt(hbar) + ")");
  }
  if (beta < 0.0) throw Error(ErrorCode::InvalidArgument, "model: beta must be >= 0 (got " + fmt(beta) + ")");
  if (chi_a.dim() != 2 || !is_hermitian(chi_a, 1e-12) || std::abs(chi_a(0, 0)) > 1e-14 ||
      std::abs(chi_a(1, 1)) > 1e-14) {
    throw Error(ErrorCode::InvalidArgument, "model: chi_a must be a 2x2 Hermitian matrix with zero diagonal");
  }
  const double bound = lambda_max(*this);
  const double value = mode == Mode::Exact ? lambda : lambda_tilde;
  if (std::abs(value) > bound * (1.0 + 1e-12)) {
    const char* name = mode == Mode::Exact ? "lambda" : "lambda_tilde";
    throw Error(ErrorCode::BoundViolation,
                std::string("model: |") + name + "| = " + fmt(std::abs(value)) +
                    " exceeds the positivity bound " +
                    (mode == Mode::Exact ? "1/Z_A" : "1/(Z_A sqrt(tau))") + " = " + fmt(bound));
  }
}

double ancilla_partition_function(const ModelConfig& cfg) {
  const double x = 0.5 * cfg.beta * cfg.hbar * cfg.omega_a;
  return 2.0 * std::cosh(x);
}

double lambda_eff_max(const ModelConfig& cfg) {
  const double c = chi_offdiag_abs(cfg);
  if (c == 0.0) return std::numeric_limits<double>::infinity();
  // det(rho_A) = p0 p1 - lambda^2 |c|^2 with p0 p1 = 1/Z_A^2.
  return 1.0 / (ancilla_partition_function(cfg) * c);
}

double lambda_max(const ModelConfig& cfg) {
  const double eff = lambda_eff_max(cfg);
  return cfg.mode == Mode::Exact ? eff : eff / std::sqrt(cfg.tau);
}

double SystemStateParams::r_max(double rho11) {
  return std::sqrt(std::max(0.0, rho11 * (1.0 - rho11)));
}

void SystemStateParams::validate() const {
  if (!std::isfinite(rho11) || !std::isfinite(r) || !std::isfinite(phi_c)) {
    throw Error(ErrorCode::InvalidArgument, "state: parameters must be finite");
  }
  if (rho11 < 0.0 || rho11 > 1.0) {
    throw Error(ErrorCode::InvalidArgument, "state: rho11 must lie in [0, 1] (got " + fmt(rho11) + ")");
  }
  if (r < 0.0) throw Error(ErrorCode::InvalidArgument, "state: r must be >= 0 (got " + fmt(r) + ")");
  if (r * r > rho11 * (1.0 - rho11) * (1.0 + 1e-12) + 1e-15) {
    throw Error(ErrorCode::BoundViolation,
                "state: positivity requires r^2 <= rho11 (1 - rho11); r = " + fmt(r) +
                    " exceeds r_max = " + fmt(r_max(rho11)));
  }
}

Hamiltonians build_hamiltonians(const ModelConfig& cfg) {
  cfg.validate();
  const ComplexMatrix id = pauli::identity();
  Hamiltonians h;
  h.h_s = (0.5 * cfg.hbar * cfg.omega_s) * pauli::z();
  h.h_a = (0.5 * cfg.hbar * cfg.omega_a) * pauli::z();
  // Coupling matrix element hbar*g between |0_S 1_A> and |1_S 0_A>.
  h.h_int = (cfg.hbar * cfg.g) *
            (tensor(pauli::plus(), pauli::minus()) + tensor(pauli::minus(), pauli::plus()));
  h.h_s_ext = tensor(h.h_s, id);
  h.h_a_ext = tensor(id, h.h_a);
  h.h_bare = h.h_s_ext + h.h_a_ext;
  const double s = cfg.mode == Mode::Exact ? 1.0 : 1.0 / std::sqrt(cfg.tau);
  h.h_sa = h.h_bare + s * h.h_int;
  return h;
}

AncillaStates build_ancilla(const ModelConfig& cfg) {
  cfg.validate();
  const double x = 0.5 * cfg.beta * cfg.hbar * cfg.omega_a;
  const double z = ancilla_partition_function(cfg);
  AncillaStates out;
  out.rho_a_th = ComplexMatrix::diagonal({std::exp(-x) / z, std::exp(x) / z});
  out.chi_a = cfg.chi_a;
  out.rho_a = out.rho_a_th + cfg.lambda_eff() * out.chi_a;
  return out;
}

ComplexMatrix build_system_state(const SystemStateParams& p) {
  p.validate();
  const Complex rho12 = std::polar(p.r, p.phi_c);
  return ComplexMatrix{{p.rho11, rho12}, {std::conj(rho12), 1.0 - p.rho11}};
}

ComplexMatrix thermal_system_state(const ModelConfig& cfg) {
  const double x = 0.5 * cfg.beta * cfg.hbar * cfg.omega_s;
  const double z = 2.0 * std::cosh(x);
  return ComplexMatrix::diagonal({std::exp(-x) / z, std::exp(x) / z});
}

bool check_energy_preserving(const ModelConfig& cfg) {
  const Hamiltonians h = build_hamiltonians(cfg);
  return relative_commutes(h.h_int, h.h_bare);
}

bool check_excitation_preserving(const ModelConfig& cfg) {
  const Hamiltonians h = build_hamiltonians(cfg);
  const ComplexMatrix n_local = pauli::plus() * pauli::minus();
  const ComplexMatrix n_total =
      tensor(n_local, pauli::identity()) + tensor(pauli::identity(), n_local);
  return relative_commutes(h.h_int, n_total);
}

bool is_resonant(const ModelConfig& cfg, double rel_tol) {
  const double scale = std::max(std::abs(cfg.omega_s), std::abs(cfg.omega_a));
  return std::abs(cfg.detuning()) <= rel_tol * scale;
}

}  // namespace kdqcm
