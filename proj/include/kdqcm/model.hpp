#pragma once

#include "kdqcm/linalg.hpp"

namespace kdqcm {

/// Exact: plain interaction and ancilla coherence lambda.
/// WeaklyCoherent: interaction scaled by 1/sqrt(tau), coherence lambda_tilde*sqrt(tau).
enum class Mode { Exact, WeaklyCoherent };

struct ModelConfig {
  double omega_s = 1.0;       // rad / time
  double omega_a = 1.0;       // rad / time
  double g = 1.0;             // rad / time
  double tau = 0.1;           // collision time
  double beta = 1.0;          // 1 / energy
  double lambda = 0.0;        // Exact mode
  double lambda_tilde = 0.0;  // WeaklyCoherent mode, 1/sqrt(time)
  double hbar = 1.0;
  Mode mode = Mode::Exact;
  ComplexMatrix chi_a = pauli::x();

  double detuning() const noexcept { return omega_s - omega_a; }

  /// Coefficient multiplying chi_a in the ancilla state.
  double lambda_eff() const;

  /// Coupling seen by the collision unitary: g, or g/sqrt(tau) in weak mode.
  double effective_coupling() const;

  /// Rotation angle of a resonant collision (effective_coupling * tau).
  double pulse_area() const { return effective_coupling() * tau; }

  /// Throws Error(InvalidArgument / BoundViolation) naming the violated invariant.
  void validate() const;
};

/// Z_A = exp(-beta hbar omega_a / 2) + exp(beta hbar omega_a / 2).
double ancilla_partition_function(const ModelConfig& cfg);

/// Largest admissible |lambda_eff| keeping rho_A positive semidefinite.
double lambda_eff_max(const ModelConfig& cfg);

/// Largest admissible |lambda| (Exact) or |lambda_tilde| (weak) for cfg.
double lambda_max(const ModelConfig& cfg);

struct SystemStateParams {
  double rho11 = 1.0;  // population of |0>
  double r = 0.0;      // |rho12|
  double phi_c = 0.0;  // arg(rho12)

  static double r_max(double rho11);
  void validate() const;
};

struct Hamiltonians {
  ComplexMatrix h_s;     // 2x2
  ComplexMatrix h_a;     // 2x2
  ComplexMatrix h_int;   // 4x4, unscaled
  ComplexMatrix h_sa;    // 4x4, with the mode's interaction scaling
  ComplexMatrix h_bare;  // H_S (x) I + I (x) H_A
  ComplexMatrix h_s_ext;
  ComplexMatrix h_a_ext;
};

struct AncillaStates {
  ComplexMatrix rho_a;
  ComplexMatrix rho_a_th;
  ComplexMatrix chi_a;
};

Hamiltonians build_hamiltonians(const ModelConfig& cfg);
AncillaStates build_ancilla(const ModelConfig& cfg);
ComplexMatrix build_system_state(const SystemStateParams& p);

/// Thermal state of the system at the ancilla temperature (omega_s gap).
ComplexMatrix thermal_system_state(const ModelConfig& cfg);

bool check_energy_preserving(const ModelConfig& cfg);
bool check_excitation_preserving(const ModelConfig& cfg);

/// Resonance test used by the resonant-only operations.
bool is_resonant(const ModelConfig& cfg, double rel_tol = 1e-12);

}  // namespace kdqcm
