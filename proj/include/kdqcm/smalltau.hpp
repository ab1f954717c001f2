#pragma once

#include <vector>

#include "kdqcm/collision.hpp"
#include "kdqcm/linalg.hpp"
#include "kdqcm/model.hpp"

namespace kdqcm {

/// G = Tr_A[H_int (I (x) chi_A)], the coherent drive on the system.
ComplexMatrix coherent_correction_G(const ModelConfig& cfg);

/// G_A = Tr_S[H_int (rho_S (x) I)].
ComplexMatrix ancilla_correction_G(const ComplexMatrix& rho_s, const ModelConfig& cfg);

struct CoherentWork {
  double system_side = 0.0;   // (i/hbar) c tau Tr[[G, H_S] rho_S]
  double ancilla_side = 0.0;  // -(i/hbar) c tau Tr[[G_A, H_A] chi_A]
};

/// Coherent work from the first-order BCH term, c = lambda_eff * interaction
/// scale (lambda_tilde in weak mode). At resonance both sides are checked
/// equal and a mismatch throws NumericFailure.
CoherentWork coherent_work_bch(const ComplexMatrix& rho_s, const ModelConfig& cfg);

/// Incoherent heat from the second-order BCH term with the thermal ancilla:
/// (s tau)^2 / (2 hbar^2) Tr[(I (x) H_A) [H_int, [H_int, rho_S (x) rho_A^th]]].
double incoherent_heat_bch(const ComplexMatrix& rho_s, const ModelConfig& cfg);

/// -(i/hbar)[H_S + lambda_tilde G, rho] + D[rho] with
/// D[rho] = -(1/(2 hbar^2)) Tr_A[H_int, [H_int, rho (x) rho_A^th]].
ComplexMatrix master_equation_rhs(const ComplexMatrix& rho_s, const ModelConfig& cfg);

struct MasterTrajectory {
  std::vector<double> times;
  std::vector<ComplexMatrix> states;
};

/// Classical RK4 with fixed step dt (<= tau, default tau/20). States are
/// recorded every `record_every` steps, always including t = 0 and t_final.
MasterTrajectory integrate_master_equation(const ComplexMatrix& rho_s0, const ModelConfig& cfg,
                                           double t_final, double dt = 0.0, int record_every = 1);

struct OperatorWorkSpectrum {
  std::vector<double> values;  // eigenvalues of O_2, descending
  std::vector<double> probs;   // Tr[P_i rho_S]
  ComplexMatrix o2;
  double o1_norm = 0.0;

  double moment(int k) const;
};

/// Coherent-work statistics from the spectrum of
/// O_2 = -lambda_eff Tr_A[(I (x) chi_A) U^dag (I (x) H_A) U]. Resonant only.
OperatorWorkSpectrum operator_approach(const ComplexMatrix& rho_s, const ModelConfig& cfg);

}  // namespace kdqcm
