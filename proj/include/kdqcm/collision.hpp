#pragma once

#include <optional>
#include <vector>

#include "kdqcm/kdq_types.hpp"
#include "kdqcm/linalg.hpp"
#include "kdqcm/model.hpp"

namespace kdqcm {

/// Operators shared by every collision of one configuration: Hamiltonians,
/// ancilla states, the collision unitary and the local spectral data.
class CollisionModel {
 public:
  explicit CollisionModel(ModelConfig cfg);

  const ModelConfig& config() const noexcept { return cfg_; }
  const Hamiltonians& hamiltonians() const noexcept { return h_; }
  const AncillaStates& ancilla() const noexcept { return anc_; }
  const ComplexMatrix& unitary() const noexcept { return u_; }
  const ComplexMatrix& unitary_adjoint() const noexcept { return u_dag_; }
  const SpectralDecomposition& spectrum_s() const noexcept { return spec_s_; }
  const SpectralDecomposition& spectrum_a() const noexcept { return spec_a_; }

  /// hbar * max(|omega_s|, |omega_a|); the natural energy scale for tolerances.
  double energy_scale() const noexcept;

 private:
  ModelConfig cfg_;
  Hamiltonians h_;
  AncillaStates anc_;
  ComplexMatrix u_;
  ComplexMatrix u_dag_;
  SpectralDecomposition spec_s_;
  SpectralDecomposition spec_a_;
};

struct CollisionResult {
  ComplexMatrix rho_s_next;
  ComplexMatrix rho_sa_joint;
};

CollisionResult collide_once(const ComplexMatrix& rho_s, const CollisionModel& model);
CollisionResult collide_once(const ComplexMatrix& rho_s, const ModelConfig& cfg);

/// Joint state after the second-order expansion of the collision unitary:
/// rho - (i tau/hbar)[H, rho] - (tau^2 / 2 hbar^2)[H, [H, rho]], rho = rho_S (x) rho_A.
/// Uses the mode's H_SA, so the weak mode carries the 1/sqrt(tau) interaction.
ComplexMatrix bch_collide_once(const ComplexMatrix& rho_s, const CollisionModel& model);
ComplexMatrix bch_collide_once(const ComplexMatrix& rho_s, const ModelConfig& cfg);

enum class Propagator { Exact, SecondOrder };

struct StepRecord {
  double delta_e_s = 0.0;
  double delta_e_a = 0.0;
  double delta_e_sa = 0.0;
  /// Smallest eigenvalue of the post-collision system state. Stays >= 0 for
  /// the exact map; the truncated map may dip below and is not corrected.
  double psd_floor = 0.0;

  // Filled when evolve() runs with thermo = true.
  std::optional<MomentSet> us, ua, usa;
  std::optional<NonPositivityReport> np_us, np_ua, np_usa;

  // Resonant configurations only: coherent work and incoherent heat, seen
  // from the system (w_s, q_s) and as the ancilla's own energy change (w_a, q_a).
  std::optional<double> w_s, w_a, q_s, q_a;
  std::optional<MomentSet> w, q;
  std::optional<NonPositivityReport> np_q;
};

struct CollisionTrajectory {
  std::vector<ComplexMatrix> states;  // rho_S^(0) ... rho_S^(n)
  std::vector<StepRecord> per_step;   // per_step[k] describes collision k+1
};

CollisionTrajectory evolve(const ComplexMatrix& rho_s0, const ModelConfig& cfg, int n,
                           bool thermo, Propagator propagator = Propagator::Exact);

struct SteadyStateOptions {
  double tol = 1e-12;
  long max_iter = 1'000'000;
};

struct SteadyStateResult {
  ComplexMatrix state;
  long iterations = 0;
  double residual = 0.0;              // trace distance of the last step
  double fixed_point_residual = 0.0;  // trace distance between state and its image
  bool converged = false;             // false when max_iter was hit
};

SteadyStateResult find_steady_state(const ModelConfig& cfg, const ComplexMatrix& rho_s0,
                                    SteadyStateOptions opts = {});

}  // namespace kdqcm
