#include "kdqcm/collision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kdqcm/error.hpp"
#include "kdqcm/kdq.hpp"

namespace kdqcm {

namespace {

constexpr double kStateTol = 1e-10;
constexpr double kRealTol = 1e-9;

void check_state(const ComplexMatrix& rho_s, const char* where) {
  if (rho_s.dim() != 2) {
    throw Error(ErrorCode::DimensionMismatch, std::string(where) + ": system state must be 2x2");
  }
  if (!is_density_matrix(rho_s, kStateTol)) {
    throw Error(ErrorCode::InvalidArgument, std::string(where) + ": input is not a valid density matrix");
  }
}

double energy(const ComplexMatrix& h, const ComplexMatrix& rho) { return (h * rho).trace().real(); }

}  // namespace

CollisionModel::CollisionModel(ModelConfig cfg)
    : cfg_(std::move(cfg)),
      h_(build_hamiltonians(cfg_)),
      anc_(build_ancilla(cfg_)),
      u_(unitary_from_hamiltonian(h_.h_sa, cfg_.tau, cfg_.hbar)),
      u_dag_(u_.adjoint()),
      spec_s_(eig_hermitian(h_.h_s)),
      spec_a_(eig_hermitian(h_.h_a)) {}

double CollisionModel::energy_scale() const noexcept {
  return cfg_.hbar * std::max(std::abs(cfg_.omega_s), std::abs(cfg_.omega_a));
}

CollisionResult collide_once(const ComplexMatrix& rho_s, const CollisionModel& model) {
  check_state(rho_s, "collide_once");
  CollisionResult out;
  out.rho_sa_joint = model.unitary() * tensor(rho_s, model.ancilla().rho_a) * model.unitary_adjoint();
  out.rho_s_next = partial_trace(out.rho_sa_joint, Subsystem::S);
  return out;
}

CollisionResult collide_once(const ComplexMatrix& rho_s, const ModelConfig& cfg) {
  return collide_once(rho_s, CollisionModel(cfg));
}

namespace {

// Second-order expansion without input validation, so trajectories can carry
// the slightly non-positive states the truncated map produces.
ComplexMatrix bch_joint(const ComplexMatrix& rho_s, const CollisionModel& model) {
  const ModelConfig& cfg = model.config();
  const ComplexMatrix& h = model.hamiltonians().h_sa;
  const ComplexMatrix rho = tensor(rho_s, model.ancilla().rho_a);
  const ComplexMatrix c1 = commutator(h, rho);
  const ComplexMatrix c2 = commutator(h, c1);
  const double t = cfg.tau / cfg.hbar;
  return rho + Complex(0.0, -t) * c1 + (-0.5 * t * t) * c2;
}

}  // namespace

ComplexMatrix bch_collide_once(const ComplexMatrix& rho_s, const CollisionModel& model) {
  check_state(rho_s, "bch_collide_once");
  return bch_joint(rho_s, model);
}

ComplexMatrix bch_collide_once(const ComplexMatrix& rho_s, const ModelConfig& cfg) {
  return bch_collide_once(rho_s, CollisionModel(cfg));
}

namespace {

void fill_thermo(StepRecord& rec, const ComplexMatrix& rho_s, const CollisionModel& model, int index) {
  const auto us = kdq_distribution(Quantity::US, rho_s, model, index);
  const auto ua = kdq_distribution(Quantity::UA, rho_s, model, index);
  const auto usa = kdq_distribution(Quantity::USA, rho_s, model, index);
  rec.us = moments(us);
  rec.ua = moments(ua);
  rec.usa = moments(usa);
  rec.np_us = nonpositivity(us);
  rec.np_ua = nonpositivity(ua);
  rec.np_usa = nonpositivity(usa);
  if (!is_resonant(model.config())) return;

  const auto w = kdq_distribution(Quantity::W, rho_s, model, index);
  const auto q = kdq_distribution(Quantity::Q, rho_s, model, index);
  rec.w = moments(w);
  rec.q = moments(q);
  rec.np_q = nonpositivity(q);
  const double scale = std::max(model.energy_scale(), std::numeric_limits<double>::min());
  rec.w_s = real_part_checked(average_via_trace(Quantity::WS, rho_s, model), kRealTol * scale);
  rec.q_s = real_part_checked(average_via_trace(Quantity::QS, rho_s, model), kRealTol * scale);
  // Ancilla's own energy change: w and q carry -u_A.
  rec.w_a = -real_part_checked(rec.w->mean, kRealTol * scale);
  rec.q_a = -real_part_checked(rec.q->mean, kRealTol * scale);
}

}  // namespace

CollisionTrajectory evolve(const ComplexMatrix& rho_s0, const ModelConfig& cfg, int n, bool thermo,
                           Propagator propagator) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "evolve: n must be >= 1");
  check_state(rho_s0, "evolve");
  const CollisionModel model(cfg);
  const Hamiltonians& h = model.hamiltonians();

  CollisionTrajectory traj;
  traj.states.reserve(static_cast<std::size_t>(n) + 1);
  traj.per_step.reserve(static_cast<std::size_t>(n));
  traj.states.push_back(rho_s0);
  for (int k = 1; k <= n; ++k) {
    const ComplexMatrix& rho_s = traj.states.back();
    const ComplexMatrix initial = tensor(rho_s, model.ancilla().rho_a);
    ComplexMatrix joint = propagator == Propagator::Exact
                              ? model.unitary() * initial * model.unitary_adjoint()
                              : bch_joint(rho_s, model);
    StepRecord rec;
    rec.delta_e_s = energy(h.h_s_ext, joint) - energy(h.h_s_ext, initial);
    rec.delta_e_a = energy(h.h_a_ext, joint) - energy(h.h_a_ext, initial);
    rec.delta_e_sa = energy(h.h_bare, joint) - energy(h.h_bare, initial);
    if (thermo) fill_thermo(rec, rho_s, model, k);

    ComplexMatrix next = partial_trace(joint, Subsystem::S);
    // Remove rounding asymmetry; the state is Hermitian by construction.
    next = 0.5 * (next + next.adjoint());
    rec.psd_floor = min_eigenvalue(next);
    if (propagator == Propagator::Exact && rec.psd_floor < -kStateTol) {
      throw Error(ErrorCode::NumericFailure, "evolve: state lost positivity at collision " + std::to_string(k));
    }
    traj.per_step.push_back(std::move(rec));
    traj.states.push_back(std::move(next));
  }
  return traj;
}

SteadyStateResult find_steady_state(const ModelConfig& cfg, const ComplexMatrix& rho_s0,
                                    SteadyStateOptions opts) {
  if (!(opts.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "find_steady_state: tol must be > 0");
  if (opts.max_iter < 1) throw Error(ErrorCode::InvalidArgument, "find_steady_state: max_iter must be >= 1");
  check_state(rho_s0, "find_steady_state");
  const CollisionModel model(cfg);
  const ComplexMatrix& u = model.unitary();
  const ComplexMatrix& u_dag = model.unitary_adjoint();
  const ComplexMatrix& rho_a = model.ancilla().rho_a;
  auto step = [&](const ComplexMatrix& rho) {
    ComplexMatrix next = partial_trace(u * tensor(rho, rho_a) * u_dag, Subsystem::S);
    return ComplexMatrix(0.5 * (next + next.adjoint()));
  };
  // Distances this small are rounding noise; the contraction estimate is meaningless there.
  const double noise_floor = 64.0 * std::numeric_limits<double>::epsilon();

  SteadyStateResult res;
  ComplexMatrix cur = rho_s0;
  double prev_d = -1.0;
  for (long it = 1; it <= opts.max_iter; ++it) {
    ComplexMatrix next = step(cur);
    const double d = trace_distance(next, cur);
    cur = std::move(next);
    res.iterations = it;
    res.residual = d;
    if (d <= noise_floor) {
      res.converged = true;
      break;
    }
    if (prev_d > 0.0) {
      const double c = d / prev_d;
      // d / (1 - c) bounds the remaining distance to the fixed point.
      if (c < 1.0 && d <= opts.tol * (1.0 - c)) {
        res.converged = true;
        break;
      }
    }
    prev_d = d;
  }
  res.state = cur;
  res.fixed_point_residual = trace_distance(step(cur), cur);
  if (res.fixed_point_residual > 10.0 * opts.tol) res.converged = false;
  return res;
}

}  // namespace kdqcm
