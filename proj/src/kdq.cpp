#include "kdqcm/kdq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <string>

#include "kdqcm/error.hpp"

namespace kdqcm {

namespace {

constexpr double kValidityPulseArea = std::numbers::pi / 6.0;

struct Level {
  double energy;
  ComplexMatrix projector;  // 4x4, extended to the joint space
  int s;
  int a;
};

// Resolved eigenspaces of the observable measured for this quantity.
std::vector<Level> measured_levels(Quantity quantity, const CollisionModel& model) {
  const ComplexMatrix id = pauli::identity();
  const auto& ss = model.spectrum_s();
  const auto& sa = model.spectrum_a();
  std::vector<Level> levels;
  switch (quantity) {
    case Quantity::US:
    case Quantity::WS:
    case Quantity::QS:
      for (std::size_t l = 0; l < ss.size(); ++l) {
        levels.push_back({ss.eigenvalues[l], tensor(ss.projectors[l], id), static_cast<int>(l), -1});
      }
      break;
    case Quantity::UA:
    case Quantity::W:
    case Quantity::Q:
      for (std::size_t k = 0; k < sa.size(); ++k) {
        levels.push_back({sa.eigenvalues[k], tensor(id, sa.projectors[k]), -1, static_cast<int>(k)});
      }
      break;
    case Quantity::USA:
      for (std::size_t l = 0; l < ss.size(); ++l) {
        for (std::size_t k = 0; k < sa.size(); ++k) {
          levels.push_back({ss.eigenvalues[l] + sa.eigenvalues[k],
                            tensor(ss.projectors[l], sa.projectors[k]), static_cast<int>(l),
                            static_cast<int>(k)});
        }
      }
      break;
  }
  return levels;
}

bool needs_resonance(Quantity q) {
  return q == Quantity::W || q == Quantity::Q || q == Quantity::WS || q == Quantity::QS;
}

// Joint operator the quasiprobability trace is taken against.
ComplexMatrix weighted_state(Quantity quantity, const ComplexMatrix& rho_s, const CollisionModel& model) {
  const auto& anc = model.ancilla();
  switch (quantity) {
    case Quantity::Q:
    case Quantity::QS:
      return tensor(rho_s, anc.rho_a_th);
    case Quantity::W:
    case Quantity::WS:
      return model.config().lambda_eff() * tensor(rho_s, anc.chi_a);
    default:
      return tensor(rho_s, anc.rho_a);
  }
}

// Observable whose change is the stochastic value (W, Q carry -u_A).
ComplexMatrix value_observable(Quantity quantity, const CollisionModel& model) {
  const auto& h = model.hamiltonians();
  switch (quantity) {
    case Quantity::US:
    case Quantity::WS:
    case Quantity::QS:
      return h.h_s_ext;
    case Quantity::UA:
      return h.h_a_ext;
    case Quantity::USA:
      return h.h_bare;
    case Quantity::W:
    case Quantity::Q:
      return -h.h_a_ext;
  }
  return h.h_bare;
}

void check_input_state(const ComplexMatrix& rho_s) {
  if (rho_s.dim() != 2) {
    throw Error(ErrorCode::DimensionMismatch, "kdq: system state must be 2x2");
  }
}

void require_resonance(Quantity quantity, const CollisionModel& model) {
  if (!is_resonant(model.config())) {
    throw Error(ErrorCode::ModeMismatch,
                std::string("kdq: ") + std::string(to_string(quantity)) +
                    " is defined only for energy-preserving (resonant) collisions");
  }
}

}  // namespace

std::string_view to_string(Quantity q) {
  switch (q) {
    case Quantity::US: return "us";
    case Quantity::UA: return "ua";
    case Quantity::USA: return "usa";
    case Quantity::W: return "w";
    case Quantity::Q: return "q";
    case Quantity::WS: return "ws";
    case Quantity::QS: return "qs";
  }
  return "?";
}

std::optional<Quantity> quantity_from_string(std::string_view name) {
  for (Quantity q : {Quantity::US, Quantity::UA, Quantity::USA, Quantity::W, Quantity::Q,
                     Quantity::WS, Quantity::QS}) {
    if (to_string(q) == name) return q;
  }
  return std::nullopt;
}

bool is_work_type(Quantity q) { return q == Quantity::W || q == Quantity::WS; }

std::complex<double> KdqDistribution::total() const {
  std::complex<double> sum = 0.0;
  for (const auto& e : entries) sum += e.quasiprob;
  return sum;
}

KdqDistribution kdq_distribution(Quantity quantity, const ComplexMatrix& rho_s,
                                 const CollisionModel& model, int collision_index) {
  check_input_state(rho_s);
  KdqDistribution out;
  out.quantity = quantity;
  out.collision_index = collision_index;
  if (needs_resonance(quantity)) {
    require_resonance(quantity, model);
    if (model.config().mode == Mode::Exact) {
      out.warnings.emplace_back("exact-mode extension: coherent work / incoherent heat evaluated with lambda at finite tau");
    }
    if (model.config().pulse_area() > kValidityPulseArea) {
      out.warnings.emplace_back("pulse area exceeds pi/6: outside the small-tau validity range");
    }
  }

  const auto levels = measured_levels(quantity, model);
  const ComplexMatrix rho = weighted_state(quantity, rho_s, model);
  const ComplexMatrix& u = model.unitary();
  const ComplexMatrix& u_dag = model.unitary_adjoint();
  const bool negate = quantity == Quantity::W || quantity == Quantity::Q;

  out.entries.reserve(levels.size() * levels.size());
  for (const auto& in : levels) {
    // U (P_in rho) U^dag, reused for every final projector.
    const ComplexMatrix evolved = u * (in.projector * rho) * u_dag;
    for (const auto& fin : levels) {
      KdqEntry e;
      e.label = {quantity, in.s, in.a, fin.s, fin.a};
      e.e_in = in.energy;
      e.e_fin = fin.energy;
      e.value = negate ? in.energy - fin.energy : fin.energy - in.energy;
      e.quasiprob = (fin.projector * evolved).trace();
      out.entries.push_back(e);
    }
  }
  return out;
}

KdqDistribution kdq_distribution(Quantity quantity, const ComplexMatrix& rho_s, const ModelConfig& cfg) {
  return kdq_distribution(quantity, rho_s, CollisionModel(cfg));
}

KdqDistribution marginalize_usa(const KdqDistribution& d, const CollisionModel& model, Subsystem keep) {
  if (d.quantity != Quantity::USA || d.grouped) {
    throw Error(ErrorCode::InvalidArgument, "marginalize_usa: input must be a resolved USA distribution");
  }
  const bool keep_s = keep == Subsystem::S;
  const auto& spec = keep_s ? model.spectrum_s() : model.spectrum_a();
  KdqDistribution out;
  out.quantity = keep_s ? Quantity::US : Quantity::UA;
  out.collision_index = d.collision_index;
  out.warnings = d.warnings;

  // std::map keeps the (in major, fin minor) order.
  std::map<std::pair<int, int>, KdqEntry> acc;
  for (const auto& e : d.entries) {
    const int in = keep_s ? e.label.s_in : e.label.a_in;
    const int fin = keep_s ? e.label.s_fin : e.label.a_fin;
    auto [it, fresh] = acc.try_emplace({in, fin});
    if (fresh) {
      KdqEntry& m = it->second;
      m.label = keep_s ? TransitionLabel{out.quantity, in, -1, fin, -1}
                       : TransitionLabel{out.quantity, -1, in, -1, fin};
      m.e_in = spec.eigenvalues.at(static_cast<std::size_t>(in));
      m.e_fin = spec.eigenvalues.at(static_cast<std::size_t>(fin));
      m.value = m.e_fin - m.e_in;
      m.quasiprob = 0.0;
    }
    it->second.quasiprob += e.quasiprob;
  }
  out.entries.reserve(acc.size());
  for (auto& [key, entry] : acc) out.entries.push_back(entry);
  return out;
}

KdqDistribution group_by_energy(const KdqDistribution& d, double rel_tol) {
  if (d.quantity != Quantity::USA || d.grouped) {
    throw Error(ErrorCode::InvalidArgument, "group_by_energy: input must be a resolved USA distribution");
  }
  double scale = 0.0;
  for (const auto& e : d.entries) scale = std::max({scale, std::abs(e.e_in), std::abs(e.e_fin)});
  const double tol = rel_tol * std::max(scale, std::numeric_limits<double>::min());

  std::vector<double> levels;
  for (const auto& e : d.entries) levels.push_back(e.e_in);
  std::sort(levels.begin(), levels.end(), std::greater<>());
  std::vector<double> distinct;
  for (double v : levels) {
    if (distinct.empty() || distinct.back() - v > tol) distinct.push_back(v);
  }
  auto level_of = [&](double energy) {
    for (std::size_t i = 0; i < distinct.size(); ++i) {
      if (std::abs(distinct[i] - energy) <= tol) return static_cast<int>(i);
    }
    throw Error(ErrorCode::NumericFailure, "group_by_energy: energy level not found");
  };

  KdqDistribution out;
  out.quantity = Quantity::USA;
  out.collision_index = d.collision_index;
  out.grouped = true;
  out.warnings = d.warnings;
  for (std::size_t i = 0; i < distinct.size(); ++i) {
    for (std::size_t f = 0; f < distinct.size(); ++f) {
      KdqEntry e;
      e.label = {Quantity::USA, static_cast<int>(i), -1, static_cast<int>(f), -1};
      e.e_in = distinct[i];
      e.e_fin = distinct[f];
      e.value = distinct[f] - distinct[i];
      e.quasiprob = 0.0;
      out.entries.push_back(e);
    }
  }
  const std::size_t n = distinct.size();
  for (const auto& e : d.entries) {
    out.entries[static_cast<std::size_t>(level_of(e.e_in)) * n +
                static_cast<std::size_t>(level_of(e.e_fin))]
        .quasiprob += e.quasiprob;
  }
  return out;
}

MomentSet moments(const KdqDistribution& d) {
  MomentSet m;
  for (const auto& e : d.entries) {
    m.mean += e.quasiprob * e.value;
    m.second_moment += e.quasiprob * (e.value * e.value);
  }
  m.variance = m.second_moment - m.mean * m.mean;
  return m;
}

std::complex<double> average_via_trace(Quantity quantity, const ComplexMatrix& rho_s,
                                       const CollisionModel& model) {
  check_input_state(rho_s);
  if (needs_resonance(quantity)) require_resonance(quantity, model);
  const ComplexMatrix rho = weighted_state(quantity, rho_s, model);
  const ComplexMatrix evolved = model.unitary() * rho * model.unitary_adjoint();
  return (value_observable(quantity, model) * (evolved - rho)).trace();
}

NonPositivityReport nonpositivity(const KdqDistribution& d) {
  if (is_work_type(d.quantity)) {
    throw Error(ErrorCode::InvalidArgument,
                "nonpositivity: coherent-work quasiprobabilities sum to 0, functionals are undefined");
  }
  NonPositivityReport r;
  r.n_q = -1.0;
  r.n_re = -1.0;
  for (const auto& e : d.entries) {
    r.n_q += std::abs(e.quasiprob);
    r.n_re += std::abs(e.quasiprob.real());
    r.n_im += std::abs(e.quasiprob.imag());
  }
  return r;
}

double real_part_checked(std::complex<double> z, double tol) {
  if (std::abs(z.imag()) > tol) {
    throw Error(ErrorCode::NumericFailure,
                "expected a real value, imaginary part " + std::to_string(z.imag()) + " exceeds tolerance");
  }
  return z.real();
}

}  // namespace kdqcm
