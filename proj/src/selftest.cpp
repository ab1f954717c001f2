#include "kdqcm/selftest.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "kdqcm/analytic.hpp"
#include "kdqcm/collision.hpp"
#include "kdqcm/error.hpp"
#include "kdqcm/experiment.hpp"
#include "kdqcm/kdq.hpp"

namespace kdqcm {

namespace {

constexpr double kPi = std::numbers::pi;

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

SelftestCheck bounded(std::string name, double err, double tol) {
  return {std::move(name), err <= tol, "max error " + sci(err) + " (tol " + sci(tol) + ")"};
}

ModelConfig detuned() {
  ModelConfig cfg;
  cfg.omega_a = 1.0;
  cfg.omega_s = 2.3;
  cfg.g = 0.8;
  cfg.tau = 0.6;
  cfg.beta = 0.9;
  cfg.lambda = 0.7 * lambda_max(cfg);
  return cfg;
}

ModelConfig resonant() {
  ModelConfig cfg = detuned();
  cfg.omega_s = cfg.omega_a;
  return cfg;
}

const SystemStateParams kState{0.3, 0.8 * SystemStateParams::r_max(0.3), 1.1};

double total_error(const KdqDistribution& d, std::complex<double> expected) {
  return std::abs(d.total() - expected);
}

std::vector<std::function<SelftestCheck()>> checks() {
  return {
      [] {
        const CollisionModel m(detuned());
        const ComplexMatrix& u = m.unitary();
        const double err = (u * m.unitary_adjoint() - ComplexMatrix::identity(4)).max_abs();
        return bounded("collision unitary is unitary", err, 1e-13);
      },
      [] {
        const auto rho = build_system_state(kState);
        const auto next = collide_once(rho, detuned()).rho_s_next;
        SelftestCheck c{"reduced state stays a density matrix", is_density_matrix(next, 1e-12), ""};
        c.detail = "min eigenvalue " + sci(min_eigenvalue(next));
        return c;
      },
      [] {
        const CollisionModel m(detuned());
        const auto rho = build_system_state(kState);
        double err = 0.0;
        for (Quantity q : {Quantity::US, Quantity::UA, Quantity::USA}) {
          err = std::max(err, total_error(kdq_distribution(q, rho, m), 1.0));
        }
        err = std::max(err, total_error(kdq_distribution(Quantity::W, rho, resonant()), 0.0));
        return bounded("quasiprobabilities sum to 1 (0 for coherent work)", err, 1e-13);
      },
      [] {
        const CollisionModel m(detuned());
        const auto rho = build_system_state(kState);
        double err = 0.0;
        for (Quantity q : {Quantity::US, Quantity::UA, Quantity::USA}) {
          err = std::max(err, std::abs(moments(kdq_distribution(q, rho, m)).mean - average_via_trace(q, rho, m)));
        }
        return bounded("first moments match the trace formula", err, 1e-12);
      },
      [] {
        const CollisionModel m(detuned());
        const auto rho = build_system_state(kState);
        const auto usa = kdq_distribution(Quantity::USA, rho, m);
        const auto us = kdq_distribution(Quantity::US, rho, m);
        const auto marg = marginalize_usa(usa, m, Subsystem::S);
        double err = 0.0;
        for (std::size_t i = 0; i < us.entries.size(); ++i) {
          err = std::max(err, std::abs(us.entries[i].quasiprob - marg.entries[i].quasiprob));
        }
        return bounded("joint distribution marginalizes to the system one", err, 1e-13);
      },
      [] {
        ModelConfig cfg = detuned();
        cfg.lambda = 0.0;
        const auto np = nonpositivity(kdq_distribution(Quantity::US, build_system_state({0.3, 0.0, 0.0}), cfg));
        return bounded("incoherent inputs give a positive distribution", std::abs(np.n_q), 1e-13);
      },
      [] {
        const CollisionModel m(resonant());
        const auto rho = build_system_state(kState);
        return bounded("resonant collisions preserve bare energy",
                       std::abs(average_via_trace(Quantity::USA, rho, m)), 1e-13);
      },
      [] {
        const ModelConfig cfg = resonant();
        const auto p = AnalyticParams::from(cfg, kState);
        const auto rho = build_system_state(kState);
        const CollisionModel m(cfg);
        double err = 0.0;
        const auto au = resonant_kdq_us(p), aw = resonant_kdq_w(p), aq = resonant_kdq_q(p);
        const auto us = kdq_distribution(Quantity::US, rho, m);
        const auto ws = kdq_distribution(Quantity::WS, rho, m);
        const auto qs = kdq_distribution(Quantity::QS, rho, m);
        for (std::size_t i = 0; i < 4; ++i) {
          err = std::max({err, std::abs(us.entries[i].quasiprob - au[i]), std::abs(ws.entries[i].quasiprob - aw[i]),
                          std::abs(qs.entries[i].quasiprob - aq[i])});
        }
        return bounded("resonant closed forms match the numerics", err, 1e-12);
      },
      [] {
        const ModelConfig cfg = detuned();
        const auto p = AnalyticParams::from(cfg, kState);
        const CollisionModel m(cfg);
        const auto rho = build_system_state(kState);
        const double err = std::max(std::abs(delta_e_s(p) - average_via_trace(Quantity::US, rho, m).real()),
                                    std::abs(delta_e_sa(p) - average_via_trace(Quantity::USA, rho, m).real()));
        return bounded("detuned energy changes match the closed forms", err, 1e-12);
      },
      [] {
        ModelConfig cfg = resonant();
        cfg.lambda = 0.0;
        const auto res = find_steady_state(cfg, build_system_state(kState));
        const double err = trace_distance(res.state, thermal_system_state(cfg));
        SelftestCheck c = bounded("incoherent ancillas thermalize the system", err, 1e-9);
        c.passed = c.passed && res.converged;
        return c;
      },
      [] {
        ModelConfig cfg = detuned();
        const auto rho = build_system_state(kState);
        cfg.tau = 1e-2;
        const double e1 = trace_distance(collide_once(rho, cfg).rho_s_next,
                                         partial_trace(bch_collide_once(rho, cfg), Subsystem::S));
        cfg.tau = 5e-3;
        const double e2 = trace_distance(collide_once(rho, cfg).rho_s_next,
                                         partial_trace(bch_collide_once(rho, cfg), Subsystem::S));
        const double ratio = e1 / e2;
        return SelftestCheck{"second-order expansion error scales as tau^3", ratio > 7.0 && ratio < 9.0,
                             "halving tau reduces the error by " + sci(ratio)};
      },
      [] {
        bool ok = true;
        for (const auto& name : preset_names()) {
          const auto spec = make_preset(name);
          ok = ok && serialize(parse_config(serialize(spec))) == serialize(spec);
        }
        return SelftestCheck{"presets survive a serialize/parse round trip", ok, ok ? "all presets" : "mismatch"};
      },
  };
}

}  // namespace

std::vector<SelftestCheck> run_selftest(const std::function<void(const SelftestCheck&)>& on_check) {
  std::vector<SelftestCheck> out;
  for (const auto& check : checks()) {
    SelftestCheck c;
    try {
      c = check();
    } catch (const std::exception& e) {
      c.passed = false;
      c.detail = std::string("exception: ") + e.what();
    }
    if (on_check) on_check(c);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace kdqcm
