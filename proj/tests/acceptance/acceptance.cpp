#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "kdqcm/analytic.hpp"
#include "kdqcm/collision.hpp"
#include "kdqcm/experiment.hpp"
#include "kdqcm/kdq.hpp"
#include "kdqcm/smalltau.hpp"
#include "oracle.hpp"

using namespace kdqcm;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

ComplexMatrix rho_of(const oracle::Draw& d) { return build_system_state(d.st); }

Outcome lambda_max_reproduction() {
  const double beta[] = {5.0, 1.0, 0.2};
  const double expected[] = {0.082, 0.443, 0.498};
  double worst = 0.0;
  std::string got;
  for (int i = 0; i < 3; ++i) {
    ModelConfig cfg;
    cfg.beta = beta[i];
    const double v = 1.0 / ancilla_partition_function(cfg);
    worst = std::max({worst, std::abs(v - expected[i]), std::abs(lambda_max(cfg) - expected[i])});
    got += (i ? "/" : "") + num(v);
  }
  return {worst < 5e-4, "1/Z_A = " + got + ", max deviation " + num(worst)};
}

Outcome normalization() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  const int n = 1000;
  for (int t = 0; t < n; ++t) {
    const auto d = oracle::random_draw(rng, true, t % 2 ? Mode::WeaklyCoherent : Mode::Exact);
    const auto e = oracle::random_draw(rng, false);
    const CollisionModel res(d.cfg), det(e.cfg);
    for (Quantity q : {Quantity::US, Quantity::UA, Quantity::USA}) {
      worst = std::max(worst, std::abs(kdq_distribution(q, rho_of(e), det).total() - 1.0));
      worst = std::max(worst, std::abs(kdq_distribution(q, rho_of(d), res).total() - 1.0));
    }
    worst = std::max(worst, std::abs(kdq_distribution(Quantity::Q, rho_of(d), res).total() - 1.0));
    worst = std::max(worst, std::abs(kdq_distribution(Quantity::W, rho_of(d), res).total()));
  }
  return {worst < 1e-12, std::to_string(2 * n) + " parameter sets, max |sum - target| " + num(worst)};
}

Outcome first_law() {
  const auto spec = make_preset("fig7");
  const double scale = spec.model.hbar * spec.model.omega_a;
  const auto traj = evolve(build_system_state(spec.state), spec.model, spec.collisions, true);
  double split = 0.0, total = 0.0, work = 0.0, heat = 0.0;
  for (const auto& s : traj.per_step) {
    split = std::max(split, std::abs(s.us->mean + s.ua->mean - s.usa->mean));
    total = std::max(total, std::abs(s.usa->mean));
    work = std::max(work, std::abs(*s.w_s + *s.w_a));
    heat = std::max(heat, std::abs(*s.q_s + *s.q_a));
  }
  const double worst = std::max({split, total, work, heat}) / scale;
  return {worst < 1e-10, std::to_string(traj.per_step.size()) + " collisions, max violation " + num(worst) +
                             " hbar omega (split " + num(split / scale) + ", total " + num(total / scale) +
                             ", work " + num(work / scale) + ", heat " + num(heat / scale) + ")"};
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(104);
  double kdq = 0.0, energy = 0.0, stats = 0.0;
  const int n = 300;
  for (int t = 0; t < n; ++t) {
    const auto d = oracle::random_draw(rng, true, t % 3 == 2 ? Mode::WeaklyCoherent : Mode::Exact);
    const auto p = AnalyticParams::from(d.cfg, d.st);
    const CollisionModel m(d.cfg);
    const auto rho = rho_of(d);
    const auto au = resonant_kdq_us(p), aq = resonant_kdq_q(p), aw = resonant_kdq_w(p);
    const auto us = kdq_distribution(Quantity::US, rho, m);
    const auto qs = kdq_distribution(Quantity::QS, rho, m);
    const auto ws = kdq_distribution(Quantity::WS, rho, m);
    // Each real and imaginary part separately: 8 for u_S, 4 for q_S, 8 for w_S.
    for (std::size_t i = 0; i < 4; ++i) {
      kdq = std::max({kdq, std::abs(us.entries[i].quasiprob.real() - au[i].real()),
                      std::abs(us.entries[i].quasiprob.imag() - au[i].imag()),
                      std::abs(qs.entries[i].quasiprob.real() - aq[i].real()),
                      std::abs(ws.entries[i].quasiprob.real() - aw[i].real()),
                      std::abs(ws.entries[i].quasiprob.imag() - aw[i].imag())});
    }
    const auto mu = moments(us);
    const auto es = resonant_energy_stats(p);
    energy = std::max({energy, std::abs(es.delta_e_s - mu.mean.real()), std::abs(es.variance_u_s - mu.variance)});

    const auto wq = resonant_w_q_stats(p);
    const auto mw = moments(kdq_distribution(Quantity::W, rho, m));
    const auto mq = moments(kdq_distribution(Quantity::Q, rho, m));
    const auto np = nonpositivity(us);
    const auto anp = resonant_nonpositivity(p);
    stats = std::max({stats, std::abs(wq.w_mean - mw.mean), std::abs(wq.w_variance - mw.variance),
                      std::abs(wq.q_mean - mq.mean), std::abs(wq.q_variance - mq.variance),
                      std::abs(anp.n_re - np.n_re), std::abs(anp.n_im - np.n_im)});

    // Detuned closed forms on a companion draw.
    const auto e = oracle::random_draw(rng, false, t % 3 == 2 ? Mode::WeaklyCoherent : Mode::Exact);
    const auto pe = AnalyticParams::from(e.cfg, e.st);
    const CollisionModel me(e.cfg);
    energy = std::max({energy, std::abs(delta_e_s(pe) - average_via_trace(Quantity::US, rho_of(e), me).real()),
                       std::abs(delta_e_sa(pe) - average_via_trace(Quantity::USA, rho_of(e), me).real())});
  }
  const double worst = std::max({kdq, energy, stats});
  return {worst < 1e-10, std::to_string(n) + " resonant + " + std::to_string(n) +
                             " detuned points, interaction element hbar g; max error: components " + num(kdq) +
                             ", energy " + num(energy) + ", work/heat/non-positivity " + num(stats)};
}

Outcome marginalization() {
  std::mt19937_64 rng(105);
  double worst = 0.0;
  for (int t = 0; t < 500; ++t) {
    const auto d = oracle::random_draw(rng, t % 4 == 0);
    const CollisionModel m(d.cfg);
    const auto rho = rho_of(d);
    const auto usa = kdq_distribution(Quantity::USA, rho, m);
    for (auto [keep, q] : {std::pair{Subsystem::S, Quantity::US}, std::pair{Subsystem::A, Quantity::UA}}) {
      const auto direct = kdq_distribution(q, rho, m);
      const auto marg = marginalize_usa(usa, m, keep);
      for (std::size_t i = 0; i < direct.entries.size(); ++i) {
        worst = std::max(worst, std::abs(direct.entries[i].quasiprob - marg.entries[i].quasiprob));
      }
    }
  }
  return {worst < 1e-12, "500 parameter sets, max entry deviation " + num(worst)};
}

Outcome tpm_limit() {
  std::mt19937_64 rng(106);
  double worst = 0.0;
  for (int t = 0; t < 500; ++t) {
    auto d = oracle::random_draw(rng, t % 4 == 0);
    d.cfg.lambda = 0.0;
    d.st.r = 0.0;
    const CollisionModel m(d.cfg);
    for (Quantity q : {Quantity::US, Quantity::UA, Quantity::USA}) {
      const auto np = nonpositivity(kdq_distribution(q, rho_of(d), m));
      worst = std::max({worst, std::abs(np.n_q), std::abs(np.n_re), np.n_im});
    }
  }
  return {worst < 1e-12, "500 parameter sets, max functional " + num(worst)};
}

Outcome energy_preservation_switch() {
  ModelConfig cfg;
  cfg.omega_a = 1.0;
  cfg.g = 1.0;
  cfg.omega_s = 1.0;
  const auto h0 = build_hamiltonians(cfg);
  const double at_resonance = commutator_norm(h0.h_int, h0.h_bare);
  cfg.omega_s = 4.0;
  const auto h3 = build_hamiltonians(cfg);
  const double detuned = commutator_norm(h3.h_int, h3.h_bare);
  const double delta = 3.0;
  const double threshold = 0.1 * cfg.hbar * cfg.g * delta / (cfg.hbar * cfg.g + delta);
  return {at_resonance < 1e-12 && detuned > threshold,
          "||[H_int, H_S + H_A]|| = " + num(at_resonance) + " at Delta = 0, " + num(detuned) +
              " at Delta = 3 (threshold " + num(threshold) + ")"};
}

Outcome bch_order() {
  ModelConfig cfg;
  cfg.omega_a = 1.0;
  cfg.omega_s = 4.0;
  cfg.g = 1.0;
  cfg.beta = 1.0;
  const auto rho = build_system_state({0.25, std::sqrt(3.0) / 4, M_PI / 4});
  auto err = [&](double tau) {
    ModelConfig c = cfg;
    c.tau = tau;
    c.lambda = 0.5 * lambda_max(c);
    const CollisionModel m(c);
    return (collide_once(rho, m).rho_sa_joint - bch_collide_once(rho, m)).frobenius_norm();
  };
  bool ok = true;
  std::string ratios;
  for (double tau : {M_PI / 72, M_PI / 720, M_PI / 7200}) {
    const double ratio = err(tau) / err(tau / 2);
    ok = ok && ratio >= 6.5 && ratio <= 9.5;
    ratios += (ratios.empty() ? "" : ", ") + num(ratio);
  }
  return {ok, "error ratio tau -> tau/2 at g tau = pi/72, pi/720, pi/7200: " + ratios};
}

Outcome master_equation() {
  const double total = 2.0;
  const auto rho0 = build_system_state({0.25, std::sqrt(3.0) / 4, 0.5});
  auto max_dist = [&](double tau) {
    ModelConfig cfg;
    cfg.mode = Mode::WeaklyCoherent;
    cfg.tau = tau;
    cfg.beta = 0.8;
    cfg.lambda_tilde = 0.3;
    const int n = static_cast<int>(std::lround(total / tau));
    const auto coll = evolve(rho0, cfg, n, false);
    const auto me = integrate_master_equation(rho0, cfg, total, tau / 20, 20);
    double m = 0.0;
    for (int k = 0; k <= n; ++k) m = std::max(m, trace_distance(coll.states[k], me.states[k]));
    return m;
  };
  const double d1 = max_dist(0.02), d2 = max_dist(0.01), d3 = max_dist(0.005);
  return {d1 / d2 >= 1.5 && d2 / d3 >= 1.5, "max trace distance " + num(d1) + ", " + num(d2) + ", " + num(d3) +
                                                 " (ratios " + num(d1 / d2) + ", " + num(d2 / d3) + ")"};
}

Outcome operator_approach_check() {
  std::mt19937_64 rng(110);
  double o1 = 0.0, probs = 0.0, values = 0.0, mean = 0.0;
  int used = 0;
  for (int t = 0; t < 300; ++t) {
    const auto d = oracle::random_draw(rng, true);
    const auto rho = rho_of(d);
    const auto op = operator_approach(rho, d.cfg);
    const double w_plus = -0.5 * d.cfg.hbar * d.cfg.omega_s * d.cfg.lambda * std::sin(2 * d.cfg.g * d.cfg.tau);
    const double p_plus = 0.5 + rho(0, 1).imag();
    o1 = std::max(o1, op.o1_norm);
    mean = std::max(mean, std::abs(op.moment(1) - moments(kdq_distribution(Quantity::W, rho, d.cfg)).mean.real()));
    if (op.values.size() != 2) continue;
    ++used;
    const std::size_t i = std::abs(op.values[0] - w_plus) < std::abs(op.values[1] - w_plus) ? 0 : 1;
    values = std::max({values, std::abs(op.values[i] - w_plus), std::abs(op.values[1 - i] + w_plus)});
    probs = std::max({probs, std::abs(op.probs[i] - p_plus), std::abs(op.probs[1 - i] - (1.0 - p_plus))});
  }
  const bool ok = o1 < 1e-12 && probs < 1e-12 && values < 1e-12 && mean < 1e-10 && used > 200;
  return {ok, std::to_string(used) + " non-degenerate draws; |O1| " + num(o1) + ", p " + num(probs) + ", w " +
                  num(values) + ", mean vs KDQ " + num(mean)};
}

Outcome variance_structure() {
  std::mt19937_64 rng(111);
  double interp = 0.0;
  for (int t = 0; t < 200; ++t) {
    auto d = oracle::random_draw(rng, t % 4 == 0);
    const double bound = lambda_max(d.cfg);
    const auto rho = rho_of(d);
    for (Quantity q : {Quantity::US, Quantity::USA}) {
      auto var = [&](double lam) {
        ModelConfig c = d.cfg;
        c.lambda = lam;
        return moments(kdq_distribution(q, rho, c)).variance;
      };
      const double x0 = -0.9 * bound, x1 = 0.1 * bound, x2 = 0.8 * bound, x = 0.45 * bound;
      const auto y0 = var(x0), y1 = var(x1), y2 = var(x2);
      const auto predicted = y0 * ((x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2))) +
                             y1 * ((x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2))) +
                             y2 * ((x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1)));
      interp = std::max(interp, std::abs(predicted - var(x)));
    }
  }

  // Peaks of the incoherent variance along the fig4 detuning axis.
  const auto spec = make_preset("fig4");
  const auto rho = build_system_state(spec.state);
  const auto& deltas = spec.sweep[0].values;
  auto var_us = [&](double delta, double fraction) {
    ModelConfig c = spec.model;
    c.omega_s = c.omega_a + delta;
    c.lambda = fraction * lambda_max(c);
    return moments(kdq_distribution(Quantity::US, rho, c)).variance.real();
  };
  std::vector<double> v0;
  for (double d : deltas) v0.push_back(var_us(d, 0.0));
  int peaks = 0, below = 0, grid_below = 0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const bool lower = var_us(deltas[i], 0.5) < v0[i] && var_us(deltas[i], -0.5) < v0[i];
    grid_below += lower;
    if (i > 0 && i + 1 < deltas.size() && v0[i] > v0[i - 1] && v0[i] > v0[i + 1]) {
      ++peaks;
      below += lower;
    }
  }
  const bool ok = interp < 1e-10 && peaks > 0 && below == peaks;
  return {ok, "quadratic interpolation error " + num(interp) + "; lambda = +-lambda_max/2 lowers the variance at " +
                  std::to_string(below) + "/" + std::to_string(peaks) + " peaks of the lambda = 0 curve (" +
                  std::to_string(grid_below) + "/" + std::to_string(deltas.size()) + " grid points)"};
}

Outcome out_of_resonance_limit() {
  AnalyticParams p;
  p.beta = 1.0;
  p.g = 1.0;
  p.rho11 = 0.25;
  const double r = SystemStateParams::r_max(p.rho11);
  double worst_rel = 0.0, worst_amp = 0.0, sign_gap = 0.0;
  std::size_t counted = 0;
  for (double delta : {200.0, -200.0, 1000.0, -1000.0}) {
    for (double phi_c : {0.0, M_PI / 4, M_PI / 3, M_PI / 2, 2.0}) {
      p.rho12 = std::polar(r, phi_c);
      for (int k = 1; k <= 512; ++k) {
        p.tau = M_PI * k / 512;
        p.omega_s = p.omega_a + delta;
        ModelConfig cfg;
        cfg.beta = p.beta;
        p.lambda = 0.5 * lambda_max(cfg);
        const double full = delta_e_sa(p);
        const double limit = delta_e_sa_limit(p);
        const double amp = 4.0 * p.hbar * p.g * p.lambda * r;
        worst_amp = std::max(worst_amp, std::abs(full - limit) / amp);
        if (std::abs(full) > 1e-3 * p.hbar * p.g * p.lambda * r) {
          ++counted;
          worst_rel = std::max(worst_rel, std::abs(full - limit) / std::abs(full));
        }
        p.omega_s = p.omega_a - delta;
        sign_gap = std::max(sign_gap, std::abs(delta_e_sa_limit(p) - limit) / amp);
      }
    }
  }
  const bool ok = worst_rel <= 0.05 && sign_gap < 1e-12;
  return {ok, "max pointwise relative error " + num(worst_rel) + " over " + std::to_string(counted) +
                  " points; max deviation / amplitude " + num(worst_amp) + "; limit(Delta) vs limit(-Delta) gap / amplitude " +
                  num(sign_gap)};
}

Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("kdqcm_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  auto slurp = [](const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
  };
  bool ok = true;
  std::string bad;
  std::size_t rows = 0;
  for (const auto& name : preset_names()) {
    const auto spec = make_preset(name);
    const auto a = run_to_file(spec, (dir / (name + "_a.csv")).string(), 1);
    const auto b = run_to_file(spec, (dir / (name + "_b.csv")).string(), 0);
    rows += a.rows;
    if (slurp(a.csv_path) != slurp(b.csv_path)) {
      ok = false;
      bad += " " + name;
    }
  }
  fs::remove_all(dir);
  return {ok, std::to_string(preset_names().size()) + " presets, " + std::to_string(rows) +
                  " rows, single-threaded vs parallel" + (ok ? "" : "; differing:" + bad)};
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"lambda_max reproduction", lambda_max_reproduction},
      {"normalization", normalization},
      {"first law along a 100-collision trajectory", first_law},
      {"closed forms match the trace formula", oracle_equivalence},
      {"marginalization", marginalization},
      {"incoherent limit is positive", tpm_limit},
      {"energy-preservation switch", energy_preservation_switch},
      {"second-order expansion order", bch_order},
      {"master-equation consistency", master_equation},
      {"operator approach", operator_approach_check},
      {"variance structure", variance_structure},
      {"extreme out-of-resonance limit", out_of_resonance_limit},
      {"determinism", determinism},
  };

  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--only N]\n", argv[0]);
      return 2;
    }
  }
  if (only < 0 || only > static_cast<int>(criteria.size())) {
    std::fprintf(stderr, "criterion must lie in 1..%zu\n", criteria.size());
    return 2;
  }

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<int>(i) + 1 != only) continue;
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s  %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
