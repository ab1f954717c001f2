#include <gtest/gtest.h>

#include <random>

#include "kdqcm/analytic.hpp"
#include "kdqcm/error.hpp"
#include "kdqcm/kdq.hpp"
#include "oracle.hpp"

using namespace kdqcm;

namespace {

AnalyticParams resonant_params() {
  AnalyticParams p;
  p.beta = 0.1;
  p.lambda = 1.0 / (2.0 * std::cosh(0.05));
  p.rho11 = 0.25;
  p.rho12 = std::polar(std::sqrt(3.0) / 4, M_PI / 3);
  p.g = 1.0;
  p.tau = M_PI / 6;
  return p;
}

}  // namespace

TEST(Auxiliary, Definitions) {
  AnalyticParams p = resonant_params();
  p.omega_s = 3.0;
  const auto f = auxiliary(p);
  EXPECT_NEAR(f.c_beta, 1.0 + std::exp(0.1), 1e-15);
  EXPECT_NEAR(f.tau_tilde, p.tau * std::sqrt(4.0 + 4.0), 1e-15);
  EXPECT_NEAR(f.j1, p.lambda * p.rho12.real(), 1e-15);
  EXPECT_NEAR(f.j2, p.lambda * p.rho12.imag(), 1e-15);
  EXPECT_NEAR(f.theta, std::atan2(f.b, f.a), 1e-15);
  p.lambda = 0.0;
  p.rho11 = 1.0 / f.c_beta;
  EXPECT_EQ(auxiliary(p).theta, 0.0);
}

TEST(ResonantKdq, ZeroPulseArea) {
  AnalyticParams p = resonant_params();
  p.tau = 0.0;
  const auto u = resonant_kdq_us(p);
  EXPECT_NEAR(u[0].real(), 0.25, 1e-15);
  EXPECT_NEAR(std::abs(u[1]) + std::abs(u[2]), 0.0, 1e-15);
  EXPECT_NEAR(u[3].real(), 0.75, 1e-15);
  for (const auto& z : u) EXPECT_EQ(z.imag(), 0.0);
}

TEST(ResonantKdq, SumsAndSigns) {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 200; ++t) {
    const auto d = oracle::random_draw(rng, true);
    const auto p = AnalyticParams::from(d.cfg, d.st);
    std::complex<double> su = 0.0, sq = 0.0, sw = 0.0;
    const auto u = resonant_kdq_us(p), q = resonant_kdq_q(p), w = resonant_kdq_w(p);
    for (int i = 0; i < 4; ++i) {
      su += u[i];
      sq += q[i];
      sw += w[i];
      EXPECT_GE(q[i].real(), 0.0);
      EXPECT_EQ(q[i].imag(), 0.0);
    }
    EXPECT_LT(std::abs(su - 1.0), 1e-14);
    EXPECT_LT(std::abs(sq - 1.0), 1e-14);
    EXPECT_LT(std::abs(sw), 1e-15);
  }
  AnalyticParams p = resonant_params();
  p.lambda = 0.0;
  for (const auto& z : resonant_kdq_w(p)) EXPECT_EQ(std::abs(z), 0.0);
  p.omega_s = 2.0;
  EXPECT_THROW(resonant_kdq_us(p), Error);
}

TEST(ResonantKdq, CaptionPointMatchesTraceFormula) {
  ModelConfig cfg;
  cfg.beta = 0.1;
  cfg.lambda = 1.0 / ancilla_partition_function(cfg);
  cfg.g = 1.0;
  cfg.tau = M_PI / 6;
  const SystemStateParams st{0.25, std::sqrt(3.0) / 4, M_PI / 3};
  const auto p = AnalyticParams::from(cfg, st);
  const CollisionModel model(cfg);
  const auto rho = build_system_state(st);
  const auto u = kdq_distribution(Quantity::US, rho, model);
  const auto q = kdq_distribution(Quantity::QS, rho, model);
  const auto w = kdq_distribution(Quantity::WS, rho, model);
  const auto au = resonant_kdq_us(p), aq = resonant_kdq_q(p), aw = resonant_kdq_w(p);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_LT(std::abs(u.entries[i].quasiprob - au[i]), 1e-12);
    EXPECT_LT(std::abs(q.entries[i].quasiprob - aq[i]), 1e-12);
    EXPECT_LT(std::abs(w.entries[i].quasiprob - aw[i]), 1e-12);
  }
}

TEST(DeltaE, ZeroAtZeroTimeAndResonance) {
  AnalyticParams p = resonant_params();
  p.omega_s = 4.0;
  p.tau = 0.0;
  EXPECT_NEAR(delta_e_s(p), 0.0, 1e-14);
  EXPECT_NEAR(delta_e_sa(p), 0.0, 1e-14);
  p.tau = 0.7;
  p.omega_s = p.omega_a;
  EXPECT_EQ(delta_e_sa(p), 0.0);
}

TEST(DeltaE, MatchesNumericsAndEnvelopes) {
  std::mt19937_64 rng(42);
  for (int t = 0; t < 200; ++t) {
    const auto d = oracle::random_draw(rng, t % 3 == 0, t % 4 == 0 ? Mode::WeaklyCoherent : Mode::Exact);
    const auto p = AnalyticParams::from(d.cfg, d.st);
    const CollisionModel model(d.cfg);
    const auto rho = build_system_state(d.st);
    EXPECT_NEAR(delta_e_s(p), average_via_trace(Quantity::US, rho, model).real(), 1e-10);
    EXPECT_NEAR(delta_e_sa(p), average_via_trace(Quantity::USA, rho, model).real(), 1e-10);
    const auto [lo, hi] = delta_e_s_envelopes(p);
    EXPECT_LE(lo, delta_e_s(p) + 1e-14);
    EXPECT_GE(hi, delta_e_s(p) - 1e-14);
  }
}

TEST(DeltaE, ResonantFormsAgree) {
  std::mt19937_64 rng(43);
  for (int t = 0; t < 100; ++t) {
    const auto d = oracle::random_draw(rng, true);
    const auto p = AnalyticParams::from(d.cfg, d.st);
    const auto es = resonant_energy_stats(p);
    const auto wq = resonant_w_q_stats(p);
    EXPECT_NEAR(es.delta_e_s, delta_e_s(p), 1e-12);
    EXPECT_NEAR(wq.w_mean + wq.q_mean, es.delta_e_s, 1e-12);
    const auto m = moments(kdq_distribution(Quantity::US, build_system_state(d.st), d.cfg));
    EXPECT_LT(std::abs(m.variance - es.variance_u_s), 1e-10);
    const auto ma = moments(kdq_distribution(Quantity::UA, build_system_state(d.st), d.cfg));
    EXPECT_LT(std::abs(ma.variance - es.variance_u_s), 1e-10);
  }
}

TEST(DeltaE, LimitForm) {
  AnalyticParams p = resonant_params();
  p.lambda = 0.0;
  p.omega_s = p.omega_a + 200.0;
  EXPECT_EQ(delta_e_sa_limit(p), 0.0);
  p = resonant_params();
  p.lambda = 0.4;
  const double r = std::abs(p.rho12);
  // Deviation measured against the oscillation amplitude 4 hbar g lambda r;
  // the same limit expression serves both signs of Delta.
  auto max_dev = [&](double d) {
    p.omega_s = p.omega_a + d;
    double m = 0.0;
    for (double tau = 0.01; tau < 3.0; tau += 0.0137) {
      p.tau = tau;
      m = std::max(m, std::abs(delta_e_sa(p) - delta_e_sa_limit(p)));
    }
    return m / (4.0 * p.g * p.lambda * r);
  };
  for (double d : {200.0, -200.0}) {
    EXPECT_LT(max_dev(d), 0.03);
    EXPECT_LT(max_dev(10.0 * d), 0.2 * max_dev(d));
  }
}

TEST(Stats, WorkAndHeat) {
  AnalyticParams p = resonant_params();
  p.rho12 = 0.3;
  const auto s = resonant_w_q_stats(p);
  EXPECT_EQ(s.w_mean, 0.0);
  EXPECT_EQ(s.w_variance.real(), 0.0);
  p = resonant_params();
  const auto base = resonant_w_q_stats(p);
  p.lambda *= -0.3;
  p.rho12 = std::polar(0.2, 2.0);
  const auto other = resonant_w_q_stats(p);
  EXPECT_EQ(base.q_mean, other.q_mean);
  EXPECT_EQ(base.q_variance, other.q_variance);
}

TEST(Stats, MatchNumericDistributions) {
  std::mt19937_64 rng(44);
  for (int t = 0; t < 200; ++t) {
    const auto d = oracle::random_draw(rng, true, t % 2 ? Mode::WeaklyCoherent : Mode::Exact);
    const auto p = AnalyticParams::from(d.cfg, d.st);
    const CollisionModel model(d.cfg);
    const auto rho = build_system_state(d.st);
    const auto s = resonant_w_q_stats(p);
    const auto w = moments(kdq_distribution(Quantity::W, rho, model));
    const auto q = moments(kdq_distribution(Quantity::Q, rho, model));
    EXPECT_LT(std::abs(w.mean - s.w_mean), 1e-10);
    EXPECT_LT(std::abs(w.variance - s.w_variance), 1e-10);
    EXPECT_LT(std::abs(q.mean - s.q_mean), 1e-10);
    EXPECT_LT(std::abs(q.variance - s.q_variance), 1e-10);
    const auto np = nonpositivity(kdq_distribution(Quantity::US, rho, model));
    const auto anp = resonant_nonpositivity(p);
    EXPECT_NEAR(np.n_re, anp.n_re, 1e-10);
    EXPECT_NEAR(np.n_im, anp.n_im, 1e-10);
  }
}

TEST(Stats, NonPositivityStructure) {
  AnalyticParams p = resonant_params();
  p.lambda = 0.0;
  const auto zero = resonant_nonpositivity(p);
  EXPECT_NEAR(zero.n_re, 0.0, 1e-14);
  EXPECT_EQ(zero.n_im, 0.0);
  p = resonant_params();
  p.rho12 = 0.35;
  const auto a = resonant_nonpositivity(p);
  EXPECT_GT(a.n_im, 0.0);
  p.rho12 = 0.1;
  EXPECT_NEAR(resonant_nonpositivity(p).n_re, a.n_re, 1e-15);
}
