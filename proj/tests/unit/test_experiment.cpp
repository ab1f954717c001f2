#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <optional>

#include "kdqcm/error.hpp"
#include "kdqcm/experiment.hpp"
#include "kdqcm/kdq.hpp"

using namespace kdqcm;

namespace {

std::optional<ErrorCode> code_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

std::string message_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

std::size_t column(const ResultTable& t, const std::string& name) {
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (t.header[i] == name) return i;
  }
  ADD_FAILURE() << "missing column " << name;
  return 0;
}

}  // namespace

TEST(ConfigFile, Expressions) {
  const auto s = parse_config("[model]\ntau = pi/6\nomega_a = 2*(1+0.5)\ng = -(-2e-1)\n");
  EXPECT_DOUBLE_EQ(s.model.tau, std::numbers::pi / 6);
  EXPECT_DOUBLE_EQ(s.model.omega_a, 3.0);
  EXPECT_DOUBLE_EQ(s.model.g, 0.2);
}

TEST(ConfigFile, SyntaxErrorsCarryLineNumbers) {
  EXPECT_NE(message_of("[model]\n\ntau 0.3\n").find("line 3"), std::string::npos);
  EXPECT_NE(message_of("[model]\ntau = 0.3 +\n").find("line 2"), std::string::npos);
  EXPECT_NE(message_of("[bogus]\n").find("line 1"), std::string::npos);
  EXPECT_NE(message_of("tau = 1\n").find("line 1"), std::string::npos);
  EXPECT_EQ(code_of("[model]\ntau = (1\n"), ErrorCode::ConfigError);
}

TEST(ConfigFile, UnknownAndDuplicateKeys) {
  EXPECT_NE(message_of("[model]\nfrequency = 1\n").find("unknown key 'frequency'"), std::string::npos);
  EXPECT_NE(message_of("[sweep]\nfoo = 1, 2\n").find("unknown sweep parameter"), std::string::npos);
  EXPECT_NE(message_of("[experiment]\noutputs = np_us, magic\n").find("unknown output group"), std::string::npos);
  EXPECT_NE(message_of("[model]\ng = 1\ng = 2\n").find("duplicate key"), std::string::npos);
  EXPECT_EQ(code_of("[model]\nlambda = 0.1\nlambda_fraction = 0.5\n"), ErrorCode::ConfigError);
  EXPECT_EQ(code_of("[experiment]\npreset = fig9\n"), ErrorCode::ConfigError);
}

TEST(ConfigFile, InvariantViolations) {
  EXPECT_EQ(code_of("[model]\nbeta = 1\nlambda = 0.6\n"), ErrorCode::BoundViolation);
  EXPECT_NE(message_of("[model]\nbeta = 1\nlambda = 0.6\n").find("lambda"), std::string::npos);
  EXPECT_EQ(code_of("[model]\ntau = -0.1\n"), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of("[state]\nrho11 = 0.5\nr = 0.6\n"), ErrorCode::BoundViolation);
  EXPECT_EQ(code_of("[sweep]\ntau = linspace(0.1, 1, 0)\n"), ErrorCode::ConfigError);
  EXPECT_EQ(code_of("[sweep]\nomega_s = 1, 2\ndelta = 0, 1\n"), ErrorCode::ConfigError);
  // A swept bound parameter defers the lambda check to the rows.
  EXPECT_FALSE(code_of("[model]\nlambda = 0.6\n[sweep]\nbeta = 0.1, 1\n").has_value());
}

TEST(ConfigFile, PresetDefaults) {
  const auto s = parse_config("[experiment]\npreset = fig5\n");
  EXPECT_EQ(s.preset, "fig5");
  EXPECT_DOUBLE_EQ(s.model.omega_s, 1.0);
  EXPECT_DOUBLE_EQ(s.model.omega_a, 1.0);
  EXPECT_DOUBLE_EQ(s.model.g, 1.0);
  EXPECT_DOUBLE_EQ(s.model.beta, 0.1);
  EXPECT_DOUBLE_EQ(s.state.rho11, 0.25);
  EXPECT_DOUBLE_EQ(s.state.r, std::sqrt(3.0) / 4);
  EXPECT_DOUBLE_EQ(s.state.phi_c, std::numbers::pi / 3);
  EXPECT_DOUBLE_EQ(s.model.lambda, lambda_max(s.model));
  ASSERT_EQ(s.sweep.size(), 1u);
  EXPECT_EQ(s.sweep[0].name, "tau");
  EXPECT_EQ(s.sweep[0].values.size(), 512u);
  EXPECT_DOUBLE_EQ(s.sweep[0].values.back(), std::numbers::pi);
}

TEST(ConfigFile, OverridesOnTopOfPreset) {
  const auto s = parse_config("[experiment]\npreset = fig5\n[model]\nbeta = 2\n[sweep]\ntau = 0.1, 0.2\n");
  EXPECT_DOUBLE_EQ(s.model.beta, 2.0);
  EXPECT_DOUBLE_EQ(s.model.lambda, lambda_max(s.model));
  EXPECT_EQ(s.row_count(), 2u);
}

TEST(ConfigFile, SerializeRoundTrip) {
  for (const auto& name : preset_names()) {
    const auto a = make_preset(name);
    const auto b = parse_config(serialize(a));
    EXPECT_EQ(serialize(a), serialize(b)) << name;
    EXPECT_EQ(a.row_count(), b.row_count()) << name;
    for (std::size_t k = 0; k < a.sweep.size(); ++k) EXPECT_EQ(a.sweep[k].values, b.sweep[k].values);
  }
}

TEST(Run, EmptySweepGivesOneRow) {
  const auto spec = parse_config("[model]\ntau = 0.3\n[state]\nrho11 = 0.5\n");
  const auto t = run_experiment(spec, 1);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.status[0], "ok");
  EXPECT_EQ(t.header.back(), "status");
  EXPECT_EQ(t.rows[0].size() + 1, t.header.size());
}

TEST(Run, ThreadCountDoesNotChangeOutput) {
  auto spec = make_preset("fig3a");
  spec.sweep[1] = SweepAxis::linspace("delta", -5.0, 5.0, 7);
  EXPECT_EQ(to_csv(spec, run_experiment(spec, 1)), to_csv(spec, run_experiment(spec, 3)));
}

TEST(Run, CsvMetadataRoundTrip) {
  auto spec = make_preset("fig4");
  spec.sweep[0] = SweepAxis::list("delta", {0.0, 1.0});
  const std::string csv = to_csv(spec, run_experiment(spec, 2));
  EXPECT_EQ(serialize(parse_csv_metadata(csv)), serialize(spec));
}

TEST(Run, FlaggedRows) {
  const auto spec = parse_config(
      "[experiment]\noutputs = delta_e, moments_w\n[model]\nlambda = 0.3\n"
      "[sweep]\nbeta = 0.01, 5\ndelta = 0, 1\n");
  const auto t = run_experiment(spec, 1);
  ASSERT_EQ(t.status.size(), 4u);
  EXPECT_EQ(t.status[0], "ok");
  EXPECT_EQ(t.status[1], "nonresonant");
  EXPECT_FALSE(std::isnan(t.rows[1][column(t, "delta_e_s")]));
  EXPECT_TRUE(std::isnan(t.rows[1][column(t, "w_mean_re")]));
  EXPECT_EQ(t.status[2], "lambda_bound");
  EXPECT_TRUE(std::isnan(t.rows[2][column(t, "delta_e_s")]));
}

TEST(Run, MatchesDirectEvaluation) {
  auto spec = make_preset("fig5");
  spec.sweep[0] = SweepAxis::list("tau", {0.4});
  const auto t = run_experiment(spec, 1);
  ModelConfig cfg = spec.model;
  cfg.tau = 0.4;
  cfg.lambda = lambda_max(cfg);
  const auto m = moments(kdq_distribution(Quantity::W, build_system_state(spec.state), cfg));
  EXPECT_DOUBLE_EQ(t.rows[0][column(t, "w_mean_re")], m.mean.real());
  EXPECT_FALSE(t.warnings.empty());
}

TEST(Run, CollisionsProduceTrajectoryRows) {
  auto spec = make_preset("fig7");
  spec.collisions = 5;
  const auto t = run_experiment(spec, 1);
  ASSERT_EQ(t.rows.size(), 5u);
  EXPECT_EQ(t.header[0], "collision");
  EXPECT_DOUBLE_EQ(t.rows[0][column(t, "state_rho11")], 0.25);
  EXPECT_NE(t.rows[1][column(t, "state_rho11")], 0.25);
}
