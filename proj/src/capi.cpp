#include "kdqcm/kdqcm.h"

#include <cstring>
#include <new>
#include <string>

#include "kdqcm/collision.hpp"
#include "kdqcm/error.hpp"
#include "kdqcm/experiment.hpp"
#include "kdqcm/kdq.hpp"
#include "kdqcm/selftest.hpp"
#include "kdqcm/version.hpp"

struct kdq_model {
  kdqcm::CollisionModel model;
};

struct kdq_experiment {
  kdqcm::ExperimentSpec spec;
  mutable std::string description;
};

namespace {

thread_local std::string g_last_error;

kdq_status to_status(kdqcm::ErrorCode c) {
  using kdqcm::ErrorCode;
  switch (c) {
    case ErrorCode::InvalidArgument: return KDQ_ERR_INVALID_ARGUMENT;
    case ErrorCode::DimensionMismatch: return KDQ_ERR_DIMENSION_MISMATCH;
    case ErrorCode::ModeMismatch: return KDQ_ERR_MODE_MISMATCH;
    case ErrorCode::BoundViolation: return KDQ_ERR_BOUND_VIOLATION;
    case ErrorCode::ConfigError: return KDQ_ERR_CONFIG;
    case ErrorCode::IoError: return KDQ_ERR_IO;
    case ErrorCode::NumericFailure: return KDQ_ERR_NUMERIC;
  }
  return KDQ_ERR_INTERNAL;
}

// Runs f, translating exceptions into status codes and the thread-local message.
template <class F>
kdq_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return KDQ_OK;
  } catch (const kdqcm::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return KDQ_ERR_INTERNAL;
}

void require(bool ok, const char* what) {
  if (!ok) throw kdqcm::Error(kdqcm::ErrorCode::InvalidArgument, what);
}

kdqcm::ModelConfig to_config(const kdq_model_params& p) {
  kdqcm::ModelConfig c;
  c.omega_s = p.omega_s;
  c.omega_a = p.omega_a;
  c.g = p.g;
  c.tau = p.tau;
  c.beta = p.beta;
  c.lambda = p.lambda;
  c.lambda_tilde = p.lambda_tilde;
  c.hbar = p.hbar;
  require(p.mode == KDQ_MODE_EXACT || p.mode == KDQ_MODE_WEAK, "unknown mode");
  c.mode = p.mode == KDQ_MODE_EXACT ? kdqcm::Mode::Exact : kdqcm::Mode::WeaklyCoherent;
  return c;
}

kdqcm::ComplexMatrix to_matrix(const kdq_state& s) {
  kdqcm::ComplexMatrix m(2);
  for (std::size_t i = 0; i < 4; ++i) m(i / 2, i % 2) = {s.m[i].re, s.m[i].im};
  return m;
}

kdq_state from_matrix(const kdqcm::ComplexMatrix& m) {
  kdq_state s{};
  for (std::size_t i = 0; i < 4; ++i) s.m[i] = {m(i / 2, i % 2).real(), m(i / 2, i % 2).imag()};
  return s;
}

kdq_complex from_complex(std::complex<double> z) { return {z.real(), z.imag()}; }

kdqcm::Quantity to_quantity(kdq_quantity q) {
  require(q >= KDQ_US && q <= KDQ_QS, "unknown quantity");
  static const kdqcm::Quantity map[] = {kdqcm::Quantity::US, kdqcm::Quantity::UA, kdqcm::Quantity::USA,
                                        kdqcm::Quantity::W,  kdqcm::Quantity::Q,  kdqcm::Quantity::WS,
                                        kdqcm::Quantity::QS};
  return map[q];
}

kdqcm::KdqDistribution distribution(const kdq_model* model, const kdq_state* state, kdq_quantity q) {
  require(model && state, "null argument");
  return kdqcm::kdq_distribution(to_quantity(q), to_matrix(*state), model->model);
}

}  // namespace

extern "C" {

const char* kdq_version(void) { return kdqcm::kVersion; }

const char* kdq_last_error(void) { return g_last_error.c_str(); }

void kdq_model_params_default(kdq_model_params* out) {
  if (!out) return;
  const kdqcm::ModelConfig c;
  *out = {c.omega_s, c.omega_a, c.g, c.tau, c.beta, c.lambda, c.lambda_tilde, c.hbar, KDQ_MODE_EXACT};
}

kdq_status kdq_model_create(const kdq_model_params* params, kdq_model** out) {
  return guarded([&] {
    require(params && out, "null argument");
    *out = nullptr;
    const kdqcm::ModelConfig cfg = to_config(*params);
    cfg.validate();
    *out = new kdq_model{kdqcm::CollisionModel(cfg)};
  });
}

void kdq_model_destroy(kdq_model* model) { delete model; }

kdq_status kdq_lambda_max(const kdq_model_params* params, double* out) {
  return guarded([&] {
    require(params && out, "null argument");
    *out = kdqcm::lambda_max(to_config(*params));
  });
}

kdq_status kdq_state_from_params(double rho11, double r, double phi_c, kdq_state* out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    *out = from_matrix(kdqcm::build_system_state({rho11, r, phi_c}));
  });
}

kdq_status kdq_collide(const kdq_model* model, const kdq_state* in, kdq_state* out) {
  return guarded([&] {
    require(model && in && out, "null argument");
    *out = from_matrix(kdqcm::collide_once(to_matrix(*in), model->model).rho_s_next);
  });
}

kdq_status kdq_steady_state(const kdq_model* model, const kdq_state* start, double tol, kdq_steady_result* out) {
  return guarded([&] {
    require(model && start && out, "null argument");
    kdqcm::SteadyStateOptions opts;
    if (tol > 0.0) opts.tol = tol;
    const auto res = kdqcm::find_steady_state(model->model.config(), to_matrix(*start), opts);
    out->state = from_matrix(res.state);
    out->iterations = res.iterations;
    out->residual = res.residual;
    out->converged = res.converged ? 1 : 0;
  });
}

kdq_status kdq_distribution(const kdq_model* model, const kdq_state* state, kdq_quantity quantity,
                            kdq_entry* entries, size_t capacity, size_t* count) {
  return guarded([&] {
    require(count != nullptr, "null argument");
    require(entries != nullptr || capacity == 0, "null entries with nonzero capacity");
    const auto d = distribution(model, state, quantity);
    *count = d.entries.size();
    for (std::size_t i = 0; i < d.entries.size() && i < capacity; ++i) {
      const auto& e = d.entries[i];
      entries[i] = {e.label.s_in, e.label.a_in, e.label.s_fin, e.label.a_fin, e.value, from_complex(e.quasiprob)};
    }
  });
}

kdq_status kdq_moments_of(const kdq_model* model, const kdq_state* state, kdq_quantity quantity,
                          kdq_moments* out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    const auto m = kdqcm::moments(distribution(model, state, quantity));
    *out = {from_complex(m.mean), from_complex(m.second_moment), from_complex(m.variance)};
  });
}

kdq_status kdq_nonpositivity_of(const kdq_model* model, const kdq_state* state, kdq_quantity quantity,
                                kdq_nonpositivity* out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    const auto r = kdqcm::nonpositivity(distribution(model, state, quantity));
    *out = {r.n_q, r.n_re, r.n_im};
  });
}

kdq_status kdq_experiment_parse(const char* text, kdq_experiment** out) {
  return guarded([&] {
    require(text && out, "null argument");
    *out = nullptr;
    auto spec = kdqcm::parse_config(text);
    *out = new kdq_experiment{std::move(spec), {}};
  });
}

kdq_status kdq_experiment_preset(const char* name, kdq_experiment** out) {
  return guarded([&] {
    require(name && out, "null argument");
    *out = nullptr;
    *out = new kdq_experiment{kdqcm::make_preset(name), {}};
  });
}

void kdq_experiment_destroy(kdq_experiment* exp) { delete exp; }

kdq_status kdq_experiment_set_output(kdq_experiment* exp, const char* path) {
  return guarded([&] {
    require(exp && path, "null argument");
    exp->spec.out_path = path;
  });
}

const char* kdq_experiment_describe(const kdq_experiment* exp) {
  if (!exp) return "";
  exp->description = kdqcm::serialize(exp->spec);
  return exp->description.c_str();
}

size_t kdq_experiment_rows(const kdq_experiment* exp) { return exp ? exp->spec.row_count() : 0; }

kdq_status kdq_experiment_run(const kdq_experiment* exp, unsigned threads, size_t* rows, size_t* flagged,
                              char* csv_path, size_t csv_path_capacity) {
  return guarded([&] {
    require(exp != nullptr, "null argument");
    const auto summary = kdqcm::run_to_file(exp->spec, {}, threads);
    if (rows) *rows = summary.rows;
    if (flagged) *flagged = summary.flagged;
    if (csv_path && csv_path_capacity > 0) {
      std::strncpy(csv_path, summary.csv_path.c_str(), csv_path_capacity - 1);
      csv_path[csv_path_capacity - 1] = '\0';
    }
  });
}

const char* kdq_preset_names(void) {
  static const std::string names = [] {
    std::string s;
    for (const auto& n : kdqcm::preset_names()) s += (s.empty() ? "" : ",") + n;
    return s;
  }();
  return names.c_str();
}

kdq_status kdq_selftest(kdq_selftest_callback callback, void* user, int* failed) {
  int bad = 0;
  const kdq_status st = guarded([&] {
    kdqcm::run_selftest([&](const kdqcm::SelftestCheck& c) {
      if (!c.passed) ++bad;
      if (callback) callback(c.name.c_str(), c.passed ? 1 : 0, c.detail.c_str(), user);
    });
  });
  if (failed) *failed = bad;
  if (st != KDQ_OK) return st;
  if (bad > 0) {
    g_last_error = std::to_string(bad) + " self-test check(s) failed";
    return KDQ_ERR_NUMERIC;
  }
  return KDQ_OK;
}

}  // extern "C"
