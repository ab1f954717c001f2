#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kdqcm/model.hpp"

namespace kdqcm {

/// One sweep dimension. Linspace axes keep their generator so the metadata
/// block reproduces the grid exactly.
struct SweepAxis {
  enum class Kind { List, Linspace };

  std::string name;
  Kind kind = Kind::List;
  std::vector<double> values;
  double start = 0.0;
  double stop = 0.0;
  std::size_t count = 0;
  bool endpoint = true;

  static SweepAxis list(std::string name, std::vector<double> values);
  static SweepAxis linspace(std::string name, double start, double stop, std::size_t count,
                            bool endpoint = true);
};

/// Parameters that may be swept. "delta" sets omega_s = omega_a + delta;
/// lambda_fraction / r_fraction are relative to the positivity bounds.
const std::vector<std::string>& sweepable_parameters();

/// Column groups that may be requested in `outputs`.
const std::vector<std::string>& output_groups();

struct ExperimentSpec {
  std::string preset = "custom";
  std::string description;
  ModelConfig model;
  SystemStateParams state;
  std::optional<double> lambda_fraction;  // lambda (or lambda_tilde) = fraction * bound
  std::optional<double> r_fraction;       // r = fraction * r_max(rho11)
  std::optional<double> delta;            // omega_s = omega_a + delta
  int collisions = 1;
  std::vector<SweepAxis> sweep;
  std::vector<std::string> outputs;
  std::string out_path;

  std::size_t row_count() const;
};

/// Flat `key = value` lines grouped in [experiment], [model], [state] and
/// [sweep] sections; ';' and '#' start comments. Numbers accept pi and the
/// operators + - * / with parentheses. Throws Error(ConfigError) with the line
/// number on syntax errors and unknown keys, and the model / state errors
/// when a non-swept value violates an invariant.
ExperimentSpec parse_config(std::string_view text);

/// Reads the '# ' metadata block at the top of a CSV written by run().
ExperimentSpec parse_csv_metadata(std::string_view csv_text);

/// Canonical text form accepted by parse_config.
std::string serialize(const ExperimentSpec& spec);

const std::vector<std::string>& preset_names();
ExperimentSpec make_preset(std::string_view name);

struct ResultTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> status;  // per row: ok, lambda_bound, state_bound, nonresonant
  std::vector<std::string> warnings;
};

/// Evaluates every grid point (and collision) of the spec. Rows are computed
/// on up to `threads` workers (0 = hardware concurrency) and assembled in
/// grid order, so the table does not depend on the thread count.
ResultTable run_experiment(const ExperimentSpec& spec, unsigned threads = 0);

/// CSV text: '# ' metadata block, header line, data rows.
std::string to_csv(const ExperimentSpec& spec, const ResultTable& table);

struct RunSummary {
  std::string csv_path;
  std::string meta_path;
  std::size_t rows = 0;
  std::size_t flagged = 0;
};

/// run_experiment + CSV at spec.out_path (or `path` when given) + sidecar
/// `<csv>.meta.json` with run information.
RunSummary run_to_file(const ExperimentSpec& spec, const std::string& path = {}, unsigned threads = 0);

}  // namespace kdqcm
