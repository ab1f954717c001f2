#include "kdqcm/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "kdqcm/analytic.hpp"
#include "kdqcm/collision.hpp"
#include "kdqcm/error.hpp"
#include "kdqcm/kdq.hpp"
#include "kdqcm/smalltau.hpp"
#include "kdqcm/version.hpp"

namespace kdqcm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

[[noreturn]] void config_error(int line, const std::string& msg) {
  throw Error(ErrorCode::ConfigError, line > 0 ? "line " + std::to_string(line) + ": " + msg : msg);
}

// Recursive-descent evaluator for numbers, pi, + - * / and parentheses.
class ExprParser {
 public:
  ExprParser(std::string_view text, int line) : s_(text), line_(line) {}

  double parse() {
    const double v = expr();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    if (!std::isfinite(v)) fail("value is not finite");
    return v;
  }

 private:
  double expr() {
    double v = term();
    for (;;) {
      skip_ws();
      if (accept('+')) v += term();
      else if (accept('-')) v -= term();
      else return v;
    }
  }

  double term() {
    double v = factor();
    for (;;) {
      skip_ws();
      if (accept('*')) v *= factor();
      else if (accept('/')) v /= factor();
      else return v;
    }
  }

  double factor() {
    skip_ws();
    if (accept('-')) return -factor();
    if (accept('+')) return factor();
    if (accept('(')) {
      const double v = expr();
      skip_ws();
      if (!accept(')')) fail("missing ')'");
      return v;
    }
    if (s_.substr(pos_, 2) == "pi") {
      pos_ += 2;
      return std::numbers::pi;
    }
    const std::string rest(s_.substr(pos_));
    char* end = nullptr;
    const double v = std::strtod(rest.c_str(), &end);
    if (end == rest.c_str()) fail("expected a number in '" + std::string(s_) + "'");
    pos_ += static_cast<std::size_t>(end - rest.c_str());
    return v;
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& msg) { config_error(line_, msg); }

  std::string_view s_;
  int line_;
  std::size_t pos_ = 0;
};

double parse_number(std::string_view text, int line) { return ExprParser(text, line).parse(); }

std::vector<std::string> split_top_level(std::string_view s) {
  std::vector<std::string> parts;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      parts.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(trim(cur));
  return parts;
}

bool is_lambda_related(const std::string& name) {
  static const std::set<std::string> names{"beta", "omega_a", "tau", "hbar", "lambda",
                                           "lambda_tilde", "lambda_fraction"};
  return names.count(name) > 0;
}

bool is_state_related(const std::string& name) {
  return name == "rho11" || name == "r" || name == "r_fraction";
}

// Applies one swept (or configured) parameter value to a spec.
void apply_parameter(ExperimentSpec& s, const std::string& name, double v) {
  ModelConfig& m = s.model;
  if (name == "omega_s") {
    m.omega_s = v;
    s.delta.reset();
  } else if (name == "omega_a") {
    m.omega_a = v;
  } else if (name == "delta") {
    s.delta = v;
  } else if (name == "g") {
    m.g = v;
  } else if (name == "tau") {
    m.tau = v;
  } else if (name == "beta") {
    m.beta = v;
  } else if (name == "hbar") {
    m.hbar = v;
  } else if (name == "lambda") {
    m.lambda = v;
    s.lambda_fraction.reset();
  } else if (name == "lambda_tilde") {
    m.lambda_tilde = v;
    s.lambda_fraction.reset();
  } else if (name == "lambda_fraction") {
    s.lambda_fraction = v;
  } else if (name == "rho11") {
    s.state.rho11 = v;
  } else if (name == "r") {
    s.state.r = v;
    s.r_fraction.reset();
  } else if (name == "r_fraction") {
    s.r_fraction = v;
  } else if (name == "phi_c") {
    s.state.phi_c = v;
  } else {
    throw Error(ErrorCode::ConfigError, "unknown parameter '" + name + "'");
  }
}

// Fills the derived fields (delta, fractions) into concrete values.
void resolve(ExperimentSpec& s) {
  if (s.delta) s.model.omega_s = s.model.omega_a + *s.delta;
  if (s.lambda_fraction) {
    const double v = *s.lambda_fraction * lambda_max(s.model);
    if (s.model.mode == Mode::Exact) s.model.lambda = v;
    else s.model.lambda_tilde = v;
  }
  if (s.r_fraction) s.state.r = *s.r_fraction * SystemStateParams::r_max(s.state.rho11);
}

std::vector<double> axis_values(const SweepAxis& a) {
  if (a.kind == SweepAxis::Kind::List) return a.values;
  std::vector<double> v(a.count);
  if (a.count == 1) {
    v[0] = a.start;
    return v;
  }
  const double div = static_cast<double>(a.endpoint ? a.count - 1 : a.count);
  const double step = (a.stop - a.start) / div;
  for (std::size_t i = 0; i < a.count; ++i) v[i] = a.start + step * static_cast<double>(i);
  if (a.endpoint) v.back() = a.stop;
  return v;
}

}  // namespace

SweepAxis SweepAxis::list(std::string name, std::vector<double> values) {
  SweepAxis a;
  a.name = std::move(name);
  a.kind = Kind::List;
  a.values = std::move(values);
  a.count = a.values.size();
  return a;
}

SweepAxis SweepAxis::linspace(std::string name, double start, double stop, std::size_t count, bool endpoint) {
  SweepAxis a;
  a.name = std::move(name);
  a.kind = Kind::Linspace;
  a.start = start;
  a.stop = stop;
  a.count = count;
  a.endpoint = endpoint;
  a.values = axis_values(a);
  return a;
}

const std::vector<std::string>& sweepable_parameters() {
  static const std::vector<std::string> names{"omega_s", "omega_a", "delta", "g", "tau", "beta", "hbar",
                                              "lambda", "lambda_tilde", "lambda_fraction", "rho11", "r",
                                              "r_fraction", "phi_c"};
  return names;
}

namespace {

const char* const kQuantities[] = {"us", "ua", "usa", "w", "q", "ws", "qs"};

bool resonant_only_quantity(std::string_view q) { return q == "w" || q == "q" || q == "ws" || q == "qs"; }

}  // namespace

const std::vector<std::string>& output_groups() {
  static const std::vector<std::string> groups = [] {
    std::vector<std::string> g{"params", "state", "delta_e", "analytic_delta_e", "analytic_kdq",
                               "analytic_stats", "thermo", "operator", "variance_ratio", "steady_state"};
    for (const char* q : kQuantities) {
      g.push_back(std::string("kdq_") + q);
      g.push_back(std::string("moments_") + q);
      if (std::string_view(q) != "w" && std::string_view(q) != "ws") g.push_back(std::string("np_") + q);
    }
    return g;
  }();
  return groups;
}

std::size_t ExperimentSpec::row_count() const {
  std::size_t n = static_cast<std::size_t>(collisions);
  for (const auto& a : sweep) n *= a.values.size();
  return n;
}

// ---------------------------------------------------------------- parsing

namespace {

struct Entry {
  std::string key;
  std::string value;
  int line;
};

struct Sections {
  std::map<std::string, std::vector<Entry>> by_name;
};

Sections split_sections(std::string_view text) {
  static const std::set<std::string> known{"experiment", "model", "state", "sweep"};
  Sections out;
  std::string current;
  std::set<std::pair<std::string, std::string>> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty() || s[0] == ';' || s[0] == '#') continue;
    if (s.front() == '[') {
      if (s.back() != ']') config_error(line, "malformed section header '" + s + "'");
      current = trim(std::string_view(s).substr(1, s.size() - 2));
      if (!known.count(current)) config_error(line, "unknown section [" + current + "]");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) config_error(line, "expected 'key = value', got '" + s + "'");
    if (current.empty()) config_error(line, "key outside of a section");
    Entry e{trim(std::string_view(s).substr(0, eq)), trim(std::string_view(s).substr(eq + 1)), line};
    if (e.key.empty()) config_error(line, "empty key");
    if (e.value.empty()) config_error(line, "empty value for '" + e.key + "'");
    if (!seen.insert({current, e.key}).second) {
      config_error(line, "duplicate key '" + e.key + "' in [" + current + "]");
    }
    out.by_name[current].push_back(std::move(e));
  }
  return out;
}

SweepAxis parse_axis(const Entry& e) {
  const auto& names = sweepable_parameters();
  if (std::find(names.begin(), names.end(), e.key) == names.end()) {
    config_error(e.line, "unknown sweep parameter '" + e.key + "'");
  }
  const std::string& v = e.value;
  if (v.rfind("linspace", 0) == 0) {
    const auto open = v.find('(');
    if (open == std::string::npos || v.back() != ')') config_error(e.line, "malformed linspace(...)");
    const auto args = split_top_level(std::string_view(v).substr(open + 1, v.size() - open - 2));
    if (args.size() != 3 && args.size() != 4) {
      config_error(e.line, "linspace takes (start, stop, count[, open])");
    }
    const double start = parse_number(args[0], e.line);
    const double stop = parse_number(args[1], e.line);
    const double count = parse_number(args[2], e.line);
    if (count < 1 || count != std::floor(count) || count > 1e7) {
      config_error(e.line, "linspace count must be a positive integer");
    }
    bool endpoint = true;
    if (args.size() == 4) {
      if (args[3] != "open") config_error(e.line, "linspace fourth argument must be 'open'");
      endpoint = false;
    }
    return SweepAxis::linspace(e.key, start, stop, static_cast<std::size_t>(count), endpoint);
  }
  std::vector<double> vals;
  for (const auto& part : split_top_level(v)) {
    if (part.empty()) config_error(e.line, "empty entry in value list");
    vals.push_back(parse_number(part, e.line));
  }
  return SweepAxis::list(e.key, std::move(vals));
}

std::vector<std::string> parse_outputs(const Entry& e) {
  std::vector<std::string> out;
  const auto& groups = output_groups();
  for (const auto& part : split_top_level(e.value)) {
    if (std::find(groups.begin(), groups.end(), part) == groups.end()) {
      config_error(e.line, "unknown output group '" + part + "'");
    }
    if (std::find(out.begin(), out.end(), part) != out.end()) {
      config_error(e.line, "output group '" + part + "' listed twice");
    }
    out.push_back(part);
  }
  return out;
}

void check_exclusive(const std::vector<Entry>& entries, const char* a, const char* b) {
  const Entry* ea = nullptr;
  const Entry* eb = nullptr;
  for (const auto& e : entries) {
    if (e.key == a) ea = &e;
    if (e.key == b) eb = &e;
  }
  if (ea && eb) config_error(eb->line, std::string("'") + a + "' and '" + b + "' are mutually exclusive");
}

void validate_spec(const ExperimentSpec& spec) {
  std::set<std::string> swept;
  for (const auto& a : spec.sweep) {
    if (!swept.insert(a.name).second) {
      throw Error(ErrorCode::ConfigError, "sweep parameter '" + a.name + "' given twice");
    }
    if (a.values.empty()) throw Error(ErrorCode::ConfigError, "sweep '" + a.name + "' has an empty grid");
    for (double v : a.values) {
      if (!std::isfinite(v)) throw Error(ErrorCode::ConfigError, "sweep '" + a.name + "' has a non-finite value");
    }
  }
  auto both = [&](const char* x, const char* y) { return swept.count(x) && swept.count(y); };
  if (both("omega_s", "delta")) throw Error(ErrorCode::ConfigError, "cannot sweep both omega_s and delta");
  if (both("lambda", "lambda_fraction") || both("lambda_tilde", "lambda_fraction")) {
    throw Error(ErrorCode::ConfigError, "cannot sweep lambda together with lambda_fraction");
  }
  if (both("r", "r_fraction")) throw Error(ErrorCode::ConfigError, "cannot sweep both r and r_fraction");
  if (spec.collisions < 1 || spec.collisions > 1'000'000) {
    throw Error(ErrorCode::ConfigError, "collisions must lie in [1, 1000000]");
  }
  if (spec.outputs.empty()) throw Error(ErrorCode::ConfigError, "outputs must not be empty");

  ExperimentSpec base = spec;
  resolve(base);
  const bool lambda_swept = std::any_of(swept.begin(), swept.end(), is_lambda_related);
  const bool state_swept = std::any_of(swept.begin(), swept.end(), is_state_related);
  ModelConfig cfg = base.model;
  // Swept fields are checked per row; a zero coherence isolates the other invariants.
  if (lambda_swept || swept.count("g")) {
    cfg.lambda = 0.0;
    cfg.lambda_tilde = 0.0;
  }
  if (!swept.count("g") && !swept.count("tau") && !swept.count("hbar") && !swept.count("beta")) {
    cfg.validate();
  } else if (!(cfg.g > 0.0) && !swept.count("g")) {
    throw Error(ErrorCode::InvalidArgument, "model: g must be > 0");
  }
  SystemStateParams st = base.state;
  if (state_swept) st.r = 0.0;
  if (!swept.count("rho11") && !swept.count("phi_c")) st.validate();
}

std::string output_list(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
  return s;
}

}  // namespace

ExperimentSpec parse_config(std::string_view text) {
  const Sections sec = split_sections(text);
  auto section = [&](const char* name) -> const std::vector<Entry>& {
    static const std::vector<Entry> empty;
    auto it = sec.by_name.find(name);
    return it == sec.by_name.end() ? empty : it->second;
  };

  ExperimentSpec spec;
  for (const auto& e : section("experiment")) {
    if (e.key == "preset") {
      const auto& names = preset_names();
      if (std::find(names.begin(), names.end(), e.value) == names.end()) {
        config_error(e.line, "unknown preset '" + e.value + "'");
      }
      spec = make_preset(e.value);
    }
  }
  for (const auto& e : section("experiment")) {
    if (e.key == "preset") continue;
    if (e.key == "description") {
      spec.description = e.value;
    } else if (e.key == "collisions") {
      const double n = parse_number(e.value, e.line);
      if (n < 1 || n != std::floor(n) || n > 1e6) config_error(e.line, "collisions must be an integer in [1, 1000000]");
      spec.collisions = static_cast<int>(n);
    } else if (e.key == "outputs") {
      spec.outputs = parse_outputs(e);
    } else if (e.key == "out") {
      spec.out_path = e.value;
    } else {
      config_error(e.line, "unknown key '" + e.key + "' in [experiment]");
    }
  }

  const auto& model = section("model");
  check_exclusive(model, "omega_s", "delta");
  check_exclusive(model, "lambda", "lambda_fraction");
  check_exclusive(model, "lambda_tilde", "lambda_fraction");
  check_exclusive(model, "lambda", "lambda_tilde");
  for (const auto& e : model) {
    if (e.key == "mode") {
      if (e.value == "exact") spec.model.mode = Mode::Exact;
      else if (e.value == "weak") spec.model.mode = Mode::WeaklyCoherent;
      else config_error(e.line, "mode must be 'exact' or 'weak'");
      continue;
    }
    static const std::set<std::string> keys{"omega_s", "omega_a", "delta", "g", "tau", "beta", "hbar",
                                            "lambda", "lambda_tilde", "lambda_fraction"};
    if (!keys.count(e.key)) config_error(e.line, "unknown key '" + e.key + "' in [model]");
    apply_parameter(spec, e.key, parse_number(e.value, e.line));
  }

  const auto& state = section("state");
  check_exclusive(state, "r", "r_fraction");
  for (const auto& e : state) {
    static const std::set<std::string> keys{"rho11", "r", "r_fraction", "phi_c"};
    if (!keys.count(e.key)) config_error(e.line, "unknown key '" + e.key + "' in [state]");
    apply_parameter(spec, e.key, parse_number(e.value, e.line));
  }

  for (const auto& e : section("sweep")) {
    SweepAxis axis = parse_axis(e);
    auto it = std::find_if(spec.sweep.begin(), spec.sweep.end(),
                           [&](const SweepAxis& a) { return a.name == axis.name; });
    if (it != spec.sweep.end()) *it = std::move(axis);
    else spec.sweep.push_back(std::move(axis));
  }
  if (spec.outputs.empty() && spec.preset == "custom") {
    spec.outputs = {"params", "delta_e", "moments_us", "np_us"};
  }
  resolve(spec);
  validate_spec(spec);
  return spec;
}

ExperimentSpec parse_csv_metadata(std::string_view csv_text) {
  std::string block;
  std::istringstream in{std::string(csv_text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0) block += line.substr(2) + "\n";
    else if (line == "#") block += "\n";
    else break;
  }
  if (block.empty()) throw Error(ErrorCode::ConfigError, "no metadata block found");
  return parse_config(block);
}

std::string serialize(const ExperimentSpec& spec) {
  std::ostringstream os;
  const ModelConfig& m = spec.model;
  os << "[experiment]\n";
  os << "preset = " << spec.preset << "\n";
  if (!spec.description.empty()) os << "description = " << spec.description << "\n";
  os << "collisions = " << spec.collisions << "\n";
  os << "outputs = " << output_list(spec.outputs) << "\n";
  os << "[model]\n";
  os << "mode = " << (m.mode == Mode::Exact ? "exact" : "weak") << "\n";
  os << "omega_a = " << fmt17(m.omega_a) << "\n";
  if (spec.delta) os << "delta = " << fmt17(*spec.delta) << "\n";
  else os << "omega_s = " << fmt17(m.omega_s) << "\n";
  os << "g = " << fmt17(m.g) << "\n";
  os << "tau = " << fmt17(m.tau) << "\n";
  os << "beta = " << fmt17(m.beta) << "\n";
  os << "hbar = " << fmt17(m.hbar) << "\n";
  if (spec.lambda_fraction) os << "lambda_fraction = " << fmt17(*spec.lambda_fraction) << "\n";
  else if (m.mode == Mode::Exact) os << "lambda = " << fmt17(m.lambda) << "\n";
  else os << "lambda_tilde = " << fmt17(m.lambda_tilde) << "\n";
  os << "[state]\n";
  os << "rho11 = " << fmt17(spec.state.rho11) << "\n";
  if (spec.r_fraction) os << "r_fraction = " << fmt17(*spec.r_fraction) << "\n";
  else os << "r = " << fmt17(spec.state.r) << "\n";
  os << "phi_c = " << fmt17(spec.state.phi_c) << "\n";
  os << "[sweep]\n";
  for (const auto& a : spec.sweep) {
    os << a.name << " = ";
    if (a.kind == SweepAxis::Kind::Linspace) {
      os << "linspace(" << fmt17(a.start) << ", " << fmt17(a.stop) << ", " << a.count
         << (a.endpoint ? "" : ", open") << ")";
    } else {
      for (std::size_t i = 0; i < a.values.size(); ++i) os << (i ? ", " : "") << fmt17(a.values[i]);
    }
    os << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------- presets

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"fig1", "fig2", "fig3a", "fig3b", "fig4",
                                              "fig5", "fig6", "fig7", "custom"};
  return names;
}

namespace {

constexpr std::size_t kGrid = 512;
constexpr double kPi = std::numbers::pi;

ExperimentSpec caption_base() {
  ExperimentSpec s;
  s.model.omega_a = 1.0;
  s.model.g = 1.0;
  s.model.hbar = 1.0;
  s.model.beta = 1.0;
  s.state.rho11 = 0.25;
  s.r_fraction = 1.0;
  s.lambda_fraction = 1.0;
  return s;
}

std::vector<double> fig1_taus() {
  return {kPi / 36, kPi / 18, kPi / 12, kPi / 9, 5 * kPi / 36, kPi / 6};
}

}  // namespace

ExperimentSpec make_preset(std::string_view name) {
  ExperimentSpec s = caption_base();
  s.preset = std::string(name);
  const SweepAxis lambda_axis = SweepAxis::list("lambda_fraction", {-1.0, -0.5, 0.0, 0.5, 1.0});
  const SweepAxis tau_axis = SweepAxis::linspace("tau", kPi / kGrid, kPi, kGrid);
  if (name == "fig1" || name == "fig2") {
    s.description = name == "fig1" ? "non-positivity of the u_S distribution vs coherence phase, Delta = 3"
                                   : "non-positivity of the u_S+A distribution vs coherence phase, Delta = 3";
    s.delta = 3.0;
    s.sweep = {SweepAxis::list("beta", {5.0, 1.0, 0.2}), SweepAxis::list("tau", fig1_taus()),
               SweepAxis::linspace("phi_c", 0.0, 2 * kPi, kGrid, false)};
    s.outputs = {"params", name == "fig1" ? "np_us" : "np_usa"};
  } else if (name == "fig3a") {
    s.description = "mean system energy change vs detuning with envelopes, tau = pi/6";
    s.model.tau = kPi / 6;
    s.state.phi_c = kPi / 4;
    s.sweep = {lambda_axis, SweepAxis::linspace("delta", -20.0, 20.0, kGrid)};
    s.outputs = {"params", "delta_e", "analytic_delta_e"};
  } else if (name == "fig3b") {
    s.description = "mean non-energy-preserving work vs collision time, Delta = 20";
    s.delta = 20.0;
    s.state.phi_c = kPi / 4;
    s.sweep = {lambda_axis, tau_axis};
    s.outputs = {"params", "delta_e", "analytic_delta_e"};
  } else if (name == "fig4") {
    s.description = "variances of u_S and u_S+A vs detuning and coherence, tau = pi/6";
    s.model.tau = kPi / 6;
    s.state.phi_c = kPi / 4;
    s.sweep = {SweepAxis::linspace("delta", 0.0, 20.0, kGrid), lambda_axis};
    s.outputs = {"params", "moments_us", "moments_usa", "variance_ratio"};
  } else if (name == "fig5" || name == "fig6") {
    s.description = name == "fig5" ? "coherent-work quasiprobabilities vs collision time at resonance"
                                   : "coherent work from the operator approach vs collision time";
    s.delta = 0.0;
    s.model.beta = 0.1;
    s.state.phi_c = kPi / 3;
    s.sweep = {tau_axis};
    s.outputs = name == "fig5" ? std::vector<std::string>{"params", "kdq_w", "moments_w", "analytic_kdq"}
                               : std::vector<std::string>{"params", "operator", "moments_w"};
  } else if (name == "fig7") {
    s.description = "incoherent heat and coherent work over 100 resonant collisions, SI units";
    s.model.hbar = 1.054571817e-34;
    s.model.omega_a = 5.7e9;
    s.delta = 0.0;
    s.model.g = 0.4 * 5.7e9;
    s.model.tau = 135e-12;
    s.model.beta = 0.4e-9 / s.model.hbar;
    s.state.phi_c = kPi / 4;
    s.lambda_fraction = 0.5;
    s.collisions = 100;
    s.outputs = {"params", "state", "delta_e", "thermo", "moments_us", "moments_ua", "moments_usa"};
  } else if (name == "custom") {
    s = ExperimentSpec{};
    s.outputs = {"params", "delta_e", "moments_us", "np_us"};
  } else {
    throw Error(ErrorCode::ConfigError, "unknown preset '" + std::string(name) + "'");
  }
  resolve(s);
  return s;
}

// ---------------------------------------------------------------- evaluation

namespace {

struct RowContext {
  const ExperimentSpec& point;  // resolved grid point
  const CollisionModel& model;
  const ComplexMatrix& rho;
  bool resonant;
  std::set<std::string>* warnings;
};

using Writer = std::function<void(const RowContext&, std::vector<double>&)>;

struct Group {
  std::vector<std::string> columns;
  bool resonant_only = false;
  Writer write;
};

void push_complex(std::vector<double>& row, std::complex<double> z) {
  row.push_back(z.real());
  row.push_back(z.imag());
}

std::string level_name(const TransitionLabel& l, bool initial) {
  const int s = initial ? l.s_in : l.s_fin;
  const int a = initial ? l.a_in : l.a_fin;
  if (s >= 0 && a >= 0) return std::to_string(s) + std::to_string(a);
  return std::to_string(s >= 0 ? s : a);
}

KdqDistribution distribution(const RowContext& c, Quantity q) {
  auto d = kdq_distribution(q, c.rho, c.model);
  for (const auto& w : d.warnings) c.warnings->insert(w);
  return d;
}

Group make_group(const std::string& name, const std::set<std::string>& swept) {
  Group g;
  if (name == "params") {
    const std::vector<std::string> all{"omega_s", "omega_a", "g", "tau", "beta", "hbar", "lambda_eff",
                                       "rho11", "r", "phi_c"};
    std::vector<bool> keep;
    for (const auto& c : all) {
      keep.push_back(!swept.count(c));
      if (keep.back()) g.columns.push_back(c);
    }
    g.write = [keep](const RowContext& c, std::vector<double>& row) {
      const ModelConfig& m = c.point.model;
      const SystemStateParams& s = c.point.state;
      const double v[] = {m.omega_s, m.omega_a, m.g, m.tau, m.beta, m.hbar, m.lambda_eff(), s.rho11, s.r, s.phi_c};
      for (std::size_t i = 0; i < keep.size(); ++i) {
        if (keep[i]) row.push_back(v[i]);
      }
    };
  } else if (name == "state") {
    g.columns = {"state_rho11", "state_rho12_re", "state_rho12_im"};
    g.write = [](const RowContext& c, std::vector<double>& row) {
      row.push_back(c.rho(0, 0).real());
      push_complex(row, c.rho(0, 1));
    };
  } else if (name == "delta_e") {
    g.columns = {"delta_e_s", "delta_e_a", "delta_e_sa"};
    g.write = [](const RowContext& c, std::vector<double>& row) {
      row.push_back(average_via_trace(Quantity::US, c.rho, c.model).real());
      row.push_back(average_via_trace(Quantity::UA, c.rho, c.model).real());
      row.push_back(average_via_trace(Quantity::USA, c.rho, c.model).real());
    };
  } else if (name == "analytic_delta_e") {
    g.columns = {"an_delta_e_s", "an_delta_e_s_lower", "an_delta_e_s_upper", "an_delta_e_sa", "an_delta_e_sa_limit"};
    g.write = [](const RowContext& c, std::vector<double>& row) {
      const auto p = AnalyticParams::from(c.point.model, c.point.state);
      const auto [lo, hi] = delta_e_s_envelopes(p);
      row.insert(row.end(), {delta_e_s(p), lo, hi, delta_e_sa(p), delta_e_sa_limit(p)});
    };
  } else if (name == "analytic_kdq") {
    g.resonant_only = true;
    for (const char* q : {"us", "q", "w"}) {
      for (const char* idx : {"0_0", "0_1", "1_0", "1_1"}) {
        g.columns.push_back(std::string("an_kdq_") + q + "_" + idx + "_re");
        g.columns.push_back(std::string("an_kdq_") + q + "_" + idx + "_im");
      }
    }
    g.write = [](const RowContext& c, std::vector<double>& row) {
      const auto p = AnalyticParams::from(c.point.model, c.point.state);
      for (const auto& quad : {resonant_kdq_us(p), resonant_kdq_q(p), resonant_kdq_w(p)}) {
        for (const auto& z : quad) push_complex(row, z);
      }
    };
  } else if (name == "analytic_stats") {
    g.resonant_only = true;
    g.columns = {"an_w_mean", "an_w_var_re", "an_w_var_im", "an_q_mean", "an_q_var", "an_n_re",
                 "an_n_im", "an_us_mean", "an_us_var_re", "an_us_var_im"};
    g.write = [](const RowContext& c, std::vector<double>& row) {
      const auto p = AnalyticParams::from(c.point.model, c.point.state);
      const auto wq = resonant_w_q_stats(p);
      const auto np = resonant_nonpositivity(p);
      const auto es = resonant_energy_stats(p);
      row.push_back(wq.w_mean);
      push_complex(row, wq.w_variance);
      row.insert(row.end(), {wq.q_mean, wq.q_variance, np.n_re, np.n_im, es.delta_e_s});
      push_complex(row, es.variance_u_s);
    };
  } else if (name == "thermo") {
    g.resonant_only = true;
    g.columns = {"q_s", "q_a", "w_s", "w_a"};
    g.write = [](const RowContext& c, std::vector<double>& row) {
      const double qs = average_via_trace(Quantity::QS, c.rho, c.model).real();
      const double ws = average_via_trace(Quantity::WS, c.rho, c.model).real();
      const double q = moments(distribution(c, Quantity::Q)).mean.real();
      const double w = moments(distribution(c, Quantity::W)).mean.real();
      row.insert(row.end(), {qs, -q, ws, -w});
    };
  } else if (name == "operator") {
    g.resonant_only = true;
    g.columns = {"oa_c_hi", "oa_p_hi", "oa_c_lo", "oa_p_lo", "oa_mean", "oa_second", "oa_o1_norm"};
    g.write = [](const RowContext& c, std::vector<double>& row) {
      const auto op = operator_approach(c.rho, c.point.model);
      const double c_lo = op.values.back();
      const double p_lo = op.values.size() > 1 ? op.probs.back() : 0.0;
      row.insert(row.end(), {op.values.front(), op.probs.front(), c_lo, p_lo, op.moment(1), op.moment(2), op.o1_norm});
    };
  } else if (name == "variance_ratio") {
    g.columns = {"us_var_ratio", "usa_var_ratio"};
    g.write = [](const RowContext& c, std::vector<double>& row) {
      ModelConfig zero = c.point.model;
      zero.lambda = 0.0;
      zero.lambda_tilde = 0.0;
      const CollisionModel m0(zero);
      for (Quantity q : {Quantity::US, Quantity::USA}) {
        const double v = moments(kdq_distribution(q, c.rho, c.model)).variance.real();
        const double v0 = moments(kdq_distribution(q, c.rho, m0)).variance.real();
        row.push_back(v / v0);
      }
    };
  } else if (name == "steady_state") {
    g.columns = {"ss_rho11", "ss_rho12_re", "ss_rho12_im", "ss_iterations", "ss_residual", "ss_converged"};
    g.write = [](const RowContext& c, std::vector<double>& row) {
      const auto res = find_steady_state(c.point.model, c.rho);
      row.push_back(res.state(0, 0).real());
      push_complex(row, res.state(0, 1));
      row.insert(row.end(), {static_cast<double>(res.iterations), res.residual, res.converged ? 1.0 : 0.0});
    };
  } else {
    const auto us = name.find('_');
    const std::string kind = name.substr(0, us);
    const std::string qname = name.substr(us + 1);
    const Quantity q = *quantity_from_string(qname);
    g.resonant_only = resonant_only_quantity(qname);
    if (kind == "kdq") {
      // Enumerate labels once from a representative distribution.
      ModelConfig probe;
      const auto d = kdq_distribution(q, ComplexMatrix::diagonal({1.0, 0.0}), CollisionModel(probe));
      for (const auto& e : d.entries) {
        const std::string base = name + "_" + level_name(e.label, true) + "_" + level_name(e.label, false);
        g.columns.push_back(base + "_value");
        g.columns.push_back(base + "_re");
        g.columns.push_back(base + "_im");
      }
      g.write = [q](const RowContext& c, std::vector<double>& row) {
        for (const auto& e : distribution(c, q).entries) {
          row.push_back(e.value);
          push_complex(row, e.quasiprob);
        }
      };
    } else if (kind == "moments") {
      for (const char* part : {"mean", "second", "var"}) {
        g.columns.push_back(qname + "_" + part + "_re");
        g.columns.push_back(qname + "_" + part + "_im");
      }
      g.write = [q](const RowContext& c, std::vector<double>& row) {
        const auto m = moments(distribution(c, q));
        push_complex(row, m.mean);
        push_complex(row, m.second_moment);
        push_complex(row, m.variance);
      };
    } else {
      g.columns = {name + "_q", name + "_re", name + "_im"};
      g.write = [q](const RowContext& c, std::vector<double>& row) {
        const auto np = nonpositivity(distribution(c, q));
        row.insert(row.end(), {np.n_q, np.n_re, np.n_im});
      };
    }
  }
  return g;
}

struct PointResult {
  std::vector<std::vector<double>> rows;
  std::vector<std::string> status;
  std::set<std::string> warnings;
};

std::vector<std::size_t> unravel(std::size_t index, const std::vector<SweepAxis>& axes) {
  std::vector<std::size_t> idx(axes.size());
  for (std::size_t k = axes.size(); k-- > 0;) {
    const std::size_t n = axes[k].values.size();
    idx[k] = index % n;
    index /= n;
  }
  return idx;
}

PointResult evaluate_point(const ExperimentSpec& spec, const std::vector<Group>& groups, std::size_t point_index,
                           std::size_t data_width) {
  PointResult out;
  ExperimentSpec point = spec;
  const auto idx = unravel(point_index, spec.sweep);
  std::vector<double> prefix;
  for (std::size_t k = 0; k < spec.sweep.size(); ++k) {
    const double v = spec.sweep[k].values[idx[k]];
    apply_parameter(point, spec.sweep[k].name, v);
    prefix.push_back(v);
  }

  auto flagged = [&](const std::string& status) {
    for (int n = 1; n <= spec.collisions; ++n) {
      std::vector<double> row = prefix;
      if (spec.collisions > 1) row.push_back(n);
      row.resize(row.size() + data_width, kNaN);
      out.rows.push_back(std::move(row));
      out.status.push_back(status);
    }
  };

  std::optional<CollisionModel> model;
  ComplexMatrix rho0;
  try {
    resolve(point);
    model.emplace(point.model);
  } catch (const Error& e) {
    flagged(e.code() == ErrorCode::BoundViolation ? "lambda_bound" : "invalid");
    return out;
  }
  try {
    rho0 = build_system_state(point.state);
  } catch (const Error& e) {
    flagged(e.code() == ErrorCode::BoundViolation ? "state_bound" : "invalid");
    return out;
  }

  const bool resonant = is_resonant(point.model);
  std::vector<ComplexMatrix> states{rho0};
  if (spec.collisions > 1) states = evolve(rho0, point.model, spec.collisions - 1, false).states;

  for (int n = 1; n <= spec.collisions; ++n) {
    std::vector<double> row = prefix;
    if (spec.collisions > 1) row.push_back(n);
    const RowContext ctx{point, *model, states[static_cast<std::size_t>(n - 1)], resonant, &out.warnings};
    bool skipped = false;
    for (const auto& g : groups) {
      if (g.resonant_only && !resonant) {
        row.resize(row.size() + g.columns.size(), kNaN);
        skipped = true;
        continue;
      }
      g.write(ctx, row);
    }
    out.rows.push_back(std::move(row));
    out.status.push_back(skipped ? "nonresonant" : "ok");
  }
  return out;
}

}  // namespace

ResultTable run_experiment(const ExperimentSpec& spec, unsigned threads) {
  validate_spec(spec);
  std::vector<Group> groups;
  ResultTable table;
  for (const auto& a : spec.sweep) table.header.push_back(a.name);
  if (spec.collisions > 1) table.header.push_back("collision");
  std::size_t width = 0;
  std::set<std::string> swept;
  for (const auto& a : spec.sweep) swept.insert(a.name);
  for (const auto& name : spec.outputs) {
    groups.push_back(make_group(name, swept));
    width += groups.back().columns.size();
    table.header.insert(table.header.end(), groups.back().columns.begin(), groups.back().columns.end());
  }
  table.header.push_back("status");

  std::size_t points = 1;
  for (const auto& a : spec.sweep) points *= a.values.size();
  std::vector<PointResult> results(points);

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, points));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= points) return;
      try {
        results[i] = evaluate_point(spec, groups, i, width);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(points);
        return;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::set<std::string> warnings;
  for (auto& r : results) {
    for (auto& row : r.rows) table.rows.push_back(std::move(row));
    for (auto& s : r.status) table.status.push_back(std::move(s));
    warnings.insert(r.warnings.begin(), r.warnings.end());
  }
  table.warnings.assign(warnings.begin(), warnings.end());
  return table;
}

std::string to_csv(const ExperimentSpec& spec, const ResultTable& table) {
  std::string out;
  std::istringstream meta(serialize(spec));
  std::string line;
  while (std::getline(meta, line)) out += "# " + line + "\n";
  for (std::size_t i = 0; i < table.header.size(); ++i) out += (i ? "," : "") + table.header[i];
  out += "\n";
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (double v : table.rows[r]) {
      out += std::isnan(v) ? "nan" : fmt17(v);
      out += ",";
    }
    out += table.status[r];
    out += "\n";
  }
  return out;
}

RunSummary run_to_file(const ExperimentSpec& spec, const std::string& path, unsigned threads) {
  RunSummary summary;
  summary.csv_path = path.empty() ? spec.out_path : path;
  if (summary.csv_path.empty()) summary.csv_path = spec.preset + ".csv";
  summary.meta_path = summary.csv_path + ".meta.json";

  const auto t0 = std::chrono::steady_clock::now();
  const ResultTable table = run_experiment(spec, threads);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const std::string csv = to_csv(spec, table);

  std::ofstream f(summary.csv_path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot open '" + summary.csv_path + "' for writing");
  f << csv;
  f.close();
  if (!f) throw Error(ErrorCode::IoError, "failed writing '" + summary.csv_path + "'");

  summary.rows = table.rows.size();
  summary.flagged = static_cast<std::size_t>(
      std::count_if(table.status.begin(), table.status.end(), [](const std::string& s) { return s != "ok"; }));

  nlohmann::json meta;
  meta["library_version"] = kVersion;
  meta["preset"] = spec.preset;
  meta["csv"] = summary.csv_path;
  meta["rows"] = summary.rows;
  meta["flagged_rows"] = summary.flagged;
  meta["columns"] = table.header.size();
  meta["warnings"] = table.warnings;
  meta["grid_points"] = spec.row_count() / static_cast<std::size_t>(spec.collisions);
  meta["elapsed_seconds"] = seconds;
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  meta["created_utc"] = stamp;
  {
    ExperimentSpec base = spec;
    resolve(base);
    const double bhw = base.model.beta * base.model.hbar * base.model.omega_a;
    meta["beta_hbar_omega_a"] = bhw;
    meta["lambda_max"] = lambda_max(base.model);
  }
  std::ofstream mf(summary.meta_path, std::ios::binary);
  if (!mf) throw Error(ErrorCode::IoError, "cannot open '" + summary.meta_path + "' for writing");
  mf << meta.dump(2) << "\n";
  return summary;
}

}  // namespace kdqcm
