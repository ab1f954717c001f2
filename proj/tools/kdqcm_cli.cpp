#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "kdqcm/kdqcm.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitNumeric = 2;

int exit_code(kdq_status st) {
  if (st == KDQ_OK) return kExitOk;
  if (st == KDQ_ERR_NUMERIC) return kExitNumeric;
  return kExitInvalid;
}

int report(kdq_status st, const std::string& context) {
  if (st != KDQ_OK) std::cerr << "error: " << context << ": " << kdq_last_error() << "\n";
  return exit_code(st);
}

bool read_file(const std::string& path, std::string& out) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return false;
  std::ostringstream ss;
  ss << f.rdbuf();
  out = ss.str();
  return true;
}

int load(const std::string& path, kdq_experiment** exp) {
  std::string text;
  if (!read_file(path, text)) {
    std::cerr << "error: cannot read '" << path << "'\n";
    return kExitInvalid;
  }
  return report(kdq_experiment_parse(text.c_str(), exp), path);
}

int execute(kdq_experiment* exp, const std::string& out, unsigned threads) {
  if (!out.empty()) {
    const int rc = report(kdq_experiment_set_output(exp, out.c_str()), "output path");
    if (rc != kExitOk) return rc;
  }
  size_t rows = 0, flagged = 0;
  char path[4096] = {0};
  const kdq_status st = kdq_experiment_run(exp, threads, &rows, &flagged, path, sizeof(path));
  if (st != KDQ_OK) return report(st, "run");
  std::cout << "wrote " << rows << " rows to " << path;
  if (flagged > 0) std::cout << " (" << flagged << " flagged)";
  std::cout << "\n";
  return kExitOk;
}

void print_check(const char* name, int passed, const char* detail, void*) {
  std::printf("%s  %s: %s\n", passed ? "PASS" : "FAIL", name, detail);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kirkwood-Dirac quasiprobabilities for a qubit collision model"};
  app.set_version_flag("--version", std::string(kdq_version()));
  app.require_subcommand(1);

  unsigned threads = 0;
  app.add_option("-j,--threads", threads, "Worker threads (0 = all cores)");

  std::string config_path, out_path, preset_name;
  bool print_only = false;

  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", config_path, "Config file")->required();
  run->add_option("--out", out_path, "CSV output path");

  auto* preset = app.add_subcommand("preset", "Run a named preset");
  preset->add_option("name", preset_name, "Preset name")->required();
  preset->add_option("--out", out_path, "CSV output path");
  preset->add_flag("--print", print_only, "Print the preset config instead of running it");

  auto* validate = app.add_subcommand("validate", "Check a config file without running it");
  validate->add_option("config", config_path, "Config file")->required();

  auto* selftest = app.add_subcommand("selftest", "Run the built-in invariant checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInvalid;
  }

  kdq_experiment* exp = nullptr;
  int rc = kExitOk;
  if (*run) {
    rc = load(config_path, &exp);
    if (rc == kExitOk) rc = execute(exp, out_path, threads);
  } else if (*preset) {
    rc = report(kdq_experiment_preset(preset_name.c_str(), &exp), "preset");
    if (rc == kExitInvalid) std::cerr << "available presets: " << kdq_preset_names() << "\n";
    if (rc == kExitOk) {
      if (print_only) std::cout << kdq_experiment_describe(exp);
      else rc = execute(exp, out_path, threads);
    }
  } else if (*validate) {
    rc = load(config_path, &exp);
    if (rc == kExitOk) {
      std::cout << "ok: " << kdq_experiment_rows(exp) << " rows\n" << kdq_experiment_describe(exp);
    }
  } else if (*selftest) {
    int failed = 0;
    const kdq_status st = kdq_selftest(print_check, nullptr, &failed);
    rc = report(st, "selftest");
  }
  kdq_experiment_destroy(exp);
  return rc;
}
