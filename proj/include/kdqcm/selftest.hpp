#pragma once

#include <functional>
#include <string>
#include <vector>

namespace kdqcm {

struct SelftestCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Built-in invariant checks on a fixed parameter set. The callback, when
/// given, receives each check as soon as it finishes.
std::vector<SelftestCheck> run_selftest(const std::function<void(const SelftestCheck&)>& on_check = {});

}  // namespace kdqcm
