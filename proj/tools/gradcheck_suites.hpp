#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "liddense/gradcheck.hpp"

namespace liddense::cli {

struct SuiteResult {
  std::string name;
  GradcheckReport report;
};

/// Names of all finite-difference suites, in run order. "network" is the
/// composed model on an 8x8 scene with every loss term active.
const std::vector<std::string>& suite_names();

/// Names accepted by fault injection (ops with a corruptible backward rule).
const std::vector<std::string>& fault_names();

SuiteResult run_suite(const std::string& name, std::uint64_t seed, double step, double tol);

}  // namespace liddense::cli
