// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the switchode authors
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "switchode/lotka.hpp"

namespace switchode {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string details;
  double seconds = 0.0;
};

struct ReproduceConfig {
  std::uint64_t seed = 0x5EEDC0DE0001ULL;
  std::string cli_path;  // used by the bit-exact reproducibility check
};

// The Fainshil-Margaliot-Chigansky 3x3 pair.
Eigen::MatrixXd fmc_a0();
Eigen::MatrixXd fmc_a1();

// Two-state logistic benchmark (resident + invader observable), rates p = q = 1.
LVCoefficients benchmark_lv();

CriterionResult run_criterion(int id, const ReproduceConfig& cfg);

// suite "fast": criteria {1, 2, 3, 8}; suite "full": all of 1..8.
std::vector<CriterionResult> run_suite(const std::string& suite,
                                       const ReproduceConfig& cfg);
std::vector<int> suite_criteria(const std::string& suite);

}  // namespace switchode
