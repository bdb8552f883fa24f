#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hyperadapt {

struct GradSuiteItem {
  std::string name;
  double max_rel_err = 0.0;
  bool pass = false;
};

struct GradSuiteResult {
  std::vector<GradSuiteItem> items;
  bool all_pass = true;
};

// Finite-difference verification of the composite loss gradients of every
// non-MoE variant (plus the learned signature generator) on random small
// instances (d <= 8, C <= 3). Each instance checks d(loss)/d(theta) for all
// trainable parameters against central differences.
GradSuiteResult run_gradient_suite(int instances_per_variant = 4, double tolerance = 1e-4,
                                   uint64_t seed = 99, bool verbose = false);

}  // namespace hyperadapt
