#include "hyperadapt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "hyperadapt/errors.hpp"

namespace hyperadapt {

std::vector<size_t> Rng::sample_indices(size_t n, size_t k) {
  if (k > n) throw ConfigError("sample_indices: k > n");
  std::unordered_set<size_t> chosen;
  chosen.reserve(k);
  for (size_t j = n - k; j < n; ++j) {
    const size_t t = static_cast<size_t>(below(j + 1));
    if (chosen.count(t)) {
      chosen.insert(j);
    } else {
      chosen.insert(t);
    }
  }
  std::vector<size_t> out(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end());
  return out;
}

Eigen::VectorXd Rng::simplex(int n) {
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    // -log(1-u) is Exp(1); u < 1 so the log argument is positive.
    w[i] = -std::log(1.0 - next_double());
  }
  const double total = w.sum();
  if (total <= 0.0) return Eigen::VectorXd::Constant(n, 1.0 / n);
  return w / total;
}

}  // namespace hyperadapt
