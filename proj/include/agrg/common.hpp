#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace agrg {

// Error taxonomy. The CLI maps these onto process exit codes:
// config 2, solver 3, capacity 4, integration 5.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct solver_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct capacity_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct integration_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite integrand value at a quadrature node.
struct evaluation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// detect_k found no qualifying cumulant order; carries the scanned values.
struct detect_k_error : solver_error {
  std::vector<double> cumulants;  // cumulants[j] = kappa_j, index 0 unused
  explicit detect_k_error(const std::string& msg, std::vector<double> ks)
      : solver_error(msg), cumulants(std::move(ks)) {}
};

}  // namespace agrg
