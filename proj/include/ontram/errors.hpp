#pragma once

#include <stdexcept>
#include <string>

namespace ontram {

// Error taxonomy mirrors the CLI exit codes: config 2, data 3, numeric 4.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration or option values.
struct config_error : error {
  using error::error;
};

// Malformed input data, dimension/alignment mismatches, range violations.
struct data_error : error {
  using error::error;
};

// Numerical failure: non-finite values, degenerate fits, undefined statistics.
struct numeric_error : error {
  using error::error;
};

// A statistic that is undefined on the given sample (e.g. single-class AUC).
struct undefined_statistic : numeric_error {
  using numeric_error::numeric_error;
};

}  // namespace ontram
