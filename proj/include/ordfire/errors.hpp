#pragma once

#include <stdexcept>

namespace ordfire {

// All parameter mass pushed past the truncation point.
struct DegenerateDistribution : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Zero-variance or otherwise unusable sample for fitting.
struct DegenerateSample : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Too few usable observations for the requested operation.
struct InsufficientData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ordfire
