#pragma once

#include <stdexcept>
#include <string>

namespace forecastnet {

// Shape or length disagreement between operands.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Bad argument value (empty list, non-positive rate, unknown tag, ...).
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Value outside the mathematical domain of a function (sigma <= 0, ...).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Invalid model specification.
struct SpecError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Checkpoint / CSV / JSON container could not be parsed.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Series ingestion failure (missing value, unparsable row).
struct IngestionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scaling a constant segment.
struct ScalingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Undefined metric (zero MASE denominator).
struct MetricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every learning rate in a grid search diverged.
struct SearchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace forecastnet
