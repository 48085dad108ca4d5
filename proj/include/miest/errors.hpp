#pragma once

#include <stdexcept>
#include <string>

namespace miest {

// Base class for all library errors.
struct MiestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- input / data problems -------------------------------------------------

struct DataError : MiestError {
  using MiestError::MiestError;
};

// Fewer than two samples, or inconsistent part sizes.
struct DegenerateDataset : DataError {
  using DataError::DataError;
};

// An operation needed a continuous Y block and the dataset has none.
struct MissingContinuousY : DataError {
  using DataError::DataError;
};

// The general mixed estimator needs at least one discrete part next to a
// continuous one.
struct MissingParts : DataError {
  using DataError::DataError;
};

// A class (or joint discrete cell) has fewer than two members, so a
// leave-one-out conditional density cannot be formed.
struct SingletonClass : DataError {
  using DataError::DataError;
};

struct TooFewSamples : DataError {
  using DataError::DataError;
};

// Point outside the sampling box of a truncated mixture.
struct OutOfBox : DataError {
  using DataError::DataError;
};

// Closed-form oracle only exists up to a dimension cap.
struct UnsupportedDimension : DataError {
  using DataError::DataError;
};

// Bandwidth selection rules produced an empty admissible range.
struct NoFeasibleRange : DataError {
  using DataError::DataError;
};

struct IoError : DataError {
  using DataError::DataError;
};

// Slope fits need positive sizes and positive MSE values.
struct NonPositiveInput : DataError {
  using DataError::DataError;
};

// --- numerical problems ----------------------------------------------------

struct NumericalError : MiestError {
  using MiestError::MiestError;
};

// A density ratio argument was <= 0 while floor clamping is disabled.
struct NonPositiveArgument : NumericalError {
  using NumericalError::NumericalError;
};

// Rejection sampler made no progress (acceptance probability ~ 0).
struct RejectionStall : NumericalError {
  using NumericalError::NumericalError;
};

// --- weight solver ----------------------------------------------------------

struct SolverError : MiestError {
  using MiestError::MiestError;
};

struct InfeasibleProgram : SolverError {
  using SolverError::SolverError;
};

struct ToleranceNotMet : SolverError {
  using SolverError::SolverError;
};

}  // namespace miest
