#pragma once

#include <stdexcept>
#include <string>

namespace dpgrid {

/// Base class for all toolkit errors. Catch this to map failures to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration/document problems (exit code 2 at the CLI).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class MissingChannel : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Numerical failures (exit code 3 at the CLI).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class PowerFlowDiverged : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DeviceInitInfeasible : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class LowVoltage : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class VoltageCollapse : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularTopology : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class StepFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NotAtEquilibrium : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class EigenFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IllConditioned : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class UnstablePlant : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class UnstableClosedLoop : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class AssumptionViolated : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class GammaInfeasible : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class AlgebraicLoop : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace dpgrid
