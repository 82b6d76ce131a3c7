#pragma once

#include <stdexcept>
#include <string>

namespace heatlab {

enum class ErrorKind {
  Domain,
  Argument,
  Unsupported,
  Numerical,
  Precision,
  CutLocus,
  DegeneratePair,
  StepSize,
  Statistics,
  Config,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

template <ErrorKind K>
class KindedError : public Error {
 public:
  explicit KindedError(const std::string& what) : Error(K, what) {}
};

using DomainError = KindedError<ErrorKind::Domain>;
using ArgumentError = KindedError<ErrorKind::Argument>;
using UnsupportedConfiguration = KindedError<ErrorKind::Unsupported>;
using NumericalFailure = KindedError<ErrorKind::Numerical>;
using PrecisionError = KindedError<ErrorKind::Precision>;
using CutLocusError = KindedError<ErrorKind::CutLocus>;
using DegeneratePairError = KindedError<ErrorKind::DegeneratePair>;
using StepSizeError = KindedError<ErrorKind::StepSize>;
using StatisticsError = KindedError<ErrorKind::Statistics>;
using ConfigError = KindedError<ErrorKind::Config>;

}  // namespace heatlab
