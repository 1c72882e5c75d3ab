#pragma once

#include <stdexcept>
#include <string>

namespace floquet {

/// Base of every error raised by the library. Domain errors map to CLI exit
/// code 1; UsageError maps to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class IntegrationFailure : public Error {
 public:
  IntegrationFailure(const std::string& what, double time);
  double time() const noexcept { return time_; }

 private:
  double time_;
};

class OrbitNotFound : public Error {
 public:
  using Error::Error;
};

class NoReturn : public Error {
 public:
  using Error::Error;
};

class UnsupportedSpectrum : public Error {
 public:
  using Error::Error;
};

class NumericRange : public Error {
 public:
  using Error::Error;
};

class Instability : public Error {
 public:
  using Error::Error;
};

class DegenerateCoefficient : public Error {
 public:
  using Error::Error;
};

class SectionPlacement : public Error {
 public:
  using Error::Error;
};

class TrajectoryEscape : public Error {
 public:
  TrajectoryEscape(const std::string& what, double time);
  double time() const noexcept { return time_; }

 private:
  double time_;
};

class CrossingSequence : public Error {
 public:
  CrossingSequence(const std::string& what, long revolution);
  long revolution() const noexcept { return revolution_; }

 private:
  long revolution_;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class DegenerateData : public Error {
 public:
  using Error::Error;
};

class ExperimentIntegrity : public Error {
 public:
  using Error::Error;
};

}  // namespace floquet
