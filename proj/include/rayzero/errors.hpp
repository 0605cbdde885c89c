#pragma once
#include <stdexcept>
#include <string>

namespace rayzero {

//! Bad input data: parse failures, invariant violations, missing files.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string &msg) : std::runtime_error(msg) {}
};

//! Dataset/problem file could not be parsed; message carries the line number.
class ParseError : public ValidationError {
public:
  ParseError(const std::string &path, int line, const std::string &msg)
      : ValidationError(path + ":" + std::to_string(line) + ": " + msg) {}
};

//! Evaluation requested closer to a pole than the guard band allows.
class GuardBandError : public ValidationError {
public:
  GuardBandError(const std::string &msg, double nearest_pole_cm1)
      : ValidationError(msg), nearest_pole(nearest_pole_cm1) {}
  double nearest_pole;
};

//! Numerical failure: non-convergence, missing guaranteed sign change, ...
class SolverError : public std::runtime_error {
public:
  explicit SolverError(const std::string &msg) : std::runtime_error(msg) {}
};

//! Fit problem is rank deficient (an unknown is unconstrained).
class RankError : public SolverError {
public:
  explicit RankError(const std::string &msg) : SolverError(msg) {}
};

}  // namespace rayzero
