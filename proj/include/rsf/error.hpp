#pragma once

#include <stdexcept>
#include <string>

namespace rsf {

/// Base class of every error raised by the library. Each subclass maps to a
/// distinct process exit code in the command-line tool.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyRiskTable : public Error {
 public:
  using Error::Error;
};

class EmptyNode : public Error {
 public:
  using Error::Error;
};

/// A candidate partition carries no usable information (empty group, zero
/// variance, no comparable pairs). Callers skip the candidate.
class DegenerateSplit : public Error {
 public:
  using Error::Error;
};

class NoValidSplit : public Error {
 public:
  using Error::Error;
};

class TreeDegenerate : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DegenerateEvaluation : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

class LoadError : public Error {
 public:
  using Error::Error;
};

/// Malformed or incompatible model file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// An output file or directory could not be written.
class OutputError : public Error {
 public:
  using Error::Error;
};

}  // namespace rsf
