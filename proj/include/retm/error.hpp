#pragma once

#include <stdexcept>
#include <string>

namespace retm {

// Error hierarchy shared by all modules. The CLI maps these to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class UnsupportedRate : public Error {
 public:
  using Error::Error;
};

class InfeasibleConfig : public Error {
 public:
  using Error::Error;
};

class DegenerateInput : public Error {
 public:
  using Error::Error;
};

class DegenerateReference : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Configuration validation failure; the message carries the JSON field path.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  NumericalFailure(const std::string& what, long bin = -1)
      : Error(bin >= 0 ? what + " (bin " + std::to_string(bin) + ")" : what), bin_(bin) {}

  long bin() const noexcept { return bin_; }

 private:
  long bin_;
};

}  // namespace retm
