#pragma once

#include <stdexcept>
#include <string>

namespace fots {

// Base for everything the library throws on a contract violation.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed configuration document.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A well-formed document (or argument) with an invalid value or key.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& reason)
      : Error(field + ": " + reason), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Measured T1 reached the reversal constant C, so C - T1 is not a delay.
class ReversalOverflow : public Error {
 public:
  ReversalOverflow(double c, double t1)
      : Error("reversal overflow: T1 = " + std::to_string(t1) +
              " s is not below C = " + std::to_string(c) + " s"),
        c_(c),
        t1_(t1) {}

  double c() const noexcept { return c_; }
  double t1() const noexcept { return t1_; }

 private:
  double c_;
  double t1_;
};

// A simulated event would precede the event that caused it.
class NonCausal : public Error {
 public:
  using Error::Error;
};

// The access-node interval T3 came out negative (C too small or mis-wired tap).
class NegativeT3 : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fots
