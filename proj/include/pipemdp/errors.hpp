#pragma once

#include <stdexcept>
#include <string>

namespace pipemdp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the function's domain (negative time, bad index, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Hazard evaluated at a pole, e.g. Weibull with shape < 1 at t = 0.
class SingularityError : public Error {
 public:
  using Error::Error;
};

class IntegrationError : public Error {
 public:
  using Error::Error;
};

class InvalidState : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace pipemdp

namespace pipemdp {

class BindError : public Error {
 public:
  using Error::Error;
};

}  // namespace pipemdp
