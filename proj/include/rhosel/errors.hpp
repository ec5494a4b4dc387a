#pragma once

#include <stdexcept>
#include <string>

namespace rhosel {

// Thrown when an input violates a documented precondition (bad observation,
// point outside the unit cube, candidate leaving the parameter interval).
class domain_error : public std::runtime_error {
 public:
  explicit domain_error(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a config file or scenario description is malformed. The CLI
// maps this to exit code 2.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when an iterative numeric routine fails to converge or detects an
// invalid intermediate (A'' <= 0, quadrature breakdown). CLI exit code 3.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rhosel
