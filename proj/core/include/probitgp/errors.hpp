#pragma once

#include <stdexcept>
#include <string>

namespace probitgp {

/// Invalid input: wrong shapes, out-of-domain parameters, duplicate locations.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// A numerical procedure broke down (factorization failure, vanishing evidence, ...).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace probitgp
