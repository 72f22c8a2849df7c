#pragma once

#include <stdexcept>
#include <string>

namespace qsense {

/// Argument outside the documented domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A non-finite value appeared where a finite one was required.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Internal invariant broken, e.g. a probability below -1e-15.
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Every grid node carries zero posterior mass.
class DegeneratePosterior : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qsense
