#pragma once

#include <stdexcept>
#include <string>

namespace fvlab {

// Raised for every argument outside an operation's mathematical domain.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// Bessel dimension >= 2: the process never reaches 0.
class NoFiniteHittingTime : public DomainError {
public:
  explicit NoFiniteHittingTime(const std::string& what)
      : DomainError("no finite hitting time: " + what) {}
};

} // namespace fvlab
