#pragma once

#include <stdexcept>
#include <string>

namespace fueter {

/// Caller passed arguments outside an operation's precondition.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A chart or grid was queried outside the region where it is defined.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace fueter
