#pragma once

#include <stdexcept>
#include <string>

namespace adaptrl {

// Malformed input data or configuration. The CLI maps this to exit status 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An operation was invoked outside its protocol, e.g. a feedback action in
// the initial state.
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace adaptrl
