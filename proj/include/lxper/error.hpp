#pragma once

#include <stdexcept>
#include <string>

namespace lxper {

// Every recoverable failure in the library surfaces as an Error. Callers that
// need to distinguish input-data problems from programming errors catch this
// type and let std::logic_error propagate.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lxper
