#pragma once

#include <stdexcept>
#include <string>

namespace gwmax {

/// Input that violates a documented precondition (bad law, null conditioning
/// event, malformed tree). The CLI maps this to exit code 2.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A sampler hit its vertex budget or trial limit. Never silently truncated.
class BudgetExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace gwmax
