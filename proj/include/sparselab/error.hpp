#pragma once

#include <stdexcept>
#include <string>

namespace sparselab {

/// Raised when an operation's precondition fails; what() carries the short
/// diagnostic ("subgrid cube", "wraparound risk", ...).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sparselab
