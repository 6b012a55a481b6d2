#pragma once

#include <stdexcept>
#include <string>

namespace twoview {

// Invalid parameters or malformed inputs (caller error).
struct ValidationError : std::invalid_argument {
    explicit ValidationError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Evaluation requested outside the mathematical domain (e.g. z at or below
// the bulk edge on the real axis, inadmissible parameter regime).
struct DomainError : std::domain_error {
    explicit DomainError(const std::string& msg) : std::domain_error(msg) {}
};

// Iterative procedure failed to converge or a search failed; carries a
// diagnostic message with the last iterate / residual where applicable.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace twoview
