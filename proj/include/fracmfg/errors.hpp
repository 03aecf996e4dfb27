#pragma once

#include <stdexcept>
#include <string>

namespace fracmfg {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Caller passed something outside an operation's preconditions.
struct ParameterError : Error {
    using Error::Error;
};

// An algorithm failed to deliver a trustworthy number.
struct NumericalError : Error {
    using Error::Error;
};

// Truncated spatial domain too small for the simulated mass.
struct DomainError : Error {
    using Error::Error;
};

// A file could not be read or written, or is not in the expected format.
struct IoError : Error {
    using Error::Error;
};

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw ParameterError(msg);
}

}  // namespace fracmfg
