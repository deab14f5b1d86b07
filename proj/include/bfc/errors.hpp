#pragma once

#include <stdexcept>
#include <string>

namespace bfc {

/// Base class for all library errors.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad inputs: out-of-domain parameters, malformed configuration or data
/// files, preconditions violated by the caller.  CLI exit code 2.
class validation_error : public error {
public:
    explicit validation_error(const std::string& what) : error(what) {}
};

/// A numerical guarantee could not be certified: a series did not certify
/// decay, an inversion is unstable, a contraction constant is >= 1, a
/// residual exceeded its bound.  CLI exit code 3.
class certification_error : public error {
public:
    explicit certification_error(const std::string& what) : error(what) {}
};

} // namespace bfc
