#pragma once

#include <stdexcept>
#include <string>

namespace tempcast {

// Bad input: malformed CSVs, broken configs, missing files. CLI exit code 2.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure: divergent training, non-finite losses, undefined
// correlation, singular normal matrix. CLI exit code 3.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace tempcast
