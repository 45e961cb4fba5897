#pragma once

#include <stdexcept>
#include <string>

namespace evtrisk {

// Error taxonomy shared by the library and the CLI exit-code mapping:
//   ParamError   -> bad parameters / configuration      (CLI exit 2)
//   DataError    -> unusable or malformed input data    (CLI exit 3)
//   NumericError -> numerical failure (no convergence,
//                   degenerate sample, scheme blow-up)  (CLI exit 4)
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ParamError : public Error {
public:
    explicit ParamError(const std::string& msg) : Error(msg) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

} // namespace evtrisk
