#ifndef GSCAP_ERROR_HPP
#define GSCAP_ERROR_HPP

#include <stdexcept>
#include <string>

namespace gscap {

// Error taxonomy. The C API and the CLI map these onto exit codes:
// ConfigError -> 1, validation-type errors -> 2, NumericError -> 3.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Wrong tensor shapes fed to an operation.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Input outside an operation's mathematical domain (sigma <= 0, empty vector, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Bad run configuration (unknown scheme, beam_size < 1, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

// A caller broke an API contract (missing smoothed features, non-one-hot target, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

// Non-finite value produced where finite math was expected.
class NumericError : public Error {
public:
    using Error::Error;
};

// Data failed validation against the dataset/report schemas.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Out-of-range index (token id past vocabulary end, ...).
class IndexError : public Error {
public:
    using Error::Error;
};

} // namespace gscap

#endif
