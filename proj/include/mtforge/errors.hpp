#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mtf {

// Base class; `param` names the offending parameter when one is known.
class Error : public std::runtime_error {
public:
    Error(const std::string& what, std::string param = {})
        : std::runtime_error(what), param_(std::move(param)) {}
    const std::string& param() const noexcept { return param_; }

private:
    std::string param_;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class DegenerateError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class UnsupportedError : public Error {
public:
    using Error::Error;
};

class CertificationError : public Error {
public:
    using Error::Error;
};

class QuadratureError : public Error {
public:
    using Error::Error;
};

// Raised when a perturbation target sits farther from the base surface than
// the allowed amplitude.
class ReachError : public Error {
public:
    ReachError(const std::string& what, std::size_t cap)
        : Error(what, "cap"), cap_(cap) {}
    std::size_t cap() const noexcept { return cap_; }

private:
    std::size_t cap_;
};

class BudgetError : public Error {
public:
    BudgetError(const std::string& what, std::uint64_t lower_bound, std::string param = {})
        : Error(what, std::move(param)), lower_bound_(lower_bound) {}
    std::uint64_t lower_bound() const noexcept { return lower_bound_; }

private:
    std::uint64_t lower_bound_;
};

}  // namespace mtf
