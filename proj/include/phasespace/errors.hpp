#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace phasespace {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class SymmetryError : public Error {
public:
    using Error::Error;
};

/// Raised when a matrix that must be positive definite has an eigenvalue at or below
/// the positivity threshold. Carries the offending eigenvalue.
class NotPositiveDefinite : public Error {
public:
    NotPositiveDefinite(const std::string& what, double eigenvalue)
        : Error(what + " (eigenvalue " + std::to_string(eigenvalue) + ")"), eigenvalue_(eigenvalue)
    {
    }
    double eigenvalue() const noexcept { return eigenvalue_; }

private:
    double eigenvalue_;
};

class NotSemidefinite : public Error {
public:
    NotSemidefinite(const std::string& what, double eigenvalue)
        : Error(what + " (eigenvalue " + std::to_string(eigenvalue) + ")"), eigenvalue_(eigenvalue)
    {
    }
    double eigenvalue() const noexcept { return eigenvalue_; }

private:
    double eigenvalue_;
};

class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, std::size_t iterations)
        : Error(what + " after " + std::to_string(iterations) + " iterations"), iterations_(iterations)
    {
    }
    std::size_t iterations() const noexcept { return iterations_; }

private:
    std::size_t iterations_;
};

class EmptyDistribution : public Error {
public:
    using Error::Error;
};

/// Second-moment matrix is not positive definite, so the linear energy bounds are undefined.
class DegenerateMoments : public Error {
public:
    using Error::Error;
};

class NumericalInstability : public Error {
public:
    using Error::Error;
};

class ResourceCapExceeded : public Error {
public:
    ResourceCapExceeded(std::size_t requested, std::size_t cap)
        : Error("lattice needs " + std::to_string(requested) + " cells, cap is " + std::to_string(cap)),
          requested_(requested), cap_(cap)
    {
    }
    std::size_t requested() const noexcept { return requested_; }
    std::size_t cap() const noexcept { return cap_; }

private:
    std::size_t requested_;
    std::size_t cap_;
};

} // namespace phasespace
