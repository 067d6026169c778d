#pragma once
#include <cstddef>
#include <stdexcept>
#include <string>

namespace ihtlab {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Mismatched dimensions between vectors, matrices or datasets.
class DimensionError : public Error
{
public:
    using Error::Error;
};

/// Arguments outside the domain where an operation is defined.
class DomainError : public Error
{
public:
    using Error::Error;
};

/// An iterative method ran out of iterations. Carries the last estimate.
class ConvergenceError : public Error
{
public:
    ConvergenceError(const std::string& what, double last_estimate, std::size_t iterations)
        : Error(what), last_estimate_(last_estimate), iterations_(iterations)
    {}

    double last_estimate() const noexcept { return last_estimate_; }
    std::size_t iterations() const noexcept { return iterations_; }

private:
    double last_estimate_;
    std::size_t iterations_;
};

/// The IHT recursion produced a non-finite objective.
class DivergenceError : public Error
{
public:
    DivergenceError(const std::string& what, std::size_t iteration)
        : Error(what), iteration_(iteration)
    {}

    std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

/// File input/output failures; the message always names the path.
class IoError : public Error
{
public:
    using Error::Error;
};

} // namespace ihtlab
