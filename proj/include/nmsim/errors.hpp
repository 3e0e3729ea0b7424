#pragma once

#include <stdexcept>
#include <string>

namespace nmsim {

/// Precondition violated by a caller-supplied value.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical routine (quadrature, eigensolve, fit) could not deliver a result.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The time integrator drifted outside its trace/positivity budget.
/// Usually means the step is too coarse for the rates in use.
class IntegrationDiagnostic : public NumericalFailure {
public:
    using NumericalFailure::NumericalFailure;
};

/// Malformed experiment configuration; the message names the offending field.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace nmsim
