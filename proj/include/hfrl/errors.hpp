#pragma once

#include <stdexcept>
#include <string>

namespace hfrl {

/// Process exit codes used by the command-line tool.
enum ExitCode : int {
    exit_ok = 0,
    exit_failure = 1,
    exit_validation = 2,
    exit_empty_confidence = 3,
    exit_lemma_violation = 4,
};

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const { return exit_failure; }
};

/// Inconsistent dimensions or malformed input documents.
class StructuralError : public Error {
public:
    using Error::Error;
    int exit_code() const override { return exit_validation; }
};

/// A model violates the linear-MDP or bounded-reward assumptions.
class ValidationError : public Error {
public:
    using Error::Error;
    int exit_code() const override { return exit_validation; }
};

/// No candidate survives a confidence-set filter.
class EmptyConfidenceSet : public Error {
public:
    using Error::Error;
    int exit_code() const override { return exit_empty_confidence; }
};

/// Non-finite input or an ill-conditioned system.
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace hfrl
