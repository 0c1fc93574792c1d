#pragma once

#include <stdexcept>
#include <string>

namespace rwdisc {

/// Malformed instance, coloring, or argument supplied by the caller.
class InputError : public std::invalid_argument {
public:
    explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// An operation was invoked on data that does not meet its precondition
/// (e.g. ledger replay without full traces).
class PreconditionError : public std::logic_error {
public:
    explicit PreconditionError(const std::string& what) : std::logic_error(what) {}
};

/// The SDP solver could not produce a point within tolerance.
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

/// Linear-algebra breakdown in a baseline or certificate routine.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rwdisc
