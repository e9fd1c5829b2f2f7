#pragma once

#include <stdexcept>
#include <string>

namespace riphs {

// Base class for all library errors. Everything thrown on purpose derives
// from this, so callers can catch riphs::Error at subsystem boundaries.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// State left the admissible set of a model (domain guard rejected it).
class DomainViolation : public Error {
public:
    using Error::Error;
};

// A NaN or infinity appeared where a finite value is required.
class NonFinite : public Error {
public:
    using Error::Error;
};

// Vector or matrix sizes do not match the declared dimensions.
class DimensionMismatch : public Error {
public:
    using Error::Error;
};

// Structurally invalid inputs: non-skew structure matrices, negative
// weights, inconsistent grids, parameters outside their admissible range.
class InvalidParams : public Error {
public:
    using Error::Error;
};

// Trajectory invariants broken (non-increasing times, ragged rows).
class InconsistentTrajectory : public Error {
public:
    using Error::Error;
};

// Integrator state norm exceeded the blow-up cap.
class BlowUp : public Error {
public:
    using Error::Error;
};

// No multi-start candidate reached the required stationarity.
class Infeasible : public Error {
public:
    using Error::Error;
};

// Exponential fit requires strictly positive distances.
class NonPositiveDistance : public Error {
public:
    using Error::Error;
};

// Malformed JSON input (carries line context).
class ParseError : public Error {
public:
    using Error::Error;
};

// Well-formed JSON that violates the config schema (unknown keys,
// missing sections, wrong types or dimensions).
class ValidationError : public Error {
public:
    using Error::Error;
};

} // namespace riphs
