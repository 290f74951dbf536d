#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace survcobra {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Input-side failures (bad files, bad schemas, bad configuration). The CLI
// maps these to exit code 2, everything else to exit code 1.
class InputError : public Error {
public:
    using Error::Error;
};

class SchemaError : public InputError {
public:
    using InputError::InputError;
};

class ParseError : public InputError {
public:
    using InputError::InputError;
};

class ValidationError : public InputError {
public:
    using InputError::InputError;
};

class SplitError : public InputError {
public:
    using InputError::InputError;
};

class GridError : public InputError {
public:
    using InputError::InputError;
};

class EstimationError : public Error {
public:
    using Error::Error;
};

class MetricError : public Error {
public:
    using Error::Error;
};

class DistanceError : public Error {
public:
    using Error::Error;
};

class FitError : public Error {
public:
    using Error::Error;
};

class PredictionError : public Error {
public:
    using Error::Error;
};

// Raised when the proximity set stays empty after the bounded epsilon
// widening. Carries each machine's minimum distance to the prediction table
// so callers can report how far the query was from ever matching.
class NoNeighborsError : public PredictionError {
public:
    NoNeighborsError(const std::string& msg, std::vector<double> min_distances)
        : PredictionError(msg), min_machine_distances(std::move(min_distances)) {}

    std::vector<double> min_machine_distances;
};

class TuneError : public Error {
public:
    using Error::Error;
};

}  // namespace survcobra
