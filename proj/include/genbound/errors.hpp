#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace genbound {

/// Base of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// linalg
class RankDeficient : public Error {
public:
    using Error::Error;
};

class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, std::size_t iterations)
        : Error(what + " (after " + std::to_string(iterations) + " iterations)"),
          iterations_(iterations) {}
    std::size_t iterations() const noexcept { return iterations_; }

private:
    std::size_t iterations_;
};

class NonFiniteInput : public Error {
public:
    using Error::Error;
};

// shapes and indices
class ShapeMismatch : public Error {
public:
    using Error::Error;
};
using DimensionMismatch = ShapeMismatch;

class IndexOutOfRange : public Error {
public:
    using Error::Error;
};

class OutOfRange : public Error {
public:
    using Error::Error;
};

// construction
class NotStronglyOverparametrized : public Error {
public:
    using Error::Error;
};

class BadArchitecture : public Error {
public:
    using Error::Error;
};

// point clouds and bounds
class EmptyCloud : public Error {
public:
    using Error::Error;
};

class TrainLossNotZero : public Error {
public:
    using Error::Error;
};

class NonPositiveDelta : public Error {
public:
    using Error::Error;
};

class ZeroTestError : public Error {
public:
    using Error::Error;
};

class InvalidConfig : public Error {
public:
    using Error::Error;
};

// data ingestion
class DataError : public Error {
public:
    using Error::Error;
};

class BadMagic : public DataError {
public:
    using DataError::DataError;
};

class TruncatedFile : public DataError {
public:
    using DataError::DataError;
};

class CountMismatch : public DataError {
public:
    using DataError::DataError;
};

class TooFewSamples : public Error {
public:
    using Error::Error;
};

class ExhaustedRetries : public Error {
public:
    using Error::Error;
};

// harness
class NoValidRows : public Error {
public:
    using Error::Error;
};

}  // namespace genbound
