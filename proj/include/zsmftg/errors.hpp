#pragma once

#include <stdexcept>
#include <string>

namespace zsmftg {

// Base class for every failure this library reports.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionMismatch : Error {
    using Error::Error;
};

struct NotSymmetric : Error {
    using Error::Error;
};

struct NotPositiveDefinite : Error {
    using Error::Error;
};

struct GammaOutOfRange : Error {
    using Error::Error;
};

// Discounted spectral condition gamma * ||F||^2 < 1 violated.
struct Unstable : Error {
    using Error::Error;
};

struct NoConvergence : Error {
    using Error::Error;
};

struct Singular : Error {
    using Error::Error;
};

struct IndefiniteInnerMatrix : Error {
    using Error::Error;
};

struct AssumptionViolated : Error {
    using Error::Error;
};

// A Monte-Carlo rollout produced a non-finite utility sample.
struct NonFiniteSample : Error {
    NonFiniteSample(const std::string& what, long index) : Error(what), sample_index(index) {}
    long sample_index;
};

// An exact-gradient training iterate left the stabilizing set.
struct LeftStabilizingSet : Error {
    LeftStabilizingSet(const std::string& what, long iter) : Error(what), iteration(iter) {}
    long iteration;
};

struct ConfigError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace zsmftg
