#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ankle {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user input: malformed parameters, bad config, schema violations.
class InputError : public Error {
public:
    using Error::Error;
};

/// The RSU leg cannot close: |k/rho| exceeds one.
class Unreachable : public Error {
public:
    Unreachable(std::size_t leg, double excess)
        : Error("leg " + std::to_string(leg + 1) + " unreachable (|k/rho| - 1 = " +
                std::to_string(excess) + ")"),
          leg_(leg), excess_(excess) {}

    [[nodiscard]] std::size_t leg() const noexcept { return leg_; }
    [[nodiscard]] double excess() const noexcept { return excess_; }

private:
    std::size_t leg_;
    double excess_;
};

/// Kinematic singularity: the Jacobian (or the manipulability matrix) lost rank.
class Singular : public Error {
public:
    explicit Singular(double det, const std::string& what = "kinematic singularity")
        : Error(what + " (normalized det = " + std::to_string(det) + ")"), det_(det) {}

    [[nodiscard]] double det() const noexcept { return det_; }

private:
    double det_;
};

class NoConvergence : public Error {
public:
    NoConvergence(int iterations, double residual)
        : Error("forward kinematics did not converge after " + std::to_string(iterations) +
                " iterations (residual " + std::to_string(residual) + ")"),
          iterations_(iterations), residual_(residual) {}

    [[nodiscard]] int iterations() const noexcept { return iterations_; }
    [[nodiscard]] double residual() const noexcept { return residual_; }

private:
    int iterations_;
    double residual_;
};

/// The actuator axis passes through the U_i-R_i line somewhere in the region.
class DegenerateGeometry : public Error {
public:
    using Error::Error;
};

/// Rod-length interval came out empty (grid too coarse for the chosen crank).
class EmptyInterval : public Error {
public:
    EmptyInterval(std::size_t leg, double r_min, double r_max)
        : Error("leg " + std::to_string(leg + 1) + ": empty rod interval [" +
                std::to_string(r_min) + ", " + std::to_string(r_max) + "]"),
          leg_(leg) {}

    [[nodiscard]] std::size_t leg() const noexcept { return leg_; }

private:
    std::size_t leg_;
};

/// Realization produced r_i <= c_i; the design is rejected rather than clamped.
class InfeasibleDesign : public Error {
public:
    using Error::Error;
};

class InvalidRegions : public InputError {
public:
    using InputError::InputError;
};

class AllZeroWeights : public Error {
public:
    AllZeroWeights() : Error("all aggregation weights are zero") {}
};

class BadWeights : public InputError {
public:
    using InputError::InputError;
};

class MissingSpec : public InputError {
public:
    using InputError::InputError;
};

/// File content does not match its schema; the message carries the field path.
class SchemaError : public InputError {
public:
    using InputError::InputError;
};

class VersionMismatch : public InputError {
public:
    using InputError::InputError;
};

class CorruptBundle : public InputError {
public:
    using InputError::InputError;
};

class IncompatibleBundles : public InputError {
public:
    using InputError::InputError;
};

}  // namespace ankle
