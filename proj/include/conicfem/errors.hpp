#pragma once

#include <stdexcept>
#include <string>

namespace conicfem {

// Base class for all library errors.  Subclasses map 1:1 onto the C API
// status codes, so callers can recover the category across the boundary.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Degenerate or inadmissible geometry (zero-area triangle, collinear
// control points, implicitization without a positive conic, ...).
class GeometryError : public Error {
public:
    using Error::Error;
};

// Caller violated a precondition (mismatched degrees, wrong triangle, ...).
class UsageError : public Error {
public:
    using Error::Error;
};

// Mesh failed validation against the admissibility conditions.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Linear or eigenvalue solver did not reach the requested tolerance.
class SolverError : public Error {
public:
    using Error::Error;
};

// File or format problem while reading or writing meshes and tables.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace conicfem
