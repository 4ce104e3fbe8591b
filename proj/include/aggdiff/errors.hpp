#pragma once

#include <stdexcept>
#include <string>

namespace aggdiff {

/// Scheme produced NaN or a negative density. Never silently clipped.
class IntegrityError : public std::runtime_error {
public:
    explicit IntegrityError(const std::string& what) : std::runtime_error(what) {}
};

/// Amplitude calibration could not bracket or refine its root.
class CalibrationError : public std::runtime_error {
public:
    explicit CalibrationError(const std::string& what) : std::runtime_error(what) {}
};

/// A steady-state identity check exceeded its declared tolerance.
class IdentityError : public std::runtime_error {
public:
    explicit IdentityError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace aggdiff
