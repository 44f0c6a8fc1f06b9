#pragma once

#include <stdexcept>
#include <string>

namespace martin {

/// Kernel evaluated on its singular diagonal (x = y, or x = 0 for ratios).
class SingularityError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Adaptive quadrature exhausted its subdivision budget before meeting tolerance.
/// The best estimate and its error bound are kept for diagnostics.
class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, double estimate, double error)
        : std::runtime_error(what), estimate_(estimate), error_(error) {}

    double estimate() const noexcept { return estimate_; }
    double error() const noexcept { return error_; }

private:
    double estimate_;
    double error_;
};

/// Invalid configuration file or field; message names the offending field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace martin
