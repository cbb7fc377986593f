#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gsdeepc {

/// Invalid user-supplied configuration (bad limits, inconsistent dimensions in a config file, ...).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Matrix or sequence dimensions that do not fit the requested operation.
class DimensionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A data set delivers fewer Hankel columns than required.
class InsufficientDataError : public std::runtime_error {
public:
    struct Deficit {
        int region;
        long available;
        long required;
    };

    InsufficientDataError(const std::string& what, std::vector<Deficit> deficits)
        : std::runtime_error(what), deficits_(std::move(deficits)) {}

    const std::vector<Deficit>& deficits() const noexcept { return deficits_; }

private:
    std::vector<Deficit> deficits_;
};

/// The plant integration produced a non-finite state.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, double last_velocity, double last_angle)
        : std::runtime_error(what), last_velocity_(last_velocity), last_angle_(last_angle) {}

    double last_velocity() const noexcept { return last_velocity_; }
    double last_angle() const noexcept { return last_angle_; }

private:
    double last_velocity_;
    double last_angle_;
};

/// The QP solver did not return a usable solution.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace gsdeepc
