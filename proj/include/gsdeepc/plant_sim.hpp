#pragma once

#include <cstdint>
#include <vector>

#include "gsdeepc/region_partition.hpp"
#include "gsdeepc/signal_core.hpp"

namespace gsdeepc {

/// DC motor driving an unbalanced disc.
struct PlantParams {
    double mass = 0.07;          // kg
    double gravity = 9.8;        // m/s^2
    double length = 0.42e-3;     // m (0.42 mm)
    double inertia = 2.2e-4;     // N m^2
    double tau = 0.6;            // motor time constant
    double motor_gain = 15.3;
    double ts = 0.075;           // s
    int substeps = 10;

    /// m g l / J, in 1/s^2.
    double kappa() const { return mass * gravity * length / inertia; }
    /// Constant input that balances gravity at theta = pi/2.
    double holding_voltage() const { return kappa() * tau / motor_gain; }
    void validate() const;
};

struct PlantState {
    double velocity = 0.0;  // x1 = d theta / dt
    double angle = 0.0;     // x2 = theta, also the measured output
};

/// One sampling period under zero-order-hold input, classical RK4 with `substeps` internal steps.
/// The input is not clamped here. Throws DivergenceError on a non-finite result.
PlantState step_plant(const PlantState& state, double u, const PlantParams& params, int substeps);
PlantState step_plant(const PlantState& state, double u, const PlantParams& params);

/// Continuous-time right-hand side; `linear` replaces sin(x2) by x2.
PlantState plant_derivative(const PlantState& state, double u, const PlantParams& params, bool linear = false);

/// Same integrator applied to the small-angle model, used to produce LTI data.
PlantState step_linear_plant(const PlantState& state, double u, const PlantParams& params, int substeps);

struct ExcitationParams {
    double duration = 600.0;     // s
    int rbs_count = 2;
    double rbs_amplitude = 0.13;  // V per component
    int hold_min = 1;             // steps
    int hold_max = 5;             // steps
    double boundary_fraction = 0.05;
    double bias_amplitude = 0.054;  // V
    std::uint64_t seed = 1;
    double u_min = -0.25;
    double u_max = 0.25;
    double y_lower = -3.14159265358979323846;
    double y_upper = 3.14159265358979323846;
    double noise_std = 0.0;       // additive output noise, off by default
};

/**
 * Multi-RBS excitation with a boundary-reflection bias.
 *
 * u(k) = clip(sum_j RBS_j(k) + bias(k), u_min, u_max). Each RBS component
 * holds a +-amplitude level for a random number of steps in [hold_min,
 * hold_max] and then flips sign. The bias latches to +bias_amplitude once y
 * enters the lower boundary zone and to -bias_amplitude once it enters the
 * upper zone; it starts positive.
 */
Trajectory generate_excitation(const PlantParams& params, const ExcitationParams& ex,
                               const PlantState& initial = {});

struct CoverageEntry {
    int region = 0;
    Index samples = 0;
    Index segments = 0;  // qualifying runs (length >= min_len)
    Index columns = 0;   // Hankel columns those runs deliver
};

std::vector<CoverageEntry> coverage_report(const Trajectory& traj, const PartitionSpec& spec, int t_ini, int horizon);

/// Piecewise-constant reference sampled at ts; a step at time t takes effect at sample ceil(t / ts).
std::vector<double> generate_reference(const std::vector<double>& step_times, const std::vector<double>& step_values,
                                       double duration, double ts, double y_min, double y_max);

/// Number of samples covering [0, duration) at period ts, i.e. ceil(duration / ts).
Index sample_count(double duration, double ts);

/// Index of the first sample at or after time t.
Index sample_index(double t, double ts);

}  // namespace gsdeepc
