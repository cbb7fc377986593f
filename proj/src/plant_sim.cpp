#include "gsdeepc/plant_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "gsdeepc/errors.hpp"

namespace gsdeepc {

void PlantParams::validate() const {
    if (!(mass > 0 && gravity > 0 && length > 0 && inertia > 0 && tau > 0 && motor_gain > 0 && ts > 0))
        throw ConfigError("plant parameters must all be positive");
    if (substeps < 1) throw ConfigError("plant substeps must be at least 1");
}

PlantState plant_derivative(const PlantState& s, double u, const PlantParams& p, bool linear) {
    const double restoring = linear ? s.angle : std::sin(s.angle);
    return {-s.velocity / p.tau - p.kappa() * restoring + p.motor_gain / p.tau * u, s.velocity};
}

namespace {

PlantState rk4(const PlantState& s0, double u, const PlantParams& p, int substeps, bool linear) {
    if (substeps < 1) throw ConfigError("plant substeps must be at least 1");
    const double h = p.ts / substeps;
    PlantState s = s0;
    auto add = [](const PlantState& a, const PlantState& d, double f) {
        return PlantState{a.velocity + f * d.velocity, a.angle + f * d.angle};
    };
    for (int i = 0; i < substeps; ++i) {
        const PlantState k1 = plant_derivative(s, u, p, linear);
        const PlantState k2 = plant_derivative(add(s, k1, 0.5 * h), u, p, linear);
        const PlantState k3 = plant_derivative(add(s, k2, 0.5 * h), u, p, linear);
        const PlantState k4 = plant_derivative(add(s, k3, h), u, p, linear);
        const PlantState next{s.velocity + h / 6.0 * (k1.velocity + 2 * k2.velocity + 2 * k3.velocity + k4.velocity),
                              s.angle + h / 6.0 * (k1.angle + 2 * k2.angle + 2 * k3.angle + k4.angle)};
        if (!std::isfinite(next.velocity) || !std::isfinite(next.angle))
            throw DivergenceError("plant simulation diverged", s.velocity, s.angle);
        s = next;
    }
    return s;
}

// Unbiased integer in [lo, hi] from a 64-bit engine, independent of the standard library's distributions.
int draw_int(std::mt19937_64& rng, int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t v = rng();
    while (v >= limit) v = rng();
    return lo + static_cast<int>(v % span);
}

// Standard normal via Box-Muller on 53-bit uniforms.
double draw_normal(std::mt19937_64& rng) {
    auto uniform = [&] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace

PlantState step_plant(const PlantState& state, double u, const PlantParams& params, int substeps) {
    if (!std::isfinite(u)) throw DivergenceError("non-finite plant input", state.velocity, state.angle);
    return rk4(state, u, params, substeps, false);
}

PlantState step_plant(const PlantState& state, double u, const PlantParams& params) {
    return step_plant(state, u, params, params.substeps);
}

PlantState step_linear_plant(const PlantState& state, double u, const PlantParams& params, int substeps) {
    return rk4(state, u, params, substeps, true);
}

Trajectory generate_excitation(const PlantParams& params, const ExcitationParams& ex, const PlantState& initial) {
    params.validate();
    if (ex.rbs_count < 0 || ex.hold_min < 1 || ex.hold_max < ex.hold_min)
        throw ConfigError("excitation: invalid RBS count or hold range");
    if (!(ex.y_upper > ex.y_lower) || !(ex.u_max > ex.u_min)) throw ConfigError("excitation: invalid limits");
    const Index n = sample_count(ex.duration, params.ts);

    std::mt19937_64 rng(ex.seed);
    struct Rbs {
        double level;
        int remaining;
    };
    std::vector<Rbs> rbs;
    for (int j = 0; j < ex.rbs_count; ++j) {
        const double sign = draw_int(rng, 0, 1) == 0 ? -1.0 : 1.0;
        rbs.push_back({sign * ex.rbs_amplitude, draw_int(rng, ex.hold_min, ex.hold_max)});
    }

    const double range = ex.y_upper - ex.y_lower;
    const double low_zone = ex.y_lower + ex.boundary_fraction * range;
    const double high_zone = ex.y_upper - ex.boundary_fraction * range;
    double bias_sign = 1.0;

    Trajectory traj;
    traj.ts = params.ts;
    traj.u.resize(1, n);
    traj.y.resize(1, n);
    traj.rho.resize(n);
    PlantState state = initial;
    for (Index k = 0; k < n; ++k) {
        double y = state.angle;
        if (ex.noise_std > 0.0) y += ex.noise_std * draw_normal(rng);
        if (y < low_zone) bias_sign = 1.0;
        if (y > high_zone) bias_sign = -1.0;

        double u = bias_sign * ex.bias_amplitude;
        for (auto& r : rbs) {
            u += r.level;
            if (--r.remaining == 0) {
                r.level = -r.level;
                r.remaining = draw_int(rng, ex.hold_min, ex.hold_max);
            }
        }
        u = std::clamp(u, ex.u_min, ex.u_max);

        traj.u(0, k) = u;
        traj.y(0, k) = y;
        traj.rho(k) = y;
        state = step_plant(state, u, params);
    }
    return traj;
}

std::vector<CoverageEntry> coverage_report(const Trajectory& traj, const PartitionSpec& spec, int t_ini, int horizon) {
    const Index depth = t_ini + horizon;
    std::vector<CoverageEntry> report(static_cast<std::size_t>(spec.regions()));
    for (int i = 0; i < spec.regions(); ++i) report[i].region = i;
    for (Index k = 0; k < traj.length(); ++k) ++report[static_cast<std::size_t>(spec.region_of(traj.rho(k)))].samples;
    const auto segments = extract_region_segments(traj, spec, depth);
    for (std::size_t i = 0; i < segments.size(); ++i) {
        report[i].segments = static_cast<Index>(segments[i].size());
        for (const auto& s : segments[i]) report[i].columns += s.length() - depth + 1;
    }
    return report;
}

Index sample_index(double t, double ts) {
    // Tolerate representation error: 12 / 0.075 must land on 160, not 161.
    return static_cast<Index>(std::ceil(t / ts - 1e-9));
}

Index sample_count(double duration, double ts) { return sample_index(duration, ts); }

std::vector<double> generate_reference(const std::vector<double>& step_times, const std::vector<double>& step_values,
                                       double duration, double ts, double y_min, double y_max) {
    if (step_times.empty() || step_times.size() != step_values.size())
        throw ConfigError("reference: step times and values must be non-empty and of equal length");
    if (step_times.front() != 0.0) throw ConfigError("reference: first step must be at t = 0");
    for (std::size_t i = 1; i < step_times.size(); ++i)
        if (!(step_times[i] > step_times[i - 1])) throw ConfigError("reference: step times must be strictly increasing");
    for (double v : step_values)
        if (v < y_min || v > y_max)
            throw ConfigError("reference value " + std::to_string(v) + " outside the output constraints");
    if (!(ts > 0.0) || !(duration > 0.0)) throw ConfigError("reference: duration and ts must be positive");

    const Index n = sample_count(duration, ts);
    std::vector<double> r(static_cast<std::size_t>(n));
    std::size_t step = 0;
    for (Index k = 0; k < n; ++k) {
        while (step + 1 < step_times.size() && sample_index(step_times[step + 1], ts) <= k) ++step;
        r[static_cast<std::size_t>(k)] = step_values[step];
    }
    return r;
}

}  // namespace gsdeepc
