#include "gsdeepc/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gsdeepc/errors.hpp"

namespace gsdeepc {

std::string_view to_string(SwitchingMode mode) {
    switch (mode) {
        case SwitchingMode::plain: return "plain";
        case SwitchingMode::dwell_selective: return "dwell_selective";
        case SwitchingMode::dwell_full: return "dwell_full";
        case SwitchingMode::composite: return "composite";
    }
    return "plain";
}

std::optional<SwitchingMode> parse_switching_mode(std::string_view text) {
    for (auto mode : {SwitchingMode::plain, SwitchingMode::dwell_selective, SwitchingMode::dwell_full,
                      SwitchingMode::composite})
        if (text == to_string(mode)) return mode;
    return std::nullopt;
}

int select_plain(double rho, const PartitionSpec& spec) { return spec.region_of(rho); }

std::pair<int, SchedulerState> select_dwell(double rho, const PartitionSpec& spec, SchedulerState state) {
    if (state.mode != SwitchingMode::dwell_selective && state.mode != SwitchingMode::dwell_full)
        throw ConfigError("select_dwell requires a dwell mode");
    const int candidate = select_plain(rho, spec);
    ++state.steps_since_switch;
    if (candidate == state.active_index) return {state.active_index, state};

    const bool in_dwell = state.steps_since_switch < state.dwell_steps;
    const bool blocked = state.mode == SwitchingMode::dwell_full
                             ? in_dwell
                             : in_dwell && candidate == state.previous_index;
    if (blocked) return {state.active_index, state};

    state.previous_index = state.active_index;
    state.active_index = candidate;
    state.steps_since_switch = 0;
    return {candidate, state};
}

int nearest_composite(double rho, const RegionBank& bank) {
    const auto& bounds = bank.composite_bounds;
    if (bounds.empty()) throw ConfigError("composite switching needs at least two regions");
    const double x = std::clamp(rho, bank.partition.lower(), bank.partition.upper());
    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(bounds.size()); ++i) {
        if (!bounds[i].contains(x)) continue;
        const double d = std::abs(x - bounds[i].center());
        if (d < best_dist) {
            best = i;
            best_dist = d;
        }
    }
    return best;
}

std::pair<int, SchedulerState> select_composite(double rho, const RegionBank& bank, SchedulerState state) {
    if (state.mode != SwitchingMode::composite) throw ConfigError("select_composite requires composite mode");
    if (std::isnan(rho)) throw DimensionError("scheduling variable is NaN");
    ++state.steps_since_switch;
    const double x = std::clamp(rho, bank.partition.lower(), bank.partition.upper());
    if (bank.composite_bounds.at(static_cast<std::size_t>(state.active_index)).contains(x))
        return {state.active_index, state};
    const int next = nearest_composite(x, bank);
    state.previous_index = state.active_index;
    state.active_index = next;
    state.steps_since_switch = 0;
    return {next, state};
}

SchedulerState initial_state(SwitchingMode mode, double rho, const RegionBank& bank, int dwell_steps) {
    SchedulerState s;
    s.mode = mode;
    s.dwell_steps = dwell_steps;
    s.steps_since_switch = dwell_steps;
    s.previous_index = -1;
    if (bank.partition.regions() == 1) {
        s.active_index = 0;
        return s;
    }
    if (mode == SwitchingMode::composite) {
        s.active_index = nearest_composite(rho, bank);
    } else {
        s.active_index = select_plain(rho, bank.partition);
    }
    return s;
}

Scheduler::Scheduler(const RegionBank& bank, SwitchingMode mode, int dwell_steps)
    : bank_(&bank), mode_(mode), dwell_steps_(dwell_steps) {
    if (dwell_steps < 0) throw ConfigError("dwell time must be non-negative");
    if (bank.regional.empty()) throw ConfigError("scheduler needs a non-empty region bank");
}

int Scheduler::update(double rho) {
    switched_ = false;
    if (!initialized_) {
        state_ = initial_state(mode_, rho, *bank_, dwell_steps_);
        initialized_ = true;
        return state_.active_index;
    }
    if (bank_->partition.regions() == 1) return 0;

    const int before = state_.active_index;
    switch (mode_) {
        case SwitchingMode::plain: {
            const int next = select_plain(rho, bank_->partition);
            ++state_.steps_since_switch;
            if (next != state_.active_index) {
                state_.previous_index = state_.active_index;
                state_.active_index = next;
                state_.steps_since_switch = 0;
            }
            break;
        }
        case SwitchingMode::dwell_selective:
        case SwitchingMode::dwell_full:
            state_ = select_dwell(rho, bank_->partition, state_).second;
            break;
        case SwitchingMode::composite:
            state_ = select_composite(rho, *bank_, state_).second;
            break;
    }
    switched_ = state_.active_index != before;
    return state_.active_index;
}

const HankelSet& Scheduler::active_set() const {
    const auto idx = static_cast<std::size_t>(state_.active_index);
    if (mode_ == SwitchingMode::composite && bank_->partition.regions() > 1) return bank_->composite.at(idx);
    return bank_->regional.at(idx);
}

}  // namespace gsdeepc
