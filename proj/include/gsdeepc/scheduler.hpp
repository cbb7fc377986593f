#pragma once

#include <optional>
#include <string_view>
#include <utility>

#include "gsdeepc/region_partition.hpp"

namespace gsdeepc {

enum class SwitchingMode { plain, dwell_selective, dwell_full, composite };

std::string_view to_string(SwitchingMode mode);
std::optional<SwitchingMode> parse_switching_mode(std::string_view text);

struct SchedulerState {
    SwitchingMode mode = SwitchingMode::plain;
    int active_index = 0;
    int previous_index = -1;
    int steps_since_switch = 0;
    int dwell_steps = 10;
};

/// Region owning rho under the half-open convention, clamped to the range.
int select_plain(double rho, const PartitionSpec& spec);

/// Dwell-time switching. Selective mode only blocks a return to the previously active region.
std::pair<int, SchedulerState> select_dwell(double rho, const PartitionSpec& spec, SchedulerState state);

/// Composite (hysteresis) switching over the bank's composite bounds.
std::pair<int, SchedulerState> select_composite(double rho, const RegionBank& bank, SchedulerState state);

/// Composite index whose bounds contain rho with the nearest center; ties go to the lower index.
int nearest_composite(double rho, const RegionBank& bank);

/// Initial state: the region (or composite) whose center is nearest rho. The dwell counter starts
/// saturated so the first transition is never blocked.
SchedulerState initial_state(SwitchingMode mode, double rho, const RegionBank& bank, int dwell_steps = 10);

/**
 * Stateful wrapper used by the closed loop. For single-region banks every
 * mode pins index 0, which reduces the controller to plain DeePC.
 */
class Scheduler {
public:
    Scheduler(const RegionBank& bank, SwitchingMode mode, int dwell_steps);

    /// Selects the active index for this step; the first call also initializes the state.
    int update(double rho);
    bool switched() const { return switched_; }
    const SchedulerState& state() const { return state_; }
    SwitchingMode mode() const { return mode_; }

    /// The Hankel set belonging to the active index (regional or composite per mode).
    const HankelSet& active_set() const;

private:
    const RegionBank* bank_;
    SwitchingMode mode_;
    int dwell_steps_;
    SchedulerState state_;
    bool initialized_ = false;
    bool switched_ = false;
};

}  // namespace gsdeepc
