#pragma once

#include <filesystem>
#include <vector>

#include "gsdeepc/signal_core.hpp"

namespace gsdeepc {

struct Interval {
    double lower = 0.0;
    double upper = 0.0;

    double center() const { return 0.5 * (lower + upper); }
    bool contains(double x) const { return x >= lower && x <= upper; }
};

/**
 * Uniform partition of the scheduling range [lower, upper] into `regions`
 * intervals of equal width. Region i (0-based) is [l_i, l_{i+1}); the last
 * region is closed at `upper`, so every value in range has exactly one owner.
 */
class PartitionSpec {
public:
    PartitionSpec() = default;

    double lower() const { return lower_; }
    double upper() const { return upper_; }
    int regions() const { return regions_; }
    double width() const { return (upper_ - lower_) / regions_; }

    /// Boundary l_i for i in [0, regions]; boundary(regions) == upper exactly.
    double boundary(int i) const;
    Interval interval(int region) const { return {boundary(region), boundary(region + 1)}; }

    /// Owning region of `rho`; values outside the range clamp to the first or last region.
    int region_of(double rho) const;

private:
    friend PartitionSpec make_partition(double lower, double upper, int regions);
    double lower_ = 0.0;
    double upper_ = 1.0;
    int regions_ = 1;
};

PartitionSpec make_partition(double lower, double upper, int regions);

/// Per region, the maximal runs of consecutive samples owned by that region with length >= min_len.
std::vector<std::vector<Trajectory>> extract_region_segments(const Trajectory& traj, const PartitionSpec& spec,
                                                             Index min_len);

struct RegionBank {
    PartitionSpec partition;
    std::vector<HankelSet> regional;
    std::vector<HankelSet> composite;
    std::vector<Interval> composite_bounds;
    Index columns = 0;
    std::vector<Index> raw_columns;
    int t_ini = 0;
    int horizon = 0;

    Index composite_columns() const { return 2 * columns; }
};

/// Builds composites [regional[i] | regional[i+1]] and their bounds [l_i, l_{i+2}].
RegionBank make_bank(const PartitionSpec& spec, std::vector<HankelSet> regional);

/// Regional Hankel sets truncated to exactly `columns` each, plus their composites.
/// Throws InsufficientDataError listing every region that delivers too few raw columns.
RegionBank assemble_bank(const Trajectory& traj, const PartitionSpec& spec, int t_ini, int horizon, Index columns,
                         ColumnPolicy policy);

/// Raw (pre-truncation) column count each region would deliver.
std::vector<Index> raw_column_counts(const Trajectory& traj, const PartitionSpec& spec, int t_ini, int horizon);

void save_bank(const RegionBank& bank, const std::filesystem::path& dir);
RegionBank load_bank(const std::filesystem::path& dir);

}  // namespace gsdeepc
