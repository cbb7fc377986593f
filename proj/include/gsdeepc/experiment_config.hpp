#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "gsdeepc/deepc_controller.hpp"
#include "gsdeepc/plant_sim.hpp"
#include "gsdeepc/qp_solver.hpp"
#include "gsdeepc/scheduler.hpp"

namespace gsdeepc {

struct DataConfig {
    ExcitationParams excitation;  // limits are overwritten from the partition and input bounds
    Index columns = 200;           // regional c
    Index baseline_columns = 800;  // single-region DeePC
    ColumnPolicy policy = ColumnPolicy::uniform;
    // Collection duration scales with max(1, M_n / autoscale_regions); 0 disables scaling.
    int autoscale_regions = 8;
    // The collection is doubled until every region delivers its columns, up to this length.
    double max_duration = 32000.0;  // s
    // RBS and bias levels as multiples of the plant's holding voltage; these
    // replace the absolute amplitudes in `excitation`.
    double rbs_level = 2.5;
    double bias_level = 1.05;
};

struct RunConfig {
    double duration = 20.0;
    std::vector<double> step_times{0.0, 4.0, 8.0, 12.0, 16.0};
    std::vector<double> step_values{1.0, 2.5, -0.5, -2.2, 1.6};
};

/**
 * Everything that defines one experiment. Defaults reproduce the benchmark
 * setting: disc parameters, horizons N = 5 and T_ini = 2, Q = 100, R = 0.05,
 * lambda_ini = 1e6, lambda_g = 1e3, c = 200 (800 for plain DeePC).
 */
struct ExperimentConfig {
    PlantParams plant;
    double rho_lower = -3.14159265358979323846;
    double rho_upper = 3.14159265358979323846;
    int regions = 16;
    ControllerConfig controller;
    QpSettings solver;
    SwitchingMode mode = SwitchingMode::composite;
    int dwell_steps = 10;
    DataConfig data;
    RunConfig run;
    std::string output_dir = "out";

    void validate() const;

    /// Excitation settings for a bank with `regions` regions (duration auto-scaled, limits synced).
    ExcitationParams excitation_for(int regions) const;
};

/// Applies one `section.key=value` assignment. Unknown keys raise ConfigError.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Parses key=value lines; '#' starts a comment. Starts from the defaults.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Writes every key; parse_config(write_config(cfg)) reproduces cfg exactly.
void write_config(std::ostream& out, const ExperimentConfig& cfg);

}  // namespace gsdeepc
