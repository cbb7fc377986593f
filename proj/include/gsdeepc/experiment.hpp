#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "gsdeepc/experiment_config.hpp"

namespace gsdeepc {

struct RunRow {
    double t = 0.0;
    double r = 0.0;
    double u = 0.0;
    double y = 0.0;
    double rho = 0.0;
    int region_idx = 0;
    bool switched = false;
    int solver_iters = 0;
    std::string solver_status;  // optimal | max_iter | primal_infeasible | warmup | fallback
    double g_norm = 0.0;
    double sigma_norm = 0.0;
};

struct RunRecord {
    double ts = 0.0;
    std::vector<RunRow> rows;
    bool aborted = false;
    std::string abort_reason;
    int fallbacks = 0;
    int max_iter_steps = 0;
};

/// Everything the controller saw and returned at one step, for external checks.
struct StepObservation {
    Index step = 0;
    const HankelSet* active = nullptr;
    Eigen::VectorXd u_ini;
    Eigen::VectorXd y_ini;
    Eigen::VectorXd reference;
    const ControlResult* result = nullptr;
};
using StepObserver = std::function<void(const StepObservation&)>;

/// Excitation data for a bank with `regions` regions, seeded from the config. The record is
/// lengthened by doubling until every region yields enough columns or max_duration is reached.
Trajectory collect_data(const ExperimentConfig& cfg, int regions);

/// Regional c from the config (baseline c when regions == 1).
RegionBank build_bank(const ExperimentConfig& cfg, const Trajectory& data, int regions);

/// Closed loop from the resting equilibrium. The first t_ini steps apply u = 0 to fill the
/// initialization buffer; afterwards the scheduler picks the active data set and DeePC acts.
RunRecord run_closed_loop(const ExperimentConfig& cfg, const RegionBank& bank, const StepObserver& observer = {});

struct IntervalError {
    double t0 = 0.0;
    double t1 = 0.0;
    Index samples = 0;
    double rmse = 0.0;
};

struct MetricsReport {
    double rmse_ss = 0.0;
    double rmse_t = 0.0;
    int switch_count = 0;
    Index ss_samples = 0;
    Index transient_samples = 0;
    std::vector<IntervalError> intervals;
    std::vector<std::pair<double, double>> rel_error;  // (t, |y - r| / max(|r|, 0.1)) on steady-state samples
};

/// Steady-state windows [2,3], [6,7], [10,11], [14,15], [18,19] s.
std::vector<std::pair<double, double>> default_ss_windows();

MetricsReport compute_metrics(const RunRecord& rec,
                              const std::vector<std::pair<double, double>>& windows = default_ss_windows());

struct SweepRow {
    int cn = 0;
    std::uint64_t seed = 0;
    double rmse_ss = 0.0;
    double rmse_t = 0.0;
    int switch_count = 0;
    bool feasible = false;
};

/// C_n = 1 is single-region DeePC with the baseline column count; C_n >= 2 uses M_n = C_n + 1
/// regions in composite mode. Starved configurations are reported as infeasible rows.
std::vector<SweepRow> sweep_regions(const ExperimentConfig& base, const std::vector<int>& cn_values,
                                    const std::vector<std::uint64_t>& seeds);

/// Number of composite switches a monotone transition through each reference step needs.
int analytic_composite_switches(const RegionBank& bank, const std::vector<double>& reference, double y0 = 0.0);

inline constexpr const char* kRunSchema = "# schema=gsdeepc.run.v1";
inline constexpr const char* kSweepSchema = "# schema=gsdeepc.sweep.v1";

void write_run_csv(std::ostream& out, const RunRecord& rec);
RunRecord read_run_csv(std::istream& in);
void write_metrics_json(std::ostream& out, const MetricsReport& m);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace gsdeepc
