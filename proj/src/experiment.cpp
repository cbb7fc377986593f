#include "gsdeepc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <istream>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "gsdeepc/csv.hpp"
#include "gsdeepc/errors.hpp"

namespace gsdeepc {

namespace {

constexpr const char* kRunHeader = "t,r,u,y,rho,region_idx,switch_flag,solver_iters,solver_status,g_norm,sigma_norm";
constexpr const char* kSweepHeader = "cn,seed,rmse_ss,rmse_t,switch_count,feasible";
constexpr double kTimeTol = 1e-9;
constexpr double kRelErrorFloor = 0.1;

}  // namespace

Trajectory collect_data(const ExperimentConfig& cfg, int regions) {
    const auto spec = make_partition(cfg.rho_lower, cfg.rho_upper, regions);
    const Index columns = regions == 1 ? cfg.data.baseline_columns : cfg.data.columns;
    ExcitationParams ex = cfg.excitation_for(regions);
    ex.duration = std::min(ex.duration, cfg.data.max_duration);
    for (;;) {
        Trajectory data = generate_excitation(cfg.plant, ex);
        const auto counts = raw_column_counts(data, spec, cfg.controller.t_ini, cfg.controller.horizon);
        const bool enough = *std::min_element(counts.begin(), counts.end()) >= columns;
        if (enough || ex.duration >= cfg.data.max_duration) return data;
        ex.duration = std::min(2.0 * ex.duration, cfg.data.max_duration);
    }
}

RegionBank build_bank(const ExperimentConfig& cfg, const Trajectory& data, int regions) {
    const auto spec = make_partition(cfg.rho_lower, cfg.rho_upper, regions);
    const Index columns = regions == 1 ? cfg.data.baseline_columns : cfg.data.columns;
    return assemble_bank(data, spec, cfg.controller.t_ini, cfg.controller.horizon, columns, cfg.data.policy);
}

RunRecord run_closed_loop(const ExperimentConfig& cfg, const RegionBank& bank, const StepObserver& observer) {
    cfg.validate();
    if (bank.t_ini != cfg.controller.t_ini || bank.horizon != cfg.controller.horizon)
        throw ConfigError("region bank horizons do not match the controller configuration");

    const auto reference = generate_reference(cfg.run.step_times, cfg.run.step_values, cfg.run.duration,
                                              cfg.plant.ts, cfg.controller.y_min(0), cfg.controller.y_max(0));
    const auto steps = static_cast<Index>(reference.size());
    const int t_ini = cfg.controller.t_ini;
    const int horizon = cfg.controller.horizon;

    DeepcController controller(cfg.controller, cfg.solver);
    Scheduler scheduler(bank, cfg.mode, cfg.dwell_steps);
    InitBuffer buffer(t_ini, 1, 1);
    PlantState state{};

    RunRecord rec;
    rec.ts = cfg.plant.ts;
    rec.rows.reserve(static_cast<std::size_t>(steps));
    double u_prev = 0.0;

    for (Index k = 0; k < steps; ++k) {
        RunRow row;
        row.t = static_cast<double>(k) * cfg.plant.ts;
        row.r = reference[static_cast<std::size_t>(k)];
        row.y = state.angle;
        row.rho = row.y;
        row.region_idx = scheduler.update(row.rho);
        row.switched = scheduler.switched();

        double u = 0.0;
        if (k < t_ini) {
            row.solver_status = "warmup";
        } else {
            Eigen::VectorXd r_h(horizon);
            for (int j = 0; j < horizon; ++j)
                r_h(j) = reference[static_cast<std::size_t>(std::min<Index>(k + j, steps - 1))];
            try {
                const HankelSet& active = scheduler.active_set();
                const ControlResult res = controller.step(active, buffer, r_h);
                u = res.u_apply(0);
                row.solver_iters = res.solver.iterations;
                row.solver_status = std::string(to_string(res.solver.status));
                row.g_norm = res.g_norm;
                row.sigma_norm = res.sigma_norm;
                if (res.solver.status == QpStatus::max_iter) {
                    ++rec.max_iter_steps;
                    std::cerr << "warning: QP hit max_iter at t=" << row.t << " s, applying best iterate\n";
                }
                if (observer) observer({k, &active, buffer.u_ini(), buffer.y_ini(), r_h, &res});
            } catch (const SolverError& e) {
                u = u_prev;
                row.solver_status = "fallback";
                ++rec.fallbacks;
                std::cerr << "warning: " << e.what() << " at t=" << row.t << " s, holding previous input\n";
            }
        }
        row.u = u;
        buffer.push(Eigen::VectorXd::Constant(1, u), Eigen::VectorXd::Constant(1, row.y));
        rec.rows.push_back(row);

        try {
            state = step_plant(state, u, cfg.plant);
        } catch (const DivergenceError& e) {
            rec.aborted = true;
            rec.abort_reason = e.what();
            break;
        }
        u_prev = u;
    }
    return rec;
}

std::vector<std::pair<double, double>> default_ss_windows() {
    return {{2.0, 3.0}, {6.0, 7.0}, {10.0, 11.0}, {14.0, 15.0}, {18.0, 19.0}};
}

MetricsReport compute_metrics(const RunRecord& rec, const std::vector<std::pair<double, double>>& windows) {
    MetricsReport m;
    double ss_sum = 0.0;
    double t_sum = 0.0;
    const double t_end = rec.rows.empty() ? 0.0 : rec.rows.back().t;
    for (const auto& [a, b] : windows) {
        if (b > t_end + kTimeTol)
            std::cerr << "warning: record ends at t=" << t_end << " s, steady-state window [" << a << ", " << b
                      << "] is not fully covered\n";
        m.intervals.push_back({a, b, 0, 0.0});
    }
    for (const auto& row : rec.rows) {
        const double e = row.y - row.r;
        if (row.switched) ++m.switch_count;
        int window = -1;
        for (std::size_t i = 0; i < windows.size(); ++i)
            if (row.t >= windows[i].first - kTimeTol && row.t <= windows[i].second + kTimeTol) {
                window = static_cast<int>(i);
                break;
            }
        if (window >= 0) {
            ss_sum += e * e;
            ++m.ss_samples;
            auto& iv = m.intervals[static_cast<std::size_t>(window)];
            iv.rmse += e * e;
            ++iv.samples;
            m.rel_error.emplace_back(row.t, std::abs(e) / std::max(std::abs(row.r), kRelErrorFloor));
        } else {
            t_sum += e * e;
            ++m.transient_samples;
        }
    }
    if (m.ss_samples == 0) throw DimensionError("record has no samples inside the steady-state windows");
    for (auto& iv : m.intervals) iv.rmse = iv.samples > 0 ? std::sqrt(iv.rmse / iv.samples) : 0.0;
    m.rmse_ss = std::sqrt(ss_sum / m.ss_samples);
    m.rmse_t = m.transient_samples > 0 ? std::sqrt(t_sum / m.transient_samples) : 0.0;
    return m;
}

std::vector<SweepRow> sweep_regions(const ExperimentConfig& base, const std::vector<int>& cn_values,
                                    const std::vector<std::uint64_t>& seeds) {
    std::vector<SweepRow> rows;
    for (int cn : cn_values) {
        if (cn < 1) throw ConfigError("composite region count must be >= 1");
        for (auto seed : seeds) {
            SweepRow row;
            row.cn = cn;
            row.seed = seed;
            ExperimentConfig cfg = base;
            cfg.data.excitation.seed = seed;
            cfg.regions = cn == 1 ? 1 : cn + 1;
            cfg.mode = SwitchingMode::composite;
            try {
                const Trajectory data = collect_data(cfg, cfg.regions);
                const RegionBank bank = build_bank(cfg, data, cfg.regions);
                const RunRecord rec = run_closed_loop(cfg, bank);
                const MetricsReport m = compute_metrics(rec);
                row.rmse_ss = m.rmse_ss;
                row.rmse_t = m.rmse_t;
                row.switch_count = m.switch_count;
                row.feasible = !rec.aborted;
            } catch (const InsufficientDataError& e) {
                std::cerr << "warning: C_n=" << cn << " seed=" << seed << ": " << e.what() << '\n';
                row.rmse_ss = row.rmse_t = std::numeric_limits<double>::quiet_NaN();
                row.feasible = false;
            }
            rows.push_back(row);
        }
    }
    return rows;
}

int analytic_composite_switches(const RegionBank& bank, const std::vector<double>& reference, double y0) {
    if (bank.partition.regions() < 2) return 0;
    SchedulerState state = initial_state(SwitchingMode::composite, y0, bank);
    int switches = 0;
    double from = y0;
    constexpr int kRampPoints = 2000;
    for (double to : reference) {
        if (to == from) continue;
        for (int i = 1; i <= kRampPoints; ++i) {
            const double rho = from + (to - from) * i / kRampPoints;
            const int before = state.active_index;
            state = select_composite(rho, bank, state).second;
            if (state.active_index != before) ++switches;
        }
        from = to;
    }
    return switches;
}

void write_run_csv(std::ostream& out, const RunRecord& rec) {
    out << kRunSchema << '\n' << kRunHeader << '\n';
    for (const auto& r : rec.rows) {
        out << csv::format_double(r.t) << ',' << csv::format_double(r.r) << ',' << csv::format_double(r.u) << ','
            << csv::format_double(r.y) << ',' << csv::format_double(r.rho) << ',' << r.region_idx << ','
            << (r.switched ? 1 : 0) << ',' << r.solver_iters << ',' << r.solver_status << ','
            << csv::format_double(r.g_norm) << ',' << csv::format_double(r.sigma_norm) << '\n';
    }
}

RunRecord read_run_csv(std::istream& in) {
    RunRecord rec;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        const auto text = csv::trim(line);
        if (text.empty() || text.front() == '#') continue;
        if (!header) {
            if (text != kRunHeader) throw ConfigError("run CSV header mismatch, expected " + std::string(kRunHeader));
            header = true;
            continue;
        }
        const auto f = csv::split(text);
        if (f.size() != 11) throw ConfigError("run CSV row with " + std::to_string(f.size()) + " fields");
        RunRow r;
        r.t = csv::parse_double(f[0]);
        r.r = csv::parse_double(f[1]);
        r.u = csv::parse_double(f[2]);
        r.y = csv::parse_double(f[3]);
        r.rho = csv::parse_double(f[4]);
        r.region_idx = static_cast<int>(csv::parse_long(f[5]));
        r.switched = csv::parse_long(f[6]) != 0;
        r.solver_iters = static_cast<int>(csv::parse_long(f[7]));
        r.solver_status = std::string(f[8]);
        r.g_norm = csv::parse_double(f[9]);
        r.sigma_norm = csv::parse_double(f[10]);
        rec.rows.push_back(std::move(r));
    }
    if (!header) throw ConfigError("run CSV is empty");
    if (rec.rows.size() >= 2) rec.ts = rec.rows[1].t - rec.rows[0].t;
    return rec;
}

void write_metrics_json(std::ostream& out, const MetricsReport& m) {
    nlohmann::ordered_json j;
    j["rmse_ss"] = m.rmse_ss;
    j["rmse_t"] = m.rmse_t;
    j["switch_count"] = m.switch_count;
    j["ss_samples"] = m.ss_samples;
    j["transient_samples"] = m.transient_samples;
    auto intervals = nlohmann::ordered_json::array();
    for (const auto& iv : m.intervals)
        intervals.push_back({{"t0", iv.t0}, {"t1", iv.t1}, {"samples", iv.samples}, {"rmse", iv.rmse}});
    j["intervals"] = intervals;
    out << j.dump(2) << '\n';
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << kSweepSchema << '\n' << kSweepHeader << '\n';
    for (const auto& r : rows) {
        out << r.cn << ',' << r.seed << ',' << (r.feasible ? csv::format_double(r.rmse_ss) : std::string("nan")) << ','
            << (r.feasible ? csv::format_double(r.rmse_t) : std::string("nan")) << ',' << r.switch_count << ','
            << (r.feasible ? 1 : 0) << '\n';
    }
}

}  // namespace gsdeepc
