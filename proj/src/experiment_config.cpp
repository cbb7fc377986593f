#include "gsdeepc/experiment_config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>

#include "gsdeepc/csv.hpp"
#include "gsdeepc/errors.hpp"

namespace gsdeepc {

namespace {

struct Entry {
    const char* key;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

std::string fmt(double v) { return csv::format_double(v); }

std::string fmt_list(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt(v[i]);
    return out;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    for (auto f : csv::split(text))
        if (!csv::trim(f).empty()) out.push_back(csv::parse_double(f));
    return out;
}

int parse_int(const std::string& s) { return static_cast<int>(csv::parse_long(s)); }

bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError("expected true/false, got '" + s + "'");
}

#define DOUBLE_ENTRY(name, field) \
    Entry { name, [](const ExperimentConfig& c) { return fmt(c.field); }, [](ExperimentConfig& c, const std::string& v) { c.field = csv::parse_double(v); } }
#define INT_ENTRY(name, field) \
    Entry { name, [](const ExperimentConfig& c) { return std::to_string(c.field); }, [](ExperimentConfig& c, const std::string& v) { c.field = parse_int(v); } }
#define SCALAR_MATRIX_ENTRY(name, field) \
    Entry { name, [](const ExperimentConfig& c) { return fmt(c.field(0, 0)); }, [](ExperimentConfig& c, const std::string& v) { c.field = Eigen::MatrixXd::Constant(1, 1, csv::parse_double(v)); } }
#define SCALAR_VECTOR_ENTRY(name, field) \
    Entry { name, [](const ExperimentConfig& c) { return fmt(c.field(0)); }, [](ExperimentConfig& c, const std::string& v) { c.field = Eigen::VectorXd::Constant(1, csv::parse_double(v)); } }

const std::vector<Entry>& entries() {
    static const std::vector<Entry> table = {
        DOUBLE_ENTRY("plant.mass", plant.mass),
        DOUBLE_ENTRY("plant.gravity", plant.gravity),
        DOUBLE_ENTRY("plant.length", plant.length),
        DOUBLE_ENTRY("plant.inertia", plant.inertia),
        DOUBLE_ENTRY("plant.tau", plant.tau),
        DOUBLE_ENTRY("plant.motor_gain", plant.motor_gain),
        DOUBLE_ENTRY("plant.ts", plant.ts),
        INT_ENTRY("plant.substeps", plant.substeps),
        DOUBLE_ENTRY("partition.lower", rho_lower),
        DOUBLE_ENTRY("partition.upper", rho_upper),
        INT_ENTRY("partition.regions", regions),
        INT_ENTRY("controller.t_ini", controller.t_ini),
        INT_ENTRY("controller.horizon", controller.horizon),
        SCALAR_MATRIX_ENTRY("controller.q", controller.Q),
        SCALAR_MATRIX_ENTRY("controller.r", controller.R),
        DOUBLE_ENTRY("controller.lambda_g", controller.lambda_g),
        DOUBLE_ENTRY("controller.lambda_ini", controller.lambda_ini),
        SCALAR_VECTOR_ENTRY("controller.u_min", controller.u_min),
        SCALAR_VECTOR_ENTRY("controller.u_max", controller.u_max),
        SCALAR_VECTOR_ENTRY("controller.y_min", controller.y_min),
        SCALAR_VECTOR_ENTRY("controller.y_max", controller.y_max),
        DOUBLE_ENTRY("solver.eps_abs", solver.eps_abs),
        DOUBLE_ENTRY("solver.eps_rel", solver.eps_rel),
        INT_ENTRY("solver.max_iter", solver.max_iter),
        DOUBLE_ENTRY("solver.rho", solver.rho_admm),
        DOUBLE_ENTRY("solver.alpha", solver.alpha),
        Entry{"solver.polish", [](const ExperimentConfig& c) { return std::string(c.solver.polish ? "true" : "false"); },
              [](ExperimentConfig& c, const std::string& v) { c.solver.polish = parse_bool(v); }},
        Entry{"scheduler.mode", [](const ExperimentConfig& c) { return std::string(to_string(c.mode)); },
              [](ExperimentConfig& c, const std::string& v) {
                  auto m = parse_switching_mode(v);
                  if (!m) throw ConfigError("unknown scheduler mode '" + v + "'");
                  c.mode = *m;
              }},
        INT_ENTRY("scheduler.dwell", dwell_steps),
        DOUBLE_ENTRY("data.duration", data.excitation.duration),
        INT_ENTRY("data.rbs_count", data.excitation.rbs_count),
        DOUBLE_ENTRY("data.rbs_level", data.rbs_level),
        INT_ENTRY("data.hold_min", data.excitation.hold_min),
        INT_ENTRY("data.hold_max", data.excitation.hold_max),
        DOUBLE_ENTRY("data.boundary_fraction", data.excitation.boundary_fraction),
        DOUBLE_ENTRY("data.bias_level", data.bias_level),
        DOUBLE_ENTRY("data.noise_std", data.excitation.noise_std),
        Entry{"data.seed", [](const ExperimentConfig& c) { return std::to_string(c.data.excitation.seed); },
              [](ExperimentConfig& c, const std::string& v) {
                  try {
                      std::size_t pos = 0;
                      c.data.excitation.seed = std::stoull(v, &pos);
                      if (pos != v.size()) throw ConfigError("");
                  } catch (const std::exception&) {
                      throw ConfigError("data.seed must be an unsigned 64-bit integer, got '" + v + "'");
                  }
              }},
        Entry{"data.columns", [](const ExperimentConfig& c) { return std::to_string(c.data.columns); },
              [](ExperimentConfig& c, const std::string& v) { c.data.columns = csv::parse_long(v); }},
        Entry{"data.baseline_columns", [](const ExperimentConfig& c) { return std::to_string(c.data.baseline_columns); },
              [](ExperimentConfig& c, const std::string& v) { c.data.baseline_columns = csv::parse_long(v); }},
        Entry{"data.policy",
              [](const ExperimentConfig& c) {
                  return std::string(c.data.policy == ColumnPolicy::first ? "first" : "uniform");
              },
              [](ExperimentConfig& c, const std::string& v) {
                  if (v == "first") c.data.policy = ColumnPolicy::first;
                  else if (v == "uniform") c.data.policy = ColumnPolicy::uniform;
                  else throw ConfigError("data.policy must be first or uniform");
              }},
        INT_ENTRY("data.autoscale_regions", data.autoscale_regions),
        DOUBLE_ENTRY("data.max_duration", data.max_duration),
        DOUBLE_ENTRY("run.duration", run.duration),
        Entry{"run.step_times", [](const ExperimentConfig& c) { return fmt_list(c.run.step_times); },
              [](ExperimentConfig& c, const std::string& v) { c.run.step_times = parse_list(v); }},
        Entry{"run.step_values", [](const ExperimentConfig& c) { return fmt_list(c.run.step_values); },
              [](ExperimentConfig& c, const std::string& v) { c.run.step_values = parse_list(v); }},
        Entry{"output.dir", [](const ExperimentConfig& c) { return c.output_dir; },
              [](ExperimentConfig& c, const std::string& v) { c.output_dir = v; }},
    };
    return table;
}

#undef DOUBLE_ENTRY
#undef INT_ENTRY
#undef SCALAR_MATRIX_ENTRY
#undef SCALAR_VECTOR_ENTRY

}  // namespace

void ExperimentConfig::validate() const {
    plant.validate();
    controller.validate();
    make_partition(rho_lower, rho_upper, regions);
    if (data.columns < 1 || data.baseline_columns < 1) throw ConfigError("column counts must be positive");
    if (dwell_steps < 0) throw ConfigError("dwell time must be non-negative");
    if (!(run.duration > 0.0)) throw ConfigError("run duration must be positive");
    if (!(data.excitation.duration > 0.0)) throw ConfigError("data duration must be positive");
    if (data.max_duration < data.excitation.duration)
        throw ConfigError("data.max_duration must not be shorter than data.duration");
    if (data.rbs_level < 0.0 || data.bias_level < 0.0) throw ConfigError("excitation levels must be non-negative");
    if (controller.inputs() != 1 || controller.outputs() != 1)
        throw ConfigError("the benchmark plant is single-input single-output");
    generate_reference(run.step_times, run.step_values, run.duration, plant.ts, controller.y_min(0),
                       controller.y_max(0));
}

ExcitationParams ExperimentConfig::excitation_for(int n_regions) const {
    ExcitationParams ex = data.excitation;
    if (data.autoscale_regions > 0)
        ex.duration *= std::max(1.0, static_cast<double>(n_regions) / data.autoscale_regions);
    const double hold = plant.holding_voltage();
    ex.rbs_amplitude = data.rbs_level * hold;
    ex.bias_amplitude = data.bias_level * hold;
    ex.u_min = controller.u_min(0);
    ex.u_max = controller.u_max(0);
    ex.y_lower = rho_lower;
    ex.y_upper = rho_upper;
    return ex;
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& e : entries()) {
        if (key == e.key) {
            e.set(cfg, value);
            return;
        }
    }
    throw ConfigError("unknown configuration key '" + key + "'");
}

ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto text = csv::trim(line);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
        const std::string key(csv::trim(text.substr(0, eq)));
        const std::string value(csv::trim(text.substr(eq + 1)));
        try {
            apply_setting(cfg, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return parse_config(in);
}

void write_config(std::ostream& out, const ExperimentConfig& cfg) {
    for (const auto& e : entries()) out << e.key << '=' << e.get(cfg) << '\n';
}

}  // namespace gsdeepc
