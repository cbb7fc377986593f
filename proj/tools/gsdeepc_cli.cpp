// Command-line front end: data collection, bank construction, closed-loop runs, sweeps and metrics.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gsdeepc/csv.hpp"
#include "gsdeepc/errors.hpp"
#include "gsdeepc/experiment.hpp"

namespace fs = std::filesystem;
using namespace gsdeepc;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string mode;
    std::optional<int> regions;
    std::string data;
    std::string bank;
    std::string input;
    std::string cn_list = "1..40";
    std::string seeds;
};

std::string json_escape(const std::string& s) { return nlohmann::json(s).dump(); }

void error_line(const char* kind, const std::string& message) {
    std::cerr << "error kind=" << kind << " message=" << json_escape(message) << '\n';
}

ExperimentConfig resolve_config(const Options& opt) {
    ExperimentConfig cfg = opt.config.empty() ? ExperimentConfig{} : load_config(opt.config);
    if (opt.seed) cfg.data.excitation.seed = *opt.seed;
    if (!opt.out.empty()) cfg.output_dir = opt.out;
    if (!opt.mode.empty()) {
        auto m = parse_switching_mode(opt.mode);
        if (!m) throw ConfigError("unknown mode '" + opt.mode + "'");
        cfg.mode = *m;
    }
    if (opt.regions) cfg.regions = *opt.regions;
    cfg.validate();
    return cfg;
}

std::vector<int> parse_cn_list(const std::string& text) {
    std::vector<int> out;
    if (auto dots = text.find(".."); dots != std::string::npos) {
        const long lo = csv::parse_long(text.substr(0, dots));
        const long hi = csv::parse_long(text.substr(dots + 2));
        if (lo < 1 || hi < lo) throw ConfigError("invalid C_n range '" + text + "'");
        for (long c = lo; c <= hi; ++c) out.push_back(static_cast<int>(c));
        return out;
    }
    for (auto f : csv::split(text)) out.push_back(static_cast<int>(csv::parse_long(f)));
    return out;
}

std::ofstream open_out(const fs::path& path) {
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    return out;
}

Trajectory load_or_collect(const Options& opt, const ExperimentConfig& cfg) {
    if (!opt.data.empty()) {
        std::ifstream in(opt.data);
        if (!in) throw ConfigError("cannot open " + opt.data);
        return read_trajectory_csv(in, cfg.plant.ts);
    }
    return collect_data(cfg, cfg.regions);
}

int cmd_collect(const Options& opt) {
    const auto cfg = resolve_config(opt);
    const Trajectory data = collect_data(cfg, cfg.regions);
    const fs::path dir = cfg.output_dir;
    auto out = open_out(dir / "data.csv");
    write_trajectory_csv(out, data);

    const auto spec = make_partition(cfg.rho_lower, cfg.rho_upper, cfg.regions);
    const auto report = coverage_report(data, spec, cfg.controller.t_ini, cfg.controller.horizon);
    nlohmann::ordered_json j;
    j["samples"] = data.length();
    j["regions"] = cfg.regions;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& e : report)
        arr.push_back({{"region", e.region}, {"samples", e.samples}, {"segments", e.segments}, {"columns", e.columns}});
    j["coverage"] = arr;
    open_out(dir / "coverage.json") << j.dump(2) << '\n';
    std::cout << "wrote " << (dir / "data.csv").string() << " (" << data.length() << " samples)\n";
    return 0;
}

int cmd_build(const Options& opt) {
    const auto cfg = resolve_config(opt);
    const Trajectory data = load_or_collect(opt, cfg);
    const RegionBank bank = build_bank(cfg, data, cfg.regions);
    const fs::path dir = fs::path(cfg.output_dir) / "bank";
    save_bank(bank, dir);
    std::cout << "wrote " << dir.string() << " (" << bank.partition.regions() << " regions, c=" << bank.columns
              << ")\n";
    return 0;
}

int cmd_run(const Options& opt) {
    const auto cfg = resolve_config(opt);
    RegionBank bank;
    if (!opt.bank.empty()) {
        bank = load_bank(opt.bank);
    } else {
        const Trajectory data = load_or_collect(opt, cfg);
        bank = build_bank(cfg, data, cfg.regions);
    }
    const RunRecord rec = run_closed_loop(cfg, bank);
    const fs::path dir = cfg.output_dir;
    auto out = open_out(dir / "run.csv");
    write_run_csv(out, rec);
    const MetricsReport m = compute_metrics(rec);
    auto mj = open_out(dir / "metrics.json");
    write_metrics_json(mj, m);
    std::cout << "rmse_ss=" << m.rmse_ss << " rmse_t=" << m.rmse_t << " switches=" << m.switch_count << '\n';
    if (rec.aborted) {
        error_line("runtime", "simulation aborted: " + rec.abort_reason);
        return kExitRuntime;
    }
    return 0;
}

int cmd_sweep(const Options& opt) {
    const auto cfg = resolve_config(opt);
    const auto cns = parse_cn_list(opt.cn_list);
    std::vector<std::uint64_t> seeds;
    if (opt.seeds.empty()) {
        seeds.push_back(cfg.data.excitation.seed);
    } else {
        for (auto f : csv::split(opt.seeds)) seeds.push_back(static_cast<std::uint64_t>(csv::parse_long(f)));
    }
    const auto rows = sweep_regions(cfg, cns, seeds);
    auto out = open_out(fs::path(cfg.output_dir) / "sweep.csv");
    write_sweep_csv(out, rows);
    for (const auto& r : rows)
        std::cout << "cn=" << r.cn << " seed=" << r.seed << " rmse_ss=" << r.rmse_ss << " rmse_t=" << r.rmse_t
                  << (r.feasible ? "" : " (infeasible)") << '\n';
    return 0;
}

int cmd_metrics(const Options& opt) {
    if (opt.input.empty()) throw ConfigError("metrics needs --in <run.csv>");
    std::ifstream in(opt.input);
    if (!in) throw ConfigError("cannot open " + opt.input);
    const RunRecord rec = read_run_csv(in);
    const MetricsReport m = compute_metrics(rec);
    if (opt.out.empty()) {
        write_metrics_json(std::cout, m);
    } else {
        auto out = open_out(fs::path(opt.out) / "metrics.json");
        write_metrics_json(out, m);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gain-scheduled DeePC toolkit"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "key=value configuration file");
        sub->add_option("--seed", opt.seed, "excitation seed");
        sub->add_option("--out", opt.out, "output directory");
        sub->add_option("--mode", opt.mode, "plain | dwell_selective | dwell_full | composite");
        sub->add_option("--regions", opt.regions, "number of regions M_n");
    };

    auto* collect = app.add_subcommand("collect", "generate excitation data and a coverage report");
    add_common(collect);
    auto* build = app.add_subcommand("build", "build and save a region bank");
    add_common(build);
    build->add_option("--data", opt.data, "trajectory CSV (collected on the fly when omitted)");
    auto* run = app.add_subcommand("run", "closed-loop run with metrics");
    add_common(run);
    run->add_option("--data", opt.data, "trajectory CSV");
    run->add_option("--bank", opt.bank, "saved region bank directory");
    auto* sweep = app.add_subcommand("sweep", "composite-region count sweep");
    add_common(sweep);
    sweep->add_option("--cn", opt.cn_list, "C_n values, e.g. 1..40 or 1,2,4");
    sweep->add_option("--seeds", opt.seeds, "comma-separated excitation seeds");
    auto* metrics = app.add_subcommand("metrics", "metrics of a saved run CSV");
    metrics->add_option("--in", opt.input, "run CSV");
    metrics->add_option("--out", opt.out, "output directory (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        error_line("usage", e.what());
        std::cerr << app.help();
        return kExitConfig;
    }

    try {
        if (*collect) return cmd_collect(opt);
        if (*build) return cmd_build(opt);
        if (*run) return cmd_run(opt);
        if (*sweep) return cmd_sweep(opt);
        if (*metrics) return cmd_metrics(opt);
    } catch (const ConfigError& e) {
        error_line("config", e.what());
        return kExitConfig;
    } catch (const InsufficientDataError& e) {
        error_line("insufficient_data", e.what());
        for (const auto& d : e.deficits())
            std::cerr << "region " << d.region << " available=" << d.available << " required=" << d.required
                      << " deficit=" << (d.required - d.available) << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        error_line("runtime", e.what());
        return kExitRuntime;
    }
    return kExitConfig;
}
