#include "gsdeepc/region_partition.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include <json.hpp>

#include "gsdeepc/csv.hpp"
#include "gsdeepc/errors.hpp"

namespace gsdeepc {

double PartitionSpec::boundary(int i) const {
    if (i <= 0) return lower_;
    if (i >= regions_) return upper_;
    return lower_ + static_cast<double>(i) * width();
}

int PartitionSpec::region_of(double rho) const {
    if (std::isnan(rho)) throw DimensionError("scheduling variable is NaN");
    if (rho <= lower_) return 0;
    if (rho >= upper_) return regions_ - 1;
    int idx = static_cast<int>(std::floor((rho - lower_) / width()));
    idx = std::clamp(idx, 0, regions_ - 1);
    // The division can land one cell off right at a boundary.
    if (idx > 0 && rho < boundary(idx)) --idx;
    if (idx < regions_ - 1 && rho >= boundary(idx + 1)) ++idx;
    return idx;
}

PartitionSpec make_partition(double lower, double upper, int regions) {
    if (regions < 1) throw ConfigError("number of regions must be at least 1, got " + std::to_string(regions));
    if (!(upper > lower) || !std::isfinite(lower) || !std::isfinite(upper))
        throw ConfigError("partition limits must be finite with upper > lower");
    PartitionSpec spec;
    spec.lower_ = lower;
    spec.upper_ = upper;
    spec.regions_ = regions;
    return spec;
}

std::vector<std::vector<Trajectory>> extract_region_segments(const Trajectory& traj, const PartitionSpec& spec,
                                                             Index min_len) {
    traj.validate();
    std::vector<std::vector<Trajectory>> out(static_cast<std::size_t>(spec.regions()));
    const Index n = traj.length();
    Index start = 0;
    while (start < n) {
        const int region = spec.region_of(traj.rho(start));
        Index end = start + 1;
        while (end < n && spec.region_of(traj.rho(end)) == region) ++end;
        if (end - start >= min_len) out[static_cast<std::size_t>(region)].push_back(traj.slice(start, end - start));
        start = end;
    }
    return out;
}

std::vector<Index> raw_column_counts(const Trajectory& traj, const PartitionSpec& spec, int t_ini, int horizon) {
    const Index depth = t_ini + horizon;
    const auto segments = extract_region_segments(traj, spec, depth);
    std::vector<Index> counts;
    counts.reserve(segments.size());
    for (const auto& segs : segments) {
        Index c = 0;
        for (const auto& s : segs) c += s.length() - depth + 1;
        counts.push_back(c);
    }
    return counts;
}

RegionBank make_bank(const PartitionSpec& spec, std::vector<HankelSet> regional) {
    if (static_cast<int>(regional.size()) != spec.regions())
        throw DimensionError("expected " + std::to_string(spec.regions()) + " regional Hankel sets, got " +
                             std::to_string(regional.size()));
    for (const auto& h : regional)
        if (!h.same_shape(regional.front()))
            throw DimensionError("regional Hankel sets must share t_ini, horizon, dimensions and column count");

    RegionBank bank;
    bank.partition = spec;
    bank.t_ini = regional.front().t_ini;
    bank.horizon = regional.front().horizon;
    bank.columns = regional.front().cols();
    bank.raw_columns.assign(regional.size(), bank.columns);
    for (int i = 0; i + 1 < spec.regions(); ++i) {
        bank.composite.push_back(concat_columns(regional[i], regional[i + 1]));
        bank.composite_bounds.push_back({spec.boundary(i), spec.boundary(i + 2)});
    }
    bank.regional = std::move(regional);
    return bank;
}

RegionBank assemble_bank(const Trajectory& traj, const PartitionSpec& spec, int t_ini, int horizon, Index columns,
                         ColumnPolicy policy) {
    if (columns < 1) throw ConfigError("column target must be positive");
    const Index depth = t_ini + horizon;
    const auto segments = extract_region_segments(traj, spec, depth);

    std::vector<Index> raw(segments.size(), 0);
    std::vector<InsufficientDataError::Deficit> starved;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        for (const auto& s : segments[i]) raw[i] += s.length() - depth + 1;
        if (raw[i] < columns) starved.push_back({static_cast<int>(i), static_cast<long>(raw[i]), static_cast<long>(columns)});
    }
    if (!starved.empty()) {
        std::string msg = "insufficient data for " + std::to_string(starved.size()) + " region(s):";
        for (const auto& d : starved)
            msg += " region " + std::to_string(d.region) + " has " + std::to_string(d.available) + "/" +
                   std::to_string(d.required) + " columns (deficit " + std::to_string(d.required - d.available) + ");";
        throw InsufficientDataError(msg, std::move(starved));
    }

    std::vector<HankelSet> regional;
    regional.reserve(segments.size());
    for (const auto& segs : segments)
        regional.push_back(truncate_columns(build_hankel_set(segs, t_ini, horizon), columns, policy));

    RegionBank bank = make_bank(spec, std::move(regional));
    bank.raw_columns = std::move(raw);
    return bank;
}

namespace {

const char* kBlocks[] = {"Up", "Yp", "Uf", "Yf"};

Eigen::MatrixXd& block(HankelSet& h, int b) {
    switch (b) {
        case 0: return h.up;
        case 1: return h.yp;
        case 2: return h.uf;
        default: return h.yf;
    }
}

std::filesystem::path block_path(const std::filesystem::path& dir, int region, int b) {
    return dir / ("region_" + std::to_string(region) + "_" + kBlocks[b] + ".csv");
}

}  // namespace

void save_bank(const RegionBank& bank, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json meta;
    meta["l_lo"] = bank.partition.lower();
    meta["l_hi"] = bank.partition.upper();
    meta["M_n"] = bank.partition.regions();
    meta["T_ini"] = bank.t_ini;
    meta["N"] = bank.horizon;
    meta["c"] = bank.columns;
    meta["m"] = bank.regional.front().inputs();
    meta["p"] = bank.regional.front().outputs();
    meta["raw_columns"] = bank.raw_columns;
    std::ofstream(dir / "partition.json") << meta.dump(2) << '\n';

    for (int i = 0; i < bank.partition.regions(); ++i) {
        HankelSet h = bank.regional[static_cast<std::size_t>(i)];
        for (int b = 0; b < 4; ++b) {
            std::ofstream out(block_path(dir, i, b));
            if (!out) throw ConfigError("cannot write " + block_path(dir, i, b).string());
            csv::write_matrix(out, block(h, b));
        }
    }
}

RegionBank load_bank(const std::filesystem::path& dir) {
    std::ifstream in(dir / "partition.json");
    if (!in) throw ConfigError("cannot open " + (dir / "partition.json").string());
    nlohmann::json meta;
    try {
        in >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed partition.json: ") + e.what());
    }
    const auto spec = make_partition(meta.at("l_lo").get<double>(), meta.at("l_hi").get<double>(),
                                     meta.at("M_n").get<int>());
    const int t_ini = meta.at("T_ini").get<int>();
    const int horizon = meta.at("N").get<int>();
    const auto m = meta.at("m").get<Index>();
    const auto p = meta.at("p").get<Index>();
    const auto c = meta.at("c").get<Index>();
    const Index expected_rows[] = {m * t_ini, p * t_ini, m * horizon, p * horizon};

    std::vector<HankelSet> regional;
    for (int i = 0; i < spec.regions(); ++i) {
        HankelSet h;
        h.t_ini = t_ini;
        h.horizon = horizon;
        for (int b = 0; b < 4; ++b) {
            std::ifstream f(block_path(dir, i, b));
            if (!f) throw ConfigError("cannot open " + block_path(dir, i, b).string());
            block(h, b) = csv::read_matrix(f);
            if (block(h, b).rows() != expected_rows[b] || block(h, b).cols() != c)
                throw DimensionError(block_path(dir, i, b).string() + " does not match partition.json dimensions");
        }
        regional.push_back(std::move(h));
    }
    RegionBank bank = make_bank(spec, std::move(regional));
    if (meta.contains("raw_columns")) bank.raw_columns = meta["raw_columns"].get<std::vector<Index>>();
    return bank;
}

}  // namespace gsdeepc
