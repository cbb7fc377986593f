#include "gsdeepc/signal_core.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "gsdeepc/csv.hpp"
#include "gsdeepc/errors.hpp"

namespace gsdeepc {

void Trajectory::validate() const {
    if (!(ts > 0.0)) throw ConfigError("trajectory sampling period must be positive");
    if (u.rows() < 1 || y.rows() < 1) throw DimensionError("trajectory needs at least one input and one output channel");
    if (y.cols() != u.cols() || rho.size() != u.cols())
        throw DimensionError("trajectory channels have different lengths (u=" + std::to_string(u.cols()) +
                             ", y=" + std::to_string(y.cols()) + ", rho=" + std::to_string(rho.size()) + ")");
}

Trajectory Trajectory::slice(Index begin, Index count) const {
    if (begin < 0 || count < 0 || begin + count > length())
        throw DimensionError("trajectory slice out of range");
    return Trajectory{u.middleCols(begin, count), y.middleCols(begin, count), rho.segment(begin, count), ts};
}

bool HankelSet::same_shape(const HankelSet& other) const {
    return t_ini == other.t_ini && horizon == other.horizon && up.rows() == other.up.rows() &&
           yp.rows() == other.yp.rows() && uf.rows() == other.uf.rows() && yf.rows() == other.yf.rows() &&
           cols() == other.cols();
}

Eigen::MatrixXd build_hankel(const Eigen::MatrixXd& data, Index block_rows) {
    if (block_rows < 1) throw DimensionError("Hankel matrix needs at least one block row");
    const Index len = data.cols();
    if (len < block_rows)
        throw DimensionError("Hankel matrix with " + std::to_string(block_rows) + " block rows needs at least " +
                             std::to_string(block_rows) + " samples, got " + std::to_string(len));
    const Index dim = data.rows();
    const Index cols = len - block_rows + 1;
    Eigen::MatrixXd h(dim * block_rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < block_rows; ++i) h.block(i * dim, j, dim, 1) = data.col(i + j);
    return h;
}

HankelSet build_hankel_set(std::span<const Trajectory> segments, int t_ini, int horizon) {
    if (t_ini < 1 || horizon < 1) throw DimensionError("t_ini and horizon must be positive");
    if (segments.empty()) throw DimensionError("no segments to build a Hankel set from");
    const Index depth = t_ini + horizon;
    const Index m = segments.front().inputs();
    const Index p = segments.front().outputs();

    Index total = 0;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        const auto& seg = segments[s];
        if (seg.inputs() != m || seg.outputs() != p || seg.ts != segments.front().ts)
            throw DimensionError("segment " + std::to_string(s) + " does not share m, p and ts with segment 0");
        if (seg.length() < depth)
            throw DimensionError("segment " + std::to_string(s) + " has " + std::to_string(seg.length()) +
                                 " samples, needs at least " + std::to_string(depth));
        total += seg.length() - depth + 1;
    }

    Eigen::MatrixXd hu(m * depth, total);
    Eigen::MatrixXd hy(p * depth, total);
    Index offset = 0;
    for (const auto& seg : segments) {
        const Index c = seg.length() - depth + 1;
        hu.middleCols(offset, c) = build_hankel(seg.u, depth);
        hy.middleCols(offset, c) = build_hankel(seg.y, depth);
        offset += c;
    }

    HankelSet h;
    h.t_ini = t_ini;
    h.horizon = horizon;
    h.up = hu.topRows(m * t_ini);
    h.uf = hu.bottomRows(m * horizon);
    h.yp = hy.topRows(p * t_ini);
    h.yf = hy.bottomRows(p * horizon);
    return h;
}

std::vector<Index> select_columns(Index available, Index target, ColumnPolicy policy) {
    if (target < 0) throw DimensionError("negative column target");
    if (available < target)
        throw InsufficientDataError("Hankel set has " + std::to_string(available) + " columns, " +
                                        std::to_string(target) + " required (deficit " +
                                        std::to_string(target - available) + ")",
                                    {{-1, available, target}});
    std::vector<Index> idx(static_cast<std::size_t>(target));
    for (Index j = 0; j < target; ++j)
        idx[j] = policy == ColumnPolicy::first ? j : (j * available) / target;
    return idx;
}

HankelSet select_columns(const HankelSet& h, std::span<const Index> indices) {
    HankelSet out;
    out.t_ini = h.t_ini;
    out.horizon = h.horizon;
    const auto cols = static_cast<Index>(indices.size());
    out.up.resize(h.up.rows(), cols);
    out.yp.resize(h.yp.rows(), cols);
    out.uf.resize(h.uf.rows(), cols);
    out.yf.resize(h.yf.rows(), cols);
    for (Index j = 0; j < cols; ++j) {
        const Index src = indices[j];
        if (src < 0 || src >= h.cols()) throw DimensionError("column index out of range");
        out.up.col(j) = h.up.col(src);
        out.yp.col(j) = h.yp.col(src);
        out.uf.col(j) = h.uf.col(src);
        out.yf.col(j) = h.yf.col(src);
    }
    return out;
}

HankelSet truncate_columns(const HankelSet& h, Index target, ColumnPolicy policy) {
    const auto idx = select_columns(h.cols(), target, policy);
    return select_columns(h, idx);
}

HankelSet concat_columns(const HankelSet& a, const HankelSet& b) {
    if (a.t_ini != b.t_ini || a.horizon != b.horizon || a.up.rows() != b.up.rows() || a.yp.rows() != b.yp.rows())
        throw DimensionError("cannot concatenate Hankel sets of different shapes");
    HankelSet out;
    out.t_ini = a.t_ini;
    out.horizon = a.horizon;
    auto cat = [](const Eigen::MatrixXd& l, const Eigen::MatrixXd& r) {
        Eigen::MatrixXd m(l.rows(), l.cols() + r.cols());
        m << l, r;
        return m;
    };
    out.up = cat(a.up, b.up);
    out.yp = cat(a.yp, b.yp);
    out.uf = cat(a.uf, b.uf);
    out.yf = cat(a.yf, b.yf);
    return out;
}

PersistencyReport check_persistency(const HankelSet& h, double tol) {
    PersistencyReport report;
    report.required_rank = h.up.rows() + h.uf.rows();
    if (h.cols() == 0) return report;

    Eigen::MatrixXd stacked(h.up.rows() + h.uf.rows(), h.cols());
    stacked << h.up, h.uf;
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(stacked).singularValues();
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    if (smax > 0.0) {
        for (Index i = 0; i < sv.size(); ++i)
            if (sv(i) >= tol * smax) ++report.rank;
    }
    report.is_pe = report.rank == report.required_rank && h.cols() >= report.required_rank;
    return report;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    traj.validate();
    if (traj.inputs() != 1 || traj.outputs() != 1)
        throw DimensionError("trajectory CSV supports single-input single-output data only");
    out << "t,u,y,rho\n";
    for (Index k = 0; k < traj.length(); ++k) {
        out << csv::format_fixed(static_cast<double>(k) * traj.ts, 6) << ',' << csv::format_double(traj.u(0, k))
            << ',' << csv::format_double(traj.y(0, k)) << ',' << csv::format_double(traj.rho(k)) << '\n';
    }
}

Trajectory read_trajectory_csv(std::istream& in, double fallback_ts) {
    std::string line;
    if (!std::getline(in, line) || csv::trim(line) != "t,u,y,rho")
        throw ConfigError("trajectory CSV must start with header t,u,y,rho");
    std::vector<double> t, u, y, rho;
    while (std::getline(in, line)) {
        if (csv::trim(line).empty()) continue;
        auto f = csv::split(line);
        if (f.size() != 4) throw ConfigError("trajectory CSV row with " + std::to_string(f.size()) + " fields");
        t.push_back(csv::parse_double(f[0]));
        u.push_back(csv::parse_double(f[1]));
        y.push_back(csv::parse_double(f[2]));
        rho.push_back(csv::parse_double(f[3]));
    }
    Trajectory traj;
    const auto n = static_cast<Index>(t.size());
    traj.u = Eigen::Map<Eigen::RowVectorXd>(u.data(), n);
    traj.y = Eigen::Map<Eigen::RowVectorXd>(y.data(), n);
    traj.rho = Eigen::Map<Eigen::VectorXd>(rho.data(), n);
    // Timestamps carry 6 decimals, so ts is recovered to the microsecond.
    if (n >= 2) {
        const double spacing = (t.back() - t.front()) / static_cast<double>(n - 1);
        traj.ts = std::round(spacing * 1e6) / 1e6;
        if (traj.ts <= 0.0) traj.ts = spacing;
    } else {
        traj.ts = fallback_ts;
    }
    traj.validate();
    return traj;
}

}  // namespace gsdeepc
