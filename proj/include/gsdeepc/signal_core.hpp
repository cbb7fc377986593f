#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace gsdeepc {

using Eigen::Index;

/**
 * Synchronized input/output/scheduling samples.
 *
 * Sample k pairs the output y(k) measured at time k with the input u(k)
 * applied from time k to k+1. Channels are stored as rows, samples as
 * columns: u is m x T, y is p x T.
 */
struct Trajectory {
    Eigen::MatrixXd u;
    Eigen::MatrixXd y;
    Eigen::VectorXd rho;
    double ts = 0.0;

    Index length() const { return u.cols(); }
    Index inputs() const { return u.rows(); }
    Index outputs() const { return y.rows(); }

    /// Throws DimensionError / ConfigError when the invariants do not hold.
    void validate() const;

    Trajectory slice(Index begin, Index count) const;
};

/**
 * Past/future partition of the stacked input and output Hankel matrices.
 *
 * Column j of [up; uf] and [yp; yf] is one contiguous window of
 * t_ini + horizon samples. Multi-channel samples are stacked sample-major.
 */
struct HankelSet {
    Eigen::MatrixXd up;
    Eigen::MatrixXd yp;
    Eigen::MatrixXd uf;
    Eigen::MatrixXd yf;
    int t_ini = 0;
    int horizon = 0;

    Index cols() const { return up.cols(); }
    Index inputs() const { return t_ini > 0 ? up.rows() / t_ini : 0; }
    Index outputs() const { return t_ini > 0 ? yp.rows() / t_ini : 0; }

    bool same_shape(const HankelSet& other) const;
};

enum class ColumnPolicy { first, uniform };

/// Block-Hankel matrix of `data` (dim x len, one sample per column) with `block_rows` block rows.
Eigen::MatrixXd build_hankel(const Eigen::MatrixXd& data, Index block_rows);

/// Mosaic-Hankel over all segments, split into past (t_ini) and future (horizon) blocks.
HankelSet build_hankel_set(std::span<const Trajectory> segments, int t_ini, int horizon);

HankelSet truncate_columns(const HankelSet& h, Index target, ColumnPolicy policy);

/// Column indices (0-based) that truncate_columns keeps.
std::vector<Index> select_columns(Index available, Index target, ColumnPolicy policy);

HankelSet select_columns(const HankelSet& h, std::span<const Index> indices);

/// Horizontal concatenation [a | b]; both sets must share t_ini, horizon, m and p.
HankelSet concat_columns(const HankelSet& a, const HankelSet& b);

struct PersistencyReport {
    Index rank = 0;
    Index required_rank = 0;
    bool is_pe = false;
};

/// Numerical rank of [up; uf] counting singular values >= tol * sigma_max.
PersistencyReport check_persistency(const HankelSet& h, double tol = 1e-9);

/// CSV with header t,u,y,rho; single-input single-output trajectories only.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

/// Sampling period is recovered from the time column; `fallback_ts` is used for one-sample files.
Trajectory read_trajectory_csv(std::istream& in, double fallback_ts = 0.0);

}  // namespace gsdeepc
