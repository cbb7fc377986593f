#pragma once

#include <deque>

#include <Eigen/Dense>

#include "gsdeepc/qp_solver.hpp"
#include "gsdeepc/signal_core.hpp"

namespace gsdeepc {

struct ControllerConfig {
    int t_ini = 2;
    int horizon = 5;
    Eigen::MatrixXd Q = Eigen::MatrixXd::Constant(1, 1, 100.0);
    Eigen::MatrixXd R = Eigen::MatrixXd::Constant(1, 1, 0.05);
    double lambda_g = 1e3;
    double lambda_ini = 1e6;
    Eigen::VectorXd u_min = Eigen::VectorXd::Constant(1, -0.25);
    Eigen::VectorXd u_max = Eigen::VectorXd::Constant(1, 0.25);
    Eigen::VectorXd y_min = Eigen::VectorXd::Constant(1, -3.14159265358979323846);
    Eigen::VectorXd y_max = Eigen::VectorXd::Constant(1, 3.14159265358979323846);

    Index inputs() const { return R.rows(); }
    Index outputs() const { return Q.rows(); }
    void validate() const;
};

/// Most recent t_ini (u, y) pairs, oldest first.
class InitBuffer {
public:
    InitBuffer(int t_ini, Index inputs, Index outputs);

    void push(const Eigen::VectorXd& u, const Eigen::VectorXd& y);
    bool warm() const { return static_cast<int>(samples_.size()) == t_ini_; }
    int size() const { return static_cast<int>(samples_.size()); }
    void clear() { samples_.clear(); }

    /// Stacked sample-major [u(k-t_ini); ...; u(k-1)] and the matching outputs.
    Eigen::VectorXd u_ini() const;
    Eigen::VectorXd y_ini() const;

private:
    int t_ini_;
    Index m_, p_;
    std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> samples_;
};

/**
 * Regularized DeePC program written in the coefficient vector g alone:
 *
 *   min  ||r - Yf g||_Q^2 + ||Uf g||_R^2 + lambda_g ||g||^2 + lambda_ini ||Yp g - y_ini||^2
 *   s.t. Up g = u_ini,  u_min <= Uf g <= u_max,  y_min <= Yf g <= y_max
 *
 * Constraint rows are ordered [Up; Uf; Yf].
 */
QpProblem condense(const HankelSet& h, const ControllerConfig& cfg, const Eigen::VectorXd& u_ini,
                   const Eigen::VectorXd& y_ini, const Eigen::VectorXd& reference);

struct ControlResult {
    Eigen::VectorXd u_apply;
    Eigen::MatrixXd u_plan;  // horizon x m
    Eigen::MatrixXd y_pred;  // horizon x p
    Eigen::VectorXd g;
    double g_norm = 0.0;
    double sigma_norm = 0.0;
    QpSolution solver;
};

/**
 * Receding-horizon DeePC. The QP factorization is cached per Hankel set, so
 * swapping in another set of identical shape only replaces matrix data.
 */
class DeepcController {
public:
    explicit DeepcController(ControllerConfig cfg, QpSettings settings = {});

    const ControllerConfig& config() const { return cfg_; }

    /// Solves for the active Hankel set. `reference` stacks r(k), ..., r(k+N-1) sample-major.
    /// Throws SolverError when the QP reports primal infeasibility.
    ControlResult step(const HankelSet& h, const InitBuffer& buffer, const Eigen::VectorXd& reference);

    /// Factorizations performed so far; one per change of the active Hankel set.
    int setups() const { return setups_; }

private:
    void activate(const HankelSet& h);

    ControllerConfig cfg_;
    QpSolver solver_;
    HankelSet active_;
    Eigen::MatrixXd constraint_matrix_;
    Eigen::MatrixXd qbar_;
    Eigen::MatrixXd rbar_;
    int setups_ = 0;
};

/// Quadratic term 2 (Yf' Q Yf + Uf' R Uf + lambda_g I + lambda_ini Yp' Yp).
Eigen::MatrixXd deepc_hessian(const HankelSet& h, const ControllerConfig& cfg);

}  // namespace gsdeepc
