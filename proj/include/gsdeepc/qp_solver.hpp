#pragma once

#include <optional>
#include <string_view>

#include <Eigen/Dense>

namespace gsdeepc {

/**
 * Convex QP
 *
 *     minimize    1/2 z' P z + q' z
 *     subject to  A_eq z = b_eq
 *                 lb <= C_in z <= ub
 *
 * Bounds may be +-infinity.
 */
struct QpProblem {
    Eigen::MatrixXd P;
    Eigen::VectorXd q;
    Eigen::MatrixXd A_eq;
    Eigen::VectorXd b_eq;
    Eigen::MatrixXd C_in;
    Eigen::VectorXd lb;
    Eigen::VectorXd ub;

    Eigen::Index variables() const { return q.size(); }
    void validate() const;
};

enum class QpStatus { optimal, max_iter, primal_infeasible };

std::string_view to_string(QpStatus status);

struct QpSolution {
    Eigen::VectorXd z_star;
    /// Multipliers of the stacked constraints [A_eq; C_in]; positive entries push against upper bounds.
    Eigen::VectorXd multipliers;
    double objective = 0.0;
    QpStatus status = QpStatus::max_iter;
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    bool polished = false;
};

struct QpSettings {
    double eps_abs = 1e-6;
    double eps_rel = 1e-6;
    int max_iter = 20000;
    double rho_admm = 0.1;
    double alpha = 1.6;
    // Proximal term, only used when P is singular.
    double sigma = 1e-6;
    bool adaptive_rho = true;
    int check_interval = 10;
    bool polish = true;
    double eps_prim_inf = 1e-4;
};

/**
 * ADMM solver for  min 1/2 x'Px + q'x  s.t.  l <= A x <= u  (equalities as l == u).
 *
 * The matrix pair (P, A) is factorized once in setup(); subsequent solves only
 * change q, l and u and reuse the factorization. Each iteration works in the
 * constraint space through a Woodbury identity, so its cost scales with the
 * number of constraints rather than the number of variables when P is
 * positive definite. Not thread-safe; use one instance per control loop.
 */
class QpSolver {
public:
    explicit QpSolver(QpSettings settings = {});

    void setup(const Eigen::MatrixXd& P, const Eigen::MatrixXd& A);
    bool is_setup() const { return n_ > 0; }
    Eigen::Index variables() const { return n_; }
    Eigen::Index constraints() const { return A_.rows(); }

    QpSolution solve(const Eigen::VectorXd& q, const Eigen::VectorXd& l, const Eigen::VectorXd& u);

    void warm_start(const Eigen::VectorXd& x, const Eigen::VectorXd& y);
    void clear_warm_start() { warm_ = false; }
    bool has_warm_start() const { return warm_; }

    const QpSettings& settings() const { return settings_; }

private:
    void factor_penalty();
    Eigen::VectorXd solve_p(const Eigen::VectorXd& b) const;
    bool polish(const Eigen::VectorXd& q, const Eigen::VectorXd& l, const Eigen::VectorXd& u,
                const Eigen::VectorXd& z, const Eigen::VectorXd& y, Eigen::VectorXd& x_out,
                Eigen::VectorXd& y_out) const;

    QpSettings settings_;
    Eigen::Index n_ = 0;
    Eigen::MatrixXd P_;
    Eigen::MatrixXd A_;
    double sigma_ = 0.0;
    Eigen::LLT<Eigen::MatrixXd> p_factor_;
    Eigen::MatrixXd pinv_at_;  // (P + sigma I)^-1 A'
    Eigen::MatrixXd gram_;     // A (P + sigma I)^-1 A'

    Eigen::VectorXd rho_vec_;
    Eigen::VectorXd l_cache_, u_cache_;
    Eigen::LDLT<Eigen::MatrixXd> s_factor_;  // diag(1/rho) + gram
    Eigen::MatrixXd reduced_map_;             // I - gram * S^-1

    bool warm_ = false;
    Eigen::VectorXd x_, z_, y_;
    double rho_ = 0.1;
};

QpSolution solve_qp(const QpProblem& problem, const QpSettings& settings = {});

}  // namespace gsdeepc
