#include "gsdeepc/qp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gsdeepc/errors.hpp"

namespace gsdeepc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRhoMin = 1e-9;
constexpr double kRhoMax = 1e12;
constexpr double kRhoEqualityScale = 1e3;
constexpr double kRhoFreeRow = 1e-6;
constexpr int kPolishEveryChecks = 5;

double inf_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

Eigen::VectorXd project(const Eigen::VectorXd& v, const Eigen::VectorXd& l, const Eigen::VectorXd& u) {
    return v.cwiseMax(l).cwiseMin(u);
}

double violation(const Eigen::VectorXd& ax, const Eigen::VectorXd& l, const Eigen::VectorXd& u) {
    return inf_norm(ax - project(ax, l, u));
}

}  // namespace

std::string_view to_string(QpStatus status) {
    switch (status) {
        case QpStatus::optimal: return "optimal";
        case QpStatus::max_iter: return "max_iter";
        case QpStatus::primal_infeasible: return "primal_infeasible";
    }
    return "unknown";
}

void QpProblem::validate() const {
    const auto n = q.size();
    if (P.rows() != n || P.cols() != n) throw DimensionError("QP: P must be n x n with n = len(q)");
    if (A_eq.rows() != b_eq.size() || (A_eq.rows() > 0 && A_eq.cols() != n))
        throw DimensionError("QP: equality block dimensions are inconsistent");
    if (C_in.rows() != lb.size() || C_in.rows() != ub.size() || (C_in.rows() > 0 && C_in.cols() != n))
        throw DimensionError("QP: inequality block dimensions are inconsistent");
    if ((lb.array() > ub.array()).any()) throw ConfigError("QP: lb > ub");
    const double scale = std::max(1.0, P.cwiseAbs().maxCoeff());
    if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) throw ConfigError("QP: P is not symmetric");
}

QpSolver::QpSolver(QpSettings settings) : settings_(settings), rho_(settings.rho_admm) {}

Eigen::VectorXd QpSolver::solve_p(const Eigen::VectorXd& b) const { return p_factor_.solve(b); }

void QpSolver::setup(const Eigen::MatrixXd& P, const Eigen::MatrixXd& A) {
    const auto n = P.rows();
    if (P.cols() != n || n == 0) throw DimensionError("QP: P must be square and non-empty");
    if (A.rows() > 0 && A.cols() != n) throw DimensionError("QP: constraint matrix has wrong column count");
    n_ = n;
    P_ = 0.5 * (P + P.transpose());
    A_ = A.rows() > 0 ? A : Eigen::MatrixXd(0, n);

    sigma_ = 0.0;
    p_factor_.compute(P_);
    bool ok = p_factor_.info() == Eigen::Success;
    if (ok) {
        const Eigen::VectorXd piv = p_factor_.matrixLLT().diagonal().array().square();
        ok = piv.minCoeff() > 1e-13 * piv.maxCoeff();
    }
    if (!ok) {
        // Singular P: the proximal term makes every x-update well posed.
        sigma_ = settings_.sigma * std::max(1.0, P_.diagonal().cwiseAbs().maxCoeff());
        p_factor_.compute(P_ + sigma_ * Eigen::MatrixXd::Identity(n, n));
        if (p_factor_.info() != Eigen::Success) throw SolverError("QP: P is not positive semidefinite");
    }

    pinv_at_ = p_factor_.solve(A_.transpose());
    gram_ = A_ * pinv_at_;
    gram_ = 0.5 * (gram_ + gram_.transpose()).eval();

    rho_ = settings_.rho_admm;
    l_cache_.resize(0);
    u_cache_.resize(0);
    warm_ = false;
}

void QpSolver::factor_penalty() {
    const auto mc = A_.rows();
    rho_vec_.resize(mc);
    for (Eigen::Index i = 0; i < mc; ++i) {
        if (l_cache_(i) == u_cache_(i))
            rho_vec_(i) = kRhoEqualityScale * rho_;
        else if (std::isinf(l_cache_(i)) && std::isinf(u_cache_(i)))
            rho_vec_(i) = kRhoFreeRow;
        else
            rho_vec_(i) = rho_;
    }
    Eigen::MatrixXd s = gram_;
    s.diagonal() += rho_vec_.cwiseInverse();
    s_factor_.compute(s);
    const Eigen::MatrixXd s_inv_gram = s_factor_.solve(gram_);
    reduced_map_ = Eigen::MatrixXd::Identity(mc, mc) - s_inv_gram.transpose();
}

void QpSolver::warm_start(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (x.size() != n_ || y.size() != A_.rows()) throw DimensionError("QP: warm start has wrong dimensions");
    x_ = x;
    y_ = y;
    z_ = A_ * x;
    warm_ = true;
}

bool QpSolver::polish(const Eigen::VectorXd& q, const Eigen::VectorXd& l, const Eigen::VectorXd& u,
                      const Eigen::VectorXd& z, const Eigen::VectorXd& y, Eigen::VectorXd& x_out,
                      Eigen::VectorXd& y_out) const {
    const auto mc = A_.rows();
    std::vector<Eigen::Index> active;
    std::vector<int> side;  // -1 lower, +1 upper, 0 equality
    Eigen::VectorXd target(mc);
    for (Eigen::Index i = 0; i < mc; ++i) {
        if (l(i) == u(i)) {
            active.push_back(i);
            side.push_back(0);
            target(active.size() - 1) = l(i);
        } else if (z(i) - l(i) < -y(i)) {
            active.push_back(i);
            side.push_back(-1);
            target(active.size() - 1) = l(i);
        } else if (u(i) - z(i) < y(i)) {
            active.push_back(i);
            side.push_back(1);
            target(active.size() - 1) = u(i);
        }
    }
    const auto na = static_cast<Eigen::Index>(active.size());
    Eigen::VectorXd lambda(na);

    if (sigma_ == 0.0) {
        // x = -P^-1 (q + A_a' lambda) with A_a x = b_a.
        const Eigen::VectorXd v0 = solve_p(q);
        Eigen::MatrixXd g_aa(na, na);
        Eigen::VectorXd rhs(na);
        for (Eigen::Index a = 0; a < na; ++a) {
            rhs(a) = -(target(a) + A_.row(active[a]).dot(v0));
            for (Eigen::Index b = 0; b < na; ++b) g_aa(a, b) = gram_(active[a], active[b]);
        }
        lambda = na > 0 ? Eigen::VectorXd(g_aa.completeOrthogonalDecomposition().solve(rhs)) : Eigen::VectorXd();
        x_out = -v0;
        for (Eigen::Index a = 0; a < na; ++a) x_out -= pinv_at_.col(active[a]) * lambda(a);
    } else {
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n_ + na, n_ + na);
        Eigen::VectorXd rhs(n_ + na);
        kkt.topLeftCorner(n_, n_) = P_;
        rhs.head(n_) = -q;
        for (Eigen::Index a = 0; a < na; ++a) {
            kkt.block(n_ + a, 0, 1, n_) = A_.row(active[a]);
            kkt.block(0, n_ + a, n_, 1) = A_.row(active[a]).transpose();
            rhs(n_ + a) = target(a);
        }
        const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
        x_out = sol.head(n_);
        lambda = sol.tail(na);
    }
    if (!x_out.allFinite() || !lambda.allFinite()) return false;

    auto signs_ok = [&](const Eigen::VectorXd& lam) {
        const double tol = settings_.eps_abs + settings_.eps_rel * std::max(1.0, inf_norm(lam));
        for (Eigen::Index a = 0; a < na; ++a) {
            if (side[a] < 0 && lam(a) > tol) return false;
            if (side[a] > 0 && lam(a) < -tol) return false;
        }
        return true;
    };
    if (!signs_ok(lambda)) {
        // More active rows than the point needs: the multipliers are not unique and the
        // minimum-norm choice can have the wrong sign. Take the stationary multipliers
        // closest to the ADMM estimate instead.
        Eigen::MatrixXd a_act(na, n_);
        Eigen::VectorXd y_act(na);
        for (Eigen::Index a = 0; a < na; ++a) {
            a_act.row(a) = A_.row(active[a]);
            y_act(a) = y(active[a]);
        }
        const Eigen::VectorXd gap = -(P_ * x_out + q) - a_act.transpose() * y_act;
        lambda = y_act + a_act.transpose().completeOrthogonalDecomposition().solve(gap);
        if (!lambda.allFinite() || !signs_ok(lambda)) return false;
    }

    y_out = Eigen::VectorXd::Zero(mc);
    for (Eigen::Index a = 0; a < na; ++a) y_out(active[a]) = lambda(a);
    return true;
}

QpSolution QpSolver::solve(const Eigen::VectorXd& q, const Eigen::VectorXd& l, const Eigen::VectorXd& u) {
    if (!is_setup()) throw SolverError("QP: solve() called before setup()");
    const auto mc = A_.rows();
    if (q.size() != n_ || l.size() != mc || u.size() != mc) throw DimensionError("QP: q, l or u has wrong size");
    if ((l.array() > u.array()).any()) throw ConfigError("QP: lower bound exceeds upper bound");

    const bool pattern_changed = l_cache_.size() != mc ||
                                 ((l.array() == u.array()) != (l_cache_.array() == u_cache_.array())).any() ||
                                 ((l.array().isInf() && u.array().isInf()) !=
                                  (l_cache_.array().isInf() && u_cache_.array().isInf()))
                                     .any();
    l_cache_ = l;
    u_cache_ = u;
    // A cold start also forgets the step size adapted during earlier solves.
    const bool rho_reset = !warm_ && rho_ != settings_.rho_admm;
    if (!warm_) rho_ = settings_.rho_admm;
    if (pattern_changed || rho_reset || rho_vec_.size() != mc) factor_penalty();

    if (!warm_) {
        x_ = Eigen::VectorXd::Zero(n_);
        z_ = project(Eigen::VectorXd::Zero(mc), l, u);
        y_ = Eigen::VectorXd::Zero(mc);
    } else {
        z_ = project(z_, l, u);
    }

    const bool reduced = sigma_ == 0.0;
    const double alpha = settings_.alpha;
    const Eigen::VectorXd v0 = solve_p(q);  // (P + sigma I)^-1 q
    const Eigen::VectorXd h = A_ * v0;
    const double q_norm = inf_norm(q);

    Eigen::VectorXd w(mc), a(mc), zt(mc), xt(n_), y_prev(mc);
    Eigen::VectorXd x_cur = x_;
    QpSolution sol;
    bool converged = false;
    bool infeasible = false;
    int iter = 0;
    int checks = 0;

    auto residuals = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y, double& rp, double& rd, double& tp,
                         double& td) {
        const Eigen::VectorXd ax = A_ * x;
        const Eigen::VectorXd px = P_ * x;
        const Eigen::VectorXd aty = A_.transpose() * y;
        rp = violation(ax, l, u);
        rd = inf_norm(px + q + aty);
        tp = settings_.eps_abs + settings_.eps_rel * std::max(inf_norm(ax), inf_norm(project(ax, l, u)));
        td = settings_.eps_abs + settings_.eps_rel * std::max({inf_norm(px), inf_norm(aty), q_norm});
    };
    // A polished point that meets the tolerances ends the iteration early.
    bool early_polish = false;
    Eigen::VectorXd x_pol, y_pol;
    auto try_polish = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
        if (!polish(q, l, u, A_ * x, y, x_pol, y_pol)) return false;
        double prp = 0, prd = 0, ptp = 0, ptd = 0;
        residuals(x_pol, y_pol, prp, prd, ptp, ptd);
        early_polish = prp <= ptp && prd <= ptd;
        return early_polish;
    };

    for (iter = 1; iter <= settings_.max_iter; ++iter) {
        w = rho_vec_.cwiseProduct(z_) - y_;
        if (reduced) {
            a = gram_ * w - h;
            zt = reduced_map_ * a;
        } else {
            const Eigen::VectorXd rhs = sigma_ * x_ - q + A_.transpose() * w;
            const Eigen::VectorXd m0 = solve_p(rhs);
            xt = m0 - pinv_at_ * s_factor_.solve(A_ * m0);
            zt = A_ * xt;
            x_ = alpha * xt + (1.0 - alpha) * x_;
        }
        const Eigen::VectorXd z_relaxed = alpha * zt + (1.0 - alpha) * z_;
        const Eigen::VectorXd z_next = project(z_relaxed + y_.cwiseQuotient(rho_vec_), l, u);
        y_prev = y_;
        y_ += rho_vec_.cwiseProduct(z_relaxed - z_next);
        z_ = z_next;

        if (iter % settings_.check_interval != 0 && iter != settings_.max_iter) continue;

        Eigen::VectorXd ax, px;
        const Eigen::VectorXd aty = A_.transpose() * y_;
        if (reduced) {
            // With sigma = 0, P x~ = -q + A' wv exactly, so nothing here costs O(n^2).
            const Eigen::VectorXd wv = w - s_factor_.solve(a);
            x_cur = -v0 + pinv_at_ * wv;
            ax = gram_ * wv - h;
            px = A_.transpose() * wv - q;
        } else {
            x_cur = x_;
            ax = A_ * x_cur;
            px = P_ * x_cur;
        }
        const double r_prim = inf_norm(ax - z_);
        const double r_dual = inf_norm(px + q + aty);
        const double prim_scale = std::max(inf_norm(ax), inf_norm(z_));
        const double dual_scale = std::max({inf_norm(px), inf_norm(aty), q_norm});
        if (r_prim <= settings_.eps_abs + settings_.eps_rel * prim_scale &&
            r_dual <= settings_.eps_abs + settings_.eps_rel * dual_scale) {
            converged = true;
            break;
        }

        if (settings_.polish && ++checks % kPolishEveryChecks == 0 && try_polish(x_cur, y_)) {
            converged = true;
            break;
        }

        const Eigen::VectorXd dy = y_ - y_prev;
        const double dy_norm = inf_norm(dy);
        if (dy_norm > 0.0 && inf_norm(A_.transpose() * dy) <= settings_.eps_prim_inf * dy_norm) {
            double support = 0.0;
            bool bounded = true;
            for (Eigen::Index i = 0; i < mc && bounded; ++i) {
                if (dy(i) > 0.0) {
                    if (std::isinf(u(i))) bounded = false;
                    else support += u(i) * dy(i);
                } else if (dy(i) < 0.0) {
                    if (std::isinf(l(i))) bounded = false;
                    else support += l(i) * dy(i);
                }
            }
            if (bounded && support < -settings_.eps_prim_inf * dy_norm) {
                infeasible = true;
                break;
            }
        }

        if (settings_.adaptive_rho) {
            const double prim_rel = r_prim / std::max(prim_scale, 1e-30);
            const double dual_rel = r_dual / std::max(dual_scale, 1e-30);
            const double ratio = std::sqrt(prim_rel / std::max(dual_rel, 1e-30));
            if (ratio > 5.0 || ratio < 0.2) {
                const double rho_new = std::clamp(rho_ * ratio, kRhoMin, kRhoMax);
                if (rho_new != rho_) {
                    rho_ = rho_new;
                    factor_penalty();
                }
            }
        }
    }
    sol.iterations = std::min(iter, settings_.max_iter);

    if (infeasible) {
        sol.status = QpStatus::primal_infeasible;
        sol.z_star = x_cur;
        sol.multipliers = y_;
        const Eigen::VectorXd ax = A_ * x_cur;
        sol.primal_residual = violation(ax, l, u);
        sol.dual_residual = inf_norm(P_ * x_cur + q + A_.transpose() * y_);
        sol.objective = 0.5 * x_cur.dot(P_ * x_cur) + q.dot(x_cur);
        warm_ = false;
        return sol;
    }

    Eigen::VectorXd x_best = early_polish ? x_pol : x_cur;
    Eigen::VectorXd y_best = early_polish ? y_pol : y_;
    double rp = 0, rd = 0, tp = 0, td = 0;
    residuals(x_best, y_best, rp, rd, tp, td);
    bool within = converged || (rp <= tp && rd <= td);
    sol.polished = early_polish;

    if (settings_.polish && !early_polish) {
        Eigen::VectorXd xp, yp;
        if (polish(q, l, u, z_, y_, xp, yp)) {
            double prp = 0, prd = 0, ptp = 0, ptd = 0;
            residuals(xp, yp, prp, prd, ptp, ptd);
            const bool polished_ok = prp <= ptp && prd <= ptd;
            if (polished_ok || (prp <= rp && prd <= rd)) {
                x_best = xp;
                y_best = yp;
                rp = prp;
                rd = prd;
                within = within || polished_ok;
                sol.polished = true;
            }
        }
    }

    sol.status = within ? QpStatus::optimal : QpStatus::max_iter;
    sol.z_star = x_best;
    sol.multipliers = y_best;
    sol.primal_residual = rp;
    sol.dual_residual = rd;
    sol.objective = 0.5 * x_best.dot(P_ * x_best) + q.dot(x_best);

    x_ = x_best;
    y_ = y_best;
    z_ = project(A_ * x_best, l, u);
    warm_ = true;
    return sol;
}

QpSolution solve_qp(const QpProblem& problem, const QpSettings& settings) {
    problem.validate();
    const auto n = problem.variables();
    const auto me = problem.A_eq.rows();
    const auto mi = problem.C_in.rows();
    Eigen::MatrixXd A(me + mi, n);
    Eigen::VectorXd l(me + mi), u(me + mi);
    if (me > 0) {
        A.topRows(me) = problem.A_eq;
        l.head(me) = problem.b_eq;
        u.head(me) = problem.b_eq;
    }
    if (mi > 0) {
        A.bottomRows(mi) = problem.C_in;
        l.tail(mi) = problem.lb;
        u.tail(mi) = problem.ub;
    }
    QpSolver solver(settings);
    solver.setup(problem.P, A);
    return solver.solve(problem.q, l, u);
}

}  // namespace gsdeepc
