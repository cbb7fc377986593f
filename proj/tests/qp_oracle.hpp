#pragma once

// Test-only references for the QP solver.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "gsdeepc/qp_solver.hpp"

namespace test {

struct KnownQp {
    gsdeepc::QpProblem problem;
    Eigen::VectorXd x_star;
};

// Strictly convex QP whose unique minimizer is planted through the KKT conditions:
// roughly a third of the boxes are active at the lower bound, a third at the upper
// bound, and the rest are slack. Box rows are the identity plus `general` random rows.
inline KnownQp planted_qp(int n, int me, int general, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud(0.2, 1.0);
    auto randn = [&](Eigen::Index r, Eigen::Index c) {
        Eigen::MatrixXd m(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) m(i, j) = nd(rng);
        return m;
    };

    KnownQp out;
    const Eigen::MatrixXd m = randn(n, n);
    auto& p = out.problem;
    p.P = m.transpose() * m / n + 0.1 * Eigen::MatrixXd::Identity(n, n);
    out.x_star = randn(n, 1);
    p.A_eq = randn(me, n);
    p.b_eq = p.A_eq * out.x_star;
    const Eigen::VectorXd mu = randn(me, 1);

    const int mi = n + general;
    p.C_in.resize(mi, n);
    p.C_in.topRows(n).setIdentity();
    if (general > 0) p.C_in.bottomRows(general) = randn(general, n);
    const Eigen::VectorXd cx = p.C_in * out.x_star;
    p.lb.resize(mi);
    p.ub.resize(mi);
    Eigen::VectorXd nu = Eigen::VectorXd::Zero(mi);
    for (int i = 0; i < mi; ++i) {
        switch (i % 3) {
            case 0:
                p.lb(i) = cx(i);
                p.ub(i) = cx(i) + ud(rng);
                nu(i) = -ud(rng);
                break;
            case 1:
                p.lb(i) = cx(i) - ud(rng);
                p.ub(i) = cx(i);
                nu(i) = ud(rng);
                break;
            default:
                p.lb(i) = cx(i) - ud(rng);
                p.ub(i) = (i % 2 == 0) ? std::numeric_limits<double>::infinity() : cx(i) + ud(rng);
                break;
        }
    }
    p.q = -p.P * out.x_star - p.A_eq.transpose() * mu - p.C_in.transpose() * nu;
    return out;
}

inline gsdeepc::QpProblem random_qp(int n, int me, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> width(0.1, 1.0);
    gsdeepc::QpProblem p;
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = nd(rng);
    p.P = m.transpose() * m + 0.05 * Eigen::MatrixXd::Identity(n, n);
    p.q.resize(n);
    for (int i = 0; i < n; ++i) p.q(i) = 3.0 * nd(rng);
    p.A_eq.resize(me, n);
    for (int i = 0; i < me; ++i)
        for (int j = 0; j < n; ++j) p.A_eq(i, j) = nd(rng);
    // equalities pass through a point inside the box so the problem is feasible
    Eigen::VectorXd centre(n);
    for (int i = 0; i < n; ++i) centre(i) = 0.2 * nd(rng);
    p.b_eq = p.A_eq * centre;
    p.C_in = Eigen::MatrixXd::Identity(n, n);
    p.lb.resize(n);
    p.ub.resize(n);
    for (int i = 0; i < n; ++i) {
        p.lb(i) = centre(i) - width(rng);
        p.ub(i) = centre(i) + width(rng);
    }
    return p;
}

// Exhaustive active-set enumeration for small problems with box rows only: every
// row is free, at its lower bound or at its upper bound. Each pattern gives a
// KKT linear system; the unique pattern that is primal feasible with correctly
// signed multipliers is the optimum.
inline std::optional<Eigen::VectorXd> enumerate_active_sets(const gsdeepc::QpProblem& p, double tol = 1e-9) {
    const auto n = p.variables();
    const auto me = p.A_eq.rows();
    const auto mi = p.C_in.rows();
    std::int64_t patterns = 1;
    for (Eigen::Index i = 0; i < mi; ++i) patterns *= 3;

    std::optional<Eigen::VectorXd> best;
    double best_obj = std::numeric_limits<double>::infinity();
    std::vector<int> state(static_cast<std::size_t>(mi));
    for (std::int64_t code = 0; code < patterns; ++code) {
        std::int64_t c = code;
        Eigen::Index na = 0;
        for (Eigen::Index i = 0; i < mi; ++i) {
            state[i] = static_cast<int>(c % 3);  // 0 free, 1 lower, 2 upper
            c /= 3;
            if (state[i] != 0) ++na;
        }
        bool skip = false;
        for (Eigen::Index i = 0; i < mi; ++i)
            if ((state[i] == 1 && std::isinf(p.lb(i))) || (state[i] == 2 && std::isinf(p.ub(i)))) skip = true;
        if (skip) continue;

        const auto k = me + na;
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
        Eigen::VectorXd rhs(n + k);
        kkt.topLeftCorner(n, n) = p.P;
        rhs.head(n) = -p.q;
        Eigen::Index row = 0;
        for (; row < me; ++row) {
            kkt.block(n + row, 0, 1, n) = p.A_eq.row(row);
            kkt.block(0, n + row, n, 1) = p.A_eq.row(row).transpose();
            rhs(n + row) = p.b_eq(row);
        }
        std::vector<Eigen::Index> act;
        for (Eigen::Index i = 0; i < mi; ++i) {
            if (state[i] == 0) continue;
            kkt.block(n + row, 0, 1, n) = p.C_in.row(i);
            kkt.block(0, n + row, n, 1) = p.C_in.row(i).transpose();
            rhs(n + row) = state[i] == 1 ? p.lb(i) : p.ub(i);
            act.push_back(i);
            ++row;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
        if (!lu.isInvertible()) continue;
        const Eigen::VectorXd sol = lu.solve(rhs);
        const Eigen::VectorXd x = sol.head(n);
        const Eigen::VectorXd cx = p.C_in * x;
        bool ok = ((cx - p.lb).array() >= -tol).all() && ((p.ub - cx).array() >= -tol).all();
        for (std::size_t a = 0; a < act.size() && ok; ++a) {
            const double lam = sol(n + me + static_cast<Eigen::Index>(a));
            if (state[act[a]] == 1 && lam > tol) ok = false;
            if (state[act[a]] == 2 && lam < -tol) ok = false;
        }
        if (!ok) continue;
        const double obj = 0.5 * x.dot(p.P * x) + p.q.dot(x);
        if (obj < best_obj) {
            best_obj = obj;
            best = x;
        }
    }
    return best;
}

// Infinity norm of the stationarity residual P z + q + A_eq' mu + C_in' nu.
inline double stationarity(const gsdeepc::QpProblem& p, const gsdeepc::QpSolution& s) {
    const auto me = p.A_eq.rows();
    Eigen::VectorXd r = p.P * s.z_star + p.q;
    if (me > 0) r += p.A_eq.transpose() * s.multipliers.head(me);
    if (p.C_in.rows() > 0) r += p.C_in.transpose() * s.multipliers.tail(p.C_in.rows());
    return r.cwiseAbs().maxCoeff();
}

// Largest |nu_i| * distance to the bound it claims to press against.
inline double complementarity(const gsdeepc::QpProblem& p, const gsdeepc::QpSolution& s) {
    const auto me = p.A_eq.rows();
    const Eigen::VectorXd cx = p.C_in * s.z_star;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < p.C_in.rows(); ++i) {
        const double nu = s.multipliers(me + i);
        const double gap = nu > 0 ? p.ub(i) - cx(i) : (nu < 0 ? cx(i) - p.lb(i) : 0.0);
        if (std::isfinite(gap)) worst = std::max(worst, std::abs(nu) * std::abs(gap));
        else if (nu != 0.0) worst = std::numeric_limits<double>::infinity();
    }
    return worst;
}

}  // namespace test
