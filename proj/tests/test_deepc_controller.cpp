#include <doctest.h>

#include <random>

#include "gsdeepc/deepc_controller.hpp"
#include "gsdeepc/errors.hpp"
#include "lti_oracle.hpp"
#include "qp_oracle.hpp"

using namespace gsdeepc;

namespace {

HankelSet lti_set(const test::Lti& sys, Index length, int t_ini, int horizon, std::uint64_t seed) {
    std::vector<Trajectory> segs{test::lti_data(sys, length, seed)};
    return build_hankel_set(segs, t_ini, horizon);
}

// Initial window generated from a known state, plus the state at the current time.
struct Window {
    Eigen::VectorXd u_ini, y_ini, x_now;
};

Window window_from(const test::Lti& sys, const Eigen::VectorXd& x0, const Eigen::MatrixXd& u_past) {
    Window w;
    const Eigen::MatrixXd y_past = sys.simulate(x0, u_past);
    w.u_ini = Eigen::Map<const Eigen::VectorXd>(u_past.data(), u_past.size());
    w.y_ini = Eigen::Map<const Eigen::VectorXd>(y_past.data(), y_past.size());
    w.x_now = sys.advance(x0, u_past);
    return w;
}

// The condensed cost written out term by term.
double explicit_cost(const HankelSet& h, const ControllerConfig& cfg, const Eigen::VectorXd& g,
                     const Eigen::VectorXd& y_ini, const Eigen::VectorXd& r) {
    const Eigen::VectorXd e = r - h.yf * g;
    const Eigen::VectorXd u = h.uf * g;
    const Eigen::VectorXd s = h.yp * g - y_ini;
    double cost = cfg.lambda_g * g.squaredNorm() + cfg.lambda_ini * s.squaredNorm();
    for (int k = 0; k < cfg.horizon; ++k) {
        cost += e.segment(k * cfg.outputs(), cfg.outputs()).dot(cfg.Q * e.segment(k * cfg.outputs(), cfg.outputs()));
        cost += u.segment(k * cfg.inputs(), cfg.inputs()).dot(cfg.R * u.segment(k * cfg.inputs(), cfg.inputs()));
    }
    return cost;
}

}  // namespace

TEST_CASE("configuration validation") {
    ControllerConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    ControllerConfig bad = cfg;
    bad.lambda_g = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.Q(0, 0) = -1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.u_min(0) = bad.u_max(0);
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.y_max(0) = -4.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("init buffer") {
    InitBuffer buf(2, 1, 1);
    CHECK_FALSE(buf.warm());
    CHECK_THROWS_AS(buf.u_ini(), SolverError);
    for (int k = 1; k <= 3; ++k) buf.push(Eigen::VectorXd::Constant(1, k), Eigen::VectorXd::Constant(1, 10.0 * k));
    CHECK(buf.warm());
    CHECK(buf.size() == 2);
    CHECK(buf.u_ini() == Eigen::Vector2d(2.0, 3.0));
    CHECK(buf.y_ini() == Eigen::Vector2d(20.0, 30.0));
    CHECK_THROWS_AS(buf.push(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(1)), DimensionError);
    buf.clear();
    CHECK_FALSE(buf.warm());
}

TEST_CASE("condensed problem dimensions for the benchmark sizes") {
    const auto sys = test::oscillator();
    const HankelSet h = lti_set(sys, 206, 2, 5, 1);
    REQUIRE(h.cols() == 200);
    const ControllerConfig cfg;
    const QpProblem qp = condense(h, cfg, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(5));
    CHECK(qp.variables() == 200);
    CHECK(qp.A_eq.rows() == 2);
    CHECK(qp.C_in.rows() == 10);  // 5 input rows, then 5 output rows
    CHECK(qp.C_in.topRows(5) == h.uf);
    CHECK(qp.C_in.bottomRows(5) == h.yf);
    CHECK(qp.lb.head(5).cwiseEqual(-0.25).all());
    CHECK(qp.ub.tail(5).maxCoeff() == doctest::Approx(3.14159265358979323846));

    CHECK_THROWS_AS(condense(h, cfg, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(5)),
                    ConfigError);
    ControllerConfig wrong = cfg;
    wrong.horizon = 4;
    CHECK_THROWS_AS(condense(h, wrong, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(4)),
                    ConfigError);
}

TEST_CASE("hessian is bounded below by the ridge term") {
    const auto sys = test::oscillator();
    for (double lambda_g : {1e-3, 1.0, 1e3}) {
        CAPTURE(lambda_g);
        ControllerConfig cfg;
        cfg.lambda_g = lambda_g;
        const HankelSet h = lti_set(sys, 120, 2, 5, 2);
        const Eigen::MatrixXd P = deepc_hessian(h, cfg);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(P);
        // the eigensolver is accurate to a few ulps of the largest eigenvalue
        CHECK(eig.eigenvalues().minCoeff() >= 2.0 * lambda_g - 1e-12 * eig.eigenvalues().maxCoeff());
        CHECK(P.isApprox(P.transpose(), 0.0));
    }
}

TEST_CASE("condensed gradient matches finite differences of the explicit cost") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd;
    const auto sys = test::oscillator();
    const HankelSet h = lti_set(sys, 60, 2, 5, 3);
    ControllerConfig cfg;
    cfg.lambda_ini = 30.0;  // keeps the terms comparable so rounding stays small
    Eigen::VectorXd y_ini(2), r(5), g(h.cols());
    for (auto* v : {&y_ini, &r, &g})
        for (Index i = 0; i < v->size(); ++i) (*v)(i) = nd(rng);
    const QpProblem qp = condense(h, cfg, Eigen::VectorXd::Zero(2), y_ini, r);

    const Eigen::VectorXd grad = qp.P * g + qp.q;
    const double step = 1e-5;
    for (Index i = 0; i < g.size(); ++i) {
        Eigen::VectorXd gp = g, gm = g;
        gp(i) += step;
        gm(i) -= step;
        const double fd = (explicit_cost(h, cfg, gp, y_ini, r) - explicit_cost(h, cfg, gm, y_ini, r)) / (2 * step);
        CHECK(std::abs(fd - grad(i)) <= 1e-6 * std::max(1.0, std::abs(grad(i))));
    }
    // the quadratic model differs from the explicit cost only by a constant
    const double offset = explicit_cost(h, cfg, g, y_ini, r) - (0.5 * g.dot(qp.P * g) + qp.q.dot(g));
    const Eigen::VectorXd g2 = 0.5 * g;
    CHECK(explicit_cost(h, cfg, g2, y_ini, r) - (0.5 * g2.dot(qp.P * g2) + qp.q.dot(g2)) ==
          doctest::Approx(offset).epsilon(1e-9));
}

TEST_CASE("predictions on noiseless LTI data follow the true system") {
    const auto sys = test::oscillator();
    const HankelSet h = lti_set(sys, 300, 2, 5, 5);
    ControllerConfig cfg;
    cfg.lambda_g = 1e-8;
    cfg.R(0, 0) = 1.0;
    cfg.u_min(0) = -5.0;
    cfg.u_max(0) = 5.0;
    cfg.y_min(0) = -50.0;
    cfg.y_max(0) = 50.0;

    Eigen::MatrixXd u_past(1, 2);
    u_past << 0.4, -0.3;
    const Window w = window_from(sys, Eigen::Vector2d(0.7, -0.2), u_past);
    // reference: the free response, reachable with zero input
    const Eigen::MatrixXd free = sys.simulate(w.x_now, Eigen::MatrixXd::Zero(1, 5));
    const Eigen::VectorXd r = free.row(0).transpose();

    DeepcController ctrl(cfg);
    InitBuffer buf(2, 1, 1);
    for (int k = 0; k < 2; ++k) buf.push(Eigen::VectorXd::Constant(1, w.u_ini(k)), Eigen::VectorXd::Constant(1, w.y_ini(k)));
    const ControlResult res = ctrl.step(h, buf, r);
    REQUIRE(res.solver.status == QpStatus::optimal);
    CHECK(res.u_plan.rows() == 5);
    CHECK(res.y_pred.rows() == 5);

    const Eigen::MatrixXd y_true = sys.simulate(w.x_now, res.u_plan.transpose());
    CHECK((res.y_pred.col(0) - y_true.row(0).transpose()).cwiseAbs().maxCoeff() <= 1e-4);
    CHECK(std::abs(res.u_apply(0)) <= 1e-3);
    CHECK(res.sigma_norm <= 1e-4);
}

TEST_CASE("a pinned input box yields the free response") {
    const auto sys = test::oscillator();
    const HankelSet h = lti_set(sys, 300, 2, 5, 6);
    ControllerConfig cfg;
    cfg.lambda_g = 1e-8;
    cfg.lambda_ini = 1e9;  // the reference pulls against the initial condition; keep the slack negligible
    cfg.y_min(0) = -50.0;
    cfg.y_max(0) = 50.0;
    Eigen::MatrixXd u_past(1, 2);
    u_past << -0.2, 0.5;
    const Window w = window_from(sys, Eigen::Vector2d(-0.4, 0.3), u_past);
    QpProblem qp = condense(h, cfg, w.u_ini, w.y_ini, Eigen::VectorXd::Constant(5, 1.0));
    qp.lb.head(5).setZero();
    qp.ub.head(5).setZero();
    const QpSolution s = solve_qp(qp);
    REQUIRE(s.status == QpStatus::optimal);
    CHECK((h.uf * s.z_star).cwiseAbs().maxCoeff() <= 1e-6);
    const Eigen::MatrixXd free = sys.simulate(w.x_now, Eigen::MatrixXd::Zero(1, 5));
    CHECK((h.yf * s.z_star - free.row(0).transpose()).cwiseAbs().maxCoeff() <= 1e-4);
}

TEST_CASE("slack shrinks as its weight grows") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> nd;
    const auto sys = test::oscillator();
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        CAPTURE(seed);
        Trajectory tr = test::lti_data(sys, 80, seed);
        for (Index k = 0; k < tr.length(); ++k) tr.y(0, k) += 0.05 * nd(rng);  // noisy data leaves slack nonzero
        std::vector<Trajectory> segs{tr};
        const HankelSet h = build_hankel_set(segs, 2, 5);
        const Eigen::Vector2d u_ini(nd(rng) * 0.1, nd(rng) * 0.1);
        const Eigen::Vector2d y_ini(nd(rng), nd(rng));
        const Eigen::VectorXd r = Eigen::VectorXd::Constant(5, 0.5);

        double prev = std::numeric_limits<double>::infinity();
        for (double lambda_ini : {1e-2, 1e-1, 1.0, 10.0, 100.0, 1e3, 1e4}) {
            ControllerConfig cfg;
            cfg.lambda_g = 1.0;
            cfg.lambda_ini = lambda_ini;
            cfg.u_min(0) = -10.0;
            cfg.u_max(0) = 10.0;
            cfg.y_min(0) = -50.0;
            cfg.y_max(0) = 50.0;
            QpSettings tight;
            tight.eps_abs = tight.eps_rel = 1e-10;
            const QpSolution s = solve_qp(condense(h, cfg, u_ini, y_ini, r), tight);
            REQUIRE(s.status == QpStatus::optimal);
            const double slack = (h.yp * s.z_star - y_ini).norm();
            CHECK(slack <= prev * (1.0 + 1e-6) + 1e-9);
            prev = slack;
        }
    }
}

TEST_CASE("applied input respects the bounds") {
    const auto sys = test::oscillator();
    const HankelSet h = lti_set(sys, 200, 2, 5, 7);
    ControllerConfig cfg;
    cfg.y_min(0) = -50.0;
    cfg.y_max(0) = 50.0;
    DeepcController ctrl(cfg);
    InitBuffer buf(2, 1, 1);
    buf.push(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1));
    buf.push(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1));
    for (double target : {-40.0, 40.0, 3.0}) {
        const ControlResult res = ctrl.step(h, buf, Eigen::VectorXd::Constant(5, target));
        CHECK(res.u_apply(0) >= -0.25);
        CHECK(res.u_apply(0) <= 0.25);
    }
}

TEST_CASE("swapping Hankel sets of equal shape only replaces data") {
    const auto sys = test::oscillator();
    const HankelSet a = lti_set(sys, 150, 2, 5, 8);
    const HankelSet b = lti_set(sys, 150, 2, 5, 9);
    ControllerConfig cfg;
    cfg.y_min(0) = -50.0;
    cfg.y_max(0) = 50.0;
    DeepcController ctrl(cfg);
    InitBuffer buf(2, 1, 1);
    buf.push(Eigen::VectorXd::Constant(1, 0.1), Eigen::VectorXd::Constant(1, 0.2));
    buf.push(Eigen::VectorXd::Constant(1, -0.1), Eigen::VectorXd::Constant(1, 0.3));
    const Eigen::VectorXd r = Eigen::VectorXd::Constant(5, 0.5);

    const ControlResult first = ctrl.step(a, buf, r);
    CHECK(ctrl.setups() == 1);
    const ControlResult repeat = ctrl.step(a, buf, r);
    CHECK(ctrl.setups() == 1);
    CHECK(repeat.solver.iterations <= first.solver.iterations);
    CHECK((repeat.g - first.g).cwiseAbs().maxCoeff() <= 1e-5);

    const ControlResult swapped = ctrl.step(b, buf, r);
    CHECK(ctrl.setups() == 2);
    CHECK(swapped.g.size() == first.g.size());
    CHECK(swapped.u_plan.rows() == first.u_plan.rows());
    const QpProblem pa = condense(a, cfg, buf.u_ini(), buf.y_ini(), r);
    const QpProblem pb = condense(b, cfg, buf.u_ini(), buf.y_ini(), r);
    CHECK(pa.P.rows() == pb.P.rows());
    CHECK(pa.A_eq.rows() == pb.A_eq.rows());
    CHECK(pa.C_in.rows() == pb.C_in.rows());
    CHECK(pa.lb == pb.lb);
    CHECK(pa.ub == pb.ub);

    // the controller reaches the same optimum as a one-off solve
    const QpSolution direct = solve_qp(pb);
    CHECK((swapped.g - direct.z_star).cwiseAbs().maxCoeff() <= 1e-4 * std::max(1.0, direct.z_star.cwiseAbs().maxCoeff()));
}

TEST_CASE("step refuses a cold buffer") {
    const auto sys = test::oscillator();
    const HankelSet h = lti_set(sys, 100, 2, 5, 10);
    DeepcController ctrl(ControllerConfig{});
    InitBuffer buf(2, 1, 1);
    buf.push(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1));
    CHECK_THROWS_AS(ctrl.step(h, buf, Eigen::VectorXd::Zero(5)), SolverError);
}
