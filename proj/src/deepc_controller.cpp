#include "gsdeepc/deepc_controller.hpp"

#include <string>

#include "gsdeepc/errors.hpp"

namespace gsdeepc {

namespace {

Eigen::MatrixXd horizon_blocks(const Eigen::MatrixXd& w, int horizon) {
    const auto d = w.rows();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d * horizon, d * horizon);
    for (int k = 0; k < horizon; ++k) out.block(k * d, k * d, d, d) = w;
    return out;
}

bool positive_definite(const Eigen::MatrixXd& m) {
    if (m.rows() == 0 || m.rows() != m.cols()) return false;
    if (!m.isApprox(m.transpose())) return false;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    return llt.info() == Eigen::Success;
}

void check_shape(const HankelSet& h, const ControllerConfig& cfg) {
    const auto m = cfg.inputs();
    const auto p = cfg.outputs();
    if (h.t_ini != cfg.t_ini || h.horizon != cfg.horizon || h.up.rows() != m * cfg.t_ini ||
        h.yp.rows() != p * cfg.t_ini || h.uf.rows() != m * cfg.horizon || h.yf.rows() != p * cfg.horizon)
        throw ConfigError("Hankel set dimensions do not match the controller configuration");
    if (h.cols() == 0) throw ConfigError("Hankel set has no columns");
}

}  // namespace

void ControllerConfig::validate() const {
    if (t_ini < 1 || horizon < 1) throw ConfigError("controller: t_ini and horizon must be positive");
    if (!positive_definite(Q)) throw ConfigError("controller: Q must be symmetric positive definite");
    if (!positive_definite(R)) throw ConfigError("controller: R must be symmetric positive definite");
    if (!(lambda_g > 0.0) || !(lambda_ini > 0.0)) throw ConfigError("controller: lambda_g and lambda_ini must be > 0");
    if (u_min.size() != inputs() || u_max.size() != inputs() || y_min.size() != outputs() ||
        y_max.size() != outputs())
        throw ConfigError("controller: bound vectors do not match Q/R dimensions");
    if ((u_min.array() >= u_max.array()).any()) throw ConfigError("controller: u_min must be < u_max");
    if ((y_min.array() >= y_max.array()).any()) throw ConfigError("controller: y_min must be < y_max");
}

InitBuffer::InitBuffer(int t_ini, Index inputs, Index outputs) : t_ini_(t_ini), m_(inputs), p_(outputs) {
    if (t_ini < 1) throw ConfigError("init buffer length must be positive");
}

void InitBuffer::push(const Eigen::VectorXd& u, const Eigen::VectorXd& y) {
    if (u.size() != m_ || y.size() != p_) throw DimensionError("init buffer sample has wrong dimension");
    samples_.emplace_back(u, y);
    while (static_cast<int>(samples_.size()) > t_ini_) samples_.pop_front();
}

Eigen::VectorXd InitBuffer::u_ini() const {
    if (!warm()) throw SolverError("init buffer is not warmed up (" + std::to_string(size()) + "/" +
                                   std::to_string(t_ini_) + " samples)");
    Eigen::VectorXd out(m_ * t_ini_);
    for (int k = 0; k < t_ini_; ++k) out.segment(k * m_, m_) = samples_[k].first;
    return out;
}

Eigen::VectorXd InitBuffer::y_ini() const {
    if (!warm()) throw SolverError("init buffer is not warmed up (" + std::to_string(size()) + "/" +
                                   std::to_string(t_ini_) + " samples)");
    Eigen::VectorXd out(p_ * t_ini_);
    for (int k = 0; k < t_ini_; ++k) out.segment(k * p_, p_) = samples_[k].second;
    return out;
}

Eigen::MatrixXd deepc_hessian(const HankelSet& h, const ControllerConfig& cfg) {
    check_shape(h, cfg);
    const Eigen::MatrixXd qbar = horizon_blocks(cfg.Q, cfg.horizon);
    const Eigen::MatrixXd rbar = horizon_blocks(cfg.R, cfg.horizon);
    Eigen::MatrixXd P = h.yf.transpose() * qbar * h.yf;
    P.noalias() += h.uf.transpose() * rbar * h.uf;
    P.noalias() += cfg.lambda_ini * h.yp.transpose() * h.yp;
    P.diagonal().array() += cfg.lambda_g;
    P *= 2.0;
    return 0.5 * (P + P.transpose());
}

QpProblem condense(const HankelSet& h, const ControllerConfig& cfg, const Eigen::VectorXd& u_ini,
                   const Eigen::VectorXd& y_ini, const Eigen::VectorXd& reference) {
    cfg.validate();
    check_shape(h, cfg);
    const auto m = cfg.inputs();
    const auto p = cfg.outputs();
    if (u_ini.size() != m * cfg.t_ini || y_ini.size() != p * cfg.t_ini || reference.size() != p * cfg.horizon)
        throw ConfigError("condense: u_ini, y_ini or reference has wrong length");

    const Eigen::MatrixXd qbar = horizon_blocks(cfg.Q, cfg.horizon);
    QpProblem qp;
    qp.P = deepc_hessian(h, cfg);
    qp.q = -2.0 * (h.yf.transpose() * (qbar * reference) + cfg.lambda_ini * h.yp.transpose() * y_ini);
    qp.A_eq = h.up;
    qp.b_eq = u_ini;
    qp.C_in.resize(h.uf.rows() + h.yf.rows(), h.cols());
    qp.C_in << h.uf, h.yf;
    qp.lb.resize(qp.C_in.rows());
    qp.ub.resize(qp.C_in.rows());
    qp.lb << cfg.u_min.replicate(cfg.horizon, 1), cfg.y_min.replicate(cfg.horizon, 1);
    qp.ub << cfg.u_max.replicate(cfg.horizon, 1), cfg.y_max.replicate(cfg.horizon, 1);
    return qp;
}

DeepcController::DeepcController(ControllerConfig cfg, QpSettings settings)
    : cfg_(std::move(cfg)), solver_(settings) {
    cfg_.validate();
    qbar_ = horizon_blocks(cfg_.Q, cfg_.horizon);
    rbar_ = horizon_blocks(cfg_.R, cfg_.horizon);
}

void DeepcController::activate(const HankelSet& h) {
    if (solver_.is_setup() && h.same_shape(active_) && h.up == active_.up && h.yp == active_.yp &&
        h.uf == active_.uf && h.yf == active_.yf)
        return;
    check_shape(h, cfg_);
    active_ = h;
    constraint_matrix_.resize(h.up.rows() + h.uf.rows() + h.yf.rows(), h.cols());
    constraint_matrix_ << h.up, h.uf, h.yf;
    // setup() drops any warm start: coefficients of another data set are not comparable.
    solver_.setup(deepc_hessian(h, cfg_), constraint_matrix_);
    ++setups_;
}

ControlResult DeepcController::step(const HankelSet& h, const InitBuffer& buffer, const Eigen::VectorXd& reference) {
    const Eigen::VectorXd u_ini = buffer.u_ini();
    const Eigen::VectorXd y_ini = buffer.y_ini();
    const auto m = cfg_.inputs();
    const auto p = cfg_.outputs();
    if (reference.size() != p * cfg_.horizon) throw ConfigError("reference must cover the prediction horizon");
    activate(h);

    const Eigen::VectorXd q =
        -2.0 * (h.yf.transpose() * (qbar_ * reference) + cfg_.lambda_ini * h.yp.transpose() * y_ini);
    const auto n_up = h.up.rows();
    const auto n_uf = h.uf.rows();
    const auto n_yf = h.yf.rows();
    Eigen::VectorXd l(n_up + n_uf + n_yf), u(n_up + n_uf + n_yf);
    l << u_ini, cfg_.u_min.replicate(cfg_.horizon, 1), cfg_.y_min.replicate(cfg_.horizon, 1);
    u << u_ini, cfg_.u_max.replicate(cfg_.horizon, 1), cfg_.y_max.replicate(cfg_.horizon, 1);

    ControlResult res;
    res.solver = solver_.solve(q, l, u);
    if (res.solver.status == QpStatus::primal_infeasible) {
        solver_.clear_warm_start();
        throw SolverError("DeePC QP is primal infeasible");
    }
    res.g = res.solver.z_star;
    const Eigen::VectorXd u_seq = h.uf * res.g;
    const Eigen::VectorXd y_seq = h.yf * res.g;
    res.u_plan = Eigen::Map<const Eigen::MatrixXd>(u_seq.data(), m, cfg_.horizon).transpose();
    res.y_pred = Eigen::Map<const Eigen::MatrixXd>(y_seq.data(), p, cfg_.horizon).transpose();
    res.u_apply = u_seq.head(m).cwiseMax(cfg_.u_min).cwiseMin(cfg_.u_max);
    res.g_norm = res.g.norm();
    res.sigma_norm = (h.yp * res.g - y_ini).norm();
    return res;
}

}  // namespace gsdeepc
