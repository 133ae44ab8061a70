#include "spikegen/state_evolution.hpp"
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <Eigen/Eigenvalues>
#include <algorithm>

namespace spikegen {

void SEConfig::validate() const {
    require(tol > 0.0, "SEConfig: tol must be positive");
    require(damping >= 0.0 && damping < 1.0, "SEConfig: damping must lie in [0,1)");
    require(epsilon > 0.0, "SEConfig: epsilon must be positive");
    require(max_iter > 0, "SEConfig: max_iter must be positive");
}

namespace {

void check_finite(const OverlapState& s) {
    if (!std::isfinite(s.q_v) || !std::isfinite(s.q_z) || !std::isfinite(s.q_hat_z) || !std::isfinite(s.q_u))
        throw NumericalError("state evolution produced a non-finite overlap");
}

double cap_below(double rho) { return rho * (1.0 - 1e-12); }

template <class T>
bool clamp_to(T& v, T lo, T hi) {
    const T c = std::clamp(v, lo, hi);
    const bool moved = c != v;
    v = c;
    return moved;
}

double max_diff(const OverlapState& a, const OverlapState& b) {
    return std::max({std::abs(a.q_v - b.q_v), std::abs(a.q_z - b.q_z), std::abs(a.q_hat_z - b.q_hat_z),
                     std::abs(a.q_u - b.q_u)});
}

} // namespace

OverlapState se_step_wigner(const OverlapState& s, double delta, double alpha, const Activation& act,
                            const LatentPrior& latent, double damping, const QuadPolicy& pol) {
    require(delta > 0.0, "se_step: delta must be positive");
    require(alpha >= 0.0, "se_step: alpha must be >= 0");
    auto g = psi_out_grads(act, latent, s.q_v / delta, s.q_z, pol);
    OverlapState n = s;
    n.q_hat_z = damping * s.q_hat_z + (1.0 - damping) * 2.0 * alpha * g.dy;
    n.q_v = 2.0 * g.dx;
    n.q_z = 2.0 * psi_z_grad(latent, n.q_hat_z, pol);
    check_finite(n);
    return n;
}

OverlapState se_step_wishart(const OverlapState& s, double delta, double alpha, double beta,
                             const Activation& act, const LatentPrior& latent, const LatentPrior& prior_u,
                             double damping, bool tie_uv, const QuadPolicy& pol) {
    require(delta > 0.0, "se_step: delta must be positive");
    require(alpha >= 0.0, "se_step: alpha must be >= 0");
    require(beta > 0.0, "se_step: beta must be positive");
    auto g = psi_out_grads(act, latent, beta * s.q_u / delta, s.q_z, pol);
    OverlapState n = s;
    n.q_hat_z = damping * s.q_hat_z + (1.0 - damping) * 2.0 * alpha * g.dy;
    n.q_v = 2.0 * g.dx;
    n.q_z = 2.0 * psi_z_grad(latent, n.q_hat_z, pol);
    n.q_u = tie_uv ? n.q_v : 2.0 * psi_z_grad(prior_u, s.q_v / delta, pol);
    check_finite(n);
    return n;
}

OverlapState se_initial_state(const SEConfig& cfg, const Activation& act, const LatentPrior& latent,
                              const ModelSpec& model) {
    OverlapState s;
    if (cfg.init == InitKind::Uninformative) {
        s.q_v = s.q_z = s.q_u = cfg.epsilon;
    } else {
        // strictly inside the bounds so that rho_z - q_z stays positive
        const double f = 1.0 - cfg.epsilon;
        s.q_v = rho_v(act, latent) * f;
        s.q_z = latent.rho * f;
        s.q_u = model.prior_u.rho * f;
    }
    if (model.kind == ModelKind::Wigner) s.q_u = 0.0;
    return s;
}

PhasePoint se_run(const SEConfig& cfg, double delta, double alpha, const Activation& act,
                  const LatentPrior& latent, const ModelSpec& model) {
    cfg.validate();
    require(delta > 0.0 && std::isfinite(delta), "se_run: delta must be positive");
    require(alpha >= 0.0, "se_run: alpha must be >= 0");
    const bool wishart = model.kind == ModelKind::Wishart;
    const double rv = rho_v(act, latent);

    PhasePoint pp;
    pp.alpha = alpha;
    pp.delta = delta;
    pp.init_used = cfg.init;
    OverlapState s = se_initial_state(cfg, act, latent, model);
    double d_prev = kInf;
    for (int it = 1; it <= cfg.max_iter; ++it) {
        const double damp = it == 1 ? 0.0 : cfg.damping;
        OverlapState n = wishart ? se_step_wishart(s, delta, alpha, model.beta, act, latent, model.prior_u,
                                                   damp, false, cfg.quad)
                                 : se_step_wigner(s, delta, alpha, act, latent, damp, cfg.quad);
        pp.clamp_events += clamp_to(n.q_v, 0.0, rv);
        pp.clamp_events += clamp_to(n.q_z, 0.0, cap_below(latent.rho));
        pp.clamp_events += clamp_to(n.q_hat_z, 0.0, kInf);
        if (wishart) pp.clamp_events += clamp_to(n.q_u, 0.0, model.prior_u.rho);
        const double d = max_diff(n, s);
        s = n;
        pp.iters = it;
        // A small step alone is not enough when the contraction is slow: the
        // remaining distance is about d r / (1 - r) with r the step ratio.
        const double r = d / d_prev;
        d_prev = d;
        if (d == 0.0 || (d < cfg.tol && r < 1.0 && d * r / (1.0 - r) < cfg.tol)) {
            pp.converged = true;
            break;
        }
    }
    pp.state = s;
    pp.q_v_star = s.q_v;
    pp.mmse_v = mmse(s.q_v, rv);
    return pp;
}

FixedPointPair se_fixed_point(const SEConfig& cfg, double delta, double alpha, const Activation& act,
                              const LatentPrior& latent, const ModelSpec& model) {
    SEConfig c = cfg;
    FixedPointPair out;
    c.init = InitKind::Uninformative;
    out.uninformative = se_run(c, delta, alpha, act, latent, model);
    c.init = InitKind::Informative;
    out.informative = se_run(c, delta, alpha, act, latent, model);
    return out;
}

double mmse(double q_v_star, double rho_v) { return rho_v - q_v_star; }
double matrix_mmse(double q_v_star, double rho_v) { return rho_v * rho_v - q_v_star * q_v_star; }

double i_rs_at(double q_v, double delta, double alpha, const Activation& act, const LatentPrior& latent,
               const QuadPolicy& pol) {
    require(delta > 0.0, "i_rs: delta must be positive");
    require(alpha > 0.0, "i_rs: alpha must be positive");
    const double rv = rho_v(act, latent);
    require(q_v >= 0.0 && q_v <= rv, "i_rs: q_v must lie in [0, rho_v]");
    const double x = q_v / delta;
    const double top = cap_below(latent.rho);

    // inner GLM fixed point q_z = F(q_z) at fixed x, bracketed on [0, top]
    auto qhat_of = [&](double qz) { return 2.0 * alpha * psi_out_grads(act, latent, x, qz, pol).dy; };
    auto gap = [&](double qz) { return 2.0 * psi_z_grad(latent, qhat_of(qz), pol) - qz; };
    double qz = 0.0;
    const double g0 = gap(0.0);
    if (g0 > 0.0) {
        if (gap(top) >= 0.0) {
            qz = top;
        } else {
            std::uintmax_t iters = 200;
            auto r = boost::math::tools::toms748_solve(
                gap, 0.0, top, g0, gap(top), boost::math::tools::eps_tolerance<double>(50), iters);
            qz = 0.5 * (r.first + r.second);
        }
    }
    const double qh = qhat_of(qz);
    return rv * rv / (4.0 * delta) + q_v * q_v / (4.0 * delta) +
           (0.5 * qz * qh - psi_z(latent, qh, pol) - alpha * psi_out(act, latent, x, qz, pol)) / alpha;
}

MutualInfo mutual_information(double delta, double alpha, const Activation& act, const LatentPrior& latent,
                              const QuadPolicy& pol) {
    require(delta > 0.0 && std::isfinite(delta), "mutual_information: delta must be positive");
    const double rv = rho_v(act, latent);
    auto f = [&](double q) { return i_rs_at(q, delta, alpha, act, latent, pol); };

    // coarse scan guards against picking a non-global local minimum
    const int n = 16;
    std::vector<double> val(n + 1);
    int best = 0;
    for (int i = 0; i <= n; ++i) {
        val[i] = f(rv * i / n);
        if (val[i] < val[best]) best = i;
    }
    const double lo = rv * std::max(0, best - 1) / n, hi = rv * std::min(n, best + 1) / n;
    auto r = boost::math::tools::brent_find_minima(f, lo, hi, 40);
    if (val[best] < r.second) return {val[best], rv * best / n};
    return {r.second, r.first};
}

Eigen::Matrix3d jacobian_at_zero(double delta, double alpha, const Activation& act, const LatentPrior& latent) {
    require(act.zero_mean_output(), "uninformative fixed point does not exist for this channel");
    require(delta > 0.0, "jacobian_at_zero: delta must be positive");
    const auto m = null_moments(act, latent);
    const double rz = latent.rho;
    Eigen::Matrix3d J;
    J << m.Ev2 * m.Ev2 / delta, 0.0, m.Evx * m.Evx / (rz * rz),
        alpha * m.Evx * m.Evx / delta, 0.0, alpha * (m.Ex2 - rz) * (m.Ex2 - rz) / (rz * rz),
        0.0, rz * rz, 0.0;
    return J;
}

Eigen::Matrix4d jacobian_at_zero_wishart(double delta, double alpha, double beta, const Activation& act,
                                         const LatentPrior& latent, const LatentPrior& prior_u) {
    require(act.zero_mean_output(), "uninformative fixed point does not exist for this channel");
    require(delta > 0.0 && beta > 0.0, "jacobian_at_zero_wishart: delta and beta must be positive");
    const auto m = null_moments(act, latent);
    const double rz = latent.rho, ru = prior_u.rho;
    Eigen::Matrix4d J = Eigen::Matrix4d::Zero();
    J(0, 1) = ru * ru / delta;
    J(1, 0) = beta * m.Ev2 * m.Ev2 / delta;
    J(1, 3) = m.Evx * m.Evx / (rz * rz);
    J(2, 0) = beta * alpha * m.Evx * m.Evx / delta;
    J(2, 3) = alpha * (m.Ex2 - rz) * (m.Ex2 - rz) / (rz * rz);
    J(3, 2) = rz * rz;
    return J;
}

double spectral_radius(const Mat& J) {
    const int n = static_cast<int>(J.rows());
    require(n > 0 && J.cols() == n, "spectral_radius: square matrix expected");
    // Faddeev-LeVerrier: det(lambda I - J) = lambda^n + c[1] lambda^{n-1} + ... + c[n]
    std::vector<double> c(n + 1, 0.0);
    c[0] = 1.0;
    Mat M = Mat::Zero(n, n);
    const Mat I = Mat::Identity(n, n);
    for (int k = 1; k <= n; ++k) {
        M = J * M + c[k - 1] * I;
        c[k] = -(J * M).trace() / k;
    }
    Mat C = Mat::Zero(n, n);
    for (int j = 0; j < n; ++j) C(0, j) = -c[j + 1];
    for (int i = 1; i < n; ++i) C(i, i - 1) = 1.0;
    Eigen::EigenSolver<Mat> es(C, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

double delta_c(double alpha, const Activation& act, const LatentPrior& latent, const ModelSpec& model) {
    require(alpha >= 0.0, "delta_c: alpha must be >= 0");
    auto radius = [&](double d) {
        if (model.kind == ModelKind::Wishart)
            return spectral_radius(jacobian_at_zero_wishart(d, alpha, model.beta, act, latent, model.prior_u));
        return spectral_radius(jacobian_at_zero(d, alpha, act, latent));
    };
    double lo = 1e-12, hi = 1.0;
    if (radius(lo) < 1.0) return 0.0;
    while (radius(hi) >= 1.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e15) throw NumericalError("delta_c: no stable region found");
    }
    // radius exactly 1 counts as unstable
    while (hi - lo > 1e-14 * hi) {
        const double mid = 0.5 * (lo + hi);
        (radius(mid) >= 1.0 ? lo : hi) = mid;
    }
    return hi;
}

double delta_c_closed_form(double alpha, const Activation& act, const ModelSpec& model) {
    require(alpha >= 0.0, "delta_c_closed_form: alpha must be >= 0");
    double w;
    switch (act.kind) {
    case ActKind::Linear: w = 1.0 + alpha; break;
    case ActKind::Sign: w = 1.0 + 4.0 * alpha / (kPi * kPi); break;
    default: throw std::invalid_argument("uninformative fixed point does not exist for this channel");
    }
    return model.kind == ModelKind::Wishart ? std::sqrt(model.beta * w) : w;
}

} // namespace spikegen
