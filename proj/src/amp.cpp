#include "spikegen/amp.hpp"
#include <algorithm>

namespace spikegen {

void AmpConfig::validate() const {
    require(max_iter >= 1, "amp: max_iter must be >= 1");
    require(tol > 0.0, "amp: tol must be > 0");
    require(damping >= 0.0 && damping < 1.0, "amp: damping must lie in [0, 1)");
    require(init_sigma2 > 0.0, "amp: init_sigma2 must be > 0");
}

namespace {

void check_finite(const Vec& x, const char* what, int t) {
    if (!x.allFinite())
        throw NumericalError(std::string("amp diverged: non-finite ") + what + " at iteration " + std::to_string(t));
}

// Spiked layer and the output channel. Yv is Y v_hat^t (Y^T u_hat^t for
// Wishart), memory the Onsager coefficient 1^T c / p, Wz = W z_hat^t.
void spiked_and_out(AmpStateWigner& n, const AmpStateWigner& s, const Vec& Yv, double memory, double A_v,
                    const Vec& Wz, double delta, const Activation& act, const AmpConfig& cfg) {
    const double p = static_cast<double>(s.v_hat.size()), k = static_cast<double>(s.z_hat.size());
    n.B_v = Yv / (delta * std::sqrt(p));
    if (cfg.onsager) n.B_v -= (memory / delta) * s.v_hat_prev;
    n.A_v = A_v;
    n.V = s.c_z.sum() / k;
    if (!(n.V > 0.0)) throw NumericalError("amp diverged: V <= 0 at iteration " + std::to_string(s.t));
    n.omega = Wz / std::sqrt(k) - n.V * s.g_prev;
    check_finite(n.B_v, "B_v", s.t);
    check_finite(n.omega, "omega", s.t);
    const Eigen::Index m = n.B_v.size();
    n.g.resize(m);
    n.v_hat.resize(m);
    n.c_v.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto r = OutRow(act, n.A_v, n.omega[i], n.V)(n.B_v[i]);
        n.g[i] = r.fout;
        n.v_hat[i] = r.fv;
        n.c_v[i] = r.dfv;
    }
    check_finite(n.g, "g", s.t);
}

void wigner_out(AmpStateWigner& n, const AmpStateWigner& s, const Vec& Yv, const Vec& Wz, double delta,
                const Activation& act, const AmpConfig& cfg) {
    const double p = static_cast<double>(s.v_hat.size());
    spiked_and_out(n, s, Yv, s.c_v.sum() / p, s.v_hat.squaredNorm() / (delta * p), Wz, delta, act, cfg);
}

// Generative layer second half and the latent marginals. WTg = W^T g^t.
void latent_update(AmpStateWigner& n, const AmpStateWigner& s, const Vec& WTg, const LatentPrior& latent,
                   const AmpConfig& cfg) {
    const double k = static_cast<double>(s.z_hat.size());
    n.Lambda = n.g.squaredNorm() / k;
    n.gamma = WTg / std::sqrt(k) + n.Lambda * s.z_hat;
    check_finite(n.gamma, "gamma", s.t);
    n.z_hat.resize(s.z_hat.size());
    n.c_z.resize(s.z_hat.size());
    for (Eigen::Index l = 0; l < n.gamma.size(); ++l) {
        const auto r = prior_moments(latent, {n.gamma[l], n.Lambda});
        n.z_hat[l] = r.f;
        n.c_z[l] = r.df;
    }
    if (cfg.damping > 0.0) {
        n.v_hat = cfg.damping * s.v_hat + (1.0 - cfg.damping) * n.v_hat;
        n.z_hat = cfg.damping * s.z_hat + (1.0 - cfg.damping) * n.z_hat;
    }
    n.v_hat_prev = s.v_hat;
    n.g_prev = n.g;
    n.t = s.t + 1;
    check_finite(n.v_hat, "v_hat", s.t);
    check_finite(n.z_hat, "z_hat", s.t);
}

// out = A V for a V with few columns. Eigen's GEMM packs all of A on every
// call, which dominates when V is this thin; here each column segment of A is
// read once per row block while the matching output rows stay in L1.
template <class MatA>
void thin_product(const MatA& A, const Mat& V, Mat& out) {
    const Eigen::Index n = A.rows(), c = A.cols(), m = V.cols();
    out.setZero(n, m);
    const Eigen::Index bs = 4096;
    for (Eigen::Index i0 = 0; i0 < n; i0 += bs) {
        const Eigen::Index len = std::min(bs, n - i0);
        Eigen::Index j = 0;
        for (; j + 4 <= c; j += 4) {
            using S = typename MatA::Scalar;
            const S* __restrict a0 = A.data() + j * n + i0;
            const S* __restrict a1 = a0 + n;
            const S* __restrict a2 = a1 + n;
            const S* __restrict a3 = a2 + n;
            for (Eigen::Index r = 0; r < m; ++r) {
                const double s0 = V(j, r), s1 = V(j + 1, r), s2 = V(j + 2, r), s3 = V(j + 3, r);
                double* __restrict o = out.col(r).data() + i0;
                for (Eigen::Index i = 0; i < len; ++i) o[i] += s0 * a0[i] + s1 * a1[i] + s2 * a2[i] + s3 * a3[i];
            }
        }
        for (; j < c; ++j) {
            const typename MatA::Scalar* __restrict a0 = A.data() + j * n + i0;
            for (Eigen::Index r = 0; r < m; ++r) {
                const double s0 = V(j, r);
                double* __restrict o = out.col(r).data() + i0;
                for (Eigen::Index i = 0; i < len; ++i) o[i] += s0 * a0[i];
            }
        }
    }
}

bool settled(const Vec& now, const Vec& before, double tol) {
    const double nb = before.norm();
    if (now.norm() < tol * std::sqrt(static_cast<double>(now.size()))) return true; // collapsed onto v_hat = 0
    return nb > 0.0 && (now - before).norm() / nb < tol;
}

void check_instance(const SpikedInstance& inst, const GenerativeModel& gm, ModelKind kind) {
    require(inst.model == kind, "amp: instance has the wrong model kind");
    require(inst.delta > 0.0 && std::isfinite(inst.delta), "amp: delta must be > 0");
    require(gm.W.rows() == gm.p && gm.p > 0 && gm.k > 0, "amp: generative model is malformed");
    require(inst.Y.cols() == gm.p, "amp: Y and W dimensions do not match");
}

void finish(AmpResult& res, const Vec& v_hat, const Vec& v_star) {
    const auto a = align_and_mse(v_hat, v_star);
    res.mse_v = a.mse;
    res.sign = a.sign;
}

} // namespace

AmpStateWigner amp_wigner_init(int p, int k, double sigma2, std::uint64_t seed) {
    require(p > 0 && k > 0, "amp: p and k must be positive");
    require(sigma2 > 0.0, "amp: init_sigma2 must be > 0");
    Rng rng(seed);
    AmpStateWigner s;
    const double sd = std::sqrt(sigma2);
    s.v_hat = sd * rng.normal_vec(p);
    s.z_hat = sd * rng.normal_vec(k);
    s.c_v = Vec::Ones(p);
    s.c_z = Vec::Ones(k);
    s.v_hat_prev = Vec::Zero(p);
    s.g_prev = Vec::Zero(p);
    s.g = Vec::Zero(p);
    s.B_v = Vec::Zero(p);
    s.omega = Vec::Zero(p);
    s.gamma = Vec::Zero(k);
    s.t = 1;
    return s;
}

AmpStateWishart amp_wishart_init(int n, int p, int k, double sigma2, std::uint64_t seed) {
    require(n > 0, "amp: n must be positive");
    AmpStateWishart s;
    s.w = amp_wigner_init(p, k, sigma2, seed);
    Rng rng = Rng(seed).split(1);
    s.u_hat = std::sqrt(sigma2) * rng.normal_vec(n);
    s.c_u = Vec::Ones(n);
    s.B_u = Vec::Zero(n);
    s.u_hat_prev = Vec::Zero(n);
    return s;
}

AmpStateWigner amp_wigner_step(const AmpStateWigner& s, const SpikedInstance& inst, const GenerativeModel& gm,
                               const AmpConfig& cfg) {
    check_instance(inst, gm, ModelKind::Wigner);
    require(s.v_hat.size() == gm.p && s.z_hat.size() == gm.k, "amp: state does not match the model");
    AmpStateWigner n;
    const Vec Yv = inst.Y * s.v_hat;
    const Vec Wz = gm.W * s.z_hat;
    wigner_out(n, s, Yv, Wz, inst.delta, gm.act, cfg);
    const Vec WTg = gm.W.transpose() * n.g;
    latent_update(n, s, WTg, gm.latent, cfg);
    return n;
}

AmpStateWishart amp_wishart_step(const AmpStateWishart& s, const SpikedInstance& inst, const GenerativeModel& gm,
                                 const LatentPrior& prior_u, const AmpConfig& cfg) {
    check_instance(inst, gm, ModelKind::Wishart);
    require(s.u_hat.size() == inst.Y.rows(), "amp: state does not match Y");
    const double p = gm.p, d = inst.delta, sp = std::sqrt(p);
    AmpStateWishart n;
    // u-side uses v_hat^t and the v-side uses u_hat^t
    n.B_u = inst.Y * s.w.v_hat / (d * sp);
    if (cfg.onsager) n.B_u -= (s.w.c_v.sum() / p / d) * s.u_hat_prev;
    n.A_u = s.w.v_hat.squaredNorm() / (d * p);
    check_finite(n.B_u, "B_u", s.w.t);

    const Vec Yu = inst.Y.transpose() * s.u_hat;
    const Vec Wz = gm.W * s.w.z_hat;
    spiked_and_out(n.w, s.w, Yu, s.c_u.sum() / p, s.u_hat.squaredNorm() / (d * p), Wz, d, gm.act, cfg);
    const Vec WTg = gm.W.transpose() * n.w.g;
    latent_update(n.w, s.w, WTg, gm.latent, cfg);

    n.u_hat.resize(n.B_u.size());
    n.c_u.resize(n.B_u.size());
    for (Eigen::Index a = 0; a < n.B_u.size(); ++a) {
        const auto r = prior_moments(prior_u, {n.B_u[a], n.A_u});
        n.u_hat[a] = r.f;
        n.c_u[a] = r.df;
    }
    if (cfg.damping > 0.0) n.u_hat = cfg.damping * s.u_hat + (1.0 - cfg.damping) * n.u_hat;
    n.u_hat_prev = s.u_hat;
    check_finite(n.u_hat, "u_hat", s.w.t);
    return n;
}

AmpResult amp_wigner_run(const SpikedInstance& inst, const GenerativeModel& gm, const AmpConfig& cfg,
                         std::uint64_t seed) {
    cfg.validate();
    check_instance(inst, gm, ModelKind::Wigner);
    const double p = gm.p;
    const Vec& vs = inst.truth.v;
    AmpResult res;
    auto s = amp_wigner_init(gm.p, gm.k, cfg.init_sigma2, seed);
    res.overlap_trace.push_back(s.v_hat.dot(vs) / p);
    try {
        for (int it = 1; it <= cfg.max_iter; ++it) {
            auto n = amp_wigner_step(s, inst, gm, cfg);
            res.overlap_trace.push_back(n.v_hat.dot(vs) / p);
            res.iters = it;
            const bool done = settled(n.v_hat, s.v_hat, cfg.tol);
            s = std::move(n);
            if (done) {
                res.converged = true;
                break;
            }
        }
    } catch (const NumericalError& e) {
        res.diverged = true;
        res.message = e.what();
    }
    res.v_hat = s.v_hat;
    res.z_hat = s.z_hat;
    finish(res, s.v_hat, vs);
    return res;
}

AmpResult amp_wishart_run(const SpikedInstance& inst, const GenerativeModel& gm, const LatentPrior& prior_u,
                          const AmpConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    check_instance(inst, gm, ModelKind::Wishart);
    const double p = gm.p, n_rows = inst.Y.rows();
    const Vec& vs = inst.truth.v;
    const Vec& us = inst.truth.u;
    AmpResult res;
    auto s = amp_wishart_init(static_cast<int>(inst.Y.rows()), gm.p, gm.k, cfg.init_sigma2, seed);
    res.overlap_trace.push_back(s.w.v_hat.dot(vs) / p);
    res.overlap_u_trace.push_back(s.u_hat.dot(us) / n_rows);
    try {
        for (int it = 1; it <= cfg.max_iter; ++it) {
            auto n = amp_wishart_step(s, inst, gm, prior_u, cfg);
            res.overlap_trace.push_back(n.w.v_hat.dot(vs) / p);
            res.overlap_u_trace.push_back(n.u_hat.dot(us) / n_rows);
            res.iters = it;
            const bool done = settled(n.w.v_hat, s.w.v_hat, cfg.tol);
            s = std::move(n);
            if (done) {
                res.converged = true;
                break;
            }
        }
    } catch (const NumericalError& e) {
        res.diverged = true;
        res.message = e.what();
    }
    res.v_hat = s.w.v_hat;
    res.z_hat = s.w.z_hat;
    // Y fixes the product u v^T, so one sign serves both factors
    finish(res, s.w.v_hat, vs);
    res.u_hat = res.sign * s.u_hat;
    return res;
}

std::vector<AmpResult> amp_wigner_batch(const Eigen::MatrixXf& xi, const Eigen::MatrixXf& W, const std::vector<AmpTask>& tasks,
                                        const AmpConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const int p = static_cast<int>(xi.rows()), k = static_cast<int>(W.cols());
    require(xi.cols() == p && W.rows() == p && k > 0, "amp batch: xi and W dimensions do not match");
    const int R = static_cast<int>(tasks.size());
    for (const auto& t : tasks) {
        require(t.v_star.size() == p, "amp batch: spike has the wrong length");
        require(t.delta > 0.0 && std::isfinite(t.delta), "amp batch: delta must be > 0");
    }
    const double sp = std::sqrt(static_cast<double>(p));
    std::vector<AmpStateWigner> st;
    std::vector<AmpResult> res(R);
    std::vector<char> active(R, 1);
    Rng root(seed);
    for (int r = 0; r < R; ++r) {
        st.push_back(amp_wigner_init(p, k, cfg.init_sigma2, root.split(r).seed()));
        res[r].overlap_trace.push_back(st[r].v_hat.dot(tasks[r].v_star) / p);
    }
    const Eigen::MatrixXf Wt = W.transpose();
    Mat Vh(p, R), Zh(k, R), G(p, R), XV, WZ, WTG;
    for (int it = 1; it <= cfg.max_iter; ++it) {
        std::vector<int> idx;
        for (int r = 0; r < R; ++r)
            if (active[r]) idx.push_back(r);
        if (idx.empty()) break;
        const int m = static_cast<int>(idx.size());
        Vh.resize(p, m);
        Zh.resize(k, m);
        for (int j = 0; j < m; ++j) {
            Vh.col(j) = st[idx[j]].v_hat;
            Zh.col(j) = st[idx[j]].z_hat;
        }
        thin_product(xi, Vh, XV);
        thin_product(W, Zh, WZ);
        std::vector<AmpStateWigner> nx(m);
        G.resize(p, m);
        for (int j = 0; j < m; ++j) {
            const int r = idx[j];
            const auto& tk = tasks[r];
            const Vec Yv = std::sqrt(tk.delta) * XV.col(j) + (tk.v_star.dot(st[r].v_hat) / sp) * tk.v_star;
            try {
                wigner_out(nx[j], st[r], Yv, WZ.col(j), tk.delta, tk.act, cfg);
                G.col(j) = nx[j].g;
            } catch (const NumericalError& e) {
                res[r].diverged = true;
                res[r].message = e.what();
                active[r] = 0;
                G.col(j).setZero();
            }
        }
        thin_product(Wt, G, WTG);
        for (int j = 0; j < m; ++j) {
            const int r = idx[j];
            if (!active[r]) continue;
            try {
                latent_update(nx[j], st[r], WTG.col(j), tasks[r].latent, cfg);
            } catch (const NumericalError& e) {
                res[r].diverged = true;
                res[r].message = e.what();
                active[r] = 0;
                continue;
            }
            res[r].overlap_trace.push_back(nx[j].v_hat.dot(tasks[r].v_star) / p);
            res[r].iters = it;
            const bool done = settled(nx[j].v_hat, st[r].v_hat, cfg.tol);
            st[r] = std::move(nx[j]);
            if (done) {
                res[r].converged = true;
                active[r] = 0;
            }
        }
    }
    for (int r = 0; r < R; ++r) {
        res[r].v_hat = st[r].v_hat;
        res[r].z_hat = st[r].z_hat;
        finish(res[r], st[r].v_hat, tasks[r].v_star);
    }
    return res;
}

Alignment align_and_mse(const Vec& v_hat, const Vec& v_star) {
    require(v_hat.size() == v_star.size() && v_hat.size() > 0, "align_and_mse: length mismatch");
    const double p = static_cast<double>(v_hat.size());
    const double plus = (v_hat - v_star).squaredNorm() / p, minus = (v_hat + v_star).squaredNorm() / p;
    if (minus < plus) return {minus, -1};
    return {plus, 1};
}

} // namespace spikegen
