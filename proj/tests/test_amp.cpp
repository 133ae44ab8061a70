#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "spikegen/amp.hpp"
#include "spikegen/state_evolution.hpp"
#include <algorithm>
#include <numeric>

using namespace spikegen;

namespace {
const Activation lin{ActKind::Linear}, sgn{ActKind::Sign};
const LatentPrior g1 = LatentPrior::gauss(1.0);

struct Problem {
    GenerativeModel gm;
    Spike sp;
    SpikedInstance inst;
};

Problem wigner_problem(int k, double alpha, const Activation& act, double delta, std::uint64_t seed) {
    Problem pr;
    pr.gm = make_model(static_cast<int>(alpha * k), k, g1, act, seed);
    pr.sp = generate_spike(pr.gm, seed);
    pr.inst = sample_wigner(pr.sp.v, delta, seed + 1);
    pr.inst.truth.z = pr.sp.z;
    return pr;
}

double se_qv(double alpha, double delta, const Activation& act) {
    SEConfig c;
    c.init = InitKind::Informative;
    return se_run(c, delta, alpha, act, g1).q_v_star;
}
} // namespace

TEST_CASE("align_and_mse") {
    Vec v = Vec::LinSpaced(6, -1.0, 1.5);
    auto a = align_and_mse(-v, v);
    CHECK(a.mse == doctest::Approx(0.0));
    CHECK(a.sign == -1);
    auto b = align_and_mse(Vec::Zero(6), v);
    CHECK(b.mse == doctest::Approx(v.squaredNorm() / 6));

    // random vector orthogonal to the spike
    Rng rng(3);
    const int p = 4000;
    Vec vs = rng.normal_vec(p), w = rng.normal_vec(p);
    w -= (w.dot(vs) / vs.squaredNorm()) * vs;
    auto c = align_and_mse(w, vs);
    CHECK(c.mse == doctest::Approx(vs.squaredNorm() / p + w.squaredNorm() / p).epsilon(1e-12));
    CHECK_THROWS_AS(align_and_mse(Vec::Zero(3), v), std::invalid_argument);
}

TEST_CASE("all-zero state is a fixed point for zero-mean channels") {
    for (auto act : {lin, sgn}) {
        auto pr = wigner_problem(100, 2.0, act, 1.0, 7);
        auto s = amp_wigner_init(pr.gm.p, pr.gm.k, 1.0, 1);
        s.v_hat.setZero();
        s.z_hat.setZero();
        for (int t = 0; t < 5; ++t) s = amp_wigner_step(s, pr.inst, pr.gm);
        CHECK(s.v_hat.cwiseAbs().maxCoeff() == 0.0);
        CHECK(s.z_hat.cwiseAbs().maxCoeff() == 0.0);
        CHECK(s.g.cwiseAbs().maxCoeff() == 0.0);
        CHECK((s.c_v.array() >= 0.0).all());
        CHECK((s.c_z.array() >= 0.0).all());
    }
}

TEST_CASE("linear channel at low noise recovers the spike quickly") {
    auto pr = wigner_problem(1000, 2.0, lin, 0.1, 11);
    AmpConfig cfg;
    cfg.max_iter = 50;
    auto r = amp_wigner_run(pr.inst, pr.gm, cfg, 5);
    CHECK_FALSE(r.diverged);
    const double rv = rho_v(lin, g1);
    std::vector<double> q(r.overlap_trace.size());
    std::transform(r.overlap_trace.begin(), r.overlap_trace.end(), q.begin(), [](double x) { return std::abs(x); });
    CHECK(q.back() > 0.9 * rv);
    // increasing up to finite-size wobble on the plateau
    const double wobble = 2.0 / std::sqrt(double(pr.gm.p));
    int drops = 0;
    for (std::size_t t = 2; t < q.size(); ++t)
        if (q[t] < q[t - 1] - wobble) ++drops;
    CHECK(drops == 0);
}

TEST_CASE("above the transition the overlap stays at the null scale") {
    // linear, alpha = 2: transition at delta = 3
    auto pr = wigner_problem(1000, 2.0, lin, 4.5, 13);
    auto r = amp_wigner_run(pr.inst, pr.gm, {}, 9);
    CHECK(std::abs(r.overlap_trace.back()) <= 3.0 / std::sqrt(double(pr.gm.p)));
}

TEST_CASE("final overlap tracks the SE fixed point") {
    // sign keeps |v*|^2 = p exactly; for the linear channel |v*|^2/p itself
    // fluctuates by ~sqrt(2/k) and the seed-averaged check lives in the
    // acceptance run
    for (double delta : {0.5, 1.0}) {
        auto pr = wigner_problem(2000, 2.0, sgn, delta, 17);
        auto r = amp_wigner_run(pr.inst, pr.gm, {}, 3);
        CHECK(r.converged);
        const double q = std::abs(r.overlap_trace.back());
        CHECK(std::abs(q - se_qv(2.0, delta, sgn)) <= 0.05);
        // Nishimori: m_v and q_v coincide at the fixed point
        const double p = pr.gm.p;
        CHECK(std::abs(q - r.v_hat.squaredNorm() / p) <= 5.0 / std::sqrt(2000.0));
    }
}

TEST_CASE("dropping the Onsager term breaks agreement with SE") {
    auto pr = wigner_problem(1000, 2.0, lin, 1.5, 19);
    AmpConfig cfg;
    auto with = amp_wigner_run(pr.inst, pr.gm, cfg, 3);
    cfg.onsager = false;
    auto without = amp_wigner_run(pr.inst, pr.gm, cfg, 3);
    const double q_se = se_qv(2.0, 1.5, lin), sigma = 1.0 / std::sqrt(1000.0);
    CHECK(std::abs(std::abs(with.overlap_trace.back()) - q_se) < 5 * sigma);
    CHECK(std::abs(std::abs(without.overlap_trace.back()) - q_se) > 5 * sigma);
}

TEST_CASE("same seed gives the same run") {
    auto pr = wigner_problem(300, 2.0, sgn, 1.0, 23);
    auto a = amp_wigner_run(pr.inst, pr.gm, {}, 42);
    auto b = amp_wigner_run(pr.inst, pr.gm, {}, 42);
    CHECK(a.overlap_trace == b.overlap_trace);
    CHECK(a.v_hat == b.v_hat);
}

TEST_CASE("a step commutes with permuting the rows of W") {
    auto pr = wigner_problem(200, 2.0, sgn, 1.0, 29);
    const int p = pr.gm.p;
    std::vector<int> perm(p);
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.begin() + p / 2);
    std::rotate(perm.begin(), perm.begin() + 7, perm.end());
    Eigen::PermutationMatrix<Eigen::Dynamic> P(Eigen::Map<Eigen::VectorXi>(perm.data(), p));

    auto gp = pr.gm;
    gp.W = P * pr.gm.W;
    SpikedInstance ip = pr.inst;
    ip.Y = P * pr.inst.Y * P.transpose();
    ip.truth.v = P * pr.inst.truth.v;

    auto s = amp_wigner_init(p, pr.gm.k, 1.0, 4);
    auto sp = s;
    sp.v_hat = P * s.v_hat;
    sp.c_v = P * s.c_v;
    sp.v_hat_prev = P * s.v_hat_prev;
    sp.g_prev = P * s.g_prev;
    for (int t = 0; t < 4; ++t) {
        s = amp_wigner_step(s, pr.inst, pr.gm);
        sp = amp_wigner_step(sp, ip, gp);
    }
    // products sum in a different order, so equality holds up to rounding
    CHECK((P * s.v_hat - sp.v_hat).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((s.z_hat - sp.z_hat).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("batched runs agree with single runs") {
    const int k = 300, p = 600;
    auto gm = make_model(p, k, g1, lin, 31);
    const Eigen::MatrixXf Wf = gm.W.cast<float>();
    gm.W = Wf.cast<double>();
    auto gs = gm;
    gs.act = sgn;
    const auto spl = generate_spike(gm, 31), sps = generate_spike(gs, 31);
    const Eigen::MatrixXf xif = sample_goe(p, 32).cast<float>();
    const Mat xi = xif.cast<double>();
    std::vector<AmpTask> tasks{{lin, g1, spl.v, 0.8}, {sgn, g1, sps.v, 1.2}, {lin, g1, spl.v, 4.0}};
    AmpConfig cfg;
    cfg.max_iter = 60;
    auto batch = amp_wigner_batch(xif, Wf, tasks, cfg, 77);
    for (std::size_t r = 0; r < tasks.size(); ++r) {
        auto g = tasks[r].act.kind == ActKind::Sign ? gs : gm;
        auto inst = wigner_from_noise(tasks[r].v_star, xi, tasks[r].delta);
        auto single = amp_wigner_run(inst, g, cfg, Rng(77).split(r).seed());
        CHECK(batch[r].iters == single.iters);
        CHECK(batch[r].converged == single.converged);
        CHECK(std::abs(batch[r].overlap_trace.back() - single.overlap_trace.back()) < 1e-9);
    }
}

TEST_CASE("Wishart AMP") {
    const int k = 500, p = 1000, n = 1000;
    auto gm = make_model(p, k, g1, lin, 37);
    auto sp = generate_spike(gm, 37);
    const Vec u = sample_separable(g1, n, 38);

    SUBCASE("low noise recovers v") {
        auto inst = sample_wishart(u, sp.v, 0.01, 39);
        auto r = amp_wishart_run(inst, gm, g1, {}, 5);
        CHECK_FALSE(r.diverged);
        CHECK(r.mse_v < 0.02);
        CHECK(r.u_hat.dot(u) > 0.0);
    }
    SUBCASE("matches the Wishart SE fixed point") {
        const double delta = 1.0;
        auto inst = sample_wishart(u, sp.v, delta, 40);
        auto r = amp_wishart_run(inst, gm, g1, {}, 6);
        SEConfig c;
        c.init = InitKind::Informative;
        auto se = se_run(c, delta, 2.0, lin, g1, ModelSpec::wishart(1.0, g1));
        CHECK(std::abs(std::abs(r.overlap_trace.back()) - se.q_v_star) <= 0.05);
        CHECK(std::abs(std::abs(r.overlap_u_trace.back()) - se.state.q_u) <= 0.05);
    }
    SUBCASE("zero noise is rejected") {
        auto inst = sample_wishart(u, sp.v, 1.0, 41);
        inst.delta = 0.0;
        CHECK_THROWS_AS(amp_wishart_run(inst, gm, g1, {}, 1), std::invalid_argument);
    }
}

TEST_CASE("config validation") {
    AmpConfig c;
    c.tol = 0.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.damping = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.init_sigma2 = -1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
