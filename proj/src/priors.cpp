#include "spikegen/priors.hpp"
#include "spikegen/quadrature.hpp"

namespace spikegen {

LatentPrior LatentPrior::gauss(double rho) {
    require(rho > 0.0 && std::isfinite(rho), "gauss prior: rho must be positive");
    return {LatentKind::Gauss, rho, 0.0};
}

LatentPrior LatentPrior::rademacher() { return {LatentKind::Rademacher, 1.0, 0.0}; }

double LatentPrior::sample(Rng& rng) const {
    if (kind == LatentKind::Gauss) return std::sqrt(rho) * rng.normal();
    return rng.uniform() < 0.5 ? -1.0 : 1.0;
}

std::string LatentPrior::name() const { return kind == LatentKind::Gauss ? "gauss" : "rademacher"; }

LatentPrior parse_prior(const std::string& name, double rho) {
    if (name == "gauss" || name == "gaussian") return LatentPrior::gauss(rho);
    if (name == "rademacher") {
        require(rho == 1.0, "rademacher prior has rho = 1");
        return LatentPrior::rademacher();
    }
    throw std::invalid_argument("unknown prior '" + name + "'");
}

double Activation::operator()(double x) const {
    switch (kind) {
    case ActKind::Linear: return x;
    case ActKind::Sign: return x >= 0.0 ? 1.0 : -1.0;
    case ActKind::ReLU: return x > 0.0 ? x : 0.0;
    }
    return x;
}

std::string Activation::name() const {
    switch (kind) {
    case ActKind::Linear: return "linear";
    case ActKind::Sign: return "sign";
    case ActKind::ReLU: return "relu";
    }
    return "?";
}

Activation parse_activation(const std::string& name) {
    if (name == "linear") return {ActKind::Linear};
    if (name == "sign") return {ActKind::Sign};
    if (name == "relu") return {ActKind::ReLU};
    throw std::invalid_argument("unknown activation '" + name + "'");
}

Mat sample_weights(int p, int k, std::uint64_t seed) {
    require(p >= 1 && k >= 1, "sample_weights: dimensions must be >= 1");
    Rng rng = Rng(seed).split(1);
    return rng.normal_mat(p, k);
}

GenerativeModel make_model(int p, int k, const LatentPrior& latent, const Activation& act,
                           std::uint64_t seed) {
    GenerativeModel gm;
    gm.p = p;
    gm.k = k;
    gm.alpha = static_cast<double>(p) / k;
    gm.W = sample_weights(p, k, seed);
    gm.latent = latent;
    gm.act = act;
    return gm;
}

Spike generate_spike(const GenerativeModel& gm, std::uint64_t seed) {
    require(gm.p >= 1 && gm.k >= 1 && gm.W.rows() == gm.p && gm.W.cols() == gm.k,
            "generate_spike: malformed generative model");
    Rng rng = Rng(seed).split(2);
    Spike s;
    s.z.resize(gm.k);
    for (int l = 0; l < gm.k; ++l) s.z(l) = gm.latent.sample(rng);
    Vec x = gm.W * s.z / std::sqrt(static_cast<double>(gm.k));
    s.v = x.unaryExpr([&](double t) { return gm.act(t); });
    return s;
}

Vec sample_separable(const LatentPrior& prior, int n, std::uint64_t seed) {
    require(n >= 1, "sample_separable: n must be >= 1");
    Rng rng = Rng(seed).split(3);
    Vec u(n);
    for (int i = 0; i < n; ++i) u(i) = prior.sample(rng);
    return u;
}

Mat sample_goe(int p, std::uint64_t seed) {
    require(p >= 1, "sample_goe: p must be >= 1");
    Rng rng = Rng(seed).split(4);
    Mat xi(p, p);
    for (int j = 0; j < p; ++j) {
        rng.fill_normal(xi.col(j).data(), static_cast<std::size_t>(j));
        xi(j, j) = std::sqrt(2.0) * rng.normal();
    }
    // mirror the strict upper triangle in cache-sized blocks
    const int bs = 64;
    for (int jb = 0; jb < p; jb += bs)
        for (int ib = 0; ib <= jb; ib += bs)
            for (int j = jb; j < std::min(jb + bs, p); ++j)
                for (int i = ib; i < std::min(ib + bs, j); ++i) xi(j, i) = xi(i, j);
    return xi;
}

SpikedInstance wigner_from_noise(const Vec& v, const Mat& xi, double delta) {
    require(delta > 0.0 && std::isfinite(delta), "sample_wigner: delta must be > 0");
    const auto p = v.size();
    require(xi.rows() == p && xi.cols() == p, "sample_wigner: noise shape mismatch");
    SpikedInstance inst;
    inst.model = ModelKind::Wigner;
    inst.delta = delta;
    inst.Y = std::sqrt(delta) * xi;
    inst.Y.noalias() += v * v.transpose() / std::sqrt(static_cast<double>(p));
    inst.truth.v = v;
    return inst;
}

SpikedInstance sample_wigner(const Vec& v, double delta, std::uint64_t seed) {
    require(delta > 0.0 && std::isfinite(delta), "sample_wigner: delta must be > 0");
    require(v.size() >= 1, "sample_wigner: empty spike");
    return wigner_from_noise(v, sample_goe(static_cast<int>(v.size()), seed), delta);
}

SpikedInstance sample_wishart(const Vec& u, const Vec& v, double delta, std::uint64_t seed) {
    require(delta > 0.0 && std::isfinite(delta), "sample_wishart: delta must be > 0");
    require(u.size() >= 1 && v.size() >= 1, "sample_wishart: empty spike");
    const auto n = u.size(), p = v.size();
    Rng rng = Rng(seed).split(5);
    SpikedInstance inst;
    inst.model = ModelKind::Wishart;
    inst.beta = static_cast<double>(n) / static_cast<double>(p);
    inst.delta = delta;
    inst.Y = std::sqrt(delta) * rng.normal_mat(n, p);
    inst.Y.noalias() += u * v.transpose() / std::sqrt(static_cast<double>(p));
    inst.truth.u = u;
    inst.truth.v = v;
    return inst;
}

double rho_v(const Activation& act, const LatentPrior& latent) {
    switch (act.kind) {
    case ActKind::Linear: return latent.rho;
    case ActKind::Sign: return 1.0;
    case ActKind::ReLU: {
        const double s = std::sqrt(latent.rho);
        auto r = expect1<1>([&](double xi) { return std::array<double, 1>{std::pow(act(s * xi), 2)}; },
                            QuadPolicy{64, 64, 1.0});
        return r[0];
    }
    }
    return 0.0;
}

} // namespace spikegen
