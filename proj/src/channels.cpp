#include "spikegen/channels.hpp"
#include <optional>

namespace spikegen {

OutRow::OutRow(const Activation& act, double A, double omega, double V)
    : kind_(act.kind), A_(A), omega_(omega), V_(V) {
    require(std::isfinite(A) && std::isfinite(omega) && std::isfinite(V), "denoiser: non-finite parameters");
    require(V > 0.0, "denoiser: V must be > 0");
    sv_ = std::sqrt(V);
    u_ = omega / sv_;
    den_ = 1.0 + A * V;
    if (kind_ != ActKind::Sign) require(den_ > 0.0, "denoiser: 1 + A V must be > 0");
    half_log_den_ = den_ > 0.0 ? 0.5 * std::log(den_) : 0.0;
    switch (kind_) {
    case ActKind::Linear: break;
    case ActKind::Sign:
        lcdf_p_ = log_ndtr(u_);
        lcdf_m_ = log_ndtr(-u_);
        lphi_ = -0.5 * u_ * u_ - 0.5 * std::log(2.0 * kPi);
        mill_p_ = std::exp(lphi_ - lcdf_p_);
        mill_m_ = std::exp(lphi_ - lcdf_m_);
        break;
    case ActKind::ReLU: {
        // negative half: x ~ N(omega, V) truncated to x < 0
        l_neg_ = log_ndtr(-u_);
        const double lam = mills_inv(-u_);
        mu_n_ = omega - sv_ * lam;
        var_n_ = std::max(0.0, V * (1.0 + u_ * lam - lam * lam));
        s_ = std::sqrt(V / den_);
        break;
    }
    }
}

OutMoments OutRow::operator()(double B) const {
    OutMoments r;
    switch (kind_) {
    case ActKind::Linear:
        // Gaussian convolution of exp(-A x^2/2 + B x) with N(omega, V)
        r.log_z = (B * B * V_ + 2.0 * B * omega_ - A_ * omega_ * omega_) / (2.0 * den_) - half_log_den_;
        r.fv = (B * V_ + omega_) / den_;
        r.dfv = V_ / den_;
        r.fout = (B - A_ * omega_) / den_;
        r.dfout = -A_ / den_;
        return r;
    case ActKind::Sign: {
        // Z = e^{-A/2} [e^B Phi(u) + e^{-B} Phi(-u)], u = omega / sqrt(V)
        const double lp = B + lcdf_p_, lm = -B + lcdf_m_;
        const double e = std::exp(-std::abs(lp - lm));
        const double wp = lp >= lm ? 1.0 / (1.0 + e) : e / (1.0 + e);
        const double wm = lp >= lm ? e / (1.0 + e) : 1.0 / (1.0 + e);
        r.log_z = -0.5 * A_ + std::max(lp, lm) + std::log1p(e);
        r.fv = wp - wm;
        r.dfv = 4.0 * wp * wm;
        // D'/D with D' = phi(u) (e^B - e^{-B})
        const double ratio = mill_p_ * wp - mill_m_ * wm;
        r.fout = ratio / sv_;
        r.dfout = (-u_ * ratio - ratio * ratio) / V_;
        return r;
    }
    case ActKind::ReLU: {
        // positive half is the linear convolution truncated to x > 0
        const double lz_lin =
            (B * B * V_ + 2.0 * B * omega_ - A_ * omega_ * omega_) / (2.0 * den_) - half_log_den_;
        const double m = (B * V_ + omega_) / den_;
        const double c = m / s_;
        double lcdf, lam;
        if (c > -30.0) {
            const double cdf = ncdf(c);
            lcdf = std::log(cdf);
            lam = npdf(c) / cdf;
        } else {
            lcdf = log_ndtr(c);
            lam = mills_inv(c);
        }
        const double l_pos = lz_lin + lcdf;
        const double e = std::exp(-std::abs(l_pos - l_neg_));
        const double w_pos = l_pos >= l_neg_ ? 1.0 / (1.0 + e) : e / (1.0 + e);
        const double w_neg = l_pos >= l_neg_ ? e / (1.0 + e) : 1.0 / (1.0 + e);
        r.log_z = std::max(l_pos, l_neg_) + std::log1p(e);
        const double mu_p = m + s_ * lam;
        const double var_p = std::max(0.0, s_ * s_ * (1.0 - c * lam - lam * lam));
        r.fv = w_pos * mu_p;
        r.dfv = w_pos * var_p + w_pos * w_neg * mu_p * mu_p;
        const double ex = w_neg * mu_n_ + w_pos * mu_p;
        const double varx = w_neg * var_n_ + w_pos * var_p + w_neg * w_pos * (mu_p - mu_n_) * (mu_p - mu_n_);
        r.fout = (ex - omega_) / V_;
        r.dfout = varx / (V_ * V_) - 1.0 / V_;
        return r;
    }
    }
    throw std::invalid_argument("unknown activation");
}

OutMoments out_moments(const Activation& act, const DenoiserParams& dp) {
    require(std::isfinite(dp.B), "denoiser: non-finite parameters");
    return OutRow(act, dp.A, dp.omega, dp.V)(dp.B);
}

PriorMoments prior_moments(const LatentPrior& prior, const LatentParams& lp) {
    require(std::isfinite(lp.gamma) && std::isfinite(lp.Lambda), "prior denoiser: non-finite parameters");
    if (prior.kind == LatentKind::Gauss) {
        const double den = 1.0 + lp.Lambda * prior.rho;
        require(den > 0.0, "prior denoiser: 1 + Lambda rho must be > 0");
        return {lp.gamma * lp.gamma * prior.rho / (2.0 * den) - 0.5 * std::log(den), lp.gamma * prior.rho / den,
                prior.rho / den};
    }
    const double g = std::abs(lp.gamma);
    const double t = std::tanh(lp.gamma);
    return {-0.5 * lp.Lambda + g + std::log1p(std::exp(-2.0 * g)) - std::log(2.0), t, 1.0 - t * t};
}

double log_z_out(const Activation& act, const DenoiserParams& dp) { return out_moments(act, dp).log_z; }

double z_out(const Activation& act, const DenoiserParams& dp) {
    const double lz = log_z_out(act, dp);
    if (lz < std::log(1e-300))
        throw NumericalError("z_out underflow: log Z_out = " + std::to_string(lz) + " at B=" + std::to_string(dp.B) +
                             " A=" + std::to_string(dp.A) + " omega=" + std::to_string(dp.omega) +
                             " V=" + std::to_string(dp.V));
    return std::exp(lz);
}

double f_v(const Activation& act, const DenoiserParams& dp) { return out_moments(act, dp).fv; }
double df_v(const Activation& act, const DenoiserParams& dp) { return out_moments(act, dp).dfv; }
double f_out(const Activation& act, const DenoiserParams& dp) { return out_moments(act, dp).fout; }
double df_out(const Activation& act, const DenoiserParams& dp) { return out_moments(act, dp).dfout; }

double z_prior(const LatentPrior& prior, const LatentParams& lp) { return std::exp(prior_moments(prior, lp).log_z); }
double f_z(const LatentPrior& latent, const LatentParams& lp) { return prior_moments(latent, lp).f; }
double df_z(const LatentPrior& latent, const LatentParams& lp) { return prior_moments(latent, lp).df; }
double f_u(const LatentPrior& prior_u, double B, double A) { return prior_moments(prior_u, {B, A}).f; }
double df_u(const LatentPrior& prior_u, double B, double A) { return prior_moments(prior_u, {B, A}).df; }

NullMoments null_moments(const Activation& act, const LatentPrior& latent) {
    const double r = latent.rho;
    switch (act.kind) {
    case ActKind::Linear: return {0.0, r, r, r, 0.0};
    case ActKind::Sign: return {0.0, 1.0, std::sqrt(2.0 * r / kPi), r, 0.0};
    case ActKind::ReLU: {
        const double s = std::sqrt(r);
        return {s * kInvSqrt2Pi, 0.5 * r, 0.5 * r, r, 2.0 * r * s * kInvSqrt2Pi};
    }
    }
    throw std::invalid_argument("unknown activation");
}

// The Psi integrals are expectations E_xi[Z h] whose integrand grows like
// exp(sqrt(x) xi). They are evaluated under the planted law instead, where
// Z times the Gaussian weight is the density of the observed field:
// B = x s* + sqrt(x) zeta with s* drawn from the prior (or channel).

namespace {

template <std::size_t N, class H>
std::array<double, N> planted_prior(const LatentPrior& prior, double x, H h, const QuadPolicy& pol) {
    const double sx = std::sqrt(x);
    if (prior.kind == LatentKind::Gauss) {
        const double s = std::sqrt(x * x * prior.rho + x);
        return expect1<N>([&](double zeta) { return h(s * zeta); }, pol);
    }
    // symmetric two-point prior: the s* = -1 branch mirrors s* = +1
    return expect1<N>([&](double zeta) { return h(x + sx * zeta); }, pol);
}

// Here omega = sqrt(y) eta and x* | omega ~ N(omega, V).
template <std::size_t N, class H>
std::array<double, N> planted_out(const Activation& act, double x, double y, double V, H h,
                                  const QuadPolicy& pol) {
    const double sx = std::sqrt(x), sy = std::sqrt(y), sv = std::sqrt(V);
    switch (act.kind) {
    case ActKind::Linear: {
        const double s = std::sqrt(x * (x * V + 1.0));
        return expect2<N>([&](double eta, double zeta) { return h(x * sy * eta + s * zeta, sy * eta); }, pol);
    }
    case ActKind::Sign: {
        // h is even under (B, omega) -> (-B, -omega), so only v* = +1 is integrated
        double last = kInf, p = 0.0;
        return expect2_step<N>(
            [&](double eta, double zeta) {
                const double w = sy * eta;
                auto r = h(x + sx * zeta, w);
                if (eta != last) {
                    p = 2.0 * ncdf(w / sv);
                    last = eta;
                }
                for (auto& e : r) e *= p;
                return r;
            },
            std::sqrt(V / std::max(y, 1e-300)), pol);
    }
    case ActKind::ReLU: {
        const double s = std::sqrt(x * (x * V + 1.0));
        const double a = std::sqrt((1.0 + x * V) / V), b = std::sqrt(x * V);
        double last = kInf, p0 = 0.0;
        return expect2_step<N>(
            [&](double eta, double zeta) {
                const double w = sy * eta;
                // v* = 0 branch, then v* = x* > 0 weighted by P(x* > 0 | B, omega)
                auto r0 = h(sx * zeta, w);
                auto r1 = h(x * w + s * zeta, w);
                if (eta != last) {
                    p0 = ncdf(-w / sv);
                    last = eta;
                }
                const double p1 = ncdf(a * w + b * zeta);
                std::array<double, N> r;
                for (std::size_t j = 0; j < N; ++j) r[j] = p0 * r0[j] + p1 * r1[j];
                return r;
            },
            std::sqrt(V / (std::max(y, 1e-300) * (1.0 + x * V))), pol);
    }
    }
    throw std::invalid_argument("unknown activation");
}

} // namespace

double psi_z(const LatentPrior& prior, double x, const QuadPolicy& pol) {
    require(x >= 0.0 && std::isfinite(x), "psi_z: x must be >= 0");
    if (x == 0.0) return 0.0;
    auto r = planted_prior<1>(
        prior, x, [&](double g) { return std::array<double, 1>{prior_moments(prior, {g, x}).log_z}; }, pol);
    return r[0];
}

double psi_z_grad(const LatentPrior& prior, double x, const QuadPolicy& pol) {
    require(x >= 0.0 && std::isfinite(x), "psi_z_grad: x must be >= 0");
    if (prior.kind == LatentKind::Gauss) return 0.5 * prior.rho * prior.rho * x / (1.0 + prior.rho * x);
    auto r = planted_prior<1>(
        prior, x,
        [&](double g) {
            const double f = prior_moments(prior, {g, x}).f;
            return std::array<double, 1>{f * f};
        },
        pol);
    return 0.5 * r[0];
}

namespace {
void check_xy(const LatentPrior& latent, double x, double y) {
    require(x >= 0.0 && std::isfinite(x), "psi_out: x must be >= 0");
    require(y >= 0.0 && y < latent.rho, "psi_out: y must lie in [0, rho_z)");
}

// The quadrature visits omega in an outer loop, so the last row is reused.
class RowCache {
public:
    RowCache(const Activation& act, double A, double V) : act_(act), A_(A), V_(V) {}
    const OutRow& at(double omega) {
        if (!row_ || omega != omega_) {
            row_.emplace(act_, A_, omega, V_);
            omega_ = omega;
        }
        return *row_;
    }

private:
    Activation act_;
    double A_, V_, omega_ = 0.0;
    std::optional<OutRow> row_;
};
} // namespace

double psi_out(const Activation& act, const LatentPrior& latent, double x, double y, const QuadPolicy& pol) {
    check_xy(latent, x, y);
    const double V = latent.rho - y;
    RowCache rows(act, x, V);
    auto r = planted_out<1>(
        act, x, y, V, [&](double B, double w) { return std::array<double, 1>{rows.at(w)(B).log_z}; }, pol);
    return r[0];
}

PsiGrads psi_out_grads(const Activation& act, const LatentPrior& latent, double x, double y,
                       const QuadPolicy& pol) {
    check_xy(latent, x, y);
    const double V = latent.rho - y;
    RowCache rows(act, x, V);
    auto r = planted_out<2>(
        act, x, y, V,
        [&](double B, double w) {
            auto m = rows.at(w)(B);
            return std::array<double, 2>{m.fv * m.fv, m.fout * m.fout};
        },
        pol);
    return {0.5 * r[0], 0.5 * r[1]};
}

} // namespace spikegen
