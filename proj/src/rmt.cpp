#include "spikegen/rmt.hpp"
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

namespace spikegen {

namespace {

constexpr double kQuadTol = 1e-11;
constexpr unsigned kQuadDepth = 15;
constexpr double kGuard = 1e-10;

// Angle variable: t = c + r cos(theta) for the semicircle, x = m + h cos(theta)
// for Marchenko-Pastur. Both weights vanish like sin^2 at the edges.
struct AngleMap {
    const BaseLaw& b;
    double m, h; // MP only

    explicit AngleMap(const BaseLaw& base) : b(base) {
        m = 1.0 + 1.0 / b.beta;
        h = 2.0 / std::sqrt(b.beta);
    }
    // returns (t, weight)
    std::pair<double, double> operator()(double th) const {
        const double c = std::cos(th), s = std::sin(th);
        if (b.kind == BaseKind::SemicircleShifted) {
            const double r = 2.0 / std::sqrt(b.delta);
            return {-1.0 / b.delta + r * c, 2.0 / kPi * s * s};
        }
        const double x = m + h * c;
        const double t = b.beta * x / (1.0 + b.delta) - b.beta / b.delta;
        return {t, b.beta * h * h * s * s / (2.0 * kPi * x)};
    }
};

template <class R>
R integrate_impl(const BaseLaw& b, const std::function<R(double)>& f) {
    using boost::math::quadrature::gauss_kronrod;
    AngleMap map(b);
    auto g = [&](double th) -> R {
        auto [t, w] = map(th);
        return w * f(t);
    };
    R out = gauss_kronrod<double, 31>::integrate(g, 0.0, kPi, kQuadDepth, kQuadTol);
    if (b.atom_mass > 0.0) out += b.atom_mass * f(b.atom_at);
    return out;
}

// alpha int (s t / (1 + s t))^2 - 1, decreasing in s on (-1/t_max, 0).
double edge_residual(const BaseLaw& b, double alpha, double s) {
    return alpha * b.integrate([s](double t) {
        const double u = s * t / (1.0 + s * t);
        return u * u;
    }) - 1.0;
}

void check_s(const BaseLaw& b, double s) {
    require(s < 0.0, "silverstein_g_inverse: s must be negative");
    require(1.0 + s * b.t_max > 0.0 && 1.0 + s * b.t_min > 0.0,
            "silverstein_g_inverse: 1 + s t vanishes on the support");
}

} // namespace

double BaseLaw::density(double t) const {
    if (t < t_min || t > t_max) return 0.0;
    if (kind == BaseKind::SemicircleShifted) {
        const double u = t + 1.0 / delta;
        return std::sqrt(delta) / (2.0 * kPi) * std::sqrt(std::max(0.0, 4.0 - delta * u * u));
    }
    const double lp = std::pow(1.0 + 1.0 / std::sqrt(beta), 2), lm = std::pow(1.0 - 1.0 / std::sqrt(beta), 2);
    const double sc = (1.0 + delta) / beta;
    const double x = sc * t + (1.0 + delta) / delta;
    if (x <= 0.0) return 0.0;
    return sc * beta / (2.0 * kPi) * std::sqrt(std::max(0.0, (lp - x) * (x - lm))) / x;
}

double BaseLaw::integrate(const std::function<double(double)>& f) const { return integrate_impl(*this, f); }

std::complex<double> BaseLaw::integrate_c(const std::function<std::complex<double>(double)>& f) const {
    return integrate_impl(*this, f);
}

BaseLaw semicircle_law(double delta) {
    require(delta > 0.0 && std::isfinite(delta), "semicircle_law: delta must be positive");
    BaseLaw b;
    b.kind = BaseKind::SemicircleShifted;
    b.delta = delta;
    b.t_min = -1.0 / delta - 2.0 / std::sqrt(delta);
    b.t_max = -1.0 / delta + 2.0 / std::sqrt(delta);
    return b;
}

BaseLaw mp_law(double beta, double delta) {
    require(delta > 0.0 && std::isfinite(delta), "mp_law: delta must be positive");
    require(beta > 0.0 && std::isfinite(beta), "mp_law: beta must be positive");
    BaseLaw b;
    b.kind = BaseKind::MPShifted;
    b.delta = delta;
    b.beta = beta;
    const double rb = std::sqrt(beta);
    auto push = [&](double x) { return beta * x / (1.0 + delta) - beta / delta; };
    b.t_min = push(std::pow(1.0 - 1.0 / rb, 2));
    b.t_max = (-beta + delta + 2.0 * delta * rb) / (delta * (1.0 + delta));
    if (beta < 1.0) {
        b.atom_mass = 1.0 - beta;
        b.atom_at = push(0.0);
    }
    return b;
}

BaseLaw base_law(const ModelSpec& model, double delta) {
    return model.kind == ModelKind::Wigner ? semicircle_law(delta) : mp_law(model.beta, delta);
}

double silverstein_g_inverse(const BaseLaw& b, double alpha, double s) {
    require(alpha > 0.0, "silverstein_g_inverse: alpha must be positive");
    require(s < 0.0, "silverstein_g_inverse: s must be negative");
    if (-s < 1e-12) return kInf;
    check_s(b, s);
    return -1.0 / s + alpha * b.integrate([s](double t) { return t / (1.0 + s * t); });
}

double silverstein_g_inverse_ds(const BaseLaw& b, double alpha, double s) {
    require(alpha > 0.0, "silverstein_g_inverse_ds: alpha must be positive");
    check_s(b, s);
    return 1.0 / (s * s) - alpha * b.integrate([s](double t) {
        const double u = t / (1.0 + s * t);
        return u * u;
    });
}

EdgeResult solve_s_edge(const BaseLaw& b, double alpha) {
    require(alpha > 0.0, "solve_s_edge: alpha must be positive");
    EdgeResult e;
    e.alpha = alpha;
    e.base = b;
    if (b.t_max <= 0.0) {
        // no part of the spectrum above zero
        e.nonpositive_support = true;
        e.s_edge = e.z_edge = e.residual = std::numeric_limits<double>::quiet_NaN();
        e.lambda_max = 0.0;
        return e;
    }
    // the edge integral diverges at s = -1/t_max, so only the right end of
    // the bracket needs checking
    double lo = -1.0 / b.t_max + kGuard, hi = -kGuard;
    if (!(edge_residual(b, alpha, hi) < 0.0))
        throw NumericalError("solve_s_edge: edge equation has no sign change on the bracket");
    while (hi - lo > 1e-15 * std::max(1.0, std::abs(lo))) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (edge_residual(b, alpha, mid) > 0.0 ? lo : hi) = mid;
    }
    e.s_edge = 0.5 * (lo + hi);
    e.residual = edge_residual(b, alpha, e.s_edge);
    e.z_edge = silverstein_g_inverse(b, alpha, e.s_edge);
    e.lambda_max = alpha > 1.0 ? std::max(0.0, e.z_edge) : e.z_edge;
    return e;
}

double lambda_max(const ModelSpec& model, double alpha, double delta) {
    return solve_s_edge(base_law(model, delta), alpha).lambda_max;
}

BulkDensity bulk_density(const BaseLaw& b, double alpha, const std::vector<double>& x, double eps) {
    require(alpha > 0.0, "bulk_density: alpha must be positive");
    require(eps > 0.0, "bulk_density: eps must be positive");
    using C = std::complex<double>;
    constexpr int kMaxIter = 10000;
    constexpr double kDamp = 0.5, kTol = 1e-10;
    BulkDensity out;
    out.mu_zero_atom = alpha > 1.0 ? 1.0 - 1.0 / alpha : 0.0;
    out.samples.reserve(x.size());
    for (double xi : x) {
        const C z(xi, eps);
        C g(0.0, 1.0);
        DensitySample ds;
        ds.x = xi;
        for (int it = 1; it <= kMaxIter; ++it) {
            const C m = b.integrate_c([g](double t) -> C { return t / (1.0 + t * g); });
            const C gn = -1.0 / (z - alpha * m);
            const C next = kDamp * g + (1.0 - kDamp) * gn;
            const double d = std::abs(next - g);
            g = next;
            ds.iters = it;
            if (d < kTol * std::max(1.0, std::abs(g))) {
                ds.converged = true;
                break;
            }
        }
        ds.nu = std::max(0.0, g.imag()) / kPi;
        ds.mu = ds.nu / alpha;
        out.samples.push_back(ds);
    }
    return out;
}

GNu g_nu_at(const BaseLaw& b, double alpha, double lambda) {
    const EdgeResult e = solve_s_edge(b, alpha);
    require(lambda > e.lambda_max, "g_nu_at: lambda must lie right of the bulk");
    auto f = [&](double s) { return silverstein_g_inverse(b, alpha, s) - lambda; };
    double lo, hi = -0.5 / std::max(1.0, std::abs(lambda));
    while (!(f(hi) > 0.0)) hi *= 0.5;
    if (!e.nonpositive_support) {
        lo = e.s_edge;
    } else {
        lo = 2.0 * hi;
        while (!(f(lo) < 0.0)) {
            lo *= 2.0;
            if (lo < -1e12) throw NumericalError("g_nu_at: no bracket for the inverse transform");
        }
    }
    std::uintmax_t iters = 200;
    auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
    GNu out;
    out.g = 0.5 * (r.first + r.second);
    out.dg = 1.0 / silverstein_g_inverse_ds(b, alpha, out.g);
    return out;
}

SHierarchy s_hierarchy(const BaseLaw& b, double alpha, double lambda) {
    const GNu gn = g_nu_at(b, alpha, lambda);
    const double g = gn.g, dg = gn.dg, a = alpha;
    const double L = 1.0 + lambda * g;
    SHierarchy h;
    h.at = lambda;
    h.S0 = g;
    h.S1 = g * (a - L);
    h.S2 = g * (a * (1 + a) - (1 + 2 * a) * L + L * L);
    h.S3 = g * ((a + 3 * a * a + a * a * a) - (1 + 5 * a + 3 * a * a) * L + (2 + 3 * a) * L * L - L * L * L);
    h.dS1 = dg * (a - 1.0 - 2.0 * lambda * g) - g * g;
    const double I = b.integrate([&](double t) {
        const double u = 1.0 + t * g;
        return t / (u * u) * (t * h.dS1 - g);
    });
    h.S11 = g * h.S2 - L * h.dS1 + a * g * (g + h.S1) * I;
    h.S12 = g * h.S3 - L * (h.S11 + (1 + a) * h.dS1) + a * g * ((1 + a) * g + h.S1 + h.S2) * I;
    return h;
}

double epsilon_overlap(double alpha, double delta) {
    require(alpha > 0.0, "epsilon_overlap: alpha must be positive");
    require(delta > 0.0, "epsilon_overlap: delta must be positive");
    if (delta >= 1.0 + alpha) return 0.0;
    const SHierarchy h = s_hierarchy(semicircle_law(delta), alpha, 1.0);
    return h.S2 * h.S2 / (alpha * h.S12);
}

} // namespace spikegen
