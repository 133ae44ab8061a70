#include "oracles.hpp"
#include <cmath>
#include <random>
#include <vector>

namespace oracle {

Brute brute_out(const Activation& act, double B, double A, double omega, double V, int n) {
    // composite Simpson on each side of x = 0, where the channels are non-smooth
    const double sd = std::sqrt(V);
    const double lo = omega - 14.0 * sd, hi = omega + 14.0 * sd;
    std::vector<std::pair<double, double>> pieces;
    if (lo < 0.0 && hi > 0.0) pieces = {{lo, 0.0}, {0.0, hi}};
    else pieces = {{lo, hi}};
    Brute r{0, 0, 0, 0, 0};
    const int m = (n / 2) * 2;
    for (auto [a, b] : pieces) {
        const double h = (b - a) / m;
        for (int i = 0; i <= m; ++i) {
            // evaluate just inside the piece so sign(0) does not leak across
            double x = a + i * h;
            if (i == 0) x = a + 1e-300 + std::abs(a) * 1e-16;
            if (i == m) x = b - 1e-300 - std::abs(b) * 1e-16;
            const double w = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            const double v = act(x);
            const double g = std::exp(-0.5 * (x - omega) * (x - omega) / V) / std::sqrt(2.0 * M_PI * V);
            const double e = w * h / 3.0 * g * std::exp(-0.5 * A * v * v + B * v);
            r.Z += e;
            r.Ev += e * v;
            r.Ev2 += e * v * v;
            r.Ex += e * x;
            r.Ex2 += e * x * x;
        }
    }
    r.Ev /= r.Z;
    r.Ev2 /= r.Z;
    r.Ex /= r.Z;
    r.Ex2 /= r.Z;
    return r;
}

namespace linear {

// Planted representation: x* ~ N(0,rho), omega = sqrt(y) eta, x* = omega + sqrt(V) u,
// B = x x* + sqrt(x) xi. log Z = (B^2 V + 2 B omega - x omega^2) / (2(1+xV)) - log(1+xV)/2.
double psi_out(double x, double y, double rho) {
    const double V = rho - y;
    return (x * V * (x * rho + 1.0) + x * y) / (2.0 * (1.0 + x * V)) - 0.5 * std::log1p(x * V);
}
double qv_next(double x, double y, double rho) {
    const double V = rho - y;
    return y + x * V * V / (1.0 + x * V);
}
double qhat_next(double x, double y, double rho) {
    const double V = rho - y;
    return x / (1.0 + x * V);
}
double psi_z(double x, double rho) { return 0.5 * x * rho - 0.5 * std::log1p(x * rho); }
double qz_next(double qhat, double rho) { return rho * rho * qhat / (1.0 + rho * qhat); }

Fixed se_fixed_point(double alpha, double delta, double rho, double qv0, double qz0) {
    double qv = qv0, qz = qz0, qh = 0.0;
    for (int it = 0; it < 2000000; ++it) {
        const double x = qv / delta;
        qh = alpha * qhat_next(x, qz, rho);
        const double qz1 = qz_next(qh, rho);
        const double qv1 = qv_next(x, qz, rho);
        const double d = std::max(std::abs(qz1 - qz), std::abs(qv1 - qv));
        qv = qv1;
        qz = qz1;
        if (d < 1e-15) break;
    }
    return {qv, qz, qh};
}

double mutual_info(double alpha, double delta, double rho) {
    // rho_v = rho for the linear channel
    auto f = se_fixed_point(alpha, delta, rho, rho * (1 - 1e-9), rho * (1 - 1e-9));
    const double x = f.qv / delta;
    return rho * rho / (4 * delta) + f.qv * f.qv / (4 * delta) +
           (0.5 * f.qz * f.qhat - psi_z(f.qhat, rho) - alpha * psi_out(x, f.qz, rho)) / alpha;
}

} // namespace linear

MC monte_carlo2(const std::function<double(double, double)>& f, long n, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> nd;
    double s = 0, s2 = 0;
    for (long i = 0; i < n; ++i) {
        const double a = nd(eng), b = nd(eng);
        const double v = f(a, b);
        s += v;
        s2 += v * v;
    }
    const double m = s / n;
    return {m, std::sqrt(std::max(0.0, s2 / n - m * m) / n)};
}

MC monte_carlo1(const std::function<double(double)>& f, long n, std::uint64_t seed) {
    return monte_carlo2([&](double a, double) { return f(a); }, n, seed);
}

double semicircle_G(double w, double c, double s2) {
    const double d = w - c;
    return (d - std::sqrt(d * d - 4.0 * s2)) / (2.0 * s2);
}

double semicircle_dG(double w, double c, double s2) {
    const double d = w - c;
    return (1.0 - d / std::sqrt(d * d - 4.0 * s2)) / (2.0 * s2);
}

double fd(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

} // namespace oracle
