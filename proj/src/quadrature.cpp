#include "spikegen/quadrature.hpp"
#include <Eigen/Eigenvalues>
#include <map>
#include <memory>
#include <mutex>

namespace spikegen {

double log_ndtr(double x) {
    if (x > 5.0) return std::log1p(-0.5 * std::erfc(x / kSqrt2));
    if (x > -30.0) return std::log(ncdf(x));
    // asymptotic expansion of the Gaussian tail
    const double r = 1.0 / (x * x);
    const double series =
        1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r * (1.0 - 9.0 * r * (1.0 - 11.0 * r)))));
    return -0.5 * x * x - std::log(-x) - 0.5 * std::log(2.0 * kPi) + std::log(series);
}

double mills_inv(double x) {
    if (x > -30.0) return npdf(x) / ncdf(x);
    return std::exp(-0.5 * x * x - 0.5 * std::log(2.0 * kPi) - log_ndtr(x));
}

namespace {

// Golub-Welsch for starting values, then Newton on the orthonormal
// Hermite recurrence for full precision nodes and weights.
QuadGrid build(int n) {
    require(n >= 1, "gauss_hermite: order must be >= 1");
    Mat J = Mat::Zero(n, n);
    for (int i = 1; i < n; ++i) J(i, i - 1) = J(i - 1, i) = std::sqrt(0.5 * i);
    Eigen::SelfAdjointEigenSolver<Mat> es(J, Eigen::EigenvaluesOnly);
    QuadGrid g;
    g.order = n;
    g.nodes.resize(n);
    g.weights.resize(n);
    const double pim4 = std::pow(kPi, -0.25);
    for (int i = 0; i < n; ++i) {
        double z = es.eigenvalues()(i);
        double pp = 0.0;
        for (int it = 0; it < 20; ++it) {
            double p1 = pim4, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15 * std::max(1.0, std::abs(z))) break;
        }
        g.nodes[i] = z;
        g.weights[i] = 2.0 / (pp * pp);
    }
    return g;
}

QuadGrid build_legendre(int n) {
    require(n >= 1, "gauss_legendre: order must be >= 1");
    QuadGrid g;
    g.order = n;
    g.nodes.resize(n);
    g.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        g.nodes[n - 1 - i] = z;
        g.weights[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
    return g;
}

template <class B>
const QuadGrid& cached(std::map<int, std::unique_ptr<QuadGrid>>& cache, int order, B build_fn) {
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[order];
    if (!slot) slot = std::make_unique<QuadGrid>(build_fn(order));
    return *slot;
}

} // namespace

const QuadGrid& gauss_hermite(int order) {
    static std::map<int, std::unique_ptr<QuadGrid>> cache;
    return cached(cache, order, build);
}

const QuadGrid& gauss_legendre(int order) {
    static std::map<int, std::unique_ptr<QuadGrid>> cache;
    return cached(cache, order, build_legendre);
}

NormalRule normal_hermite(int order) {
    const auto& g = gauss_hermite(order);
    NormalRule r;
    r.x.resize(order);
    r.w.resize(order);
    for (int i = 0; i < order; ++i) {
        r.x[i] = kSqrt2 * g.nodes[i];
        r.w[i] = g.weights[i] / std::sqrt(kPi);
    }
    return r;
}

NormalRule normal_graded(double h0, int per_panel) {
    require(h0 > 0.0, "normal_graded: h0 must be positive");
    // panel edges on [0, 9]; the Gaussian tail beyond 9 is below 1e-18
    std::vector<double> edges{0.0};
    for (double e = h0; e < 1.0; e *= 2.0) edges.push_back(e);
    for (double e : {1.0, 2.0, 3.5, 5.5, 9.0}) edges.push_back(e);
    const auto& g = gauss_legendre(per_panel);
    NormalRule r;
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        const double c = 0.5 * (edges[p] + edges[p + 1]), h = 0.5 * (edges[p + 1] - edges[p]);
        for (int i = 0; i < per_panel; ++i) {
            const double t = c + h * g.nodes[i], w = h * g.weights[i] * npdf(t);
            r.x.push_back(t);
            r.w.push_back(w);
            r.x.push_back(-t);
            r.w.push_back(w);
        }
    }
    return r;
}

} // namespace spikegen
