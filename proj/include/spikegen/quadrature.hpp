#pragma once
#include "spikegen/common.hpp"
#include <array>
#include <vector>

namespace spikegen {

// Gauss-Hermite rule for the weight e^{-t^2}: sum w_i f(t_i) ~ int e^{-t^2} f.
struct QuadGrid {
    int order = 0;
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Cached rules; thread-safe after first use of a given order.
const QuadGrid& gauss_hermite(int order);
// Gauss-Legendre on [-1, 1], cached the same way.
const QuadGrid& gauss_legendre(int order);

// Rule for E f(xi), xi ~ N(0,1): sum w_i f(x_i).
struct NormalRule {
    std::vector<double> x, w;
};
NormalRule normal_hermite(int order);
// Composite Gauss-Legendre whose panels start at width h0 next to the origin
// and double outward, for integrands with a step of width ~h0 at 0.
NormalRule normal_graded(double h0, int per_panel);

struct QuadPolicy {
    int base_order = 64;
    int max_order = 128;
    double agree_tol = 1e-9;
};

namespace detail {
template <std::size_t N, class F>
std::array<double, N> gh1(const QuadGrid& g, F& f) {
    std::array<double, N> acc{};
    const double s = 1.0 / std::sqrt(kPi);
    for (int i = 0; i < g.order; ++i) {
        auto r = f(kSqrt2 * g.nodes[i]);
        for (std::size_t j = 0; j < N; ++j) acc[j] += g.weights[i] * s * r[j];
    }
    return acc;
}
template <std::size_t N, class F>
std::array<double, N> gh2(const QuadGrid& g, F& f) {
    std::array<double, N> acc{};
    const double s = 1.0 / kPi;
    for (int i = 0; i < g.order; ++i) {
        const double xi = kSqrt2 * g.nodes[i];
        for (int k = 0; k < g.order; ++k) {
            auto r = f(xi, kSqrt2 * g.nodes[k]);
            const double w = g.weights[i] * g.weights[k] * s;
            for (std::size_t j = 0; j < N; ++j) acc[j] += w * r[j];
        }
    }
    return acc;
}
template <std::size_t N>
bool close(const std::array<double, N>& a, const std::array<double, N>& b, double tol) {
    for (std::size_t j = 0; j < N; ++j)
        if (!(std::abs(a[j] - b[j]) <= tol * std::max(1.0, std::abs(b[j])))) return false;
    return true;
}
template <std::size_t N, class F>
std::array<double, N> tensor(const NormalRule& a, const NormalRule& b, F& f) {
    std::array<double, N> acc{};
    for (std::size_t i = 0; i < a.x.size(); ++i)
        for (std::size_t k = 0; k < b.x.size(); ++k) {
            auto r = f(a.x[i], b.x[k]);
            const double w = a.w[i] * b.w[k];
            for (std::size_t j = 0; j < N; ++j) acc[j] += w * r[j];
        }
    return acc;
}
} // namespace detail

// E_{xi ~ N(0,1)} f(xi) for array-valued f. Evaluated at the base order and at
// half of it; when the two disagree the order is doubled up to max_order.
template <std::size_t N, class F>
std::array<double, N> expect1(F f, const QuadPolicy& pol = {}) {
    auto lo = detail::gh1<N>(gauss_hermite(pol.base_order / 2), f);
    auto hi = detail::gh1<N>(gauss_hermite(pol.base_order), f);
    for (int ord = pol.base_order * 2; ord <= pol.max_order && !detail::close(lo, hi, pol.agree_tol);
         ord *= 2) {
        lo = hi;
        hi = detail::gh1<N>(gauss_hermite(ord), f);
    }
    return hi;
}

// E_{xi, eta iid N(0,1)} f(xi, eta) on the tensor-product rule.
template <std::size_t N, class F>
std::array<double, N> expect2(F f, const QuadPolicy& pol = {}) {
    auto lo = detail::gh2<N>(gauss_hermite(pol.base_order / 2), f);
    auto hi = detail::gh2<N>(gauss_hermite(pol.base_order), f);
    for (int ord = pol.base_order * 2; ord <= pol.max_order && !detail::close(lo, hi, pol.agree_tol);
         ord *= 2) {
        lo = hi;
        hi = detail::gh2<N>(gauss_hermite(ord), f);
    }
    return hi;
}

// As expect2, but the first variable has a step of width ~h0 at the origin.
// The first axis gets the graded rule (8, 12, then 20 points per panel) and
// the second Gauss-Hermite at the matching order.
template <std::size_t N, class F>
std::array<double, N> expect2_step(F f, double h0, const QuadPolicy& pol = {}) {
    if (!(h0 < 1.0)) h0 = 1.0;
    auto level = [&](int order) {
        return detail::tensor<N>(normal_graded(h0, order / 8 + 4), normal_hermite(order), f);
    };
    auto lo = level(pol.base_order / 2);
    auto hi = level(pol.base_order);
    for (int ord = pol.base_order * 2; ord <= pol.max_order && !detail::close(lo, hi, pol.agree_tol);
         ord *= 2) {
        lo = hi;
        hi = level(ord);
    }
    return hi;
}

} // namespace spikegen
