#pragma once
#include "spikegen/state_evolution.hpp"
#include <complex>
#include <functional>
#include <vector>

namespace spikegen {

// Spectral law of the data part of the linear LAMP operator.
// SemicircleShifted(delta): semicircle of radius 2/sqrt(delta) centred at -1/delta.
// MPShifted(beta, delta): Marchenko-Pastur of ratio beta pushed through
// x -> beta x / (1 + delta) - beta / delta, with an atom when beta < 1.
enum class BaseKind { SemicircleShifted, MPShifted };

struct BaseLaw {
    BaseKind kind = BaseKind::SemicircleShifted;
    double delta = 1.0;
    double beta = 1.0;
    double t_min = 0.0, t_max = 0.0; // support of the continuous part
    double atom_mass = 0.0, atom_at = 0.0;

    double density(double t) const;
    // int rho(dt) f(t), atom included. Adaptive Gauss-Kronrod in an angle
    // variable that removes the square-root edges.
    double integrate(const std::function<double(double)>& f) const;
    std::complex<double> integrate_c(const std::function<std::complex<double>(double)>& f) const;
};

BaseLaw semicircle_law(double delta);
BaseLaw mp_law(double beta, double delta);
BaseLaw base_law(const ModelSpec& model, double delta);

// -1/s + alpha int rho(dt) t / (1 + s t), for s < 0. Returns +inf as s -> 0-
// and throws if 1 + s t vanishes on the support.
double silverstein_g_inverse(const BaseLaw& base, double alpha, double s);
// Derivative in s.
double silverstein_g_inverse_ds(const BaseLaw& base, double alpha, double s);

struct EdgeResult {
    double s_edge = 0.0;      // NaN when the support is non-positive
    double z_edge = 0.0;      // g^{-1}(s_edge)
    double lambda_max = 0.0;  // with the zero eigenvalues when alpha > 1
    double residual = 0.0;    // alpha int (s t / (1 + s t))^2 - 1
    bool nonpositive_support = false;
    double alpha = 0.0;
    BaseLaw base;
};
EdgeResult solve_s_edge(const BaseLaw& base, double alpha);
double lambda_max(const ModelSpec& model, double alpha, double delta);

struct DensitySample {
    double x = 0.0;
    double nu = 0.0; // density of the k x k operator W^T T W / k
    double mu = 0.0; // continuous part of the p x p spectrum, nu / alpha
    int iters = 0;
    bool converged = false;
};
struct BulkDensity {
    std::vector<DensitySample> samples;
    double mu_zero_atom = 0.0; // mass of the p - k zero eigenvalues, alpha > 1
};
// Im g(x + i eps) / pi from the damped fixed point
// g = -1 / (z - alpha int rho(dt) t / (1 + t g)).
BulkDensity bulk_density(const BaseLaw& base, double alpha, const std::vector<double>& x, double eps = 1e-6);

struct GNu {
    double g = 0.0;
    double dg = 0.0; // d g / d lambda
};
// Stieltjes transform of nu at a real point right of the bulk.
GNu g_nu_at(const BaseLaw& base, double alpha, double lambda);

// Limits of (1/k) Tr[(G - lambda)^{-1} A^r] and the two-resolvent traces,
// G = W^T T W / k, A = W^T W / k. dS1 = d S1 / d lambda = S^{(1,0)}.
struct SHierarchy {
    double at = 0.0;
    double S0 = 0.0, S1 = 0.0, S2 = 0.0, S3 = 0.0;
    double dS1 = 0.0;
    double S11 = 0.0, S12 = 0.0;
};
SHierarchy s_hierarchy(const BaseLaw& base, double alpha, double lambda);

// Asymptotic squared overlap of the top LAMP eigenvector, linear channel,
// Wigner model.
double epsilon_overlap(double alpha, double delta);

} // namespace spikegen
