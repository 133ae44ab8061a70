#pragma once
#include "spikegen/priors.hpp"
#include "spikegen/quadrature.hpp"

namespace spikegen {

// Parameters of Q_out(v,x) ~ P_out(v|x) exp(-A v^2/2 + B v) N(x; omega, V).
struct DenoiserParams {
    double B = 0.0;
    double A = 0.0;
    double omega = 0.0;
    double V = 1.0;
};

// Parameters of Q_z(z) ~ P_z(z) exp(-Lambda z^2/2 + gamma z).
struct LatentParams {
    double gamma = 0.0;
    double Lambda = 0.0;
};

// Everything one evaluation of Q_out yields. log_z is finite even when
// Z_out itself would underflow.
struct OutMoments {
    double log_z;
    double fv, dfv;     // E[v], Var[v]
    double fout, dfout; // V^-1 E[x - omega], d fout / d omega
};

struct PriorMoments {
    double log_z;
    double f, df;
};

OutMoments out_moments(const Activation& act, const DenoiserParams& dp);

// Q_out at fixed (A, omega, V) as a function of B. Everything that does not
// depend on B is computed once, which is what the quadrature loops need.
class OutRow {
public:
    OutRow(const Activation& act, double A, double omega, double V);
    OutMoments operator()(double B) const;

private:
    ActKind kind_;
    double A_, omega_, V_, sv_ = 0, u_ = 0, den_ = 0, half_log_den_ = 0;
    double lcdf_p_ = 0, lcdf_m_ = 0, lphi_ = 0, mill_p_ = 0, mill_m_ = 0;
    double l_neg_ = 0, mu_n_ = 0, var_n_ = 0, s_ = 0;
};
PriorMoments prior_moments(const LatentPrior& prior, const LatentParams& lp);

// Direct evaluators. z_out throws NumericalError when Z_out < 1e-300.
double z_out(const Activation& act, const DenoiserParams& dp);
double log_z_out(const Activation& act, const DenoiserParams& dp);
double f_v(const Activation& act, const DenoiserParams& dp);
double df_v(const Activation& act, const DenoiserParams& dp);
double f_out(const Activation& act, const DenoiserParams& dp);
double df_out(const Activation& act, const DenoiserParams& dp);

double z_prior(const LatentPrior& prior, const LatentParams& lp);
double f_z(const LatentPrior& latent, const LatentParams& lp);
double df_z(const LatentPrior& latent, const LatentParams& lp);
double f_u(const LatentPrior& prior_u, double B, double A);
double df_u(const LatentPrior& prior_u, double B, double A);

// Moments of Q_out^0: x ~ N(0, rho_z), v = phi(x).
struct NullMoments {
    double Ev, Ev2, Evx, Ex2, Evx2;
};
NullMoments null_moments(const Activation& act, const LatentPrior& latent);

// Free-entropy terms.
double psi_z(const LatentPrior& prior, double x, const QuadPolicy& pol = {});
// d Psi_z / dx = E[Z_z f_z^2] / 2
double psi_z_grad(const LatentPrior& prior, double x, const QuadPolicy& pol = {});
double psi_out(const Activation& act, const LatentPrior& latent, double x, double y,
               const QuadPolicy& pol = {});

struct PsiGrads {
    double dx;
    double dy;
};
// Gradients through the moment identities 2 dx = E[Z f_v^2], 2 dy = E[Z f_out^2].
PsiGrads psi_out_grads(const Activation& act, const LatentPrior& latent, double x, double y,
                       const QuadPolicy& pol = {});

} // namespace spikegen
