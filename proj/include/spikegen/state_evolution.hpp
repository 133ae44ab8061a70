#pragma once
#include "spikegen/channels.hpp"

namespace spikegen {

// Overlaps of the Bayes-optimal state evolution. q_u is only used by the
// Wishart model.
struct OverlapState {
    double q_v = 0.0;
    double q_z = 0.0;
    double q_hat_z = 0.0;
    double q_u = 0.0;
};

enum class InitKind { Uninformative, Informative };

struct SEConfig {
    double damping = 0.5; // on q_hat_z only
    double tol = 1e-10;
    int max_iter = 5000;
    InitKind init = InitKind::Uninformative;
    double epsilon = 1e-6;
    QuadPolicy quad{};

    void validate() const;
};

struct ModelSpec {
    ModelKind kind = ModelKind::Wigner;
    double beta = 1.0;
    LatentPrior prior_u = LatentPrior::gauss(1.0);

    static ModelSpec wigner() { return {}; }
    static ModelSpec wishart(double beta, const LatentPrior& pu = LatentPrior::gauss(1.0)) {
        return {ModelKind::Wishart, beta, pu};
    }
};

struct PhasePoint {
    double alpha = 0.0;
    double delta = 0.0;
    double mmse_v = 0.0;
    double q_v_star = 0.0;
    OverlapState state;
    int iters = 0;
    bool converged = false;
    InitKind init_used = InitKind::Uninformative;
    int clamp_events = 0;
};

struct FixedPointPair {
    PhasePoint uninformative;
    PhasePoint informative;

    bool both_converged() const { return uninformative.converged && informative.converged; }
    double gap() const { return std::abs(uninformative.q_v_star - informative.q_v_star); }
};

// One SE iteration with the Bayes-optimal time indexing: q_hat_z and q_v'
// come from (q_v, q_z); q_z' is evaluated at the new q_hat_z. damping mixes
// the previous q_hat_z into the new one.
OverlapState se_step_wigner(const OverlapState& s, double delta, double alpha, const Activation& act,
                            const LatentPrior& latent, double damping = 0.0, const QuadPolicy& pol = {});

// Four-variable update. With tie_uv the u overlap is set equal to q_v, which
// for beta = 1 gives back the Wigner recursion.
OverlapState se_step_wishart(const OverlapState& s, double delta, double alpha, double beta,
                             const Activation& act, const LatentPrior& latent, const LatentPrior& prior_u,
                             double damping = 0.0, bool tie_uv = false, const QuadPolicy& pol = {});

OverlapState se_initial_state(const SEConfig& cfg, const Activation& act, const LatentPrior& latent,
                              const ModelSpec& model);

// Iterate from cfg.init only.
PhasePoint se_run(const SEConfig& cfg, double delta, double alpha, const Activation& act,
                  const LatentPrior& latent, const ModelSpec& model = {});

// Both initializations.
FixedPointPair se_fixed_point(const SEConfig& cfg, double delta, double alpha, const Activation& act,
                              const LatentPrior& latent, const ModelSpec& model = {});

double mmse(double q_v_star, double rho_v);
double matrix_mmse(double q_v_star, double rho_v);

// i_RS(delta, q_v) with the inner (q_z, q_hat_z) extremization solved at fixed q_v.
double i_rs_at(double q_v, double delta, double alpha, const Activation& act, const LatentPrior& latent,
               const QuadPolicy& pol = {});

struct MutualInfo {
    double i_rs;
    double q_v_star;
};
// inf over q_v in [0, rho_v] of i_rs_at.
MutualInfo mutual_information(double delta, double alpha, const Activation& act, const LatentPrior& latent,
                              const QuadPolicy& pol = {});

// Linearization at (q_v, q_hat_z, q_z) = 0. Throws for channels without the
// zero-mean property.
Eigen::Matrix3d jacobian_at_zero(double delta, double alpha, const Activation& act, const LatentPrior& latent);
// Variables (q_u, q_v, q_hat_z, q_z).
Eigen::Matrix4d jacobian_at_zero_wishart(double delta, double alpha, double beta, const Activation& act,
                                         const LatentPrior& latent, const LatentPrior& prior_u);

// Largest modulus among the roots of the characteristic polynomial.
double spectral_radius(const Mat& J);

double delta_c(double alpha, const Activation& act, const LatentPrior& latent, const ModelSpec& model = {});
// Known thresholds for standard Gaussian latent (and u) priors.
double delta_c_closed_form(double alpha, const Activation& act, const ModelSpec& model = {});

} // namespace spikegen
