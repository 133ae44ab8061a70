#pragma once
#include "spikegen/channels.hpp"
#include "spikegen/priors.hpp"
#include <cstdint>
#include <string>
#include <vector>

namespace spikegen {

struct AmpConfig {
    int max_iter = 500;
    double tol = 1e-7;        // relative change of v_hat
    double damping = 0.0;     // on v_hat and z_hat only
    double init_sigma2 = 1.0;
    bool onsager = true;      // false drops the v_hat^{t-1} memory term (diagnostic)

    void validate() const;
};

struct AmpStateWigner {
    Vec v_hat, c_v, z_hat, c_z;
    Vec g, B_v, omega, gamma;
    double A_v = 0.0, V = 0.0, Lambda = 0.0;
    Vec v_hat_prev, g_prev;
    int t = 1;
};

struct AmpStateWishart {
    AmpStateWigner w; // v-side and generative layer
    Vec u_hat, c_u, B_u, u_hat_prev;
    double A_u = 0.0;
};

struct AmpResult {
    Vec v_hat, z_hat, u_hat;
    std::vector<double> overlap_trace;   // v_hat^t . v* / p
    std::vector<double> overlap_u_trace; // Wishart only
    double mse_v = 0.0;
    int sign = 1;
    int iters = 0;
    bool converged = false;
    bool diverged = false;
    std::string message;
};

// Random start: v_hat, z_hat ~ N(0, sigma2), unit variances, zero memory.
AmpStateWigner amp_wigner_init(int p, int k, double sigma2, std::uint64_t seed);
AmpStateWishart amp_wishart_init(int n, int p, int k, double sigma2, std::uint64_t seed);

// One pass of the spiked and generative layers followed by the marginal
// updates. Throws NumericalError on a non-finite entry.
AmpStateWigner amp_wigner_step(const AmpStateWigner& s, const SpikedInstance& inst, const GenerativeModel& gm,
                               const AmpConfig& cfg = {});
AmpStateWishart amp_wishart_step(const AmpStateWishart& s, const SpikedInstance& inst, const GenerativeModel& gm,
                                 const LatentPrior& prior_u, const AmpConfig& cfg = {});

AmpResult amp_wigner_run(const SpikedInstance& inst, const GenerativeModel& gm, const AmpConfig& cfg,
                         std::uint64_t seed);
AmpResult amp_wishart_run(const SpikedInstance& inst, const GenerativeModel& gm, const LatentPrior& prior_u,
                          const AmpConfig& cfg, std::uint64_t seed);

// Several Wigner problems that share the noise xi and the weights W but
// differ in spike, channel and delta: Y_r = v_r v_r^T / sqrt(p) + sqrt(delta_r) xi.
// They are iterated in lockstep so each step reads xi and W once. xi and W are
// held in single precision to halve that traffic; products accumulate in
// double, so the run is exact for the float-valued xi and W it is given.
struct AmpTask {
    Activation act;
    LatentPrior latent;
    Vec v_star;
    double delta = 1.0;
};
std::vector<AmpResult> amp_wigner_batch(const Eigen::MatrixXf& xi, const Eigen::MatrixXf& W,
                                        const std::vector<AmpTask>& tasks, const AmpConfig& cfg,
                                        std::uint64_t seed);

struct Alignment {
    double mse;
    int sign;
};
// min over s in {+1,-1} of |s v_hat - v*|^2 / p.
Alignment align_and_mse(const Vec& v_hat, const Vec& v_star);

} // namespace spikegen
