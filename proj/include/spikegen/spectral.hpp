#pragma once
#include "spikegen/eigen_solvers.hpp"
#include "spikegen/state_evolution.hpp"
#include <memory>

namespace spikegen {

// Moments of the null channel that enter the linearised AMP operator.
// a = rho_v, b = E[v x]^2 / rho_z, c = E[z^3] E[v x^2] E[v x] / (2 rho_z^3),
// d = rho_u (Wishart).
struct LampCoeffs {
    double a = 1.0, b = 1.0, c = 0.0, d = 1.0;
};

// Throws for channels whose null output has non-zero mean (ReLU).
LampCoeffs lamp_coefficients(const Activation& act, const LatentPrior& latent, const ModelSpec& model = {});

// Gamma = Precond * Data, with
//   Precond = (a - b) I + b W W^T / k + c 1_p (W 1_k)^T / k^{3/2}   or a given Sigma,
//   Data    = (Y / sqrt(p) - a I) / delta                           (Wigner)
//           = (Y^T Y / ((a + delta / d) p) - d beta I) / delta       (Wishart).
// Immutable; copies of the matrices are shared between copies of the operator.
class LampOperator {
public:
    int dim() const { return p_; }
    void apply(const Vec& x, Vec& y) const;
    Vec apply(const Vec& x) const;
    void apply_precond(const Vec& x, Vec& y) const;
    void apply_data(const Vec& x, Vec& y) const;
    // p x p assembly, p <= 4000.
    Mat dense() const;

    // True when the preconditioner is symmetric positive semi-definite, so
    // Gamma is similar to the symmetric Precond^{1/2} Data Precond^{1/2}.
    bool symmetrizable() const { return symmetric_; }
    // x -> Precond^{1/2} x. Only when symmetrizable().
    void apply_precond_sqrt(const Vec& x, Vec& y) const;

    const LampCoeffs& coeffs() const { return co_; }
    double delta() const { return delta_; }
    const Vec& truth() const { return truth_; }

private:
    friend LampOperator build_lamp_wigner(const SpikedInstance&, const GenerativeModel&, const LampCoeffs&);
    friend LampOperator build_lamp_wishart(const SpikedInstance&, const GenerativeModel&, const LampCoeffs&);
    friend LampOperator build_cov_lamp(const Mat&, const Mat&, double, const Vec&);
    void init_root();

    int p_ = 0, k_ = 0;
    bool wishart_ = false;
    bool symmetric_ = false;
    LampCoeffs co_;
    double delta_ = 1.0, beta_ = 1.0;
    double data_scale_ = 1.0, data_shift_ = 0.0;
    std::shared_ptr<const Mat> Y_, W_, Sigma_;
    Vec w1_; // W 1_k
    Vec truth_;
    // Precond^{1/2} = root_base I + U diag(root_eig - root_base) U^T
    std::shared_ptr<const Mat> U_;
    Vec root_eig_;
    double root_base_ = 0.0;
};

LampOperator build_lamp_wigner(const SpikedInstance& inst, const GenerativeModel& gm, const LampCoeffs& coeffs);
LampOperator build_lamp_wishart(const SpikedInstance& inst, const GenerativeModel& gm, const LampCoeffs& coeffs);
// Gamma = Sigma (Y / sqrt(p) - I) / delta for a symmetric Sigma, e.g. an
// empirical second-moment matrix of sample spikes.
LampOperator build_cov_lamp(const Mat& Y, const Mat& Sigma, double delta, const Vec& truth = {});
// (1/n) sum_i s_i s_i^T over the rows s_i of samples.
Mat empirical_second_moment(const Mat& samples);

struct SpectralResult {
    std::vector<double> eigenvalues; // descending
    Vec eigenvector;                 // |v|^2 = p
    double overlap_sq = std::numeric_limits<double>::quiet_NaN(); // (v . v*)^2 / p^2
    double residual = 0.0; // |Gamma v - lambda_1 v| / |v|
    int iters = 0;
    bool converged = false;
    std::string message;
};

struct EigOptions {
    int num = 2;
    double tol = 1e-8;
    int max_iter = 10000;
    std::uint64_t seed = 0;
};

SpectralResult leading_eigs(const LampOperator& op, const EigOptions& opt = {});

// Top eigenpair of Y / sqrt(p) (Wigner) or of Y^T Y / p (Wishart, right
// singular vectors of Y).
SpectralResult pca_estimate(const SpikedInstance& inst, const EigOptions& opt = {});

} // namespace spikegen
