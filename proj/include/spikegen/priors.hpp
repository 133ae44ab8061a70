#pragma once
#include "spikegen/common.hpp"
#include "spikegen/rng.hpp"
#include <cstdint>
#include <string>

namespace spikegen {

enum class LatentKind { Gauss, Rademacher };

// Separable zero-mean prior. Used for the latent z and for the Wishart u.
struct LatentPrior {
    LatentKind kind = LatentKind::Gauss;
    double rho = 1.0;          // E[z^2]
    double third_moment = 0.0; // E[z^3]

    static LatentPrior gauss(double rho = 1.0);
    static LatentPrior rademacher();
    double sample(Rng& rng) const;
    std::string name() const;
};

LatentPrior parse_prior(const std::string& name, double rho = 1.0);

enum class ActKind { Linear, Sign, ReLU };

// Deterministic output channel P_out(v|x) = delta(v - phi(x)).
struct Activation {
    ActKind kind = ActKind::Linear;

    double operator()(double x) const;
    bool zero_mean_output() const { return kind != ActKind::ReLU; }
    std::string name() const;
};

Activation parse_activation(const std::string& name);

struct GenerativeModel {
    int p = 0;
    int k = 0;
    double alpha = 0.0;
    Mat W; // p x k
    LatentPrior latent;
    Activation act;
};

Mat sample_weights(int p, int k, std::uint64_t seed);
GenerativeModel make_model(int p, int k, const LatentPrior& latent, const Activation& act,
                           std::uint64_t seed);

struct Spike {
    Vec z;
    Vec v;
};

Spike generate_spike(const GenerativeModel& gm, std::uint64_t seed);
Vec sample_separable(const LatentPrior& prior, int n, std::uint64_t seed);

enum class ModelKind { Wigner, Wishart };

struct Truth {
    Vec v;
    Vec z;
    Vec u; // empty for Wigner
};

struct SpikedInstance {
    ModelKind model = ModelKind::Wigner;
    double beta = 1.0; // n/p for Wishart
    double delta = 1.0;
    Mat Y;
    Truth truth;
};

// Symmetric GOE noise: off-diagonal variance 1, diagonal variance 2.
Mat sample_goe(int p, std::uint64_t seed);

SpikedInstance wigner_from_noise(const Vec& v, const Mat& xi, double delta);
SpikedInstance sample_wigner(const Vec& v, double delta, std::uint64_t seed);
SpikedInstance sample_wishart(const Vec& u, const Vec& v, double delta, std::uint64_t seed);

// E[phi(x)^2] with x ~ N(0, rho_z).
double rho_v(const Activation& act, const LatentPrior& latent);

} // namespace spikegen
