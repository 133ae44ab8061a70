#pragma once
#include "spikegen/amp.hpp"
#include "spikegen/io.hpp"
#include "spikegen/spectral.hpp"
#include "spikegen/state_evolution.hpp"
#include "json.hpp"
#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace spikegen {

enum class Method { SE, AMP, LAMP, PCA, RMT, MI };
Method parse_method(const std::string& name);
std::string method_name(Method m);

struct ExperimentConfig {
    ModelKind model = ModelKind::Wigner;
    Activation act;
    LatentPrior latent = LatentPrior::gauss(1.0);
    LatentPrior prior_u = LatentPrior::gauss(1.0);
    double beta = 1.0;
    std::vector<double> alphas{2.0};
    std::vector<double> deltas{1.0};
    int p = 0; // exactly one of p, k for sampling methods
    int k = 0;
    int seeds = 1;
    std::uint64_t seed = 0;
    std::set<Method> methods{Method::SE};
    int workers = 1;
    SEConfig se;
    AmpConfig amp;
    EigOptions eig;
    std::string out;

    ModelSpec model_spec() const;
    bool needs_instance() const;
    // Throws std::invalid_argument naming the offending field.
    void validate() const;
};

// Applies key=value overrides on top of base. Lists are comma separated or
// lin:a:b:n / log:a:b:n grids. Unknown keys are usage errors.
ExperimentConfig apply_key_values(const KeyValues& kv, ExperimentConfig base = {});
std::vector<double> parse_grid(const std::string& field, const std::string& text);
nlohmann::json to_json(const ExperimentConfig& cfg);

struct Dims {
    int p = 0, k = 0, n = 0;
    std::string note; // set when a dimension was rounded
};
Dims resolve_dims(const ExperimentConfig& cfg, double alpha);

struct RunRecord {
    nlohmann::json config;
    std::string build_id;
    std::uint64_t seed = 0;
    nlohmann::json metrics;
    double wall_time = 0.0; // seconds; not part of any metric
    nlohmann::json to_json() const;
};

std::string build_id();

// Seed of the i-th instance of a run. Instance 0 uses the base seed.
std::uint64_t instance_seed(std::uint64_t base, int i);

// SE at one point. When the two initializations disagree the reported fixed
// point is the one with the lower replica-symmetric mutual information
// (Wigner), or the informative one (Wishart).
struct SEPoint {
    PhasePoint chosen;
    FixedPointPair pair;
    bool inits_agree = true;
};
SEPoint se_point(const ExperimentConfig& cfg, double alpha, double delta);

// First (alpha, delta) of the grids; every requested method on the same
// instances.
RunRecord run_single(const ExperimentConfig& cfg);

// SE over the Cartesian (alpha, delta) grid, one CSV row per point, written
// as points finish, so row order depends on scheduling. SE is deterministic
// and needs no seed.
std::string sweep_header();
void run_sweep(const ExperimentConfig& cfg, std::ostream& out);

struct RmtSeRow {
    double delta, q_v_se, epsilon, diff;
};
std::vector<RmtSeRow> compare_rmt_se(double alpha, const std::vector<double>& deltas, const SEConfig& se = {});
std::string compare_rmt_se_header();

} // namespace spikegen
