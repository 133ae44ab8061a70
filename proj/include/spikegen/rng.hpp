#pragma once
#include "spikegen/common.hpp"
#include <cstdint>
#include <random>

namespace spikegen {

// SplitMix64 finalizer. Used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

// Order-independent 64-bit seed for a sweep point (base_seed, alpha, delta).
// seed = splitmix64(splitmix64(base ^ bits(alpha)) ^ bits(delta)).
std::uint64_t point_seed(std::uint64_t base_seed, double alpha, double delta);

// Splittable generator: every stream is an mt19937_64 whose seed is derived
// from (parent seed, stream id) through SplitMix64, so child streams do not
// depend on how much the parent has been consumed.
class Rng {
public:
    explicit Rng(std::uint64_t seed);
    Rng split(std::uint64_t stream) const;
    std::uint64_t seed() const { return seed_; }

    double normal();
    double uniform();
    void fill_normal(double* out, std::size_t n);
    Vec normal_vec(Eigen::Index n);
    Mat normal_mat(Eigen::Index rows, Eigen::Index cols);

private:
    std::uint64_t seed_;
    std::mt19937_64 eng_;
    std::normal_distribution<double> nd_;
    std::uniform_real_distribution<double> ud_;
};

} // namespace spikegen
