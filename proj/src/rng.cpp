#include "spikegen/rng.hpp"
#include <bit>
#include <cstring>

namespace spikegen {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t point_seed(std::uint64_t base_seed, double alpha, double delta) {
    auto a = std::bit_cast<std::uint64_t>(alpha);
    auto d = std::bit_cast<std::uint64_t>(delta);
    return splitmix64(splitmix64(base_seed ^ a) ^ d);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), eng_(splitmix64(seed)) {}

Rng Rng::split(std::uint64_t stream) const {
    return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
}

double Rng::normal() { return nd_(eng_); }
double Rng::uniform() { return ud_(eng_); }

void Rng::fill_normal(double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = nd_(eng_);
}

Vec Rng::normal_vec(Eigen::Index n) {
    Vec v(n);
    fill_normal(v.data(), static_cast<std::size_t>(n));
    return v;
}

Mat Rng::normal_mat(Eigen::Index rows, Eigen::Index cols) {
    Mat m(rows, cols);
    fill_normal(m.data(), static_cast<std::size_t>(rows * cols));
    return m;
}

} // namespace spikegen
