#pragma once
#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace spikegen {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Thrown when an iteration diverges, underflows or otherwise cannot produce
// a trustworthy number. Argument errors use std::invalid_argument.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kSqrt2 = 1.414213562373095048801688724209698079;
inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934381868;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Standard normal density, cdf and log-cdf. log_ndtr stays finite far in
// the left tail where erfc underflows.
inline double npdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }
inline double ncdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }
double log_ndtr(double x);
// phi(x)/Phi(x), accurate for very negative x.
double mills_inv(double x);

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

inline bool all_finite(const Vec& v) { return v.allFinite(); }

} // namespace spikegen
