#pragma once
#include "spikegen/common.hpp"
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace spikegen {

// y = A x. y arrives sized to n.
using MatVec = std::function<void(const Vec& x, Vec& y)>;

struct EigSolveResult {
    std::vector<double> values; // descending (by real part for the general solver)
    std::vector<Vec> vectors;   // unit norm
    std::vector<double> residuals; // |A x - lambda x| / max(1, |lambda|)
    int iters = 0;
    bool converged = false;
    std::string message;
};

// Largest algebraic eigenpairs of a symmetric operator. Lanczos with full
// reorthogonalisation; the basis grows until every wanted Ritz pair has
// residual <= tol * max(1, |theta|) or max_iter vectors are in use.
EigSolveResult lanczos_top(const MatVec& op, int n, int num, double tol, int max_iter, std::uint64_t seed);

// Eigenpairs of largest real part of a general real operator by shifted
// orthogonal iteration with Rayleigh-Ritz. A complex pair among the wanted
// values stops the solve with converged = false and a diagnostic.
EigSolveResult subspace_top(const MatVec& op, int n, int num, double tol, int max_iter, std::uint64_t seed);

} // namespace spikegen
