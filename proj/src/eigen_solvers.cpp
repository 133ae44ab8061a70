#include "spikegen/eigen_solvers.hpp"
#include "spikegen/rng.hpp"
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <complex>
#include <numeric>

namespace spikegen {

namespace {

void check_args(const char* who, int n, int num, double tol, int max_iter) {
    const std::string w(who);
    require(n >= 1, w + ": dimension must be >= 1");
    require(num >= 1 && num <= n, w + ": num must lie in [1, n]");
    require(tol > 0.0, w + ": tol must be positive");
    require(max_iter >= 1, w + ": max_iter must be >= 1");
}

// w minus its projection on the first m columns of Q, done twice. Returns the
// coefficients of the combined projection.
Vec orthogonalise(const Mat& Q, int m, Vec& w) {
    Vec h = Vec::Zero(m);
    for (int pass = 0; pass < 2; ++pass) {
        const Vec c = Q.leftCols(m).transpose() * w;
        w.noalias() -= Q.leftCols(m) * c;
        h += c;
    }
    return h;
}

} // namespace

EigSolveResult lanczos_top(const MatVec& op, int n, int num, double tol, int max_iter, std::uint64_t seed) {
    check_args("lanczos_top", n, num, tol, max_iter);
    const int cap = std::min(n, std::max(max_iter, num));
    Rng rng(seed);
    Mat Q(n, std::min(cap, 64));
    std::vector<double> diag, off;
    Vec q = rng.normal_vec(n);
    q.normalize();
    Vec w(n);
    EigSolveResult res;
    Eigen::SelfAdjointEigenSolver<Mat> tri;
    double scale = 0.0;
    int m = 0;
    bool done = false;

    while (!done) {
        if (Q.cols() < m + 1) Q.conservativeResize(n, std::min<Eigen::Index>(cap, 2 * Q.cols()));
        Q.col(m) = q;
        w.resize(n);
        op(q, w);
        const Vec h = orthogonalise(Q, m + 1, w);
        diag.push_back(h(m));
        ++m;
        const double beta = w.norm();
        scale = std::max(scale, std::abs(h(m - 1)) + beta);
        const bool breakdown = beta <= 1e-13 * std::max(scale, 1e-300);

        if (m >= num && (m % 4 == 0 || breakdown || m == cap)) {
            Vec d = Eigen::Map<Vec>(diag.data(), m);
            Vec e = Eigen::Map<Vec>(off.data(), m - 1);
            tri.computeFromTridiagonal(d, e);
            bool ok = true;
            for (int i = 0; i < num; ++i) {
                const int idx = m - 1 - i;
                const double theta = tri.eigenvalues()(idx);
                const double r = (breakdown ? 0.0 : beta) * std::abs(tri.eigenvectors()(m - 1, idx));
                ok = ok && r <= tol * std::max(1.0, std::abs(theta));
            }
            if (ok || m == cap) {
                res.converged = ok;
                done = true;
                break;
            }
        }
        if (m == cap) {
            res.converged = false;
            done = true;
            break;
        }
        if (breakdown) {
            // invariant subspace found before num pairs were resolved
            q = rng.normal_vec(n);
            orthogonalise(Q, m, q);
            q.normalize();
            off.push_back(0.0);
        } else {
            q = w / beta;
            off.push_back(beta);
        }
    }

    res.iters = m;
    if (!res.converged) res.message = "lanczos_top: no convergence within " + std::to_string(m) + " vectors";
    for (int i = 0; i < num; ++i) {
        const int idx = m - 1 - i;
        const double theta = tri.eigenvalues()(idx);
        Vec x = Q.leftCols(m) * tri.eigenvectors().col(idx);
        x.normalize();
        Vec ax(n);
        op(x, ax);
        res.values.push_back(theta);
        res.residuals.push_back((ax - theta * x).norm() / std::max(1.0, std::abs(theta)));
        res.vectors.push_back(std::move(x));
    }
    return res;
}

EigSolveResult subspace_top(const MatVec& op, int n, int num, double tol, int max_iter, std::uint64_t seed) {
    check_args("subspace_top", n, num, tol, max_iter);
    using C = std::complex<double>;
    const int b = std::min(n, num + 2);
    Rng rng(seed);

    // shift by a bound on the spectral radius so that ordering by modulus
    // matches ordering by real part for a real spectrum
    Vec x = rng.normal_vec(n), y(n);
    double radius = 0.0;
    for (int i = 0; i < 30; ++i) {
        x.normalize();
        op(x, y);
        radius = std::max(radius, y.norm());
        x = y;
        if (!(x.norm() > 0.0)) break;
    }
    const double sigma = 1.1 * radius;

    Mat Q(n, b);
    for (int j = 0; j < b; ++j) Q.col(j) = rng.normal_vec(n);
    Q = Eigen::HouseholderQR<Mat>(Q).householderQ() * Mat::Identity(n, b);
    Mat AQ(n, b);
    EigSolveResult res;
    std::vector<C> lam;
    Eigen::MatrixXcd Y;

    for (int it = 1; it <= max_iter; ++it) {
        for (int j = 0; j < b; ++j) {
            Vec col(n);
            op(Q.col(j), col);
            AQ.col(j) = col;
        }
        const Mat H = Q.transpose() * AQ;
        Eigen::EigenSolver<Mat> es(H);
        std::vector<int> order(b);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int i, int j) { return es.eigenvalues()(i).real() > es.eigenvalues()(j).real(); });
        lam.clear();
        Y.resize(b, num);
        bool ok = true;
        std::vector<double> resid;
        for (int i = 0; i < num; ++i) {
            const C l = es.eigenvalues()(order[i]);
            const Eigen::VectorXcd yi = es.eigenvectors().col(order[i]);
            const Eigen::VectorXcd xi = Q.cast<C>() * yi;
            const double r = (AQ.cast<C>() * yi - l * xi).norm() / (xi.norm() * std::max(1.0, std::abs(l)));
            lam.push_back(l);
            Y.col(i) = yi;
            resid.push_back(r);
            ok = ok && r <= tol;
        }
        res.iters = it;
        if (ok || it == max_iter) {
            res.converged = ok;
            res.residuals = resid;
            break;
        }
        Q = Eigen::HouseholderQR<Mat>(AQ + sigma * Q).householderQ() * Mat::Identity(n, b);
    }

    for (int i = 0; i < num; ++i) {
        if (std::abs(lam[i].imag()) > std::sqrt(tol) * std::max(1.0, std::abs(lam[i]))) {
            res.converged = false;
            res.message = "subspace_top: complex eigenvalue pair among the leading values (" +
                          std::to_string(lam[i].real()) + " +/- " + std::to_string(std::abs(lam[i].imag())) +
                          "i); no real leading eigenvector";
            res.values.clear();
            res.vectors.clear();
            return res;
        }
    }
    for (int i = 0; i < num; ++i) {
        Vec v = (Q * Y.col(i).real()).eval();
        v.normalize();
        res.values.push_back(lam[i].real());
        res.vectors.push_back(std::move(v));
    }
    if (!res.converged && res.message.empty())
        res.message = "subspace_top: no convergence within " + std::to_string(res.iters) + " iterations";
    return res;
}

} // namespace spikegen
