#include "spikegen/spectral.hpp"
#include "spikegen/channels.hpp"
#include <Eigen/Eigenvalues>
#include <algorithm>

namespace spikegen {

LampCoeffs lamp_coefficients(const Activation& act, const LatentPrior& latent, const ModelSpec& model) {
    require(act.zero_mean_output(), "lamp_coefficients: the " + act.name() +
                                        " channel has a non-zero mean output; the linearised operator is not defined");
    const NullMoments m = null_moments(act, latent);
    const double rz = latent.rho;
    LampCoeffs c;
    c.a = m.Ev2;
    c.b = m.Evx * m.Evx / rz;
    c.c = 0.5 * latent.third_moment * m.Evx2 * m.Evx / (rz * rz * rz);
    c.d = model.kind == ModelKind::Wishart ? model.prior_u.rho : 1.0;
    return c;
}

void LampOperator::apply_precond(const Vec& x, Vec& y) const {
    if (Sigma_) {
        y.noalias() = *Sigma_ * x;
        return;
    }
    const Mat& W = *W_;
    const double k = k_;
    const Vec t = W.transpose() * x;
    y.noalias() = (co_.b / k) * (W * t);
    y += (co_.a - co_.b) * x;
    if (co_.c != 0.0) y.array() += co_.c / std::pow(k, 1.5) * w1_.dot(x);
}

void LampOperator::apply_data(const Vec& x, Vec& y) const {
    const Mat& Y = *Y_;
    if (wishart_) {
        const Vec t = Y * x;
        y.noalias() = Y.transpose() * t;
        y *= data_scale_;
    } else {
        y.noalias() = Y * x;
        y *= data_scale_;
    }
    y -= data_shift_ * x;
    y /= delta_;
}

void LampOperator::apply(const Vec& x, Vec& y) const {
    require(x.size() == p_, "LampOperator::apply: dimension mismatch");
    Vec t(p_);
    apply_data(x, t);
    apply_precond(t, y);
}

Vec LampOperator::apply(const Vec& x) const {
    Vec y(p_);
    apply(x, y);
    return y;
}

void LampOperator::apply_precond_sqrt(const Vec& x, Vec& y) const {
    require(symmetric_, "apply_precond_sqrt: preconditioner is not symmetric positive semi-definite");
    const Mat& U = *U_;
    const Vec t = U.transpose() * x;
    y.noalias() = U * (root_eig_.array() - root_base_).matrix().cwiseProduct(t);
    y += root_base_ * x;
}

Mat LampOperator::dense() const {
    require(p_ <= 4000, "LampOperator::dense: p > 4000");
    Mat P;
    if (Sigma_) {
        P = *Sigma_;
    } else {
        P = (*W_) * W_->transpose() * (co_.b / k_);
        P.diagonal().array() += co_.a - co_.b;
        if (co_.c != 0.0) P += Vec::Ones(p_) * w1_.transpose() * (co_.c / std::pow(double(k_), 1.5));
    }
    Mat D = wishart_ ? Mat(Y_->transpose() * (*Y_) * data_scale_) : Mat(*Y_ * data_scale_);
    D.diagonal().array() -= data_shift_;
    return P * D / delta_;
}

void LampOperator::init_root() {
    symmetric_ = false;
    if (Sigma_) {
        Eigen::SelfAdjointEigenSolver<Mat> es(*Sigma_);
        const double top = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
        if (es.eigenvalues().minCoeff() < -1e-10 * top) return;
        U_ = std::make_shared<const Mat>(es.eigenvectors());
        root_eig_ = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        root_base_ = 0.0;
        symmetric_ = true;
        return;
    }
    if (co_.c != 0.0 || co_.b < 0.0 || co_.a < co_.b) return;
    const Mat& W = *W_;
    const double k = k_;
    if (k_ <= p_) {
        // W W^T / k = U diag(s) U^T through the k x k Gram matrix
        Mat G(k_, k_);
        G.setZero();
        G.selfadjointView<Eigen::Lower>().rankUpdate(W.transpose(), 1.0 / k);
        Eigen::SelfAdjointEigenSolver<Mat> es(G);
        const Vec& s = es.eigenvalues();
        const double floor = 1e-13 * std::max(s.maxCoeff(), 1e-300);
        std::vector<int> keep;
        for (int i = 0; i < k_; ++i)
            if (s(i) > floor) keep.push_back(i);
        Mat U(p_, static_cast<Eigen::Index>(keep.size()));
        root_eig_.resize(static_cast<Eigen::Index>(keep.size()));
        for (std::size_t j = 0; j < keep.size(); ++j) {
            const int i = keep[j];
            U.col(j) = W * es.eigenvectors().col(i) / std::sqrt(k * s(i));
            root_eig_(j) = std::sqrt((co_.a - co_.b) + co_.b * s(i));
        }
        U_ = std::make_shared<const Mat>(std::move(U));
    } else {
        Eigen::SelfAdjointEigenSolver<Mat> es(W * W.transpose() / k);
        U_ = std::make_shared<const Mat>(es.eigenvectors());
        root_eig_ = ((co_.a - co_.b) + co_.b * es.eigenvalues().cwiseMax(0.0).array()).sqrt().matrix();
    }
    root_base_ = std::sqrt(co_.a - co_.b);
    symmetric_ = true;
}

namespace {

void check_coeffs(const LampCoeffs& c, double delta) {
    require(std::isfinite(c.a) && std::isfinite(c.b) && std::isfinite(c.c) && std::isfinite(c.d),
            "LAMP coefficients must be finite");
    require(c.d > 0.0, "LAMP coefficient d must be > 0");
    require(delta > 0.0 && std::isfinite(delta), "LAMP: delta must be > 0");
}

void check_model(const GenerativeModel& gm, Eigen::Index p) {
    require(gm.W.rows() == p, "LAMP: W has " + std::to_string(gm.W.rows()) + " rows but the data has dimension " +
                                  std::to_string(p));
    require(gm.W.cols() >= 1, "LAMP: W has no columns");
}

} // namespace

LampOperator build_lamp_wigner(const SpikedInstance& inst, const GenerativeModel& gm, const LampCoeffs& coeffs) {
    require(inst.model == ModelKind::Wigner, "build_lamp_wigner: instance is not a Wigner instance");
    require(inst.Y.rows() == inst.Y.cols() && inst.Y.rows() >= 1, "build_lamp_wigner: Y must be square");
    check_model(gm, inst.Y.rows());
    check_coeffs(coeffs, inst.delta);
    LampOperator op;
    op.p_ = static_cast<int>(inst.Y.rows());
    op.k_ = static_cast<int>(gm.W.cols());
    op.co_ = coeffs;
    op.delta_ = inst.delta;
    op.data_scale_ = 1.0 / std::sqrt(double(op.p_));
    op.data_shift_ = coeffs.a;
    op.Y_ = std::make_shared<const Mat>(inst.Y);
    op.W_ = std::make_shared<const Mat>(gm.W);
    op.w1_ = gm.W.rowwise().sum();
    op.truth_ = inst.truth.v;
    op.init_root();
    return op;
}

LampOperator build_lamp_wishart(const SpikedInstance& inst, const GenerativeModel& gm, const LampCoeffs& coeffs) {
    require(inst.model == ModelKind::Wishart, "build_lamp_wishart: instance is not a Wishart instance");
    require(inst.Y.rows() >= 1 && inst.Y.cols() >= 1, "build_lamp_wishart: empty Y");
    check_model(gm, inst.Y.cols());
    check_coeffs(coeffs, inst.delta);
    LampOperator op;
    op.wishart_ = true;
    op.p_ = static_cast<int>(inst.Y.cols());
    op.k_ = static_cast<int>(gm.W.cols());
    op.co_ = coeffs;
    op.delta_ = inst.delta;
    op.beta_ = double(inst.Y.rows()) / op.p_;
    op.data_scale_ = 1.0 / ((coeffs.a + inst.delta / coeffs.d) * op.p_);
    op.data_shift_ = coeffs.d * op.beta_;
    op.Y_ = std::make_shared<const Mat>(inst.Y);
    op.W_ = std::make_shared<const Mat>(gm.W);
    op.w1_ = gm.W.rowwise().sum();
    op.truth_ = inst.truth.v;
    op.init_root();
    return op;
}

LampOperator build_cov_lamp(const Mat& Y, const Mat& Sigma, double delta, const Vec& truth) {
    require(Y.rows() == Y.cols() && Y.rows() >= 1, "build_cov_lamp: Y must be square");
    require(Sigma.rows() == Y.rows() && Sigma.cols() == Y.cols(), "build_cov_lamp: Sigma shape does not match Y");
    require(truth.size() == 0 || truth.size() == Y.rows(), "build_cov_lamp: truth has the wrong length");
    const double scale = std::max(Sigma.cwiseAbs().maxCoeff(), 1e-300);
    require((Sigma - Sigma.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale, "build_cov_lamp: Sigma must be symmetric");
    require(delta > 0.0 && std::isfinite(delta), "build_cov_lamp: delta must be > 0");
    LampOperator op;
    op.p_ = static_cast<int>(Y.rows());
    op.co_ = {1.0, 0.0, 0.0, 1.0};
    op.delta_ = delta;
    op.data_scale_ = 1.0 / std::sqrt(double(op.p_));
    op.data_shift_ = 1.0;
    op.Y_ = std::make_shared<const Mat>(Y);
    op.Sigma_ = std::make_shared<const Mat>(Sigma);
    op.truth_ = truth;
    op.init_root();
    return op;
}

Mat empirical_second_moment(const Mat& samples) {
    require(samples.rows() >= 1 && samples.cols() >= 1, "empirical_second_moment: no samples");
    const auto p = samples.cols();
    Mat S = Mat::Zero(p, p);
    S.selfadjointView<Eigen::Lower>().rankUpdate(samples.transpose(), 1.0 / double(samples.rows()));
    S.triangularView<Eigen::StrictlyUpper>() = S.transpose();
    return S;
}

namespace {

// Sign convention: the largest-magnitude entry is positive.
void fix_sign(Vec& v) {
    Eigen::Index i;
    v.cwiseAbs().maxCoeff(&i);
    if (v(i) < 0.0) v = -v;
}

void finish(SpectralResult& r, const Vec& truth, const MatVec& op) {
    const double p = static_cast<double>(r.eigenvector.size());
    r.eigenvector *= std::sqrt(p) / r.eigenvector.norm();
    fix_sign(r.eigenvector);
    Vec y(r.eigenvector.size());
    op(r.eigenvector, y);
    r.residual = (y - r.eigenvalues[0] * r.eigenvector).norm() / std::sqrt(p);
    if (truth.size() == r.eigenvector.size()) r.overlap_sq = std::pow(r.eigenvector.dot(truth), 2) / (p * p);
}

} // namespace

SpectralResult leading_eigs(const LampOperator& op, const EigOptions& opt) {
    require(opt.num >= 1, "leading_eigs: num must be >= 1");
    const int p = op.dim();
    const int num = std::min(opt.num, p);
    const MatVec gamma = [&](const Vec& x, Vec& y) { op.apply(x, y); };
    SpectralResult r;

    if (!op.symmetrizable()) {
        auto s = subspace_top(gamma, p, num, opt.tol, opt.max_iter, opt.seed);
        r.iters = s.iters;
        r.converged = s.converged;
        r.message = s.message;
        if (s.values.empty()) return r;
        r.eigenvalues = s.values;
        r.eigenvector = s.vectors[0];
        finish(r, op.truth(), gamma);
        return r;
    }

    // Precond^{1/2} Data Precond^{1/2} is symmetric with the spectrum of Gamma
    const MatVec sym = [&](const Vec& x, Vec& y) {
        Vec t(p), u(p);
        op.apply_precond_sqrt(x, t);
        op.apply_data(t, u);
        op.apply_precond_sqrt(u, y);
    };
    double tol = opt.tol;
    for (int attempt = 0; attempt < 3; ++attempt) {
        auto s = lanczos_top(sym, p, num, tol, opt.max_iter, opt.seed);
        r.iters = s.iters;
        r.converged = s.converged;
        r.message = s.message;
        r.eigenvalues = s.values;
        Vec v(p);
        op.apply_precond_sqrt(s.vectors[0], v);
        if (!(v.norm() > 0.0)) {
            r.converged = false;
            r.message = "leading_eigs: leading eigenvector lies in the preconditioner null space";
            return r;
        }
        r.eigenvector = v;
        finish(r, op.truth(), gamma);
        // the map back can amplify the symmetric residual
        if (!s.converged || r.residual <= opt.tol * std::max(1.0, std::abs(r.eigenvalues[0]))) break;
        tol *= 1e-2;
    }
    return r;
}

SpectralResult pca_estimate(const SpikedInstance& inst, const EigOptions& opt) {
    require(inst.Y.rows() >= 1 && inst.Y.cols() >= 1, "pca_estimate: empty Y");
    const Mat& Y = inst.Y;
    const int p = static_cast<int>(Y.cols());
    MatVec op;
    if (inst.model == ModelKind::Wigner) {
        require(Y.rows() == Y.cols(), "pca_estimate: Wigner Y must be square");
        const double s = 1.0 / std::sqrt(double(p));
        op = [&Y, s](const Vec& x, Vec& y) {
            y.noalias() = Y * x;
            y *= s;
        };
    } else {
        const double s = 1.0 / p;
        op = [&Y, s](const Vec& x, Vec& y) {
            const Vec t = Y * x;
            y.noalias() = Y.transpose() * t;
            y *= s;
        };
    }
    const int num = std::min(std::max(opt.num, 1), p);
    auto s = lanczos_top(op, p, num, opt.tol, opt.max_iter, opt.seed);
    SpectralResult r;
    r.iters = s.iters;
    r.converged = s.converged;
    r.message = s.message;
    r.eigenvalues = s.values;
    r.eigenvector = s.vectors[0];
    finish(r, inst.truth.v, op);
    return r;
}

} // namespace spikegen
