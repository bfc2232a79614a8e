#include "efenav/gaussian.hpp"

#include <cmath>

namespace efenav {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

using LongMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

// Extended-precision Cholesky with the same jitter fallback as chol_psd.
// Near-cancelling log-determinants (conditional covariances with tiny sensor
// noise) need the extra mantissa bits; the matrices involved are tiny.
Eigen::LLT<LongMat> chol_psd_long(const LongMat& S) {
    const int d = static_cast<int>(S.rows());
    LongMat A = 0.5L * (S + S.transpose());
    long double jitter = 1e-12L * A.trace() / std::max(d, 1);
    if (!(jitter > 0.0L)) jitter = 1e-300L;
    Eigen::LLT<LongMat> llt(A);
    for (int attempt = 0; attempt < 3 && llt.info() != Eigen::Success; ++attempt) {
        A.diagonal().array() += jitter;
        jitter *= 10.0L;
        llt.compute(A);
    }
    if (llt.info() != Eigen::Success) {
        throw SingularMatrixError("chol_psd: matrix not positive definite after jitter retries");
    }
    return llt;
}

}  // namespace

Mat symmetrize(const Mat& S) {
    return 0.5 * (S + S.transpose());
}

Eigen::LLT<Mat> chol_psd(const Mat& S) {
    if (S.rows() != S.cols()) {
        throw DimensionError("chol_psd: matrix not square");
    }
    const int d = static_cast<int>(S.rows());
    Mat A = symmetrize(S);
    double jitter = 1e-12 * A.trace() / std::max(d, 1);
    if (!(jitter > 0.0)) jitter = 1e-300;
    Eigen::LLT<Mat> llt(A);
    for (int attempt = 0; attempt < 3 && llt.info() != Eigen::Success; ++attempt) {
        A.diagonal().array() += jitter;
        jitter *= 10.0;
        llt.compute(A);
    }
    if (llt.info() != Eigen::Success) {
        throw SingularMatrixError("chol_psd: matrix not positive definite after jitter retries");
    }
    return llt;
}

double logdet_psd(const Mat& S) {
    if (S.rows() != S.cols()) {
        throw DimensionError("logdet_psd: matrix not square");
    }
    const Eigen::LLT<LongMat> llt = chol_psd_long(S.cast<long double>());
    long double acc = 0.0L;
    const LongMat L = llt.matrixL();
    for (int i = 0; i < L.rows(); ++i) acc += std::log(L(i, i));
    return static_cast<double>(2.0L * acc);
}

double gaussian_entropy(const Gaussian& g) {
    if (g.cov.rows() != g.dim() || g.cov.cols() != g.dim()) {
        throw DimensionError("gaussian_entropy: cov shape mismatch");
    }
    const double d = static_cast<double>(g.dim());
    return 0.5 * d * std::log(kTwoPi * std::exp(1.0)) + 0.5 * logdet_psd(g.cov);
}

double kl_gaussian(const Gaussian& p, const Gaussian& q) {
    if (p.dim() != q.dim()) {
        throw DimensionError("kl_gaussian: dimension mismatch");
    }
    const int d = p.dim();
    const Eigen::LLT<Mat> lq = chol_psd(q.cov);
    const Vec dm = q.mean - p.mean;
    // tr(Sq^{-1} Sp) through the factor; quadratic term through a solve.
    const Mat W = lq.matrixL().solve(p.cov);
    const double tr_term = lq.matrixU().solve(W).trace();
    const double quad = dm.dot(lq.solve(dm));
    const double logdet_q = 2.0 * lq.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return 0.5 * (logdet_q - logdet_psd(p.cov) - d + tr_term + quad);
}

Mat conditional_obs_cov(const JointApprox& j) {
    // sigma - gamma^T S^-1 gamma cancels almost completely when the sensor
    // noise floor is far below the propagated covariance, so the subtraction
    // runs in extended precision.
    const Eigen::LLT<LongMat> ls = chol_psd_long(j.state.cov.cast<long double>());
    const LongMat W = ls.matrixL().solve(j.gamma.cast<long double>());
    const LongMat schur = j.sigma.cast<long double>() - W.transpose() * W;
    return (0.5L * (schur + schur.transpose())).cast<double>();
}

Gaussian condition_obs_given_state(const JointApprox& j, const Vec& x) {
    if (x.size() != j.dim_x()) {
        throw DimensionError("condition_obs_given_state: state dimension mismatch");
    }
    const Eigen::LLT<Mat> ls = chol_psd(j.state.cov);
    const Vec mean = j.mu + j.gamma.transpose() * ls.solve(x - j.state.mean);
    return Gaussian{mean, conditional_obs_cov(j)};
}

Mat symmetric_sqrt(const Mat& S) {
    if (S.rows() != S.cols()) {
        throw DimensionError("symmetric_sqrt: matrix not square");
    }
    const Mat A = symmetrize(S);
    if ((A - S).cwiseAbs().maxCoeff() > 1e-8 * (1.0 + S.cwiseAbs().maxCoeff())) {
        throw DimensionError("symmetric_sqrt: input not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(A);
    if (eig.info() != Eigen::Success) {
        throw SingularMatrixError("symmetric_sqrt: eigendecomposition failed");
    }
    const double scale = eig.eigenvalues().cwiseAbs().maxCoeff();
    if (eig.eigenvalues().minCoeff() < -1e-10 * std::max(scale, 1.0)) {
        throw SingularMatrixError("symmetric_sqrt: input indefinite");
    }
    const Vec roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace efenav
