#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace efenav {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SingularMatrixError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when a sensor is evaluated inside its singularity guard radius.
struct SensorSingularityError : std::domain_error {
    using std::domain_error::domain_error;
};

// Dense multivariate normal N(mean, cov). cov must be symmetric PSD.
struct Gaussian {
    Vec mean;
    Mat cov;

    int dim() const { return static_cast<int>(mean.size()); }
};

// Joint Gaussian over (state, observation) parameterized by the predicted
// observation mean mu (D_y), its covariance sigma (D_y x D_y), and the
// state-observation cross covariance gamma = Cov(x, y), shape D_x x D_y.
// The full joint covariance is [[S, gamma], [gamma^T, sigma]] where
// (m, S) = state.
struct JointApprox {
    Vec mu;
    Mat sigma;
    Mat gamma;
    Gaussian state;

    int dim_x() const { return state.dim(); }
    int dim_y() const { return static_cast<int>(mu.size()); }
};

// (S + S^T)/2; long filter recursions accumulate asymmetry.
Mat symmetrize(const Mat& S);

// Cholesky factor of a symmetric PSD matrix. On factorization failure adds
// jitter 1e-12 * trace/D, retrying up to 3 times with 10x growth; throws
// SingularMatrixError if all retries fail.
Eigen::LLT<Mat> chol_psd(const Mat& S);

// ln det S for symmetric positive definite S via Cholesky.
double logdet_psd(const Mat& S);

// Differential entropy (D/2) ln(2*pi*e) + 1/2 ln det(cov), in nats.
double gaussian_entropy(const Gaussian& g);

// KL(p || q) for Gaussians of equal dimension, in nats:
//   1/2 ( ln(|Sq|/|Sp|) - D + tr(Sq^{-1} (Sp + Psi)) ),
//   Psi = (mq - mp)(mq - mp)^T.
// Non-negative up to -1e-12 numerical slack.
double kl_gaussian(const Gaussian& p, const Gaussian& q);

// Conditional N(y | x) of the joint: mean mu + gamma^T S^{-1} (x - m),
// covariance sigma - gamma^T S^{-1} gamma (independent of x).
Gaussian condition_obs_given_state(const JointApprox& j, const Vec& x);

// Observation covariance given the state: the Schur complement
// sigma - gamma^T S^{-1} gamma, evaluated via the Cholesky of S as
// sigma - W^T W with W = L^{-1} gamma, then symmetrized. The W route
// avoids the cancellation error a generic solve leaves behind when the
// complement is many orders of magnitude smaller than sigma.
Mat conditional_obs_cov(const JointApprox& j);

// Symmetric matrix square root via eigendecomposition: M symmetric with
// M*M = S. Deliberately not a triangular factor; the sigma-point set and
// its cancellation identities assume the symmetric root.
Mat symmetric_sqrt(const Mat& S);

}  // namespace efenav
