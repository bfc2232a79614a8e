#pragma once

#include <cstdint>

#include "efenav/gaussian.hpp"
#include "efenav/system.hpp"

namespace efenav {

// Sigma-point scaling. lambda = alpha^2 (D_x + kappa) - D_x must satisfy
// D_x + lambda > 0.
struct UnscentedParams {
    double alpha = 1.0;
    double beta = 2.0;
    double kappa = 0.0;

    double lambda(int dim_x) const { return alpha * alpha * (dim_x + kappa) - dim_x; }

    // Common choice for Gaussian beliefs: alpha=1, beta=2, kappa=3-D_x.
    static UnscentedParams defaults(int dim_x) {
        return UnscentedParams{1.0, 2.0, 3.0 - static_cast<double>(dim_x)};
    }
};

enum class TransformFamily { Taylor1, Taylor2, Unscented };

struct TransformKind {
    TransformFamily family = TransformFamily::Taylor1;
    UnscentedParams ut{};

    static TransformKind taylor1() { return {TransformFamily::Taylor1, {}}; }
    static TransformKind taylor2() { return {TransformFamily::Taylor2, {}}; }
    static TransformKind unscented(const UnscentedParams& p) {
        return {TransformFamily::Unscented, p};
    }
};

// First-order linearization at the belief mean:
//   mu = g(m), Sigma = G S G^T + R, Gamma = S G^T.
JointApprox taylor1_transform(const MeasurementModel& model, const Gaussian& belief);

// Second-order covariance correction C with
//   C_ij = 1/2 tr(H_i S H_j S),
// the term that makes the observation covariance (and through it the
// ambiguity) state-dependent. Shared by taylor2_transform and the
// closed-form ambiguity.
Mat taylor2_covariance_correction(const MeasurementModel& model, const Mat& S, const Vec& at);

// Second-order transform:
//   mu = g(m) + 1/2 sum_i e_i tr(H_i S), Sigma = G S G^T + C + R,
//   Gamma = S G^T (unchanged from first order).
JointApprox taylor2_transform(const MeasurementModel& model, const Gaussian& belief);

// Unscented transform with 2 D_x + 1 sigma points
//   chi_0 = m, chi_i = m +/- sqrt(D_x + lambda) [sqrt(S)]_i
// using the symmetric eigendecomposition root. Weights: mean w0 =
// lambda/(D_x+lambda); covariance w0 additionally + (1 - alpha^2 + beta);
// w_i = 1/(2(D_x+lambda)) for i >= 1 in both sums.
JointApprox unscented_transform(const MeasurementModel& model, const Gaussian& belief,
                                const UnscentedParams& params);

JointApprox apply_transform(const TransformKind& kind, const MeasurementModel& model,
                            const Gaussian& belief);

// Sample-based oracle: empirical (mu, Sigma, Gamma) from n draws of
// x ~ belief pushed through g, with R added to Sigma. Deterministic given
// seed. Samples inside the sensor guard radius are rejected and redrawn;
// errors after 100 consecutive rejections.
JointApprox mc_moment_oracle(const MeasurementModel& model, const Gaussian& belief,
                             std::int64_t n, std::uint64_t seed);

}  // namespace efenav
