#include "efenav/transforms.hpp"

#include <cmath>

#include "efenav/rng.hpp"

namespace efenav {

JointApprox taylor1_transform(const MeasurementModel& model, const Gaussian& belief) {
    const Mat G = model.jacobian(belief.mean);
    JointApprox j;
    j.mu = model.g(belief.mean);
    j.sigma = symmetrize(G * belief.cov * G.transpose() + model.R);
    j.gamma = belief.cov * G.transpose();
    j.state = belief;
    return j;
}

Mat taylor2_covariance_correction(const MeasurementModel& model, const Mat& S, const Vec& at) {
    const std::vector<Mat> H = model.hessians(at);
    const int dy = model.dim_y;
    Mat C(dy, dy);
    std::vector<Mat> HS(dy);
    for (int i = 0; i < dy; ++i) HS[i] = H[i] * S;
    for (int i = 0; i < dy; ++i) {
        for (int jj = i; jj < dy; ++jj) {
            C(i, jj) = C(jj, i) = 0.5 * (HS[i] * HS[jj]).trace();
        }
    }
    return C;
}

JointApprox taylor2_transform(const MeasurementModel& model, const Gaussian& belief) {
    const Mat G = model.jacobian(belief.mean);
    const std::vector<Mat> H = model.hessians(belief.mean);
    const Mat C = taylor2_covariance_correction(model, belief.cov, belief.mean);
    JointApprox j;
    j.mu = model.g(belief.mean);
    for (int i = 0; i < model.dim_y; ++i) {
        j.mu(i) += 0.5 * (H[i] * belief.cov).trace();
    }
    j.sigma = symmetrize(G * belief.cov * G.transpose() + C + model.R);
    j.gamma = belief.cov * G.transpose();
    j.state = belief;
    return j;
}

JointApprox unscented_transform(const MeasurementModel& model, const Gaussian& belief,
                                const UnscentedParams& params) {
    const int dx = belief.dim();
    const double lambda = params.lambda(dx);
    const double denom = dx + lambda;
    if (!(denom > 0.0)) {
        throw DimensionError("unscented_transform: D_x + lambda must be positive");
    }
    const Mat root = symmetric_sqrt(belief.cov);
    const double scale = std::sqrt(denom);

    const int n_pts = 2 * dx + 1;
    std::vector<Vec> chi(n_pts);
    chi[0] = belief.mean;
    for (int i = 0; i < dx; ++i) {
        chi[1 + i] = belief.mean + scale * root.col(i);
        chi[1 + dx + i] = belief.mean - scale * root.col(i);
    }

    const double wm0 = lambda / denom;
    const double wc0 = wm0 + (1.0 - params.alpha * params.alpha + params.beta);
    const double wi = 1.0 / (2.0 * denom);

    std::vector<Vec> gx(n_pts);
    for (int i = 0; i < n_pts; ++i) gx[i] = model.g(chi[i]);

    Vec mu = wm0 * gx[0];
    for (int i = 1; i < n_pts; ++i) mu += wi * gx[i];

    Mat sigma = wc0 * (gx[0] - mu) * (gx[0] - mu).transpose();
    Mat gamma = wc0 * (chi[0] - belief.mean) * (gx[0] - mu).transpose();
    for (int i = 1; i < n_pts; ++i) {
        sigma += wi * (gx[i] - mu) * (gx[i] - mu).transpose();
        gamma += wi * (chi[i] - belief.mean) * (gx[i] - mu).transpose();
    }

    JointApprox j;
    j.mu = mu;
    j.sigma = symmetrize(sigma + model.R);
    j.gamma = gamma;
    j.state = belief;
    return j;
}

JointApprox apply_transform(const TransformKind& kind, const MeasurementModel& model,
                            const Gaussian& belief) {
    switch (kind.family) {
        case TransformFamily::Taylor1:
            return taylor1_transform(model, belief);
        case TransformFamily::Taylor2:
            return taylor2_transform(model, belief);
        case TransformFamily::Unscented:
            return unscented_transform(model, belief, kind.ut);
    }
    throw DimensionError("apply_transform: unknown transform kind");
}

JointApprox mc_moment_oracle(const MeasurementModel& model, const Gaussian& belief,
                             std::int64_t n, std::uint64_t seed) {
    if (n < 10000) {
        throw DimensionError("mc_moment_oracle: need at least 1e4 samples");
    }
    const int dx = belief.dim();
    const int dy = model.dim_y;
    // Symmetric root instead of Cholesky so semidefinite beliefs sample too.
    const Mat root = symmetric_sqrt(belief.cov);

    Vec sum_y = Vec::Zero(dy);
    Mat sum_yy = Mat::Zero(dy, dy);
    Mat sum_xy = Mat::Zero(dx, dy);
    Vec sum_x = Vec::Zero(dx);

    std::int64_t rejected_in_row = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        Vec x, y;
        for (;;) {
            const std::uint64_t key = rng::key(seed, static_cast<std::uint64_t>(i),
                                               static_cast<std::uint64_t>(rejected_in_row),
                                               DrawKind::OracleSample);
            x = belief.mean + root * rng::normal_vec(key, dx);
            try {
                y = model.g(x);
                rejected_in_row = 0;
                break;
            } catch (const SensorSingularityError&) {
                if (++rejected_in_row >= 100) throw;
            }
        }
        sum_x += x;
        sum_y += y;
        sum_yy += y * y.transpose();
        sum_xy += x * y.transpose();
    }

    const double inv_n = 1.0 / static_cast<double>(n);
    JointApprox j;
    j.mu = sum_y * inv_n;
    const Vec mean_x = sum_x * inv_n;
    j.sigma = symmetrize(sum_yy * inv_n - j.mu * j.mu.transpose() + model.R);
    j.gamma = sum_xy * inv_n - mean_x * j.mu.transpose();
    j.state = belief;
    return j;
}

}  // namespace efenav
