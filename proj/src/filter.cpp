#include "efenav/filter.hpp"

#include <cmath>

namespace efenav {

Gaussian predict(const LinearDynamics& dyn, const Gaussian& post, const Vec& u) {
    if (post.dim() != dyn.dim_x() || u.size() != dyn.dim_u()) {
        throw DimensionError("predict: dimension mismatch");
    }
    return Gaussian{dyn.A * post.mean + dyn.B * u,
                    symmetrize(dyn.A * post.cov * dyn.A.transpose() + dyn.Q)};
}

double wrap_angle(double a) {
    constexpr double pi = 3.141592653589793238462643383279;
    constexpr double two_pi = 2.0 * pi;
    double w = std::fmod(a + pi, two_pi);
    if (w < 0.0) w += two_pi;
    return w - pi;
}

Gaussian update(const JointApprox& j, const Vec& y_hat, const std::vector<int>& angular_outputs) {
    if (y_hat.size() != j.dim_y()) {
        throw DimensionError("update: observation dimension mismatch");
    }
    Vec innov = y_hat - j.mu;
    for (int idx : angular_outputs) innov(idx) = wrap_angle(innov(idx));

    const Eigen::LLT<Mat> lsig = chol_psd(j.sigma);
    const Mat gain = lsig.solve(j.gamma.transpose()).transpose();  // Gamma Sigma^{-1}
    return Gaussian{j.state.mean + gain * innov,
                    symmetrize(j.state.cov - gain * j.gamma.transpose())};
}

FilterState filter_step(const TransformKind& kind, const LinearDynamics& dyn,
                        const MeasurementModel& model, const FilterState& state, const Vec& u,
                        const Vec& y_hat, bool wrap_innovations) {
    const Gaussian predictive = predict(dyn, state.belief, u);
    const JointApprox j = apply_transform(kind, model, predictive);
    const std::vector<int> angular =
        wrap_innovations ? model.angular_outputs : std::vector<int>{};
    return FilterState{update(j, y_hat, angular), state.step + 1};
}

}  // namespace efenav
