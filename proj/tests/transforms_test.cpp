#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>

#include "efenav/system.hpp"
#include "efenav/transforms.hpp"
#include "support/oracles.hpp"

using namespace efenav;

namespace {

Gaussian make_belief(const Vec& mean, const Mat& cov) {
    Gaussian g;
    g.mean = mean;
    g.cov = cov;
    return g;
}

// Scalar sensor y = x^2 + v. Exact moments under N(0,1) are known, which
// pins the unscented weights including the beta term.
MeasurementModel make_square_model(double r) {
    MeasurementModel m;
    m.dim_x = 1;
    m.dim_y = 1;
    m.R = Mat::Constant(1, 1, r);
    m.g = [](const Vec& x) { return Vec::Constant(1, x(0) * x(0)); };
    m.jacobian = [](const Vec& x) { return Mat::Constant(1, 1, 2.0 * x(0)); };
    m.hessians = [](const Vec&) { return std::vector<Mat>{Mat::Constant(1, 1, 2.0)}; };
    return m;
}

double min_eigenvalue(const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()));
    return es.eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("affine sensor: all three transforms reproduce the exact joint") {
    std::mt19937_64 gen(11);
    Mat H(2, 4);
    H << 1.0, -0.5, 0.2, 0.0, 0.3, 1.1, 0.0, -0.7;
    Vec c(2);
    c << 0.4, -1.2;
    const Mat R = oracles::random_psd(2, gen, 0.05, 0.5);
    const MeasurementModel model = make_linear_model(H, c, R);

    for (int rep = 0; rep < 20; ++rep) {
        const Gaussian belief = make_belief(oracles::random_vec(4, gen, 3.0),
                                            oracles::random_psd(4, gen, 0.1, 2.0));
        const Vec mu_exact = H * belief.mean + c;
        const Mat sigma_exact = H * belief.cov * H.transpose() + R;
        const Mat gamma_exact = belief.cov * H.transpose();

        for (const TransformKind& kind :
             {TransformKind::taylor1(), TransformKind::taylor2(),
              TransformKind::unscented(UnscentedParams::defaults(4))}) {
            const JointApprox j = apply_transform(kind, model, belief);
            CHECK((j.mu - mu_exact).cwiseAbs().maxCoeff() < 1e-10);
            CHECK((j.sigma - sigma_exact).cwiseAbs().maxCoeff() < 1e-10);
            CHECK((j.gamma - gamma_exact).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("first-order transform at a unit-distance belief") {
    const MeasurementModel model = make_range_bearing_model(SensorStation{}, 1e-3, 1e-3);
    Vec mean(4);
    mean << 0.0, -1.0, 0.0, 0.0;
    const Gaussian belief = make_belief(mean, 0.5 * Mat::Identity(4, 4));

    const JointApprox j = taylor1_transform(model, belief);

    CHECK(j.mu(0) == doctest::Approx(1.0));
    CHECK(j.mu(1) == doctest::Approx(M_PI));

    // G has orthonormal rows here, so G S G^T = 0.5 I.
    Mat sigma_expect = 0.5 * Mat::Identity(2, 2) + model.R;
    CHECK((j.sigma - sigma_expect).cwiseAbs().maxCoeff() < 1e-12);

    Mat gamma_expect = Mat::Zero(4, 2);
    gamma_expect(0, 1) = -0.5;
    gamma_expect(1, 0) = -0.5;
    CHECK((j.gamma - gamma_expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("second-order transform at a unit-distance belief") {
    const MeasurementModel model = make_range_bearing_model(SensorStation{}, 1e-3, 1e-3);
    Vec mean(4);
    mean << 0.0, -1.0, 0.0, 0.0;
    const Gaussian belief = make_belief(mean, 0.5 * Mat::Identity(4, 4));

    const JointApprox j = taylor2_transform(model, belief);

    // Mean correction: 1/2 tr(H_dist S) = 0.25, angle Hessian is traceless.
    CHECK(j.mu(0) == doctest::Approx(1.25));
    CHECK(j.mu(1) == doctest::Approx(M_PI));

    // C = diag(1/8, 1/4) on top of the first-order covariance.
    Mat sigma_expect = 0.5 * Mat::Identity(2, 2) + model.R;
    sigma_expect(0, 0) += 0.125;
    sigma_expect(1, 1) += 0.25;
    CHECK((j.sigma - sigma_expect).cwiseAbs().maxCoeff() < 1e-12);

    // Cross covariance is the first-order one.
    const JointApprox j1 = taylor1_transform(model, belief);
    CHECK((j.gamma - j1.gamma).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("covariance correction closed form and distance scaling") {
    const MeasurementModel model = make_range_bearing_model(SensorStation{}, 1e-3, 1e-3);
    Vec at(4);
    at << 0.0, -1.0, 0.0, 0.0;
    const Mat S = 0.5 * Mat::Identity(4, 4);

    const Mat C1 = taylor2_covariance_correction(model, S, at);
    CHECK(C1(0, 0) == doctest::Approx(0.125));
    CHECK(C1(1, 1) == doctest::Approx(0.25));
    CHECK(C1(0, 1) == doctest::Approx(0.0));

    // Doubling the distance scales the distance Hessian by 1/2 and the angle
    // Hessian by 1/4, so C_11 drops by 4 and C_22 by 16.
    Vec far(4);
    far << 0.0, -2.0, 0.0, 0.0;
    const Mat C2 = taylor2_covariance_correction(model, S, far);
    CHECK(C2(0, 0) == doctest::Approx(0.125 / 4.0));
    CHECK(C2(1, 1) == doctest::Approx(0.25 / 16.0));
}

TEST_CASE("second order only inflates the observation covariance") {
    const MeasurementModel model = make_range_bearing_model(SensorStation{}, 1e-3, 1e-3);
    std::mt19937_64 gen(23);
    for (int rep = 0; rep < 100; ++rep) {
        Vec mean = oracles::random_vec(4, gen, 2.0);
        if (mean.head<2>().norm() < 0.15) continue;
        const Gaussian belief = make_belief(mean, oracles::random_psd(4, gen, 0.05, 1.0));
        const JointApprox j1 = taylor1_transform(model, belief);
        const JointApprox j2 = taylor2_transform(model, belief);
        CHECK((j2.gamma - j1.gamma).cwiseAbs().maxCoeff() < 1e-14);
        CHECK(min_eigenvalue(j2.sigma - j1.sigma) > -1e-12);
    }
}

TEST_CASE("unscented transform on a scalar square sensor") {
    // N(0,1) through x^2 with default parameters (alpha=1, beta=2, kappa=2):
    // sigma points {0, +/-sqrt(3)}, mean weight 2/3 at the center. The
    // transform mean is exact (1); the covariance lands on 4 + R, which pins
    // the beta term in the center covariance weight.
    const MeasurementModel model = make_square_model(0.01);
    const Gaussian belief = make_belief(Vec::Zero(1), Mat::Identity(1, 1));

    const JointApprox j = unscented_transform(model, belief, UnscentedParams::defaults(1));
    CHECK(j.mu(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(j.sigma(0, 0) == doctest::Approx(4.01).epsilon(1e-12));
    // Odd symmetry of the sigma set about the mean: no linear correlation.
    CHECK(std::abs(j.gamma(0, 0)) < 1e-12);
}

TEST_CASE("unscented sigma point placement hits a known singular point") {
    // With S = 0.25 I and lambda = -1 the minus point along axis 1 sits at
    // mean - sqrt(3) * 0.5 e_1. Choosing that mean puts the sigma point
    // exactly on the station, which must surface as a sensor domain error.
    const MeasurementModel model = make_range_bearing_model(SensorStation{}, 1e-3, 1e-3);
    Vec mean(4);
    mean << std::sqrt(3.0) * 0.5, 0.0, 0.0, 0.0;
    const Gaussian belief = make_belief(mean, 0.25 * Mat::Identity(4, 4));

    CHECK_THROWS_AS(unscented_transform(model, belief, UnscentedParams::defaults(4)),
                    SensorSingularityError);

    // Nudge the mean off the lattice point and the transform succeeds.
    Vec shifted = mean;
    shifted(0) += 0.01;
    CHECK_NOTHROW(unscented_transform(model, make_belief(shifted, belief.cov),
                                      UnscentedParams::defaults(4)));
}

TEST_CASE("unscented transform rejects a non-positive sigma point spread") {
    const MeasurementModel model = make_range_bearing_model(SensorStation{}, 1e-3, 1e-3);
    Vec mean(4);
    mean << 0.0, -1.0, 0.0, 0.0;
    const Gaussian belief = make_belief(mean, 0.5 * Mat::Identity(4, 4));

    UnscentedParams p{1.0, 2.0, -4.0};  // lambda = -4, D_x + lambda = 0
    CHECK_THROWS_AS(unscented_transform(model, belief, p), DimensionError);
}

TEST_CASE("moment oracle matches the exact affine joint") {
    Mat H(2, 4);
    H << 1.0, 0.0, 0.3, 0.0, 0.0, 1.0, 0.0, 0.3;
    const Vec c = Vec::Zero(2);
    const Mat R = 0.01 * Mat::Identity(2, 2);
    const MeasurementModel model = make_linear_model(H, c, R);

    Vec mean(4);
    mean << 0.5, -0.5, 0.1, 0.2;
    const Gaussian belief = make_belief(mean, 0.2 * Mat::Identity(4, 4));

    const std::int64_t n = 200000;
    const JointApprox mc = mc_moment_oracle(model, belief, n, 99);
    const JointApprox exact = taylor1_transform(model, belief);

    // Component standard errors ~ sqrt(Sigma_ii / n) ~ 1e-3.
    CHECK((mc.mu - exact.mu).cwiseAbs().maxCoeff() < 5e-3);
    CHECK((mc.sigma - exact.sigma).cwiseAbs().maxCoeff() < 5e-3);
    CHECK((mc.gamma - exact.gamma).cwiseAbs().maxCoeff() < 5e-3);
}

TEST_CASE("moment oracle is deterministic and guards its sample count") {
    const MeasurementModel model = make_range_bearing_model(SensorStation{}, 1e-3, 1e-3);
    Vec mean(4);
    mean << 0.0, -1.5, 0.0, 0.0;
    const Gaussian belief = make_belief(mean, 0.01 * Mat::Identity(4, 4));

    const JointApprox a = mc_moment_oracle(model, belief, 10000, 7);
    const JointApprox b = mc_moment_oracle(model, belief, 10000, 7);
    CHECK((a.mu - b.mu).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.sigma - b.sigma).cwiseAbs().maxCoeff() == 0.0);

    const JointApprox other = mc_moment_oracle(model, belief, 10000, 8);
    CHECK((a.mu - other.mu).cwiseAbs().maxCoeff() > 0.0);

    CHECK_THROWS_AS(mc_moment_oracle(model, belief, 9999, 7), DimensionError);
}

TEST_CASE("transforms track the sampled moments of a tight far belief") {
    const MeasurementModel model = make_range_bearing_model(SensorStation{}, 1e-3, 1e-3);
    Vec mean(4);
    mean << 0.9, -1.2, 0.0, 0.0;
    const Gaussian belief = make_belief(mean, 0.01 * Mat::Identity(4, 4));

    const JointApprox mc = mc_moment_oracle(model, belief, 100000, 3);
    for (const TransformKind& kind :
         {TransformKind::taylor1(), TransformKind::taylor2(),
          TransformKind::unscented(UnscentedParams::defaults(4))}) {
        const JointApprox j = apply_transform(kind, model, belief);
        // First order carries its 1/2 tr(H S) mean bias (~3.3e-3 here);
        // the bound admits it plus sampling noise.
        CHECK((j.mu - mc.mu).cwiseAbs().maxCoeff() < 5e-3);
        CHECK((j.sigma - mc.sigma).cwiseAbs().maxCoeff() < 5e-4);
    }
}

TEST_CASE("second order beats first order near the station") {
    // Close to the station the sensor curvature is large; the corrected
    // covariance trace should land nearer the sampled one.
    const MeasurementModel model = make_range_bearing_model(SensorStation{}, 1e-3, 1e-3);
    Vec mean(4);
    mean << 0.0, -0.3, 0.0, 0.0;
    const Gaussian belief = make_belief(mean, 0.04 * Mat::Identity(4, 4));

    const JointApprox mc = mc_moment_oracle(model, belief, 200000, 17);
    const double t1_err = std::abs(taylor1_transform(model, belief).sigma.trace() -
                                   mc.sigma.trace());
    const double t2_err = std::abs(taylor2_transform(model, belief).sigma.trace() -
                                   mc.sigma.trace());
    CHECK(t2_err < t1_err);
}

TEST_CASE("every transform yields a positive definite conditional covariance") {
    const MeasurementModel model = make_range_bearing_model(SensorStation{}, 1e-3, 1e-3);
    std::mt19937_64 gen(31);
    int tested = 0;
    for (int rep = 0; rep < 200 && tested < 50; ++rep) {
        Vec mean = oracles::random_vec(4, gen, 2.0);
        if (mean.head<2>().norm() < 0.3) continue;
        ++tested;
        const Gaussian belief = make_belief(mean, oracles::random_psd(4, gen, 0.05, 0.5));
        for (const TransformKind& kind :
             {TransformKind::taylor1(), TransformKind::taylor2(),
              TransformKind::unscented(UnscentedParams::defaults(4))}) {
            const JointApprox j = apply_transform(kind, model, belief);
            const Mat schur = conditional_obs_cov(j);
            CHECK(min_eigenvalue(schur) > -1e-9);
        }
    }
    CHECK(tested == 50);
}
