#include "efenav/system.hpp"

#include <cmath>

namespace efenav {

LinearDynamics build_double_integrator(double dt, double sigma1, double sigma2) {
    if (!(dt > 0.0)) {
        throw DimensionError("build_double_integrator: dt must be positive");
    }
    if (!(sigma1 > 0.0) || !(sigma2 > 0.0)) {
        throw DimensionError("build_double_integrator: noise intensities must be positive");
    }
    LinearDynamics dyn;
    dyn.A = Mat::Identity(4, 4);
    dyn.A(0, 2) = dt;
    dyn.A(1, 3) = dt;
    dyn.B = Mat::Zero(4, 2);
    dyn.B(2, 0) = dt;
    dyn.B(3, 1) = dt;
    // White-noise acceleration: per-axis covariance blocks over (pos, vel).
    const double s1 = sigma1 * sigma1;
    const double s2 = sigma2 * sigma2;
    const double d3 = dt * dt * dt / 3.0;
    const double d2 = dt * dt / 2.0;
    dyn.Q = Mat::Zero(4, 4);
    dyn.Q(0, 0) = s1 * d3;
    dyn.Q(1, 1) = s2 * d3;
    dyn.Q(0, 2) = dyn.Q(2, 0) = s1 * d2;
    dyn.Q(1, 3) = dyn.Q(3, 1) = s2 * d2;
    dyn.Q(2, 2) = s1 * dt;
    dyn.Q(3, 3) = s2 * dt;
    return dyn;
}

namespace {

// Offset from station; throws inside the guard radius.
Eigen::Vector2d station_offset(const Vec& x, const SensorStation& station) {
    if (x.size() < 2) {
        throw DimensionError("range-bearing sensor: state must have at least 2 components");
    }
    const Eigen::Vector2d delta(x(0) - station.position(0), x(1) - station.position(1));
    if (delta.norm() < kStationGuardRadius) {
        throw SensorSingularityError("range-bearing sensor evaluated at the station");
    }
    return delta;
}

}  // namespace

Vec range_bearing_observe(const Vec& x, const SensorStation& station) {
    const Eigen::Vector2d d = station_offset(x, station);
    Vec y(2);
    y(0) = d.norm();
    y(1) = std::atan2(d(0), d(1));  // angle from the +x2 axis
    return y;
}

Mat range_bearing_jacobian(const Vec& x, const SensorStation& station) {
    const Eigen::Vector2d delta = station_offset(x, station);
    const double d2 = delta.squaredNorm();
    const double d = std::sqrt(d2);
    Mat J = Mat::Zero(2, x.size());
    J(0, 0) = delta(0) / d;
    J(0, 1) = delta(1) / d;
    J(1, 0) = delta(1) / d2;
    J(1, 1) = -delta(0) / d2;
    return J;
}

std::vector<Mat> range_bearing_hessians(const Vec& x, const SensorStation& station) {
    const Eigen::Vector2d delta = station_offset(x, station);
    const double d2 = delta.squaredNorm();
    const double d = std::sqrt(d2);
    const double d3 = d2 * d;
    const double d4 = d2 * d2;
    const int n = static_cast<int>(x.size());

    // Distance output: (I - delta delta^T / d^2) / d on the position block.
    Mat Hd = Mat::Zero(n, n);
    Hd(0, 0) = (d2 - delta(0) * delta(0)) / d3;
    Hd(1, 1) = (d2 - delta(1) * delta(1)) / d3;
    Hd(0, 1) = Hd(1, 0) = -delta(0) * delta(1) / d3;

    // Angle output.
    Mat Ha = Mat::Zero(n, n);
    Ha(0, 0) = -2.0 * delta(0) * delta(1) / d4;
    Ha(1, 1) = 2.0 * delta(0) * delta(1) / d4;
    Ha(0, 1) = Ha(1, 0) = (delta(0) * delta(0) - delta(1) * delta(1)) / d4;

    return {Hd, Ha};
}

MeasurementModel make_range_bearing_model(const SensorStation& station, double rho1, double rho2) {
    MeasurementModel m;
    m.dim_x = 4;
    m.dim_y = 2;
    m.R = Mat::Zero(2, 2);
    m.R(0, 0) = rho1 * rho1;
    m.R(1, 1) = rho2 * rho2;
    m.g = [station](const Vec& x) { return range_bearing_observe(x, station); };
    m.jacobian = [station](const Vec& x) { return range_bearing_jacobian(x, station); };
    m.hessians = [station](const Vec& x) { return range_bearing_hessians(x, station); };
    m.angular_outputs = {1};
    return m;
}

MeasurementModel make_linear_model(const Mat& H, const Vec& c, const Mat& R) {
    MeasurementModel m;
    m.dim_x = static_cast<int>(H.cols());
    m.dim_y = static_cast<int>(H.rows());
    m.R = R;
    m.g = [H, c](const Vec& x) -> Vec { return H * x + c; };
    m.jacobian = [H](const Vec&) { return H; };
    const int dx = m.dim_x;
    const int dy = m.dim_y;
    m.hessians = [dx, dy](const Vec&) {
        return std::vector<Mat>(dy, Mat::Zero(dx, dx));
    };
    return m;
}

}  // namespace efenav
