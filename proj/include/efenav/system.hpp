#pragma once

#include <functional>
#include <vector>

#include "efenav/gaussian.hpp"

namespace efenav {

// Linear-Gaussian transition x' = A x + B u + e, e ~ N(0, Q).
struct LinearDynamics {
    Mat A;  // D_x x D_x
    Mat B;  // D_x x D_u
    Mat Q;  // D_x x D_x, symmetric PSD

    int dim_x() const { return static_cast<int>(A.rows()); }
    int dim_u() const { return static_cast<int>(B.cols()); }
};

struct SensorStation {
    Eigen::Vector2d position{0.0, 0.0};  // plane coordinates, m
};

// Evaluating the range-bearing sensor closer than this to the station is a
// domain error; rollouts and heatmaps substitute a finite penalty instead.
inline constexpr double kStationGuardRadius = 1e-9;  // m

// Nonlinear sensor y = g(x) + v, v ~ N(0, R), with analytic first and second
// derivatives. hessians returns one D_x x D_x symmetric matrix per output.
// angular_outputs lists output indices that live on the circle [-pi, pi);
// filter innovations wrap those components.
struct MeasurementModel {
    int dim_x = 0;
    int dim_y = 0;
    Mat R;
    std::function<Vec(const Vec&)> g;
    std::function<Mat(const Vec&)> jacobian;
    std::function<std::vector<Mat>(const Vec&)> hessians;
    std::vector<int> angular_outputs;
};

// Planar double integrator with state (pos1, pos2, vel1, vel2) and one
// white-noise-acceleration block per axis. dt in seconds; sigma1, sigma2 are
// the per-axis acceleration noise intensities.
LinearDynamics build_double_integrator(double dt, double sigma1, double sigma2);

// Outputs (distance m, angle rad), angle = atan2(d1, d2) measured from the
// +x2 axis, d = position - station. Angle in [-pi, pi].
Vec range_bearing_observe(const Vec& x, const SensorStation& station);

// 2 x 4 Jacobian of the range-bearing outputs; velocity columns are zero.
Mat range_bearing_jacobian(const Vec& x, const SensorStation& station);

// Per-output Hessians (two 4 x 4 symmetric matrices); velocity rows/columns
// are zero.
std::vector<Mat> range_bearing_hessians(const Vec& x, const SensorStation& station);

// Range-bearing sensor as a MeasurementModel; the angle output (index 1) is
// declared angular. R defaults to diag(rho1^2, rho2^2).
MeasurementModel make_range_bearing_model(const SensorStation& station, double rho1, double rho2);

// Affine sensor y = H x + c + v for tests and linear baselines.
MeasurementModel make_linear_model(const Mat& H, const Vec& c, const Mat& R);

}  // namespace efenav
