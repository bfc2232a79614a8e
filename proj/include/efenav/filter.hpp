#pragma once

#include "efenav/gaussian.hpp"
#include "efenav/system.hpp"
#include "efenav/transforms.hpp"

namespace efenav {

struct FilterState {
    Gaussian belief;
    int step = 0;
};

// Time update: N(A m + B u, A S A^T + Q).
Gaussian predict(const LinearDynamics& dyn, const Gaussian& post, const Vec& u);

// Wrap into [-pi, pi).
double wrap_angle(double a);

// Measurement update from the joint approximation built at the predictive
// belief:
//   m = m_bar + Gamma Sigma^{-1} nu,  S = S_bar - Gamma Sigma^{-1} Gamma^T,
// with innovation nu = y_hat - mu. Components listed in angular_outputs are
// wrapped into [-pi, pi) before the gain multiply; observations shifted by
// 2*pi on those components therefore give identical posteriors.
Gaussian update(const JointApprox& j, const Vec& y_hat,
                const std::vector<int>& angular_outputs = {});

// predict -> transform at the predictive -> update; step incremented.
// wrap_innovations=false runs the update with circular outputs treated as
// plain reals (the fragile baseline behavior near the angle cut).
FilterState filter_step(const TransformKind& kind, const LinearDynamics& dyn,
                        const MeasurementModel& model, const FilterState& state, const Vec& u,
                        const Vec& y_hat, bool wrap_innovations = true);

}  // namespace efenav
