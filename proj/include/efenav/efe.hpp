#pragma once

#include <vector>

#include "efenav/filter.hpp"
#include "efenav/gaussian.hpp"
#include "efenav/system.hpp"
#include "efenav/transforms.hpp"

namespace efenav {

// Desired distribution over future observations.
struct GoalPrior {
    Vec mean;  // mu_star, D_y
    Mat cov;   // Sigma_star, D_y x D_y PSD
};

// risk + ambiguity decomposition of one planning step, in nats.
// total == risk + ambiguity always; when ambiguity is excluded the term is 0
// and total is pure risk.
struct EfeTerms {
    double risk = 0.0;
    double ambiguity = 0.0;
    double total = 0.0;
};

// Zero-mean isotropic control prior N(0, eta^{-1} I); its negative log is
// eta/2 ||u||^2 up to a constant dropped everywhere.
struct ControlPrior {
    double precision = 0.0;  // eta > 0
};

// A predicted-state mean this close to the sensor station makes the rollout
// step contribute this penalty instead of erroring out of the optimizer.
// Charged once per diverging term (risk always, ambiguity when included), so
// the agents' limiting order at the station survives the substitution.
inline constexpr double kSingularityPenaltyNats = 1e6;

// Conditional observation entropy of the joint:
//   D_y/2 ln(2 pi e) + 1/2 ln|Sigma - Gamma^T S^{-1} Gamma|.
double ambiguity_generic(const JointApprox& j);

// What the ambiguity reduces to per transform family:
//   Taylor1 and Unscented: D_y/2 ln(2 pi e) + 1/2 ln|R|   (state-free form)
//   Taylor2:               D_y/2 ln(2 pi e) + 1/2 ln|C + R|, with the
//                          state-dependent covariance correction C.
// The Taylor1 form is exact. The Unscented form is the claimed constant for
// that family; the generic evaluation deviates from it for curved sensors
// (see the property suite), which is reported, not hidden.
double ambiguity_closed_form(const TransformKind& kind, const MeasurementModel& model,
                             const Gaussian& belief);

// KL from the predicted observation distribution to the goal prior:
//   1/2 ( ln(|S_star|/|S_pred|) - D_y + tr(S_star^{-1}(S_pred + Psi)) ),
//   Psi = (mu_star - mu_pred)(mu_star - mu_pred)^T.
double risk(const Gaussian& pred, const GoalPrior& goal);

// One planning step from the current belief: time-update with u, transform,
// then risk (+ ambiguity when included) of the predicted observation.
EfeTerms efe_step(const TransformKind& kind, const LinearDynamics& dyn,
                  const MeasurementModel& model, const Gaussian& belief, const Vec& u,
                  const GoalPrior& goal, bool include_ambiguity);

// T-step objective: predict-only rollout from the current posterior (future
// observations are unavailable, so only the time update recurses), summing
// per-step totals plus eta/2 ||u_t||^2. Steps whose predicted mean falls
// inside the station guard radius contribute kSingularityPenaltyNats per
// included term.
double efe_horizon(const TransformKind& kind, const LinearDynamics& dyn,
                   const MeasurementModel& model, const Gaussian& belief,
                   const std::vector<Vec>& plan, const GoalPrior& goal,
                   const ControlPrior& prior, bool include_ambiguity);

}  // namespace efenav
