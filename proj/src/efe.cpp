#include "efenav/efe.hpp"

#include <cmath>

namespace efenav {

namespace {

constexpr double kLn2PiE = 2.8378770664093454835606594728112;  // ln(2 pi e)

double half_dy_ln2pie(int dy) { return 0.5 * static_cast<double>(dy) * kLn2PiE; }

}  // namespace

double ambiguity_generic(const JointApprox& j) {
    const Mat schur = conditional_obs_cov(j);
    return half_dy_ln2pie(j.dim_y()) + 0.5 * logdet_psd(schur);
}

double ambiguity_closed_form(const TransformKind& kind, const MeasurementModel& model,
                             const Gaussian& belief) {
    switch (kind.family) {
        case TransformFamily::Taylor1:
        case TransformFamily::Unscented:
            return half_dy_ln2pie(model.dim_y) + 0.5 * logdet_psd(model.R);
        case TransformFamily::Taylor2: {
            const Mat C = taylor2_covariance_correction(model, belief.cov, belief.mean);
            return half_dy_ln2pie(model.dim_y) + 0.5 * logdet_psd(C + model.R);
        }
    }
    throw DimensionError("ambiguity_closed_form: unknown transform kind");
}

double risk(const Gaussian& pred, const GoalPrior& goal) {
    return kl_gaussian(pred, Gaussian{goal.mean, goal.cov});
}

namespace {

EfeTerms efe_at_predictive(const TransformKind& kind, const MeasurementModel& model,
                           const Gaussian& predictive, const GoalPrior& goal,
                           bool include_ambiguity) {
    const JointApprox j = apply_transform(kind, model, predictive);
    EfeTerms t;
    t.risk = risk(Gaussian{j.mu, j.sigma}, goal);
    t.ambiguity = include_ambiguity ? ambiguity_generic(j) : 0.0;
    t.total = t.risk + t.ambiguity;
    return t;
}

}  // namespace

EfeTerms efe_step(const TransformKind& kind, const LinearDynamics& dyn,
                  const MeasurementModel& model, const Gaussian& belief, const Vec& u,
                  const GoalPrior& goal, bool include_ambiguity) {
    return efe_at_predictive(kind, model, predict(dyn, belief, u), goal, include_ambiguity);
}

double efe_horizon(const TransformKind& kind, const LinearDynamics& dyn,
                   const MeasurementModel& model, const Gaussian& belief,
                   const std::vector<Vec>& plan, const GoalPrior& goal,
                   const ControlPrior& prior, bool include_ambiguity) {
    if (plan.empty()) {
        throw DimensionError("efe_horizon: plan must have at least one step");
    }
    Gaussian rolled = belief;
    double total = 0.0;
    for (const Vec& u : plan) {
        rolled = predict(dyn, rolled, u);
        try {
            total += efe_at_predictive(kind, model, rolled, goal, include_ambiguity).total;
        } catch (const SensorSingularityError&) {
            total += include_ambiguity ? 2.0 * kSingularityPenaltyNats : kSingularityPenaltyNats;
        }
        total += 0.5 * prior.precision * u.squaredNorm();
    }
    return total;
}

}  // namespace efenav
