#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "efenav/efe.hpp"
#include "efenav/system.hpp"
#include "efenav/transforms.hpp"

namespace efenav {

enum class AgentKind { Mpc, Efe1, Efer, Efe2 };

// Estimation transform and ambiguity flag per agent family. Mpc plans with
// the quadratic objective and estimates with the first-order transform.
TransformKind agent_transform(AgentKind kind);
bool agent_includes_ambiguity(AgentKind kind);

struct OptimizerSettings {
    // Objective-evaluation budget per planning call, counted in horizon
    // evaluations (finite-difference work is charged pro rata).
    double max_evals = 2000.0;
    double tol = 1e-6;        // stop on objective change below this
    int n_random_starts = 3;  // seeded random feasible plans beside zero/warm
    std::uint64_t seed = 0;   // fixed per scenario so every trial shares starts
    // A candidate start's descended result replaces the incumbent best only
    // when it improves by more than this; keeps receding-horizon plans from
    // flipping between symmetric basins on float-level differences.
    double restart_margin = 0.0;
};

struct PlannerConfig {
    int horizon = 1;
    double u_max = 1.0;  // box bound per control component
    TransformKind kind{};
    bool include_ambiguity = true;
    double eta = 0.0;  // control precision (EFE) or regularizer (MPC)
    OptimizerSettings opt{};
};

struct ControlPlan {
    std::vector<Vec> controls;
    double objective = 0.0;
    bool degraded = false;     // budget ran out before the tolerance was met
    double evals_used = 0.0;   // horizon-evaluation equivalents spent
};

// MAP plan under the expected-free-energy objective: projected quasi-Newton
// descent (limited-memory BFGS on per-step central-difference gradients
// propagated through the linear dynamics by an exact adjoint) from multiple
// starts - the zero plan, the warm start when given, and seeded random
// feasible plans. Deterministic given config and inputs; with a zero
// restart_margin the result's objective never exceeds the zero plan's or the
// warm start's.
ControlPlan plan_efe(const PlannerConfig& cfg, const LinearDynamics& dyn,
                     const MeasurementModel& model, const Gaussian& belief,
                     const GoalPrior& goal, const ControlPlan* warm_start = nullptr);

// Finite-horizon quadratic tracking objective
//   sum_t (xhat_t - x_star)^T C (xhat_t - x_star) + eta ||u_t||^2,
//   xhat_t = A xhat_{t-1} + B u_t,
// solved exactly by stacked normal equations; when the box bound binds, the
// clamped solution is polished by projected gradient on the same quadratic.
ControlPlan plan_mpc(const PlannerConfig& cfg, const LinearDynamics& dyn, const Vec& belief_mean,
                     const Vec& x_star, const Mat& C);

// Everything one receding-horizon planning call needs to know about the
// agent. mpc_cost/x_star are only read by the Mpc kind.
struct AgentSpec {
    AgentKind kind = AgentKind::Efe2;
    PlannerConfig cfg{};
    Vec x_star;
    Mat mpc_cost;
};

struct PlanOutcome {
    Vec first_control;
    ControlPlan next_warm_start;  // plan shifted one step, last control repeated
    ControlPlan plan;
};

PlanOutcome receding_horizon_step(const AgentSpec& agent, const LinearDynamics& dyn,
                                  const MeasurementModel& model, const Gaussian& belief,
                                  const GoalPrior& goal,
                                  const ControlPlan* warm_start = nullptr);

}  // namespace efenav
