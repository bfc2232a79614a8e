#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "efenav/efe.hpp"
#include "efenav/filter.hpp"
#include "efenav/planner.hpp"
#include "efenav/system.hpp"

namespace efenav {

struct HeatmapSpec {
    double x_min = -2.0, x_max = 2.0;
    double y_min = -2.0, y_max = 2.0;
    int res = 101;
};

// Everything one seeded experiment needs. Trials of a Monte-Carlo batch are
// copies with seed = base seed + trial index, so noise realizations match
// across agents run from the same base seed.
struct Scenario {
    std::string name;
    LinearDynamics dyn;
    MeasurementModel model;
    SensorStation station;
    Vec x0;            // true initial state
    Gaussian prior;    // belief N(m_0, S_0)
    GoalPrior goal;    // over observations
    Vec x_star;        // desired state (also the MPC target)
    int n_steps = 1;
    int n_trials = 1;
    AgentKind agent = AgentKind::Efe2;
    PlannerConfig cfg{};
    Mat mpc_cost;  // C, read by the Mpc agent only
    std::uint64_t seed = 0;
    // Innovation wrapping for circular outputs. Default on; the fragile
    // baseline configuration switches it off to reproduce loss of track near
    // the angle cut.
    bool wrap_innovations = true;

    HeatmapSpec heatmap{};
    Mat heatmap_cov;  // S held fixed across the grid; identity by default
    std::vector<AgentKind> heatmap_agents;

    std::string out_dir;
};

// One seeded trial's full time series. Arrays share length steps_completed,
// which equals the scenario's n_steps unless the trial diverged.
struct TrialRecord {
    std::vector<Vec> x_true;
    std::vector<Vec> observation;
    std::vector<Vec> control;
    std::vector<Vec> belief_mean;
    std::vector<Mat> belief_cov;
    std::vector<EfeTerms> efe;
    std::vector<double> planner_objective;
    int steps_completed = 0;
    bool diverged = false;
    double final_goal_distance = 0.0;    // position distance to x_star, m
    double min_station_distance = 0.0;   // over the true trajectory, m
    double final_tracking_error = 0.0;   // ||belief mean - true state|| at the end
    bool reached_goal = false;           // final position within 0.3 m of x_star
};

// Pure function of (seed, trial): draws for step k are fixed regardless of
// what the agent computed before asking.
struct EnvStream {
    std::uint64_t seed = 0;
    std::uint64_t trial = 0;
};

// Ground-truth step x' = A x + B u + e, y = g(x') + v. If x' lands inside the
// sensor guard radius the process noise is redrawn once, then the singularity
// error propagates.
std::pair<Vec, Vec> step_env(const LinearDynamics& dyn, const MeasurementModel& model,
                             const Vec& x_true, const Vec& u, const EnvStream& stream, int step);

// plan -> execute first control -> step environment -> filter update, for
// n_steps. Deterministic given the scenario (seed included). A non-finite
// belief or tracking error above 1e3 truncates the record with the diverged
// flag set.
TrialRecord run_trial(const Scenario& scn);

struct MonteCarloSummary {
    int n_trials = 0;
    int n_diverged = 0;
    // Trials where tracking failed: diverged, or final tracking error > 1.
    int n_lost_track = 0;
    int n_reached_goal = 0;
    std::vector<TrialRecord> trials;
    // Per-step aggregates over non-diverged trials (state components).
    std::vector<Vec> mean_true, sd_true, stderr_true, mean_belief;
    // Standard error of the true positions, averaged over steps and both
    // position components.
    double avg_position_stderr = 0.0;
};

// Runs n_trials seeded trials (trial i reseeds with base seed + i), in
// parallel up to n_threads (0 = hardware concurrency; the EFE_NAV_THREADS
// environment variable is applied by the CLI layer). Aggregation is
// independent of completion order.
MonteCarloSummary run_monte_carlo(const Scenario& scn, int n_trials, int n_threads = 0);

struct HeatmapResult {
    std::vector<double> x1, x2;  // grid coordinates
    Mat values;                  // values(i, j) at (x1[i], x2[j])
    int argmin_i = 0, argmin_j = 0;
    double argmin_x1 = 0.0, argmin_x2 = 0.0;
};

// Objective value risk (+ ambiguity per agent) of the belief N((p, 0, 0), S)
// at every grid position p. Cells inside the station guard radius take the
// singularity penalty per included term. Mpc is not an EFE agent and is
// rejected.
HeatmapResult efe_heatmap(const HeatmapSpec& spec, const Mat& S_fixed, AgentKind agent,
                          const MeasurementModel& model, const GoalPrior& goal);

}  // namespace efenav
