#include "efenav/sim.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "efenav/rng.hpp"

namespace efenav {

namespace {

bool all_finite(const Vec& v) { return v.allFinite(); }
bool all_finite(const Mat& m) { return m.allFinite(); }

double position_distance(const Vec& a, const Vec& b) {
    return std::hypot(a(0) - b(0), a(1) - b(1));
}

}  // namespace

std::pair<Vec, Vec> step_env(const LinearDynamics& dyn, const MeasurementModel& model,
                             const Vec& x_true, const Vec& u, const EnvStream& stream, int step) {
    const Mat q_root = symmetric_sqrt(dyn.Q);
    const Mat r_root = symmetric_sqrt(model.R);
    const std::uint64_t step_u = static_cast<std::uint64_t>(step);

    const std::uint64_t kp = rng::key(stream.seed, stream.trial, step_u, DrawKind::ProcessNoise);
    Vec x_next = dyn.A * x_true + dyn.B * u + q_root * rng::normal_vec(kp, dyn.dim_x());

    Vec y;
    try {
        y = model.g(x_next);
    } catch (const SensorSingularityError&) {
        // One redraw on fresh lanes, then give up.
        x_next = dyn.A * x_true + dyn.B * u +
                 q_root * rng::normal_vec(kp, dyn.dim_x(), dyn.dim_x());
        y = model.g(x_next);
    }
    const std::uint64_t km =
        rng::key(stream.seed, stream.trial, step_u, DrawKind::MeasurementNoise);
    y += r_root * rng::normal_vec(km, model.dim_y);
    return {x_next, y};
}

TrialRecord run_trial(const Scenario& scn) {
    AgentSpec agent;
    agent.kind = scn.agent;
    agent.cfg = scn.cfg;
    // The agent kind fixes its transform family and ambiguity flag.
    agent.cfg.kind = agent_transform(scn.agent);
    agent.cfg.include_ambiguity = agent_includes_ambiguity(scn.agent);
    agent.x_star = scn.x_star;
    agent.mpc_cost = scn.mpc_cost;

    const TransformKind est_kind = agent_transform(scn.agent);
    const bool record_ambiguity =
        scn.agent == AgentKind::Mpc ? true : agent_includes_ambiguity(scn.agent);

    const EnvStream stream{scn.seed, 0};
    TrialRecord rec;
    rec.min_station_distance = position_distance(scn.x0, (Vec(4) << scn.station.position(0),
                                                          scn.station.position(1), 0, 0)
                                                             .finished());

    FilterState post{scn.prior, 0};
    Vec x = scn.x0;
    ControlPlan warm;
    bool have_warm = false;

    for (int k = 0; k < scn.n_steps; ++k) {
        const PlanOutcome planned = receding_horizon_step(
            agent, scn.dyn, scn.model, post.belief, scn.goal, have_warm ? &warm : nullptr);
        const Vec u = planned.first_control;

        EfeTerms terms;
        try {
            terms = efe_step(est_kind, scn.dyn, scn.model, post.belief, u, scn.goal,
                             record_ambiguity);
        } catch (const SensorSingularityError&) {
            const double amb = record_ambiguity ? kSingularityPenaltyNats : 0.0;
            terms = EfeTerms{kSingularityPenaltyNats, amb, kSingularityPenaltyNats + amb};
        }

        auto [x_next, y] = step_env(scn.dyn, scn.model, x, u, stream, k);
        post = filter_step(est_kind, scn.dyn, scn.model, post, u, y, scn.wrap_innovations);
        x = x_next;

        rec.x_true.push_back(x);
        rec.observation.push_back(y);
        rec.control.push_back(u);
        rec.belief_mean.push_back(post.belief.mean);
        rec.belief_cov.push_back(post.belief.cov);
        rec.efe.push_back(terms);
        rec.planner_objective.push_back(planned.plan.objective);
        rec.steps_completed = k + 1;

        const double station_d = std::hypot(x(0) - scn.station.position(0),
                                            x(1) - scn.station.position(1));
        rec.min_station_distance = std::min(rec.min_station_distance, station_d);
        rec.final_tracking_error = (post.belief.mean - x).norm();

        if (!all_finite(post.belief.mean) || !all_finite(post.belief.cov) ||
            rec.final_tracking_error > 1e3) {
            rec.diverged = true;
            break;
        }

        warm = planned.next_warm_start;
        have_warm = true;
    }

    rec.final_goal_distance = position_distance(x, scn.x_star);
    rec.reached_goal = !rec.diverged && rec.final_goal_distance <= 0.3;
    return rec;
}

MonteCarloSummary run_monte_carlo(const Scenario& scn, int n_trials, int n_threads) {
    if (n_trials < 1) {
        throw DimensionError("run_monte_carlo: need at least one trial");
    }
    MonteCarloSummary sum;
    sum.n_trials = n_trials;
    sum.trials.resize(n_trials);

    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    const int workers =
        std::max(1, std::min(n_trials, n_threads > 0 ? n_threads : static_cast<int>(hw)));

    std::atomic<int> next{0};
    auto work = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n_trials) return;
            Scenario trial_scn = scn;
            trial_scn.seed = scn.seed + static_cast<std::uint64_t>(i);
            sum.trials[i] = run_trial(trial_scn);
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    const int dx = scn.dyn.dim_x();
    int complete = 0;
    for (const TrialRecord& t : sum.trials) {
        if (t.diverged) ++sum.n_diverged;
        if (t.diverged || t.final_tracking_error > 1.0) ++sum.n_lost_track;
        if (t.reached_goal) ++sum.n_reached_goal;
        if (!t.diverged) ++complete;
    }

    // Ribbons aggregate the non-diverged trials, which all ran n_steps.
    if (complete > 0) {
        sum.mean_true.assign(scn.n_steps, Vec::Zero(dx));
        sum.sd_true.assign(scn.n_steps, Vec::Zero(dx));
        sum.stderr_true.assign(scn.n_steps, Vec::Zero(dx));
        sum.mean_belief.assign(scn.n_steps, Vec::Zero(dx));
        for (const TrialRecord& t : sum.trials) {
            if (t.diverged) continue;
            for (int k = 0; k < scn.n_steps; ++k) {
                sum.mean_true[k] += t.x_true[k];
                sum.mean_belief[k] += t.belief_mean[k];
            }
        }
        for (int k = 0; k < scn.n_steps; ++k) {
            sum.mean_true[k] /= complete;
            sum.mean_belief[k] /= complete;
        }
        for (const TrialRecord& t : sum.trials) {
            if (t.diverged) continue;
            for (int k = 0; k < scn.n_steps; ++k) {
                const Vec d = t.x_true[k] - sum.mean_true[k];
                sum.sd_true[k] += d.cwiseProduct(d);
            }
        }
        const double denom = std::max(complete - 1, 1);
        double acc = 0.0;
        for (int k = 0; k < scn.n_steps; ++k) {
            sum.sd_true[k] = (sum.sd_true[k] / denom).cwiseSqrt();
            sum.stderr_true[k] = sum.sd_true[k] / std::sqrt(static_cast<double>(complete));
            acc += 0.5 * (sum.stderr_true[k](0) + sum.stderr_true[k](1));
        }
        sum.avg_position_stderr = acc / scn.n_steps;
    }
    return sum;
}

HeatmapResult efe_heatmap(const HeatmapSpec& spec, const Mat& S_fixed, AgentKind agent,
                          const MeasurementModel& model, const GoalPrior& goal) {
    if (agent == AgentKind::Mpc) {
        throw DimensionError("efe_heatmap: heatmaps are defined for the EFE agents");
    }
    if (spec.res < 2) {
        throw DimensionError("efe_heatmap: resolution must be at least 2");
    }
    const TransformKind kind = agent_transform(agent);
    const bool include_ambiguity = agent_includes_ambiguity(agent);

    HeatmapResult out;
    out.x1.resize(spec.res);
    out.x2.resize(spec.res);
    for (int i = 0; i < spec.res; ++i) {
        out.x1[i] = spec.x_min + i * (spec.x_max - spec.x_min) / (spec.res - 1);
        out.x2[i] = spec.y_min + i * (spec.y_max - spec.y_min) / (spec.res - 1);
    }
    out.values.resize(spec.res, spec.res);

    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < spec.res; ++i) {
        for (int j = 0; j < spec.res; ++j) {
            Vec m = Vec::Zero(4);
            m(0) = out.x1[i];
            m(1) = out.x2[j];
            double v;
            try {
                const JointApprox ja = apply_transform(kind, model, Gaussian{m, S_fixed});
                v = risk(Gaussian{ja.mu, ja.sigma}, goal);
                if (include_ambiguity) v += ambiguity_generic(ja);
            } catch (const SensorSingularityError&) {
                v = include_ambiguity ? 2.0 * kSingularityPenaltyNats : kSingularityPenaltyNats;
            }
            out.values(i, j) = v;
            if (v < best) {
                best = v;
                out.argmin_i = i;
                out.argmin_j = j;
            }
        }
    }
    out.argmin_x1 = out.x1[out.argmin_i];
    out.argmin_x2 = out.x2[out.argmin_j];
    return out;
}

}  // namespace efenav
