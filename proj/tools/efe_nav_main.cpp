// efe-nav: seeded navigation experiments for Gaussian belief agents with a
// range-bearing sensor. Subcommands: run (Monte-Carlo trials), heatmap
// (objective landscape over position), verify (analytic identity suites).

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "efenav/scenario_io.hpp"
#include "efenav/sim.hpp"
#include "efenav/verify.hpp"

namespace {

using efenav::AgentKind;
using efenav::Scenario;
using efenav::ScenarioFileData;
using nlohmann::ordered_json;

constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;
constexpr int kExitAllDiverged = 3;
constexpr int kExitIdentity = 4;

int env_threads() {
    const char* raw = std::getenv("EFE_NAV_THREADS");
    if (raw == nullptr || *raw == '\0') return 0;
    char* end = nullptr;
    const long v = std::strtol(raw, &end, 10);
    if (end == raw || *end != '\0' || v < 0)
        throw efenav::ConfigError("EFE_NAV_THREADS must be a non-negative integer");
    return static_cast<int>(v);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const std::size_t comma = s.find(',', start);
        const std::size_t end = comma == std::string::npos ? s.size() : comma;
        if (end > start) out.push_back(s.substr(start, end - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

ScenarioFileData load_or_default(const std::string& path) {
    if (path.empty()) return ScenarioFileData{};
    return efenav::load_scenario_file(path);
}

std::vector<AgentKind> parse_agents(const std::string& csv) {
    std::vector<AgentKind> out;
    for (const std::string& name : split_csv(csv)) out.push_back(efenav::agent_from_string(name));
    if (out.empty()) throw efenav::ConfigError("--agents list is empty");
    return out;
}

// ---------------------------------------------------------------- run

void write_trial_table(const std::string& path, const efenav::TrialRecord& rec) {
    const std::vector<std::string> header = {
        "k",  "x1",  "x2",  "x3",  "x4",  "m1",      "m2",        "m3",
        "m4", "P11", "P22", "P33", "P44", "u1",      "u2",        "y_range",
        "y_bearing", "risk", "ambiguity", "efe", "planner_objective"};
    std::vector<std::vector<double>> rows;
    rows.reserve(static_cast<std::size_t>(rec.steps_completed));
    for (int k = 0; k < rec.steps_completed; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        std::vector<double> row;
        row.push_back(static_cast<double>(k + 1));
        for (int i = 0; i < 4; ++i) row.push_back(rec.x_true[ku](i));
        for (int i = 0; i < 4; ++i) row.push_back(rec.belief_mean[ku](i));
        for (int i = 0; i < 4; ++i) row.push_back(rec.belief_cov[ku](i, i));
        for (int i = 0; i < 2; ++i) row.push_back(rec.control[ku](i));
        for (int i = 0; i < 2; ++i) row.push_back(rec.observation[ku](i));
        row.push_back(rec.efe[ku].risk);
        row.push_back(rec.efe[ku].ambiguity);
        row.push_back(rec.efe[ku].total);
        row.push_back(rec.planner_objective[ku]);
        rows.push_back(std::move(row));
    }
    efenav::write_text_file(path, efenav::format_table(header, rows));
}

void write_mean_table(const std::string& path, const efenav::MonteCarloSummary& mc) {
    std::vector<std::string> header = {"k"};
    for (const char* stem : {"mean_x", "sd_x", "stderr_x", "mean_m"})
        for (int i = 1; i <= 4; ++i) header.push_back(stem + std::to_string(i));
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < mc.mean_true.size(); ++k) {
        std::vector<double> row{static_cast<double>(k + 1)};
        for (int i = 0; i < 4; ++i) row.push_back(mc.mean_true[k](i));
        for (int i = 0; i < 4; ++i) row.push_back(mc.sd_true[k](i));
        for (int i = 0; i < 4; ++i) row.push_back(mc.stderr_true[k](i));
        for (int i = 0; i < 4; ++i) row.push_back(mc.mean_belief[k](i));
        rows.push_back(std::move(row));
    }
    efenav::write_text_file(path, efenav::format_table(header, rows));
}

int cmd_run(const ScenarioFileData& data, const std::vector<AgentKind>& agents,
            const std::string& out_dir) {
    const Scenario base = efenav::build_scenario(data);
    const int threads = env_threads();
    bool any_complete = false;
    for (const AgentKind agent : agents) {
        Scenario scn = base;
        scn.agent = agent;
        const std::string name = efenav::agent_to_string(agent);
        const efenav::MonteCarloSummary mc = efenav::run_monte_carlo(scn, scn.n_trials, threads);
        if (mc.n_diverged < mc.n_trials) any_complete = true;

        const std::string dir = out_dir + "/" + name;
        for (int t = 0; t < static_cast<int>(mc.trials.size()); ++t) {
            char leaf[32];
            std::snprintf(leaf, sizeof(leaf), "/trial_%03d.tsv", t);
            write_trial_table(dir + leaf, mc.trials[static_cast<std::size_t>(t)]);
        }
        write_mean_table(dir + "/mean_trajectory.tsv", mc);

        double mean_goal_dist = 0.0, mean_min_station = 0.0;
        int complete = 0;
        for (const auto& rec : mc.trials) {
            if (rec.diverged) continue;
            mean_goal_dist += rec.final_goal_distance;
            mean_min_station += rec.min_station_distance;
            ++complete;
        }
        if (complete > 0) {
            mean_goal_dist /= complete;
            mean_min_station /= complete;
        }

        ordered_json summary;
        summary["scenario"] = data.name;
        summary["agent"] = name;
        summary["seed"] = scn.seed;
        summary["trials"] = mc.n_trials;
        summary["steps"] = scn.n_steps;
        summary["n_diverged"] = mc.n_diverged;
        summary["n_lost_track"] = mc.n_lost_track;
        summary["n_reached_goal"] = mc.n_reached_goal;
        summary["avg_position_stderr"] = mc.avg_position_stderr;
        summary["mean_final_goal_distance"] = mean_goal_dist;
        summary["mean_min_station_distance"] = mean_min_station;
        efenav::write_text_file(dir + "/summary.json", summary.dump(2) + "\n");

        std::printf("%s: %d/%d trials complete, %d lost track, %d reached goal, stderr %.6g\n",
                    name.c_str(), mc.n_trials - mc.n_diverged, mc.n_trials, mc.n_lost_track,
                    mc.n_reached_goal, mc.avg_position_stderr);
    }
    return any_complete ? 0 : kExitAllDiverged;
}

// ---------------------------------------------------------------- heatmap

int cmd_heatmap(const ScenarioFileData& data, const std::vector<AgentKind>& agents,
                const std::string& out_dir, std::optional<std::pair<double, double>> range,
                std::optional<int> res) {
    const Scenario scn = efenav::build_scenario(data);
    efenav::HeatmapSpec spec = scn.heatmap;
    if (range) {
        spec.x_min = spec.y_min = range->first;
        spec.x_max = spec.y_max = range->second;
    }
    if (res) spec.res = *res;

    ordered_json summary;
    summary["grid"] = {{"min", spec.x_min}, {"max", spec.x_max}, {"res", spec.res}};
    for (const AgentKind agent : agents) {
        const std::string name = efenav::agent_to_string(agent);
        const efenav::HeatmapResult hm =
            efenav::efe_heatmap(spec, scn.heatmap_cov, agent, scn.model, scn.goal);
        std::vector<std::vector<double>> rows;
        rows.reserve(static_cast<std::size_t>(spec.res) * static_cast<std::size_t>(spec.res));
        for (int i = 0; i < spec.res; ++i)
            for (int j = 0; j < spec.res; ++j)
                rows.push_back({hm.x1[static_cast<std::size_t>(i)],
                                hm.x2[static_cast<std::size_t>(j)], hm.values(i, j)});
        efenav::write_text_file(out_dir + "/heatmap_" + name + ".tsv",
                                efenav::format_table({"x1", "x2", "value"}, rows));
        summary[name] = {{"argmin_x1", hm.argmin_x1},
                         {"argmin_x2", hm.argmin_x2},
                         {"min_value", hm.values(hm.argmin_i, hm.argmin_j)}};
        std::printf("%s: argmin (%s, %s)\n", name.c_str(), fmt(hm.argmin_x1).c_str(),
                    fmt(hm.argmin_x2).c_str());
    }
    efenav::write_text_file(out_dir + "/heatmap_summary.json", summary.dump(2) + "\n");
    return 0;
}

// ---------------------------------------------------------------- verify

int cmd_verify(const efenav::VerifyOptions& opt) {
    const std::vector<efenav::IdentityReport> reports = efenav::run_identity_suites(opt);
    bool all_pass = true;
    for (const auto& r : reports) {
        std::printf("%s  %-55s  worst %.6e  (tol %g)\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                    r.worst_dev, r.tol);
        if (!r.pass && r.worst_index >= 0) {
            std::printf("      worst offender: ensemble member %d, mean [%g %g %g %g]\n",
                        r.worst_index, r.worst_mean(0), r.worst_mean(1), r.worst_mean(2),
                        r.worst_mean(3));
        }
        all_pass = all_pass && r.pass;
    }
    if (!all_pass) std::printf("identity failure: at least one suite exceeded its tolerance\n");
    return all_pass ? 0 : kExitIdentity;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian-belief navigation experiments with a range-bearing sensor"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_override;
    std::string agents_csv;
    std::optional<int> trials_override;
    std::optional<std::uint64_t> seed_override;

    CLI::App* run = app.add_subcommand("run", "simulate seeded closed-loop trials");
    run->add_option("--scenario", scenario_path, "scenario JSON (defaults built in)");
    run->add_option("--trials", trials_override, "override trial count");
    run->add_option("--seed", seed_override, "override base seed");
    run->add_option("--agents", agents_csv, "comma list: mpc,efe1,efer,efe2");
    run->add_option("--out", out_override, "output directory");

    std::string range_text;
    std::optional<int> res_override;
    CLI::App* heatmap = app.add_subcommand("heatmap", "objective over position grid");
    heatmap->add_option("--scenario", scenario_path, "scenario JSON (defaults built in)");
    heatmap->add_option("--agents", agents_csv, "comma list of EFE agents");
    heatmap->add_option("--out", out_override, "output directory");
    heatmap->add_option("--range", range_text, "grid range as MIN:MAX for both axes");
    heatmap->add_option("--res", res_override, "grid resolution per axis");

    efenav::VerifyOptions vopt;
    std::vector<std::string> transform_filter;
    CLI::App* verify = app.add_subcommand("verify", "ambiguity identity suites");
    verify->add_option("--transform", transform_filter, "restrict to t1, t2, ut")
        ->check(CLI::IsMember({"t1", "t2", "ut"}));
    verify->add_option("--seed", vopt.seed, "ensemble seed");
    verify->add_option("--ensemble", vopt.ensemble_size, "ensemble size")
        ->check(CLI::PositiveNumber);
    verify->add_flag("--corrupt-r", vopt.corrupt_r,
                     "negative control: perturb the sensor noise in the reference forms");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (verify->parsed()) {
            vopt.transforms = transform_filter;
            return cmd_verify(vopt);
        }

        ScenarioFileData data = load_or_default(scenario_path);
        if (trials_override) data.trials = *trials_override;
        if (seed_override) data.seed = *seed_override;
        if (!out_override.empty()) data.output_dir = out_override;

        if (run->parsed()) {
            const std::vector<AgentKind> agents = agents_csv.empty()
                                                      ? std::vector<AgentKind>{efenav::agent_from_string(data.agent)}
                                                      : parse_agents(agents_csv);
            return cmd_run(data, agents, data.output_dir);
        }

        // heatmap
        std::vector<AgentKind> agents;
        if (agents_csv.empty()) {
            for (const std::string& name : data.heatmap_agents)
                agents.push_back(efenav::agent_from_string(name));
        } else {
            agents = parse_agents(agents_csv);
        }
        std::optional<std::pair<double, double>> range;
        if (!range_text.empty()) {
            const std::size_t colon = range_text.find(':');
            if (colon == std::string::npos)
                throw efenav::ConfigError("--range expects MIN:MAX");
            char* end = nullptr;
            const double lo = std::strtod(range_text.c_str(), &end);
            if (end != range_text.c_str() + colon)
                throw efenav::ConfigError("--range expects MIN:MAX");
            const char* hi_start = range_text.c_str() + colon + 1;
            const double hi = std::strtod(hi_start, &end);
            if (*end != '\0' || !(hi > lo))
                throw efenav::ConfigError("--range expects MIN:MAX with MAX > MIN");
            range = {lo, hi};
        }
        return cmd_heatmap(data, agents, data.output_dir, range, res_override);
    } catch (const efenav::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const efenav::IoError& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return kExitIo;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    }
}
