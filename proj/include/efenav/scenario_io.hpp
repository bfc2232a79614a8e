#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "efenav/sim.hpp"

namespace efenav {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Mirror of the scenario file. Units: positions/distances in m, dt in s,
// angles in rad; sigma_* are acceleration-noise intensities, rho_* are
// measurement-noise standard deviations (m for distance, rad for angle).
struct ScenarioFileData {
    int schema_version = 1;
    std::string name;
    std::string agent = "efe2";  // mpc | efe1 | efer | efe2
    std::uint64_t seed = 0;
    int trials = 1;
    int steps = 30;
    bool wrap_innovations = true;

    double dt_s = 0.5;
    double sigma_1 = 0.1, sigma_2 = 0.1;

    std::vector<double> station_m{0.0, 0.0};
    double rho_1 = 0.001, rho_2 = 0.001;

    std::vector<double> x0{0.0, -1.0, 0.0, 0.0};
    std::vector<double> prior_mean{0.0, -1.0, 0.0, 0.0};
    std::vector<double> prior_cov_diag{0.5, 0.5, 0.5, 0.5};

    std::vector<double> x_star{0.0, 1.0, 0.0, 0.0};
    std::optional<std::vector<double>> observation_mean;  // default: sensor at x_star
    std::vector<double> observation_cov_diag{0.5, 0.5};

    int horizon = 30;
    double u_max = 1.0;
    double eta = 1e-8;
    double max_evals = 2000.0;
    double tol = 1e-6;
    int random_starts = 3;
    std::uint64_t planner_seed = 0;
    double restart_margin = 0.0;

    std::vector<double> mpc_cost_diag{1.0, 1.0, 0.0, 0.0};

    double heatmap_min = -2.0, heatmap_max = 2.0;
    int heatmap_res = 101;
    std::vector<double> heatmap_cov_diag{1.0, 1.0, 1.0, 1.0};
    std::vector<std::string> heatmap_agents{"efe1", "efer", "efe2"};

    std::string output_dir = "out";
};

AgentKind agent_from_string(const std::string& s);
std::string agent_to_string(AgentKind k);

// Strict parse: unknown keys anywhere in the document are a ConfigError.
ScenarioFileData scenario_from_json(const nlohmann::ordered_json& doc);
nlohmann::ordered_json scenario_to_json(const ScenarioFileData& d);

// Throws IoError when unreadable, ConfigError when invalid.
ScenarioFileData load_scenario_file(const std::string& path);

Scenario build_scenario(const ScenarioFileData& d);

// Plain-text delimited table with a header row; numbers carry 17 significant
// digits so reruns are byte-identical and fully reversible.
std::string format_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<double>>& rows);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace efenav
