#include "efenav/scenario_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

namespace efenav {

using ojson = nlohmann::ordered_json;

AgentKind agent_from_string(const std::string& s) {
    if (s == "mpc") return AgentKind::Mpc;
    if (s == "efe1") return AgentKind::Efe1;
    if (s == "efer") return AgentKind::Efer;
    if (s == "efe2") return AgentKind::Efe2;
    throw ConfigError("unknown agent kind: " + s);
}

std::string agent_to_string(AgentKind k) {
    switch (k) {
        case AgentKind::Mpc: return "mpc";
        case AgentKind::Efe1: return "efe1";
        case AgentKind::Efer: return "efer";
        case AgentKind::Efe2: return "efe2";
    }
    throw ConfigError("unknown agent kind value");
}

namespace {

// Pulls known keys out of an object and rejects whatever remains.
class StrictObject {
   public:
    StrictObject(const ojson& j, std::string path) : obj_(j), path_(std::move(path)) {
        if (!obj_.is_object()) {
            throw ConfigError("expected an object at " + path_);
        }
    }

    template <typename T>
    void get(const char* key, T& out) {
        if (auto it = obj_.find(key); it != obj_.end()) {
            read(*it, key, out);
            seen_.insert(key);
        }
    }

    template <typename T>
    void require(const char* key, T& out) {
        auto it = obj_.find(key);
        if (it == obj_.end()) {
            throw ConfigError("missing required key " + path_ + "/" + key);
        }
        read(*it, key, out);
        seen_.insert(key);
    }

    ojson section(const char* key) {
        seen_.insert(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? ojson(nullptr) : *it;
    }

    void finish() const {
        for (const auto& [key, value] : obj_.items()) {
            if (!seen_.count(key)) {
                throw ConfigError("unknown key " + path_ + "/" + key);
            }
        }
    }

   private:
    template <typename T>
    void read(const ojson& v, const char* key, T& out) const {
        try {
            out = v.get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError("wrong type for " + path_ + "/" + key);
        }
    }

    const ojson& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

void check_len(const std::vector<double>& v, std::size_t n, const char* what) {
    if (v.size() != n) {
        throw ConfigError(std::string(what) + ": expected " + std::to_string(n) + " entries");
    }
}

}  // namespace

ScenarioFileData scenario_from_json(const ojson& doc) {
    ScenarioFileData d;
    StrictObject top(doc, "");
    top.require("schema_version", d.schema_version);
    if (d.schema_version != 1) {
        throw ConfigError("unsupported schema_version " + std::to_string(d.schema_version));
    }
    top.require("name", d.name);
    top.require("agent", d.agent);
    agent_from_string(d.agent);  // validate early
    top.get("seed", d.seed);
    top.get("trials", d.trials);
    top.get("steps", d.steps);
    top.get("wrap_innovations", d.wrap_innovations);
    top.get("output_dir", d.output_dir);

    if (ojson s = top.section("dynamics"); !s.is_null()) {
        StrictObject o(s, "dynamics");
        o.get("dt_s", d.dt_s);
        o.get("sigma_1", d.sigma_1);
        o.get("sigma_2", d.sigma_2);
        o.finish();
    }
    if (ojson s = top.section("sensor"); !s.is_null()) {
        StrictObject o(s, "sensor");
        o.get("station_m", d.station_m);
        o.get("rho_1", d.rho_1);
        o.get("rho_2", d.rho_2);
        o.finish();
    }
    if (ojson s = top.section("start"); !s.is_null()) {
        StrictObject o(s, "start");
        o.get("x0", d.x0);
        o.get("prior_mean", d.prior_mean);
        o.get("prior_cov_diag", d.prior_cov_diag);
        o.finish();
    }
    if (ojson s = top.section("goal"); !s.is_null()) {
        StrictObject o(s, "goal");
        o.get("x_star", d.x_star);
        std::vector<double> om;
        if (s.contains("observation_mean")) {
            o.get("observation_mean", om);
            d.observation_mean = om;
        }
        o.get("observation_cov_diag", d.observation_cov_diag);
        o.finish();
    }
    if (ojson s = top.section("planner"); !s.is_null()) {
        StrictObject o(s, "planner");
        o.get("horizon", d.horizon);
        o.get("u_max", d.u_max);
        o.get("eta", d.eta);
        o.get("max_evals", d.max_evals);
        o.get("tol", d.tol);
        o.get("random_starts", d.random_starts);
        o.get("seed", d.planner_seed);
        o.get("restart_margin", d.restart_margin);
        o.finish();
    }
    if (ojson s = top.section("mpc"); !s.is_null()) {
        StrictObject o(s, "mpc");
        o.get("cost_diag", d.mpc_cost_diag);
        o.finish();
    }
    if (ojson s = top.section("heatmap"); !s.is_null()) {
        StrictObject o(s, "heatmap");
        std::vector<double> range;
        if (s.contains("range")) {
            o.get("range", range);
            check_len(range, 2, "heatmap/range");
            d.heatmap_min = range[0];
            d.heatmap_max = range[1];
        }
        o.get("res", d.heatmap_res);
        o.get("cov_diag", d.heatmap_cov_diag);
        o.get("agents", d.heatmap_agents);
        o.finish();
    }
    top.finish();

    check_len(d.station_m, 2, "sensor/station_m");
    check_len(d.x0, 4, "start/x0");
    check_len(d.prior_mean, 4, "start/prior_mean");
    check_len(d.prior_cov_diag, 4, "start/prior_cov_diag");
    check_len(d.x_star, 4, "goal/x_star");
    if (d.observation_mean) check_len(*d.observation_mean, 2, "goal/observation_mean");
    check_len(d.observation_cov_diag, 2, "goal/observation_cov_diag");
    check_len(d.mpc_cost_diag, 4, "mpc/cost_diag");
    check_len(d.heatmap_cov_diag, 4, "heatmap/cov_diag");
    if (d.trials < 1) throw ConfigError("trials must be >= 1");
    if (d.steps < 1) throw ConfigError("steps must be >= 1");
    if (d.horizon < 1) throw ConfigError("planner/horizon must be >= 1");
    if (!(d.dt_s > 0)) throw ConfigError("dynamics/dt_s must be > 0");
    if (!(d.u_max > 0)) throw ConfigError("planner/u_max must be > 0");
    if (d.sigma_1 < 0 || d.sigma_2 < 0) throw ConfigError("dynamics/sigma_* must be >= 0");
    if (d.rho_1 < 0 || d.rho_2 < 0) throw ConfigError("sensor/rho_* must be >= 0");
    for (const std::string& a : d.heatmap_agents) agent_from_string(a);
    return d;
}

ojson scenario_to_json(const ScenarioFileData& d) {
    ojson j;
    j["schema_version"] = d.schema_version;
    j["name"] = d.name;
    j["agent"] = d.agent;
    j["seed"] = d.seed;
    j["trials"] = d.trials;
    j["steps"] = d.steps;
    j["wrap_innovations"] = d.wrap_innovations;
    j["dynamics"] = {{"dt_s", d.dt_s}, {"sigma_1", d.sigma_1}, {"sigma_2", d.sigma_2}};
    j["sensor"] = {{"station_m", d.station_m}, {"rho_1", d.rho_1}, {"rho_2", d.rho_2}};
    j["start"] = {{"x0", d.x0},
                  {"prior_mean", d.prior_mean},
                  {"prior_cov_diag", d.prior_cov_diag}};
    j["goal"] = ojson::object();
    j["goal"]["x_star"] = d.x_star;
    if (d.observation_mean) j["goal"]["observation_mean"] = *d.observation_mean;
    j["goal"]["observation_cov_diag"] = d.observation_cov_diag;
    j["planner"] = {{"horizon", d.horizon},       {"u_max", d.u_max},
                    {"eta", d.eta},               {"max_evals", d.max_evals},
                    {"tol", d.tol},               {"random_starts", d.random_starts},
                    {"seed", d.planner_seed},     {"restart_margin", d.restart_margin}};
    j["mpc"] = {{"cost_diag", d.mpc_cost_diag}};
    j["heatmap"] = {{"range", std::vector<double>{d.heatmap_min, d.heatmap_max}},
                    {"res", d.heatmap_res},
                    {"cov_diag", d.heatmap_cov_diag},
                    {"agents", d.heatmap_agents}};
    j["output_dir"] = d.output_dir;
    return j;
}

ScenarioFileData load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read scenario file: " + path);
    }
    ojson doc;
    try {
        doc = ojson::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("scenario parse error in " + path + ": " + e.what());
    }
    return scenario_from_json(doc);
}

Scenario build_scenario(const ScenarioFileData& d) {
    Scenario scn;
    scn.name = d.name;
    scn.dyn = build_double_integrator(d.dt_s, d.sigma_1, d.sigma_2);
    scn.station.position = Eigen::Vector2d(d.station_m[0], d.station_m[1]);
    scn.model = make_range_bearing_model(scn.station, d.rho_1, d.rho_2);
    scn.x0 = Eigen::Map<const Vec>(d.x0.data(), 4);
    scn.prior.mean = Eigen::Map<const Vec>(d.prior_mean.data(), 4);
    scn.prior.cov = Eigen::Map<const Vec>(d.prior_cov_diag.data(), 4).asDiagonal();
    scn.x_star = Eigen::Map<const Vec>(d.x_star.data(), 4);
    scn.goal.mean = d.observation_mean
                        ? Vec(Eigen::Map<const Vec>(d.observation_mean->data(), 2))
                        : scn.model.g(scn.x_star);
    scn.goal.cov = Eigen::Map<const Vec>(d.observation_cov_diag.data(), 2).asDiagonal();
    scn.n_steps = d.steps;
    scn.n_trials = d.trials;
    scn.agent = agent_from_string(d.agent);
    scn.cfg.horizon = d.horizon;
    scn.cfg.u_max = d.u_max;
    scn.cfg.kind = agent_transform(scn.agent);
    scn.cfg.include_ambiguity = agent_includes_ambiguity(scn.agent);
    scn.cfg.eta = d.eta;
    scn.cfg.opt.max_evals = d.max_evals;
    scn.cfg.opt.tol = d.tol;
    scn.cfg.opt.n_random_starts = d.random_starts;
    scn.cfg.opt.seed = d.planner_seed;
    scn.cfg.opt.restart_margin = d.restart_margin;
    scn.mpc_cost = Eigen::Map<const Vec>(d.mpc_cost_diag.data(), 4).asDiagonal();
    scn.seed = d.seed;
    scn.wrap_innovations = d.wrap_innovations;
    scn.heatmap =
        HeatmapSpec{d.heatmap_min, d.heatmap_max, d.heatmap_min, d.heatmap_max, d.heatmap_res};
    scn.heatmap_cov = Eigen::Map<const Vec>(d.heatmap_cov_diag.data(), 4).asDiagonal();
    scn.heatmap_agents.clear();
    for (const std::string& a : d.heatmap_agents) {
        scn.heatmap_agents.push_back(agent_from_string(a));
    }
    scn.out_dir = d.output_dir;
    return scn;
}

std::string format_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<double>>& rows) {
    std::string out;
    for (std::size_t c = 0; c < header.size(); ++c) {
        out += header[c];
        out += (c + 1 < header.size()) ? '\t' : '\n';
    }
    char buf[64];
    for (const auto& row : rows) {
        if (row.size() != header.size()) {
            throw IoError("format_table: row width does not match header");
        }
        for (std::size_t c = 0; c < row.size(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", row[c]);
            out += buf;
            out += (c + 1 < row.size()) ? '\t' : '\n';
        }
    }
    return out;
}

void write_text_file(const std::string& path, const std::string& content) {
    const std::filesystem::path p(path);
    std::error_code ec;
    if (p.has_parent_path()) {
        std::filesystem::create_directories(p.parent_path(), ec);
        if (ec) {
            throw IoError("cannot create output directory: " + p.parent_path().string());
        }
    }
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open for writing: " + path);
    }
    out << content;
    if (!out) {
        throw IoError("write failed: " + path);
    }
}

}  // namespace efenav
