#include "fjsteer/config.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using namespace fjsteer;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Common {
    std::string config;
    std::string demo;
    std::optional<std::uint64_t> seed;
    std::optional<int> horizon;
    std::optional<double> lambda;
    std::string out;
    std::string format = "csv";
};

std::filesystem::path out_dir(const Common& c) {
    if (!c.out.empty()) return c.out;
    if (const char* env = std::getenv("FJSTEER_OUT_DIR"); env && *env) return env;
    return ".";
}

ScenarioConfig resolve(const Common& c) {
    if (!c.config.empty() && !c.demo.empty()) throw InvalidInput("give either --config or a demo name, not both");
    if (c.config.empty() && c.demo.empty()) throw InvalidInput("a scenario is required (--config PATH)");
    ScenarioConfig cfg = c.config.empty() ? builtin_scenario(c.demo) : load_config(c.config);
    if (c.seed) cfg.run.seed = *c.seed;
    if (c.horizon) cfg.run.horizon = *c.horizon;
    if (c.lambda) cfg = with_fixed_lambda(std::move(cfg), *c.lambda);
    return cfg;
}

// Writes through a temporary file so a failure never leaves a partial output.
void write_file(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw InvalidInput("cannot write " + path.string());
        out << content;
        if (!out) throw InvalidInput("cannot write " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string trajectory_json(const TrajectoryLog& log, const Community& community) {
    json rows = json::array();
    for (const auto& e : log.entries)
        for (int id = 1; id <= community.agents(); ++id) {
            const AgentId a(id);
            const Index col = community.column(a);
            for (int s = 0; s < community.subjects(); ++s)
                rows.push_back({{"k", e.k},
                                {"agent_id", id},
                                {"subject", s + 1},
                                {"opinion", e.opinions(col, s)},
                                {"lambda", community.is_stubborn(a) ? 1.0 : e.lambda(col)},
                                {"utility", e.utilities(col)}});
        }
    return rows.dump(1) + "\n";
}

int do_run(const Common& c) {
    const ScenarioConfig cfg = resolve(c);
    const Community community = cfg.community();
    const RunResult result = run(cfg);
    const auto dir = out_dir(c);
    if (c.format == "csv") {
        std::ostringstream csv;
        write_trajectory_csv(csv, result.log, community);
        write_file(dir / "trajectory.csv", csv.str());
    } else {
        write_file(dir / "trajectory.json", trajectory_json(result.log, community));
    }
    write_file(dir / "report.json", to_json(result.report, community).dump(2) + "\n");
    std::cout << "scenario " << cfg.name << ": " << result.report.steps_run << " steps, convergence_step "
              << (result.report.convergence_step ? std::to_string(*result.report.convergence_step) : "none")
              << "; wrote " << (dir / (c.format == "csv" ? "trajectory.csv" : "trajectory.json")).string() << " and "
              << (dir / "report.json").string() << "\n";
    return kExitOk;
}

int do_analyze(const Common& c) {
    const ScenarioConfig cfg = resolve(c);
    const RunResult result = run(cfg);
    json report = to_json(result.report.analysis, cfg.community());
    report["scenario_name"] = cfg.name;
    const std::string text = report.dump(2) + "\n";
    if (!c.out.empty())
        write_file(std::filesystem::path(c.out) / "analysis.json", text);
    else
        std::cout << text;
    return kExitOk;
}

std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(spec);
    std::string part;
    try {
        while (std::getline(ss, part, ',')) {
            if (const auto dash = part.find('-'); dash != std::string::npos) {
                const auto lo = std::stoull(part.substr(0, dash));
                const auto hi = std::stoull(part.substr(dash + 1));
                if (hi < lo) throw InvalidInput("--seeds: empty range " + part);
                for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
            } else {
                seeds.push_back(std::stoull(part));
            }
        }
    } catch (const std::logic_error&) {
        throw InvalidInput("--seeds: expected a list like 1-20 or 3,5,8 (got '" + spec + "')");
    }
    if (seeds.empty()) throw InvalidInput("--seeds: no seeds given");
    return seeds;
}

int do_report(const Common& c, const std::string& seeds) {
    const ScenarioConfig cfg = resolve(c);
    const MonteCarloSummary summary = monte_carlo(cfg, parse_seeds(seeds));
    json doc = to_json(summary, cfg.community());
    doc["scenario_name"] = cfg.name;
    const std::string text = doc.dump(2) + "\n";
    if (!c.out.empty())
        write_file(std::filesystem::path(c.out) / "summary.json", text);
    else
        std::cout << text;
    return summary.errors.empty() ? kExitOk : kExitNumerical;
}

void add_common(CLI::App* cmd, Common& c, bool with_config) {
    if (with_config) cmd->add_option("--config", c.config, "Scenario JSON file");
    cmd->add_option("--seed", c.seed, "Override run.seed");
    cmd->add_option("--horizon", c.horizon, "Override run.horizon");
    cmd->add_option("--lambda", c.lambda, "Use fixed uniform weights with this bias for every regular agent");
    cmd->add_option("--out", c.out, "Output directory (default $FJSTEER_OUT_DIR or .)");
    cmd->add_option("--format", c.format, "Trajectory format")->check(CLI::IsMember({"csv", "json"}));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reward-steered Friedkin-Johnsen opinion dynamics: run, analyze and reproduce scenarios"};
    app.require_subcommand(1);
    Common common;
    std::string seeds = "1-20";
    std::string save_config_path;

    auto* run_cmd = app.add_subcommand("run", "Simulate a scenario file; writes trajectory and report.json");
    add_common(run_cmd, common, true);

    auto* analyze_cmd = app.add_subcommand("analyze", "Print the stability/equilibrium/layering report");
    add_common(analyze_cmd, common, true);
    analyze_cmd->add_option("--demo", common.demo, "Analyze a built-in scenario instead of a file");

    auto* demo_cmd = app.add_subcommand("demo", "Run a built-in scenario (dnn57, irreducible100, random-tv)");
    demo_cmd->add_option("name", common.demo, "Scenario name")->required();
    demo_cmd->add_option("--save-config", save_config_path, "Also write the scenario as a config file");
    add_common(demo_cmd, common, false);

    auto* report_cmd = app.add_subcommand("report", "Run a scenario over many seeds and summarize");
    add_common(report_cmd, common, true);
    report_cmd->add_option("--demo", common.demo, "Use a built-in scenario instead of a file");
    report_cmd->add_option("--seeds", seeds, "Seeds, e.g. 1-20 or 3,5,8");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run_cmd) return do_run(common);
        if (*analyze_cmd) return do_analyze(common);
        if (*report_cmd) return do_report(common, seeds);
        if (!save_config_path.empty()) save_config(resolve(common), save_config_path);
        return do_run(common);
    } catch (const InvalidInput& e) {
        std::cerr << "fjsteer: error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericalFailure& e) {
        std::cerr << "fjsteer: numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "fjsteer: error: " << e.what() << "\n";
        return kExitConfig;
    }
}
