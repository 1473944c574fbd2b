#pragma once

#include "fjsteer/analysis.hpp"
#include "fjsteer/graph.hpp"
#include "fjsteer/reward.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace fjsteer {

// ---------------------------------------------------------------------------
// Scenario description

struct StaticGraph {
    std::map<AgentId, std::vector<AgentId>> edges;
    friend bool operator==(const StaticGraph&, const StaticGraph&) = default;
};

struct LayeredGraph {
    std::map<AgentId, std::vector<AgentId>> edges;
    std::vector<std::vector<AgentId>> layers;
    friend bool operator==(const LayeredGraph&, const LayeredGraph&) = default;
};

/// Fresh in-neighbor sets every step: each regular agent draws
/// `out_degree` distinct agents. With probability `allow_stubborn_prob` the
/// candidates are all other agents, otherwise only other regular agents.
struct RandomGraph {
    int out_degree = 3;
    double allow_stubborn_prob = 1.0;
    bool require_reachability = true;
    friend bool operator==(const RandomGraph&, const RandomGraph&) = default;
};

using GraphSpec = std::variant<StaticGraph, LayeredGraph, RandomGraph>;

/// Biases and weights given up front. Agents without an explicit row put
/// uniform weight on their in-neighbors.
struct FixedWeights {
    double default_lambda = 0.0;
    std::map<AgentId, double> lambda;
    std::map<AgentId, std::map<AgentId, double>> rows;
    friend bool operator==(const FixedWeights&, const FixedWeights&) = default;
};

/// Biases and weights rebuilt from observed rewards every step.
/// `initial_lambda` and uniform weights seed the vanishing-reward fallback.
struct RewardWeights {
    double initial_lambda = 0.5;
    friend bool operator==(const RewardWeights&, const RewardWeights&) = default;
};

using WeightSpec = std::variant<FixedWeights, RewardWeights>;

struct GaussianUtility {
    std::vector<double> mean;
    double cov_scale = 0.1;  // covariance = cov_scale * I
    friend bool operator==(const GaussianUtility&, const GaussianUtility&) = default;
};

struct GridUtility {
    std::string file;  // relative paths resolve against the config's directory
    friend bool operator==(const GridUtility&, const GridUtility&) = default;
};

using UtilitySpec = std::variant<GaussianUtility, GridUtility>;

struct RunSettings {
    int horizon = 200;
    double epsilon = 1e-9;
    std::uint64_t seed = 0;
    bool stop_on_convergence = true;
    friend bool operator==(const RunSettings&, const RunSettings&) = default;
};

struct ScenarioConfig {
    std::string name = "scenario";
    int subjects = 1;
    int agents = 2;
    std::vector<AgentId> stubborn;
    Eigen::MatrixXd opinions;  // agents x subjects, row = id - 1
    GraphSpec graph = StaticGraph{};
    WeightSpec weights = FixedWeights{};
    UtilitySpec utility = GaussianUtility{};
    RunSettings run;
    std::filesystem::path base_dir;  // for resolving relative files; not serialized

    Community community() const { return Community(subjects, agents, stubborn); }

    friend bool operator==(const ScenarioConfig& a, const ScenarioConfig& b) {
        return a.name == b.name && a.subjects == b.subjects && a.agents == b.agents && a.stubborn == b.stubborn &&
               a.opinions.rows() == b.opinions.rows() &&
               a.opinions.cols() == b.opinions.cols() && a.opinions == b.opinions && a.graph == b.graph && a.weights == b.weights &&
               a.utility == b.utility && a.run == b.run;
    }
};

UtilityField make_utility(const UtilitySpec& spec, int subjects, const std::filesystem::path& base_dir);

// ---------------------------------------------------------------------------
// Random edge sets

/// Thrown when rejection sampling cannot find a reachable edge set.
class SamplingError : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

inline constexpr int kMaxSamplingAttempts = 1000;

/// Edge set for step k, drawn from substream k of `seed`.
EdgeSet sample_edge_set(const Community& community, const RandomGraph& params, std::uint64_t seed, int k);

// ---------------------------------------------------------------------------
// Runs

struct LogEntry {
    int k = 0;
    Eigen::MatrixXd opinions;   // N x n, canonical order, at step k
    Eigen::VectorXd lambda;     // N_R, biases applied from k to k+1
    Eigen::VectorXd utilities;  // N, U at the step-k opinions
    double row_sum_error = 0;   // max |row sum of L - 1|
    std::uint64_t edge_digest = 0;
    bool matrices_static = false;  // same W and Lambda as the previous step
};

/// One entry per logged step. The final entry holds the last state and
/// repeats the last biases that were applied.
struct TrajectoryLog {
    std::vector<LogEntry> entries;
    Eigen::MatrixXd regular_state(std::size_t entry, const Community& community) const;
};

struct ConvergenceDetection {
    std::optional<int> step;      // first k with ||x(k+1) - x(k)||_inf < eps
    bool matrices_static = false; // whether W, Lambda were frozen at that step
};

ConvergenceDetection detect_convergence(const TrajectoryLog& log, double epsilon);

/// Analysis of the matrices in force at the end of a run.
struct AnalysisSnapshot {
    int step = 0;
    double spectral_radius = 0;
    bool hurwitz = false;
    bool unique_equilibrium = false;
    std::string equilibrium_status;  // "unique" or "no unique equilibrium"
    double rcond = 0;
    double row_sum_error_max = 0;    // max |row sum of C - 1|
    double min_C_entry = 0;
    Eigen::MatrixXd C;
    Eigen::MatrixXd equilibrium;     // N_R x n
    std::optional<LayeringMode> layering;  // nullopt: not reducible
    std::size_t layer_count = 0;
    ConvergenceCertificate<double> convergence;
    ContainmentReport containment;
};

/// Full analysis of fixed system matrices.
AnalysisSnapshot analyze_system(const EdgeSet& edges, const SystemMatrices<double>& mats,
                                const Eigen::MatrixXd& regular_initial, const Eigen::MatrixXd& stubborn,
                                const std::optional<LayerPartition>& declared_layers, int step);

struct RunReport {
    std::string scenario_name;
    std::uint64_t seed = 0;
    bool converged = false;
    std::optional<int> convergence_step;
    bool static_at_convergence = false;  // false: "settled" under varying matrices
    std::vector<double> step_deltas;     // ||x(k+1) - x(k)||_inf
    int steps_run = 0;
    std::string update_order;
    std::vector<std::pair<int, AgentId>> fallbacks;  // (step, agent)
    double final_equilibrium_gap = 0;                // ||x_final - x*||_inf, NaN if no x*
    AnalysisSnapshot analysis;
};

struct RunResult {
    TrajectoryLog log;
    RunReport report;
};

/// Per step k: sample edges (random graphs), reward round (reward-driven),
/// assemble L, advance opinions, log. Stops after the horizon or, when
/// enabled, at the first step whose change is below epsilon while the
/// matrices are frozen. Errors carry the failing step index.
RunResult run(const ScenarioConfig& config);

/// Same as run() but every utility query is recorded in `audit`.
RunResult run_audited(const ScenarioConfig& config, std::vector<Eigen::VectorXd>& audit);

struct MonteCarloSummary {
    std::vector<std::pair<std::uint64_t, RunReport>> reports;  // seed order
    std::vector<std::pair<std::uint64_t, std::string>> errors;
    std::optional<double> mean_convergence_step;
    double containment_pass_rate = 0;
    std::optional<double> mean_distance_to_utility_mean;
};

MonteCarloSummary monte_carlo(const ScenarioConfig& config, const std::vector<std::uint64_t>& seeds);

// ---------------------------------------------------------------------------
// Trajectory CSV: k,agent_id,subject,opinion,lambda,utility

void write_trajectory_csv(std::ostream& out, const TrajectoryLog& log, const Community& community);
TrajectoryLog read_trajectory_csv(std::istream& in, const Community& community);

/// Equality on the fields the CSV carries (opinions, lambda, utilities).
bool same_csv_content(const TrajectoryLog& a, const TrajectoryLog& b);

}  // namespace fjsteer
