#pragma once

#include "fjsteer/graph.hpp"
#include "fjsteer/types.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fjsteer {

/// Leader-specified reward U : [0,1]^n -> R+.
///
/// The field only answers pointwise queries; its parameters are not exposed,
/// so agent-side code cannot learn the distribution it is climbing.
class UtilityField {
public:
    /// exp(-1/2 (o - mean)^T cov^{-1} (o - mean)), unnormalized.
    static UtilityField gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance);

    /// Tensor-product lattice on [0,1]^n with multilinear interpolation.
    /// `axes[d]` are the strictly increasing coordinates along dimension d
    /// (first 0, last 1); `values` is laid out with dimension 0 fastest.
    static UtilityField grid(std::vector<std::vector<double>> axes, std::vector<double> values);

    /// Reads a lattice CSV: header `o1,...,on,value`, then one lattice point
    /// per row in any order. All points of the tensor grid must be present.
    static UtilityField grid_from_csv(const std::filesystem::path& file);

    int dimension() const;

    /// Throws InvalidInput if `o` has the wrong size or leaves [0,1]^n.
    double operator()(const Eigen::VectorXd& o) const;

private:
    struct Impl;
    explicit UtilityField(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;
};

double evaluate_utility(const UtilityField& field, const Eigen::VectorXd& o);

/// Pointwise access to a utility field as granted to agents. Every query is
/// recorded when auditing is on, so callers can verify that only realized
/// opinions were ever evaluated.
class UtilityProbe {
public:
    explicit UtilityProbe(const UtilityField& field, bool audit = false) : field_(field), audit_(audit) {}

    double operator()(const Eigen::VectorXd& o);

    const std::vector<Eigen::VectorXd>& queries() const { return queries_; }
    std::size_t query_count() const { return count_; }

private:
    const UtilityField& field_;
    bool audit_;
    std::size_t count_ = 0;
    std::vector<Eigen::VectorXd> queries_;
};

/// What regular agent i may see at step k: its own initial reward and the
/// current rewards of its in-neighbors.
struct RewardObservation {
    AgentId agent;
    double own_initial = 0;
    std::vector<std::pair<AgentId, double>> neighbor_rewards;
};

/// ubar_i(k) = u_i(0) + sum_j u_j(k).
double local_reward_sum(const RewardObservation& obs);

enum class RowFallback {
    none,
    kept_previous,     // total reward vanished; previous lambda and w retained
    uniform_weights,   // neighbors earned nothing; lambda = 1, w uniform
};

const char* to_string(RowFallback f);

struct InfluenceRow {
    std::vector<std::pair<AgentId, double>> L_neighbors;  // L_ij for j in N_i
    double L_self = 0;                                    // L_{i,N+i}
    double lambda = 0;
    std::vector<std::pair<AgentId, double>> weights;      // w_ij
    RowFallback fallback = RowFallback::none;
};

/// Rewards at or below this total trigger the kept-previous fallback.
inline constexpr double kVanishingReward = 1e-300;

/// Bias and weights of one regular agent from its observation:
/// L_ij = u_j / ubar, L_self = u_i(0) / ubar, lambda = L_self,
/// w_ij = L_ij / (1 - L_self). `previous` supplies lambda and w for the
/// vanishing-reward fallback; without it that case throws NumericalFailure.
InfluenceRow update_influence_row(const RewardObservation& obs, const std::optional<InfluenceRow>& previous = {});

struct RewardStepResult {
    Eigen::MatrixXd W;                       // N_R x N, canonical columns
    Eigen::VectorXd lambda;                  // N_R
    Eigen::VectorXd utilities;               // u_j(k) for every agent, canonical order
    std::vector<InfluenceRow> rows;          // by regular index
    std::vector<AgentId> flagged;            // agents that hit a fallback
};

/// One reward round for every regular agent. `opinions` is N x n in canonical
/// order, `initial_rewards` holds u_i(0) by regular index. Rewards are
/// obtained only through `probe`, once per agent at its current opinion.
RewardStepResult reward_step(const EdgeSet& edges, const Eigen::MatrixXd& opinions,
                             const Eigen::VectorXd& initial_rewards, UtilityProbe& probe,
                             const std::vector<InfluenceRow>* previous = nullptr);

}  // namespace fjsteer
