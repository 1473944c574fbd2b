#pragma once

#include "fjsteer/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace fjsteer {

/// The agent universe {1..N}, split into stubborn (leader) and regular
/// (follower) agents.
///
/// Matrices indexed by agent use one canonical column order everywhere:
/// regular agents by ascending id, then stubborn agents by ascending id.
/// A regular agent's position in that order is also its order-map value
/// when building selection matrices.
class Community {
public:
    Community(int subjects, int agents, std::vector<AgentId> stubborn);

    /// Regular agents 1..regular, stubborn agents regular+1..agents.
    static Community trailing_stubborn(int subjects, int agents, int regular);

    int subjects() const { return subjects_; }
    int agents() const { return static_cast<int>(column_of_.size()) - 1; }
    int regular_count() const { return static_cast<int>(regular_.size()); }
    int stubborn_count() const { return static_cast<int>(stubborn_.size()); }

    bool contains(AgentId id) const { return id.value >= 1 && id.value <= agents(); }
    bool is_stubborn(AgentId id) const;
    bool is_regular(AgentId id) const { return contains(id) && !is_stubborn(id); }

    const std::vector<AgentId>& regular() const { return regular_; }
    const std::vector<AgentId>& stubborn() const { return stubborn_; }

    /// 0-based position among regular agents sorted by id.
    Index regular_index(AgentId id) const;
    /// 0-based position among stubborn agents sorted by id.
    Index stubborn_index(AgentId id) const;
    /// Column of agent `id` in the canonical agent order.
    Index column(AgentId id) const;
    AgentId at_column(Index column) const { return by_column_.at(static_cast<std::size_t>(column)); }

    friend bool operator==(const Community& a, const Community& b) {
        return a.subjects_ == b.subjects_ && a.stubborn_ == b.stubborn_ && a.agents() == b.agents();
    }

private:
    int subjects_;
    std::vector<AgentId> regular_;
    std::vector<AgentId> stubborn_;
    std::vector<Index> column_of_;  // indexed by id, slot 0 unused
    std::vector<AgentId> by_column_;
};

/// In-neighbor sets N_i(k) of every regular agent at one step k. Immutable.
class EdgeSet {
public:
    /// Every regular agent must appear with a nonempty neighbor list that
    /// excludes itself; stubborn agents must not appear as keys.
    EdgeSet(Community community, const std::map<AgentId, std::vector<AgentId>>& in_neighbors,
            int step = 0);

    const Community& community() const { return community_; }
    int step() const { return step_; }

    /// N_i for regular agent i, sorted ascending. Throws InvalidInput for
    /// unknown or stubborn ids.
    const std::vector<AgentId>& in_neighbors(AgentId i) const;
    const std::vector<AgentId>& in_neighbors_at(Index regular_index) const {
        return neighbors_[static_cast<std::size_t>(regular_index)];
    }

    /// Copy with the extra influence edge j -> i.
    EdgeSet with_edge(AgentId i, AgentId j) const;

    std::map<AgentId, std::vector<AgentId>> to_map() const;

    /// FNV-1a digest of the neighbor lists; used to tag logged steps.
    std::uint64_t digest() const;

    friend bool operator==(const EdgeSet& a, const EdgeSet& b) {
        return a.community_ == b.community_ && a.neighbors_ == b.neighbors_;
    }

private:
    Community community_;
    std::vector<std::vector<AgentId>> neighbors_;  // by regular index
    int step_;
};

/// Ordered, disjoint regular-agent groups V_1..V_M covering V_R.
/// Layer indices in this API are 0-based.
class LayerPartition {
public:
    LayerPartition(const Community& community, std::vector<std::vector<AgentId>> layers);

    std::size_t layer_count() const { return layers_.size(); }
    const std::vector<AgentId>& layer(std::size_t l) const { return layers_.at(l); }
    const std::vector<std::vector<AgentId>>& layers() const { return layers_; }
    std::vector<Index> sizes() const;
    std::size_t layer_of(AgentId regular) const;

    /// W_l: stubborn agents together with layers 0..l, sorted.
    std::vector<AgentId> cumulative(std::size_t l) const;

    const std::vector<AgentId>& regular_agents() const { return regular_; }
    const std::vector<AgentId>& stubborn_agents() const { return stubborn_; }

    friend bool operator==(const LayerPartition& a, const LayerPartition& b) {
        return a.layers_ == b.layers_ && a.stubborn_ == b.stubborn_;
    }

private:
    std::vector<std::vector<AgentId>> layers_;
    std::vector<AgentId> regular_;
    std::vector<AgentId> stubborn_;
    std::map<AgentId, std::size_t> layer_of_;
};

enum class LayeringMode { weak, strict };

const char* to_string(LayeringMode mode);

/// One flag per regular agent (regular-index order): true iff some stubborn
/// agent reaches it along influence edges j -> i, j in N_i.
std::vector<bool> stubborn_reachable(const EdgeSet& edges);
bool all_stubborn_reachable(const EdgeSet& edges);

/// weak: N_i within W_l for i in V_l. strict: N_i within V_S for V_1 and
/// within W_{l-1} for later layers. Throws if the partition and the edge set
/// disagree on the agent sets.
bool validate_layering(const EdgeSet& edges, const LayerPartition& partition, LayeringMode mode);

/// True when stubborn agents only influence agents of the first layer.
bool stubborn_inputs_confined_to_first_layer(const EdgeSet& edges, const LayerPartition& partition);

struct InferredLayering {
    LayerPartition partition;
    LayeringMode mode;
};

/// Longest-path levels over the SCC condensation of the regular-agent
/// influence graph. Acyclic graphs yield the minimal strict layering;
/// otherwise SCCs share levels and the layering is weak. Returns nullopt when
/// one SCC spans every regular agent.
std::optional<InferredLayering> infer_layering(const EdgeSet& edges);

struct SelectionMatrices {
    std::vector<Eigen::MatrixXi> per_layer;  // Q_l, N_l x N_R
    Eigen::MatrixXi Q;                       // N_R x N_R permutation
    Eigen::MatrixXi H;                       // N x N, blockdiag(I_{N-N_R}, Q)
    std::vector<Index> offsets;              // first row of each layer in Q

    Index layer_size(std::size_t l) const { return per_layer.at(l).rows(); }
};

SelectionMatrices build_selection_matrices(const LayerPartition& partition);

/// Tarjan's algorithm on an adjacency list. Components are returned in
/// reverse topological order: every edge between components points from a
/// later component to an earlier one.
std::vector<std::vector<Index>> strongly_connected_components(const std::vector<std::vector<Index>>& successors);

}  // namespace fjsteer
