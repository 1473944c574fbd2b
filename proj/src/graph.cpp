#include "fjsteer/graph.hpp"

#include <algorithm>
#include <deque>
#include <string>

namespace fjsteer {

namespace {

std::string agent_str(AgentId id) { return std::to_string(id.value); }

}  // namespace

Community::Community(int subjects, int agents, std::vector<AgentId> stubborn)
    : subjects_(subjects), stubborn_(std::move(stubborn)) {
    if (subjects < 1) throw InvalidInput("community: subject count must be >= 1");
    if (agents < 2) throw InvalidInput("community: need at least one stubborn and one regular agent");
    std::sort(stubborn_.begin(), stubborn_.end());
    if (std::adjacent_find(stubborn_.begin(), stubborn_.end()) != stubborn_.end())
        throw InvalidInput("community: duplicate stubborn agent id");
    for (AgentId s : stubborn_)
        if (s.value < 1 || s.value > agents)
            throw InvalidInput("community: stubborn agent " + agent_str(s) + " outside 1.." + std::to_string(agents));
    if (stubborn_.empty()) throw InvalidInput("community: at least one stubborn agent is required");
    if (static_cast<int>(stubborn_.size()) >= agents)
        throw InvalidInput("community: at least one regular agent is required");

    std::vector<bool> stub(static_cast<std::size_t>(agents) + 1, false);
    for (AgentId s : stubborn_) stub[static_cast<std::size_t>(s.value)] = true;
    for (int id = 1; id <= agents; ++id)
        if (!stub[static_cast<std::size_t>(id)]) regular_.emplace_back(id);

    column_of_.assign(static_cast<std::size_t>(agents) + 1, -1);
    by_column_.reserve(static_cast<std::size_t>(agents));
    for (AgentId r : regular_) {
        column_of_[static_cast<std::size_t>(r.value)] = static_cast<Index>(by_column_.size());
        by_column_.push_back(r);
    }
    for (AgentId s : stubborn_) {
        column_of_[static_cast<std::size_t>(s.value)] = static_cast<Index>(by_column_.size());
        by_column_.push_back(s);
    }
}

Community Community::trailing_stubborn(int subjects, int agents, int regular) {
    std::vector<AgentId> stubborn;
    for (int id = regular + 1; id <= agents; ++id) stubborn.emplace_back(id);
    return Community(subjects, agents, std::move(stubborn));
}

bool Community::is_stubborn(AgentId id) const {
    return contains(id) && column_of_[static_cast<std::size_t>(id.value)] >= regular_count();
}

Index Community::column(AgentId id) const {
    if (!contains(id)) throw InvalidInput("unknown agent id " + agent_str(id));
    return column_of_[static_cast<std::size_t>(id.value)];
}

Index Community::regular_index(AgentId id) const {
    if (!is_regular(id)) throw InvalidInput("agent " + agent_str(id) + " is not a regular agent");
    return column(id);
}

Index Community::stubborn_index(AgentId id) const {
    if (!is_stubborn(id)) throw InvalidInput("agent " + agent_str(id) + " is not a stubborn agent");
    return column(id) - regular_count();
}

EdgeSet::EdgeSet(Community community, const std::map<AgentId, std::vector<AgentId>>& in_neighbors, int step)
    : community_(std::move(community)), neighbors_(static_cast<std::size_t>(community_.regular_count())), step_(step) {
    for (const auto& [agent, list] : in_neighbors) {
        if (!community_.contains(agent)) throw InvalidInput("edges: unknown agent id " + agent_str(agent));
        if (community_.is_stubborn(agent))
            throw InvalidInput("edges: stubborn agent " + agent_str(agent) + " cannot have in-neighbors");
        auto& slot = neighbors_[static_cast<std::size_t>(community_.regular_index(agent))];
        slot = list;
        std::sort(slot.begin(), slot.end());
        slot.erase(std::unique(slot.begin(), slot.end()), slot.end());
        for (AgentId j : slot) {
            if (!community_.contains(j))
                throw InvalidInput("edges: agent " + agent_str(agent) + " lists unknown neighbor " + agent_str(j));
            if (j == agent) throw InvalidInput("edges: agent " + agent_str(agent) + " lists itself as a neighbor");
        }
    }
    for (std::size_t r = 0; r < neighbors_.size(); ++r)
        if (neighbors_[r].empty())
            throw InvalidInput("edges: regular agent " + agent_str(community_.regular()[r]) + " has no in-neighbors");
}

const std::vector<AgentId>& EdgeSet::in_neighbors(AgentId i) const {
    if (!community_.contains(i)) throw InvalidInput("unknown agent id " + agent_str(i));
    if (community_.is_stubborn(i))
        throw InvalidInput("agent " + agent_str(i) + " is stubborn and takes no influence");
    return neighbors_[static_cast<std::size_t>(community_.regular_index(i))];
}

EdgeSet EdgeSet::with_edge(AgentId i, AgentId j) const {
    auto map = to_map();
    map[i].push_back(j);
    return EdgeSet(community_, map, step_);
}

std::map<AgentId, std::vector<AgentId>> EdgeSet::to_map() const {
    std::map<AgentId, std::vector<AgentId>> map;
    for (std::size_t r = 0; r < neighbors_.size(); ++r) map[community_.regular()[r]] = neighbors_[r];
    return map;
}

std::uint64_t EdgeSet::digest() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xffU;
            h *= 1099511628211ULL;
        }
    };
    for (std::size_t r = 0; r < neighbors_.size(); ++r) {
        mix(static_cast<std::uint64_t>(community_.regular()[r].value));
        mix(neighbors_[r].size());
        for (AgentId j : neighbors_[r]) mix(static_cast<std::uint64_t>(j.value));
    }
    return h;
}

LayerPartition::LayerPartition(const Community& community, std::vector<std::vector<AgentId>> layers)
    : layers_(std::move(layers)), regular_(community.regular()), stubborn_(community.stubborn()) {
    if (layers_.empty()) throw InvalidInput("layers: at least one layer is required");
    std::size_t covered = 0;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        auto& layer = layers_[l];
        if (layer.empty()) throw InvalidInput("layers: layer " + std::to_string(l + 1) + " is empty");
        std::sort(layer.begin(), layer.end());
        for (AgentId a : layer) {
            if (!community.is_regular(a))
                throw InvalidInput("layers: agent " + agent_str(a) + " is not a regular agent");
            if (!layer_of_.emplace(a, l).second)
                throw InvalidInput("layers: agent " + agent_str(a) + " appears in more than one layer");
        }
        covered += layer.size();
    }
    if (covered != regular_.size())
        throw InvalidInput("layers: partition covers " + std::to_string(covered) + " of " +
                           std::to_string(regular_.size()) + " regular agents");
}

std::vector<Index> LayerPartition::sizes() const {
    std::vector<Index> out;
    for (const auto& layer : layers_) out.push_back(static_cast<Index>(layer.size()));
    return out;
}

std::size_t LayerPartition::layer_of(AgentId regular) const {
    auto it = layer_of_.find(regular);
    if (it == layer_of_.end()) throw InvalidInput("layers: agent " + agent_str(regular) + " is not layered");
    return it->second;
}

std::vector<AgentId> LayerPartition::cumulative(std::size_t l) const {
    std::vector<AgentId> out = stubborn_;
    for (std::size_t h = 0; h <= l && h < layers_.size(); ++h)
        out.insert(out.end(), layers_[h].begin(), layers_[h].end());
    std::sort(out.begin(), out.end());
    return out;
}

const char* to_string(LayeringMode mode) { return mode == LayeringMode::strict ? "strict" : "weak"; }

std::vector<bool> stubborn_reachable(const EdgeSet& edges) {
    const Community& c = edges.community();
    const auto columns = static_cast<std::size_t>(c.agents());
    std::vector<std::vector<Index>> out(columns);
    for (Index r = 0; r < c.regular_count(); ++r)
        for (AgentId j : edges.in_neighbors_at(r)) out[static_cast<std::size_t>(c.column(j))].push_back(r);

    std::vector<bool> seen(columns, false);
    std::deque<Index> frontier;
    for (AgentId s : c.stubborn()) {
        seen[static_cast<std::size_t>(c.column(s))] = true;
        frontier.push_back(c.column(s));
    }
    while (!frontier.empty()) {
        Index v = frontier.front();
        frontier.pop_front();
        for (Index w : out[static_cast<std::size_t>(v)])
            if (!seen[static_cast<std::size_t>(w)]) {
                seen[static_cast<std::size_t>(w)] = true;
                frontier.push_back(w);
            }
    }
    seen.resize(static_cast<std::size_t>(c.regular_count()));
    return seen;
}

bool all_stubborn_reachable(const EdgeSet& edges) {
    auto flags = stubborn_reachable(edges);
    return std::all_of(flags.begin(), flags.end(), [](bool b) { return b; });
}

namespace {

void require_same_agents(const EdgeSet& edges, const LayerPartition& partition) {
    const Community& c = edges.community();
    if (c.regular() != partition.regular_agents() || c.stubborn() != partition.stubborn_agents())
        throw InvalidInput("layering: partition and edge set describe different agent sets");
}

}  // namespace

bool validate_layering(const EdgeSet& edges, const LayerPartition& partition, LayeringMode mode) {
    require_same_agents(edges, partition);
    const Community& c = edges.community();
    for (std::size_t l = 0; l < partition.layer_count(); ++l) {
        for (AgentId i : partition.layer(l)) {
            for (AgentId j : edges.in_neighbors(i)) {
                if (c.is_stubborn(j)) continue;
                const std::size_t lj = partition.layer_of(j);
                if (mode == LayeringMode::weak ? lj > l : lj >= l) return false;
            }
        }
    }
    return true;
}

bool stubborn_inputs_confined_to_first_layer(const EdgeSet& edges, const LayerPartition& partition) {
    require_same_agents(edges, partition);
    const Community& c = edges.community();
    for (std::size_t l = 1; l < partition.layer_count(); ++l)
        for (AgentId i : partition.layer(l))
            for (AgentId j : edges.in_neighbors(i))
                if (c.is_stubborn(j)) return false;
    return true;
}

namespace {

// Tarjan over the regular-agent subgraph; components come out in reverse
// topological order of the influence direction j -> i.
class SccFinder {
public:
    explicit SccFinder(const std::vector<std::vector<Index>>& successors)
        : succ_(successors),
          number_(successors.size(), -1),
          low_(successors.size(), -1),
          on_stack_(successors.size(), false) {}

    std::vector<std::vector<Index>> run() {
        for (Index v = 0; v < static_cast<Index>(succ_.size()); ++v)
            if (number_[static_cast<std::size_t>(v)] == -1) visit(v);
        return std::move(components_);
    }

private:
    void visit(Index v) {
        const auto vs = static_cast<std::size_t>(v);
        number_[vs] = low_[vs] = counter_++;
        stack_.push_back(v);
        on_stack_[vs] = true;
        for (Index w : succ_[vs]) {
            const auto ws = static_cast<std::size_t>(w);
            if (number_[ws] == -1) {
                visit(w);
                low_[vs] = std::min(low_[vs], low_[ws]);
            } else if (on_stack_[ws]) {
                low_[vs] = std::min(low_[vs], number_[ws]);
            }
        }
        if (low_[vs] == number_[vs]) {
            std::vector<Index> component;
            Index w;
            do {
                w = stack_.back();
                stack_.pop_back();
                on_stack_[static_cast<std::size_t>(w)] = false;
                component.push_back(w);
            } while (w != v);
            components_.push_back(std::move(component));
        }
    }

    const std::vector<std::vector<Index>>& succ_;
    std::vector<Index> number_;
    std::vector<Index> low_;
    std::vector<bool> on_stack_;
    std::vector<Index> stack_;
    std::vector<std::vector<Index>> components_;
    Index counter_ = 0;
};

}  // namespace

std::vector<std::vector<Index>> strongly_connected_components(const std::vector<std::vector<Index>>& successors) {
    return SccFinder(successors).run();
}

std::optional<InferredLayering> infer_layering(const EdgeSet& edges) {
    const Community& c = edges.community();
    const auto nr = static_cast<std::size_t>(c.regular_count());
    std::vector<std::vector<Index>> succ(nr);
    for (Index r = 0; r < c.regular_count(); ++r)
        for (AgentId j : edges.in_neighbors_at(r))
            if (c.is_regular(j)) succ[static_cast<std::size_t>(c.regular_index(j))].push_back(r);

    auto components = strongly_connected_components(succ);
    if (components.size() == 1 && nr > 1) return std::nullopt;

    std::vector<std::size_t> component_of(nr);
    for (std::size_t k = 0; k < components.size(); ++k)
        for (Index v : components[k]) component_of[static_cast<std::size_t>(v)] = k;

    std::vector<std::size_t> level(components.size(), 0);
    std::size_t depth = 0;
    for (std::size_t k = components.size(); k-- > 0;) {
        for (Index v : components[k])
            for (AgentId j : edges.in_neighbors_at(v)) {
                if (!c.is_regular(j)) continue;
                const std::size_t kj = component_of[static_cast<std::size_t>(c.regular_index(j))];
                if (kj != k) level[k] = std::max(level[k], level[kj] + 1);
            }
        depth = std::max(depth, level[k] + 1);
    }

    std::vector<std::vector<AgentId>> layers(depth);
    for (std::size_t k = 0; k < components.size(); ++k)
        for (Index v : components[k]) layers[level[k]].push_back(c.regular()[static_cast<std::size_t>(v)]);

    const bool acyclic = components.size() == nr;
    return InferredLayering{LayerPartition(c, std::move(layers)), acyclic ? LayeringMode::strict : LayeringMode::weak};
}

SelectionMatrices build_selection_matrices(const LayerPartition& partition) {
    const auto& regular = partition.regular_agents();
    const auto nr = static_cast<Index>(regular.size());
    const auto ns = static_cast<Index>(partition.stubborn_agents().size());

    auto order = [&regular](AgentId a) {
        return static_cast<Index>(std::lower_bound(regular.begin(), regular.end(), a) - regular.begin());
    };

    SelectionMatrices sel;
    sel.Q = Eigen::MatrixXi::Zero(nr, nr);
    Index row = 0;
    for (const auto& layer : partition.layers()) {
        Eigen::MatrixXi q = Eigen::MatrixXi::Zero(static_cast<Index>(layer.size()), nr);
        for (std::size_t r = 0; r < layer.size(); ++r) q(static_cast<Index>(r), order(layer[r])) = 1;
        sel.offsets.push_back(row);
        sel.Q.middleRows(row, q.rows()) = q;
        row += q.rows();
        sel.per_layer.push_back(std::move(q));
    }
    sel.H = Eigen::MatrixXi::Zero(ns + nr, ns + nr);
    sel.H.topLeftCorner(ns, ns).setIdentity();
    sel.H.bottomRightCorner(nr, nr) = sel.Q;
    return sel;
}

}  // namespace fjsteer
