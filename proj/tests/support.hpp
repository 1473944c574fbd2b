#pragma once

// Random system generators and independent reference computations shared by
// the unit tests and the acceptance suite.

#include "fjsteer/analysis.hpp"
#include "fjsteer/fj_core.hpp"
#include "fjsteer/graph.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace fjtest {

using namespace fjsteer;

struct RandomSystem {
    Community community;
    EdgeSet edges;
    Eigen::MatrixXd W;       // N_R x N canonical
    Eigen::VectorXd lambda;  // N_R
    Eigen::MatrixXd regular_initial;
    Eigen::MatrixXd stubborn;
    std::optional<LayerPartition> layers;
};

inline double unit(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }
inline int below(std::mt19937_64& rng, int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

inline std::vector<AgentId> shuffled_ids(std::mt19937_64& rng, int n) {
    std::vector<AgentId> ids;
    for (int i = 1; i <= n; ++i) ids.emplace_back(i);
    std::shuffle(ids.begin(), ids.end(), rng);
    return ids;
}

inline std::vector<AgentId> pick(std::mt19937_64& rng, std::vector<AgentId> pool, int count) {
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(static_cast<std::size_t>(std::min<int>(count, static_cast<int>(pool.size()))));
    return pool;
}

inline Eigen::MatrixXd random_weights(std::mt19937_64& rng, const EdgeSet& edges) {
    const Community& c = edges.community();
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(c.regular_count(), c.agents());
    for (Index r = 0; r < c.regular_count(); ++r) {
        double total = 0;
        for (AgentId j : edges.in_neighbors_at(r)) total += W(r, c.column(j)) = 0.05 + unit(rng);
        W.row(r) /= total;
    }
    return W;
}

inline void fill_opinions(std::mt19937_64& rng, RandomSystem& s) {
    const Community& c = s.community;
    s.regular_initial = Eigen::MatrixXd::NullaryExpr(c.regular_count(), c.subjects(), [&] { return unit(rng); });
    s.stubborn = Eigen::MatrixXd::NullaryExpr(c.stubborn_count(), c.subjects(), [&] { return unit(rng); });
}

inline Eigen::VectorXd random_lambda(std::mt19937_64& rng, Index count, bool allow_zero = true) {
    Eigen::VectorXd lambda(count);
    for (Index i = 0; i < count; ++i) {
        const int kind = below(rng, 4);
        lambda(i) = kind == 0 && allow_zero ? 0.0 : 0.95 * unit(rng);
    }
    return lambda;
}

/// Arbitrary graph on shuffled ids with every regular agent reachable from a
/// stubborn agent (rejection sampling).
inline RandomSystem random_reachable_system(std::mt19937_64& rng, int max_agents = 10, int max_subjects = 2) {
    for (;;) {
        const int N = 2 + below(rng, max_agents - 1);
        const int NS = 1 + below(rng, std::max(1, N / 3));
        const int n = 1 + below(rng, max_subjects);
        auto ids = shuffled_ids(rng, N);
        std::vector<AgentId> stubborn(ids.begin(), ids.begin() + NS);
        Community c(n, N, stubborn);
        std::map<AgentId, std::vector<AgentId>> in;
        for (AgentId i : c.regular()) {
            std::vector<AgentId> pool;
            for (int j = 1; j <= N; ++j)
                if (j != i.value) pool.emplace_back(j);
            in[i] = pick(rng, pool, 1 + below(rng, 3));
        }
        EdgeSet edges(c, in);
        if (!all_stubborn_reachable(edges)) continue;
        RandomSystem s{c, edges, random_weights(rng, edges), random_lambda(rng, c.regular_count()), {}, {}, {}};
        fill_opinions(rng, s);
        return s;
    }
}

/// Layered system on shuffled ids. Stubborn agents only feed the first
/// layer; later layers listen to earlier layers (strict) or also to their
/// own layer (weak).
inline RandomSystem random_layered_system(std::mt19937_64& rng, LayeringMode mode, int max_layers = 4) {
    const int M = 1 + below(rng, max_layers);
    std::vector<int> sizes(static_cast<std::size_t>(M));
    int NR = 0;
    for (int& s : sizes) NR += s = 1 + below(rng, 4);
    const int NS = 1 + below(rng, 3);
    const int N = NR + NS;
    const int n = 1 + below(rng, 2);
    auto ids = shuffled_ids(rng, N);
    std::vector<AgentId> stubborn(ids.begin(), ids.begin() + NS);
    Community c(n, N, stubborn);

    std::vector<std::vector<AgentId>> layers;
    auto next = ids.begin() + NS;
    for (int s : sizes) {
        layers.emplace_back(next, next + s);
        next += s;
    }
    std::map<AgentId, std::vector<AgentId>> in;
    std::vector<AgentId> earlier;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        for (AgentId i : layers[l]) {
            std::vector<AgentId> pool = l == 0 ? stubborn : earlier;
            if (mode == LayeringMode::weak)
                for (AgentId j : layers[l])
                    if (j != i) pool.push_back(j);
            std::vector<AgentId> chosen = pick(rng, pool, 1 + below(rng, 3));
            // keep at least one edge from the layer directly below
            const std::vector<AgentId>& below_layer = l == 0 ? stubborn : layers[l - 1];
            if (std::none_of(chosen.begin(), chosen.end(), [&](AgentId j) {
                    return std::find(below_layer.begin(), below_layer.end(), j) != below_layer.end();
                }))
                chosen.push_back(below_layer[static_cast<std::size_t>(below(rng, static_cast<int>(below_layer.size())))]);
            in[i] = chosen;
        }
        earlier.insert(earlier.end(), layers[l].begin(), layers[l].end());
    }
    EdgeSet edges(c, in);
    RandomSystem s{c, edges, random_weights(rng, edges), random_lambda(rng, c.regular_count()), {}, {}, {}};
    s.layers.emplace(c, layers);
    fill_opinions(rng, s);
    return s;
}

/// Reference: iterate o_i <- (1 - lambda_i) sum_j w_ij o_j + lambda_i o_i(0)
/// agent by agent with plain loops, all agents indexed by canonical column.
inline Eigen::MatrixXd iterate_reference(const RandomSystem& s, const Eigen::MatrixXd& start, int steps) {
    const Community& c = s.community;
    const Index nr = c.regular_count();
    Eigen::MatrixXd all(c.agents(), c.subjects());
    all << start, s.stubborn;
    for (int k = 0; k < steps; ++k) {
        Eigen::MatrixXd next = all;
        for (Index i = 0; i < nr; ++i)
            for (Index d = 0; d < c.subjects(); ++d) {
                double acc = 0;
                for (Index j = 0; j < c.agents(); ++j) acc += s.W(i, j) * all(j, d);
                next(i, d) = (1 - s.lambda(i)) * acc + s.lambda(i) * s.regular_initial(i, d);
            }
        all = next;
    }
    return all.topRows(nr);
}

inline SystemMatrices<double> matrices(const RandomSystem& s) { return assemble_L<double>(s.W, s.lambda); }

inline Eigen::VectorXd input(const RandomSystem& s) { return make_input<double>(s.stubborn, s.regular_initial); }

}  // namespace fjtest
