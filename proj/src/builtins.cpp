#include "fjsteer/config.hpp"
#include "fjsteer/rng.hpp"

#include <algorithm>

namespace fjsteer {

namespace {

const std::vector<double> kUtilityMean{0.25, 0.6};
constexpr double kUtilityScale = 0.1;

void scatter_uniform(Eigen::MatrixXd& opinions, int first_id, int last_id, std::uint64_t seed) {
    auto rng = substream(seed, 0);
    for (int id = first_id; id <= last_id; ++id)
        for (Index s = 0; s < opinions.cols(); ++s) opinions(id - 1, s) = uniform_unit(rng);
}

// Four groups of 13 ids (6..18, 19..31, 32..44, 45..57). In group g the
// first id is in layer 1, the next three in layer 2 and the last nine in
// layer 3. Layer 1 listens to three stubborn agents, layer 2 to the layer-1
// agents of its own and the next group, layer 3 to two layer-2 agents of its
// own group and one of the next group.
ScenarioConfig dnn57() {
    ScenarioConfig cfg;
    cfg.name = "dnn57";
    cfg.subjects = 2;
    cfg.agents = 57;
    cfg.stubborn = {AgentId(1), AgentId(2), AgentId(3), AgentId(4), AgentId(5)};
    cfg.opinions.resize(57, 2);
    cfg.opinions.topRows(5) << 0.05, 0.15, 0.9, 0.1, 0.95, 0.9, 0.1, 0.85, 0.5, 0.5;
    scatter_uniform(cfg.opinions, 6, 57, 57);

    auto base = [](int g) { return 6 + 13 * g; };
    LayeredGraph graph;
    std::vector<AgentId> v1, v2, v3;
    for (int g = 0; g < 4; ++g) {
        const int next = (g + 1) % 4;
        const AgentId first(base(g));
        v1.push_back(first);
        graph.edges[first] = {AgentId(1 + g), AgentId(1 + (g + 1) % 4), AgentId(5)};
        for (int t = 0; t < 3; ++t) {
            const AgentId a(base(g) + 1 + t);
            v2.push_back(a);
            graph.edges[a] = {first, AgentId(base(next))};
        }
        for (int s = 0; s < 9; ++s) {
            const AgentId a(base(g) + 4 + s);
            v3.push_back(a);
            graph.edges[a] = {AgentId(base(g) + 1 + s % 3), AgentId(base(g) + 1 + (s + 1) % 3),
                              AgentId(base(next) + 1 + s / 3)};
        }
    }
    graph.layers = {v1, v2, v3};
    cfg.graph = graph;
    cfg.weights = RewardWeights{};
    cfg.utility = GaussianUtility{kUtilityMean, kUtilityScale};
    cfg.run.horizon = 10;
    return cfg;
}

// 96 regular agents with random initial opinions and four stubborn agents at
// the corners of a rectangle that does not contain all of them.
ScenarioConfig hundred_agents(const std::string& name) {
    ScenarioConfig cfg;
    cfg.name = name;
    cfg.subjects = 2;
    cfg.agents = 100;
    cfg.stubborn = {AgentId(97), AgentId(98), AgentId(99), AgentId(100)};
    cfg.opinions.resize(100, 2);
    scatter_uniform(cfg.opinions, 1, 96, 100);
    cfg.opinions.bottomRows(4) << 0.15, 0.45, 0.45, 0.45, 0.45, 0.75, 0.15, 0.75;
    cfg.weights = RewardWeights{};
    cfg.utility = GaussianUtility{kUtilityMean, kUtilityScale};
    return cfg;
}

// Ring 1 <- 96 <- ... <- 2 <- 1 plus two seeded extra regular neighbors per
// agent; every eighth agent also listens to one stubborn agent.
ScenarioConfig irreducible100() {
    ScenarioConfig cfg = hundred_agents("irreducible100");
    StaticGraph graph;
    auto rng = substream(100, 1);
    for (int i = 1; i <= 96; ++i) {
        std::vector<AgentId> nbrs{AgentId(i == 1 ? 96 : i - 1)};
        while (nbrs.size() < 3) {
            const AgentId j(1 + static_cast<int>(uniform_below(rng, 96)));
            if (j.value != i && std::find(nbrs.begin(), nbrs.end(), j) == nbrs.end()) nbrs.push_back(j);
        }
        if (i % 8 == 0) nbrs.emplace_back(97 + (i / 8) % 4);
        graph.edges[AgentId(i)] = nbrs;
    }
    cfg.graph = graph;
    cfg.run.horizon = 200;
    return cfg;
}

ScenarioConfig random_tv() {
    ScenarioConfig cfg = hundred_agents("random-tv");
    cfg.graph = RandomGraph{5, 1.0, true};
    cfg.run.horizon = 20;
    cfg.run.seed = 7;
    return cfg;
}

}  // namespace

std::vector<std::string> builtin_names() { return {"dnn57", "irreducible100", "random-tv"}; }

ScenarioConfig builtin_scenario(const std::string& name) {
    if (name == "dnn57") return dnn57();
    if (name == "irreducible100") return irreducible100();
    if (name == "random-tv") return random_tv();
    throw InvalidInput("demo: unknown scenario '" + name + "' (expected dnn57, irreducible100 or random-tv)");
}

ScenarioConfig with_fixed_lambda(ScenarioConfig config, double lambda) {
    if (!(lambda >= 0 && lambda <= 1)) throw InvalidInput("lambda must lie in [0,1]");
    config.weights = FixedWeights{lambda, {}, {}};
    return config;
}

}  // namespace fjsteer
