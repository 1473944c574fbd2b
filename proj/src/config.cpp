#include "fjsteer/config.hpp"

#include <fstream>
#include <set>

namespace fjsteer {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw InvalidInput("config: " + where + ": " + what);
}

const json& require(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.is_object()) fail(where, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(where, "missing key '" + key + "'");
    return *it;
}

template <class T>
T as(const json& v, const std::string& where) {
    try {
        return v.get<T>();
    } catch (const json::exception& e) {
        fail(where, std::string("wrong type (") + e.what() + ")");
    }
}

template <class T>
T optional_value(const json& obj, const std::string& key, T fallback, const std::string& where) {
    auto it = obj.find(key);
    return it == obj.end() ? fallback : as<T>(*it, where + "." + key);
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
    if (!obj.is_object()) fail(where, "expected an object");
    std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key)) fail(where, "unknown key '" + key + "'");
}

AgentId agent_id(const json& v, const std::string& where) {
    if (!v.is_number_integer()) fail(where, "agent ids must be integers");
    return AgentId(v.get<int>());
}

std::vector<AgentId> id_list(const json& v, const std::string& where) {
    if (!v.is_array()) fail(where, "expected an array of agent ids");
    std::vector<AgentId> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(agent_id(v[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

json ids_to_json(const std::vector<AgentId>& ids) {
    json out = json::array();
    for (AgentId a : ids) out.push_back(a.value);
    return out;
}

std::map<AgentId, std::vector<AgentId>> parse_edges(const json& v, const std::string& where) {
    if (!v.is_array()) fail(where, "expected an array of {agent, neighbors}");
    std::map<AgentId, std::vector<AgentId>> edges;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string at = where + "[" + std::to_string(i) + "]";
        reject_unknown(v[i], {"agent", "neighbors"}, at);
        const AgentId a = agent_id(require(v[i], "agent", at), at + ".agent");
        if (!edges.emplace(a, id_list(require(v[i], "neighbors", at), at + ".neighbors")).second)
            fail(at, "agent " + std::to_string(a.value) + " listed twice");
    }
    return edges;
}

json edges_to_json(const std::map<AgentId, std::vector<AgentId>>& edges) {
    json out = json::array();
    for (const auto& [a, nbrs] : edges) out.push_back({{"agent", a.value}, {"neighbors", ids_to_json(nbrs)}});
    return out;
}

GraphSpec parse_graph(const json& g) {
    const std::string kind = as<std::string>(require(g, "kind", "graph"), "graph.kind");
    if (kind == "static") {
        reject_unknown(g, {"kind", "edges"}, "graph");
        return StaticGraph{parse_edges(require(g, "edges", "graph"), "graph.edges")};
    }
    if (kind == "layered") {
        reject_unknown(g, {"kind", "edges", "layers"}, "graph");
        LayeredGraph out{parse_edges(require(g, "edges", "graph"), "graph.edges"), {}};
        const json& layers = require(g, "layers", "graph");
        if (!layers.is_array()) fail("graph.layers", "expected an array of id arrays");
        for (std::size_t l = 0; l < layers.size(); ++l)
            out.layers.push_back(id_list(layers[l], "graph.layers[" + std::to_string(l) + "]"));
        return out;
    }
    if (kind == "random") {
        reject_unknown(g, {"kind", "out_degree", "allow_stubborn_prob", "require_reachability"}, "graph");
        RandomGraph out;
        out.out_degree = optional_value(g, "out_degree", out.out_degree, "graph");
        out.allow_stubborn_prob = optional_value(g, "allow_stubborn_prob", out.allow_stubborn_prob, "graph");
        out.require_reachability = optional_value(g, "require_reachability", out.require_reachability, "graph");
        return out;
    }
    fail("graph.kind", "expected static, layered or random (got '" + kind + "')");
}

WeightSpec parse_weights(const json& w) {
    const std::string mode = as<std::string>(require(w, "mode", "weights"), "weights.mode");
    if (mode == "fixed") {
        reject_unknown(w, {"mode", "default_lambda", "agents"}, "weights");
        FixedWeights out;
        out.default_lambda = optional_value(w, "default_lambda", out.default_lambda, "weights");
        if (auto it = w.find("agents"); it != w.end()) {
            if (!it->is_array()) fail("weights.agents", "expected an array");
            for (std::size_t i = 0; i < it->size(); ++i) {
                const json& entry = (*it)[i];
                const std::string at = "weights.agents[" + std::to_string(i) + "]";
                reject_unknown(entry, {"agent", "lambda", "weights"}, at);
                const AgentId a = agent_id(require(entry, "agent", at), at + ".agent");
                if (auto l = entry.find("lambda"); l != entry.end()) out.lambda[a] = as<double>(*l, at + ".lambda");
                if (auto r = entry.find("weights"); r != entry.end()) {
                    if (!r->is_object()) fail(at + ".weights", "expected an object {\"id\": weight}");
                    auto& row = out.rows[a];
                    for (const auto& [key, value] : r->items()) {
                        int j = 0;
                        try {
                            std::size_t used = 0;
                            j = std::stoi(key, &used);
                            if (used != key.size()) throw std::invalid_argument(key);
                        } catch (const std::exception&) {
                            fail(at + ".weights", "key '" + key + "' is not an agent id");
                        }
                        row[AgentId(j)] = as<double>(value, at + ".weights." + key);
                    }
                }
            }
        }
        return out;
    }
    if (mode == "reward") {
        reject_unknown(w, {"mode", "initial_lambda"}, "weights");
        RewardWeights out;
        out.initial_lambda = optional_value(w, "initial_lambda", out.initial_lambda, "weights");
        return out;
    }
    fail("weights.mode", "expected fixed or reward (got '" + mode + "')");
}

UtilitySpec parse_utility(const json& u) {
    const std::string kind = as<std::string>(require(u, "kind", "utility"), "utility.kind");
    if (kind == "gaussian") {
        reject_unknown(u, {"kind", "mean", "cov_scale"}, "utility");
        GaussianUtility out;
        out.mean = as<std::vector<double>>(require(u, "mean", "utility"), "utility.mean");
        out.cov_scale = optional_value(u, "cov_scale", out.cov_scale, "utility");
        return out;
    }
    if (kind == "grid") {
        reject_unknown(u, {"kind", "file"}, "utility");
        return GridUtility{as<std::string>(require(u, "file", "utility"), "utility.file")};
    }
    fail("utility.kind", "expected gaussian or grid (got '" + kind + "')");
}

}  // namespace

ScenarioConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
    reject_unknown(doc, {"name", "community", "opinions", "graph", "weights", "utility", "run"}, "document");
    ScenarioConfig cfg;
    cfg.base_dir = base_dir;
    cfg.name = optional_value<std::string>(doc, "name", cfg.name, "document");

    const json& community = require(doc, "community", "document");
    reject_unknown(community, {"subjects", "agents", "stubborn"}, "community");
    cfg.subjects = as<int>(require(community, "subjects", "community"), "community.subjects");
    cfg.agents = as<int>(require(community, "agents", "community"), "community.agents");
    cfg.stubborn = id_list(require(community, "stubborn", "community"), "community.stubborn");
    if (cfg.subjects < 1) fail("community.subjects", "must be >= 1");
    if (cfg.agents < 1) fail("community.agents", "must be >= 1");

    const json& opinions = require(doc, "opinions", "document");
    if (!opinions.is_array() || static_cast<int>(opinions.size()) != cfg.agents)
        fail("opinions", "expected one row per agent (" + std::to_string(cfg.agents) + " rows)");
    cfg.opinions.resize(cfg.agents, cfg.subjects);
    for (int a = 0; a < cfg.agents; ++a) {
        const std::string at = "opinions[" + std::to_string(a) + "]";
        const auto row = as<std::vector<double>>(opinions[static_cast<std::size_t>(a)], at);
        if (static_cast<int>(row.size()) != cfg.subjects)
            fail(at, "expected " + std::to_string(cfg.subjects) + " components");
        for (int s = 0; s < cfg.subjects; ++s) cfg.opinions(a, s) = row[static_cast<std::size_t>(s)];
    }

    cfg.graph = parse_graph(require(doc, "graph", "document"));
    cfg.weights = parse_weights(require(doc, "weights", "document"));
    cfg.utility = parse_utility(require(doc, "utility", "document"));

    if (auto it = doc.find("run"); it != doc.end()) {
        reject_unknown(*it, {"horizon", "epsilon", "seed", "stop_on_convergence"}, "run");
        cfg.run.horizon = optional_value(*it, "horizon", cfg.run.horizon, "run");
        cfg.run.epsilon = optional_value(*it, "epsilon", cfg.run.epsilon, "run");
        cfg.run.seed = optional_value(*it, "seed", cfg.run.seed, "run");
        cfg.run.stop_on_convergence = optional_value(*it, "stop_on_convergence", cfg.run.stop_on_convergence, "run");
    }
    return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw InvalidInput("config: cannot open " + file.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InvalidInput("config: " + file.string() + ": " + e.what());
    }
    return parse_config(doc, file.parent_path());
}

json to_json(const ScenarioConfig& cfg) {
    json doc;
    doc["name"] = cfg.name;
    doc["community"] = {{"subjects", cfg.subjects}, {"agents", cfg.agents}, {"stubborn", ids_to_json(cfg.stubborn)}};
    json opinions = json::array();
    for (Index a = 0; a < cfg.opinions.rows(); ++a) {
        json row = json::array();
        for (Index s = 0; s < cfg.opinions.cols(); ++s) row.push_back(cfg.opinions(a, s));
        opinions.push_back(row);
    }
    doc["opinions"] = opinions;

    if (const auto* g = std::get_if<StaticGraph>(&cfg.graph)) {
        doc["graph"] = {{"kind", "static"}, {"edges", edges_to_json(g->edges)}};
    } else if (const auto* g = std::get_if<LayeredGraph>(&cfg.graph)) {
        json layers = json::array();
        for (const auto& l : g->layers) layers.push_back(ids_to_json(l));
        doc["graph"] = {{"kind", "layered"}, {"edges", edges_to_json(g->edges)}, {"layers", layers}};
    } else {
        const auto& r = std::get<RandomGraph>(cfg.graph);
        doc["graph"] = {{"kind", "random"},
                        {"out_degree", r.out_degree},
                        {"allow_stubborn_prob", r.allow_stubborn_prob},
                        {"require_reachability", r.require_reachability}};
    }

    if (const auto* f = std::get_if<FixedWeights>(&cfg.weights)) {
        std::map<AgentId, json> per_agent;
        for (const auto& [a, l] : f->lambda) per_agent[a]["lambda"] = l;
        for (const auto& [a, row] : f->rows) {
            json w = json::object();
            for (const auto& [j, v] : row) w[std::to_string(j.value)] = v;
            per_agent[a]["weights"] = w;
        }
        json agents = json::array();
        for (auto& [a, entry] : per_agent) {
            entry["agent"] = a.value;
            agents.push_back(entry);
        }
        doc["weights"] = {{"mode", "fixed"}, {"default_lambda", f->default_lambda}, {"agents", agents}};
    } else {
        doc["weights"] = {{"mode", "reward"}, {"initial_lambda", std::get<RewardWeights>(cfg.weights).initial_lambda}};
    }

    if (const auto* g = std::get_if<GaussianUtility>(&cfg.utility))
        doc["utility"] = {{"kind", "gaussian"}, {"mean", g->mean}, {"cov_scale", g->cov_scale}};
    else
        doc["utility"] = {{"kind", "grid"}, {"file", std::get<GridUtility>(cfg.utility).file}};

    doc["run"] = {{"horizon", cfg.run.horizon},
                  {"epsilon", cfg.run.epsilon},
                  {"seed", cfg.run.seed},
                  {"stop_on_convergence", cfg.run.stop_on_convergence}};
    return doc;
}

void save_config(const ScenarioConfig& config, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw InvalidInput("config: cannot write " + file.string());
    out << to_json(config).dump(2) << '\n';
}

}  // namespace fjsteer
