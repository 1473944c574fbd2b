#include "fjsteer/simulator.hpp"

#include "fjsteer/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <future>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

namespace fjsteer {

UtilityField make_utility(const UtilitySpec& spec, int subjects, const std::filesystem::path& base_dir) {
    if (const auto* g = std::get_if<GaussianUtility>(&spec)) {
        if (static_cast<int>(g->mean.size()) != subjects)
            throw InvalidInput("utility: mean has " + std::to_string(g->mean.size()) + " entries for " +
                               std::to_string(subjects) + " subjects");
        if (!(g->cov_scale > 0)) throw InvalidInput("utility: cov_scale must be positive");
        const Eigen::VectorXd mean = Eigen::Map<const Eigen::VectorXd>(g->mean.data(), subjects);
        return UtilityField::gaussian(mean, g->cov_scale * Eigen::MatrixXd::Identity(subjects, subjects));
    }
    const auto& grid = std::get<GridUtility>(spec);
    std::filesystem::path file(grid.file);
    if (file.is_relative()) file = base_dir / file;
    UtilityField field = UtilityField::grid_from_csv(file);
    if (field.dimension() != subjects) throw InvalidInput("utility: grid dimension does not match subject count");
    return field;
}

EdgeSet sample_edge_set(const Community& community, const RandomGraph& params, std::uint64_t seed, int k) {
    const int d = params.out_degree;
    if (d < 1 || d >= community.agents())
        throw InvalidInput("random graph: out_degree must satisfy 1 <= d < N (got " + std::to_string(d) + ")");
    if (!(params.allow_stubborn_prob >= 0 && params.allow_stubborn_prob <= 1))
        throw InvalidInput("random graph: allow_stubborn_prob must lie in [0,1]");

    auto rng = substream(seed, static_cast<std::uint64_t>(k));
    std::vector<AgentId> all;
    for (int id = 1; id <= community.agents(); ++id) all.emplace_back(id);

    for (int attempt = 0; attempt < kMaxSamplingAttempts; ++attempt) {
        std::map<AgentId, std::vector<AgentId>> in;
        for (AgentId i : community.regular()) {
            const bool any = uniform_unit(rng) < params.allow_stubborn_prob;
            const auto& source = any ? all : community.regular();
            std::vector<AgentId> pool;
            pool.reserve(source.size());
            for (AgentId j : source)
                if (j != i) pool.push_back(j);
            const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(d), pool.size());
            for (std::size_t t = 0; t < take; ++t) {
                const auto pick = t + uniform_below(rng, pool.size() - t);
                std::swap(pool[t], pool[pick]);
            }
            pool.resize(take);
            if (pool.empty())
                throw InvalidInput("random graph: agent " + std::to_string(i.value) + " has no candidate neighbors");
            in.emplace(i, std::move(pool));
        }
        EdgeSet edges(community, in, k);
        if (!params.require_reachability || all_stubborn_reachable(edges)) return edges;
    }
    throw SamplingError("random graph: no stubborn-reachable edge set after " + std::to_string(kMaxSamplingAttempts) +
                        " attempts at step " + std::to_string(k) + "; increase out_degree (currently " +
                        std::to_string(d) + ")");
}

Eigen::MatrixXd TrajectoryLog::regular_state(std::size_t entry, const Community& community) const {
    return entries.at(entry).opinions.topRows(community.regular_count());
}

ConvergenceDetection detect_convergence(const TrajectoryLog& log, double epsilon) {
    if (log.entries.empty()) throw InvalidInput("detect_convergence: empty log");
    ConvergenceDetection out;
    for (std::size_t k = 0; k + 1 < log.entries.size(); ++k) {
        const double delta = (log.entries[k + 1].opinions - log.entries[k].opinions).cwiseAbs().maxCoeff();
        if (delta < epsilon) {
            out.step = log.entries[k].k;
            out.matrices_static = log.entries[k].matrices_static;
            return out;
        }
    }
    return out;
}

AnalysisSnapshot analyze_system(const EdgeSet& edges, const SystemMatrices<double>& mats,
                                const Eigen::MatrixXd& regular_initial, const Eigen::MatrixXd& stubborn,
                                const std::optional<LayerPartition>& declared_layers, int step) {
    const Community& c = edges.community();
    const Index n = c.subjects();
    AnalysisSnapshot snap;
    snap.step = step;

    const auto hurwitz = check_hurwitz_D(mats.A());
    snap.spectral_radius = hurwitz.spectral_radius_A;
    snap.hurwitz = hurwitz.hurwitz;

    const auto steady = steady_state_matrix(mats.A(), mats.B());
    snap.rcond = steady.rcond;
    snap.unique_equilibrium = steady.unique;
    snap.equilibrium_status = steady.unique ? "unique" : steady.diagnosis;
    if (steady.unique) {
        snap.C = steady.C;
        snap.row_sum_error_max = (steady.C.rowwise().sum().array() - 1.0).abs().maxCoeff();
        snap.min_C_entry = steady.C.minCoeff();
        const Eigen::VectorXd u = make_input<double>(stubborn, regular_initial);
        snap.equilibrium = devectorize<double>(equilibrium<double>(steady.C, u, n), c.regular_count());

        Eigen::MatrixXd inputs(c.agents(), n);
        inputs << stubborn, regular_initial;
        const bool lambda_zero = (mats.lambda().array() == 0.0).all();
        snap.containment = containment_check<double>(snap.equilibrium, steady.C, inputs, c.stubborn_count(), lambda_zero);
    }

    std::optional<LayerPartition> partition;
    std::optional<LayeringMode> mode;
    if (declared_layers) {
        partition = declared_layers;
        if (validate_layering(edges, *declared_layers, LayeringMode::strict))
            mode = LayeringMode::strict;
        else if (validate_layering(edges, *declared_layers, LayeringMode::weak))
            mode = LayeringMode::weak;
    }
    if (!mode) {
        if (auto inferred = infer_layering(edges)) {
            partition = inferred->partition;
            mode = inferred->mode;
        }
    }
    snap.layering = mode;
    if (mode) {
        const auto reduced = reduce_system(mats, build_selection_matrices(*partition));
        snap.layer_count = partition->layer_count();
        snap.convergence = convergence_certificate(reduced, *mode);
    } else {
        snap.convergence.finite = false;
        snap.convergence.spectral_radius = snap.spectral_radius;
    }
    return snap;
}

namespace {

std::string with_step(int k, const std::exception& e) { return "step " + std::to_string(k) + ": " + e.what(); }

struct PreparedScenario {
    Community community;
    Eigen::MatrixXd regular_initial;
    Eigen::MatrixXd stubborn;
    Eigen::VectorXd u;
    std::optional<EdgeSet> static_edges;
    std::optional<LayerPartition> layers;
};

PreparedScenario prepare(const ScenarioConfig& config) {
    Community community = config.community();
    require_unit_interval(config.opinions, "opinions");
    auto [regular, stubborn] = split_by_role<double>(community, config.opinions);
    PreparedScenario p{community, regular, stubborn, make_input<double>(stubborn, regular), std::nullopt, std::nullopt};
    if (const auto* s = std::get_if<StaticGraph>(&config.graph)) {
        p.static_edges.emplace(community, s->edges);
    } else if (const auto* l = std::get_if<LayeredGraph>(&config.graph)) {
        p.static_edges.emplace(community, l->edges);
        p.layers.emplace(community, l->layers);
        if (!validate_layering(*p.static_edges, *p.layers, LayeringMode::weak))
            throw InvalidInput("graph: declared layers violate the layering condition (an agent listens to a later layer)");
    }
    if (config.run.horizon < 1) throw InvalidInput("run: horizon must be >= 1");
    if (!(config.run.epsilon > 0)) throw InvalidInput("run: epsilon must be positive");
    return p;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> fixed_matrices(const FixedWeights& fw, const EdgeSet& edges) {
    const Community& c = edges.community();
    Eigen::MatrixXd W = uniform_influence<double>(edges);
    if (!fw.rows.empty()) {
        const Eigen::MatrixXd explicit_rows = influence_from_rows<double>(edges, fw.rows);
        for (const auto& [i, row] : fw.rows) W.row(c.regular_index(i)) = explicit_rows.row(c.regular_index(i));
    }
    Eigen::VectorXd lambda = Eigen::VectorXd::Constant(c.regular_count(), fw.default_lambda);
    for (const auto& [i, l] : fw.lambda) lambda(c.regular_index(i)) = l;
    return {W, lambda};
}

RunResult run_impl(const ScenarioConfig& config, std::vector<Eigen::VectorXd>* audit) {
    PreparedScenario prep = prepare(config);
    const Community& c = prep.community;
    const Index n = c.subjects();
    const UtilityField field = make_utility(config.utility, c.subjects(), config.base_dir);
    UtilityProbe probe(field, audit != nullptr);

    const auto* random = std::get_if<RandomGraph>(&config.graph);
    const auto* fixed = std::get_if<FixedWeights>(&config.weights);
    const auto* reward = std::get_if<RewardWeights>(&config.weights);

    Eigen::MatrixXd opinions(c.agents(), n);
    opinions << prep.regular_initial, prep.stubborn;

    // u_i(0), computed once
    Eigen::VectorXd initial_rewards(c.regular_count());
    for (Index r = 0; r < c.regular_count(); ++r) initial_rewards(r) = probe(prep.regular_initial.row(r).transpose());

    std::vector<InfluenceRow> previous_rows;
    if (reward) {
        if (!(reward->initial_lambda >= 0 && reward->initial_lambda <= 1))
            throw InvalidInput("weights: initial_lambda must lie in [0,1]");
    }

    RunResult result;
    RunReport& report = result.report;
    report.scenario_name = config.name;
    report.seed = config.run.seed;
    report.update_order = random ? "sample edges, reward round at x(k), rebuild W and Lambda, advance opinions"
                                 : "reward round at x(k), rebuild W and Lambda, advance opinions";
    if (!reward) report.update_order = random ? "sample edges, rebuild W, advance opinions" : "advance opinions";

    Eigen::VectorXd x = vectorize(prep.regular_initial);
    std::optional<EdgeSet> edges = prep.static_edges;
    Eigen::MatrixXd W, prev_W;
    Eigen::VectorXd lambda, prev_lambda;
    std::optional<SystemMatrices<double>> mats;

    int k = 0;
    for (; k < config.run.horizon; ++k) {
        try {
            if (random) edges.emplace(sample_edge_set(c, *random, config.run.seed, k));

            LogEntry entry;
            entry.k = k;
            entry.opinions = opinions;
            entry.edge_digest = edges->digest();

            if (reward) {
                if (previous_rows.empty()) {
                    // seed rows for the vanishing-reward fallback
                    for (Index r = 0; r < c.regular_count(); ++r) {
                        InfluenceRow seed_row;
                        seed_row.lambda = reward->initial_lambda;
                        const auto& nbrs = edges->in_neighbors_at(r);
                        for (AgentId j : nbrs) seed_row.weights.emplace_back(j, 1.0 / static_cast<double>(nbrs.size()));
                        previous_rows.push_back(std::move(seed_row));
                    }
                }
                RewardStepResult rs = reward_step(*edges, opinions, initial_rewards, probe, &previous_rows);
                for (AgentId a : rs.flagged) report.fallbacks.emplace_back(k, a);
                W = std::move(rs.W);
                lambda = std::move(rs.lambda);
                entry.utilities = rs.utilities;
                previous_rows = std::move(rs.rows);
            } else {
                if (k == 0 || random) std::tie(W, lambda) = fixed_matrices(*fixed, *edges);
                entry.utilities.resize(c.agents());
                for (Index a = 0; a < c.agents(); ++a) entry.utilities(a) = probe(opinions.row(a).transpose());
            }

            mats = assemble_L<double>(W, lambda);
            entry.lambda = lambda;
            entry.row_sum_error = (mats->L.rowwise().sum().array() - 1.0).abs().maxCoeff();
            entry.matrices_static = k > 0 && W.rows() == prev_W.rows() && W == prev_W && lambda == prev_lambda;
            if (fixed && !random) entry.matrices_static = true;
            prev_W = W;
            prev_lambda = lambda;

            const Eigen::VectorXd next = step_network<double>(x, *mats, prep.u, n);
            if (!next.allFinite()) throw NumericalFailure("opinion update produced non-finite values");
            const double delta = (next - x).cwiseAbs().maxCoeff();
            report.step_deltas.push_back(delta);
            const bool stop = config.run.stop_on_convergence && delta < config.run.epsilon && entry.matrices_static;
            result.log.entries.push_back(std::move(entry));

            x = next;
            opinions.topRows(c.regular_count()) = devectorize<double>(x, c.regular_count());
            if (stop) {
                ++k;
                break;
            }
        } catch (const SamplingError& e) {
            throw SamplingError(with_step(k, e));
        } catch (const InvalidInput& e) {
            throw InvalidInput(with_step(k, e));
        } catch (const NumericalFailure& e) {
            throw NumericalFailure(with_step(k, e));
        }
    }
    report.steps_run = k;

    LogEntry last;
    last.k = k;
    last.opinions = opinions;
    last.lambda = lambda;
    last.utilities.resize(c.agents());
    for (Index a = 0; a < c.agents(); ++a) last.utilities(a) = probe(opinions.row(a).transpose());
    last.row_sum_error = result.log.entries.back().row_sum_error;
    last.edge_digest = edges->digest();
    last.matrices_static = result.log.entries.back().matrices_static;
    result.log.entries.push_back(std::move(last));

    const auto detection = detect_convergence(result.log, config.run.epsilon);
    report.converged = detection.step.has_value();
    report.convergence_step = detection.step;
    report.static_at_convergence = detection.matrices_static;

    try {
        report.analysis = analyze_system(*edges, *mats, prep.regular_initial, prep.stubborn,
                                         random ? std::nullopt : prep.layers, k - 1);
    } catch (const InvalidInput& e) {
        throw InvalidInput(std::string("analysis: ") + e.what());
    }
    report.final_equilibrium_gap =
        report.analysis.unique_equilibrium
            ? (opinions.topRows(c.regular_count()) - report.analysis.equilibrium).cwiseAbs().maxCoeff()
            : std::numeric_limits<double>::quiet_NaN();

    if (audit) *audit = probe.queries();
    return result;
}

}  // namespace

RunResult run(const ScenarioConfig& config) { return run_impl(config, nullptr); }

RunResult run_audited(const ScenarioConfig& config, std::vector<Eigen::VectorXd>& audit) {
    return run_impl(config, &audit);
}

MonteCarloSummary monte_carlo(const ScenarioConfig& config, const std::vector<std::uint64_t>& seeds) {
    if (seeds.empty()) throw InvalidInput("monte_carlo: at least one seed is required");

    using Outcome = std::pair<std::optional<RunReport>, std::string>;
    auto one = [&config](std::uint64_t seed) -> Outcome {
        ScenarioConfig cfg = config;
        cfg.run.seed = seed;
        try {
            return {run(cfg).report, {}};
        } catch (const std::exception& e) {
            return {std::nullopt, e.what()};
        }
    };

    std::vector<Outcome> outcomes(seeds.size());
    const std::size_t width = std::max(1U, std::thread::hardware_concurrency());
    for (std::size_t start = 0; start < seeds.size(); start += width) {
        std::vector<std::future<Outcome>> batch;
        const std::size_t end = std::min(seeds.size(), start + width);
        for (std::size_t s = start; s < end; ++s) batch.push_back(std::async(std::launch::async, one, seeds[s]));
        for (std::size_t s = start; s < end; ++s) outcomes[s] = batch[s - start].get();
    }

    MonteCarloSummary summary;
    double step_sum = 0, dist_sum = 0;
    int step_count = 0, pass = 0;
    const auto* gaussian = std::get_if<GaussianUtility>(&config.utility);
    const Community community = config.community();
    for (std::size_t s = 0; s < seeds.size(); ++s) {
        if (!outcomes[s].first) {
            summary.errors.emplace_back(seeds[s], outcomes[s].second);
            continue;
        }
        const RunReport& r = *outcomes[s].first;
        if (r.convergence_step) {
            step_sum += *r.convergence_step;
            ++step_count;
        }
        if (r.analysis.containment.passed() && r.analysis.unique_equilibrium) ++pass;
        if (gaussian && r.analysis.unique_equilibrium) {
            const Eigen::RowVectorXd mean =
                Eigen::Map<const Eigen::RowVectorXd>(gaussian->mean.data(), static_cast<Index>(gaussian->mean.size()));
            dist_sum += (r.analysis.equilibrium.rowwise() - mean).rowwise().norm().mean();
        }
        summary.reports.emplace_back(seeds[s], r);
    }
    if (step_count > 0) summary.mean_convergence_step = step_sum / step_count;
    if (!summary.reports.empty()) {
        summary.containment_pass_rate = static_cast<double>(pass) / static_cast<double>(summary.reports.size());
        if (gaussian) summary.mean_distance_to_utility_mean = dist_sum / static_cast<double>(summary.reports.size());
    }
    return summary;
}

namespace {

void put_double(std::ostream& out, double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, res.ptr - buf);
}

double parse_double(std::string_view cell) {
    double v = 0;
    auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
        throw InvalidInput("trajectory csv: bad number '" + std::string(cell) + "'");
    return v;
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const TrajectoryLog& log, const Community& community) {
    out << "k,agent_id,subject,opinion,lambda,utility\n";
    for (const auto& e : log.entries) {
        for (int id = 1; id <= community.agents(); ++id) {
            const AgentId agent(id);
            const Index col = community.column(agent);
            const double lambda = community.is_stubborn(agent) ? 1.0 : e.lambda(col);
            for (int s = 0; s < community.subjects(); ++s) {
                out << e.k << ',' << id << ',' << (s + 1) << ',';
                put_double(out, e.opinions(col, s));
                out << ',';
                put_double(out, lambda);
                out << ',';
                put_double(out, e.utilities(col));
                out << '\n';
            }
        }
    }
}

TrajectoryLog read_trajectory_csv(std::istream& in, const Community& community) {
    std::string line;
    if (!std::getline(in, line) || line != "k,agent_id,subject,opinion,lambda,utility")
        throw InvalidInput("trajectory csv: unexpected header");
    TrajectoryLog log;
    const Index n = community.subjects();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string_view> cells;
        std::string_view rest(line);
        for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos; rest.remove_prefix(pos + 1))
            cells.push_back(rest.substr(0, pos));
        cells.push_back(rest);
        if (cells.size() != 6) throw InvalidInput("trajectory csv: expected 6 columns in '" + line + "'");
        const int k = static_cast<int>(parse_double(cells[0]));
        const AgentId agent(static_cast<int>(parse_double(cells[1])));
        const int subject = static_cast<int>(parse_double(cells[2]));
        if (!community.contains(agent) || subject < 1 || subject > n)
            throw InvalidInput("trajectory csv: agent/subject out of range in '" + line + "'");
        if (log.entries.empty() || log.entries.back().k != k) {
            LogEntry e;
            e.k = k;
            e.opinions = Eigen::MatrixXd::Zero(community.agents(), n);
            e.lambda = Eigen::VectorXd::Zero(community.regular_count());
            e.utilities = Eigen::VectorXd::Zero(community.agents());
            log.entries.push_back(std::move(e));
        }
        LogEntry& e = log.entries.back();
        const Index col = community.column(agent);
        e.opinions(col, subject - 1) = parse_double(cells[3]);
        if (community.is_regular(agent)) e.lambda(col) = parse_double(cells[4]);
        e.utilities(col) = parse_double(cells[5]);
    }
    return log;
}

bool same_csv_content(const TrajectoryLog& a, const TrajectoryLog& b) {
    if (a.entries.size() != b.entries.size()) return false;
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        const auto& x = a.entries[i];
        const auto& y = b.entries[i];
        if (x.k != y.k || x.opinions.rows() != y.opinions.rows() || x.opinions.cols() != y.opinions.cols() ||
            x.lambda.size() != y.lambda.size() || x.utilities.size() != y.utilities.size())
            return false;
        if (x.opinions != y.opinions || x.lambda != y.lambda || x.utilities != y.utilities) return false;
    }
    return true;
}

}  // namespace fjsteer
