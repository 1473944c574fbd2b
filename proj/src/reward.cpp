#include "fjsteer/reward.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace fjsteer {

struct UtilityField::Impl {
    enum class Kind { gaussian, grid } kind;
    int dim = 0;
    // gaussian
    Eigen::VectorXd mean;
    Eigen::LLT<Eigen::MatrixXd> cov_llt;
    // grid
    std::vector<std::vector<double>> axes;
    std::vector<double> values;
    std::vector<std::size_t> strides;
};

UtilityField UtilityField::gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance) {
    if (mean.size() < 1) throw InvalidInput("utility: gaussian mean is empty");
    if (covariance.rows() != mean.size() || covariance.cols() != mean.size())
        throw InvalidInput("utility: covariance must be n x n with n = mean size");
    auto impl = std::make_shared<Impl>();
    impl->kind = Impl::Kind::gaussian;
    impl->dim = static_cast<int>(mean.size());
    impl->mean = mean;
    impl->cov_llt.compute(covariance);
    if (impl->cov_llt.info() != Eigen::Success || !covariance.isApprox(covariance.transpose()))
        throw InvalidInput("utility: covariance is not symmetric positive definite");
    return UtilityField(std::move(impl));
}

UtilityField UtilityField::grid(std::vector<std::vector<double>> axes, std::vector<double> values) {
    if (axes.empty()) throw InvalidInput("utility: grid needs at least one axis");
    auto impl = std::make_shared<Impl>();
    impl->kind = Impl::Kind::grid;
    impl->dim = static_cast<int>(axes.size());
    std::size_t total = 1;
    for (const auto& axis : axes) {
        if (axis.size() < 2) throw InvalidInput("utility: every grid axis needs at least two points");
        if (axis.front() != 0.0 || axis.back() != 1.0) throw InvalidInput("utility: grid axes must span [0,1]");
        if (!std::is_sorted(axis.begin(), axis.end()) ||
            std::adjacent_find(axis.begin(), axis.end()) != axis.end())
            throw InvalidInput("utility: grid axis coordinates must be strictly increasing");
        impl->strides.push_back(total);
        total *= axis.size();
    }
    if (values.size() != total)
        throw InvalidInput("utility: grid has " + std::to_string(values.size()) + " values, expected " +
                           std::to_string(total));
    for (double v : values)
        if (!(v >= 0) || !std::isfinite(v)) throw InvalidInput("utility: grid values must be finite and nonnegative");
    impl->axes = std::move(axes);
    impl->values = std::move(values);
    return UtilityField(std::move(impl));
}

UtilityField UtilityField::grid_from_csv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw InvalidInput("utility: cannot open grid file " + file.string());
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput("utility: grid file " + file.string() + " is empty");
    const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    if (columns < 2) throw InvalidInput("utility: grid header needs coordinate columns and a value column");
    const std::size_t dim = columns - 1;

    std::vector<std::vector<double>> rows;
    std::vector<std::set<double>> coords(dim);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw InvalidInput("utility: " + file.string() + ":" + std::to_string(lineno) + ": bad number '" + cell +
                                   "'");
            }
        }
        if (row.size() != columns)
            throw InvalidInput("utility: " + file.string() + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(columns) + " columns");
        for (std::size_t d = 0; d < dim; ++d) coords[d].insert(row[d]);
        rows.push_back(std::move(row));
    }
    std::vector<std::vector<double>> axes;
    std::size_t total = 1;
    for (const auto& c : coords) {
        axes.emplace_back(c.begin(), c.end());
        total *= c.size();
    }
    if (rows.size() != total)
        throw InvalidInput("utility: grid file " + file.string() + " does not cover a full tensor lattice");
    std::vector<double> values(total, -1.0);
    for (const auto& row : rows) {
        std::size_t flat = 0, stride = 1;
        for (std::size_t d = 0; d < dim; ++d) {
            const auto pos = static_cast<std::size_t>(
                std::lower_bound(axes[d].begin(), axes[d].end(), row[d]) - axes[d].begin());
            flat += pos * stride;
            stride *= axes[d].size();
        }
        if (values[flat] >= 0) throw InvalidInput("utility: grid file " + file.string() + " repeats a lattice point");
        values[flat] = row[dim];
    }
    return grid(std::move(axes), std::move(values));
}

int UtilityField::dimension() const { return impl_->dim; }

double UtilityField::operator()(const Eigen::VectorXd& o) const {
    const Impl& f = *impl_;
    if (o.size() != f.dim)
        throw InvalidInput("utility: opinion has " + std::to_string(o.size()) + " components, field expects " +
                           std::to_string(f.dim));
    for (Index d = 0; d < o.size(); ++d)
        if (!(o(d) >= 0 && o(d) <= 1)) throw InvalidInput("utility: opinion component outside [0,1]");

    if (f.kind == Impl::Kind::gaussian) {
        const Eigen::VectorXd diff = o - f.mean;
        const double q = diff.dot(f.cov_llt.solve(diff));
        return std::exp(-0.5 * q);
    }

    // multilinear interpolation over the enclosing cell
    std::vector<std::size_t> lower(static_cast<std::size_t>(f.dim));
    std::vector<double> frac(static_cast<std::size_t>(f.dim));
    for (std::size_t d = 0; d < lower.size(); ++d) {
        const auto& axis = f.axes[d];
        auto it = std::upper_bound(axis.begin(), axis.end(), o(static_cast<Index>(d)));
        std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(it - axis.begin()), axis.size() - 1);
        std::size_t lo = hi - 1;
        lower[d] = lo;
        frac[d] = (o(static_cast<Index>(d)) - axis[lo]) / (axis[hi] - axis[lo]);
    }
    double acc = 0;
    for (std::size_t corner = 0; corner < (std::size_t{1} << lower.size()); ++corner) {
        double weight = 1;
        std::size_t flat = 0;
        for (std::size_t d = 0; d < lower.size(); ++d) {
            const bool up = (corner >> d) & 1U;
            weight *= up ? frac[d] : 1 - frac[d];
            flat += (lower[d] + (up ? 1 : 0)) * f.strides[d];
        }
        if (weight != 0) acc += weight * f.values[flat];
    }
    return acc;
}

double evaluate_utility(const UtilityField& field, const Eigen::VectorXd& o) { return field(o); }

double UtilityProbe::operator()(const Eigen::VectorXd& o) {
    ++count_;
    if (audit_) queries_.push_back(o);
    return field_(o);
}

double local_reward_sum(const RewardObservation& obs) {
    double total = obs.own_initial;
    for (const auto& [j, r] : obs.neighbor_rewards) total += r;
    return total;
}

const char* to_string(RowFallback f) {
    switch (f) {
        case RowFallback::none: return "none";
        case RowFallback::kept_previous: return "kept_previous";
        case RowFallback::uniform_weights: return "uniform_weights";
    }
    return "unknown";
}

InfluenceRow update_influence_row(const RewardObservation& obs, const std::optional<InfluenceRow>& previous) {
    if (obs.neighbor_rewards.empty())
        throw InvalidInput("reward: agent " + std::to_string(obs.agent.value) + " has no in-neighbors");
    if (!(obs.own_initial >= 0)) throw InvalidInput("reward: negative initial reward");
    for (const auto& [j, r] : obs.neighbor_rewards)
        if (!(r >= 0)) throw InvalidInput("reward: negative reward observed from agent " + std::to_string(j.value));

    const double total = local_reward_sum(obs);
    if (total <= kVanishingReward) {
        if (!previous)
            throw NumericalFailure("reward: agent " + std::to_string(obs.agent.value) +
                                   " observed zero total reward and has no previous row");
        InfluenceRow kept;
        kept.fallback = RowFallback::kept_previous;
        kept.lambda = previous->lambda;
        kept.L_self = previous->lambda;
        std::map<AgentId, double> old_weights(previous->weights.begin(), previous->weights.end());
        bool same_neighbors = old_weights.size() == obs.neighbor_rewards.size();
        for (const auto& [j, r] : obs.neighbor_rewards) same_neighbors = same_neighbors && old_weights.count(j) > 0;
        const double uniform = 1.0 / static_cast<double>(obs.neighbor_rewards.size());
        for (const auto& [j, r] : obs.neighbor_rewards) {
            // the neighbor set may have been resampled; then only lambda carries over
            const double w = same_neighbors ? old_weights[j] : uniform;
            kept.weights.emplace_back(j, w);
            kept.L_neighbors.emplace_back(j, (1 - kept.lambda) * w);
        }
        return kept;
    }

    InfluenceRow row;
    row.L_self = obs.own_initial / total;
    row.lambda = row.L_self;
    double neighbor_mass = 0;
    for (const auto& [j, r] : obs.neighbor_rewards) {
        row.L_neighbors.emplace_back(j, r / total);
        neighbor_mass += r;
    }

    if (neighbor_mass <= kVanishingReward) {
        row.fallback = RowFallback::uniform_weights;
        const double w = 1.0 / static_cast<double>(obs.neighbor_rewards.size());
        for (const auto& [j, r] : obs.neighbor_rewards) row.weights.emplace_back(j, w);
        return row;
    }
    // L_ij / (1 - L_self) == u_j / sum_j u_j
    for (const auto& [j, r] : obs.neighbor_rewards) row.weights.emplace_back(j, r / neighbor_mass);
    return row;
}

RewardStepResult reward_step(const EdgeSet& edges, const Eigen::MatrixXd& opinions,
                             const Eigen::VectorXd& initial_rewards, UtilityProbe& probe,
                             const std::vector<InfluenceRow>* previous) {
    const Community& c = edges.community();
    if (opinions.rows() != c.agents()) throw InvalidInput("reward_step: opinion matrix row count mismatch");
    if (initial_rewards.size() != c.regular_count()) throw InvalidInput("reward_step: initial reward count mismatch");

    RewardStepResult out;
    out.utilities.resize(c.agents());
    for (Index a = 0; a < c.agents(); ++a) out.utilities(a) = probe(opinions.row(a).transpose());

    out.W = Eigen::MatrixXd::Zero(c.regular_count(), c.agents());
    out.lambda.resize(c.regular_count());
    out.rows.reserve(static_cast<std::size_t>(c.regular_count()));
    for (Index r = 0; r < c.regular_count(); ++r) {
        RewardObservation obs;
        obs.agent = c.regular()[static_cast<std::size_t>(r)];
        obs.own_initial = initial_rewards(r);
        for (AgentId j : edges.in_neighbors_at(r)) obs.neighbor_rewards.emplace_back(j, out.utilities(c.column(j)));

        std::optional<InfluenceRow> prev;
        if (previous && static_cast<std::size_t>(r) < previous->size()) prev = (*previous)[static_cast<std::size_t>(r)];
        InfluenceRow row = update_influence_row(obs, prev);
        if (row.fallback != RowFallback::none) out.flagged.push_back(obs.agent);
        out.lambda(r) = row.lambda;
        for (const auto& [j, w] : row.weights) out.W(r, c.column(j)) = w;
        out.rows.push_back(std::move(row));
    }
    return out;
}

}  // namespace fjsteer
