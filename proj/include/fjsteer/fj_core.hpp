#pragma once

// Friedkin-Johnsen update in per-agent and whole-network form.
//
// Conventions shared by every function here:
//  * agent-indexed columns follow Community's canonical order (regular
//    agents by id, then stubborn agents by id);
//  * an opinion matrix has one row per agent and one column per subject;
//  * the state x stacks subject 1 of every regular agent, then subject 2,
//    and so on, i.e. x = vec(X) with X the N_R x n opinion matrix;
//  * the input u stacks, per subject, the stubborn opinions followed by the
//    regular agents' initial opinions, so B = [S | Lambda] column for column.

#include "fjsteer/graph.hpp"
#include "fjsteer/types.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace fjsteer {

template <typename Derived>
void require_unit_interval(const Eigen::MatrixBase<Derived>& values, const std::string& what) {
    for (Index c = 0; c < values.cols(); ++c)
        for (Index r = 0; r < values.rows(); ++r) {
            const auto v = values(r, c);
            if (!(v >= 0 && v <= 1))
                throw InvalidInput(what + ": entry (" + std::to_string(r) + "," + std::to_string(c) +
                                   ") = " + std::to_string(static_cast<double>(v)) + " outside [0,1]");
        }
}

/// L = [(I - Lambda) W | Lambda], kept whole; the partitions are views.
template <typename Scalar>
struct SystemMatrices {
    Matrix<Scalar> L;
    Index regular_count = 0;
    Index agent_count = 0;

    Index stubborn_count() const { return agent_count - regular_count; }

    auto A() const { return L.leftCols(regular_count); }
    auto B() const { return L.rightCols(agent_count); }
    auto S() const { return L.middleCols(regular_count, stubborn_count()); }
    auto Lambda() const { return L.rightCols(regular_count); }
    Vector<Scalar> lambda() const { return Lambda().diagonal(); }
};

template <typename Scalar>
SystemMatrices<Scalar> assemble_L(const Matrix<Scalar>& W, const Vector<Scalar>& lambda) {
    const Index nr = W.rows();
    const Index n_agents = W.cols();
    if (lambda.size() != nr)
        throw InvalidInput("assemble_L: bias vector has " + std::to_string(lambda.size()) + " entries, W has " +
                           std::to_string(nr) + " rows");
    if (n_agents <= nr) throw InvalidInput("assemble_L: W must have more columns than rows");
    require_unit_interval(lambda, "assemble_L: bias");
    if ((W.array() < 0).any()) throw InvalidInput("assemble_L: W has negative entries");
    for (Index i = 0; i < nr; ++i) {
        const Scalar err = std::abs(W.row(i).sum() - Scalar(1));
        if (!(err <= Scalar(kStochasticTolerance)))
            throw InvalidInput("assemble_L: row " + std::to_string(i) + " of W sums to " +
                               std::to_string(static_cast<double>(W.row(i).sum())));
    }

    SystemMatrices<Scalar> m;
    m.regular_count = nr;
    m.agent_count = n_agents;
    m.L.resize(nr, n_agents + nr);
    m.L.leftCols(n_agents) = (Vector<Scalar>::Ones(nr) - lambda).asDiagonal() * W;
    m.L.rightCols(nr) = lambda.asDiagonal();
    return m;
}

/// Opinion of regular agent `agent` at k+1 from neighbor opinions at k:
/// (1 - lambda) sum_j w_j o_j(k) + lambda o_i(0).
template <typename Scalar>
Vector<Scalar> step_agent(AgentId agent, const std::map<AgentId, Scalar>& weights, Scalar lambda,
                          const std::map<AgentId, Vector<Scalar>>& current, const Vector<Scalar>& initial) {
    Vector<Scalar> pulled = Vector<Scalar>::Zero(initial.size());
    for (const auto& [j, w] : weights) {
        auto it = current.find(j);
        if (it == current.end())
            throw InvalidInput("step_agent: agent " + std::to_string(agent.value) + " is missing the opinion of neighbor " +
                               std::to_string(j.value));
        if (it->second.size() != initial.size()) throw InvalidInput("step_agent: opinion dimension mismatch");
        pulled += w * it->second;
    }
    return (Scalar(1) - lambda) * pulled + lambda * initial;
}

/// x(k+1) = (I_n (x) A) x(k) + (I_n (x) B) u, one subject block at a time.
template <typename Scalar>
Vector<Scalar> step_network(const Vector<Scalar>& x, const SystemMatrices<Scalar>& m, const Vector<Scalar>& u,
                            Index subjects) {
    const Index nr = m.regular_count;
    const Index na = m.agent_count;
    if (x.size() != nr * subjects || u.size() != na * subjects)
        throw InvalidInput("step_network: state has " + std::to_string(x.size()) + " entries and input " +
                           std::to_string(u.size()) + ", expected " + std::to_string(nr * subjects) + " and " +
                           std::to_string(na * subjects));
    Vector<Scalar> next(x.size());
    next.reshaped(nr, subjects) = m.A() * x.reshaped(nr, subjects) + m.B() * u.reshaped(na, subjects);
    return next;
}

template <typename Derived>
Vector<typename Derived::Scalar> vectorize(const Eigen::MatrixBase<Derived>& opinions) {
    return opinions.reshaped();
}

template <typename Scalar>
Matrix<Scalar> devectorize(const Vector<Scalar>& x, Index agents) {
    if (agents <= 0 || x.size() % agents != 0)
        throw InvalidInput("devectorize: length " + std::to_string(x.size()) + " is not a multiple of " +
                           std::to_string(agents));
    return x.reshaped(agents, x.size() / agents);
}

/// Stacks stubborn opinions over regular initial opinions and vectorizes.
template <typename Scalar>
Vector<Scalar> make_input(const Matrix<Scalar>& stubborn, const Matrix<Scalar>& regular_initial) {
    if (stubborn.cols() != regular_initial.cols()) throw InvalidInput("make_input: subject count mismatch");
    Matrix<Scalar> U(stubborn.rows() + regular_initial.rows(), stubborn.cols());
    U << stubborn, regular_initial;
    return vectorize(U);
}

/// Splits an opinion matrix whose rows are indexed by agent id - 1 into the
/// regular (rows in regular-index order) and stubborn parts.
template <typename Scalar>
std::pair<Matrix<Scalar>, Matrix<Scalar>> split_by_role(const Community& community, const Matrix<Scalar>& by_id) {
    if (by_id.rows() != community.agents() || by_id.cols() != community.subjects())
        throw InvalidInput("opinions: expected " + std::to_string(community.agents()) + " x " +
                           std::to_string(community.subjects()) + " matrix");
    Matrix<Scalar> regular(community.regular_count(), by_id.cols());
    Matrix<Scalar> stubborn(community.stubborn_count(), by_id.cols());
    for (Index r = 0; r < community.regular_count(); ++r)
        regular.row(r) = by_id.row(community.regular()[static_cast<std::size_t>(r)].value - 1);
    for (Index s = 0; s < community.stubborn_count(); ++s)
        stubborn.row(s) = by_id.row(community.stubborn()[static_cast<std::size_t>(s)].value - 1);
    return {regular, stubborn};
}

/// W with weight 1/|N_i| on every in-neighbor.
template <typename Scalar>
Matrix<Scalar> uniform_influence(const EdgeSet& edges) {
    const Community& c = edges.community();
    Matrix<Scalar> W = Matrix<Scalar>::Zero(c.regular_count(), c.agents());
    for (Index r = 0; r < c.regular_count(); ++r) {
        const auto& nbrs = edges.in_neighbors_at(r);
        for (AgentId j : nbrs) W(r, c.column(j)) = Scalar(1) / static_cast<Scalar>(nbrs.size());
    }
    return W;
}

/// W from explicit per-agent rows. Every listed weight must be on an
/// in-neighbor; row sums are checked later by assemble_L.
template <typename Scalar>
Matrix<Scalar> influence_from_rows(const EdgeSet& edges, const std::map<AgentId, std::map<AgentId, Scalar>>& rows) {
    const Community& c = edges.community();
    Matrix<Scalar> W = Matrix<Scalar>::Zero(c.regular_count(), c.agents());
    for (const auto& [i, row] : rows) {
        const auto& nbrs = edges.in_neighbors(i);
        for (const auto& [j, w] : row) {
            if (!std::binary_search(nbrs.begin(), nbrs.end(), j))
                throw InvalidInput("weights: agent " + std::to_string(i.value) + " puts weight on non-neighbor " +
                                   std::to_string(j.value));
            W(c.regular_index(i), c.column(j)) = w;
        }
    }
    return W;
}

}  // namespace fjsteer
