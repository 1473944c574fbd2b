#pragma once

// Stability, equilibrium, reducible-network transformation and containment
// checks for the assembled system matrices. Everything here is a pure
// function of its arguments.

#include "fjsteer/fj_core.hpp"
#include "fjsteer/graph.hpp"
#include "fjsteer/hull.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace fjsteer {

/// max |eigenvalue| via a general eigensolver.
template <typename Derived>
typename Derived::RealScalar spectral_radius_eigensolver(const Eigen::MatrixBase<Derived>& A) {
    using Scalar = typename Derived::Scalar;
    if (A.rows() != A.cols()) throw InvalidInput("spectral_radius: matrix is not square");
    if (A.rows() == 0) return 0;
    Eigen::EigenSolver<Matrix<Scalar>> solver(A.eval(), false);
    if (solver.info() != Eigen::Success) throw NumericalFailure("spectral_radius: eigensolver did not converge");
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

namespace detail {

// Perron root of an irreducible nonnegative block: power iteration on
// block + I (primitive, same Perron vector) bracketed by Collatz-Wielandt
// bounds min_i (Bx)_i/x_i <= rho(B) <= max_i (Bx)_i/x_i.
template <typename Scalar>
Scalar perron_root(const Matrix<Scalar>& block, Scalar rel_tol, int max_iterations) {
    const Index m = block.rows();
    Matrix<Scalar> shifted = block + Matrix<Scalar>::Identity(m, m);
    Vector<Scalar> x = Vector<Scalar>::Ones(m);
    for (int it = 0; it < max_iterations; ++it) {
        const Vector<Scalar> y = shifted * x;
        const Vector<Scalar> ratio = y.cwiseQuotient(x);
        const Scalar lo = ratio.minCoeff();
        const Scalar hi = ratio.maxCoeff();
        if (hi - lo <= rel_tol * hi) return std::max(Scalar(0), (lo + hi) / 2 - Scalar(1));
        x = y / y.maxCoeff();
    }
    return spectral_radius_eigensolver(block);
}

}  // namespace detail

/// Spectral radius of a square matrix. Nonnegative input is split into the
/// irreducible diagonal blocks of its support graph and each block's Perron
/// root is found by bracketed power iteration (1e-10 relative, 10,000
/// iterations, eigensolver fallback). Acyclic support gives exactly 0.
/// Matrices with negative entries go straight to the eigensolver.
template <typename Derived>
typename Derived::Scalar spectral_radius(const Eigen::MatrixBase<Derived>& A, double rel_tol = 1e-10,
                                         int max_iterations = 10000) {
    using Scalar = typename Derived::Scalar;
    if (A.rows() != A.cols()) throw InvalidInput("spectral_radius: matrix is not square");
    const Index m = A.rows();
    if (m == 0) return 0;
    if ((A.array() < 0).any()) return spectral_radius_eigensolver(A);

    std::vector<std::vector<Index>> succ(static_cast<std::size_t>(m));
    for (Index c = 0; c < m; ++c)
        for (Index r = 0; r < m; ++r)
            if (A(r, c) != Scalar(0)) succ[static_cast<std::size_t>(c)].push_back(r);

    Scalar rho = 0;
    for (const auto& comp : strongly_connected_components(succ)) {
        if (comp.size() == 1) {
            rho = std::max(rho, A(comp[0], comp[0]));
            continue;
        }
        Matrix<Scalar> block(static_cast<Index>(comp.size()), static_cast<Index>(comp.size()));
        for (std::size_t r = 0; r < comp.size(); ++r)
            for (std::size_t c = 0; c < comp.size(); ++c)
                block(static_cast<Index>(r), static_cast<Index>(c)) = A(comp[r], comp[c]);
        rho = std::max(rho, detail::perron_root<Scalar>(block, Scalar(rel_tol), max_iterations));
    }
    return rho;
}

template <typename Scalar>
struct HurwitzCheck {
    bool hurwitz = false;
    Matrix<Scalar> D;
    Scalar spectral_radius_A = 0;
};

/// D = -I + A is Hurwitz here exactly when rho(A) < 1: the eigenvalues of D
/// lie in the disk of radius rho(A) centred at -1.
template <typename Derived>
HurwitzCheck<typename Derived::Scalar> check_hurwitz_D(const Eigen::MatrixBase<Derived>& A) {
    using Scalar = typename Derived::Scalar;
    HurwitzCheck<Scalar> out;
    out.spectral_radius_A = spectral_radius(A);
    out.D = A - Matrix<Scalar>::Identity(A.rows(), A.cols());
    out.hurwitz = out.spectral_radius_A < Scalar(1);
    return out;
}

/// Condition estimates beyond this report "no unique equilibrium".
inline constexpr double kMaxConditionEstimate = 1e12;

template <typename Scalar>
struct SteadyState {
    bool unique = false;
    Matrix<Scalar> C;       // N_R x N, empty unless unique
    Scalar rcond = 0;       // reciprocal condition estimate of D
    std::string diagnosis;  // set when !unique
};

/// C = -D^{-1} B from an LU solve of D C = -B.
template <typename DerivedA, typename DerivedB>
SteadyState<typename DerivedA::Scalar> steady_state_matrix(const Eigen::MatrixBase<DerivedA>& A,
                                                           const Eigen::MatrixBase<DerivedB>& B) {
    using Scalar = typename DerivedA::Scalar;
    if (A.rows() != A.cols() || B.rows() != A.rows())
        throw InvalidInput("steady_state_matrix: A must be square with as many rows as B");
    SteadyState<Scalar> out;
    const Matrix<Scalar> D = A - Matrix<Scalar>::Identity(A.rows(), A.cols());
    Eigen::PartialPivLU<Matrix<Scalar>> lu(D);
    out.rcond = lu.rcond();
    if (!(out.rcond >= Scalar(1.0 / kMaxConditionEstimate))) {
        out.diagnosis = "no unique equilibrium";
        return out;
    }
    out.C = lu.solve(-B.eval());
    if (!out.C.allFinite()) {
        out.C.resize(0, 0);
        out.diagnosis = "no unique equilibrium";
        return out;
    }
    out.unique = true;
    return out;
}

/// x* = (I_n (x) C) u.
template <typename Scalar>
Vector<Scalar> equilibrium(const Matrix<Scalar>& C, const Vector<Scalar>& u, Index subjects) {
    if (u.size() != C.cols() * subjects) throw InvalidInput("equilibrium: input length does not match C");
    Vector<Scalar> x(C.rows() * subjects);
    x.reshaped(C.rows(), subjects) = C * u.reshaped(C.cols(), subjects);
    return x;
}

/// Layer-permuted system: Abar = Q A Q^T, Sbar = Q S, Lambdabar = Q Lambda Q^T.
template <typename Scalar>
struct ReducedSystem {
    Matrix<Scalar> A_bar;
    Matrix<Scalar> S_bar;
    Matrix<Scalar> Lambda_bar;
    Matrix<Scalar> Q;  // as Scalar
    Matrix<Scalar> H;
    std::vector<Index> offsets;
    std::vector<Index> sizes;

    std::size_t layer_count() const { return sizes.size(); }
    auto A_block(std::size_t p, std::size_t q) const {
        return A_bar.block(offsets[p], offsets[q], sizes[p], sizes[q]);
    }
    auto Lambda_block(std::size_t p, std::size_t q) const {
        return Lambda_bar.block(offsets[p], offsets[q], sizes[p], sizes[q]);
    }
    auto S_block(std::size_t l) const { return S_bar.middleRows(offsets[l], sizes[l]); }
    auto Q_block(std::size_t l) const { return Q.middleRows(offsets[l], sizes[l]); }
};

template <typename Scalar>
ReducedSystem<Scalar> reduce_system(const SystemMatrices<Scalar>& m, const SelectionMatrices& sel) {
    if (sel.Q.rows() != m.regular_count || sel.H.rows() != m.agent_count)
        throw InvalidInput("reduce_system: selection matrices do not match the system size");
    ReducedSystem<Scalar> r;
    r.Q = sel.Q.cast<Scalar>();
    r.H = sel.H.cast<Scalar>();
    r.A_bar = r.Q * m.A() * r.Q.transpose();
    r.S_bar = r.Q * m.S();
    r.Lambda_bar = r.Q * m.Lambda() * r.Q.transpose();
    r.offsets = sel.offsets;
    for (const auto& q : sel.per_layer) r.sizes.push_back(q.rows());
    return r;
}

/// ubar = (I_n (x) H) u: stubborn opinions unchanged, regular initials permuted.
template <typename Scalar>
Vector<Scalar> reduce_input(const ReducedSystem<Scalar>& r, const Vector<Scalar>& u, Index subjects) {
    const Index na = r.H.rows();
    if (u.size() != na * subjects) throw InvalidInput("reduce_input: input length mismatch");
    Vector<Scalar> out(u.size());
    out.reshaped(na, subjects) = r.H * u.reshaped(na, subjects);
    return out;
}

template <typename Scalar>
Vector<Scalar> permute_state(const ReducedSystem<Scalar>& r, const Vector<Scalar>& x, Index subjects) {
    const Index nr = r.Q.rows();
    Vector<Scalar> out(x.size());
    out.reshaped(nr, subjects) = r.Q * x.reshaped(nr, subjects);
    return out;
}

template <typename Scalar>
Vector<Scalar> unpermute_state(const ReducedSystem<Scalar>& r, const Vector<Scalar>& x_bar, Index subjects) {
    const Index nr = r.Q.rows();
    Vector<Scalar> out(x_bar.size());
    out.reshaped(nr, subjects) = r.Q.transpose() * x_bar.reshaped(nr, subjects);
    return out;
}

/// xbar(k+1) = (I_n (x) Abar) xbar(k) + (I_n (x) [Sbar | Lambdabar]) ubar.
template <typename Scalar>
Vector<Scalar> reduced_step(const ReducedSystem<Scalar>& r, const Vector<Scalar>& x_bar, const Vector<Scalar>& u_bar,
                            Index subjects) {
    const Index nr = r.A_bar.rows();
    const Index ns = r.S_bar.cols();
    if (x_bar.size() != nr * subjects || u_bar.size() != (nr + ns) * subjects)
        throw InvalidInput("reduced_step: dimension mismatch");
    Vector<Scalar> next(x_bar.size());
    const auto U = u_bar.reshaped(nr + ns, subjects);
    next.reshaped(nr, subjects) =
        r.A_bar * x_bar.reshaped(nr, subjects) + r.S_bar * U.topRows(ns) + r.Lambda_bar * U.bottomRows(nr);
    return next;
}

namespace detail {

template <typename Scalar>
void require_layer_structure(const ReducedSystem<Scalar>& r, LayeringMode mode) {
    for (std::size_t p = 0; p < r.layer_count(); ++p)
        for (std::size_t q = p; q < r.layer_count(); ++q) {
            if (q == p && mode == LayeringMode::weak) continue;
            if (!r.A_block(p, q).isZero(0))
                throw InvalidInput(std::string("layered_step: influence block (") + std::to_string(p + 1) + "," +
                                   std::to_string(q + 1) + ") is nonzero, which " + to_string(mode) +
                                   " layering forbids");
        }
}

}  // namespace detail

/// Opinion matrix (N_l x n) of every layer, from the stacked state x.
template <typename Scalar>
std::vector<Matrix<Scalar>> split_layers(const ReducedSystem<Scalar>& r, const Vector<Scalar>& x, Index subjects) {
    const Index nr = r.Q.rows();
    const auto X = x.reshaped(nr, subjects);
    std::vector<Matrix<Scalar>> out;
    for (std::size_t l = 0; l < r.layer_count(); ++l) out.push_back(r.Q_block(l) * X);
    return out;
}

template <typename Scalar>
Vector<Scalar> join_layers(const ReducedSystem<Scalar>& r, const std::vector<Matrix<Scalar>>& layers) {
    const Index nr = r.Q.rows();
    const Index subjects = layers.empty() ? 0 : layers.front().cols();
    Matrix<Scalar> X_bar(nr, subjects);
    for (std::size_t l = 0; l < r.layer_count(); ++l) X_bar.middleRows(r.offsets[l], r.sizes[l]) = layers[l];
    return (r.Q.transpose() * X_bar).reshaped();
}

/// One step of the layer-wise dynamics. Layer l combines the layers it may
/// listen to (h <= l under weak layering, h < l under strict), its own bias
/// term and whatever stubborn input reaches it. Throws if Abar has blocks
/// the mode forbids.
template <typename Scalar>
std::vector<Matrix<Scalar>> layered_step(const std::vector<Matrix<Scalar>>& layers, const ReducedSystem<Scalar>& r,
                                         const std::vector<Matrix<Scalar>>& layer_initials,
                                         const Matrix<Scalar>& stubborn_opinions, LayeringMode mode) {
    if (layers.size() != r.layer_count() || layer_initials.size() != r.layer_count())
        throw InvalidInput("layered_step: layer count mismatch");
    detail::require_layer_structure(r, mode);
    std::vector<Matrix<Scalar>> next;
    next.reserve(layers.size());
    for (std::size_t l = 0; l < r.layer_count(); ++l) {
        Matrix<Scalar> out = r.Lambda_block(l, l) * layer_initials[l] + r.S_block(l) * stubborn_opinions;
        const std::size_t upto = mode == LayeringMode::weak ? l + 1 : l;
        for (std::size_t h = 0; h < upto; ++h) out += r.A_block(l, h) * layers[h];
        next.push_back(std::move(out));
    }
    return next;
}

template <typename Scalar>
Matrix<Scalar> matrix_power(const Matrix<Scalar>& A, int k) {
    Matrix<Scalar> P = Matrix<Scalar>::Identity(A.rows(), A.cols());
    for (int i = 0; i < k; ++i) P = P * A;
    return P;
}

template <typename Scalar>
struct ConvergenceCertificate {
    bool finite = false;            // exact convergence in `steps` steps
    int steps = 0;                  // M when finite
    std::vector<int> layer_fixed;   // per layer: first t with layer rows of Abar^t all zero
    Scalar spectral_radius = 0;     // rho(Abar)
    LayeringMode mode = LayeringMode::weak;
};

/// Strict layering: rows of layer l in Abar^t vanish for t >= l, so layer l
/// stops moving after l steps and the whole state after M. The certificate
/// records, per layer, the first power at which those rows are exactly zero.
/// Other modes only get the asymptotic spectral-radius bound.
template <typename Scalar>
ConvergenceCertificate<Scalar> convergence_certificate(const ReducedSystem<Scalar>& r, LayeringMode mode) {
    ConvergenceCertificate<Scalar> cert;
    cert.mode = mode;
    cert.spectral_radius = spectral_radius(r.A_bar);
    if (mode != LayeringMode::strict) return cert;

    detail::require_layer_structure(r, LayeringMode::strict);
    const auto M = static_cast<int>(r.layer_count());
    cert.layer_fixed.assign(r.layer_count(), -1);
    Matrix<Scalar> P = Matrix<Scalar>::Identity(r.A_bar.rows(), r.A_bar.cols());
    for (int t = 0; t <= M; ++t) {
        for (std::size_t l = 0; l < r.layer_count(); ++l)
            if (cert.layer_fixed[l] < 0 && P.middleRows(r.offsets[l], r.sizes[l]).isZero(0))
                cert.layer_fixed[l] = std::max(t, 1);
        P = P * r.A_bar;
    }
    for (std::size_t l = 0; l < r.layer_count(); ++l)
        if (cert.layer_fixed[l] < 0 || cert.layer_fixed[l] > static_cast<int>(l) + 1)
            throw NumericalFailure("convergence_certificate: layer " + std::to_string(l + 1) +
                                   " is not fixed within its layer depth");
    cert.finite = true;
    cert.steps = M;
    return cert;
}

struct ContainmentViolation {
    Index regular_index = 0;
    std::string kind;  // "certificate" or "hull"
    double magnitude = 0;
};

struct ContainmentReport {
    bool certificate_checked = false;
    bool hull_checked = false;
    std::vector<ContainmentViolation> violations;

    bool passed() const { return violations.empty(); }
};

inline constexpr double kContainmentSlack = 1e-9;

/// Every equilibrium opinion must be the convex combination of the input
/// rows given by its row of C. With all biases zero the opinion must also lie
/// in the convex hull of the stubborn opinions, checked geometrically.
/// `x_star` is N_R x n, `inputs` is the N x n matrix behind u.
template <typename Scalar>
ContainmentReport containment_check(const Matrix<Scalar>& x_star, const Matrix<Scalar>& C,
                                    const Matrix<Scalar>& inputs, Index stubborn_count, bool lambda_all_zero) {
    ContainmentReport report;
    report.certificate_checked = true;
    for (Index i = 0; i < x_star.rows(); ++i) {
        const double neg = std::max(0.0, -static_cast<double>(C.row(i).minCoeff()));
        const double sum_err = std::abs(static_cast<double>(C.row(i).sum()) - 1.0);
        const double repro = (C.row(i) * inputs - x_star.row(i)).cwiseAbs().maxCoeff();
        if (neg > 1e-12 || sum_err > kContainmentSlack || repro > kContainmentSlack)
            report.violations.push_back({i, "certificate", std::max({neg, sum_err, repro})});
    }
    if (lambda_all_zero) {
        report.hull_checked = true;
        const Eigen::MatrixXd stubborn = inputs.topRows(stubborn_count).template cast<double>();
        for (Index i = 0; i < x_star.rows(); ++i) {
            const Eigen::VectorXd p = x_star.row(i).transpose().template cast<double>();
            if (!hull::in_convex_hull(stubborn, p, kContainmentSlack)) report.violations.push_back({i, "hull", 0.0});
        }
    }
    return report;
}

}  // namespace fjsteer
