#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fjsteer/config.hpp"
#include "support.hpp"

using namespace fjsteer;

namespace {

struct Dnn57 {
    ScenarioConfig cfg = builtin_scenario("dnn57");
    Community community = cfg.community();
    EdgeSet edges{community, std::get<LayeredGraph>(cfg.graph).edges};
    LayerPartition layers{community, std::get<LayeredGraph>(cfg.graph).layers};
    Eigen::MatrixXd regular, stubborn;
    SystemMatrices<double> mats;

    // uniform weights with a fixed spread of biases
    Dnn57() : mats(make()) {}

    SystemMatrices<double> make() {
        std::tie(regular, stubborn) = split_by_role<double>(community, cfg.opinions);
        Eigen::VectorXd lambda(community.regular_count());
        for (Index i = 0; i < lambda.size(); ++i) lambda(i) = 0.1 * static_cast<double>(i % 5);
        return assemble_L<double>(uniform_influence<double>(edges), lambda);
    }
    Eigen::VectorXd u() const { return make_input<double>(stubborn, regular); }
};

}  // namespace

TEST_CASE("spectral radius") {
    CHECK(spectral_radius(Eigen::MatrixXd::Zero(3, 3)) == 0.0);
    Eigen::MatrixXd A(2, 2);
    A << 0, 0.5, 0.5, 0;
    CHECK(spectral_radius(A) == doctest::Approx(0.5).epsilon(1e-10));

    Eigen::MatrixXd strict = Eigen::MatrixXd::Zero(4, 4);
    strict.bottomLeftCorner(3, 3).triangularView<Eigen::Lower>().setConstant(0.3);
    CHECK(spectral_radius(strict) == 0.0);

    SUBCASE("agrees with the eigensolver on random nonnegative matrices") {
        std::mt19937_64 rng(21);
        for (int t = 0; t < 100; ++t) {
            const Index m = 1 + fjtest::below(rng, 12);
            Eigen::MatrixXd M(m, m);
            for (Index r = 0; r < m; ++r)
                for (Index c = 0; c < m; ++c) M(r, c) = fjtest::below(rng, 3) == 0 ? fjtest::unit(rng) : 0.0;
            Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
            const double reference = es.eigenvalues().cwiseAbs().maxCoeff();
            CHECK(spectral_radius(M) == doctest::Approx(reference).epsilon(1e-8));
        }
    }
    SUBCASE("signed matrices") {
        Eigen::MatrixXd S(2, 2);
        S << 0, -0.5, 0.5, 0;
        CHECK(spectral_radius(S) == doctest::Approx(0.5).epsilon(1e-12));
    }
    CHECK_THROWS_AS(spectral_radius(Eigen::MatrixXd::Zero(2, 3)), InvalidInput);
}

TEST_CASE("Hurwitz check") {
    const auto zero = check_hurwitz_D(Eigen::MatrixXd::Zero(2, 2));
    CHECK(zero.hurwitz);
    CHECK(zero.D == -Eigen::MatrixXd::Identity(2, 2));

    Eigen::MatrixXd cycle(2, 2);
    cycle << 0, 1, 1, 0;
    const auto closed = check_hurwitz_D(cycle);
    CHECK_FALSE(closed.hurwitz);
    CHECK(closed.spectral_radius_A == doctest::Approx(1.0));

    Dnn57 d;
    CHECK(check_hurwitz_D(d.mats.A()).hurwitz);
    const auto irr = builtin_scenario("irreducible100");
    const EdgeSet e(irr.community(), std::get<StaticGraph>(irr.graph).edges);
    const auto m = assemble_L<double>(uniform_influence<double>(e), Eigen::VectorXd::Zero(96));
    const auto h = check_hurwitz_D(m.A());
    CHECK(h.hurwitz);
    Eigen::EigenSolver<Eigen::MatrixXd> es(m.A(), false);
    CHECK(h.spectral_radius_A == doctest::Approx(es.eigenvalues().cwiseAbs().maxCoeff()).epsilon(1e-8));
}

TEST_CASE("steady-state matrix") {
    SUBCASE("toy") {
        Eigen::MatrixXd W(1, 2);
        W << 0, 1;
        const auto m = assemble_L<double>(W, Eigen::VectorXd::Constant(1, 0.5));
        const auto s = steady_state_matrix(m.A(), m.B());
        REQUIRE(s.unique);
        CHECK(s.C(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(s.C(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
        Eigen::VectorXd u(2);
        u << 1, 0;
        CHECK(equilibrium<double>(s.C, u, 1)(0) == doctest::Approx(0.5).epsilon(1e-15));

        const auto report = containment_check<double>(equilibrium<double>(s.C, u, 1).reshaped(1, 1), s.C,
                                                      u.reshaped(2, 1), 1, false);
        CHECK(report.passed());
        CHECK(report.certificate_checked);
        CHECK_FALSE(report.hull_checked);
    }
    SUBCASE("all biases one") {
        std::mt19937_64 rng(2);
        auto sys = fjtest::random_reachable_system(rng);
        sys.lambda.setOnes();
        const auto m = fjtest::matrices(sys);
        const auto s = steady_state_matrix(m.A(), m.B());
        REQUIRE(s.unique);
        const Index nr = sys.community.regular_count();
        CHECK(s.C.leftCols(sys.community.stubborn_count()).isZero(0));
        CHECK(s.C.rightCols(nr) == Eigen::MatrixXd::Identity(nr, nr));
    }
    SUBCASE("unreachable cycle has no unique equilibrium") {
        Eigen::MatrixXd W(2, 3);
        W << 0, 1, 0, 1, 0, 0;
        const auto m = assemble_L<double>(W, Eigen::VectorXd::Zero(2));
        const auto s = steady_state_matrix(m.A(), m.B());
        CHECK_FALSE(s.unique);
        CHECK(s.diagnosis == "no unique equilibrium");
    }
    SUBCASE("dnn57 rows sum to one and match long iteration") {
        Dnn57 d;
        const auto s = steady_state_matrix(d.mats.A(), d.mats.B());
        REQUIRE(s.unique);
        CHECK((s.C.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-9);
        const Eigen::VectorXd u = d.u();
        Eigen::VectorXd x = vectorize(d.regular);
        for (int k = 0; k < 10000; ++k) x = step_network<double>(x, d.mats, u, 2);
        CHECK((x - equilibrium<double>(s.C, u, 2)).cwiseAbs().maxCoeff() <= 1e-8);
    }
    SUBCASE("constant input is reproduced") {
        std::mt19937_64 rng(13);
        for (int t = 0; t < 20; ++t) {
            const auto sys = fjtest::random_reachable_system(rng);
            const auto m = fjtest::matrices(sys);
            const auto s = steady_state_matrix(m.A(), m.B());
            REQUIRE(s.unique);
            const Index n = sys.community.subjects();
            const Eigen::VectorXd u = Eigen::VectorXd::Constant(sys.community.agents() * n, 0.37);
            CHECK((equilibrium<double>(s.C, u, n).array() - 0.37).abs().maxCoeff() <= 1e-12);
        }
    }
}

TEST_CASE("reduced system") {
    SUBCASE("identity selection leaves the system unchanged") {
        std::mt19937_64 rng(1);
        const auto sys = fjtest::random_reachable_system(rng);
        LayerPartition single(sys.community, {sys.community.regular()});
        const auto m = fjtest::matrices(sys);
        const auto r = reduce_system(m, build_selection_matrices(single));
        CHECK(r.A_bar == m.A());
        CHECK(r.S_bar == m.S());
        CHECK(r.Lambda_bar == m.Lambda());
    }
    SUBCASE("random permutations invert exactly") {
        std::mt19937_64 rng(17);
        for (int t = 0; t < 20; ++t) {
            const auto sys = fjtest::random_layered_system(rng, LayeringMode::weak);
            const auto m = fjtest::matrices(sys);
            const auto r = reduce_system(m, build_selection_matrices(*sys.layers));
            CHECK(r.Q.transpose() * r.A_bar * r.Q == m.A());
            const Index n = sys.community.subjects();
            const Eigen::VectorXd x = vectorize(sys.regular_initial);
            CHECK(unpermute_state(r, permute_state(r, x, n), n) == x);
        }
    }
    SUBCASE("weak layering is block lower triangular") {
        std::mt19937_64 rng(19);
        for (int t = 0; t < 20; ++t) {
            const auto sys = fjtest::random_layered_system(rng, LayeringMode::weak);
            const auto r = reduce_system(fjtest::matrices(sys), build_selection_matrices(*sys.layers));
            for (std::size_t p = 0; p < r.layer_count(); ++p)
                for (std::size_t q = p + 1; q < r.layer_count(); ++q) CHECK(r.A_block(p, q).isZero(0));
        }
    }
}

TEST_CASE("layered dynamics") {
    Dnn57 d;
    const auto r = reduce_system(d.mats, build_selection_matrices(d.layers));
    const Eigen::VectorXd u = d.u();
    const Index n = 2;

    SUBCASE("matches step_network on dnn57 for k = 0..7") {
        Eigen::VectorXd x = vectorize(d.regular);
        auto layers = split_layers(r, x, n);
        const auto initials = split_layers(r, x, n);
        for (int k = 0; k < 8; ++k) {
            x = step_network<double>(x, d.mats, u, n);
            layers = layered_step(layers, r, initials, d.stubborn, LayeringMode::strict);
            CHECK((join_layers(r, layers) - x).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
    SUBCASE("strict layering is fixed from step M on") {
        Eigen::VectorXd x = vectorize(d.regular);
        std::vector<Eigen::VectorXd> xs{x};
        for (int k = 0; k < 8; ++k) xs.push_back(x = step_network<double>(x, d.mats, u, n));
        for (int k = 4; k <= 8; ++k) CHECK((xs[static_cast<std::size_t>(k)] - xs[3]).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((xs[3] - xs[2]).cwiseAbs().maxCoeff() > 0);
    }
    SUBCASE("reduced step agrees with the original step") {
        const Eigen::VectorXd x = vectorize(d.regular);
        const Eigen::VectorXd xb = reduced_step(r, permute_state(r, x, n), reduce_input(r, u, n), n);
        CHECK((unpermute_state(r, xb, n) - step_network<double>(x, d.mats, u, n)).cwiseAbs().maxCoeff() <= 1e-14);
    }
    SUBCASE("single layer reduces to the plain update") {
        std::mt19937_64 rng(23);
        const auto sys = fjtest::random_reachable_system(rng);
        LayerPartition single(sys.community, {sys.community.regular()});
        const auto m = fjtest::matrices(sys);
        const auto rs = reduce_system(m, build_selection_matrices(single));
        const Index ns = sys.community.subjects();
        const Eigen::VectorXd x = vectorize(sys.regular_initial);
        const auto next = layered_step(split_layers(rs, x, ns), rs, split_layers(rs, x, ns), sys.stubborn,
                                       LayeringMode::weak);
        CHECK((join_layers(rs, next) - step_network<double>(x, m, fjtest::input(sys), ns)).cwiseAbs().maxCoeff() <=
              1e-14);
    }
    SUBCASE("mode mismatch is rejected") {
        const EdgeSet same = d.edges.with_edge(AgentId(7), AgentId(8));
        const auto m = assemble_L<double>(uniform_influence<double>(same), Eigen::VectorXd::Zero(52));
        const auto rw = reduce_system(m, build_selection_matrices(d.layers));
        const Eigen::VectorXd x = vectorize(d.regular);
        CHECK_THROWS_AS(layered_step(split_layers(rw, x, n), rw, split_layers(rw, x, n), d.stubborn,
                                     LayeringMode::strict),
                        InvalidInput);
    }
}

TEST_CASE("convergence certificate") {
    Dnn57 d;
    const auto r = reduce_system(d.mats, build_selection_matrices(d.layers));
    const auto cert = convergence_certificate(r, LayeringMode::strict);
    CHECK(cert.finite);
    CHECK(cert.steps == 3);
    CHECK(cert.layer_fixed == std::vector<int>{1, 2, 3});
    CHECK(cert.spectral_radius == 0.0);
    CHECK(matrix_power(r.A_bar, 3).isZero(0));
    CHECK_FALSE(matrix_power(r.A_bar, 2).isZero(0));

    SUBCASE("single stubborn-fed layer") {
        Community c(1, 3, {AgentId(1)});
        EdgeSet e(c, {{AgentId(2), {AgentId(1)}}, {AgentId(3), {AgentId(1)}}});
        const auto m = assemble_L<double>(uniform_influence<double>(e), Eigen::VectorXd::Zero(2));
        const auto one = convergence_certificate(
            reduce_system(m, build_selection_matrices(LayerPartition(c, {c.regular()}))), LayeringMode::strict);
        CHECK(one.finite);
        CHECK(one.steps == 1);
    }
    SUBCASE("irreducible network is asymptotic") {
        const auto irr = builtin_scenario("irreducible100");
        const EdgeSet e(irr.community(), std::get<StaticGraph>(irr.graph).edges);
        const auto m = assemble_L<double>(uniform_influence<double>(e), Eigen::VectorXd::Constant(96, 0.2));
        const auto snap = analyze_system(e, m, Eigen::MatrixXd::Constant(96, 2, 0.5), Eigen::MatrixXd::Constant(4, 2, 0.5),
                                         std::nullopt, 0);
        CHECK_FALSE(snap.layering.has_value());
        CHECK_FALSE(snap.convergence.finite);
        CHECK(snap.spectral_radius < 1.0);
    }
}

TEST_CASE("containment") {
    SUBCASE("zero bias, rectangle of stubborn agents") {
        const auto cfg = builtin_scenario("irreducible100");
        const Community c = cfg.community();
        const EdgeSet e(c, std::get<StaticGraph>(cfg.graph).edges);
        const auto [regular, stubborn] = split_by_role<double>(c, cfg.opinions);
        const auto m = assemble_L<double>(uniform_influence<double>(e), Eigen::VectorXd::Zero(96));
        const auto snap = analyze_system(e, m, regular, stubborn, std::nullopt, 0);
        REQUIRE(snap.unique_equilibrium);
        CHECK(snap.containment.hull_checked);
        CHECK(snap.containment.passed());
        const Eigen::RowVector2d lo = stubborn.colwise().minCoeff(), hi = stubborn.colwise().maxCoeff();
        for (Index i = 0; i < 96; ++i) {
            CHECK((snap.equilibrium.row(i).array() >= lo.array() - 1e-9).all());
            CHECK((snap.equilibrium.row(i).array() <= hi.array() + 1e-9).all());
        }
    }
    SUBCASE("single stubborn agent pulls everyone to its opinion") {
        Community c(2, 4, {AgentId(4)});
        EdgeSet e(c, {{AgentId(1), {AgentId(4), AgentId(2)}}, {AgentId(2), {AgentId(3)}}, {AgentId(3), {AgentId(1)}}});
        const auto m = assemble_L<double>(uniform_influence<double>(e), Eigen::VectorXd::Zero(3));
        Eigen::MatrixXd stubborn(1, 2);
        stubborn << 0.3, 0.8;
        const auto snap = analyze_system(e, m, Eigen::MatrixXd::Random(3, 2).cwiseAbs(), stubborn, std::nullopt, 0);
        REQUIRE(snap.unique_equilibrium);
        CHECK(snap.containment.passed());
        for (Index i = 0; i < 3; ++i) CHECK((snap.equilibrium.row(i) - stubborn.row(0)).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("a point outside the hull is reported") {
        Eigen::MatrixXd C(1, 2);
        C << 0.5, 0.5;
        Eigen::MatrixXd inputs(2, 1);
        inputs << 0.0, 1.0;
        Eigen::MatrixXd x(1, 1);
        x << 0.9;
        const auto report = containment_check<double>(x, C, inputs, 1, true);
        CHECK_FALSE(report.passed());
        CHECK(report.violations.size() == 2);
    }
}

TEST_CASE("convex hull helpers") {
    using hull::Point2;
    const std::vector<Point2> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}};
    const auto h = hull::convex_hull_2d(square);
    CHECK(h.size() == 4);
    CHECK(hull::inside_convex_polygon(h, Point2(0.5, 0.5), 0));
    CHECK(hull::inside_convex_polygon(h, Point2(1.0, 0.5), 1e-12));
    CHECK_FALSE(hull::inside_convex_polygon(h, Point2(1.1, 0.5), 1e-9));
    CHECK(hull::inside_convex_polygon({Point2(0, 0), Point2(1, 1)}, Point2(0.5, 0.5), 1e-12));
    CHECK_FALSE(hull::inside_convex_polygon({Point2(0, 0), Point2(1, 1)}, Point2(0.5, 0.6), 1e-9));

    Eigen::MatrixXd tetra(4, 3);
    tetra << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1;
    CHECK(hull::in_convex_hull(tetra, Eigen::Vector3d(0.2, 0.2, 0.2), 1e-9));
    CHECK_FALSE(hull::in_convex_hull(tetra, Eigen::Vector3d(0.5, 0.5, 0.5), 1e-9));

    Eigen::MatrixXd seg(2, 1);
    seg << 0.2, 0.7;
    CHECK(hull::in_convex_hull(seg, Eigen::VectorXd::Constant(1, 0.4), 1e-9));
    CHECK_FALSE(hull::in_convex_hull(seg, Eigen::VectorXd::Constant(1, 0.8), 1e-9));

    Eigen::MatrixXd A(3, 2);
    A << 1, 0, 0, 1, 1, 1;
    const Eigen::VectorXd x = hull::nnls(A, Eigen::Vector3d(1, -1, 0));
    CHECK(x(0) == doctest::Approx(0.5));
    CHECK(x(1) == doctest::Approx(0.0));
}
