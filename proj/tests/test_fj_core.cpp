#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

using namespace fjsteer;

namespace {

SystemMatrices<double> toy() {
    Eigen::MatrixXd W(1, 2);
    W << 0, 1;
    return assemble_L<double>(W, Eigen::VectorXd::Constant(1, 0.5));
}

}  // namespace

TEST_CASE("assemble_L on the one-regular-agent system") {
    const auto m = toy();
    Eigen::MatrixXd L(1, 3);
    L << 0, 0.5, 0.5;
    CHECK(m.L == L);
    CHECK(m.A()(0, 0) == 0.0);
    CHECK(m.B() == L.rightCols(2));
    CHECK(m.S()(0, 0) == 0.5);
    CHECK(m.Lambda()(0, 0) == 0.5);
}

TEST_CASE("assemble_L at the bias extremes") {
    std::mt19937_64 rng(3);
    const auto s = fjtest::random_reachable_system(rng);
    const Index nr = s.community.regular_count();
    const Index n = s.community.agents();

    const auto stubborn_all = assemble_L<double>(s.W, Eigen::VectorXd::Ones(nr));
    CHECK(stubborn_all.A().isZero(0));
    CHECK(stubborn_all.L.leftCols(n).isZero(0));
    CHECK(stubborn_all.Lambda() == Eigen::MatrixXd::Identity(nr, nr));

    const auto no_bias = assemble_L<double>(s.W, Eigen::VectorXd::Zero(nr));
    CHECK(no_bias.L.leftCols(n) == s.W);
    CHECK(no_bias.Lambda().isZero(0));
}

TEST_CASE("assemble_L rejects malformed inputs") {
    Eigen::MatrixXd W(1, 2);
    W << 0.3, 0.6;
    CHECK_THROWS_AS(assemble_L<double>(W, Eigen::VectorXd::Constant(1, 0.5)), InvalidInput);
    W << -0.5, 1.5;
    CHECK_THROWS_AS(assemble_L<double>(W, Eigen::VectorXd::Constant(1, 0.5)), InvalidInput);
    W << 0, 1;
    CHECK_THROWS_AS(assemble_L<double>(W, Eigen::VectorXd::Constant(1, 1.5)), InvalidInput);
    CHECK_THROWS_AS(assemble_L<double>(W, Eigen::VectorXd::Constant(2, 0.5)), InvalidInput);
}

TEST_CASE("L rows sum to one") {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 50; ++t) {
        const auto m = fjtest::matrices(fjtest::random_reachable_system(rng));
        CHECK((m.L.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("step_agent") {
    using V = Eigen::VectorXd;
    const AgentId self(1), a(2), b(3);
    SUBCASE("half bias, one neighbor") {
        const V out = step_agent<double>(self, {{a, 1.0}}, 0.5, {{a, V::Constant(1, 1.0)}}, V::Constant(1, 0.0));
        CHECK(out(0) == doctest::Approx(0.5).epsilon(1e-15));
    }
    SUBCASE("fully stubborn") {
        const V out = step_agent<double>(self, {{a, 1.0}}, 1.0, {{a, V::Constant(1, 0.9)}}, V::Constant(1, 0.3));
        CHECK(out(0) == 0.3);
    }
    SUBCASE("no bias, weighted neighbors") {
        const V out = step_agent<double>(self, {{a, 0.25}, {b, 0.75}}, 0.0,
                                         {{a, V::Constant(1, 0.2)}, {b, V::Constant(1, 0.6)}}, V::Constant(1, 0.0));
        CHECK(out(0) == doctest::Approx(0.5).epsilon(1e-15));
    }
    SUBCASE("missing neighbor opinion") {
        CHECK_THROWS_AS(step_agent<double>(self, {{a, 1.0}}, 0.5, {}, V::Constant(1, 0.0)), InvalidInput);
    }
}

TEST_CASE("step_network") {
    SUBCASE("toy system") {
        Eigen::VectorXd u(2);
        u << 1, 0;
        const Eigen::VectorXd x1 = step_network<double>(Eigen::VectorXd::Zero(1), toy(), u, 1);
        CHECK(x1(0) == doctest::Approx(0.5).epsilon(1e-15));
    }
    SUBCASE("pure bias is a fixed point after one step") {
        std::mt19937_64 rng(4);
        auto s = fjtest::random_reachable_system(rng);
        s.lambda.setOnes();
        const auto m = fjtest::matrices(s);
        const Eigen::VectorXd u = fjtest::input(s);
        const Eigen::VectorXd x0 = Eigen::VectorXd::Random(s.community.regular_count() * s.community.subjects());
        const Eigen::VectorXd x1 = step_network<double>(x0, m, u, s.community.subjects());
        CHECK(x1 == vectorize(s.regular_initial));
        CHECK(step_network<double>(x1, m, u, s.community.subjects()) == x1);
    }
    SUBCASE("matches agent-by-agent updates, subjects independent") {
        std::mt19937_64 rng(9);
        for (int t = 0; t < 30; ++t) {
            const auto s = fjtest::random_reachable_system(rng);
            const auto m = fjtest::matrices(s);
            const Index n = s.community.subjects();
            const Eigen::VectorXd x0 = vectorize(s.regular_initial);
            const Eigen::MatrixXd next = devectorize<double>(step_network<double>(x0, m, fjtest::input(s), n),
                                                             s.community.regular_count());
            CHECK((next - fjtest::iterate_reference(s, s.regular_initial, 1)).cwiseAbs().maxCoeff() <= 1e-14);
            for (Index d = 0; d < n; ++d) {
                const Eigen::VectorXd one = step_network<double>(s.regular_initial.col(d), m,
                                                                 make_input<double>(s.stubborn.col(d), s.regular_initial.col(d)), 1);
                CHECK(one == next.col(d));
            }
        }
    }
}

TEST_CASE("vectorize stacks subjects") {
    Eigen::MatrixXd X(2, 2);
    X << 1, 2, 3, 4;  // rows: agents, columns: subjects
    Eigen::VectorXd expected(4);
    expected << 1, 3, 2, 4;
    CHECK(vectorize(X) == expected);
    CHECK(devectorize<double>(expected, 2) == X);

    const Eigen::MatrixXd single = Eigen::MatrixXd::Random(5, 1);
    CHECK(vectorize(single) == single.col(0));

    const Eigen::MatrixXd R = Eigen::MatrixXd::Random(7, 3);
    CHECK(devectorize<double>(vectorize(R), 7) == R);
    CHECK_THROWS_AS(devectorize<double>(Eigen::VectorXd::Zero(5), 2), InvalidInput);
}

TEST_CASE("split_by_role and influence matrices follow canonical order") {
    Community c(1, 4, {AgentId(2)});
    Eigen::MatrixXd by_id(4, 1);
    by_id << 0.1, 0.2, 0.3, 0.4;
    const auto [regular, stubborn] = split_by_role<double>(c, by_id);
    CHECK(regular.col(0) == Eigen::Vector3d(0.1, 0.3, 0.4));
    CHECK(stubborn(0, 0) == 0.2);

    EdgeSet e(c, {{AgentId(1), {AgentId(2), AgentId(3)}}, {AgentId(3), {AgentId(2)}}, {AgentId(4), {AgentId(1)}}});
    const Eigen::MatrixXd W = uniform_influence<double>(e);
    CHECK(W(0, c.column(AgentId(2))) == 0.5);
    CHECK(W(0, c.column(AgentId(3))) == 0.5);
    CHECK(W(1, c.column(AgentId(2))) == 1.0);
    CHECK(W(2, c.column(AgentId(1))) == 1.0);
    CHECK((W.rowwise().sum().array() == 1.0).all());

    const Eigen::MatrixXd custom = influence_from_rows<double>(
        e, {{AgentId(1), {{AgentId(2), 0.25}, {AgentId(3), 0.75}}},
            {AgentId(3), {{AgentId(2), 1.0}}},
            {AgentId(4), {{AgentId(1), 1.0}}}});
    CHECK(custom(0, c.column(AgentId(3))) == 0.75);
    CHECK_THROWS_AS(influence_from_rows<double>(e, {{AgentId(1), {{AgentId(4), 1.0}}}}), InvalidInput);
}

TEST_CASE("float scalar instantiation") {
    Eigen::MatrixXf W(1, 2);
    W << 0, 1;
    const auto m = assemble_L<float>(W, Eigen::VectorXf::Constant(1, 0.5f));
    Eigen::VectorXf u(2);
    u << 1, 0;
    CHECK(step_network<float>(Eigen::VectorXf::Zero(1), m, u, 1)(0) == doctest::Approx(0.5));
}
