#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mayer/sensitivity.hpp"
#include "oracles.hpp"

using namespace mayer;
using oracle::vec1;
using oracle::vec2;

namespace {

GridValueFunction box_grid() {
    auto sc = oracle::box1d_scenario();
    GridSpec s;
    s.dim = 1;
    s.lower = vec1(-3.5);
    s.upper = vec1(7.5);
    s.points_per_axis = 881;
    s.time_steps = 800;
    s.t0 = sc.t0;
    s.T = sc.T;
    return solve_value_function(sc, s, 2, 1.3e-3);
}

SensitivityOptions box_opts() {
    SensitivityOptions o;
    o.steps = 1000;
    o.probes.r0_cells = 64.0;
    o.terminal_state = vec1(1.0);
    return o;
}

Mat mat1(double v) {
    Mat m(1, 1);
    m << v;
    return m;
}

} // namespace

TEST_CASE("first-order propagation along the 1-D optimal arc") {
    auto sc = oracle::box1d_scenario();
    auto g = box_grid();
    auto rep = verify_first_order_propagation(sc, g, box_opts());
    CHECK(rep.verdict == Verdict::pass);
    CHECK(rep.premise_ok);
    // V is exactly quadratic along the tube: one uniform c near zero
    CHECK(rep.fitted_constants.at("c_proximal_uniform") <= 1e-2);
    // gradient relation at the sampled times
    for (const auto& n : rep.nodes)
        if (n.detail == "numerical_gradient + p") CHECK(n.residual <= 5e-2);
}

TEST_CASE("first-order propagation refuses a degenerate seed") {
    // x0 deep in the flat region: the grid gradient vanishes and no dual
    // arc can be seeded, which is a failed hypothesis, not a counterexample
    auto sc = oracle::box1d_scenario(0.0);
    auto g = box_grid();
    auto rep = verify_first_order_propagation(sc, g, box_opts());
    CHECK(rep.verdict == Verdict::inconclusive);
    CHECK(!rep.premise_ok);
}

TEST_CASE("affine cost: value function affine, c fitted to zero") {
    auto sc = oracle::box1d_scenario();
    Mat A = Mat::Zero(1, 1);
    sc.cost = make_quadratic_cost(A, vec1(1.0), 0.0);
    sc.cost.semiconcave = true;
    GridSpec s;
    s.dim = 1;
    s.lower = vec1(-3.5);
    s.upper = vec1(7.5);
    s.points_per_axis = 881;
    s.time_steps = 800;
    s.t0 = sc.t0;
    s.T = sc.T;
    auto g = solve_value_function(sc, s, 2, 1.3e-3);
    auto opts = box_opts();
    opts.terminal_state = vec1(1.0);
    auto rep = verify_first_order_propagation(sc, g, opts);
    CHECK(rep.verdict == Verdict::pass);
    CHECK(rep.fitted_constants.at("c_proximal_uniform") <= 1e-3);
}

TEST_CASE("subjet propagation along the 1-D arc") {
    auto sc = oracle::box1d_scenario();
    auto g = box_grid();
    auto opts = box_opts();

    SUBCASE("exact curvature R0 = -2 passes at all sampled times") {
        auto rep = verify_subjet_propagation(sc, g, mat1(-2.0), opts);
        CHECK(rep.verdict == Verdict::pass);
        CHECK(rep.premise_ok);
        // semiconcave phi: the flow must be complete (no frontier recorded)
        CHECK(rep.fitted_constants.find("frontier_a") ==
              rep.fitted_constants.end());
    }
    SUBCASE("smaller candidate curvature still passes (downward closure)") {
        auto rep = verify_subjet_propagation(sc, g, mat1(-1.5), opts);
        CHECK(rep.verdict == Verdict::pass);
    }
    SUBCASE("overshooting curvature fails the premise at t0") {
        auto rep = verify_subjet_propagation(sc, g, mat1(-2.5), opts);
        CHECK(!rep.premise_ok);
        CHECK(rep.verdict == Verdict::inconclusive);
    }
}

TEST_CASE("superjet propagation along the 1-D arc") {
    auto sc = oracle::box1d_scenario();
    auto g = box_grid();
    auto opts = box_opts();

    SUBCASE("Qjet = hess phi passes") {
        auto rep = verify_superjet_propagation(sc, g, mat1(2.0), opts);
        CHECK(rep.verdict == Verdict::pass);
        CHECK(rep.premise_ok);
    }
    SUBCASE("upward closure: larger Qjet is still a superjet") {
        auto rep = verify_superjet_propagation(sc, g, mat1(3.0), opts);
        CHECK(rep.verdict == Verdict::pass);
    }
    SUBCASE("undershooting Qjet is not a superjet of phi") {
        auto rep = verify_superjet_propagation(sc, g, mat1(1.0), opts);
        CHECK(!rep.premise_ok);
    }
}

TEST_CASE("hessian propagation on the 1-D scenario") {
    auto sc = oracle::box1d_scenario();
    auto g = box_grid();
    auto opts = box_opts();

    for (auto dir : {PropagationDirection::forward, PropagationDirection::backward}) {
        auto rep = verify_hessian_propagation(sc, g, dir, opts);
        CHECK(rep.verdict == Verdict::pass);
        for (const auto& n : rep.nodes) {
            if (n.detail == "||R + numerical_hessian||") CHECK(n.residual <= 1e-1);
            if (n.detail == "||R_direct - P X^-1||") CHECK(n.residual <= 1e-8 * 3.0);
        }
    }
}

TEST_CASE("c2 regularity probe") {
    auto sc = oracle::box1d_scenario();
    auto g = box_grid();
    auto opts = box_opts();

    SUBCASE("passes away from the kink locus") {
        auto rep = probe_c2_regularity(sc, g, opts);
        CHECK(rep.verdict == Verdict::pass);
        CHECK(rep.premise_ok);
        CHECK(rep.fitted_constants.at("probe_gradient_norm") ==
              doctest::Approx(2.0).epsilon(0.05));
    }
    SUBCASE("refuses on the kink locus where only q = 0 is available") {
        auto rep = probe_c2_regularity(sc, g, opts,
                                       std::make_pair(0.5, vec1(0.5)));
        CHECK(!rep.premise_ok);
        CHECK(rep.verdict == Verdict::inconclusive);
        CHECK(rep.premise_detail.find("q = 0") != std::string::npos);
    }
    SUBCASE("passes just off the kink locus") {
        auto rep = probe_c2_regularity(sc, g, opts,
                                       std::make_pair(0.0, vec1(1.6)));
        CHECK(rep.premise_ok);
        CHECK(rep.verdict == Verdict::pass);
    }
}

TEST_CASE("ball scenario: superjet propagation up to the blow-up frontier") {
    auto sc = oracle::ball2d_scenario();
    GridSpec s;
    s.dim = 2;
    s.lower = vec2(-3.0, -3.0);
    s.upper = vec2(3.0, 3.0);
    s.points_per_axis = 201;
    s.time_steps = 120;
    s.t0 = sc.t0;
    s.T = sc.T;
    auto g = solve_value_function(sc, s, 32, 6e-3);

    SensitivityOptions opts;
    opts.steps = 1000;
    opts.terminal_state = vec2(1.0, 0.0);

    auto rep = verify_superjet_propagation(sc, g, Mat(-Mat::Identity(2, 2)), opts);
    CHECK(rep.premise_ok);
    CHECK(rep.verdict == Verdict::pass);
    // the backward flow dies at the conjugate time t_c = 0
    const double dt = (sc.T - sc.t0) / 1000.0;
    REQUIRE(rep.fitted_constants.count("frontier_a") == 1);
    CHECK(std::abs(rep.fitted_constants.at("frontier_a")) <= 5.0 * dt);
}
