#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "mayer/characteristics.hpp"
#include "oracles.hpp"

using namespace mayer;
using oracle::vec1;
using oracle::vec2;

TEST_CASE("backward characteristics of the 1-D box scenario") {
    auto sc = oracle::box1d_scenario();
    Arc arc = integrate_characteristics(sc, vec1(1.0), 1000);
    REQUIRE(arc.size() == 1001);
    CHECK(arc.direction == ArcDirection::backward_from_T);
    // closed form: x(t) = 2 - t, p constant -2
    for (std::size_t k = 0; k < arc.size(); k += 100) {
        const double t = arc.times[k];
        CHECK(std::abs(arc.states[k](0) - (2.0 - t)) < 1e-12);
        CHECK(std::abs(arc.costates[k](0) + 2.0) < 1e-12);
    }
    CHECK(arc.states.front()(0) == doctest::Approx(2.0));
}

TEST_CASE("degenerate costate is refused") {
    auto sc = oracle::box1d_scenario();
    CHECK_THROWS_AS(integrate_characteristics(sc, vec1(0.0), 100),
                    DegenerateCostate);
    CHECK_THROWS_AS(integrate_flow_from_initial(sc, vec1(2.0), vec1(0.0), 100),
                    DegenerateCostate);
}

TEST_CASE("backward characteristics of the 2-D ball scenario") {
    auto sc = oracle::ball2d_scenario();
    Arc arc = integrate_characteristics(sc, vec2(1.0, 0.0), 500);
    for (std::size_t k = 0; k < arc.size(); k += 50) {
        const double t = arc.times[k];
        CHECK((arc.states[k] - vec2(t, 0.0)).norm() < 1e-12);
        CHECK((arc.costates[k] - vec2(1.0, 0.0)).norm() < 1e-12);
    }
}

TEST_CASE("forward flow matches the backward solution") {
    auto sc = oracle::box1d_scenario();
    Arc arc = integrate_flow_from_initial(sc, vec1(2.0), vec1(-2.0), 500);
    CHECK(std::abs(arc.states.back()(0) - 1.0) < 1e-12);

    auto ball = oracle::ball2d_scenario();
    Arc barc = integrate_flow_from_initial(ball, vec2(ball.t0, 0.0),
                                           vec2(1.0, 0.0), 500);
    CHECK((barc.states.back() - vec2(1.0, 0.0)).norm() < 1e-12);
}

TEST_CASE("maximum principle residual on closed-form arcs") {
    auto sc = oracle::box1d_scenario();
    Arc arc = integrate_characteristics(sc, vec1(1.0), 1000);
    CHECK(maximum_principle_residual(arc, sc.model) < 1e-10);

    auto ball = oracle::ball2d_scenario();
    Arc barc = integrate_characteristics(ball, vec2(1.0, 0.0), 1000);
    CHECK(maximum_principle_residual(barc, ball.model) < 1e-10);
}

TEST_CASE("rotation model: closed form, RK4 order, round trip") {
    auto sc = oracle::rotation_scenario();
    const Vec z = vec2(0.8, 0.4);
    const Vec pT = -sc.cost.grad(z); // -z

    auto endpoint_error = [&](int steps) {
        Arc arc = integrate_characteristics(sc, z, steps);
        Vec x0_exact =
            oracle::rotation_state(sc.t0, sc.t0, sc.T, arc.states.front(), pT);
        // compare the whole arc against the closed form
        double worst = 0.0;
        for (std::size_t k = 0; k < arc.size(); k += 7) {
            const double t = arc.times[k];
            Vec xe = oracle::rotation_state(t, sc.t0, sc.T, arc.states.front(), pT);
            Vec pe = oracle::rotation_costate(t, sc.T, pT);
            worst = std::max(worst, (arc.states[k] - xe).norm());
            worst = std::max(worst, (arc.costates[k] - pe).norm());
        }
        (void)x0_exact;
        return worst;
    };

    const double e50 = endpoint_error(50);
    const double e100 = endpoint_error(100);
    CHECK(e50 > 1e-12); // measurable, not at roundoff
    CHECK(e50 / e100 >= 12.0); // 4th order: nominal 16 with margin

    // backward then forward from the initial node returns to the terminal state
    Arc back = integrate_characteristics(sc, z, 400);
    Arc fwd = integrate_flow_from_initial(sc, back.states.front(),
                                          back.costates.front(), 400);
    const double dt = (sc.T - sc.t0) / 400.0;
    CHECK((fwd.states.back() - z).norm() < 1e-9 + 50.0 * dt * dt * dt * dt);

    // the costate rotates rigidly: Gronwall constant about 1
    CHECK(back.lipschitz_cr == doctest::Approx(1.0).epsilon(1e-6));
    CHECK_NOTHROW(back.check_valid());
}

TEST_CASE("arc interpolation and CSV export") {
    auto sc = oracle::box1d_scenario();
    Arc arc = integrate_characteristics(sc, vec1(1.0), 100);
    CHECK(arc.state_at(0.5)(0) == doctest::Approx(1.5));
    CHECK(arc.costate_at(0.123)(0) == doctest::Approx(-2.0));
    CHECK_THROWS_AS(arc.state_at(2.0), OutOfDomain);

    std::ostringstream os;
    arc.write_csv(os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "t,x_1,p_1");
    // 17 significant digits: values survive a text round trip exactly
    std::getline(is, line);
    std::getline(is, line);
    double t, x, p;
    char c1, c2;
    std::istringstream(line) >> t >> c1 >> x >> c2 >> p;
    CHECK(t == arc.times[1]);
    CHECK(x == arc.states[1](0));
    CHECK(p == arc.costates[1](0));
}

TEST_CASE("dynamic programming monotonicity along arcs") {
    auto sc = oracle::box1d_scenario();
    auto closed_form = [&](double t, const Vec& x) {
        return oracle::box1d_value(t, x(0), sc.T);
    };

    SUBCASE("optimal arc: the map is constant") {
        Arc arc = integrate_characteristics(sc, vec1(1.0), 500);
        auto rep = dynamic_programming_monotonicity(closed_form, 1e-12, arc);
        CHECK(rep.verdict == Verdict::pass);
        CHECK(rep.fitted_constants.at("max_decrease") <= 1e-12);
        CHECK(rep.fitted_constants.at("constant_along_arc") == 1.0);
    }

    SUBCASE("stationary admissible arc is nondecreasing") {
        Arc arc;
        arc.direction = ArcDirection::forward_from_t0;
        const int N = 100;
        arc.dt = sc.T / N;
        for (int k = 0; k <= N; ++k) {
            arc.times.push_back(k * arc.dt);
            arc.states.push_back(vec1(0.5)); // 0 in F(x), so admissible
            arc.costates.push_back(vec1(0.0));
        }
        arc.lipschitz_cr = 0.0;
        auto rep = dynamic_programming_monotonicity(closed_form, 1e-12, arc);
        CHECK(rep.verdict == Verdict::pass);
    }

    SUBCASE("suboptimal zig-zag arc strictly increases the value") {
        Arc arc;
        arc.direction = ArcDirection::forward_from_t0;
        const int N = 200;
        arc.dt = sc.T / N;
        double x = 2.0;
        for (int k = 0; k <= N; ++k) {
            arc.times.push_back(k * arc.dt);
            arc.states.push_back(vec1(x));
            arc.costates.push_back(vec1(0.0));
            x += (k % 2 == 0 ? 1.0 : -0.5) * arc.dt; // net drift +1/4, speed <= 1
        }
        arc.lipschitz_cr = 0.0;
        auto rep = dynamic_programming_monotonicity(closed_form, 1e-12, arc);
        CHECK(rep.verdict == Verdict::pass); // nondecreasing, no violation
        CHECK(rep.fitted_constants.at("max_decrease") <= 1e-12);
        CHECK(rep.fitted_constants.at("constant_along_arc") == 0.0);
        // strictly increasing overall
        const double v0 = closed_form(arc.times.front(), arc.states.front());
        const double v1 = closed_form(arc.times.back(), arc.states.back());
        CHECK(v1 > v0 + 1e-3);
    }
}

TEST_CASE("arc invariants reject corrupted data") {
    auto sc = oracle::box1d_scenario();
    Arc arc = integrate_characteristics(sc, vec1(1.0), 100);
    Arc broken = arc;
    broken.costates[50] = vec1(0.0); // dichotomy violation
    CHECK_THROWS_AS(broken.check_valid(), ModelInvalid);

    broken = arc;
    broken.times[50] += 1e-3; // non-uniform grid
    CHECK_THROWS_AS(broken.check_valid(), ModelInvalid);
}
