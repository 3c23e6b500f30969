#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "mayer/sensitivity.hpp"
#include "oracles.hpp"

using namespace mayer;
using oracle::vec1;
using oracle::vec2;

namespace {

std::vector<HamiltonianModel> sample_models() {
    std::vector<HamiltonianModel> models;
    models.push_back(make_interval_box_model(1, 1.0));
    models.push_back(make_interval_box_model(2, 0.7));
    models.push_back(oracle::ball2d_scenario().model);
    models.push_back(oracle::rotation_scenario().model);
    auto pend = [] {
        auto h = [](const Vec& x) { return Vec(vec2(x(1), -std::sin(x(0)))); };
        auto g = [](const Vec&) { return Mat(Mat::Identity(2, 2)); };
        AffineControlOptions opts;
        opts.g_constant = true;
        opts.h_jacobian = [](const Vec& x) {
            Mat J(2, 2);
            J << 0, 1, -std::cos(x(0)), 0;
            return J;
        };
        return make_affine_control_model(h, g, 2, 2, opts);
    }();
    models.push_back(pend);
    return models;
}

} // namespace

TEST_CASE("homogeneity, Euler identity and H_pp degeneracy over random samples") {
    std::mt19937_64 rng(20240614);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (const auto& m : sample_models()) {
        int checked = 0;
        while (checked < 120) {
            Vec x(m.dim), p(m.dim);
            for (int i = 0; i < m.dim; ++i) {
                x(i) = 2.0 * gauss(rng);
                p(i) = gauss(rng);
            }
            if (p.norm() < 1e-3) continue;
            p /= p.norm();
            const double H = m.eval(x, p);
            const double scale = 1.0 + std::abs(H);
            for (double lam : {0.5, 2.0, 10.0}) {
                CHECK(std::abs(m.eval(x, lam * p) - lam * H) <=
                      1e-9 * lam * scale);
            }
            try {
                Vec gp = m.grad_p(x, p);
                CHECK(std::abs(H - gp.dot(p)) <= 1e-9 * scale);
                Mat pp = m.hess(x, p).pp;
                const double ppn = operator_norm(pp);
                CHECK((pp * p).norm() <= 1e-8 * std::max(ppn * p.norm(), 1e-12));
                CHECK(min_eigenvalue_sym(pp) >= -1e-9);
            } catch (const NonsmoothPoint&) {
                continue; // sample fell into the guard cone
            }
            ++checked;
        }
    }
}

TEST_CASE("arcs: dichotomy, Gronwall bound and maximum principle") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);

    auto sc = oracle::rotation_scenario();
    for (int trial = 0; trial < 12; ++trial) {
        Vec z = vec2(1.0 + 0.5 * u(rng), 0.5 * u(rng));
        Arc arc = integrate_characteristics(sc, z, 400);
        CHECK_NOTHROW(arc.check_valid());
        const double resid = maximum_principle_residual(arc, sc.model);
        CHECK(resid <= 1e-8 + 10.0 * arc.dt * arc.dt);
    }

    auto ball = oracle::ball2d_scenario();
    for (int trial = 0; trial < 8; ++trial) {
        Vec z = vec2(1.0 + 0.3 * u(rng), 0.3 * u(rng));
        Arc arc = integrate_characteristics(ball, z, 500);
        CHECK_NOTHROW(arc.check_valid());
        CHECK(maximum_principle_residual(arc, ball.model) <=
              1e-8 + 10.0 * arc.dt * arc.dt);
    }
}

TEST_CASE("variational flows: symplectic invariant and R symmetry") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto sc = oracle::rotation_scenario();
    for (int trial = 0; trial < 6; ++trial) {
        Vec z = vec2(1.2 + 0.3 * u(rng), 0.4 * u(rng));
        Arc arc = integrate_characteristics(sc, z, 500);
        Mat Q(2, 2);
        const double a = u(rng), b = u(rng), c = u(rng);
        Q << 1.0 + 0.2 * a, 0.2 * b, 0.2 * b, 1.0 + 0.2 * c;
        auto vs = integrate_variational(arc, sc.model, Q);
        // check_valid enforces anchor identity, finite values and the
        // symplectic first integral to 1e-8
        CHECK_NOTHROW(vs.check_valid());

        auto R = integrate_riccati_direct(arc, sc.model, Mat(-Q),
                                          RiccatiAnchor::terminal_identity);
        for (const auto& r : R.R)
            CHECK(asymmetry(r) <= 1e-10 * (1.0 + operator_norm(r)));

        // quotient route agrees while X stays invertible
        auto quot = riccati_from_variational(vs);
        const std::size_t common = std::min(quot.size(), R.size());
        for (std::size_t k = 0; k < common; k += 100) {
            CHECK(operator_norm(quot.R[k] - R.R[k]) <=
                  1e-7 * (1.0 + operator_norm(R.R[k])));
        }
    }
}

TEST_CASE("discrete comparison monotonicity under random cost bumps") {
    auto base = oracle::box1d_scenario();
    GridSpec s;
    s.dim = 1;
    s.lower = vec1(-3.0);
    s.upper = vec1(3.0);
    s.points_per_axis = 81;
    s.time_steps = 100;
    s.t0 = 0.0;
    s.T = 1.0;

    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        const double a = 0.2 + 0.5 * u(rng);
        const double w = 1.0 + 3.0 * u(rng);
        auto hi = base;
        hi.cost.value = [a, w](const Vec& z) {
            return z(0) * z(0) + a * (1.1 + std::sin(w * z(0)));
        };
        auto g1 = solve_value_function(base, s, 2);
        auto g2 = solve_value_function(hi, s, 2);
        std::size_t violations = 0;
        for (std::size_t k = 0; k < g1.values.size(); ++k)
            for (std::size_t i = 0; i < g1.values[k].size(); ++i)
                if (g1.values[k][i] > g2.values[k][i]) ++violations;
        CHECK(violations == 0);
    }
}

TEST_CASE("flow map is Lipschitz in the initial state (empirical constant)") {
    auto sc = oracle::rotation_scenario();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double k_fit = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        Vec y0 = vec2(0.5 * u(rng), 0.5 * u(rng));
        Vec p0 = vec2(1.0 + 0.2 * u(rng), 0.2 * u(rng));
        Vec dy = 1e-4 * vec2(u(rng), u(rng));
        Arc a1 = integrate_flow_from_initial(sc, y0, p0, 200);
        Arc a2 = integrate_flow_from_initial(sc, Vec(y0 + dy), p0, 200);
        for (std::size_t i = 0; i < a1.size(); i += 20) {
            const double spread =
                (a1.states[i] - a2.states[i]).norm() / dy.norm();
            const double horizon = a1.times[i] - a1.times.front();
            if (spread > 1.0)
                k_fit = std::max(k_fit, std::log(spread) / std::max(horizon, 1e-9));
        }
    }
    // the drift field has a unit Lipschitz constant; the empirical rate
    // must not exceed it by much
    CHECK(k_fit <= 1.5);
}

TEST_CASE("jet duality: subjets of V are negated superjets of -V") {
    auto sc = oracle::box1d_scenario();
    GridSpec s;
    s.dim = 1;
    s.lower = vec1(-3.5);
    s.upper = vec1(7.5);
    s.points_per_axis = 881;
    s.time_steps = 800;
    s.t0 = 0.0;
    s.T = 1.0;
    auto g = solve_value_function(sc, s, 2, 1.3e-3);
    auto neg = g;
    for (auto& slice : neg.values)
        for (double& v : slice) v = -v;

    ProbeConfig probes;
    probes.r0_cells = 64.0;

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 12; ++trial) {
        JetCandidate cand;
        cand.t = 0.25;
        cand.x = vec1(1.75);
        cand.q = vec1(2.0 + 0.4 * u(rng));
        cand.Q = Mat::Identity(1, 1) * (2.0 + 1.5 * u(rng));
        cand.kind = JetKind::subjet;
        auto direct = test_jet(g, cand, probes);

        JetCandidate mirror;
        mirror.t = cand.t;
        mirror.x = cand.x;
        mirror.q = -cand.q;
        mirror.Q = -cand.Q;
        mirror.kind = JetKind::superjet;
        auto dual = test_jet(neg, mirror, probes);
        CHECK(direct.verdict == dual.verdict);
    }
}

TEST_CASE("jet consistency: passing sub and super slopes agree") {
    auto sc = oracle::box1d_scenario();
    GridSpec s;
    s.dim = 1;
    s.lower = vec1(-3.5);
    s.upper = vec1(7.5);
    s.points_per_axis = 881;
    s.time_steps = 800;
    s.t0 = 0.0;
    s.T = 1.0;
    auto g = solve_value_function(sc, s, 2, 1.3e-3);
    const double grad_budget = g.error_budget / (4.0 * s.max_dx());

    ProbeConfig probes;
    probes.r0_cells = 64.0;

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Vec> passing_sub, passing_super;
    for (int trial = 0; trial < 20; ++trial) {
        Vec q = vec1(2.0 + 0.2 * u(rng));
        JetCandidate cand;
        cand.t = 0.0;
        cand.x = vec1(2.0);
        cand.q = q;
        cand.Q = Mat::Identity(1, 1) * 2.0;
        cand.kind = JetKind::subjet;
        if (test_jet(g, cand, probes).verdict == Verdict::pass)
            passing_sub.push_back(q);
        cand.kind = JetKind::superjet;
        if (test_jet(g, cand, probes).verdict == Verdict::pass)
            passing_super.push_back(q);
    }
    CHECK(!passing_sub.empty());
    CHECK(!passing_super.empty());
    for (const auto& q1 : passing_sub)
        for (const auto& q2 : passing_super)
            CHECK((q1 - q2).norm() <= 2.0 * grad_budget);
}
