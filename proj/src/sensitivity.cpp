#include "mayer/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mayer {

namespace {

std::vector<double> sample_times(double lo, double hi, int count) {
    std::vector<double> ts;
    if (count <= 1) {
        ts.push_back(hi);
        return ts;
    }
    for (int i = 0; i < count; ++i)
        ts.push_back(lo + (hi - lo) * double(i) / double(count - 1));
    return ts;
}

double stencil_rho(const GridSpec& spec) { return 4.0 * spec.max_dx(); }

double gradient_budget(const GridValueFunction& g) {
    return g.error_budget / stencil_rho(g.spec);
}

/// Comparison tolerance for Riccati-vs-grid Hessians: a flat grid term plus
/// a relative allowance, since both the numerical Hessian noise and the
/// curvature scale grow together toward a conjugate time.
double hessian_tolerance(const GridValueFunction& g, double r_norm) {
    const double rho = stencil_rho(g.spec);
    (void)rho;
    return 0.05 * (1.0 + r_norm);
}

Mat hessian_with_stencil(const GridValueFunction& gridV, double t, const Vec& x,
                         double cells) {
    const GridSpec& spec = gridV.spec;
    Mat H(spec.dim, spec.dim);
    const double v0 = interpolate(gridV, t, x);
    for (int a = 0; a < spec.dim; ++a) {
        const double ra = cells * spec.dx(a);
        Vec hi = x, lo = x;
        hi(a) += ra;
        lo(a) -= ra;
        H(a, a) = (interpolate(gridV, t, hi) - 2.0 * v0 +
                   interpolate(gridV, t, lo)) /
                  (ra * ra);
        for (int b = a + 1; b < spec.dim; ++b) {
            const double rb = cells * spec.dx(b);
            Vec pp = x, pm = x, mp = x, mm = x;
            pp(a) += ra; pp(b) += rb;
            pm(a) += ra; pm(b) -= rb;
            mp(a) -= ra; mp(b) += rb;
            mm(a) -= ra; mm(b) -= rb;
            const double cross =
                (interpolate(gridV, t, pp) - interpolate(gridV, t, pm) -
                 interpolate(gridV, t, mp) + interpolate(gridV, t, mm)) /
                (4.0 * ra * rb);
            H(a, b) = cross;
            H(b, a) = cross;
        }
    }
    return symmetrized(H);
}

void refuse(VerificationReport& report, const std::string& why) {
    report.premise_ok = false;
    report.premise_detail = "PremiseFailed: " + why;
    report.verdict = Verdict::inconclusive;
}

/// Records the tolerance decomposition the comparisons rely on.
void record_budgets(VerificationReport& report, const GridValueFunction& g) {
    report.fitted_constants["grid_budget"] = g.error_budget;
    report.fitted_constants["gradient_budget"] = gradient_budget(g);
}

} // namespace

Arc arc_from_initial(const ControlScenario& scenario,
                     const GridValueFunction& gridV, int steps) {
    Vec q0 = numerical_gradient(gridV, scenario.t0, scenario.x0);
    return integrate_flow_from_initial(scenario, scenario.x0, Vec(-q0), steps);
}

VerificationReport verify_first_order_propagation(
    const ControlScenario& scenario, const GridValueFunction& gridV,
    const SensitivityOptions& opts) {
    VerificationReport report;
    report.scenario = scenario.label;
    report.check = "first_order_propagation";
    record_budgets(report, gridV);

    Arc arc;
    try {
        arc = arc_from_initial(scenario, gridV, opts.steps);
    } catch (const Error& e) {
        refuse(report, std::string("cannot seed the dual arc: ") + e.what());
        return report;
    }

    // Hypothesis: -p(t0) is a proximal subgradient of V(t0,.) at x0.
    auto premise = test_first_order(gridV, scenario.t0, scenario.x0,
                                    Vec(-arc.costates.front()),
                                    FirstOrderKind::prox_sub, opts.probes,
                                    scenario.label);
    if (premise.verdict != Verdict::pass) {
        refuse(report, "proximal subdifferential probe failed at t0");
        report.remainder_tables = premise.remainder_tables;
        return report;
    }

    double c_uniform = 0.0;
    const double gbudget = gradient_budget(gridV);
    for (double t : sample_times(scenario.t0, scenario.T, opts.sample_times)) {
        Vec xbar = arc.state_at(t);
        Vec q = -arc.costate_at(t);
        auto probe = test_first_order(gridV, t, xbar, q,
                                      FirstOrderKind::prox_sub, opts.probes,
                                      scenario.label);
        c_uniform = std::max(c_uniform, probe.fitted_constants.at("c_proximal"));
        for (auto& n : probe.nodes) report.add_node(t, n.residual, n.tolerance,
                                                    n.detail);
        for (auto& tab : probe.remainder_tables)
            report.remainder_tables.push_back(tab);
        if (probe.verdict == Verdict::fail) report.verdict = Verdict::fail;
        else if (probe.verdict == Verdict::inconclusive &&
                 report.verdict == Verdict::pass)
            report.verdict = Verdict::inconclusive;

        // gradient relation: the grid gradient must reproduce -p(t)
        const double ggap = (numerical_gradient(gridV, t, xbar) + arc.costate_at(t)).norm();
        report.add_node(t, ggap, gbudget, "numerical_gradient + p");
        if (ggap > gbudget) report.verdict = Verdict::fail;
    }
    // The theorem provides a single c valid at every time.
    report.fitted_constants["c_proximal_uniform"] = c_uniform;
    return report;
}

VerificationReport verify_subjet_propagation(const ControlScenario& scenario,
                                             const GridValueFunction& gridV,
                                             const Mat& R0,
                                             const SensitivityOptions& opts) {
    VerificationReport report;
    report.scenario = scenario.label;
    report.check = "subjet_propagation";
    record_budgets(report, gridV);

    Arc arc;
    try {
        arc = arc_from_initial(scenario, gridV, opts.steps);
    } catch (const Error& e) {
        refuse(report, std::string("cannot seed the dual arc: ") + e.what());
        return report;
    }

    JetCandidate seed;
    seed.t = scenario.t0;
    seed.x = scenario.x0;
    seed.q = -arc.costates.front();
    seed.Q = -symmetrized(R0);
    seed.kind = JetKind::subjet;
    auto premise = test_jet(gridV, seed, opts.probes, scenario.label);
    if (premise.verdict == Verdict::fail) {
        refuse(report, "(-p(t0), -R0) is not a subjet of V(t0,.) at x0");
        report.remainder_tables = premise.remainder_tables;
        return report;
    }

    RiccatiSolution R;
    try {
        R = integrate_riccati_direct(arc, scenario.model, symmetrized(R0),
                                     RiccatiAnchor::initial_identity);
    } catch (const Error& e) {
        refuse(report, std::string("riccati flow failed: ") + e.what());
        return report;
    }

    double a = scenario.T;
    if (R.blowup) {
        a = R.times.back(); // last node with a stored, finite R
        report.fitted_constants["frontier_a"] = R.blowup->t_star;
        report.notes.push_back("riccati flow blew up at t = " +
                               std::to_string(R.blowup->t_star));
        if (scenario.cost.semiconcave) {
            // with a semiconcave cost the flow must survive to T
            report.add_node(R.blowup->t_star, 1.0, 0.0,
                            "blow-up despite semiconcave terminal cost");
            report.verdict = Verdict::fail;
        }
    }

    for (double t : sample_times(scenario.t0, a, opts.sample_times)) {
        JetCandidate cand;
        cand.t = t;
        cand.x = arc.state_at(t);
        cand.q = -arc.costate_at(t);
        cand.Q = -R.at(t);
        cand.kind = JetKind::subjet;
        auto probe = test_jet(gridV, cand, opts.probes, scenario.label);
        for (auto& n : probe.nodes)
            report.add_node(t, n.residual, n.tolerance, n.detail);
        for (auto& tab : probe.remainder_tables)
            report.remainder_tables.push_back(tab);
        if (probe.verdict == Verdict::fail) report.verdict = Verdict::fail;
        else if (probe.verdict == Verdict::inconclusive &&
                 report.verdict == Verdict::pass)
            report.verdict = Verdict::inconclusive;
    }
    return report;
}

VerificationReport verify_superjet_propagation(
    const ControlScenario& scenario, const GridValueFunction& gridV,
    const Mat& Qjet, const SensitivityOptions& opts) {
    VerificationReport report;
    report.scenario = scenario.label;
    report.check = "superjet_propagation";
    record_budgets(report, gridV);

    Arc arc;
    try {
        if (opts.terminal_state) {
            arc = integrate_characteristics(scenario, *opts.terminal_state,
                                            opts.steps);
        } else {
            arc = arc_from_initial(scenario, gridV, opts.steps);
        }
    } catch (const Error& e) {
        refuse(report, std::string("cannot build the arc: ") + e.what());
        return report;
    }

    const Vec z = arc.states.back();
    Vec q_term = scenario.cost.grad(z);
    if (q_term.norm() < nonsmooth_eps(q_term)) {
        refuse(report, "grad phi vanishes at x(T); superjet seeding needs q != 0");
        return report;
    }

    // (q, Qjet) must be a superjet of phi at x(T): direct remainder test
    // against phi itself at shrinking radii.
    {
        double worst = -1e300;
        for (double r : {1e-2, 1e-3}) {
            for (int a = 0; a < scenario.model.dim; ++a) {
                for (double s : {-1.0, 1.0}) {
                    Vec h = Vec::Zero(scenario.model.dim);
                    h(a) = s * r;
                    const double rho2 = scenario.cost.value(z + h) -
                                        scenario.cost.value(z) - q_term.dot(h) -
                                        0.5 * h.dot(Qjet * h);
                    worst = std::max(worst, rho2 / (r * r));
                }
            }
        }
        if (worst > 1e-6 * (1.0 + operator_norm(Qjet))) {
            refuse(report, "(grad phi, Qjet) is not a superjet of phi at x(T)");
            return report;
        }
    }

    RiccatiSolution R;
    try {
        R = integrate_riccati_direct(arc, scenario.model, Mat(-Qjet),
                                     RiccatiAnchor::terminal_identity);
    } catch (const Error& e) {
        refuse(report, std::string("riccati flow failed: ") + e.what());
        return report;
    }

    double lo = scenario.t0;
    if (R.blowup) {
        const double a = R.blowup->t_star;
        report.fitted_constants["frontier_a"] = a;
        report.notes.push_back("backward riccati flow blew up at t = " +
                               std::to_string(a));
        // stay clear of the frontier where ||R|| is at the threshold and
        // the candidate's validity neighborhood collapses
        lo = R.times.back() + 0.15 * (scenario.T - R.times.back());
    }

    for (double t : sample_times(lo, scenario.T, opts.sample_times)) {
        JetCandidate cand;
        cand.t = t;
        cand.x = arc.state_at(t);
        cand.q = -arc.costate_at(t);
        cand.Q = -R.at(t);
        cand.kind = JetKind::superjet;
        auto probe = test_jet(gridV, cand, opts.probes, scenario.label);
        for (auto& n : probe.nodes)
            report.add_node(t, n.residual, n.tolerance, n.detail);
        for (auto& tab : probe.remainder_tables)
            report.remainder_tables.push_back(tab);
        if (probe.verdict == Verdict::fail) report.verdict = Verdict::fail;
        else if (probe.verdict == Verdict::inconclusive &&
                 report.verdict == Verdict::pass)
            report.verdict = Verdict::inconclusive;
    }
    return report;
}

VerificationReport verify_hessian_propagation(const ControlScenario& scenario,
                                              const GridValueFunction& gridV,
                                              PropagationDirection direction,
                                              const SensitivityOptions& opts) {
    VerificationReport report;
    report.scenario = scenario.label;
    report.check = direction == PropagationDirection::forward
                       ? "hessian_propagation_forward"
                       : "hessian_propagation_backward";
    record_budgets(report, gridV);

    Arc arc;
    Mat boundary_hess;
    RiccatiAnchor anchor;
    try {
        if (direction == PropagationDirection::forward) {
            arc = arc_from_initial(scenario, gridV, opts.steps);
            anchor = RiccatiAnchor::initial_identity;
            // twice-differentiability surrogate: the stencil-halved Hessian
            // must agree with the reference stencil
            Mat h4 = hessian_with_stencil(gridV, scenario.t0, scenario.x0, 4.0);
            Mat h2 = hessian_with_stencil(gridV, scenario.t0, scenario.x0, 2.0);
            const double gap = operator_norm(h4 - h2);
            const double tol = 2.0 * hessian_tolerance(gridV, operator_norm(h4));
            report.fitted_constants["hessian_stencil_gap"] = gap;
            if (gap > tol) {
                refuse(report,
                       "numerical Hessian is stencil-dependent at (t0, x0); "
                       "twice differentiability not supported by the grid");
                return report;
            }
            boundary_hess = h4;
        } else {
            if (opts.terminal_state) {
                arc = integrate_characteristics(scenario, *opts.terminal_state,
                                                opts.steps);
            } else {
                arc = arc_from_initial(scenario, gridV, opts.steps);
            }
            anchor = RiccatiAnchor::terminal_identity;
            const Vec z = arc.states.back();
            Vec gphi = scenario.cost.grad(z);
            if (gphi.norm() < nonsmooth_eps(gphi)) {
                refuse(report, "grad phi vanishes at x(T)");
                return report;
            }
            boundary_hess = symmetrized(scenario.cost.hess(z));
        }
    } catch (const Error& e) {
        refuse(report, std::string("cannot build the arc: ") + e.what());
        return report;
    }

    RiccatiSolution R;
    VariationalSolution vs;
    try {
        R = integrate_riccati_direct(arc, scenario.model, Mat(-boundary_hess),
                                     anchor);
        vs = integrate_variational(arc, scenario.model, boundary_hess, anchor);
    } catch (const Error& e) {
        refuse(report, std::string("riccati/variational flow failed: ") + e.what());
        return report;
    }
    auto quotient = riccati_from_variational(vs);

    double lo = scenario.t0, hi = scenario.T;
    if (R.blowup) {
        const double edge = R.times.back();
        if (anchor == RiccatiAnchor::terminal_identity)
            lo = edge + 0.15 * (scenario.T - edge);
        else
            hi = edge - 0.15 * (edge - scenario.t0);
        report.fitted_constants["frontier_a"] = R.blowup->t_star;
    }

    for (double t : sample_times(lo, hi, opts.sample_times)) {
        Mat Rt = R.at(t);
        const double rnorm = operator_norm(Rt);
        Mat Hnum = numerical_hessian(gridV, t, arc.state_at(t));
        const double residual = operator_norm(Rt + Hnum);
        report.add_node(t, residual, hessian_tolerance(gridV, rnorm),
                        "||R + numerical_hessian||");

        // dual route: the quotient P X^{-1} must match the direct flow
        try {
            Mat Rq = quotient.at(t);
            const double gap = operator_norm(Rt - Rq);
            report.add_node(t, gap, 1e-8 * (1.0 + rnorm), "||R_direct - P X^-1||");
        } catch (const OutOfDomain&) {
            // quotient truncated earlier than the sampled time
        }
    }
    report.settle_verdict_from_nodes();
    return report;
}

VerificationReport probe_c2_regularity(
    const ControlScenario& scenario, const GridValueFunction& gridV,
    const SensitivityOptions& opts,
    std::optional<std::pair<double, Vec>> probe_point) {
    VerificationReport report;
    report.scenario = scenario.label;
    report.check = "c2_regularity_probe";
    record_budgets(report, gridV);

    const double tp = probe_point ? probe_point->first : scenario.t0;
    const Vec xp = probe_point ? probe_point->second : scenario.x0;
    if (tp >= scenario.T) {
        refuse(report, "probe time must lie strictly before T");
        return report;
    }

    Vec q0;
    try {
        q0 = numerical_gradient(gridV, tp, xp);
    } catch (const Error& e) {
        refuse(report, std::string("gradient probe failed: ") + e.what());
        return report;
    }
    const double gbudget = gradient_budget(gridV);
    report.fitted_constants["probe_gradient_norm"] = q0.norm();
    if (q0.norm() <= gbudget) {
        refuse(report,
               "gradient at the probe point is indistinguishable from zero "
               "(|q| <= gradient budget); q = 0 is excluded because twice "
               "differentiability genuinely fails on the kink locus where "
               "only the zero proximal subgradient is available");
        return report;
    }

    auto prox = test_first_order(gridV, tp, xp, q0, FirstOrderKind::prox_sub,
                                 opts.probes, scenario.label);
    if (prox.verdict != Verdict::pass) {
        refuse(report, "proximal subdifferential probe failed at the base point");
        return report;
    }

    ControlScenario sub = scenario;
    sub.t0 = tp;
    sub.x0 = xp;
    Arc arc;
    try {
        arc = integrate_flow_from_initial(sub, xp, Vec(-q0), opts.steps);
    } catch (const Error& e) {
        refuse(report, std::string("cannot integrate the trajectory: ") + e.what());
        return report;
    }

    const Vec z = arc.states.back();
    Vec gphi = scenario.cost.grad(z);
    if (gphi.norm() < nonsmooth_eps(gphi)) {
        refuse(report, "grad phi vanishes at x(T); the regularity conclusion "
                       "needs a nonvanishing dual arc");
        return report;
    }

    VariationalSolution vs;
    try {
        vs = integrate_variational(arc, scenario.model,
                                   Mat(symmetrized(scenario.cost.hess(z))),
                                   RiccatiAnchor::terminal_identity);
    } catch (const Error& e) {
        refuse(report, std::string("variational flow failed: ") + e.what());
        return report;
    }
    auto conj = detect_conjugate_time(vs, arc, scenario.model,
                                      Mat(symmetrized(scenario.cost.hess(z))));
    report.add_node(tp, conj.t_c ? 1.0 : 0.0, 0.0,
                    "conjugate time present in [t0, T]");
    if (conj.t_c) {
        report.notes.push_back("conjugate time detected at t = " +
                               std::to_string(*conj.t_c));
    }

    // Hessian continuity on a tube of radius 8 dx around the trajectory.
    const double dx = gridV.spec.max_dx();
    double worst_jump = 0.0;
    for (double t : sample_times(tp, scenario.T, opts.sample_times)) {
        Vec c = arc.state_at(t);
        Mat H0 = numerical_hessian(gridV, t, c);
        double tube_tol = 2.0 * hessian_tolerance(gridV, operator_norm(H0));
        for (int a = 0; a < gridV.spec.dim; ++a) {
            for (double off : {-8.0 * dx, -4.0 * dx, 4.0 * dx, 8.0 * dx}) {
                Vec y = c;
                y(a) += off;
                Mat Ht = numerical_hessian(gridV, t, y);
                const double jump = operator_norm(Ht - H0);
                worst_jump = std::max(worst_jump, jump);
                report.add_node(t, jump, tube_tol, "tube Hessian jump");
            }
        }
    }
    report.fitted_constants["max_tube_hessian_jump"] = worst_jump;
    report.settle_verdict_from_nodes();
    return report;
}

} // namespace mayer
