#include "mayer/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "mayer/rk4.hpp"

namespace mayer {

namespace {

struct Interp {
    // returns (index, weight) for linear interpolation on a uniform grid
    static std::pair<std::size_t, double> locate(const std::vector<double>& ts,
                                                 double t) {
        const double t0 = ts.front(), T = ts.back();
        if (t < t0 - 1e-12 || t > T + 1e-12)
            throw OutOfDomain("time outside the arc range");
        const double dt = (T - t0) / double(ts.size() - 1);
        double u = (t - t0) / dt;
        auto i = std::size_t(std::clamp(u, 0.0, double(ts.size() - 2)));
        if (i >= ts.size() - 1) i = ts.size() - 2;
        return {i, u - double(i)};
    }
};

/// Runs the characteristic field forward in the integration variable. For
/// backward problems the caller flips the sign of the field (reversed time
/// tau = T + t0 - t), so a single code path integrates both directions.
Arc integrate_core(const HamiltonianModel& model, const Vec& y0, const Vec& p0,
                   double t_begin, double t_end, int steps, double sign,
                   ArcDirection dir) {
    const int n = model.dim;
    const double h = (t_end - t_begin) / double(steps);

    auto field = [&](double, const Vec& yp) {
        Vec x = yp.head(n);
        Vec p = yp.tail(n);
        Vec out(2 * n);
        out.head(n) = sign * model.grad_p(x, p);
        out.tail(n) = -sign * model.grad_x(x, p);
        return out;
    };

    std::vector<Vec> nodes(std::size_t(steps) + 1);
    Vec yp(2 * n);
    yp.head(n) = y0;
    yp.tail(n) = p0;
    nodes[0] = yp;
    for (int k = 0; k < steps; ++k) {
        yp = rk4_step(yp, t_begin + k * h, h, field);
        if (!all_finite(yp))
            throw ModelInvalid("characteristic integration became non-finite");
        nodes[std::size_t(k) + 1] = yp;
    }

    Arc arc;
    arc.direction = dir;
    arc.dt = h;
    arc.times.resize(nodes.size());
    arc.states.resize(nodes.size());
    arc.costates.resize(nodes.size());
    const bool reversed = dir == ArcDirection::backward_from_T;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const std::size_t src = reversed ? nodes.size() - 1 - k : k;
        arc.times[k] = t_begin + double(k) * h;
        arc.states[k] = nodes[src].head(n);
        arc.costates[k] = nodes[src].tail(n);
    }

    // Empirical |pdot|/|p| bound for the Gronwall consistency check.
    double cr = 0.0;
    for (std::size_t k = 0; k < arc.size(); ++k) {
        const double pn = arc.costates[k].norm();
        if (pn < 1e-300) continue;
        cr = std::max(cr, model.grad_x(arc.states[k], arc.costates[k]).norm() / pn);
    }
    arc.lipschitz_cr = cr;
    arc.check_valid();
    return arc;
}

} // namespace

Vec Arc::state_at(double t) const {
    auto [i, w] = Interp::locate(times, t);
    return (1.0 - w) * states[i] + w * states[i + 1];
}

Vec Arc::costate_at(double t) const {
    auto [i, w] = Interp::locate(times, t);
    return (1.0 - w) * costates[i] + w * costates[i + 1];
}

void Arc::check_valid() const {
    if (times.size() < 2 || times.size() != states.size() ||
        times.size() != costates.size())
        throw ModelInvalid("arc requires matching times/states/costates, >= 2 nodes");
    const double step = times[1] - times[0];
    for (std::size_t k = 1; k < times.size(); ++k) {
        if (std::abs((times[k] - times[k - 1]) - step) > 1e-9 * std::abs(step))
            throw ModelInvalid("arc time grid is not uniform");
    }

    // Dual-arc dichotomy: the costate either never vanishes or vanishes
    // identically; anything else signals a corrupted integration.
    double pmin = 1e300, pmax = 0.0;
    for (const auto& p : costates) {
        const double n = p.norm();
        pmin = std::min(pmin, n);
        pmax = std::max(pmax, n);
    }
    const bool all_zero = pmax < 1e-14;
    const bool none_zero = pmin > 0.0;
    if (!all_zero && !none_zero)
        throw ModelInvalid("arc violates the dual-arc dichotomy");

    if (!all_zero) {
        const double horizon = times.back() - times.front();
        const double bound = std::exp(lipschitz_cr * horizon) * pmin;
        if (pmax > bound * (1.0 + 1e-6) + 1e-12)
            throw ModelInvalid("arc violates the Gronwall costate bound");
    }
}

void Arc::write_csv(std::ostream& os) const {
    const int n = dim();
    os << "t";
    for (int i = 1; i <= n; ++i) os << ",x_" << i;
    for (int i = 1; i <= n; ++i) os << ",p_" << i;
    os << "\n";
    char buf[64];
    for (std::size_t k = 0; k < size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", times[k]);
        os << buf;
        for (int i = 0; i < n; ++i) {
            std::snprintf(buf, sizeof buf, ",%.17g", states[k](i));
            os << buf;
        }
        for (int i = 0; i < n; ++i) {
            std::snprintf(buf, sizeof buf, ",%.17g", costates[k](i));
            os << buf;
        }
        os << "\n";
    }
}

Arc integrate_characteristics(const ControlScenario& scenario,
                              const Vec& terminal_state, int steps) {
    scenario.check_valid();
    if (steps < 2) throw ModelInvalid("integrate_characteristics: steps >= 2");
    Vec grad_phi = scenario.cost.grad(terminal_state);
    if (grad_phi.norm() < nonsmooth_eps(grad_phi)) {
        throw DegenerateCostate(
            "grad phi vanishes at the terminal state; the costate would be "
            "identically zero and H is nonsmooth at p = 0");
    }
    // Reversed time tau = T + t0 - t: integrate forward in tau from the
    // terminal data, then report in forward time order.
    return integrate_core(scenario.model, terminal_state, Vec(-grad_phi),
                          scenario.t0, scenario.T, steps, -1.0,
                          ArcDirection::backward_from_T);
}

Arc integrate_flow_from_initial(const ControlScenario& scenario, const Vec& y0,
                                const Vec& p0, int steps) {
    scenario.check_valid();
    if (steps < 2) throw ModelInvalid("integrate_flow_from_initial: steps >= 2");
    if (p0.norm() < nonsmooth_eps(p0))
        throw DegenerateCostate("initial costate inside the guard cone");
    return integrate_core(scenario.model, y0, p0, scenario.t0, scenario.T,
                          steps, 1.0, ArcDirection::forward_from_t0);
}

double maximum_principle_residual(const Arc& arc, const HamiltonianModel& model) {
    if (arc.size() < 3) return 0.0;
    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < arc.size(); ++k) {
        // central difference in the stored samples, independent of the
        // integrator's stage derivatives
        Vec xdot = (arc.states[k + 1] - arc.states[k - 1]) / (2.0 * arc.dt);
        const double H = model.eval(arc.states[k], arc.costates[k]);
        worst = std::max(worst, std::abs(H - arc.costates[k].dot(xdot)));
    }
    return worst;
}

VerificationReport dynamic_programming_monotonicity(
    const std::function<double(double, const Vec&)>& value, double error_budget,
    const Arc& arc, const std::string& scenario_label) {
    VerificationReport report;
    report.scenario = scenario_label;
    report.check = "dynamic_programming_monotonicity";

    double prev = value(arc.times[0], arc.states[0]);
    double max_decrease = 0.0;
    double max_change = 0.0;
    for (std::size_t k = 1; k < arc.size(); ++k) {
        const double cur = value(arc.times[k], arc.states[k]);
        max_decrease = std::max(max_decrease, prev - cur);
        max_change = std::max(max_change, std::abs(cur - prev));
        prev = cur;
    }
    report.add_node(arc.times.front(), max_decrease, error_budget,
                    "largest decrease of s -> V(s, y(s))");
    report.fitted_constants["max_decrease"] = max_decrease;
    report.fitted_constants["max_step_change"] = max_change;
    // Constant along the arc (within budget) if and only if it is optimal.
    report.fitted_constants["constant_along_arc"] =
        max_change <= error_budget ? 1.0 : 0.0;
    report.settle_verdict_from_nodes();
    return report;
}

} // namespace mayer
