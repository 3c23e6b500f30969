#pragma once

#include <iosfwd>
#include <vector>

#include "mayer/hamiltonian.hpp"

namespace mayer {

enum class ArcDirection { forward_from_t0, backward_from_T };

/// Time-sampled solution (x(t), p(t)) of the characteristic system
///   xdot = grad_p H(x,p),   -pdot = grad_x H(x,p),
/// stored in forward time order on a uniform grid.
struct Arc {
    std::vector<double> times;
    std::vector<Vec> states;
    std::vector<Vec> costates;
    ArcDirection direction = ArcDirection::backward_from_T;
    double dt = 0.0;
    /// Empirical bound on |pdot|/|p| along the arc; feeds the Gronwall
    /// consistency check between min and max costate norms.
    double lipschitz_cr = 0.0;

    int dim() const { return times.empty() ? 0 : int(states.front().size()); }
    std::size_t size() const { return times.size(); }
    double t0() const { return times.front(); }
    double T() const { return times.back(); }

    /// Linear interpolation of (x,p) at an arbitrary time inside [t0,T].
    Vec state_at(double t) const;
    Vec costate_at(double t) const;

    /// Throws ModelInvalid if the structural invariants are violated:
    /// matching lengths, uniform step, the dual-arc dichotomy (p never
    /// vanishes or vanishes identically) and the Gronwall bound
    /// max|p| <= exp(cr (T-t0)) min|p|.
    void check_valid() const;

    /// CSV with header t,x_1..x_n,p_1..p_n, 17 significant digits.
    void write_csv(std::ostream& os) const;
};

/// Integrates the characteristic system backward from x(T) = terminal_state,
/// p(T) = -grad phi(terminal_state) with fixed-step classical RK4 run in the
/// reversed time variable. The returned arc is in forward time order.
Arc integrate_characteristics(const ControlScenario& scenario,
                              const Vec& terminal_state, int steps);

/// Forward integration from (y0, p0) at t0; used by the forward-propagation
/// checks where p0 = -grad_x V(t0, y0).
Arc integrate_flow_from_initial(const ControlScenario& scenario, const Vec& y0,
                                const Vec& p0, int steps);

/// max_i |H(x_i,p_i) - <p_i, xdot_i>| over interior nodes, with xdot by
/// central differences in the stored samples — an independent check of the
/// maximum-principle identity, not a restatement of the integrator.
double maximum_principle_residual(const Arc& arc, const HamiltonianModel& model);

/// Samples s -> V(s, y(s)) along an arc through a value-function view and
/// reports the largest decrease; flags a violation only when the decrease
/// exceeds the error budget. `value` must throw OutOfDomain /
/// ContaminatedRegion for unusable query points.
VerificationReport dynamic_programming_monotonicity(
    const std::function<double(double, const Vec&)>& value, double error_budget,
    const Arc& arc, const std::string& scenario_label = {});

} // namespace mayer
