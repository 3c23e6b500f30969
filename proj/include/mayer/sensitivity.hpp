#pragma once

#include <optional>

#include "mayer/hjb.hpp"
#include "mayer/riccati.hpp"

namespace mayer {

enum class PropagationDirection { forward, backward };

struct SensitivityOptions {
    int steps = 1000;       // characteristic / Riccati integration nodes
    int sample_times = 5;   // equispaced verification times per check
    ProbeConfig probes;
    /// Seed for backward-anchored arcs; forward-anchored checks derive the
    /// costate from the grid gradient at (t0, x0) instead.
    std::optional<Vec> terminal_state;
};

/// Arc through (t0, x0) seeded with p0 = -numerical_gradient(gridV, t0, x0).
Arc arc_from_initial(const ControlScenario& scenario,
                     const GridValueFunction& gridV, int steps);

/// Proximal subdifferential propagation: -p(t) stays a proximal subgradient
/// of V(t,.) at x(t) with one constant c for all t. The fitted c across the
/// sampled times is reported; a failed probe at t0 is a failed premise.
VerificationReport verify_first_order_propagation(
    const ControlScenario& scenario, const GridValueFunction& gridV,
    const SensitivityOptions& opts = {});

/// Subjet propagation: seeds the Riccati flow forward with R(t0) = R0 where
/// (-p(t0), -R0) must pass the subjet probe at (t0, x0), then checks the
/// candidate (-p(t), -R(t)) at sampled times up to the blow-up frontier.
/// When phi is flagged semiconcave the flow must be complete up to T.
VerificationReport verify_subjet_propagation(const ControlScenario& scenario,
                                             const GridValueFunction& gridV,
                                             const Mat& R0,
                                             const SensitivityOptions& opts = {});

/// Superjet propagation backward from T: (q, Qjet) must be a superjet of
/// phi at x(T) with q != 0; R runs backward from R(T) = -Qjet and the
/// candidate (-p(t), -R(t)) is probed on the surviving interval (a, T].
/// The blow-up frontier a is recorded when present.
VerificationReport verify_superjet_propagation(
    const ControlScenario& scenario, const GridValueFunction& gridV,
    const Mat& Qjet, const SensitivityOptions& opts = {});

/// Hessian propagation: R(t) must match -numerical_hessian(gridV,t,x(t)) at
/// the sampled times, with the anchor taken from the grid Hessian (forward)
/// or from the analytic Hessian of phi at x(T) (backward). The quotient
/// P X^{-1} from the variational system cross-checks the direct flow.
VerificationReport verify_hessian_propagation(const ControlScenario& scenario,
                                              const GridValueFunction& gridV,
                                              PropagationDirection direction,
                                              const SensitivityOptions& opts = {});

/// C^2 regularity probe at (t0, x0) (or an explicit probe point): requires a
/// nonzero gradient and a passing proximal probe, then asserts the absence
/// of conjugate times on [t0,T] and bounded numerical-Hessian jumps on a
/// tube around the trajectory. Refuses (inconclusive premise) when the
/// gradient is indistinguishable from zero: with q = 0 the twice
/// differentiability conclusion genuinely fails on the kink locus.
VerificationReport probe_c2_regularity(
    const ControlScenario& scenario, const GridValueFunction& gridV,
    const SensitivityOptions& opts = {},
    std::optional<std::pair<double, Vec>> probe_point = std::nullopt);

} // namespace mayer
