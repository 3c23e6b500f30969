#pragma once

#include <optional>
#include <vector>

#include "mayer/characteristics.hpp"

namespace mayer {

enum class RiccatiAnchor { terminal_identity, initial_identity };
enum class RiccatiSource { direct_integration, quotient_PX_inverse };

/// Solution (X, P) of the variational system
///   Xdot = H_xp[t] X + H_pp[t] P,   -Pdot = H_xx[t] X + H_px[t] P
/// along a fixed arc, anchored with X = I at one end.
struct VariationalSolution {
    std::vector<double> times;
    std::vector<Mat> X;
    std::vector<Mat> P;
    RiccatiAnchor anchor = RiccatiAnchor::terminal_identity;

    std::size_t size() const { return times.size(); }
    std::size_t anchor_index() const {
        return anchor == RiccatiAnchor::terminal_identity ? times.size() - 1 : 0;
    }
    /// Throws ModelInvalid when the anchor is not the identity, a value is
    /// non-finite, or the symplectic invariant X^T P - P^T X drifts.
    void check_valid() const;
};

struct BlowupInfo {
    double t_star = 0.0;
};

struct RiccatiSolution {
    std::vector<double> times; // ordered from the anchor outward
    std::vector<Mat> R;        // symmetric at every node
    std::optional<BlowupInfo> blowup;
    RiccatiSource source = RiccatiSource::direct_integration;

    bool complete() const { return !blowup.has_value(); }
    std::size_t size() const { return times.size(); }
    /// R at time t by linear interpolation between stored nodes; throws
    /// OutOfDomain outside the stored range.
    Mat at(double t) const;
    void check_valid() const;
};

struct ConjugateTimeReport {
    std::optional<double> t_c;
    std::vector<std::pair<double, double>> det_X_trace;
    double min_singular_value_at_tc = 0.0;
    std::vector<std::pair<double, double>> r_norm_growth;
};

inline constexpr double kRiccatiBlowupThreshold = 1e8;
inline constexpr double kInvertibilityFloor = 1e-10; // relative to ||X||

/// Integrates the variational system along the arc with RK4; Hessian blocks
/// are evaluated at stage points via linear interpolation of the stored
/// (x,p) samples. Terminal anchor: X(T) = I, P(T) = -boundary_hessian;
/// initial anchor: X(t0) = I, P(t0) = -boundary_hessian.
VariationalSolution integrate_variational(const Arc& arc,
                                          const HamiltonianModel& model,
                                          const Mat& boundary_hessian,
                                          RiccatiAnchor anchor =
                                              RiccatiAnchor::terminal_identity);

/// Direct RK4 integration of
///   Rdot + H_px R + R H_xp + R H_pp R + H_xx = 0
/// from the chosen anchor. After each step R is symmetrized; an asymmetry
/// beyond 1e-6 (1 + ||R||) before symmetrization aborts with AsymmetryDrift.
/// Integration stops with blow-up status when ||R|| exceeds 1e8.
RiccatiSolution integrate_riccati_direct(const Arc& arc,
                                         const HamiltonianModel& model,
                                         const Mat& boundary_R,
                                         RiccatiAnchor anchor);

/// R(t_i) = P(t_i) X(t_i)^{-1} wherever the smallest singular value of X
/// clears the invertibility floor; nodes beyond the first failure are
/// truncated and recorded as the blow-up frontier.
RiccatiSolution riccati_from_variational(const VariationalSolution& vs);

/// Scans det X from the anchor outward for a sign change or collapse below
/// 1e-12 of the anchor scale, then refines the zero by bisection with
/// re-integration on the bracket. Also returns the det trace and the growth
/// of ||P X^{-1}|| for diagnostics.
ConjugateTimeReport detect_conjugate_time(const VariationalSolution& vs,
                                          const Arc& arc,
                                          const HamiltonianModel& model,
                                          const Mat& boundary_hessian);

/// Integrates the linear comparison equation
///   Qdot + H_px Q + Q H_xp + H_xx = 0
/// with the same boundary data and verifies the ordering against the full
/// Riccati flow on every common node: R >= Q when anchored at T, R <= Q when
/// anchored at t0 (the quadratic term pushes the flow one way in each
/// direction). H_pp must be positive semidefinite along the arc.
VerificationReport comparison_bound(const Arc& arc, const HamiltonianModel& model,
                                    const Mat& boundary_R, RiccatiAnchor anchor,
                                    const std::string& scenario_label = {});

} // namespace mayer
