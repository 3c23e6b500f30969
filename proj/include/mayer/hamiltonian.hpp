#pragma once

#include <functional>
#include <optional>
#include <string>

#include "mayer/errors.hpp"
#include "mayer/linalg.hpp"
#include "mayer/report.hpp"

namespace mayer {

enum class Smoothness { C2, C2_1 };
enum class FamilyTag { interval_box, affine_control, custom };
enum class CostRegularity { Lipschitz, C1_1, C2, C2_m };

/// The four partial Hessian blocks of H at (x,p).
/// Conventions: xp is the Jacobian of grad_p with respect to x, px the
/// Jacobian of grad_x with respect to p, so px == xp^T for C^2 models.
struct HessianBlocks {
    Mat xx, xp, px, pp;
};

/// Evaluator bundle for a support-function Hamiltonian
/// H(x,p) = sup_{v in F(x)} <v,p>. Immutable after construction; all
/// evaluators are pure and safe to call concurrently. Derivative maps are
/// only defined outside the guard cone around p = 0 and raise
/// NonsmoothPoint inside it.
struct HamiltonianModel {
    int dim = 0;
    std::function<double(const Vec&, const Vec&)> eval;
    std::function<Vec(const Vec&, const Vec&)> grad_p;
    std::function<Vec(const Vec&, const Vec&)> grad_x;
    std::function<HessianBlocks(const Vec&, const Vec&)> hess;
    double growth_gamma = 0.0; // linear-growth constant of F
    Smoothness smoothness = Smoothness::C2;
    FamilyTag family_tag = FamilyTag::custom;
};

/// Terminal cost phi with optional analytic derivatives.
struct TerminalCost {
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> grad;
    std::function<Mat(const Vec&)> hess;
    CostRegularity regularity = CostRegularity::C2;
    double holder_exponent = 1.0; // only meaningful for C2_m
    bool semiconcave = false;
};

struct ControlScenario {
    HamiltonianModel model;
    TerminalCost cost;
    double t0 = 0.0;
    double T = 1.0;
    Vec x0;
    std::string label;

    void check_valid() const; // throws ModelInvalid on bad horizon/dimension
};

/// F(x) = [-radius, radius]^dim, H(x,p) = radius * sum_i |p_i|.
/// Derivatives exist wherever every component of p clears the guard cone.
HamiltonianModel make_interval_box_model(int dim, double radius);

/// Affine-in-control dynamics f(x) = h(x) + g(x) u with u in the closed
/// unit ball of R^m: H(x,p) = <p, h(x)> + |g(x)^T p|. When analytic
/// callbacks for Dh / D^2h are absent, x-derivatives fall back to central
/// finite differences with step 1e-5 * (1 + |x|). g(x) must have full row
/// rank at every probed x (checked on construction at a few sample points).
struct AffineControlOptions {
    std::function<Mat(const Vec&)> h_jacobian;                // optional
    std::function<std::vector<Mat>(const Vec&)> h_hessians;   // optional, one per component
    bool g_constant = false; // skip x-derivatives of the |g^T p| term
};

HamiltonianModel make_affine_control_model(
    std::function<Vec(const Vec&)> h_field,
    std::function<Mat(const Vec&)> g_field, int dim, int m,
    AffineControlOptions opts = {});

/// Builds a model from user-supplied evaluators; any missing derivative is
/// replaced by a central finite difference of the next-lower one.
HamiltonianModel make_custom_model(
    int dim, std::function<double(const Vec&, const Vec&)> eval,
    std::function<Vec(const Vec&, const Vec&)> grad_p = {},
    std::function<Vec(const Vec&, const Vec&)> grad_x = {},
    std::function<HessianBlocks(const Vec&, const Vec&)> hess = {},
    double growth_gamma = 1.0);

/// phi(x) = 0.5 x^T A x + b^T x + c with analytic derivatives.
TerminalCost make_quadratic_cost(const Mat& A, const Vec& b, double c);

/// Randomized structural audit: positive homogeneity, the Euler identity
/// H = <grad_p, p>, the midpoint semiconvexity surrogate (smallest feasible
/// constant c is reported), positive semidefiniteness of H_pp and the
/// degeneracy H_pp p = 0. Residuals beyond tolerance become failed report
/// entries, never exceptions.
VerificationReport validate_model(const HamiltonianModel& model,
                                  int sample_count, double radius,
                                  std::uint64_t seed = 20240614);

/// Checks hess symmetry and grad-vs-value finite-difference consistency of
/// a terminal cost on random samples.
VerificationReport validate_terminal_cost(const TerminalCost& cost, int dim,
                                          int sample_count, double radius,
                                          std::uint64_t seed = 20240614);

/// Central finite-difference step used by all derivative fallbacks.
inline double fd_step(double scale) { return 1e-5 * (1.0 + std::abs(scale)); }

} // namespace mayer
