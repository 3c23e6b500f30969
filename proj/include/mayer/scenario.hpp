#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mayer/hamiltonian.hpp"
#include "mayer/hjb.hpp"

namespace mayer {

/// Sum-of-terms scalar field over x: each term is a coefficient times a
/// product of factors x<i>^k, sin(x<i>) or cos(x<i>), e.g. "x2 - 0.5 sin(x1)".
/// Evaluation and first/second derivatives are analytic.
class FieldExpr {
public:
    static FieldExpr parse(const std::string& text);
    static FieldExpr zero() { return FieldExpr{}; }

    double eval(const Vec& x) const;
    Vec grad(const Vec& x) const;
    Mat hess(const Vec& x) const;
    int max_var() const; // highest variable index used (1-based), 0 if none

private:
    enum class FactorKind { power, sine, cosine };
    struct Factor {
        int var = 1; // 1-based
        int power = 1;
        FactorKind kind = FactorKind::power;
    };
    struct Term {
        double coef = 0.0;
        std::vector<Factor> factors;
    };
    std::vector<Term> terms_;

    static double factor_eval(const Factor& f, double v);
    static double factor_d1(const Factor& f, double v);
    static double factor_d2(const Factor& f, double v);
};

struct ScenarioVerifyConfig {
    std::optional<Vec> terminal_state; // backward-anchored checks
    std::vector<std::string> checks;   // subset of the known check names
    std::optional<Mat> subjet_R0;
    std::optional<Mat> superjet_Q;
    int steps = 1000;
    int sample_times = 5;
    double probe_radius_cells = 32.0; // r0 of the dyadic probe radii, in cells
};

/// Everything a scenario file defines: the control problem, the oracle grid
/// defaults and the verification plan.
struct ScenarioFile {
    ControlScenario scenario;
    GridSpec grid;
    int velocity_samples = 64;
    double error_constant = 5e-3; // scheme constant from the convergence study
    ScenarioVerifyConfig verify;
};

/// Parses the key/value scenario format (see README for the schema).
/// Errors cite the offending line and key.
ScenarioFile load_scenario_file(const std::string& path);
ScenarioFile parse_scenario_text(const std::string& text);

const std::vector<std::string>& known_check_names();

} // namespace mayer
