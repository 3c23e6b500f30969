#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace mayer {

enum class Verdict { pass, fail, inconclusive };

std::string to_string(Verdict v);

/// One residual record: a quantity that must stay within `tolerance`.
struct CheckNode {
    double t = 0.0;
    double residual = 0.0;
    double tolerance = 0.0;
    std::string detail; // optional, e.g. which radius/direction was decisive
    bool ok() const { return residual <= tolerance; }
};

/// Dyadic remainder table from a jet or first-order probe.
struct RemainderSample {
    double radius = 0.0;
    double m = 0.0;          // extremal remainder / radius^order
    double noise_floor = 0.0; // grid-error contribution at this radius
};

/// Outcome of one verification check. `verdict == pass` iff every node is
/// within tolerance; `inconclusive` is reserved for resolution-limited
/// probes and failed premises (recorded in `premise_detail`).
struct VerificationReport {
    std::string scenario;
    std::string check;
    bool premise_ok = true;
    std::string premise_detail;
    std::vector<CheckNode> nodes;
    std::map<std::string, double> fitted_constants;
    std::vector<std::string> notes;
    std::vector<std::pair<double, std::vector<RemainderSample>>> remainder_tables;
    Verdict verdict = Verdict::pass;

    void add_node(double t, double residual, double tolerance,
                  std::string detail = {});
    /// Downgrades pass -> fail when a node violates its tolerance.
    void settle_verdict_from_nodes();

    nlohmann::json to_json() const;
};

} // namespace mayer
