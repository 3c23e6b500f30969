#include "mayer/report.hpp"

namespace mayer {

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::pass: return "pass";
        case Verdict::fail: return "fail";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "unknown";
}

void VerificationReport::add_node(double t, double residual, double tolerance,
                                  std::string detail) {
    nodes.push_back(CheckNode{t, residual, tolerance, std::move(detail)});
}

void VerificationReport::settle_verdict_from_nodes() {
    if (verdict == Verdict::inconclusive) return;
    for (const auto& n : nodes) {
        if (!n.ok()) {
            verdict = Verdict::fail;
            return;
        }
    }
}

nlohmann::json VerificationReport::to_json() const {
    nlohmann::json j;
    j["scenario"] = scenario;
    j["check"] = check;
    j["premise"] = {{"ok", premise_ok}, {"detail", premise_detail}};
    j["verdict"] = to_string(verdict);
    j["nodes"] = nlohmann::json::array();
    for (const auto& n : nodes) {
        nlohmann::json jn{{"t", n.t}, {"residual", n.residual},
                          {"tolerance", n.tolerance}};
        if (!n.detail.empty()) jn["detail"] = n.detail;
        j["nodes"].push_back(jn);
    }
    j["fitted_constants"] = fitted_constants;
    if (!notes.empty()) j["notes"] = notes;
    if (!remainder_tables.empty()) {
        j["remainder_tables"] = nlohmann::json::array();
        for (const auto& [t, samples] : remainder_tables) {
            nlohmann::json jt{{"t", t}, {"samples", nlohmann::json::array()}};
            for (const auto& s : samples) {
                jt["samples"].push_back({{"radius", s.radius},
                                         {"m", s.m},
                                         {"noise_floor", s.noise_floor}});
            }
            j["remainder_tables"].push_back(jt);
        }
    }
    return j;
}

} // namespace mayer
