#include "mayer/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "mayer/scenario.hpp"
#include "mayer/sensitivity.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mayer {

int resolve_thread_cap(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("MAYER_SENS_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : int(hw);
}

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Artifact {
    std::string file;
    std::string kind;
    std::string check;
    std::string verdict;
};

struct ScenarioOutcome {
    std::string label;
    std::vector<Artifact> artifacts;
    std::vector<Verdict> verdicts;
    std::string error; // nonempty when the pipeline aborted
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw UsageError("cannot write '" + path.string() + "'");
    out << text;
}

void write_json(const fs::path& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

json riccati_summary_json(const RiccatiSolution& R,
                          const ConjugateTimeReport& conj,
                          const VerificationReport& margins) {
    json j;
    j["status"] = R.complete() ? "complete" : "blowup";
    if (R.blowup) j["t_star"] = R.blowup->t_star;
    if (conj.t_c) j["t_c"] = *conj.t_c;
    j["min_singular_value_at_tc"] = conj.min_singular_value_at_tc;
    j["margins"] = margins.to_json();
    return j;
}

void write_riccati_csv(const fs::path& path, const RiccatiSolution& R) {
    std::ostringstream os;
    const int n = R.R.empty() ? 0 : int(R.R.front().rows());
    os << "t";
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) os << ",R_" << (i + 1) << (j + 1);
    os << "\n";
    for (std::size_t k = 0; k < R.size(); ++k) {
        os << fmt17(R.times[k]);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) os << "," << fmt17(R.R[k](i, j));
        os << "\n";
    }
    write_text(path, os.str());
}

void write_variational_csv(const fs::path& path, const VariationalSolution& vs) {
    std::ostringstream os;
    const int n = vs.X.empty() ? 0 : int(vs.X.front().rows());
    os << "t";
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) os << ",X_" << (i + 1) << (j + 1);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) os << ",P_" << (i + 1) << (j + 1);
    os << "\n";
    for (std::size_t k = 0; k < vs.size(); ++k) {
        os << fmt17(vs.times[k]);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) os << "," << fmt17(vs.X[k](i, j));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) os << "," << fmt17(vs.P[k](i, j));
        os << "\n";
    }
    write_text(path, os.str());
}

void write_grid_slice_csv(const fs::path& path, const GridValueFunction& grid,
                          int k) {
    std::ostringstream os;
    const auto& spec = grid.spec;
    if (spec.dim == 1)
        os << "x_1,value,contaminated\n";
    else
        os << "x_1,x_2,value,contaminated\n";
    const int pts = spec.points_per_axis;
    const auto& vals = grid.values[std::size_t(k)];
    const auto& cont = grid.contamination[std::size_t(k)];
    for (int i = 0; i < spec.node_count(); ++i) {
        if (spec.dim == 1) {
            os << fmt17(spec.lower(0) + i * spec.dx(0));
        } else {
            os << fmt17(spec.lower(0) + double(i / pts) * spec.dx(0)) << ","
               << fmt17(spec.lower(1) + double(i % pts) * spec.dx(1));
        }
        os << "," << fmt17(vals[std::size_t(i)]) << ","
           << (cont[std::size_t(i)] > GridValueFunction::kContaminationThreshold ? 1 : 0)
           << "\n";
    }
    write_text(path, os.str());
}

struct Pipeline {
    const RunConfig& cfg;
    ScenarioFile sf;
    fs::path dir;
    ScenarioOutcome& outcome;
    std::optional<GridValueFunction> grid;
    std::optional<Arc> backward_arc;

    void record(const std::string& file, const std::string& kind,
                const std::string& check = {}, const std::string& verdict = {}) {
        outcome.artifacts.push_back(Artifact{file, kind, check, verdict});
    }

    void emit_report(const VerificationReport& rep, const std::string& stem) {
        write_json(dir / (stem + ".json"), rep.to_json());
        record(stem + ".json", "report", rep.check, to_string(rep.verdict));
        outcome.verdicts.push_back(rep.verdict);
    }

    const Arc& ensure_backward_arc() {
        if (!backward_arc) {
            if (!sf.verify.terminal_state)
                throw UsageError("scenario '" + sf.scenario.label +
                                 "' has no verify.terminal_state; backward "
                                 "anchored commands need one");
            backward_arc = integrate_characteristics(
                sf.scenario, *sf.verify.terminal_state, sf.verify.steps);
        }
        return *backward_arc;
    }

    const GridValueFunction& ensure_grid() {
        if (!grid) {
            grid = solve_value_function(sf.scenario, sf.grid,
                                        sf.velocity_samples, sf.error_constant,
                                        cfg.threads);
        }
        return *grid;
    }

    void cmd_validate() {
        auto rep = validate_model(sf.scenario.model, 200, 2.0, cfg.seed);
        rep.scenario = sf.scenario.label;
        emit_report(rep, "validate_model");
        auto crep = validate_terminal_cost(sf.scenario.cost, sf.scenario.model.dim,
                                           100, 2.0, cfg.seed);
        crep.scenario = sf.scenario.label;
        emit_report(crep, "validate_cost");
    }

    void cmd_flow() {
        const Arc& arc = ensure_backward_arc();
        std::ostringstream os;
        arc.write_csv(os);
        write_text(dir / "arc.csv", os.str());
        record("arc.csv", "arc");
        json j;
        j["max_principle_residual"] =
            maximum_principle_residual(arc, sf.scenario.model);
        j["lipschitz_cr"] = arc.lipschitz_cr;
        j["t0"] = arc.t0();
        j["T"] = arc.T();
        j["x_t0"] = std::vector<double>(arc.states.front().data(),
                                        arc.states.front().data() +
                                            arc.states.front().size());
        write_json(dir / "flow_summary.json", j);
        record("flow_summary.json", "summary");
    }

    void cmd_hjb() {
        const auto& g = ensure_grid();
        json manifest;
        manifest["dim"] = g.spec.dim;
        manifest["points_per_axis"] = g.spec.points_per_axis;
        manifest["time_steps"] = g.spec.time_steps;
        manifest["t0"] = g.spec.t0;
        manifest["T"] = g.spec.T;
        manifest["lower"] = std::vector<double>(g.spec.lower.data(),
                                                g.spec.lower.data() + g.spec.dim);
        manifest["upper"] = std::vector<double>(g.spec.upper.data(),
                                                g.spec.upper.data() + g.spec.dim);
        manifest["error_budget"] = g.error_budget;
        manifest["contaminated_nodes"] = g.contaminated_count();
        manifest["padded_for_x0"] =
            g.spec.padded_for(sf.scenario.x0, sf.scenario.model.growth_gamma);

        int stride;
        if (cfg.export_slices == 0) stride = 0;
        else if (cfg.export_slices > 0) stride = cfg.export_slices;
        else stride = std::max(1, g.spec.time_steps / 10);
        std::vector<std::string> files;
        if (stride > 0) {
            for (int k = 0; k <= g.spec.time_steps; k += stride) {
                std::string name = "grid_slice_" + std::to_string(k) + ".csv";
                write_grid_slice_csv(dir / name, g, k);
                files.push_back(name);
                record(name, "grid_slice");
            }
            if ((g.spec.time_steps % stride) != 0) {
                std::string name =
                    "grid_slice_" + std::to_string(g.spec.time_steps) + ".csv";
                write_grid_slice_csv(dir / name, g, g.spec.time_steps);
                files.push_back(name);
                record(name, "grid_slice");
            }
        }
        manifest["slices"] = files;
        write_json(dir / "grid_manifest.json", manifest);
        record("grid_manifest.json", "grid_manifest");
    }

    void cmd_riccati() {
        const Arc& arc = ensure_backward_arc();
        const Vec z = arc.states.back();
        Mat boundary_hess = symmetrized(sf.scenario.cost.hess(z));
        auto vs = integrate_variational(arc, sf.scenario.model, boundary_hess,
                                        RiccatiAnchor::terminal_identity);
        auto R = integrate_riccati_direct(arc, sf.scenario.model,
                                          Mat(-boundary_hess),
                                          RiccatiAnchor::terminal_identity);
        auto conj = detect_conjugate_time(vs, arc, sf.scenario.model, boundary_hess);
        auto margins = comparison_bound(arc, sf.scenario.model, Mat(-boundary_hess),
                                        RiccatiAnchor::terminal_identity,
                                        sf.scenario.label);
        write_riccati_csv(dir / "riccati.csv", R);
        record("riccati.csv", "riccati");
        write_variational_csv(dir / "variational.csv", vs);
        record("variational.csv", "variational");
        write_json(dir / "riccati_summary.json",
                   riccati_summary_json(R, conj, margins));
        record("riccati_summary.json", "summary", margins.check,
               to_string(margins.verdict));
        outcome.verdicts.push_back(margins.verdict);
    }

    void cmd_conjugate() {
        const Arc& arc = ensure_backward_arc();
        const Vec z = arc.states.back();
        Mat boundary_hess = symmetrized(sf.scenario.cost.hess(z));
        auto vs = integrate_variational(arc, sf.scenario.model, boundary_hess,
                                        RiccatiAnchor::terminal_identity);
        auto conj = detect_conjugate_time(vs, arc, sf.scenario.model, boundary_hess);
        json j;
        if (conj.t_c) j["t_c"] = *conj.t_c;
        else j["t_c"] = nullptr;
        j["min_singular_value_at_tc"] = conj.min_singular_value_at_tc;
        j["det_X"] = json::array();
        for (auto& [t, d] : conj.det_X_trace) j["det_X"].push_back({{"t", t}, {"det", d}});
        j["r_norm"] = json::array();
        for (auto& [t, r] : conj.r_norm_growth) j["r_norm"].push_back({{"t", t}, {"norm", r}});
        write_json(dir / "conjugate.json", j);
        record("conjugate.json", "conjugate");
    }

    void cmd_verify() {
        const auto& g = ensure_grid();
        SensitivityOptions opts;
        opts.steps = cfg.steps.value_or(sf.verify.steps);
        opts.sample_times = sf.verify.sample_times;
        opts.probes.seed = cfg.seed;
        opts.probes.r0_cells = sf.verify.probe_radius_cells;
        opts.terminal_state = sf.verify.terminal_state;

        std::vector<std::string> checks =
            cfg.checks.empty() ? sf.verify.checks : cfg.checks;
        if (checks.empty()) checks = {"first_order", "comparison"};

        for (const std::string& name : checks) {
            if (name == "validate") {
                cmd_validate();
            } else if (name == "first_order") {
                emit_report(verify_first_order_propagation(sf.scenario, g, opts),
                            "verify_first_order");
            } else if (name == "subjet") {
                Mat R0;
                if (sf.verify.subjet_R0) R0 = *sf.verify.subjet_R0;
                else R0 = Mat(-numerical_hessian(g, sf.scenario.t0, sf.scenario.x0));
                emit_report(verify_subjet_propagation(sf.scenario, g, R0, opts),
                            "verify_subjet");
            } else if (name == "superjet") {
                Mat Q;
                if (sf.verify.superjet_Q) Q = *sf.verify.superjet_Q;
                else {
                    const Arc& arc = ensure_backward_arc();
                    Q = symmetrized(sf.scenario.cost.hess(arc.states.back()));
                }
                emit_report(verify_superjet_propagation(sf.scenario, g, Q, opts),
                            "verify_superjet");
            } else if (name == "hessian_forward") {
                emit_report(verify_hessian_propagation(
                                sf.scenario, g, PropagationDirection::forward, opts),
                            "verify_hessian_forward");
            } else if (name == "hessian_backward") {
                emit_report(verify_hessian_propagation(
                                sf.scenario, g, PropagationDirection::backward, opts),
                            "verify_hessian_backward");
            } else if (name == "comparison") {
                const Arc& arc = ensure_backward_arc();
                const Vec z = arc.states.back();
                Mat boundary = Mat(-symmetrized(sf.scenario.cost.hess(z)));
                emit_report(comparison_bound(arc, sf.scenario.model, boundary,
                                             RiccatiAnchor::terminal_identity,
                                             sf.scenario.label),
                            "verify_comparison");
            } else if (name == "regularity") {
                emit_report(probe_c2_regularity(sf.scenario, g, opts, cfg.probe),
                            "verify_regularity");
            } else {
                throw UsageError("unknown check '" + name + "'");
            }
        }
    }

    void run_command(const std::string& command) {
        if (command == "validate") cmd_validate();
        else if (command == "flow") cmd_flow();
        else if (command == "hjb") cmd_hjb();
        else if (command == "riccati") cmd_riccati();
        else if (command == "conjugate") cmd_conjugate();
        else if (command == "verify") cmd_verify();
        else if (command == "all") {
            cmd_validate();
            cmd_flow();
            cmd_hjb();
            cmd_riccati();
            cmd_conjugate();
            cmd_verify();
        } else {
            throw UsageError("unknown command '" + command + "'");
        }
    }
};

ScenarioFile apply_overrides(ScenarioFile sf, const RunConfig& cfg) {
    if (cfg.grid_points) sf.grid.points_per_axis = *cfg.grid_points;
    if (cfg.time_steps) sf.grid.time_steps = *cfg.time_steps;
    if (cfg.directions) sf.velocity_samples = *cfg.directions;
    if (cfg.steps) sf.verify.steps = *cfg.steps;
    return sf;
}

} // namespace

int run(const RunConfig& config) {
    if (config.scenario_paths.empty()) {
        std::cerr << "error: no scenario files given (use --scenario PATH)\n";
        return 1;
    }

    std::vector<ScenarioOutcome> outcomes(config.scenario_paths.size());
    std::error_code ec;
    fs::create_directories(config.out_dir, ec);
    if (ec) {
        std::cerr << "error: cannot create output directory '" << config.out_dir
                  << "'\n";
        return 1;
    }

    // Scenario batch over worker slots; each worker owns its subdirectory.
    const int workers = std::min<int>(resolve_thread_cap(config.threads),
                                      int(config.scenario_paths.size()));
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        while (true) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= config.scenario_paths.size()) break;
            ScenarioOutcome& outcome = outcomes[idx];
            try {
                ScenarioFile sf =
                    apply_overrides(load_scenario_file(config.scenario_paths[idx]),
                                    config);
                outcome.label = sf.scenario.label;
                fs::path dir = fs::path(config.out_dir) / sf.scenario.label;
                fs::create_directories(dir);
                Pipeline p{config, std::move(sf), dir, outcome, {}, {}};
                p.run_command(config.command);
            } catch (const Error& e) {
                outcome.error = e.code() + ": " + e.what();
            } catch (const std::exception& e) {
                outcome.error = std::string("error: ") + e.what();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    // Single-writer manifest, scenarios in input order.
    json manifest;
    manifest["command"] = config.command;
    manifest["seed"] = config.seed;
    manifest["scenarios"] = json::array();
    bool any_fail = false, any_inconclusive = false, any_error = false;
    for (const auto& o : outcomes) {
        json js;
        js["label"] = o.label;
        js["artifacts"] = json::array();
        for (const auto& a : o.artifacts) {
            json ja{{"file", a.file}, {"kind", a.kind}};
            if (!a.check.empty()) ja["check"] = a.check;
            if (!a.verdict.empty()) ja["verdict"] = a.verdict;
            js["artifacts"].push_back(ja);
        }
        if (!o.error.empty()) {
            js["error"] = o.error;
            any_error = true;
        }
        manifest["scenarios"].push_back(js);
        for (Verdict v : o.verdicts) {
            if (v == Verdict::fail) any_fail = true;
            if (v == Verdict::inconclusive) any_inconclusive = true;
        }
    }

    int exit_code = 0;
    if (any_fail) exit_code = 2;
    else if (any_inconclusive && !config.allow_inconclusive) exit_code = 2;
    if (any_error) exit_code = 1;
    manifest["exit"] = exit_code;
    try {
        write_json(fs::path(config.out_dir) / "manifest.json", manifest);
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }

    // human-readable summary
    for (const auto& o : outcomes) {
        if (!o.error.empty()) {
            std::cout << o.label << ": ERROR " << o.error << "\n";
            continue;
        }
        std::size_t pass = 0, fail = 0, inc = 0;
        for (Verdict v : o.verdicts) {
            if (v == Verdict::pass) ++pass;
            else if (v == Verdict::fail) ++fail;
            else ++inc;
        }
        std::cout << o.label << ": " << pass << " pass, " << fail << " fail, "
                  << inc << " inconclusive (" << o.artifacts.size()
                  << " artifacts)\n";
    }
    return exit_code;
}

} // namespace mayer
