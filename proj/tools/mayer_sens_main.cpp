#include <CLI11.hpp>

#include <sstream>

#include "mayer/cli.hpp"
#include "mayer/scenario.hpp"

int main(int argc, char** argv) {
    CLI::App app{"mayer_sens: value functions, characteristic arcs and Riccati "
                 "flows for Mayer problems over differential inclusions, with "
                 "numerical verification of first- and second-order "
                 "sensitivity relations"};

    mayer::RunConfig cfg;
    std::string probe_spec;
    std::string checks_spec;

    app.add_option("--scenario", cfg.scenario_paths,
                   "scenario file(s); repeat for a batch")
        ->required();
    app.add_option("--command", cfg.command,
                   "validate|flow|hjb|riccati|conjugate|verify|all");
    app.add_option("--steps", cfg.steps, "characteristic/Riccati nodes");
    app.add_option("--grid-points", cfg.grid_points,
                   "override grid points per axis (odd, >= 41)");
    app.add_option("--time-steps", cfg.time_steps, "override grid time steps");
    app.add_option("--directions", cfg.directions,
                   "override velocity sample count");
    app.add_option("--seed", cfg.seed, "seed for sampled directions");
    app.add_option("--out", cfg.out_dir, "output directory");
    app.add_flag("--allow-inconclusive", cfg.allow_inconclusive,
                 "exit 0 when verifications are inconclusive-by-resolution");
    app.add_option("--probe", probe_spec,
                   "override the verification base point: t,x1[,x2]");
    app.add_option("--checks", checks_spec,
                   "comma-separated check list overriding the scenario");
    app.add_option("--export-slices", cfg.export_slices,
                   "grid slice export stride (0 = none; default ~10 slices)");
    app.add_option("--threads", cfg.threads,
                   "worker cap (default: MAYER_SENS_THREADS or hardware)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (!probe_spec.empty()) {
            std::vector<double> vals;
            std::stringstream ss(probe_spec);
            std::string item;
            while (std::getline(ss, item, ',')) vals.push_back(std::stod(item));
            if (vals.size() < 2)
                throw mayer::UsageError("--probe needs t and at least one coordinate");
            mayer::Vec x(vals.size() - 1);
            for (std::size_t i = 1; i < vals.size(); ++i) x(int(i - 1)) = vals[i];
            cfg.probe = std::make_pair(vals[0], x);
        }
        if (!checks_spec.empty()) {
            std::stringstream ss(checks_spec);
            std::string item;
            while (std::getline(ss, item, ',')) {
                if (!item.empty()) cfg.checks.push_back(item);
            }
        }
        return mayer::run(cfg);
    } catch (const mayer::UsageError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 1;
    } catch (const mayer::Error& e) {
        std::fprintf(stderr, "%s: %s\n", e.code().c_str(), e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
