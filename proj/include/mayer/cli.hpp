#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mayer/linalg.hpp"

namespace mayer {

/// Pipeline configuration. Exit codes of run(): 0 when every executed
/// verification passes (inconclusive verdicts count as acceptable only with
/// allow_inconclusive), 2 when any verification fails or is inconclusive
/// without the flag, 1 on usage/IO/schema errors.
struct RunConfig {
    std::vector<std::string> scenario_paths;
    std::string command = "all"; // validate|flow|hjb|riccati|conjugate|verify|all
    std::optional<int> grid_points;
    std::optional<int> time_steps;
    std::optional<int> directions;
    std::optional<int> steps;
    std::string out_dir = "out";
    std::uint64_t seed = 20240614;
    bool allow_inconclusive = false;
    /// Overrides the verification base point (t, x) for the regularity and
    /// derivative probes.
    std::optional<std::pair<double, Vec>> probe;
    std::vector<std::string> checks; // overrides the scenario's check list
    /// Grid slice export: <0 default (about 10 slices), 0 none, N stride 1/N.
    int export_slices = -1;
    int threads = 0; // <=0: MAYER_SENS_THREADS or hardware concurrency
};

int run(const RunConfig& config);

/// Worker cap: MAYER_SENS_THREADS when set, otherwise hardware concurrency.
int resolve_thread_cap(int requested);

} // namespace mayer
