#include <iostream>
#include "mayer/sensitivity.hpp"
#include "oracles.hpp"
using namespace mayer;
using oracle::vec2;
int main() {
    auto sc = oracle::ball2d_scenario();
    GridSpec s; s.dim = 2; s.lower = vec2(-3,-3); s.upper = vec2(3,3);
    s.points_per_axis = 301; s.time_steps = 240; s.t0 = sc.t0; s.T = sc.T;
    auto g = solve_value_function(sc, s, 64, 6e-3);
    SensitivityOptions opts; opts.steps = 1000; opts.terminal_state = vec2(1.0, 0.0);
    auto rep = verify_superjet_propagation(sc, g, Mat(-Mat::Identity(2,2)), opts);
    std::cout << to_string(rep.verdict) << "\n";
    for (auto& [t, tab] : rep.remainder_tables) {
        std::cout << "t=" << t << ": ";
        for (auto& x : tab) printf("%.4f/%.4f  ", x.m, x.noise_floor);
        std::cout << "\n";
    }
}
