#pragma once

namespace mayer {

/// One classical 4th-order Runge-Kutta step. State must support addition
/// and scalar multiplication (Eigen vectors/matrices both qualify).
template <class State, class Deriv>
State rk4_step(const State& y, double t, double h, Deriv&& f) {
    State k1 = f(t, y);
    State k2 = f(t + 0.5 * h, State(y + (0.5 * h) * k1));
    State k3 = f(t + 0.5 * h, State(y + (0.5 * h) * k2));
    State k4 = f(t + h, State(y + h * k3));
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

} // namespace mayer
