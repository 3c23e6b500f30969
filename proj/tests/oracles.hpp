#pragma once

// Closed-form references and scenario builders shared by the test suites.
// Everything here is independent of the library's own evaluation paths: the
// formulas are written out directly and finite differences are implemented
// locally, so they can serve as oracles for the production code.

#include <cmath>
#include <functional>

#include "mayer/hamiltonian.hpp"
#include "mayer/linalg.hpp"

namespace oracle {

using mayer::Mat;
using mayer::Vec;

inline Vec vec1(double a) {
    Vec v(1);
    v << a;
    return v;
}

inline Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

// -- 1-D box scenario: F = [-1,1], phi(z) = z^2, horizon [0, T] -------------
// V(t,x) = (x+t-T)^2 for x >= T-t, (x-t+T)^2 for x <= t-T, 0 between.

inline double box1d_value(double t, double x, double T) {
    const double tau = T - t;
    if (x >= tau) return (x - tau) * (x - tau);
    if (x <= -tau) return (x + tau) * (x + tau);
    return 0.0;
}

inline double box1d_grad(double t, double x, double T) {
    const double tau = T - t;
    if (x >= tau) return 2.0 * (x - tau);
    if (x <= -tau) return 2.0 * (x + tau);
    return 0.0;
}

inline double box1d_hess(double t, double x, double T) {
    const double tau = T - t;
    if (x > tau || x < -tau) return 2.0;
    return 0.0;
}

// -- 2-D ball scenario: F = unit ball, phi(z) = -|z|^2/2 --------------------
// The farthest endpoint is reached radially: V(t,x) = -(|x| + T - t)^2 / 2.

inline double ball2d_value(double t, const Vec& x, double T) {
    const double s = x.norm() + (T - t);
    return -0.5 * s * s;
}

inline Vec ball2d_grad(double t, const Vec& x, double T) {
    const double r = x.norm();
    return Vec(-(r + (T - t)) * x / r);
}

inline Mat ball2d_hess(double t, const Vec& x, double T) {
    const double r = x.norm();
    Mat outer = (x / r) * (x / r).transpose();
    Mat I = Mat::Identity(x.size(), x.size());
    return Mat(-outer - (r + (T - t)) / r * (I - outer));
}

// -- scenario builders -------------------------------------------------------

inline mayer::ControlScenario box1d_scenario(double x0 = 2.0, double T = 1.0) {
    mayer::ControlScenario sc;
    sc.model = mayer::make_interval_box_model(1, 1.0);
    Mat A(1, 1);
    A << 2.0;
    sc.cost = mayer::make_quadratic_cost(A, Vec::Zero(1), 0.0);
    sc.cost.semiconcave = true;
    sc.t0 = 0.0;
    sc.T = T;
    sc.x0 = vec1(x0);
    sc.label = "box1d";
    return sc;
}

// t0 sits strictly before the conjugate time T - 1 so the backward Riccati
// escape is observable inside the horizon.
inline mayer::ControlScenario ball2d_scenario(double T = 1.0,
                                              double t0 = -0.2) {
    mayer::ControlScenario sc;
    auto h = [](const Vec&) { return Vec(Vec::Zero(2)); };
    auto g = [](const Vec&) { return Mat(Mat::Identity(2, 2)); };
    mayer::AffineControlOptions opts;
    opts.g_constant = true;
    opts.h_jacobian = [](const Vec&) { return Mat(Mat::Zero(2, 2)); };
    opts.h_hessians = [](const Vec&) {
        return std::vector<Mat>{Mat::Zero(2, 2), Mat::Zero(2, 2)};
    };
    sc.model = mayer::make_affine_control_model(h, g, 2, 2, opts);
    sc.cost = mayer::make_quadratic_cost(Mat(-Mat::Identity(2, 2)),
                                         Vec::Zero(2), 0.0);
    sc.cost.semiconcave = true;
    sc.t0 = t0;
    sc.T = T;
    sc.x0 = vec2(t0, 0.0);
    sc.label = "ball2d";
    return sc;
}

// Rotation drift h(x) = (x2, -x1) with unit control ball; the characteristic
// flow has the closed form
//   p(t) = Rot(t-T) p_T,   x(t) = Rot(t-t0) x0 + (t-t0) Rot(t-T) p_T/|p_T|,
// where Rot(a) = exp(a J) and J = [[0,1],[-1,0]].
inline Mat rot(double a) {
    Mat R(2, 2);
    R << std::cos(a), std::sin(a), -std::sin(a), std::cos(a);
    return R;
}

inline mayer::ControlScenario rotation_scenario(double T = 1.0) {
    mayer::ControlScenario sc;
    auto h = [](const Vec& x) { return Vec(vec2(x(1), -x(0))); };
    auto g = [](const Vec&) { return Mat(Mat::Identity(2, 2)); };
    mayer::AffineControlOptions opts;
    opts.g_constant = true;
    opts.h_jacobian = [](const Vec&) {
        Mat J(2, 2);
        J << 0, 1, -1, 0;
        return J;
    };
    opts.h_hessians = [](const Vec&) {
        return std::vector<Mat>{Mat::Zero(2, 2), Mat::Zero(2, 2)};
    };
    sc.model = mayer::make_affine_control_model(h, g, 2, 2, opts);
    sc.cost = mayer::make_quadratic_cost(Mat(Mat::Identity(2, 2)), Vec::Zero(2),
                                         0.0);
    sc.t0 = 0.0;
    sc.T = T;
    sc.x0 = vec2(1.0, 0.0);
    sc.label = "rotation";
    return sc;
}

inline Vec rotation_state(double t, double t0, double T, const Vec& x0,
                          const Vec& pT) {
    return Vec(rot(t - t0) * x0 + (t - t0) * (rot(t - T) * (pT / pT.norm())));
}

inline Vec rotation_costate(double t, double T, const Vec& pT) {
    return Vec(rot(t - T) * pT);
}

// -- local finite differences (independent of the library's fd paths) -------

inline Vec fd_grad(const std::function<double(const Vec&)>& f, const Vec& at,
                   double h = 1e-6) {
    Vec g(at.size());
    for (int i = 0; i < at.size(); ++i) {
        Vec hi = at, lo = at;
        hi(i) += h;
        lo(i) -= h;
        g(i) = (f(hi) - f(lo)) / (2.0 * h);
    }
    return g;
}

inline Mat fd_jac(const std::function<Vec(const Vec&)>& f, const Vec& at,
                  int out_dim, double h = 1e-6) {
    Mat J(out_dim, at.size());
    for (int j = 0; j < at.size(); ++j) {
        Vec hi = at, lo = at;
        hi(j) += h;
        lo(j) -= h;
        J.col(j) = (f(hi) - f(lo)) / (2.0 * h);
    }
    return J;
}

} // namespace oracle
