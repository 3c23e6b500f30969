#include "mayer/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mayer/rk4.hpp"

namespace mayer {

namespace {

struct ArcBlocks {
    const Arc& arc;
    const HamiltonianModel& model;
    HessianBlocks at(double t) const {
        return model.hess(arc.state_at(t), arc.costate_at(t));
    }
};

/// Variational field on the stacked (2n x n) unknown [X; P].
Mat variational_field(const ArcBlocks& blocks, double t, const Mat& XP) {
    const int n = int(XP.cols());
    HessianBlocks h = blocks.at(t);
    Mat X = XP.topRows(n);
    Mat P = XP.bottomRows(n);
    Mat out(2 * n, n);
    out.topRows(n) = h.xp * X + h.pp * P;
    out.bottomRows(n) = -(h.xx * X + h.px * P);
    return out;
}

Mat riccati_field(const ArcBlocks& blocks, double t, const Mat& R, bool quadratic) {
    HessianBlocks h = blocks.at(t);
    Mat rhs = h.px * R + R * h.xp + h.xx;
    if (quadratic) rhs += R * h.pp * R;
    return Mat(-rhs);
}

} // namespace

void VariationalSolution::check_valid() const {
    if (times.size() < 2 || times.size() != X.size() || times.size() != P.size())
        throw ModelInvalid("variational solution: inconsistent lengths");
    const std::size_t a = anchor_index();
    const int n = int(X[a].rows());
    if (operator_norm(X[a] - Mat::Identity(n, n)) > 1e-12)
        throw ModelInvalid("variational solution: anchor X must be the identity");
    // Symplectic structure: W = X^T P - P^T X is a first integral of the
    // flow; drift beyond 1e-8 means the integration cannot be trusted.
    Mat W0 = X[a].transpose() * P[a] - P[a].transpose() * X[a];
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (!all_finite(X[k]) || !all_finite(P[k]))
            throw ModelInvalid("variational solution: non-finite entries");
        Mat W = X[k].transpose() * P[k] - P[k].transpose() * X[k];
        if (operator_norm(W - W0) > 1e-8)
            throw ModelInvalid("variational solution: symplectic invariant drift");
    }
}

Mat RiccatiSolution::at(double t) const {
    if (times.size() < 2) {
        if (!times.empty() && std::abs(t - times[0]) < 1e-12) return R[0];
        throw OutOfDomain("riccati solution has no usable range");
    }
    const bool increasing = times.back() > times.front();
    const double lo = increasing ? times.front() : times.back();
    const double hi = increasing ? times.back() : times.front();
    if (t < lo - 1e-12 || t > hi + 1e-12)
        throw OutOfDomain("time outside the stored riccati range");
    // uniform spacing from the anchor outward
    const double step = times[1] - times[0];
    double u = (t - times[0]) / step;
    const auto i = std::size_t(std::clamp(u, 0.0, double(times.size() - 2)));
    const double w = std::clamp(u - double(i), 0.0, 1.0);
    return Mat((1.0 - w) * R[i] + w * R[i + 1]);
}

void RiccatiSolution::check_valid() const {
    if (times.empty() || times.size() != R.size())
        throw ModelInvalid("riccati solution: inconsistent lengths");
    for (const auto& r : R) {
        if (!all_finite(r)) throw ModelInvalid("riccati solution: non-finite R");
        if (asymmetry(r) > 1e-10 * (1.0 + operator_norm(r)))
            throw ModelInvalid("riccati solution: asymmetric R stored");
    }
    if (blowup && source == RiccatiSource::direct_integration) {
        if (operator_norm(R.back()) <= kRiccatiBlowupThreshold)
            throw ModelInvalid("blow-up status without threshold crossing");
    }
}

VariationalSolution integrate_variational(const Arc& arc,
                                          const HamiltonianModel& model,
                                          const Mat& boundary_hessian,
                                          RiccatiAnchor anchor) {
    arc.check_valid();
    const int n = arc.dim();
    if (boundary_hessian.rows() != n || boundary_hessian.cols() != n)
        throw ModelInvalid("boundary hessian dimension mismatch");
    if (arc.costates.front().norm() == 0.0)
        throw DegenerateCostate("variational system needs a nonvanishing costate");

    ArcBlocks blocks{arc, model};
    const std::size_t N = arc.size() - 1;
    const double t0 = arc.t0(), T = arc.T();
    const double h = arc.dt;
    const bool backward = anchor == RiccatiAnchor::terminal_identity;

    Mat XP(2 * n, n);
    XP.topRows(n) = Mat::Identity(n, n);
    XP.bottomRows(n) = -boundary_hessian;

    // Backward problems run in the reversed time variable tau = T + t0 - t,
    // so the stepping loop is shared with the forward anchor.
    auto field = [&](double s, const Mat& M) {
        const double t = backward ? T + t0 - s : s;
        const double sign = backward ? -1.0 : 1.0;
        return Mat(sign * variational_field(blocks, t, M));
    };

    std::vector<Mat> flow(N + 1);
    flow[0] = XP;
    for (std::size_t k = 0; k < N; ++k) {
        XP = rk4_step(XP, t0 + double(k) * h, h, field);
        if (!all_finite(XP))
            throw ModelInvalid("variational integration became non-finite");
        flow[k + 1] = XP;
    }

    VariationalSolution vs;
    vs.anchor = anchor;
    vs.times = arc.times;
    vs.X.resize(N + 1);
    vs.P.resize(N + 1);
    for (std::size_t k = 0; k <= N; ++k) {
        const std::size_t src = backward ? N - k : k;
        vs.X[k] = flow[src].topRows(n);
        vs.P[k] = flow[src].bottomRows(n);
    }
    vs.check_valid();
    return vs;
}

namespace {

RiccatiSolution integrate_riccati_impl(const Arc& arc,
                                       const HamiltonianModel& model,
                                       const Mat& boundary_R, RiccatiAnchor anchor,
                                       bool quadratic) {
    arc.check_valid();
    const int n = arc.dim();
    if (boundary_R.rows() != n || boundary_R.cols() != n)
        throw ModelInvalid("boundary R dimension mismatch");
    if (asymmetry(boundary_R) > 1e-10 * (1.0 + operator_norm(boundary_R)))
        throw ModelInvalid("boundary R must be symmetric");

    ArcBlocks blocks{arc, model};
    const std::size_t N = arc.size() - 1;
    const double t0 = arc.t0(), T = arc.T();
    const double h = arc.dt;
    const bool backward = anchor == RiccatiAnchor::terminal_identity;

    auto field = [&](double s, const Mat& R) {
        const double t = backward ? T + t0 - s : s;
        const double sign = backward ? -1.0 : 1.0;
        return Mat(sign * riccati_field(blocks, t, R, quadratic));
    };

    RiccatiSolution sol;
    sol.source = RiccatiSource::direct_integration;
    Mat R = symmetrized(boundary_R);
    sol.times.push_back(backward ? T : t0);
    sol.R.push_back(R);

    for (std::size_t k = 0; k < N; ++k) {
        Mat next = rk4_step(R, t0 + double(k) * h, h, field);
        const double node_t = backward ? T - double(k + 1) * h : t0 + double(k + 1) * h;
        if (!all_finite(next)) {
            // RK4 overflow past the escape time; report the node we were
            // stepping to. The threshold crossing below is the normal exit.
            sol.blowup = BlowupInfo{node_t};
            break;
        }
        const double drift = asymmetry(next);
        if (drift > 1e-6 * (1.0 + operator_norm(next))) {
            std::ostringstream os;
            os << "riccati asymmetry " << drift << " at t = " << node_t;
            throw AsymmetryDrift(os.str());
        }
        R = symmetrized(next);
        sol.times.push_back(node_t);
        sol.R.push_back(R);
        if (operator_norm(R) > kRiccatiBlowupThreshold) {
            sol.blowup = BlowupInfo{node_t};
            break;
        }
    }
    return sol;
}

} // namespace

RiccatiSolution integrate_riccati_direct(const Arc& arc,
                                         const HamiltonianModel& model,
                                         const Mat& boundary_R,
                                         RiccatiAnchor anchor) {
    auto sol = integrate_riccati_impl(arc, model, boundary_R, anchor, true);
    sol.check_valid();
    return sol;
}

RiccatiSolution riccati_from_variational(const VariationalSolution& vs) {
    vs.check_valid();
    const std::size_t N = vs.size();
    const bool backward = vs.anchor == RiccatiAnchor::terminal_identity;

    RiccatiSolution sol;
    sol.source = RiccatiSource::quotient_PX_inverse;
    for (std::size_t k = 0; k < N; ++k) {
        const std::size_t idx = backward ? N - 1 - k : k;
        const Mat& X = vs.X[idx];
        const double floor = kInvertibilityFloor * std::max(operator_norm(X), 1e-300);
        if (smallest_singular_value(X) <= floor) {
            sol.blowup = BlowupInfo{vs.times[idx]};
            break;
        }
        Mat R = vs.P[idx] * X.inverse();
        sol.times.push_back(vs.times[idx]);
        sol.R.push_back(symmetrized(R));
    }
    return sol;
}

ConjugateTimeReport detect_conjugate_time(const VariationalSolution& vs,
                                          const Arc& arc,
                                          const HamiltonianModel& model,
                                          const Mat& boundary_hessian) {
    vs.check_valid();
    (void)boundary_hessian;
    ConjugateTimeReport report;
    const std::size_t N = vs.size();
    const bool backward = vs.anchor == RiccatiAnchor::terminal_identity;

    std::vector<double> dets(N);
    for (std::size_t k = 0; k < N; ++k) {
        dets[k] = vs.X[k].determinant();
        report.det_X_trace.emplace_back(vs.times[k], dets[k]);
    }
    {
        auto quotient = riccati_from_variational(vs);
        for (std::size_t k = 0; k < quotient.size(); ++k)
            report.r_norm_growth.emplace_back(quotient.times[k],
                                              operator_norm(quotient.R[k]));
    }

    const double anchor_scale = std::abs(dets[vs.anchor_index()]);
    const double drop_tol = 1e-12 * std::max(anchor_scale, 1e-300);

    ArcBlocks blocks{arc, model};
    // Single signed RK4 step from a stored node; |t_to - t_from| <= dt, so
    // one stage evaluation suffices for the bisection refinements.
    auto det_at = [&](std::size_t idx, double t_to) {
        Mat XP(2 * vs.X[idx].rows(), vs.X[idx].cols());
        const int n = int(vs.X[idx].rows());
        XP.topRows(n) = vs.X[idx];
        XP.bottomRows(n) = vs.P[idx];
        const double h = t_to - vs.times[idx];
        if (std::abs(h) > 0.0) {
            XP = rk4_step(XP, vs.times[idx], h,
                          [&](double t, const Mat& M) {
                              return variational_field(blocks, t, M);
                          });
        }
        return XP.topRows(n).determinant();
    };

    // Scan from the anchor outward for a sign change or magnitude collapse.
    const double sign_anchor = dets[vs.anchor_index()] >= 0 ? 1.0 : -1.0;
    for (std::size_t step = 1; step < N; ++step) {
        const std::size_t k = backward ? N - 1 - step : step;
        const std::size_t k_prev = backward ? k + 1 : k - 1; // anchor side
        const bool sign_change = sign_anchor * dets[k] < 0.0;
        const bool collapsed = std::abs(dets[k]) < drop_tol;
        if (!sign_change && !collapsed) continue;

        double t_lo = vs.times[k];      // far side (zero or beyond)
        double t_hi = vs.times[k_prev]; // anchor side, det definitely nonzero
        double t_c = t_lo;
        if (sign_change) {
            for (int it = 0; it < 20; ++it) {
                const double mid = 0.5 * (t_lo + t_hi);
                const double d = det_at(k_prev, mid);
                if (sign_anchor * d < 0.0)
                    t_lo = mid;
                else
                    t_hi = mid;
            }
            t_c = 0.5 * (t_lo + t_hi);
        }
        report.t_c = t_c;
        // smallest singular value of X at the located time
        {
            Mat XP(2 * vs.X[k_prev].rows(), vs.X[k_prev].cols());
            const int n = int(vs.X[k_prev].rows());
            XP.topRows(n) = vs.X[k_prev];
            XP.bottomRows(n) = vs.P[k_prev];
            const double h = t_c - vs.times[k_prev];
            if (std::abs(h) > 0.0) {
                XP = rk4_step(XP, vs.times[k_prev], h,
                              [&](double t, const Mat& M) {
                                  return variational_field(blocks, t, M);
                              });
            }
            report.min_singular_value_at_tc =
                smallest_singular_value(XP.topRows(n));
        }
        break;
    }
    return report;
}

VerificationReport comparison_bound(const Arc& arc, const HamiltonianModel& model,
                                    const Mat& boundary_R, RiccatiAnchor anchor,
                                    const std::string& scenario_label) {
    VerificationReport report;
    report.scenario = scenario_label;
    report.check = "comparison_bound";

    // Precondition: H_pp >= 0 along the arc (automatic for support
    // functions, but FD-backed models can drift).
    for (std::size_t k = 0; k < arc.size(); ++k) {
        const double mineig =
            min_eigenvalue_sym(model.hess(arc.states[k], arc.costates[k]).pp);
        if (mineig < -1e-9) {
            std::ostringstream os;
            os << "H_pp indefinite along the arc: min eig " << mineig << " at t = "
               << arc.times[k];
            throw PrePostViolation(os.str());
        }
    }

    auto R = integrate_riccati_impl(arc, model, boundary_R, anchor, true);
    auto Q = integrate_riccati_impl(arc, model, boundary_R, anchor, false);

    // The quadratic term R H_pp R >= 0 lowers Rdot relative to the linear
    // flow; integrating away from a terminal anchor this yields R >= Q, away
    // from an initial anchor R <= Q.
    const bool backward = anchor == RiccatiAnchor::terminal_identity;
    const std::size_t common = std::min(R.size(), Q.size());
    double worst_margin = 1e300;
    for (std::size_t k = 0; k < common; ++k) {
        Mat diff = backward ? Mat(R.R[k] - Q.R[k]) : Mat(Q.R[k] - R.R[k]);
        const double margin = min_eigenvalue_sym(diff);
        worst_margin = std::min(worst_margin, margin);
        report.add_node(R.times[k], -margin, 1e-8);
    }
    report.fitted_constants["worst_margin"] = worst_margin;
    if (R.blowup) {
        report.notes.push_back("riccati flow blew up at t = " +
                               std::to_string(R.blowup->t_star) +
                               "; margins checked up to the frontier");
    }
    report.settle_verdict_from_nodes();
    return report;
}

} // namespace mayer
