#include "mayer/hamiltonian.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace mayer {

namespace {

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& at) {
    Vec g(at.size());
    for (int i = 0; i < at.size(); ++i) {
        const double h = fd_step(at(i));
        Vec hi = at, lo = at;
        hi(i) += h;
        lo(i) -= h;
        g(i) = (f(hi) - f(lo)) / (2.0 * h);
    }
    return g;
}

/// Jacobian of a vector map by central differences, one column per input
/// coordinate: J(i,j) = d f_i / d at_j.
Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& at, int out_dim) {
    Mat J(out_dim, at.size());
    for (int j = 0; j < at.size(); ++j) {
        const double h = fd_step(at(j));
        Vec hi = at, lo = at;
        hi(j) += h;
        lo(j) -= h;
        J.col(j) = (f(hi) - f(lo)) / (2.0 * h);
    }
    return J;
}

void require_dimension(const Vec& v, int dim, const char* name) {
    if (int(v.size()) != dim) {
        std::ostringstream os;
        os << name << " has dimension " << v.size() << ", expected " << dim;
        throw ModelInvalid(os.str());
    }
}

} // namespace

void ControlScenario::check_valid() const {
    if (!(T > t0)) throw ModelInvalid("horizon requires T > t0");
    if (int(x0.size()) != model.dim)
        throw ModelInvalid("x0 length does not match model dimension");
    if (model.dim < 1) throw ModelInvalid("model dimension must be >= 1");
}

HamiltonianModel make_interval_box_model(int dim, double radius) {
    if (dim < 1) throw ModelInvalid("interval_box: dim must be >= 1");
    if (!(radius > 0.0)) throw ModelInvalid("interval_box: radius must be > 0");

    auto guard = [dim, radius](const Vec& p) {
        const double eps = nonsmooth_eps(p);
        for (int i = 0; i < dim; ++i) {
            if (std::abs(p(i)) < eps) {
                std::ostringstream os;
                os << "interval_box derivative at p_" << (i + 1)
                   << " inside the guard cone (|p_i| = " << std::abs(p(i)) << ")";
                throw NonsmoothPoint(os.str());
            }
        }
        (void)radius;
    };

    HamiltonianModel m;
    m.dim = dim;
    m.family_tag = FamilyTag::interval_box;
    m.smoothness = Smoothness::C2_1;
    m.growth_gamma = radius * std::sqrt(double(dim));
    m.eval = [radius, dim](const Vec& x, const Vec& p) {
        require_dimension(p, dim, "p");
        (void)x;
        return radius * p.cwiseAbs().sum();
    };
    m.grad_p = [radius, dim, guard](const Vec&, const Vec& p) {
        require_dimension(p, dim, "p");
        guard(p);
        Vec v(dim);
        for (int i = 0; i < dim; ++i) v(i) = radius * (p(i) > 0 ? 1.0 : -1.0);
        return v;
    };
    m.grad_x = [dim, guard](const Vec&, const Vec& p) {
        guard(p);
        return Vec(Vec::Zero(dim));
    };
    m.hess = [dim, guard](const Vec&, const Vec& p) {
        guard(p);
        HessianBlocks h;
        h.xx = Mat::Zero(dim, dim);
        h.xp = Mat::Zero(dim, dim);
        h.px = Mat::Zero(dim, dim);
        h.pp = Mat::Zero(dim, dim);
        return h;
    };
    return m;
}

HamiltonianModel make_affine_control_model(std::function<Vec(const Vec&)> h_field,
                                           std::function<Mat(const Vec&)> g_field,
                                           int dim, int m,
                                           AffineControlOptions opts) {
    if (dim < 1) throw ModelInvalid("affine_control: dim must be >= 1");
    if (m < dim)
        throw ModelInvalid("affine_control: control dimension m must be >= n");
    if (!h_field || !g_field)
        throw ModelInvalid("affine_control: h and g fields are required");

    // Full-rank probe; rank deficiency makes |g^T p| degenerate in whole
    // p-subspaces instead of a single cone.
    {
        std::vector<Vec> probes;
        probes.push_back(Vec::Zero(dim));
        for (int i = 0; i < dim; ++i) {
            Vec e = Vec::Zero(dim);
            e(i) = 1.0;
            probes.push_back(e);
            probes.push_back(-e);
        }
        for (const auto& x : probes) {
            Mat g = g_field(x);
            if (g.rows() != dim || g.cols() != m)
                throw ModelInvalid("affine_control: g(x) must be n x m");
            const double smin = smallest_singular_value(g);
            const double smax = operator_norm(g);
            if (smin <= 1e-8 * std::max(1.0, smax))
                throw ModelInvalid("affine_control: g(x) rank-deficient on probe");
        }
    }

    auto gTp = [g_field](const Vec& x, const Vec& p) { return Vec(g_field(x).transpose() * p); };

    auto eval = [h_field, g_field, dim](const Vec& x, const Vec& p) {
        require_dimension(p, dim, "p");
        return p.dot(h_field(x)) + (g_field(x).transpose() * p).norm();
    };

    auto guard = [gTp](const Vec& x, const Vec& p) {
        const double n = gTp(x, p).norm();
        if (n < nonsmooth_eps(p)) {
            std::ostringstream os;
            os << "affine_control derivative with |g(x)^T p| = " << n
               << " inside the guard cone";
            throw NonsmoothPoint(os.str());
        }
    };

    auto grad_p = [h_field, g_field, gTp, guard, dim](const Vec& x, const Vec& p) {
        require_dimension(p, dim, "p");
        guard(x, p);
        Vec w = gTp(x, p);
        return Vec(h_field(x) + g_field(x) * (w / w.norm()));
    };

    // x-gradient: analytic through h, finite differences through g when it
    // depends on x.
    auto hjac = opts.h_jacobian;
    const bool g_const = opts.g_constant;
    auto grad_x = [h_field, g_field, hjac, g_const, guard, eval,
                   dim](const Vec& x, const Vec& p) {
        require_dimension(p, dim, "p");
        guard(x, p);
        if (hjac && g_const) return Vec(hjac(x).transpose() * p);
        if (hjac) {
            Vec base = hjac(x).transpose() * p;
            auto norm_part = [&](const Vec& xx) {
                return (g_field(xx).transpose() * p).norm();
            };
            return Vec(base + fd_gradient(norm_part, x));
        }
        auto full = [&](const Vec& xx) { return eval(xx, p); };
        return fd_gradient(full, x);
    };

    auto hhess = opts.h_hessians;
    auto hess = [h_field, g_field, gTp, guard, grad_p, grad_x, hjac, hhess,
                 g_const, dim](const Vec& x, const Vec& p) {
        require_dimension(p, dim, "p");
        guard(x, p);
        HessianBlocks out;
        Mat g = g_field(x);
        Vec gp = g.transpose() * p;
        const double n = gp.norm();
        Vec w = gp / n;
        // Support-function curvature of the ellipsoidal velocity set:
        // degenerate along p by positive homogeneity.
        out.pp = (g * g.transpose() - (g * w) * (g * w).transpose()) / n;

        if (hjac && g_const) {
            out.xp = hjac(x);
        } else {
            auto gp_map = [&](const Vec& xx) { return Vec(grad_p(xx, p)); };
            out.xp = fd_jacobian(gp_map, x, dim);
        }
        out.px = out.xp.transpose();

        if (hhess && g_const) {
            Mat xx = Mat::Zero(dim, dim);
            auto hs = hhess(x);
            for (int i = 0; i < dim; ++i) xx += p(i) * hs[size_t(i)];
            out.xx = xx;
        } else {
            auto gx_map = [&](const Vec& xx) { return Vec(grad_x(xx, p)); };
            out.xx = symmetrized(fd_jacobian(gx_map, x, dim));
        }
        return out;
    };

    HamiltonianModel model;
    model.dim = dim;
    model.family_tag = FamilyTag::affine_control;
    model.smoothness = Smoothness::C2;
    model.eval = eval;
    model.grad_p = grad_p;
    model.grad_x = grad_x;
    model.hess = hess;

    // Linear-growth constant: max |v| <= |h(x)| + sigma_max(g(x)), estimated
    // over a probe set and normalized by 1 + |x|.
    double gamma = 0.0;
    for (double r : {0.0, 0.5, 1.0, 2.0, 4.0}) {
        for (int i = 0; i < dim; ++i) {
            for (double s : {-1.0, 1.0}) {
                Vec x = Vec::Zero(dim);
                x(i) = s * r;
                const double reach = h_field(x).norm() + operator_norm(g_field(x));
                gamma = std::max(gamma, reach / (1.0 + x.norm()));
            }
        }
    }
    model.growth_gamma = gamma;
    return model;
}

HamiltonianModel make_custom_model(
    int dim, std::function<double(const Vec&, const Vec&)> eval,
    std::function<Vec(const Vec&, const Vec&)> grad_p,
    std::function<Vec(const Vec&, const Vec&)> grad_x,
    std::function<HessianBlocks(const Vec&, const Vec&)> hess,
    double growth_gamma) {
    if (!eval) throw ModelInvalid("custom model: eval is required");

    auto guard = [](const Vec& p) {
        if (p.norm() < nonsmooth_eps(p))
            throw NonsmoothPoint("custom model derivative inside the guard cone");
    };

    HamiltonianModel m;
    m.dim = dim;
    m.family_tag = FamilyTag::custom;
    m.smoothness = Smoothness::C2;
    m.growth_gamma = growth_gamma;
    m.eval = eval;

    m.grad_p = grad_p ? std::move(grad_p)
                      : std::function<Vec(const Vec&, const Vec&)>(
                            [eval, guard](const Vec& x, const Vec& p) {
                                guard(p);
                                auto f = [&](const Vec& pp) { return eval(x, pp); };
                                return fd_gradient(f, p);
                            });
    m.grad_x = grad_x ? std::move(grad_x)
                      : std::function<Vec(const Vec&, const Vec&)>(
                            [eval, guard](const Vec& x, const Vec& p) {
                                guard(p);
                                auto f = [&](const Vec& xx) { return eval(xx, p); };
                                return fd_gradient(f, x);
                            });
    if (hess) {
        m.hess = std::move(hess);
    } else {
        auto gp = m.grad_p;
        auto gx = m.grad_x;
        m.hess = [gp, gx, guard, dim](const Vec& x, const Vec& p) {
            guard(p);
            HessianBlocks h;
            auto gp_of_x = [&](const Vec& xx) { return Vec(gp(xx, p)); };
            auto gp_of_p = [&](const Vec& pp) { return Vec(gp(x, pp)); };
            auto gx_of_x = [&](const Vec& xx) { return Vec(gx(xx, p)); };
            auto gx_of_p = [&](const Vec& pp) { return Vec(gx(x, pp)); };
            h.xp = fd_jacobian(gp_of_x, x, dim);
            h.pp = symmetrized(fd_jacobian(gp_of_p, p, dim));
            h.xx = symmetrized(fd_jacobian(gx_of_x, x, dim));
            h.px = fd_jacobian(gx_of_p, p, dim);
            return h;
        };
    }
    return m;
}

TerminalCost make_quadratic_cost(const Mat& A, const Vec& b, double c) {
    if (A.rows() != A.cols() || A.rows() != b.size())
        throw ModelInvalid("quadratic cost: A must be square and match b");
    Mat As = symmetrized(A);
    TerminalCost cost;
    cost.value = [As, b, c](const Vec& x) {
        return 0.5 * x.dot(As * x) + b.dot(x) + c;
    };
    cost.grad = [As, b](const Vec& x) { return Vec(As * x + b); };
    cost.hess = [As](const Vec&) { return As; };
    cost.regularity = CostRegularity::C2;
    return cost;
}

VerificationReport validate_model(const HamiltonianModel& model,
                                  int sample_count, double radius,
                                  std::uint64_t seed) {
    if (sample_count < 1) throw ModelInvalid("validate_model: sample_count >= 1");
    const int n = model.dim;

    VerificationReport report;
    report.check = "validate_model";

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    auto random_ball = [&](double r) {
        Vec v(n);
        for (int i = 0; i < n; ++i) v(i) = gauss(rng);
        if (v.norm() < 1e-12) v(0) = 1.0;
        const double u = std::pow(unif(rng), 1.0 / double(n));
        return Vec(v / v.norm() * (r * u));
    };
    auto random_sphere = [&]() {
        Vec v(n);
        for (int i = 0; i < n; ++i) v(i) = gauss(rng);
        if (v.norm() < 1e-12) v(0) = 1.0;
        return Vec(v / v.norm());
    };

    double worst_homog = 0.0, worst_euler = 0.0, c_semiconvex = 0.0;
    double worst_min_eig = 0.0, worst_degeneracy = 0.0, worst_px_sym = 0.0;
    double lip_gradp_x = 0.0, growth_margin = -1e300;
    int skipped_nonsmooth = 0;

    Vec prev_x;
    bool have_prev = false;

    for (int s = 0; s < sample_count; ++s) {
        Vec x = random_ball(radius);
        Vec z = random_ball(radius);
        Vec p = random_sphere();
        if ((x + z).norm() > radius || (x - z).norm() > radius) z *= 0.25;

        const double H = model.eval(x, p);
        const double scale = 1.0 + std::abs(H);

        for (double lambda : {0.5, 2.0, 10.0}) {
            const double r = std::abs(model.eval(x, lambda * p) - lambda * H);
            const double tol = 1e-9 * lambda * scale;
            worst_homog = std::max(worst_homog, r / (lambda * scale));
            if (r > tol)
                report.add_node(double(s), r, tol, "homogeneity");
        }

        try {
            Vec gp = model.grad_p(x, p);
            const double euler = std::abs(H - gp.dot(p));
            worst_euler = std::max(worst_euler, euler / scale);
            if (euler > 1e-9 * scale)
                report.add_node(double(s), euler, 1e-9 * scale, "euler_identity");

            // model growth bound (SH)(iii): the maximizing velocity obeys it
            const double margin =
                model.growth_gamma * (1.0 + x.norm()) - gp.norm();
            growth_margin = std::max(growth_margin, -margin);
            if (margin < -1e-6 * (1.0 + gp.norm()))
                report.add_node(double(s), -margin, 1e-6 * (1.0 + gp.norm()),
                                "growth_bound");

            if (have_prev && prev_x != x) {
                Vec gp_prev = model.grad_p(prev_x, p);
                lip_gradp_x = std::max(
                    lip_gradp_x, (gp - gp_prev).norm() / (x - prev_x).norm());
            }
            prev_x = x;
            have_prev = true;

            HessianBlocks hb = model.hess(x, p);
            const double pp_norm = operator_norm(hb.pp);
            const double min_eig = min_eigenvalue_sym(hb.pp);
            worst_min_eig = std::min(worst_min_eig, min_eig);
            if (min_eig < -1e-9)
                report.add_node(double(s), -min_eig, 1e-9, "Hpp_psd");

            const double degen = (hb.pp * p).norm();
            const double degen_tol = 1e-8 * std::max(pp_norm * p.norm(), 1e-12);
            if (pp_norm > 0.0) {
                worst_degeneracy =
                    std::max(worst_degeneracy, degen / (pp_norm * p.norm()));
                if (degen > degen_tol)
                    report.add_node(double(s), degen, degen_tol, "Hpp_p_degeneracy");
            }

            const double px_gap = operator_norm(hb.px - hb.xp.transpose());
            const double px_tol = 1e-3 * (1.0 + operator_norm(hb.xp));
            worst_px_sym = std::max(worst_px_sym, px_gap);
            if (px_gap > px_tol)
                report.add_node(double(s), px_gap, px_tol, "mixed_partials");
        } catch (const NonsmoothPoint&) {
            ++skipped_nonsmooth;
        }

        // Midpoint semiconvexity surrogate of (H)(i); the constant is
        // estimated, never assumed.
        const double zz = z.squaredNorm();
        if (zz > 1e-16) {
            const double mid =
                model.eval(x + z, p) + model.eval(x - z, p) - 2.0 * H;
            c_semiconvex = std::max(c_semiconvex, -mid / zz);
        }
    }

    report.fitted_constants["c_semiconvexity"] = c_semiconvex;
    report.fitted_constants["worst_homogeneity_rel"] = worst_homog;
    report.fitted_constants["worst_euler_rel"] = worst_euler;
    report.fitted_constants["min_eig_Hpp"] = worst_min_eig;
    report.fitted_constants["worst_Hpp_degeneracy_rel"] = worst_degeneracy;
    report.fitted_constants["lipschitz_gradp_x"] = lip_gradp_x;
    report.fitted_constants["growth_margin_excess"] = growth_margin;
    report.fitted_constants["skipped_nonsmooth"] = double(skipped_nonsmooth);
    report.settle_verdict_from_nodes();
    return report;
}

VerificationReport validate_terminal_cost(const TerminalCost& cost, int dim,
                                          int sample_count, double radius,
                                          std::uint64_t seed) {
    VerificationReport report;
    report.check = "validate_terminal_cost";
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    for (int s = 0; s < sample_count; ++s) {
        Vec x(dim);
        for (int i = 0; i < dim; ++i) x(i) = gauss(rng) * radius * 0.5;

        const double scale =
            1.0 + std::abs(cost.value(x)) + cost.grad(x).norm();
        Vec fd = fd_gradient(cost.value, x);
        const double gap = (fd - cost.grad(x)).norm();
        if (gap > 1e-6 * scale)
            report.add_node(double(s), gap, 1e-6 * scale, "grad_fd_consistency");

        Mat h = cost.hess(x);
        const double asym = asymmetry(h);
        if (asym > 1e-10 * (1.0 + operator_norm(h)))
            report.add_node(double(s), asym, 1e-10 * (1.0 + operator_norm(h)),
                            "hess_symmetry");
    }
    report.settle_verdict_from_nodes();
    return report;
}

} // namespace mayer
