#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace mayer {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Operator norm (largest singular value). Well-defined for nonsymmetric
/// matrices, coincides with the spectral norm for symmetric ones.
inline double operator_norm(const Mat& m) {
    if (m.size() == 0) return 0.0;
    return m.jacobiSvd().singularValues()(0);
}

inline double smallest_singular_value(const Mat& m) {
    auto sv = m.jacobiSvd().singularValues();
    return sv(sv.size() - 1);
}

inline double min_eigenvalue_sym(const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()),
                                          Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

inline Mat symmetrized(const Mat& m) { return 0.5 * (m + m.transpose()); }

inline double asymmetry(const Mat& m) { return operator_norm(m - m.transpose()); }

/// Guard radius around the cone p = 0 where H loses smoothness.
inline double nonsmooth_eps(const Vec& p) { return 1e-9 * (1.0 + p.norm()); }

inline bool all_finite(const Vec& v) { return v.allFinite(); }
inline bool all_finite(const Mat& m) { return m.allFinite(); }

} // namespace mayer
