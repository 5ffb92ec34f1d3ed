#pragma once

// Huber M-estimation by iteratively reweighted least squares. Scale is the
// MAD of the current residuals, re-estimated every iteration.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mortenv/errors.hpp"

namespace mortenv {

struct HuberOptions {
    double tuning_constant = 1.345;
    double tolerance = 1e-8;
    int max_iterations = 50;
};

struct HuberFit {
    Eigen::VectorXd beta;
    double scale = 0;
    int iterations = 0;
    bool converged = false;
};

inline double median_inplace(std::vector<double>& v) {
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (n % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
    return 0.5 * (v[mid - 1] + hi);
}

// MAD rescaled for consistency at the normal distribution (1/0.6745).
inline double mad_scale(const Eigen::VectorXd& residuals) {
    std::vector<double> r(residuals.data(), residuals.data() + residuals.size());
    const double med = median_inplace(r);
    for (auto& x : r) x = std::abs(x - med);
    return median_inplace(r) / 0.6745;
}

inline HuberFit huber_irls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const HuberOptions& opt = {}) {
    const auto n = X.rows();
    const auto p = X.cols();
    if (n < p) throw ValidationError("huber_irls: fewer observations than parameters");

    HuberFit fit;
    fit.beta = (X.transpose() * X).ldlt().solve(X.transpose() * y);

    const double y_scale = y.cwiseAbs().maxCoeff() + 1.0;
    for (int it = 1; it <= opt.max_iterations; ++it) {
        fit.iterations = it;
        const Eigen::VectorXd residuals = y - X * fit.beta;
        fit.scale = mad_scale(residuals);
        if (fit.scale < 1e-12 * y_scale) {
            // Residuals are numerically zero (or constant): nothing to reweight.
            fit.converged = true;
            return fit;
        }
        Eigen::VectorXd w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double u = std::abs(residuals[i]) / fit.scale;
            w[i] = u <= opt.tuning_constant ? 1.0 : opt.tuning_constant / u;
        }
        const Eigen::MatrixXd Xw = w.asDiagonal() * X;
        const Eigen::VectorXd beta_new =
            (X.transpose() * Xw).ldlt().solve(Xw.transpose() * y);
        const double change = (beta_new - fit.beta).cwiseAbs().maxCoeff();
        const double scale_ref = fit.beta.cwiseAbs().maxCoeff() + 1.0;
        fit.beta = beta_new;
        if (change < opt.tolerance * scale_ref) {
            fit.converged = true;
            return fit;
        }
    }
    std::string iterate = "[";
    for (Eigen::Index j = 0; j < p; ++j)
        iterate += (j ? ", " : "") + std::to_string(fit.beta[j]);
    iterate += "]";
    throw NumericError("huber_irls did not converge after " +
                       std::to_string(opt.max_iterations) +
                       " iterations; last iterate " + iterate);
}

}  // namespace mortenv
