#pragma once

// Literal accumulated-local-effects estimator: per-bin means of prediction
// differences, naive per-row accumulation, centering by the plain average
// of the uncentered effect over the data. No prefix-sum reuse; everything
// is recomputed from scratch for every evaluation.

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace ale_oracle {

using Predictor = std::function<double(const Eigen::RowVectorXd&)>;

inline int bin_of(const std::vector<double>& edges, double x) {
    if (x <= edges.front()) return 1;
    for (std::size_t k = 1; k < edges.size(); ++k)
        if (x <= edges[k]) return static_cast<int>(k);
    return static_cast<int>(edges.size()) - 1;
}

// Uncentered effect at "x" per the first-order finite-difference form.
inline double tilde_main(const Predictor& f, const Eigen::MatrixXd& X, int l,
                         const std::vector<double>& edges, double x) {
    double acc = 0;
    const int upto = bin_of(edges, x);
    for (int k = 1; k <= upto; ++k) {
        double sum = 0;
        int count = 0;
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            if (bin_of(edges, X(i, l)) != k) continue;
            Eigen::RowVectorXd row = X.row(i);
            row[l] = edges[k];
            const double hi = f(row);
            row[l] = edges[k - 1];
            const double lo = f(row);
            sum += hi - lo;
            ++count;
        }
        if (count > 0) acc += sum / count;
    }
    return acc;
}

// Centered effect at each edge.
inline std::vector<double> main_effects(const Predictor& f, const Eigen::MatrixXd& X,
                                        int l, const std::vector<double>& edges) {
    double center = 0;
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        center += tilde_main(f, X, l, edges, X(i, l));
    center /= static_cast<double>(X.rows());

    std::vector<double> out;
    out.push_back(0.0 - center);  // the accumulation below the first edge is empty
    for (std::size_t k = 1; k < edges.size(); ++k)
        out.push_back(tilde_main(f, X, l, edges, edges[k]) - center);
    return out;
}

// Uncentered second-order effect at a grid corner (ia, ib).
inline double tilde_interaction(const Predictor& f, const Eigen::MatrixXd& X, int la,
                                int lb, const std::vector<double>& ea,
                                const std::vector<double>& eb, int ia, int ib) {
    double acc = 0;
    for (int a = 1; a <= ia; ++a)
        for (int b = 1; b <= ib; ++b) {
            double sum = 0;
            int count = 0;
            for (Eigen::Index i = 0; i < X.rows(); ++i) {
                if (bin_of(ea, X(i, la)) != a || bin_of(eb, X(i, lb)) != b) continue;
                Eigen::RowVectorXd row = X.row(i);
                const auto eval = [&](double va, double vb) {
                    row[la] = va;
                    row[lb] = vb;
                    return f(row);
                };
                sum += eval(ea[a], eb[b]) - eval(ea[a - 1], eb[b]) -
                       eval(ea[a], eb[b - 1]) + eval(ea[a - 1], eb[b - 1]);
                ++count;
            }
            if (count > 0) acc += sum / count;
        }
    return acc;
}

inline Eigen::MatrixXd interaction_effects(const Predictor& f, const Eigen::MatrixXd& X,
                                           int la, int lb, const std::vector<double>& ea,
                                           const std::vector<double>& eb) {
    const int ka = static_cast<int>(ea.size()) - 1;
    const int kb = static_cast<int>(eb.size()) - 1;
    double center = 0;
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        center += tilde_interaction(f, X, la, lb, ea, eb, bin_of(ea, X(i, la)),
                                    bin_of(eb, X(i, lb)));
    center /= static_cast<double>(X.rows());

    Eigen::MatrixXd out(ka, kb);
    for (int a = 1; a <= ka; ++a)
        for (int b = 1; b <= kb; ++b)
            out(a - 1, b - 1) = tilde_interaction(f, X, la, lb, ea, eb, a, b) - center;
    return out;
}

}  // namespace ale_oracle
