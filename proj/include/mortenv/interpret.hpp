#pragma once

// Interpretation tools for the fitted multiplier model: split-gain feature
// importance, accumulated local effects (main, second-order interaction,
// and region-restricted), and nonparametric bootstrap percentile
// intervals. ALE bins are empirical quantiles of the feature; effects are
// centered so their data-weighted mean is zero.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mortenv/boost.hpp"
#include "mortenv/errors.hpp"
#include "mortenv/features.hpp"
#include "mortenv/parallel.hpp"
#include "mortenv/rng.hpp"

namespace mortenv {

using Predictor = std::function<double(const Eigen::RowVectorXd&)>;

// The model's multiplier phi = exp(f); ALE on this scale matches the
// "multiplier around one" reading of the figures.
inline Predictor multiplier_predictor(const BoostedModel& model) {
    return [&model](const Eigen::RowVectorXd& row) {
        return predict_multiplier(model, row);
    };
}

inline Predictor log_multiplier_predictor(const BoostedModel& model) {
    return [&model](const Eigen::RowVectorXd& row) {
        return model.log_multiplier(row);
    };
}

// ---------------------------------------------------------------------------
// Feature importance: summed split gain per feature across all trees,
// normalized to total one. A model that never splits yields all zeros.

struct ImportanceReport {
    std::vector<std::string> features;
    std::vector<double> importance;
    double total_gain = 0;
    bool degenerate = false;  // no split gain anywhere

    double of(const std::string& name) const {
        for (std::size_t i = 0; i < features.size(); ++i)
            if (features[i] == name) return importance[i];
        throw ValidationError("importance: unknown feature '" + name + "'");
    }
};

inline ImportanceReport feature_importance(const BoostedModel& model) {
    ImportanceReport report;
    report.features = model.schema;
    report.importance.assign(model.schema.size(), 0.0);
    for (const auto& tree : model.trees)
        for (const auto& node : tree.nodes)
            if (node.feature >= 0) {
                report.importance[static_cast<std::size_t>(node.feature)] += node.gain;
                report.total_gain += node.gain;
            }
    if (report.total_gain <= 0) {
        report.degenerate = true;
        std::fill(report.importance.begin(), report.importance.end(), 0.0);
        return report;
    }
    for (auto& v : report.importance) v /= report.total_gain;
    return report;
}

// ---------------------------------------------------------------------------
// ALE bins: quantile edges with duplicates collapsed.

namespace aledetail {

inline std::vector<double> quantile_edges(const Eigen::MatrixXd& X, int feature, int k) {
    if (k < 1) throw ValidationError("ALE needs at least one bin");
    std::vector<double> col(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) col[i] = X(i, feature);
    std::sort(col.begin(), col.end());
    if (col.front() == col.back())
        throw ValidationError("ALE: feature " + std::to_string(feature) +
                              " is constant, no bins");
    std::vector<double> edges;
    for (int j = 0; j <= k; ++j) {
        const double h = (static_cast<double>(col.size()) - 1.0) * j / k;
        const auto lo = static_cast<std::size_t>(h);
        const double q = lo + 1 >= col.size()
                             ? col.back()
                             : col[lo] + (h - static_cast<double>(lo)) *
                                             (col[lo + 1] - col[lo]);
        if (edges.empty() || q > edges.back()) edges.push_back(q);
    }
    return edges;
}

// Bin of x: 1..K with (z_{k-1}, z_k]; values at or below z_0 land in bin 1.
inline int bin_of(const std::vector<double>& edges, double x) {
    const int k = static_cast<int>(
        std::lower_bound(edges.begin() + 1, edges.end(), x) - edges.begin());
    return std::clamp(k, 1, static_cast<int>(edges.size()) - 1);
}

}  // namespace aledetail

struct AleCurve {
    int feature = -1;
    std::string feature_name;
    std::vector<double> edges;   // z_0 .. z_K
    std::vector<double> effect;  // centered accumulated effect at each edge
    std::vector<long> counts;    // rows per bin (size K)
};

inline AleCurve ale_main(const Predictor& predict, const Eigen::MatrixXd& X, int feature,
                         int k_bins, const std::vector<std::string>* names = nullptr) {
    if (X.rows() < 1) throw ValidationError("ale_main: empty data");
    AleCurve curve;
    curve.feature = feature;
    if (names) curve.feature_name = (*names)[static_cast<std::size_t>(feature)];
    curve.edges = aledetail::quantile_edges(X, feature, k_bins);
    const int k = static_cast<int>(curve.edges.size()) - 1;
    curve.counts.assign(k, 0);

    std::vector<double> delta_sum(k, 0.0);
    Eigen::RowVectorXd row;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const int bin = aledetail::bin_of(curve.edges, X(i, feature));
        row = X.row(i);
        row[feature] = curve.edges[bin];
        const double upper = predict(row);
        row[feature] = curve.edges[bin - 1];
        const double lower = predict(row);
        delta_sum[bin - 1] += upper - lower;
        ++curve.counts[bin - 1];
    }

    std::vector<double> accumulated(k + 1, 0.0);
    for (int b = 0; b < k; ++b)
        accumulated[b + 1] =
            accumulated[b] + (curve.counts[b] > 0
                                  ? delta_sum[b] / static_cast<double>(curve.counts[b])
                                  : 0.0);

    double center = 0;
    for (int b = 0; b < k; ++b)
        center += static_cast<double>(curve.counts[b]) * accumulated[b + 1];
    center /= static_cast<double>(X.rows());

    curve.effect.resize(k + 1);
    for (int b = 0; b <= k; ++b) curve.effect[b] = accumulated[b] - center;
    return curve;
}

// Step lookup on the accumulated curve. The observed minimum belongs to
// the first bin; only values strictly below it read the first edge.
inline double ale_value_at(const AleCurve& curve, double x) {
    if (x < curve.edges.front()) return curve.effect.front();
    return curve.effect[static_cast<std::size_t>(aledetail::bin_of(curve.edges, x))];
}

struct AleSurface {
    int feature_a = -1, feature_b = -1;
    std::vector<double> edges_a, edges_b;
    Eigen::MatrixXd effect;                // (Ka x Kb), value at the cell's upper corner
    Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> counts;
    std::vector<std::vector<bool>> missing;  // counts == 0
};

inline AleSurface ale_interaction(const Predictor& predict, const Eigen::MatrixXd& X,
                                  int feature_a, int feature_b, int k_bins) {
    if (feature_a == feature_b)
        throw ValidationError("ale_interaction needs two distinct features");
    AleSurface surface;
    surface.feature_a = feature_a;
    surface.feature_b = feature_b;
    surface.edges_a = aledetail::quantile_edges(X, feature_a, k_bins);
    surface.edges_b = aledetail::quantile_edges(X, feature_b, k_bins);
    const int ka = static_cast<int>(surface.edges_a.size()) - 1;
    const int kb = static_cast<int>(surface.edges_b.size()) - 1;
    surface.counts.setZero(ka, kb);
    Eigen::MatrixXd delta_sum = Eigen::MatrixXd::Zero(ka, kb);

    Eigen::RowVectorXd row;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const int ia = aledetail::bin_of(surface.edges_a, X(i, feature_a));
        const int ib = aledetail::bin_of(surface.edges_b, X(i, feature_b));
        row = X.row(i);
        const auto eval = [&](double a, double b) {
            row[feature_a] = a;
            row[feature_b] = b;
            return predict(row);
        };
        const double cross = eval(surface.edges_a[ia], surface.edges_b[ib]) -
                             eval(surface.edges_a[ia - 1], surface.edges_b[ib]) -
                             eval(surface.edges_a[ia], surface.edges_b[ib - 1]) +
                             eval(surface.edges_a[ia - 1], surface.edges_b[ib - 1]);
        delta_sum(ia - 1, ib - 1) += cross;
        surface.counts(ia - 1, ib - 1) += 1;
    }

    // Accumulate the mean second-order differences in both directions;
    // cells without data contribute nothing and are masked in the output.
    Eigen::MatrixXd accumulated = Eigen::MatrixXd::Zero(ka, kb);
    for (int a = 0; a < ka; ++a)
        for (int b = 0; b < kb; ++b) {
            const double mean =
                surface.counts(a, b) > 0
                    ? delta_sum(a, b) / static_cast<double>(surface.counts(a, b))
                    : 0.0;
            accumulated(a, b) = mean + (a > 0 ? accumulated(a - 1, b) : 0.0) +
                                (b > 0 ? accumulated(a, b - 1) : 0.0) -
                                (a > 0 && b > 0 ? accumulated(a - 1, b - 1) : 0.0);
        }

    double center = 0;
    for (int a = 0; a < ka; ++a)
        for (int b = 0; b < kb; ++b)
            center += static_cast<double>(surface.counts(a, b)) * accumulated(a, b);
    center /= static_cast<double>(X.rows());

    surface.effect = accumulated.array() - center;
    surface.missing.assign(ka, std::vector<bool>(kb, false));
    for (int a = 0; a < ka; ++a)
        for (int b = 0; b < kb; ++b) surface.missing[a][b] = surface.counts(a, b) == 0;
    return surface;
}

// ALE main effect fitted on the rows of one region only, evaluated at a
// value by step lookup.
inline double ale_regional(const Predictor& predict, const Eigen::MatrixXd& X,
                           const std::vector<int>& row_region, int region, int feature,
                           double at_value, int k_bins) {
    std::vector<int> rows;
    for (std::size_t i = 0; i < row_region.size(); ++i)
        if (row_region[i] == region) rows.push_back(static_cast<int>(i));
    if (rows.empty())
        throw ValidationError("ale_regional: region " + std::to_string(region) +
                              " has no rows");
    Eigen::MatrixXd sub(rows.size(), X.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) sub.row(i) = X.row(rows[i]);
    const AleCurve curve = ale_main(predict, sub, feature, k_bins);
    return ale_value_at(curve, at_value);
}

// ---------------------------------------------------------------------------
// Nonparametric bootstrap: resample rows with replacement to the original
// size, recompute the statistic with fixed tuning parameters, report the
// percentile interval per output. Failed replicates are dropped; more than
// 10% failures is an error.

struct BootstrapResult {
    std::vector<double> lo, hi;
    int replicates_used = 0;
    int failures = 0;
};

inline BootstrapResult bootstrap_ci(
    const std::function<std::vector<double>(const std::vector<int>&)>& statistic,
    int n_rows, int replicates, double level, std::uint64_t seed, int jobs = 0) {
    if (replicates < 2) throw ValidationError("bootstrap needs at least 2 replicates");
    if (level <= 0 || level >= 1)
        throw ValidationError("bootstrap level must lie in (0, 1)");
    if (n_rows < 1) throw ValidationError("bootstrap: no rows");

    std::vector<std::vector<double>> outputs(replicates);
    std::vector<char> ok(replicates, 0);
    parallel_for(replicates, jobs, [&](int r) {
        Rng rng = stream_rng(seed, "bootstrap", static_cast<std::uint64_t>(r));
        std::vector<int> rows(n_rows);
        for (int i = 0; i < n_rows; ++i)
            rows[i] = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n_rows)));
        try {
            outputs[r] = statistic(rows);
            ok[r] = 1;
        } catch (const std::exception&) {
            ok[r] = 0;
        }
    });

    BootstrapResult result;
    std::size_t width = 0;
    for (int r = 0; r < replicates; ++r) {
        if (!ok[r]) {
            ++result.failures;
            continue;
        }
        if (width == 0) width = outputs[r].size();
        if (outputs[r].size() != width)
            throw ValidationError("bootstrap statistic returned inconsistent sizes");
        ++result.replicates_used;
    }
    if (result.failures * 10 > replicates)
        throw NumericError("bootstrap: " + std::to_string(result.failures) + " of " +
                           std::to_string(replicates) + " replicates failed");

    const double alpha = 1.0 - level;
    result.lo.resize(width);
    result.hi.resize(width);
    std::vector<double> column;
    column.reserve(result.replicates_used);
    for (std::size_t j = 0; j < width; ++j) {
        column.clear();
        for (int r = 0; r < replicates; ++r)
            if (ok[r]) column.push_back(outputs[r][j]);
        result.lo[j] = sample_quantile(column, alpha / 2);
        result.hi[j] = sample_quantile(column, 1.0 - alpha / 2);
    }
    return result;
}

}  // namespace mortenv
