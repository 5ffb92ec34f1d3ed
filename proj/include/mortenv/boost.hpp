#pragma once

// Offset-aware Poisson gradient boosting. Each round fits an exact-greedy
// regression tree to the Newton targets -g/h with hessian weights, then
// advances the log multiplier by eta times the tree prediction. The
// estimated deaths are offset * exp(f).

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mortenv/errors.hpp"
#include "mortenv/parallel.hpp"
#include "mortenv/rng.hpp"

namespace mortenv {

// Negative Poisson log-likelihood of one cell on the log-multiplier scale:
// b * e^f - d * (f + log b) + log d!.
inline double poisson_loss(double deaths, double offset, double f) {
    if (offset <= 0) throw ValidationError("poisson_loss: offset must be positive");
    return offset * std::exp(f) - deaths * (f + std::log(offset)) +
           std::lgamma(deaths + 1.0);
}

struct GradHess {
    double g = 0;
    double h = 0;
};

inline GradHess grad_hess(double deaths, double offset, double f) {
    const double mu = offset * std::exp(f);
    return {mu - deaths, mu};
}

// ---------------------------------------------------------------------------

struct BoostParams {
    int nrounds = 490;
    double eta = 0.01;
    int max_depth = 7;
    double subsample = 0.75;
    double colsample_bytree = 0.50;
    double min_child_weight = 1000.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (nrounds < 0) throw ValidationError("nrounds must be non-negative");
        if (eta < 0 || eta > 1) throw ValidationError("eta must lie in [0, 1]");
        if (max_depth < 1) throw ValidationError("max_depth must be positive");
        if (subsample <= 0 || subsample > 1)
            throw ValidationError("subsample must lie in (0, 1]");
        if (colsample_bytree <= 0 || colsample_bytree > 1)
            throw ValidationError("colsample_bytree must lie in (0, 1]");
        if (min_child_weight < 0)
            throw ValidationError("min_child_weight must be non-negative");
    }
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0;
    int left = -1;
    int right = -1;
    double value = 0;  // leaf prediction, log scale
    double gain = 0;   // loss reduction recorded at the split
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // node 0 is the root

    double eval(const auto& row) const {
        int i = 0;
        while (nodes[i].feature >= 0)
            i = row[nodes[i].feature] < nodes[i].threshold ? nodes[i].left
                                                           : nodes[i].right;
        return nodes[i].value;
    }

    int depth_from(int i = 0) const {
        if (nodes[i].feature < 0) return 0;
        return 1 + std::max(depth_from(nodes[i].left), depth_from(nodes[i].right));
    }
};

// ---------------------------------------------------------------------------
// Exact greedy split search on weighted squared error. With targets -g/h
// and weights h the leaf value is -sum(g)/sum(h) and the gain is the
// reduction of (1/2) sum h (target - leaf)^2.

namespace boostdetail {

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0;
    double gain = 0;
};

struct Workset {
    const Eigen::MatrixXd* X = nullptr;
    std::span<const double> target;
    std::span<const double> weight;
};

inline SplitChoice best_split(const Workset& ws, const std::vector<int>& rows,
                              const std::vector<int>& features, double min_child_weight) {
    double total_wt = 0, total_ws = 0;  // sum of weights, weighted target sum
    for (const int i : rows) {
        total_wt += ws.weight[i];
        total_ws += ws.weight[i] * ws.target[i];
    }
    const double parent_score = total_ws * total_ws / total_wt;

    SplitChoice best;
    std::vector<std::pair<double, int>> order;  // (feature value, row)
    order.reserve(rows.size());
    for (const int f : features) {
        order.clear();
        for (const int i : rows) order.push_back({(*ws.X)(i, f), i});
        std::sort(order.begin(), order.end());

        double left_wt = 0, left_ws = 0;
        for (std::size_t k = 0; k + 1 < order.size(); ++k) {
            const int i = order[k].second;
            left_wt += ws.weight[i];
            left_ws += ws.weight[i] * ws.target[i];
            if (order[k].first == order[k + 1].first) continue;  // not a boundary
            const double right_wt = total_wt - left_wt;
            if (left_wt < min_child_weight || right_wt < min_child_weight) continue;
            const double right_ws = total_ws - left_ws;
            const double gain = 0.5 * (left_ws * left_ws / left_wt +
                                       right_ws * right_ws / right_wt - parent_score);
            // Candidates are scanned with features ascending and thresholds
            // ascending; requiring an improvement beyond rounding noise pins
            // the tie-break to the lowest feature index, smallest threshold.
            const double tie_tol = 1e-9 * std::max({1e-3, gain, best.gain});
            if (gain > 1e-12 && gain > best.gain + tie_tol) {
                best.found = true;
                best.feature = f;
                best.threshold = 0.5 * (order[k].first + order[k + 1].first);
                best.gain = gain;
            }
        }
    }
    return best;
}

inline int grow(RegressionTree& tree, const Workset& ws, std::vector<int>&& rows,
                const std::vector<int>& features, int depth, int max_depth,
                double min_child_weight) {
    double wt = 0, wsum = 0;
    for (const int i : rows) {
        wt += ws.weight[i];
        wsum += ws.weight[i] * ws.target[i];
    }

    const int node_index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[node_index].value = wt > 0 ? wsum / wt : 0.0;

    if (depth >= max_depth) return node_index;
    const SplitChoice split = best_split(ws, rows, features, min_child_weight);
    if (!split.found) return node_index;

    std::vector<int> left_rows, right_rows;
    for (const int i : rows)
        ((*ws.X)(i, split.feature) < split.threshold ? left_rows : right_rows)
            .push_back(i);
    rows.clear();
    rows.shrink_to_fit();

    const int left = grow(tree, ws, std::move(left_rows), features, depth + 1, max_depth,
                          min_child_weight);
    const int right = grow(tree, ws, std::move(right_rows), features, depth + 1,
                           max_depth, min_child_weight);
    tree.nodes[node_index].feature = split.feature;
    tree.nodes[node_index].threshold = split.threshold;
    tree.nodes[node_index].gain = split.gain;
    tree.nodes[node_index].left = left;
    tree.nodes[node_index].right = right;
    return node_index;
}

}  // namespace boostdetail

// rows index into X/target/weight; features lists the candidate columns.
inline RegressionTree fit_tree(const Eigen::MatrixXd& X, const std::vector<int>& rows,
                               std::span<const double> target,
                               std::span<const double> weight,
                               const std::vector<int>& features, int max_depth,
                               double min_child_weight) {
    if (rows.empty()) throw ValidationError("fit_tree: no rows");
    for (const int i : rows)
        if (weight[i] <= 0) throw ValidationError("fit_tree: non-positive weight");
    RegressionTree tree;
    boostdetail::Workset ws{&X, target, weight};
    boostdetail::grow(tree, ws, std::vector<int>(rows), features, 0, max_depth,
                      min_child_weight);
    return tree;
}

// ---------------------------------------------------------------------------

struct BoostedModel {
    std::vector<RegressionTree> trees;
    double eta = 0;
    std::vector<std::string> schema;  // feature names, column order
    std::vector<double> train_loss;   // mean per-row loss after each round
    BoostParams params;
    std::set<int> source_years;

    double log_multiplier(const auto& row) const {
        double f = 0;
        for (const auto& tree : trees) f += tree.eval(row);
        return eta * f;
    }
};

inline double predict_multiplier(const BoostedModel& model, const auto& row) {
    if (static_cast<std::size_t>(row.size()) != model.schema.size())
        throw ValidationError("predict_multiplier: row has " +
                              std::to_string(row.size()) + " features, schema has " +
                              std::to_string(model.schema.size()));
    return std::exp(model.log_multiplier(row));
}

using RoundObserver = std::function<void(int round, const RegressionTree&)>;

// Trains on the rows listed in train_rows (indices into X / offsets /
// deaths). The per-round subsample is drawn without replacement from the
// training rows with an RNG keyed by (seed, round), so the result does not
// depend on scheduling or call order.
inline BoostedModel boost_fit_rows(const Eigen::MatrixXd& X,
                                   std::span<const double> offsets,
                                   std::span<const double> deaths,
                                   const std::vector<int>& train_rows,
                                   const std::vector<std::string>& schema,
                                   const BoostParams& params,
                                   const RoundObserver& observer = nullptr) {
    params.validate();
    if (train_rows.empty()) throw ValidationError("boost_fit: no training rows");
    for (const int i : train_rows) {
        if (offsets[i] <= 0) throw ValidationError("boost_fit: offsets must be positive");
        if (deaths[i] < 0) throw ValidationError("boost_fit: negative death count");
    }
    const int n_features = static_cast<int>(X.cols());

    BoostedModel model;
    model.eta = params.eta;
    model.schema = schema;
    model.params = params;

    std::vector<double> f(X.rows(), 0.0);
    std::vector<double> target(X.rows(), 0.0), weight(X.rows(), 0.0);

    const int n_sample = std::max(
        1, static_cast<int>(std::lround(params.subsample * train_rows.size())));
    const int n_cols = std::max(
        1, static_cast<int>(std::lround(params.colsample_bytree * n_features)));

    for (int round = 1; round <= params.nrounds; ++round) {
        for (const int i : train_rows) {
            const GradHess gh = grad_hess(deaths[i], offsets[i], f[i]);
            target[i] = -gh.g / gh.h;
            weight[i] = gh.h;
        }

        std::vector<int> rows;
        if (n_sample == static_cast<int>(train_rows.size())) {
            rows = train_rows;
        } else {
            Rng rng = stream_rng(params.seed, "subsample_rows",
                                 static_cast<std::uint64_t>(round));
            for (const int k :
                 rng.sample_without_replacement(static_cast<int>(train_rows.size()),
                                                n_sample))
                rows.push_back(train_rows[k]);
        }
        std::vector<int> features;
        if (n_cols == n_features) {
            features.resize(n_features);
            for (int j = 0; j < n_features; ++j) features[j] = j;
        } else {
            Rng rng = stream_rng(params.seed, "subsample_cols",
                                 static_cast<std::uint64_t>(round));
            features = rng.sample_without_replacement(n_features, n_cols);
            std::sort(features.begin(), features.end());
        }

        const RegressionTree tree = fit_tree(X, rows, target, weight, features,
                                             params.max_depth, params.min_child_weight);
        for (const int i : train_rows) f[i] += params.eta * tree.eval(X.row(i));

        double loss = 0;
        for (const int i : train_rows) loss += poisson_loss(deaths[i], offsets[i], f[i]);
        loss /= static_cast<double>(train_rows.size());
        if (!std::isfinite(loss))
            throw NumericError("boosting aborted: non-finite training loss at round " +
                               std::to_string(round));
        model.train_loss.push_back(loss);

        model.trees.push_back(tree);
        if (observer) observer(round, tree);
    }
    return model;
}

inline BoostedModel boost_fit(const Eigen::MatrixXd& X, std::span<const double> offsets,
                              std::span<const double> deaths,
                              const std::vector<std::string>& schema,
                              const BoostParams& params) {
    std::vector<int> rows(X.rows());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<int>(i);
    return boost_fit_rows(X, offsets, deaths, rows, schema, params);
}

// ---------------------------------------------------------------------------
// Year-fold cross-validation. Folds hold out one calendar year each; the
// offsets are treated as known. nrounds candidates are scored along the
// holdout loss trace of a single training run per combination and fold.

struct CvGrid {
    std::vector<int> nrounds = {490};
    std::vector<double> eta = {0.01};
    std::vector<int> max_depth = {7};
    std::vector<double> subsample = {0.75};
    std::vector<double> colsample_bytree = {0.50};
    std::vector<double> min_child_weight = {1000.0};

    bool empty() const {
        return nrounds.empty() || eta.empty() || max_depth.empty() ||
               subsample.empty() || colsample_bytree.empty() ||
               min_child_weight.empty();
    }
};

// Paper-scale default grid.
inline CvGrid default_cv_grid() {
    CvGrid g;
    g.nrounds.clear();
    for (int n = 10; n <= 5000; n += 10) g.nrounds.push_back(n);
    g.eta = {0.01, 0.05, 0.1};
    g.min_child_weight = {10, 100, 1000};
    g.subsample = {0.50, 0.75};
    g.colsample_bytree = {0.50, 0.75};
    g.max_depth = {1, 3, 5, 7, 9};
    return g;
}

struct CvEntry {
    BoostParams params;
    std::vector<double> fold_loss;  // mean holdout loss per fold
    double mean_loss = 0;
};

struct CvResult {
    std::vector<CvEntry> entries;  // grid order
    BoostParams best;
    double best_loss = 0;
    std::vector<int> fold_years;
};

namespace boostdetail {

struct Combo {
    double eta, subsample, colsample, mcw;
    int depth;
};

}  // namespace boostdetail

inline CvResult cross_validate(const Eigen::MatrixXd& X, std::span<const double> offsets,
                               std::span<const double> deaths,
                               std::span<const int> row_year,
                               const std::vector<std::string>& schema, const CvGrid& grid,
                               std::uint64_t seed, int jobs = 0) {
    if (grid.empty()) throw ValidationError("cross_validate: empty parameter grid");
    std::set<int> year_set(row_year.begin(), row_year.end());
    if (year_set.size() < 2)
        throw ValidationError("cross_validate needs at least 2 calibration years");
    const std::vector<int> years(year_set.begin(), year_set.end());
    const int n_folds = static_cast<int>(years.size());

    std::vector<int> sorted_nrounds = grid.nrounds;
    std::sort(sorted_nrounds.begin(), sorted_nrounds.end());
    const int max_rounds = sorted_nrounds.back();

    std::vector<boostdetail::Combo> combos;
    for (const double eta : grid.eta)
        for (const double mcw : grid.min_child_weight)
            for (const double sub : grid.subsample)
                for (const double col : grid.colsample_bytree)
                    for (const int depth : grid.max_depth)
                        combos.push_back({eta, sub, col, mcw, depth});

    // loss[combo][fold][nrounds candidate]
    std::vector<std::vector<std::vector<double>>> loss(
        combos.size(), std::vector<std::vector<double>>(
                           n_folds, std::vector<double>(sorted_nrounds.size(), 0.0)));

    struct Task {
        int combo, fold;
    };
    std::vector<Task> tasks;
    for (std::size_t c = 0; c < combos.size(); ++c)
        for (int k = 0; k < n_folds; ++k) tasks.push_back({static_cast<int>(c), k});

    parallel_for(static_cast<int>(tasks.size()), jobs, [&](int ti) {
        const auto [ci, fold] = tasks[ti];
        const boostdetail::Combo& combo = combos[ci];
        std::vector<int> train_rows, holdout_rows;
        for (Eigen::Index i = 0; i < X.rows(); ++i)
            (row_year[i] == years[fold] ? holdout_rows : train_rows)
                .push_back(static_cast<int>(i));

        BoostParams params;
        params.nrounds = max_rounds;
        params.eta = combo.eta;
        params.max_depth = combo.depth;
        params.subsample = combo.subsample;
        params.colsample_bytree = combo.colsample;
        params.min_child_weight = combo.mcw;
        params.seed = fnv1a64("cv") ^ (seed + 0x9e3779b97f4a7c15ull * (ci * 131 + fold));

        std::vector<double> f_hold(holdout_rows.size(), 0.0);
        std::size_t next_candidate = 0;
        // An nrounds = 0 candidate scores the bare offset.
        while (next_candidate < sorted_nrounds.size() &&
               sorted_nrounds[next_candidate] == 0) {
            double sum = 0;
            for (const int i : holdout_rows)
                sum += poisson_loss(deaths[i], offsets[i], 0.0);
            loss[ci][fold][next_candidate] =
                sum / static_cast<double>(holdout_rows.size());
            ++next_candidate;
        }
        const auto observer = [&](int round, const RegressionTree& tree) {
            for (std::size_t j = 0; j < holdout_rows.size(); ++j)
                f_hold[j] += params.eta * tree.eval(X.row(holdout_rows[j]));
            while (next_candidate < sorted_nrounds.size() &&
                   sorted_nrounds[next_candidate] == round) {
                double sum = 0;
                for (std::size_t j = 0; j < holdout_rows.size(); ++j)
                    sum += poisson_loss(deaths[holdout_rows[j]],
                                        offsets[holdout_rows[j]], f_hold[j]);
                loss[ci][fold][next_candidate] =
                    sum / static_cast<double>(holdout_rows.size());
                ++next_candidate;
            }
        };
        boost_fit_rows(X, offsets, deaths, train_rows, schema, params, observer);
    });

    CvResult result;
    result.fold_years = years;
    result.best_loss = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < combos.size(); ++c) {
        for (std::size_t nidx = 0; nidx < sorted_nrounds.size(); ++nidx) {
            CvEntry entry;
            entry.params.nrounds = sorted_nrounds[nidx];
            entry.params.eta = combos[c].eta;
            entry.params.max_depth = combos[c].depth;
            entry.params.subsample = combos[c].subsample;
            entry.params.colsample_bytree = combos[c].colsample;
            entry.params.min_child_weight = combos[c].mcw;
            entry.params.seed = seed;
            double mean = 0;
            for (int k = 0; k < n_folds; ++k) {
                entry.fold_loss.push_back(loss[c][k][nidx]);
                mean += loss[c][k][nidx];
            }
            entry.mean_loss = mean / n_folds;
            if (entry.mean_loss < result.best_loss) {
                result.best_loss = entry.mean_loss;
                result.best = entry.params;
            }
            result.entries.push_back(std::move(entry));
        }
    }
    return result;
}

}  // namespace mortenv
