#pragma once

// Excess-death analytics on top of the fitted models: P-score (EDP) grids
// over a feature and its one-week lag, Poisson deviance comparisons, and
// the one-year backtest that refits everything on the training years only.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mortenv/baseline.hpp"
#include "mortenv/boost.hpp"
#include "mortenv/csv.hpp"
#include "mortenv/errors.hpp"
#include "mortenv/features.hpp"
#include "mortenv/panel.hpp"

namespace mortenv {

// Excess death proportion ("P-score"): (d - b) / b.
inline double edp(double deaths, double baseline) {
    if (baseline <= 0) throw ValidationError("edp: baseline deaths must be positive");
    return (deaths - baseline) / baseline;
}

// ---------------------------------------------------------------------------

inline double poisson_deviance(std::span<const double> deaths,
                               std::span<const double> estimated) {
    if (deaths.size() != estimated.size())
        throw ValidationError("poisson_deviance: length mismatch");
    double dev = 0;
    for (std::size_t i = 0; i < deaths.size(); ++i) {
        if (estimated[i] <= 0)
            throw ValidationError("poisson_deviance: estimates must be positive");
        if (deaths[i] < 0)
            throw ValidationError("poisson_deviance: negative death count");
        dev += (deaths[i] > 0 ? deaths[i] * std::log(deaths[i] / estimated[i]) : 0.0) -
               (deaths[i] - estimated[i]);
    }
    return 2.0 * dev;
}

// Positive values mean the model improves on the baseline.
inline double deviance_reduction(double dev_baseline, double dev_model) {
    if (dev_baseline <= 0)
        throw ValidationError("deviance_reduction: baseline deviance must be positive");
    return (dev_baseline - dev_model) / dev_baseline;
}

// ---------------------------------------------------------------------------
// Harvesting grids: equal-width bins over the pooled range of a feature and
// its lag; cell (i, j) averages the EDPs of rows whose lagged value falls
// in bin i and current value in bin j.

struct EdpGrid {
    std::string feature;
    std::vector<double> edges;  // B + 1 equal-width edges
    Eigen::MatrixXd observed;   // lag bin x current bin
    Eigen::MatrixXd estimated;
    Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> counts;
    std::vector<std::vector<bool>> missing;

    int bins() const { return static_cast<int>(edges.size()) - 1; }
};

namespace analysisdetail {

inline int equal_width_bin(const std::vector<double>& edges, double v) {
    const int b = static_cast<int>(edges.size()) - 1;
    const double lo = edges.front(), hi = edges.back();
    if (v >= hi) return b;  // last bin is right-closed
    const int idx = 1 + static_cast<int>((v - lo) / (hi - lo) * b);
    return std::clamp(idx, 1, b);
}

}  // namespace analysisdetail

inline EdpGrid harvesting_grid(std::span<const double> feature_current,
                               std::span<const double> feature_lagged,
                               std::span<const double> deaths,
                               std::span<const double> baseline,
                               std::span<const double> estimated, int bins,
                               const std::string& feature_name = {}) {
    const std::size_t n = feature_current.size();
    if (feature_lagged.size() != n || deaths.size() != n || baseline.size() != n ||
        estimated.size() != n)
        throw ValidationError("harvesting_grid: input length mismatch");
    if (n == 0) throw ValidationError("harvesting_grid: no rows");
    if (bins < 2) throw ValidationError("harvesting_grid: need at least 2 bins");

    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
        lo = std::min({lo, feature_current[i], feature_lagged[i]});
        hi = std::max({hi, feature_current[i], feature_lagged[i]});
    }
    if (!(hi > lo))
        throw ValidationError("harvesting_grid: feature '" + feature_name +
                              "' is constant");

    EdpGrid grid;
    grid.feature = feature_name;
    for (int i = 0; i <= bins; ++i)
        grid.edges.push_back(lo + (hi - lo) * i / bins);
    grid.observed.setZero(bins, bins);
    grid.estimated.setZero(bins, bins);
    grid.counts.setZero(bins, bins);

    for (std::size_t i = 0; i < n; ++i) {
        const int bl = analysisdetail::equal_width_bin(grid.edges, feature_lagged[i]) - 1;
        const int bc = analysisdetail::equal_width_bin(grid.edges, feature_current[i]) - 1;
        grid.observed(bl, bc) += edp(deaths[i], baseline[i]);
        grid.estimated(bl, bc) += edp(estimated[i], baseline[i]);
        grid.counts(bl, bc) += 1;
    }
    grid.missing.assign(bins, std::vector<bool>(bins, false));
    for (int a = 0; a < bins; ++a)
        for (int b = 0; b < bins; ++b) {
            if (grid.counts(a, b) > 0) {
                grid.observed(a, b) /= static_cast<double>(grid.counts(a, b));
                grid.estimated(a, b) /= static_cast<double>(grid.counts(a, b));
            } else {
                grid.missing[a][b] = true;
                grid.observed(a, b) = 0;
                grid.estimated(a, b) = 0;
            }
        }
    return grid;
}

inline void write_edp_grid_csv(const EdpGrid& grid, const std::string& path) {
    CsvWriter w(path, {"feature", "bin_lag", "bin_cur", "observed", "estimated", "count"});
    for (int a = 0; a < grid.bins(); ++a)
        for (int b = 0; b < grid.bins(); ++b) {
            w.field(grid.feature);
            w.field(a + 1);
            w.field(b + 1);
            w.field(grid.observed(a, b));
            w.field(grid.estimated(a, b));
            w.field(static_cast<long>(grid.counts(a, b)));
            w.end_row();
        }
}

// ---------------------------------------------------------------------------
// Backtest: refit everything on the years before the holdout year, project
// the holdout year, and compare Poisson deviances per region.

struct BacktestConfig {
    FeatureConfig features;
    std::array<double, kBaselineCoefs> lambda_hat{};
    GlmOptions glm;
    BoostParams params;            // tuned values; nrounds and depth re-tuned below
    std::vector<int> nrounds_grid = {100, 200};
    std::vector<int> depth_grid = {3, 7};
    std::uint64_t seed = 0;
    int jobs = 0;
};

struct BacktestRegion {
    std::string region;
    double deviance_baseline = 0;
    double deviance_model = 0;
    double relative_change = 0;  // positive: model beats baseline
};

struct BacktestCell {
    std::string region;
    IsoWeek week;
    double deaths = 0;
    double b_hat = 0;
    double d_hat = 0;
};

struct BacktestResult {
    std::vector<BacktestRegion> per_region;
    std::vector<BacktestCell> cells;
    BoostParams tuned;
    std::set<int> training_years;
};

namespace analysisdetail {

inline void require_no_holdout(const std::set<int>& source_years, int holdout,
                               const std::string& artifact) {
    if (source_years.count(holdout))
        throw ValidationError("backtest leakage: " + artifact +
                              " was fitted on holdout year " + std::to_string(holdout));
}

inline WeeklyPanel panel_before_year(const WeeklyPanel& panel, int year) {
    WeeklyPanel out;
    for (int w = 0; w < panel.n_weeks(); ++w)
        if (panel.weeks[w].year < year) out.weeks.push_back(panel.weeks[w]);
    out.deaths.assign(panel.n_regions(), {});
    out.exposure.assign(panel.n_regions(), {});
    for (int r = 0; r < panel.n_regions(); ++r)
        for (int w = 0; w < panel.n_weeks(); ++w)
            if (panel.weeks[w].year < year) {
                out.deaths[r].push_back(panel.deaths[r][w]);
                out.exposure[r].push_back(panel.exposure[r][w]);
            }
    return out;
}

}  // namespace analysisdetail

inline BacktestResult backtest(const RegionGraph& graph, const WeeklyPanel& panel,
                               const std::map<std::string, RegionDailySeries>& series,
                               int holdout_year, const BacktestConfig& config) {
    const std::vector<int> years = panel.years();
    if (std::find(years.begin(), years.end(), holdout_year) == years.end())
        throw ValidationError("backtest: holdout year " + std::to_string(holdout_year) +
                              " not present in the panel");
    if (holdout_year != years.back())
        throw ValidationError("backtest: the holdout year must be the final panel year; "
                              "earlier years are training data");
    if (years.size() < 3)
        throw ValidationError("backtest needs at least 2 training years");

    BacktestResult result;
    for (const int y : years)
        if (y != holdout_year) result.training_years.insert(y);
    const int first_training = *result.training_years.begin();
    const int last_training = *result.training_years.rbegin();

    // Baseline on training years only, reusing the supplied smoothing
    // parameters.
    const WeeklyPanel train_panel =
        analysisdetail::panel_before_year(panel, holdout_year);
    const BaselineFit baseline_fit =
        fit_penalized_glm_at(train_panel, graph, config.lambda_hat, config.glm);
    analysisdetail::require_no_holdout(baseline_fit.source_years, holdout_year,
                                       "baseline fit");

    // Environmental baselines and thresholds from the training window only.
    const DayWindow train_window = window_for_years(first_training, last_training);
    const EnvModel env_model =
        fit_env_model(series, graph, config.features, train_window, config.jobs);
    analysisdetail::require_no_holdout(env_model.source_years, holdout_year,
                                       "environmental baselines/thresholds");

    // Training features and offsets.
    const FeatureMatrix train_features =
        assemble_features(series, env_model, graph, train_panel.weeks, config.jobs);
    analysisdetail::require_no_holdout(train_features.source_years, holdout_year,
                                       "training feature rows");

    std::vector<double> train_offsets, train_deaths;
    std::vector<int> train_row_year;
    for (int i = 0; i < train_features.n_rows(); ++i) {
        const int r = train_features.region[i];
        const IsoWeek w = train_features.week[i];
        const int wi = train_panel.week_index(w);
        train_offsets.push_back(predict_baseline(baseline_fit, graph.regions[r], w.year,
                                                 w.week, train_panel.exposure[r][wi]));
        train_deaths.push_back(static_cast<double>(train_panel.deaths[r][wi]));
        train_row_year.push_back(w.year);
    }

    // Re-tune only the tree depth and the number of rounds.
    CvGrid grid;
    grid.nrounds = config.nrounds_grid;
    grid.max_depth = config.depth_grid;
    grid.eta = {config.params.eta};
    grid.subsample = {config.params.subsample};
    grid.colsample_bytree = {config.params.colsample_bytree};
    grid.min_child_weight = {config.params.min_child_weight};
    const CvResult cv =
        cross_validate(train_features.values, train_offsets, train_deaths,
                       train_row_year, train_features.columns, grid, config.seed,
                       config.jobs);
    result.tuned = cv.best;
    result.tuned.seed = config.seed;

    BoostedModel model = boost_fit(train_features.values, train_offsets, train_deaths,
                                   train_features.columns, result.tuned);
    model.source_years = train_features.source_years;
    analysisdetail::require_no_holdout(model.source_years, holdout_year,
                                       "boosted model");

    // Holdout features come from holdout-year observations pushed through
    // the training-fitted environmental baselines; the one-week lag may
    // reach into the last training year (observation data, not parameters).
    std::vector<IsoWeek> holdout_weeks;
    for (const IsoWeek& w : panel.weeks)
        if (w.year == holdout_year) holdout_weeks.push_back(w);
    const FeatureMatrix holdout_features =
        assemble_features(series, env_model, graph, holdout_weeks, config.jobs);

    std::map<int, std::vector<double>> region_deaths, region_b, region_d;
    for (int i = 0; i < holdout_features.n_rows(); ++i) {
        const int r = holdout_features.region[i];
        const IsoWeek w = holdout_features.week[i];
        const int wi = panel.week_index(w);
        const double b_hat = predict_baseline(baseline_fit, graph.regions[r], w.year,
                                              w.week, panel.exposure[r][wi]);
        const double phi = predict_multiplier(model, holdout_features.values.row(i));
        const double d_hat = b_hat * phi;
        const double deaths = static_cast<double>(panel.deaths[r][wi]);
        region_deaths[r].push_back(deaths);
        region_b[r].push_back(b_hat);
        region_d[r].push_back(d_hat);
        result.cells.push_back({graph.regions[r], w, deaths, b_hat, d_hat});
    }

    for (int r = 0; r < graph.size(); ++r) {
        if (!region_deaths.count(r))
            throw NumericError("backtest produced no holdout rows for region " +
                               graph.regions[r]);
        BacktestRegion row;
        row.region = graph.regions[r];
        row.deviance_baseline = poisson_deviance(region_deaths[r], region_b[r]);
        row.deviance_model = poisson_deviance(region_deaths[r], region_d[r]);
        row.relative_change =
            deviance_reduction(row.deviance_baseline, row.deviance_model);
        result.per_region.push_back(row);
    }
    return result;
}

inline void write_backtest_csv(const BacktestResult& result, const std::string& path) {
    CsvWriter w(path, {"region", "deviance_baseline", "deviance_model", "relative_change"});
    for (const auto& row : result.per_region) {
        w.field(row.region);
        w.field(row.deviance_baseline);
        w.field(row.deviance_model);
        w.field(row.relative_change);
        w.end_row();
    }
}

}  // namespace mortenv
