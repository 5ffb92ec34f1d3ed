#pragma once

// Weekly environmental feature engineering: robust Fourier anomaly
// baselines per (region, factor), quantile extreme thresholds, daily
// indices, weekly averaging, lags, season indicators, and centroid
// coordinates. The default schema carries 25 weekly features, their
// one-week lags, 4 season indicators, and longitude/latitude: 56 columns.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mortenv/calendar.hpp"
#include "mortenv/csv.hpp"
#include "mortenv/errors.hpp"
#include "mortenv/panel.hpp"
#include "mortenv/parallel.hpp"
#include "mortenv/robust.hpp"
#include "mortenv/spatial.hpp"

namespace mortenv {

constexpr double kAverageDaysPerYear = 365.25;

// ---------------------------------------------------------------------------
// Seasons. A week belongs to the season containing its first day (Monday);
// boundaries are inclusive at the lower end: spring starts March 15, summer
// June 15, autumn September 15, winter December 15.

enum class Season { Spring = 0, Summer = 1, Autumn = 2, Winter = 3 };

inline Season season_of(const Date& d) {
    const int md = d.month * 100 + d.day;
    if (md >= 315 && md < 615) return Season::Spring;
    if (md >= 615 && md < 915) return Season::Summer;
    if (md >= 915 && md < 1215) return Season::Autumn;
    return Season::Winter;
}

inline Season season_of(const IsoWeek& w) {
    return season_of(date_from_serial(monday_of(w)));
}

inline const char* season_name(Season s) {
    switch (s) {
        case Season::Spring: return "spring";
        case Season::Summer: return "summer";
        case Season::Autumn: return "autumn";
        default: return "winter";
    }
}

// ---------------------------------------------------------------------------
// Anomaly baselines: value ~ a0 + a1 sin(2 pi day/365.25) + a2 cos(...),
// fitted by Huber IRLS; factors without a seasonal pattern use the zero
// baseline so the anomaly equals the raw value.

struct AnomalyBaseline {
    double a0 = 0, a1 = 0, a2 = 0;
    bool zero_baseline = false;
    bool converged = true;
    int iterations = 0;
};

inline double baseline_prediction(const AnomalyBaseline& b, const Date& date,
                                  double days_per_year = kAverageDaysPerYear) {
    if (b.zero_baseline) return 0.0;
    const double phase = 2.0 * std::numbers::pi * day_of_year(date) / days_per_year;
    return b.a0 + b.a1 * std::sin(phase) + b.a2 * std::cos(phase);
}

inline double anomaly(double value, const AnomalyBaseline& b, const Date& date,
                      double days_per_year = kAverageDaysPerYear) {
    return value - baseline_prediction(b, date, days_per_year);
}

inline AnomalyBaseline fit_anomaly_baseline(std::span<const std::int64_t> days,
                                            std::span<const double> values,
                                            double days_per_year = kAverageDaysPerYear,
                                            const HuberOptions& opt = {}) {
    if (days.size() != values.size())
        throw ValidationError("fit_anomaly_baseline: day/value length mismatch");
    std::set<std::int64_t> distinct(days.begin(), days.end());
    if (distinct.size() < 3)
        throw ValidationError("fit_anomaly_baseline: need at least 3 distinct days");
    Eigen::MatrixXd X(days.size(), 3);
    Eigen::VectorXd y(days.size());
    for (std::size_t i = 0; i < days.size(); ++i) {
        if (!std::isfinite(values[i]))
            throw ValidationError("fit_anomaly_baseline: non-finite value");
        const double phase = 2.0 * std::numbers::pi *
                             day_of_year(date_from_serial(days[i])) / days_per_year;
        X(i, 0) = 1.0;
        X(i, 1) = std::sin(phase);
        X(i, 2) = std::cos(phase);
        y[i] = values[i];
    }
    const HuberFit fit = huber_irls(X, y, opt);
    AnomalyBaseline out;
    out.a0 = fit.beta[0];
    out.a1 = fit.beta[1];
    out.a2 = fit.beta[2];
    out.converged = fit.converged;
    out.iterations = fit.iterations;
    return out;
}

// ---------------------------------------------------------------------------
// Extreme thresholds and daily indices.

struct Thresholds {
    double q5 = 0;
    double q95 = 0;
};

// Linear-interpolation (type 7) sample quantile.
inline double sample_quantile(std::vector<double> values, double p) {
    if (values.empty()) throw ValidationError("quantile of empty sample");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

enum class Direction { High, Low };

// Count of the three temperature statistics beyond their historical
// thresholds; 3 marks a very hot (or very cold) day. Inclusive comparisons.
inline int extreme_temperature_index(double tmax, double tavg, double tmin,
                                     const Thresholds& thr_max, const Thresholds& thr_avg,
                                     const Thresholds& thr_min, Direction direction) {
    if (direction == Direction::High)
        return (tmax >= thr_max.q95 ? 1 : 0) + (tavg >= thr_avg.q95 ? 1 : 0) +
               (tmin >= thr_min.q95 ? 1 : 0);
    return (tmax <= thr_max.q5 ? 1 : 0) + (tavg <= thr_avg.q5 ? 1 : 0) +
           (tmin <= thr_min.q5 ? 1 : 0);
}

inline int extreme_factor_indicator(double value, const Thresholds& thr,
                                    Direction direction) {
    if (direction == Direction::High) return value >= thr.q95 ? 1 : 0;
    return value <= thr.q5 ? 1 : 0;
}

inline double weekly_average(std::span<const double> daily) {
    if (daily.size() != 7)
        throw ValidationError("weekly_average needs exactly 7 daily values, got " +
                              std::to_string(daily.size()));
    double sum = 0;
    for (const double v : daily) sum += v;
    return sum / 7.0;
}

// ---------------------------------------------------------------------------
// Factor schema.

struct FactorSpec {
    std::string name;
    bool hourly = false;          // pollutants arrive hourly, weather daily
    bool zero_baseline = false;   // anomaly = raw value
    bool anomaly_feature = true;  // contributes a "<name>_anom" column
    bool high_low = true;         // contributes idx_high_/idx_low_ columns
};

// Table-2 schema: six weather factors and four pollutants. The temperature
// trio feeds the hot/cold index instead of plain high/low indicators, and
// only min/max temperature carry anomaly columns.
inline std::vector<FactorSpec> default_factor_set() {
    return {
        {"tmax", false, false, true, false},
        {"tavg", false, false, false, false},
        {"tmin", false, false, true, false},
        {"hum", false, false, true, true},
        {"rain", false, true, true, true},
        {"wind", false, false, true, true},
        {"o3", true, false, true, true},
        {"no2", true, false, true, true},
        {"pm10", true, false, true, true},
        {"pm25", true, false, true, true},
    };
}

struct FeatureConfig {
    std::vector<FactorSpec> factors = default_factor_set();
    int lag_depth = 1;
    double days_per_year = kAverageDaysPerYear;
    HuberOptions huber;
};

// Daily value a factor contributes downstream: the daily average for
// hourly-sourced factors (daily fields carry the value in every statistic).
inline double factor_daily_value(const FactorSpec&, const DailyStats& s) {
    return s.avg;
}

// ---------------------------------------------------------------------------
// Fitted feature-engineering state (anomaly baselines + thresholds), tied to
// the calibration window it was computed from.

struct EnvModel {
    FeatureConfig config;
    // baselines[factor][region]; thresholds[factor][region] on the raw daily
    // values of the consumed statistic (daily value, or the daily average
    // for hourly-sourced factors).
    std::map<std::string, std::vector<AnomalyBaseline>> baselines;
    std::map<std::string, std::vector<Thresholds>> thresholds;
    // Per-statistic quantiles for audit: {"value"} for daily factors,
    // {"min","avg","max"} for hourly-sourced ones.
    std::map<std::string, std::map<std::string, std::vector<Thresholds>>> thresholds_by_stat;
    std::int64_t window_first_day = 0;
    int window_n_days = 0;
    std::set<int> source_years;  // ISO years whose observations were used
};

struct DayWindow {
    std::int64_t first_day = 0;
    int n_days = 0;
};

// Days spanned by the ISO weeks of the given years (Monday of week 1 of the
// first year through Sunday of the last week of the last year).
inline DayWindow window_for_years(int first_year, int last_year) {
    const std::int64_t first = monday_of({first_year, 1});
    const std::int64_t last =
        monday_of({last_year, weeks_in_iso_year(last_year)}) + 6;
    return {first, static_cast<int>(last - first + 1)};
}

inline const RegionDailySeries& require_factor(
    const std::map<std::string, RegionDailySeries>& series, const std::string& factor) {
    const auto it = series.find(factor);
    if (it == series.end())
        throw ValidationError("no daily series for factor '" + factor + "'");
    return it->second;
}

inline void validate_factor_set(const FeatureConfig& config) {
    bool tmax = false, tavg = false, tmin = false;
    for (const auto& spec : config.factors) {
        if (spec.name == "tmax") tmax = spec.anomaly_feature;
        if (spec.name == "tavg") tavg = true;
        if (spec.name == "tmin") tmin = spec.anomaly_feature;
    }
    if (!tmax || !tavg || !tmin)
        throw ValidationError(
            "factor set must contain tmax/tavg/tmin (with anomaly columns for "
            "tmax and tmin); the hot/cold index is built from the trio");
}

inline EnvModel fit_env_model(const std::map<std::string, RegionDailySeries>& series,
                              const RegionGraph& graph, const FeatureConfig& config,
                              const DayWindow& window, int jobs = 0) {
    validate_factor_set(config);
    EnvModel model;
    model.config = config;
    model.window_first_day = window.first_day;
    model.window_n_days = window.n_days;
    for (std::int64_t d = window.first_day; d < window.first_day + window.n_days; ++d)
        model.source_years.insert(iso_week_of(date_from_serial(d)).year);

    const int n_regions = graph.size();
    for (const auto& spec : config.factors) {
        const RegionDailySeries& s = require_factor(series, spec.name);
        if (static_cast<int>(s.values.size()) != n_regions)
            throw ValidationError("factor '" + spec.name + "' covers " +
                                  std::to_string(s.values.size()) + " regions, expected " +
                                  std::to_string(n_regions));
        model.baselines[spec.name].resize(n_regions);
        model.thresholds[spec.name].resize(n_regions);
        if (s.hourly_sourced)
            for (const char* stat : {"min", "avg", "max"})
                model.thresholds_by_stat[spec.name][stat].resize(n_regions);
        else
            model.thresholds_by_stat[spec.name]["value"].resize(n_regions);
    }

    struct Task {
        const FactorSpec* spec;
        int region;
    };
    std::vector<Task> tasks;
    for (const auto& spec : config.factors)
        for (int r = 0; r < n_regions; ++r) tasks.push_back({&spec, r});

    parallel_for(static_cast<int>(tasks.size()), jobs, [&](int ti) {
        const FactorSpec& spec = *tasks[ti].spec;
        const int r = tasks[ti].region;
        const RegionDailySeries& s = require_factor(series, spec.name);

        std::vector<std::int64_t> days;
        std::vector<double> values;
        for (std::int64_t d = window.first_day; d < window.first_day + window.n_days; ++d) {
            days.push_back(d);
            values.push_back(factor_daily_value(spec, s.at(r, d)));
        }
        if (values.empty())
            throw ValidationError("factor '" + spec.name + "' region '" +
                                  graph.regions[r] + "': no observations in window");

        Thresholds thr;
        thr.q5 = sample_quantile(values, 0.05);
        thr.q95 = sample_quantile(values, 0.95);
        model.thresholds.at(spec.name)[r] = thr;

        // Audit quantiles for every daily statistic carried by the series.
        for (auto& [stat, per_region] : model.thresholds_by_stat.at(spec.name)) {
            std::vector<double> stat_values;
            for (std::int64_t d = window.first_day;
                 d < window.first_day + window.n_days; ++d) {
                const DailyStats& ds = s.at(r, d);
                stat_values.push_back(stat == "min"   ? ds.min
                                      : stat == "max" ? ds.max
                                                      : ds.avg);
            }
            per_region[r].q5 = sample_quantile(stat_values, 0.05);
            per_region[r].q95 = sample_quantile(stat_values, 0.95);
        }

        AnomalyBaseline base;
        if (spec.zero_baseline) {
            base.zero_baseline = true;
        } else if (spec.anomaly_feature) {
            base = fit_anomaly_baseline(days, values, config.days_per_year, config.huber);
        }
        model.baselines.at(spec.name)[r] = base;
    });
    return model;
}

// ---------------------------------------------------------------------------
// Weekly feature matrix.

struct FeatureMatrix {
    std::vector<std::string> columns;
    std::vector<int> region;    // per row
    std::vector<IsoWeek> week;  // per row
    Eigen::MatrixXd values;     // rows x columns
    std::set<int> source_years;

    int n_rows() const { return static_cast<int>(region.size()); }
    int n_cols() const { return static_cast<int>(columns.size()); }

    int column_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return static_cast<int>(i);
        throw ValidationError("unknown feature column '" + name + "'");
    }
};

// The 25 base column names, in the fixed documented order.
inline std::vector<std::string> base_feature_names(const FeatureConfig& config) {
    std::vector<std::string> names = {"tmax_anom", "tmin_anom", "idx_hot", "idx_cold"};
    for (const auto& spec : config.factors) {
        if (spec.name == "tmax" || spec.name == "tavg" || spec.name == "tmin") continue;
        if (spec.anomaly_feature) names.push_back(spec.name + "_anom");
        if (spec.high_low) {
            names.push_back("idx_high_" + spec.name);
            names.push_back("idx_low_" + spec.name);
        }
    }
    return names;
}

inline std::vector<std::string> feature_column_names(const FeatureConfig& config) {
    const auto base = base_feature_names(config);
    std::vector<std::string> names = base;
    for (int lag = 1; lag <= config.lag_depth; ++lag)
        for (const auto& b : base) names.push_back("l" + std::to_string(lag) + "_" + b);
    names.insert(names.end(),
                 {"season_spring", "season_summer", "season_autumn", "season_winter"});
    names.push_back("lon");
    names.push_back("lat");
    return names;
}

namespace detail {

// Base (unlagged) weekly feature vector for one region and week, or empty
// if the week's days are not fully covered by every factor's series.
inline bool weekly_base_features(const std::map<std::string, RegionDailySeries>& series,
                                 const EnvModel& model, int r, const IsoWeek& week,
                                 std::vector<double>& out) {
    const FeatureConfig& config = model.config;
    const std::int64_t monday = monday_of(week);
    for (const auto& spec : config.factors) {
        const RegionDailySeries& s = require_factor(series, spec.name);
        if (monday < s.first_day || monday + 6 >= s.first_day + s.n_days) return false;
    }

    std::array<double, 7> hot{}, cold{};
    std::map<std::string, std::array<double, 7>> daily_anom, daily_high, daily_low;

    const auto& thr_max = model.thresholds.at("tmax")[r];
    const auto& thr_avg = model.thresholds.at("tavg")[r];
    const auto& thr_min = model.thresholds.at("tmin")[r];

    for (int d = 0; d < 7; ++d) {
        const std::int64_t serial = monday + d;
        const Date date = date_from_serial(serial);
        double tmax = 0, tavg = 0, tmin = 0;
        for (const auto& spec : config.factors) {
            const RegionDailySeries& s = require_factor(series, spec.name);
            const double value = factor_daily_value(spec, s.at(r, serial));
            if (spec.name == "tmax") tmax = value;
            if (spec.name == "tavg") tavg = value;
            if (spec.name == "tmin") tmin = value;
            if (spec.anomaly_feature)
                daily_anom[spec.name][d] = anomaly(value, model.baselines.at(spec.name)[r],
                                                   date, config.days_per_year);
            if (spec.high_low) {
                const Thresholds& thr = model.thresholds.at(spec.name)[r];
                daily_high[spec.name][d] = extreme_factor_indicator(value, thr, Direction::High);
                daily_low[spec.name][d] = extreme_factor_indicator(value, thr, Direction::Low);
            }
        }
        hot[d] = extreme_temperature_index(tmax, tavg, tmin, thr_max, thr_avg, thr_min,
                                           Direction::High);
        cold[d] = extreme_temperature_index(tmax, tavg, tmin, thr_max, thr_avg, thr_min,
                                            Direction::Low);
    }

    out.clear();
    out.push_back(weekly_average(daily_anom.at("tmax")));
    out.push_back(weekly_average(daily_anom.at("tmin")));
    out.push_back(weekly_average(hot));
    out.push_back(weekly_average(cold));
    for (const auto& spec : config.factors) {
        if (spec.name == "tmax" || spec.name == "tavg" || spec.name == "tmin") continue;
        if (spec.anomaly_feature) out.push_back(weekly_average(daily_anom.at(spec.name)));
        if (spec.high_low) {
            out.push_back(weekly_average(daily_high.at(spec.name)));
            out.push_back(weekly_average(daily_low.at(spec.name)));
        }
    }
    return true;
}

}  // namespace detail

// Builds the feature matrix for the requested weeks. Rows whose lag source
// weeks lack daily coverage are dropped; a requested week without coverage
// of its own days is an error.
inline FeatureMatrix assemble_features(const std::map<std::string, RegionDailySeries>& series,
                                       const EnvModel& model, const RegionGraph& graph,
                                       const std::vector<IsoWeek>& target_weeks,
                                       int jobs = 0) {
    const FeatureConfig& config = model.config;
    if (config.lag_depth < 1) throw ValidationError("lag depth must be >= 1");
    const int n_regions = graph.size();

    // Weeks whose base features are needed: targets plus their lag sources.
    std::vector<IsoWeek> needed;
    {
        std::set<IsoWeek> all(target_weeks.begin(), target_weeks.end());
        for (IsoWeek w : target_weeks)
            for (int lag = 1; lag <= config.lag_depth; ++lag) {
                w = prev_week(w);
                all.insert(w);
            }
        needed.assign(all.begin(), all.end());
    }

    // base[r][needed index] -> feature vector (empty when uncovered).
    std::vector<std::vector<std::vector<double>>> base(
        n_regions, std::vector<std::vector<double>>(needed.size()));
    parallel_for(n_regions, jobs, [&](int r) {
        for (std::size_t wi = 0; wi < needed.size(); ++wi) {
            std::vector<double> row;
            if (detail::weekly_base_features(series, model, r, needed[wi], row))
                base[r][wi] = std::move(row);
        }
    });

    const auto needed_index = [&](const IsoWeek& w) {
        return static_cast<std::size_t>(
            std::lower_bound(needed.begin(), needed.end(), w) - needed.begin());
    };

    FeatureMatrix out;
    out.columns = feature_column_names(config);
    std::vector<std::vector<double>> rows;
    for (int r = 0; r < n_regions; ++r) {
        for (const IsoWeek& w : target_weeks) {
            const auto& current = base[r][needed_index(w)];
            if (current.empty())
                throw ValidationError("region '" + graph.regions[r] + "': week (" +
                                      std::to_string(w.year) + ", " +
                                      std::to_string(w.week) +
                                      ") lacks daily coverage for the factor set");
            std::vector<const std::vector<double>*> lags;
            bool complete = true;
            IsoWeek lw = w;
            for (int lag = 1; lag <= config.lag_depth; ++lag) {
                lw = prev_week(lw);
                const auto& lrow = base[r][needed_index(lw)];
                if (lrow.empty()) {
                    complete = false;
                    break;
                }
                lags.push_back(&lrow);
            }
            if (!complete) continue;  // lag source absent: row dropped

            std::vector<double> row;
            row.reserve(out.columns.size());
            row.insert(row.end(), current.begin(), current.end());
            for (const auto* lrow : lags) row.insert(row.end(), lrow->begin(), lrow->end());
            const Season season = season_of(w);
            for (int s = 0; s < 4; ++s)
                row.push_back(static_cast<int>(season) == s ? 1.0 : 0.0);
            row.push_back(graph.centroids[r][0]);
            row.push_back(graph.centroids[r][1]);

            out.region.push_back(r);
            out.week.push_back(w);
            rows.push_back(std::move(row));
        }
    }

    out.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(out.columns.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                rows[i][j];
    for (const IsoWeek& w : out.week) out.source_years.insert(w.year);
    return out;
}

// ---------------------------------------------------------------------------
// Audit artifacts.

inline void write_features_csv(const FeatureMatrix& m, const RegionGraph& graph,
                               const std::string& path) {
    std::vector<std::string> header = {"region", "iso_year", "iso_week"};
    header.insert(header.end(), m.columns.begin(), m.columns.end());
    CsvWriter w(path, header);
    for (int i = 0; i < m.n_rows(); ++i) {
        w.field(graph.regions[m.region[i]]);
        w.field(m.week[i].year);
        w.field(m.week[i].week);
        for (int j = 0; j < m.n_cols(); ++j) w.field(m.values(i, j));
        w.end_row();
    }
}

inline void write_thresholds_csv(const EnvModel& model, const RegionGraph& graph,
                                 const std::string& path) {
    CsvWriter w(path, {"region", "factor", "statistic", "q5", "q95"});
    for (const auto& spec : model.config.factors) {
        const auto& by_stat = model.thresholds_by_stat.at(spec.name);
        for (const auto& [stat, per_region] : by_stat) {
            for (int r = 0; r < graph.size(); ++r) {
                w.field(graph.regions[r]);
                w.field(spec.name);
                w.field(stat);
                w.field(per_region[r].q5);
                w.field(per_region[r].q95);
                w.end_row();
            }
        }
    }
}

inline void write_baselines_csv(const EnvModel& model, const RegionGraph& graph,
                                const std::string& path) {
    CsvWriter w(path, {"region", "factor", "a0", "a1", "a2", "zero_baseline",
                       "converged", "iterations"});
    for (const auto& spec : model.config.factors) {
        const auto& per_region = model.baselines.at(spec.name);
        for (int r = 0; r < graph.size(); ++r) {
            w.field(graph.regions[r]);
            w.field(spec.name);
            w.field(per_region[r].a0);
            w.field(per_region[r].a1);
            w.field(per_region[r].a2);
            w.field(per_region[r].zero_baseline ? 1 : 0);
            w.field(per_region[r].converged ? 1 : 0);
            w.field(per_region[r].iterations);
            w.end_row();
        }
    }
}

}  // namespace mortenv
