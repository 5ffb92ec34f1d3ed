#pragma once

// Synthetic fixture generator. Environmental fields are drawn on a small
// grid with seasonal bases and AR(1) regional anomalies; deaths follow
// Poisson(E * exp(z'beta) * phi_true), where phi_true evaluates planted
// log-multiplier coefficients on features engineered by the real pipeline
// from the generated fields. Same seed, same bytes.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "mortenv/baseline.hpp"
#include "mortenv/calendar.hpp"
#include "mortenv/csv.hpp"
#include "mortenv/features.hpp"
#include "mortenv/panel.hpp"
#include "mortenv/rng.hpp"
#include "mortenv/spatial.hpp"

namespace mortenv {

struct SyntheticTruth {
    int n_regions = 6;
    int first_year = 2014;
    int n_years = 4;
    double base_population = 60000;
    // Per-region coefficients of the Serfling intensity; generated from the
    // seed when left empty.
    Eigen::MatrixXd beta;
    // Planted feature -> log-multiplier per unit, evaluated on the
    // engineered weekly features.
    std::map<std::string, double> planted;
    bool hourly_pollutants = false;
    double anomaly_sigma = 2.4;   // daily AR(1) innovation scale, deg C
    double anomaly_phi = 0.7;     // AR(1) persistence
    std::uint64_t seed = 1;
};

struct SyntheticFixture {
    RegionGraph graph;
    WeeklyPanel panel;
    std::map<std::string, GriddedField> fields;
    std::vector<PopulationCell> pop_grid;
    PointRegionMap mapping;
    std::map<std::string, RegionDailySeries> series;
    FeatureMatrix features;          // engineered with the truth's own pipeline
    std::vector<double> phi_true;    // aligned with features rows
    Eigen::MatrixXd beta;            // per-region truth
    std::map<int, std::map<int, double>> population;  // region -> year -> count
};

namespace synthdetail {

inline Eigen::MatrixXd default_beta(int n_regions, std::uint64_t seed) {
    Eigen::MatrixXd beta(n_regions, kBaselineCoefs);
    Rng rng = stream_rng(seed, "truth_beta");
    for (int r = 0; r < n_regions; ++r) {
        beta(r, 0) = -3.35 + 0.08 * rng.next_normal();
        beta(r, 1) = 0.004 + 0.003 * rng.next_normal();
        beta(r, 2) = 0.03 + 0.01 * rng.next_normal();
        beta(r, 3) = 0.14 + 0.02 * rng.next_normal();  // winter-peaked seasonality
        beta(r, 4) = 0.01 + 0.005 * rng.next_normal();
        beta(r, 5) = 0.02 + 0.005 * rng.next_normal();
    }
    return beta;
}

struct FactorShape {
    double level;      // annual mean
    double amplitude;  // seasonal swing, peaks mid-year when negative cosine
    double noise;      // extra white noise on top of the shared anomaly
    double anomaly_scale;  // how strongly the regional AR(1) anomaly loads
};

inline FactorShape shape_of(const std::string& factor) {
    if (factor == "tmax") return {16.0, 9.0, 0.8, 1.0};
    if (factor == "tavg") return {11.0, 8.0, 0.6, 1.0};
    if (factor == "tmin") return {6.0, 7.0, 0.8, 1.0};
    if (factor == "hum") return {70.0, -8.0, 2.0, -0.8};
    if (factor == "rain") return {2.2, 0.6, 1.4, -0.2};
    if (factor == "wind") return {5.0, 1.0, 1.0, 0.3};
    if (factor == "o3") return {55.0, 18.0, 4.0, 2.2};
    if (factor == "no2") return {28.0, -6.0, 3.0, 1.5};
    if (factor == "pm10") return {22.0, -4.0, 3.0, 1.2};
    return {13.0, -3.0, 2.0, 0.9};  // pm25
}

}  // namespace synthdetail

inline SyntheticFixture synth_generate(const SyntheticTruth& truth) {
    SyntheticFixture fx;
    const int R = truth.n_regions;
    const int last_year = truth.first_year + truth.n_years - 1;

    if (R < 2 || R > 99)
        throw ValidationError("synthetic fixtures support 2..99 regions");

    // Regions on a two-row strip; grid adjacency. Zero-padded names keep
    // the lexicographic region order equal to the numeric one.
    for (int r = 0; r < R; ++r) {
        char name[8];
        std::snprintf(name, sizeof(name), "R%02d", r);
        fx.graph.regions.push_back(name);
        const int col = r / 2, row = r % 2;
        fx.graph.centroids.push_back({3.0 + 0.9 * col, 44.0 + 0.8 * row});
        fx.graph.neighbors.emplace_back();
    }
    const auto connect = [&](int a, int b) {
        fx.graph.neighbors[a].push_back(b);
        fx.graph.neighbors[b].push_back(a);
    };
    for (int r = 0; r < R; ++r) {
        if (r % 2 == 0 && r + 1 < R) connect(r, r + 1);  // same column
        if (r + 2 < R) connect(r, r + 2);                // next column
    }
    for (auto& nb : fx.graph.neighbors) std::sort(nb.begin(), nb.end());

    fx.beta = truth.beta.rows() == R ? truth.beta
                                     : synthdetail::default_beta(R, truth.seed);

    // One extra lagged week of environmental coverage so every panel week
    // keeps its lag row.
    const DayWindow panel_window = window_for_years(truth.first_year, last_year);
    const std::int64_t env_first = panel_window.first_day - 7;
    const int env_days = panel_window.n_days + 7;

    // Feature grid: two points per region; population grid: three cells.
    std::vector<GridPoint> feature_grid;
    for (int r = 0; r < R; ++r) {
        const auto [lon, lat] = fx.graph.centroids[r];
        feature_grid.push_back({lon - 0.15, lat});
        feature_grid.push_back({lon + 0.15, lat + 0.1});
        fx.mapping[{lon - 0.15, lat}] = fx.graph.regions[r];
        fx.mapping[{lon + 0.15, lat + 0.1}] = fx.graph.regions[r];
        const double base = truth.base_population;
        fx.pop_grid.push_back({{lon - 0.1, lat + 0.02}, base * 0.5});
        fx.pop_grid.push_back({{lon + 0.1, lat + 0.05}, base * 0.3});
        fx.pop_grid.push_back({{lon, lat - 0.1}, base * 0.2});
        fx.mapping[{lon - 0.1, lat + 0.02}] = fx.graph.regions[r];
        fx.mapping[{lon + 0.1, lat + 0.05}] = fx.graph.regions[r];
        fx.mapping[{lon, lat - 0.1}] = fx.graph.regions[r];
    }
    std::sort(feature_grid.begin(), feature_grid.end());

    // Shared regional anomaly: AR(1) per region, common to all temperature
    // statistics so hot spells are coherent.
    std::vector<std::vector<double>> regional_anomaly(R, std::vector<double>(env_days));
    for (int r = 0; r < R; ++r) {
        Rng rng = stream_rng(truth.seed, "anomaly", static_cast<std::uint64_t>(r));
        double state = 0;
        for (int d = 0; d < env_days; ++d) {
            state = truth.anomaly_phi * state + truth.anomaly_sigma * rng.next_normal();
            regional_anomaly[r][d] = state;
        }
    }

    const auto region_of_point = [&](const GridPoint& p) {
        return fx.graph.require(fx.mapping.at({p.lon, p.lat}));
    };

    for (const auto& spec : default_factor_set()) {
        const synthdetail::FactorShape shape = synthdetail::shape_of(spec.name);
        const bool hourly = spec.hourly && truth.hourly_pollutants;
        GriddedField field;
        field.factor = spec.name;
        field.hourly = hourly;
        field.grid = feature_grid;
        field.first_day = env_first;
        field.n_days = env_days;
        field.values.resize(feature_grid.size());
        for (std::size_t g = 0; g < feature_grid.size(); ++g) {
            const int r = region_of_point(feature_grid[g]);
            Rng rng = stream_rng(truth.seed, "field_" + spec.name,
                                 static_cast<std::uint64_t>(g));
            auto& out = field.values[g];
            out.reserve(static_cast<std::size_t>(env_days) * (hourly ? 24 : 1));
            for (int d = 0; d < env_days; ++d) {
                const Date date = date_from_serial(env_first + d);
                const double phase =
                    2.0 * std::numbers::pi * day_of_year(date) / 365.25;
                double value = shape.level - shape.amplitude * std::cos(phase) +
                               0.4 * r + shape.anomaly_scale * regional_anomaly[r][d] +
                               shape.noise * rng.next_normal();
                if (spec.name == "rain") value = std::max(0.0, value);
                if (hourly) {
                    for (int h = 0; h < 24; ++h)
                        out.push_back(value +
                                      0.15 * shape.level *
                                          std::sin(2.0 * std::numbers::pi * h / 24.0) +
                                      0.02 * shape.level * rng.next_normal());
                } else {
                    out.push_back(value);
                }
            }
        }
        fx.fields.emplace(spec.name, std::move(field));
    }

    // Region-level series, features, and planted multipliers through the
    // real pipeline.
    const RegionWeights weights =
        build_population_weights(fx.pop_grid, feature_grid, fx.mapping, fx.graph);
    for (const auto& [name, field] : fx.fields)
        fx.series.emplace(name, region_daily_series(field, weights));

    FeatureConfig feature_config;
    const EnvModel env_model = fit_env_model(
        fx.series, fx.graph, feature_config,
        DayWindow{panel_window.first_day, panel_window.n_days}, 1);

    std::vector<IsoWeek> weeks;
    for (int y = truth.first_year; y <= last_year; ++y)
        for (int w = 1; w <= weeks_in_iso_year(y); ++w) weeks.push_back({y, w});
    fx.features = assemble_features(fx.series, env_model, fx.graph, weeks, 1);
    if (fx.features.n_rows() != R * static_cast<int>(weeks.size()))
        throw NumericError("synthetic generator lost feature rows");

    fx.phi_true.assign(fx.features.n_rows(), 1.0);
    for (const auto& [feature, coef] : truth.planted) {
        const int col = fx.features.column_index(feature);
        for (int i = 0; i < fx.features.n_rows(); ++i)
            fx.phi_true[i] *= std::exp(coef * fx.features.values(i, col));
    }

    // Populations drift mildly; deaths follow the planted intensity.
    for (int r = 0; r < R; ++r) {
        Rng rng = stream_rng(truth.seed, "population", static_cast<std::uint64_t>(r));
        double pop = truth.base_population * (0.9 + 0.2 * rng.next_unit());
        for (int y = truth.first_year; y <= last_year + 1; ++y) {
            fx.population[r][y] = std::round(pop);
            pop *= 1.0 + 0.01 * rng.next_normal();
        }
    }

    fx.panel.weeks = weeks;
    fx.panel.deaths.assign(R, std::vector<long>(weeks.size(), 0));
    fx.panel.exposure.assign(R, std::vector<double>(weeks.size(), 0));
    std::map<std::pair<int, IsoWeek>, int> feature_row;
    for (int i = 0; i < fx.features.n_rows(); ++i)
        feature_row[{fx.features.region[i], fx.features.week[i]}] = i;
    for (int r = 0; r < R; ++r) {
        Rng rng = stream_rng(truth.seed, "deaths", static_cast<std::uint64_t>(r));
        for (std::size_t wi = 0; wi < weeks.size(); ++wi) {
            const IsoWeek w = weeks[wi];
            fx.panel.exposure[r][wi] =
                weekly_exposure(fx.population[r][w.year], fx.population[r][w.year + 1]);
            const auto z = design_vector(w.year - truth.first_year, w.week);
            const Eigen::Matrix<double, kBaselineCoefs, 1> b = fx.beta.row(r);
            const double phi = fx.phi_true[static_cast<std::size_t>(
                feature_row.at({r, w}))];
            const double mu = fx.panel.exposure[r][wi] * std::exp(z.dot(b)) * phi;
            fx.panel.deaths[r][wi] = rng.next_poisson(mu);
        }
    }
    return fx;
}

// ---------------------------------------------------------------------------
// File emission in the declared input formats.

inline void write_fixture_files(const SyntheticFixture& fx, const SyntheticTruth& truth,
                                const std::string& dir) {
    std::filesystem::create_directories(dir);
    const auto path = [&](const char* name) { return dir + "/" + name; };

    {
        CsvWriter w(path("deaths.csv"), {"region", "iso_year", "iso_week", "deaths"});
        for (int r = 0; r < fx.panel.n_regions(); ++r)
            for (int wi = 0; wi < fx.panel.n_weeks(); ++wi) {
                w.field(fx.graph.regions[r]);
                w.field(fx.panel.weeks[wi].year);
                w.field(fx.panel.weeks[wi].week);
                w.field(fx.panel.deaths[r][wi]);
                w.end_row();
            }
    }
    {
        CsvWriter w(path("population.csv"), {"region", "year", "pop65plus"});
        for (const auto& [r, by_year] : fx.population)
            for (const auto& [year, count] : by_year) {
                w.field(fx.graph.regions[static_cast<std::size_t>(r)]);
                w.field(year);
                w.field(count);
                w.end_row();
            }
    }
    {
        CsvWriter w(path("adjacency.csv"), {"region_a", "region_b"});
        for (int a = 0; a < fx.graph.size(); ++a)
            for (const int b : fx.graph.neighbors[a])
                if (b > a) {
                    w.field(fx.graph.regions[a]);
                    w.field(fx.graph.regions[b]);
                    w.end_row();
                }
    }
    {
        CsvWriter w(path("centroids.csv"), {"region", "lon", "lat"});
        for (int r = 0; r < fx.graph.size(); ++r) {
            w.field(fx.graph.regions[r]);
            w.field(fx.graph.centroids[r][0]);
            w.field(fx.graph.centroids[r][1]);
            w.end_row();
        }
    }
    {
        CsvWriter w(path("pop_grid.csv"), {"lon", "lat", "population"});
        for (const auto& cell : fx.pop_grid) {
            w.field(cell.point.lon);
            w.field(cell.point.lat);
            w.field(cell.population);
            w.end_row();
        }
    }
    {
        CsvWriter w(path("mapping.csv"), {"lon", "lat", "region"});
        for (const auto& [point, region] : fx.mapping) {
            w.field(point.first);
            w.field(point.second);
            w.field(region);
            w.end_row();
        }
    }
    {
        CsvWriter daily(path("grid_daily.csv"), {"factor", "date", "lon", "lat", "value"});
        std::unique_ptr<CsvWriter> hourly;
        for (const auto& [name, field] : fx.fields) {
            for (std::size_t g = 0; g < field.grid.size(); ++g)
                for (int d = 0; d < field.n_days; ++d) {
                    const std::string date =
                        format_date(date_from_serial(field.first_day + d));
                    if (field.hourly) {
                        if (!hourly)
                            hourly = std::make_unique<CsvWriter>(
                                path("grid_hourly.csv"),
                                std::vector<std::string>{"factor", "date", "hour", "lon",
                                                         "lat", "value"});
                        for (int h = 0; h < 24; ++h) {
                            hourly->field(name);
                            hourly->field(date);
                            hourly->field(h);
                            hourly->field(field.grid[g].lon);
                            hourly->field(field.grid[g].lat);
                            hourly->field(field.values[g][static_cast<std::size_t>(d) * 24 + h]);
                            hourly->end_row();
                        }
                    } else {
                        daily.field(name);
                        daily.field(date);
                        daily.field(field.grid[g].lon);
                        daily.field(field.grid[g].lat);
                        daily.field(field.values[g][d]);
                        daily.end_row();
                    }
                }
        }
        if (!hourly && truth.hourly_pollutants) {
            // Keep the declared file present even if empty of factors.
            CsvWriter w(path("grid_hourly.csv"),
                        {"factor", "date", "hour", "lon", "lat", "value"});
        }
    }
    {
        CsvWriter w(path("truth_multipliers.csv"),
                    {"region", "iso_year", "iso_week", "phi_true"});
        for (int i = 0; i < fx.features.n_rows(); ++i) {
            w.field(fx.graph.regions[fx.features.region[i]]);
            w.field(fx.features.week[i].year);
            w.field(fx.features.week[i].week);
            w.field(fx.phi_true[static_cast<std::size_t>(i)]);
            w.end_row();
        }
    }
}

}  // namespace mortenv
