#pragma once

// Gridded environmental fields and their population-weighted aggregation to
// region-level daily series. Hourly fields are first collapsed into daily
// minimum / average / maximum at each grid point, then spatially averaged
// with weights proportional to the population attributed to each point.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mortenv/calendar.hpp"
#include "mortenv/csv.hpp"
#include "mortenv/errors.hpp"
#include "mortenv/panel.hpp"

namespace mortenv {

struct GridPoint {
    double lon = 0;
    double lat = 0;

    auto operator<=>(const GridPoint&) const = default;
};

inline double squared_distance(const GridPoint& a, const GridPoint& b) {
    const double dx = a.lon - b.lon;
    const double dy = a.lat - b.lat;
    return dx * dx + dy * dy;
}

struct GriddedField {
    std::string factor;
    bool hourly = false;
    std::vector<GridPoint> grid;  // sorted by (lon, lat); index order is the tie-break order
    std::int64_t first_day = 0;   // serial day of the first covered date
    int n_days = 0;
    // Daily fields: values[point][day]. Hourly fields: values[point][day * 24 + hour].
    std::vector<std::vector<double>> values;
};

struct DailyStats {
    double min = 0;
    double avg = 0;
    double max = 0;
};

inline DailyStats daily_stats_from_hourly(std::span<const double> hours) {
    if (hours.size() != 24)
        throw ValidationError("daily aggregation needs exactly 24 hourly values, got " +
                              std::to_string(hours.size()));
    DailyStats s{hours[0], 0.0, hours[0]};
    for (const double v : hours) {
        if (!std::isfinite(v))
            throw ValidationError("non-finite hourly value in daily aggregation");
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
        s.avg += v;
    }
    s.avg /= 24.0;
    return s;
}

struct RegionWeights {
    std::vector<GridPoint> grid;  // snapshot of the feature grid the weights refer to
    std::vector<std::vector<std::pair<int, double>>> by_region;  // (point index, weight)
};

struct PopulationCell {
    GridPoint point;
    double population = 0;
};

// point -> region name, exact coordinate match (the mapping file and the
// grids are expected to quote coordinates identically).
using PointRegionMap = std::map<std::pair<double, double>, std::string>;

// Population share attributed to each feature-grid point of a region: every
// population cell goes to the Euclidean-nearest feature point of its own
// region (ties to the lowest grid index), then shares are normalized by the
// region total. Regions without feature points fall back to the single grid
// point nearest their centroid, with weight one.
inline RegionWeights build_population_weights(const std::vector<PopulationCell>& pop_grid,
                                              const std::vector<GridPoint>& feature_grid,
                                              const PointRegionMap& point_to_region,
                                              const RegionGraph& graph) {
    const int n_regions = graph.size();
    RegionWeights out;
    out.grid = feature_grid;
    out.by_region.assign(n_regions, {});

    std::vector<std::vector<int>> feature_points_in(n_regions);
    for (std::size_t g = 0; g < feature_grid.size(); ++g) {
        const auto it = point_to_region.find({feature_grid[g].lon, feature_grid[g].lat});
        if (it == point_to_region.end())
            throw ValidationError("feature grid point (" +
                                  format_double(feature_grid[g].lon) + ", " +
                                  format_double(feature_grid[g].lat) +
                                  ") missing from the point-to-region mapping");
        const int r = graph.find(it->second);
        if (r < 0) continue;  // point belongs to a region outside the graph
        feature_points_in[r].push_back(static_cast<int>(g));
    }

    std::vector<std::map<int, double>> assigned(n_regions);
    std::vector<double> region_total(n_regions, 0.0);
    for (std::size_t i = 0; i < pop_grid.size(); ++i) {
        const auto& cell = pop_grid[i];
        if (cell.population < 0)
            throw ValidationError("negative population at grid cell " + std::to_string(i));
        const auto it = point_to_region.find({cell.point.lon, cell.point.lat});
        if (it == point_to_region.end())
            throw ValidationError("population grid point (" + format_double(cell.point.lon) +
                                  ", " + format_double(cell.point.lat) +
                                  ") missing from the point-to-region mapping");
        const int r = graph.find(it->second);
        if (r < 0) continue;
        if (feature_points_in[r].empty()) continue;  // handled by the fallback below
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (const int g : feature_points_in[r]) {
            const double d = squared_distance(cell.point, feature_grid[g]);
            // Strict < keeps the lowest grid index on ties.
            if (d < best_d) {
                best_d = d;
                best = g;
            }
        }
        assigned[r][best] += cell.population;
        region_total[r] += cell.population;
    }

    for (int r = 0; r < n_regions; ++r) {
        if (feature_points_in[r].empty()) {
            // No feature grid point inside the region: use the point nearest
            // the region centroid, full weight.
            if (feature_grid.empty())
                throw ValidationError("empty feature grid");
            const GridPoint centroid{graph.centroids[r][0], graph.centroids[r][1]};
            int best = 0;
            double best_d = squared_distance(centroid, feature_grid[0]);
            for (std::size_t g = 1; g < feature_grid.size(); ++g) {
                const double d = squared_distance(centroid, feature_grid[g]);
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<int>(g);
                }
            }
            out.by_region[r] = {{best, 1.0}};
            continue;
        }
        if (region_total[r] <= 0)
            throw ValidationError("region " + graph.regions[r] +
                                  " has zero total population on the population grid");
        for (const auto& [g, pop] : assigned[r])
            out.by_region[r].push_back({g, pop / region_total[r]});
    }
    return out;
}

struct RegionDailySeries {
    std::string factor;
    bool hourly_sourced = false;
    std::int64_t first_day = 0;
    int n_days = 0;
    std::vector<std::vector<DailyStats>> values;  // [region][day]

    const DailyStats& at(int region, std::int64_t serial) const {
        const std::int64_t idx = serial - first_day;
        if (idx < 0 || idx >= n_days)
            throw ValidationError("date outside the coverage of factor '" + factor + "'");
        return values[region][static_cast<std::size_t>(idx)];
    }
};

// Population-weighted aggregation of a field to region level. Hourly fields
// are reduced to per-point daily statistics first; each statistic is then
// averaged with the region's weights in fixed grid-index order.
inline RegionDailySeries region_daily_series(const GriddedField& field,
                                             const RegionWeights& weights) {
    if (field.grid != weights.grid)
        throw ValidationError("weights were not built against the grid of factor '" +
                              field.factor + "'");
    const int n_regions = static_cast<int>(weights.by_region.size());

    // Per-point daily statistics.
    std::vector<std::vector<DailyStats>> point_daily(field.grid.size());
    for (std::size_t g = 0; g < field.grid.size(); ++g) {
        point_daily[g].resize(field.n_days);
        for (int d = 0; d < field.n_days; ++d) {
            if (field.hourly) {
                point_daily[g][d] = daily_stats_from_hourly(
                    std::span<const double>(field.values[g]).subspan(
                        static_cast<std::size_t>(d) * 24, 24));
            } else {
                const double v = field.values[g][d];
                point_daily[g][d] = DailyStats{v, v, v};
            }
        }
    }

    RegionDailySeries out;
    out.factor = field.factor;
    out.hourly_sourced = field.hourly;
    out.first_day = field.first_day;
    out.n_days = field.n_days;
    out.values.assign(n_regions, std::vector<DailyStats>(field.n_days));
    for (int r = 0; r < n_regions; ++r) {
        auto entries = weights.by_region[r];
        std::sort(entries.begin(), entries.end());  // fixed reduction order
        for (int d = 0; d < field.n_days; ++d) {
            DailyStats acc{0, 0, 0};
            for (const auto& [g, w] : entries) {
                acc.min += w * point_daily[g][d].min;
                acc.avg += w * point_daily[g][d].avg;
                acc.max += w * point_daily[g][d].max;
            }
            out.values[r][d] = acc;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// File readers for the declared grid formats.

// grid_daily.csv: factor,date,lon,lat,value  (one file may mix factors)
// grid_hourly.csv: factor,date,hour,lon,lat,value
inline std::map<std::string, GriddedField> load_gridded_fields(const std::string& path,
                                                               bool hourly) {
    const CsvTable t = read_csv(path);
    const int c_factor = t.column("factor");
    const int c_date = t.column("date");
    const int c_hour = hourly ? t.column("hour") : -1;
    const int c_lon = t.column("lon");
    const int c_lat = t.column("lat");
    const int c_value = t.column("value");

    struct Raw {
        std::map<GridPoint, std::map<std::int64_t, double>> cells;  // point -> slot -> value
        std::int64_t min_day = 0, max_day = 0;
        bool any = false;
    };
    std::map<std::string, Raw> by_factor;

    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto line = std::to_string(t.file_line(i));
        Raw& raw = by_factor[t.rows[i][c_factor]];
        const Date date = parse_date(t.rows[i][c_date]);
        const std::int64_t day = serial_day(date);
        std::int64_t slot = day;
        if (hourly) {
            const long h = parse_long(t, i, c_hour);
            if (h < 0 || h > 23)
                throw ValidationError(path + " line " + line + ": hour out of range");
            slot = day * 24 + h;
        }
        const GridPoint p{parse_double(t, i, c_lon), parse_double(t, i, c_lat)};
        const double v = parse_double(t, i, c_value);
        if (!std::isfinite(v))
            throw ValidationError(path + " line " + line + ": non-finite value");
        if (!raw.cells[p].emplace(slot, v).second)
            throw ValidationError(path + " line " + line + ": duplicate measurement");
        if (!raw.any || day < raw.min_day) raw.min_day = day;
        if (!raw.any || day > raw.max_day) raw.max_day = day;
        raw.any = true;
    }

    std::map<std::string, GriddedField> out;
    for (auto& [factor, raw] : by_factor) {
        GriddedField field;
        field.factor = factor;
        field.hourly = hourly;
        field.first_day = raw.min_day;
        field.n_days = static_cast<int>(raw.max_day - raw.min_day + 1);
        for (const auto& [p, _] : raw.cells) field.grid.push_back(p);
        const int slots_per_day = hourly ? 24 : 1;
        field.values.assign(field.grid.size(),
                            std::vector<double>(static_cast<std::size_t>(field.n_days) *
                                                slots_per_day));
        for (std::size_t g = 0; g < field.grid.size(); ++g) {
            const auto& cells = raw.cells[field.grid[g]];
            for (int d = 0; d < field.n_days; ++d) {
                for (int s = 0; s < slots_per_day; ++s) {
                    const std::int64_t slot =
                        hourly ? (raw.min_day + d) * 24 + s : raw.min_day + d;
                    const auto it = cells.find(slot);
                    if (it == cells.end())
                        throw ValidationError(
                            path + ": factor '" + factor + "' has a gap at (" +
                            format_double(field.grid[g].lon) + ", " +
                            format_double(field.grid[g].lat) + ") on " +
                            format_date(date_from_serial(raw.min_day + d)) +
                            (hourly ? " hour " + std::to_string(s) : std::string{}));
                    field.values[g][static_cast<std::size_t>(d) * slots_per_day + s] =
                        it->second;
                }
            }
        }
        out.emplace(factor, std::move(field));
    }
    return out;
}

// pop_grid.csv: lon,lat,population
inline std::vector<PopulationCell> load_population_grid(const std::string& path) {
    const CsvTable t = read_csv(path);
    const int c_lon = t.column("lon");
    const int c_lat = t.column("lat");
    const int c_pop = t.column("population");
    std::vector<PopulationCell> out;
    out.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        out.push_back({{parse_double(t, i, c_lon), parse_double(t, i, c_lat)},
                       parse_double(t, i, c_pop)});
    return out;
}

// mapping.csv: lon,lat,region — must cover both the feature and the
// population grids (polygon containment is out of scope).
inline PointRegionMap load_point_region_map(const std::string& path) {
    const CsvTable t = read_csv(path);
    const int c_lon = t.column("lon");
    const int c_lat = t.column("lat");
    const int c_region = t.column("region");
    PointRegionMap out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto key = std::make_pair(parse_double(t, i, c_lon), parse_double(t, i, c_lat));
        const auto [it, inserted] = out.emplace(key, t.rows[i][c_region]);
        if (!inserted && it->second != t.rows[i][c_region])
            throw ValidationError(path + " line " + std::to_string(t.file_line(i)) +
                                  ": point mapped to two regions");
    }
    return out;
}

}  // namespace mortenv
