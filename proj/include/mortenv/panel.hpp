#pragma once

// Weekly mortality panel: region graph with centroids and symmetric
// neighbor sets, rectangular (region x ISO week) death counts, and the
// person-week exposure built from January-1 population counts.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mortenv/calendar.hpp"
#include "mortenv/csv.hpp"
#include "mortenv/errors.hpp"

namespace mortenv {

// Average number of ISO weeks per year; the alternative is the exact
// 52/53 count of the year under consideration.
constexpr double kAverageWeeksPerYear = 52.18;

struct RegionGraph {
    std::vector<std::string> regions;             // sorted, unique
    std::vector<std::vector<int>> neighbors;      // symmetric, irreflexive
    std::vector<std::array<double, 2>> centroids; // {lon, lat}

    int size() const { return static_cast<int>(regions.size()); }

    int find(const std::string& name) const {
        const auto it = std::lower_bound(regions.begin(), regions.end(), name);
        if (it == regions.end() || *it != name) return -1;
        return static_cast<int>(it - regions.begin());
    }

    int require(const std::string& name) const {
        const int idx = find(name);
        if (idx < 0) throw ValidationError("unknown region '" + name + "'");
        return idx;
    }
};

struct WeeklyPanel {
    std::vector<IsoWeek> weeks;                // chronological
    std::vector<std::vector<long>> deaths;     // [region][week]
    std::vector<std::vector<double>> exposure; // [region][week]

    int n_regions() const { return static_cast<int>(deaths.size()); }
    int n_weeks() const { return static_cast<int>(weeks.size()); }

    int week_index(const IsoWeek& w) const {
        const auto it = std::lower_bound(weeks.begin(), weeks.end(), w);
        if (it == weeks.end() || *it != w) return -1;
        return static_cast<int>(it - weeks.begin());
    }

    std::vector<int> years() const {
        std::vector<int> ys;
        for (const auto& w : weeks)
            if (ys.empty() || ys.back() != w.year) ys.push_back(w.year);
        return ys;
    }
};

// Weekly exposure from two consecutive January-1 population counts,
// constant across the weeks of the year: (P_t + P_{t+1}) / (2 * 52.18).
inline double weekly_exposure(double pop_year, double pop_next_year,
                              double weeks_per_year = kAverageWeeksPerYear) {
    if (pop_year < 0 || pop_next_year < 0)
        throw ValidationError("population counts must be non-negative");
    return (pop_year + pop_next_year) / (2.0 * weeks_per_year);
}

// Weekly mortality rate under a force of mortality held constant within
// the week: q = 1 - exp(-mu).
inline double rate_from_mu(double mu) {
    if (mu < 0) throw ValidationError("force of mortality must be non-negative");
    return -std::expm1(-mu);
}

namespace detail {

inline std::vector<IsoWeek> weeks_for_years(int first_year, int last_year) {
    std::vector<IsoWeek> weeks;
    for (int y = first_year; y <= last_year; ++y)
        for (int w = 1; w <= weeks_in_iso_year(y); ++w) weeks.push_back({y, w});
    return weeks;
}

}  // namespace detail

struct PanelFiles {
    std::string deaths;
    std::string population;
    std::string adjacency;
    std::string centroids;
};

struct LoadedPanel {
    RegionGraph graph;
    WeeklyPanel panel;
};

// Reads and cross-validates the four input files. The region set is given
// by centroids.csv; adjacency is closed symmetrically; exposures come from
// weekly_exposure and require population counts through last_year + 1.
inline LoadedPanel load_panel(const PanelFiles& files,
                              double weeks_per_year = kAverageWeeksPerYear,
                              bool exact_week_counts = false) {
    LoadedPanel out;
    RegionGraph& graph = out.graph;

    const CsvTable centroids = read_csv(files.centroids);
    {
        const int c_region = centroids.column("region");
        const int c_lon = centroids.column("lon");
        const int c_lat = centroids.column("lat");
        std::map<std::string, std::array<double, 2>> seen;
        for (std::size_t i = 0; i < centroids.rows.size(); ++i) {
            const std::string& name = centroids.rows[i][c_region];
            if (seen.count(name))
                throw ValidationError(files.centroids + " line " +
                                      std::to_string(centroids.file_line(i)) +
                                      ": duplicate region '" + name + "'");
            seen[name] = {parse_double(centroids, i, c_lon),
                          parse_double(centroids, i, c_lat)};
        }
        if (seen.empty()) throw ValidationError(files.centroids + ": no regions");
        for (const auto& [name, lonlat] : seen) {
            graph.regions.push_back(name);
            graph.centroids.push_back(lonlat);
        }
    }
    const int n_regions = graph.size();

    graph.neighbors.assign(n_regions, {});
    {
        const CsvTable adjacency = read_csv(files.adjacency);
        const int c_a = adjacency.column("region_a");
        const int c_b = adjacency.column("region_b");
        std::set<std::pair<int, int>> edges;
        for (std::size_t i = 0; i < adjacency.rows.size(); ++i) {
            const auto line = std::to_string(adjacency.file_line(i));
            const int a = graph.find(adjacency.rows[i][c_a]);
            const int b = graph.find(adjacency.rows[i][c_b]);
            if (a < 0)
                throw ValidationError(files.adjacency + " line " + line +
                                      ": unknown region '" + adjacency.rows[i][c_a] + "'");
            if (b < 0)
                throw ValidationError(files.adjacency + " line " + line +
                                      ": unknown region '" + adjacency.rows[i][c_b] + "'");
            if (a == b)
                throw ValidationError(files.adjacency + " line " + line +
                                      ": region '" + adjacency.rows[i][c_a] +
                                      "' listed as its own neighbor");
            // Symmetric closure: one direction per row is enough.
            edges.insert({std::min(a, b), std::max(a, b)});
        }
        for (const auto& [a, b] : edges) {
            graph.neighbors[a].push_back(b);
            graph.neighbors[b].push_back(a);
        }
        for (auto& nb : graph.neighbors) std::sort(nb.begin(), nb.end());
    }

    const CsvTable deaths = read_csv(files.deaths);
    const int c_region = deaths.column("region");
    const int c_year = deaths.column("iso_year");
    const int c_week = deaths.column("iso_week");
    const int c_deaths = deaths.column("deaths");

    int first_year = 0, last_year = 0;
    {
        bool any = false;
        for (std::size_t i = 0; i < deaths.rows.size(); ++i) {
            const int y = static_cast<int>(parse_long(deaths, i, c_year));
            if (!any || y < first_year) first_year = y;
            if (!any || y > last_year) last_year = y;
            any = true;
        }
        if (!any) throw ValidationError(files.deaths + ": no records");
    }

    WeeklyPanel& panel = out.panel;
    panel.weeks = detail::weeks_for_years(first_year, last_year);
    const int n_weeks = panel.n_weeks();
    panel.deaths.assign(n_regions, std::vector<long>(n_weeks, -1));
    panel.exposure.assign(n_regions, std::vector<double>(n_weeks, 0.0));

    for (std::size_t i = 0; i < deaths.rows.size(); ++i) {
        const auto line = std::to_string(deaths.file_line(i));
        const int r = graph.find(deaths.rows[i][c_region]);
        if (r < 0)
            throw ValidationError(files.deaths + " line " + line +
                                  ": unknown region '" + deaths.rows[i][c_region] + "'");
        const int y = static_cast<int>(parse_long(deaths, i, c_year));
        const int w = static_cast<int>(parse_long(deaths, i, c_week));
        if (w < 1 || w > weeks_in_iso_year(y))
            throw ValidationError(files.deaths + " line " + line + ": iso_week " +
                                  std::to_string(w) + " out of range for year " +
                                  std::to_string(y));
        const int wi = panel.week_index({y, w});
        const long d = parse_long(deaths, i, c_deaths);
        if (d < 0)
            throw ValidationError(files.deaths + " line " + line +
                                  ": negative death count");
        if (panel.deaths[r][wi] >= 0)
            throw ValidationError(files.deaths + " line " + line +
                                  ": duplicate record for (" + deaths.rows[i][c_region] +
                                  ", " + std::to_string(y) + ", " + std::to_string(w) + ")");
        panel.deaths[r][wi] = d;
    }

    // Rectangularity: the downstream solvers assume a complete design.
    {
        std::string missing;
        int n_missing = 0;
        for (int r = 0; r < n_regions; ++r)
            for (int wi = 0; wi < n_weeks; ++wi)
                if (panel.deaths[r][wi] < 0) {
                    ++n_missing;
                    if (n_missing <= 5)
                        missing += " (" + graph.regions[r] + ", " +
                                   std::to_string(panel.weeks[wi].year) + ", " +
                                   std::to_string(panel.weeks[wi].week) + ")";
                }
        if (n_missing > 0)
            throw ValidationError(files.deaths + ": panel not rectangular, " +
                                  std::to_string(n_missing) + " missing cell(s):" +
                                  missing + (n_missing > 5 ? " ..." : ""));
    }

    {
        const CsvTable population = read_csv(files.population);
        const int p_region = population.column("region");
        const int p_year = population.column("year");
        const int p_pop = population.column("pop65plus");
        std::map<std::pair<int, int>, double> pop;  // (region, year) -> count
        for (std::size_t i = 0; i < population.rows.size(); ++i) {
            const auto line = std::to_string(population.file_line(i));
            const int r = graph.find(population.rows[i][p_region]);
            if (r < 0)
                throw ValidationError(files.population + " line " + line +
                                      ": unknown region '" + population.rows[i][p_region] +
                                      "'");
            const int y = static_cast<int>(parse_long(population, i, p_year));
            const double p = parse_double(population, i, p_pop);
            if (p < 0)
                throw ValidationError(files.population + " line " + line +
                                      ": negative population");
            if (!pop.emplace(std::make_pair(r, y), p).second)
                throw ValidationError(files.population + " line " + line +
                                      ": duplicate record for (" +
                                      population.rows[i][p_region] + ", " +
                                      std::to_string(y) + ")");
        }
        for (int r = 0; r < n_regions; ++r) {
            for (int y = first_year; y <= last_year + 1; ++y)
                if (!pop.count({r, y}))
                    throw ValidationError(files.population + ": missing population for (" +
                                          graph.regions[r] + ", " + std::to_string(y) +
                                          "); years " + std::to_string(first_year) +
                                          ".." + std::to_string(last_year + 1) +
                                          " are required");
            for (int wi = 0; wi < n_weeks; ++wi) {
                const int y = panel.weeks[wi].year;
                const double wpy =
                    exact_week_counts ? static_cast<double>(weeks_in_iso_year(y))
                                      : weeks_per_year;
                panel.exposure[r][wi] =
                    weekly_exposure(pop.at({r, y}), pop.at({r, y + 1}), wpy);
                if (panel.deaths[r][wi] > 0 && panel.exposure[r][wi] <= 0)
                    throw ValidationError("region " + graph.regions[r] + ", week (" +
                                          std::to_string(y) + ", " +
                                          std::to_string(panel.weeks[wi].week) +
                                          "): deaths recorded with zero exposure");
            }
        }
    }

    return out;
}

}  // namespace mortenv
