#pragma once

// Synthetic panels drawn from a known Serfling-type intensity, used by the
// baseline and analysis tests.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mortenv/baseline.hpp"
#include "mortenv/panel.hpp"
#include "mortenv/rng.hpp"

namespace testsupport {

inline mortenv::RegionGraph chain_graph(int n) {
    mortenv::RegionGraph g;
    for (int r = 0; r < n; ++r) {
        g.regions.push_back("R" + std::to_string(r));
        g.centroids.push_back({-2.0 + 0.8 * r, 40.0 + 0.4 * r});
        g.neighbors.emplace_back();
    }
    for (int r = 0; r + 1 < n; ++r) {
        g.neighbors[r].push_back(r + 1);
        g.neighbors[r + 1].push_back(r);
    }
    return g;
}

// deaths ~ Poisson(E * exp(z'beta)), exposure constant per region.
inline mortenv::WeeklyPanel draw_panel(const mortenv::RegionGraph& graph,
                                       const Eigen::MatrixXd& beta, int first_year,
                                       int n_years, double exposure, std::uint64_t seed) {
    mortenv::WeeklyPanel panel;
    for (int y = first_year; y < first_year + n_years; ++y)
        for (int w = 1; w <= mortenv::weeks_in_iso_year(y); ++w)
            panel.weeks.push_back({y, w});
    const int R = graph.size();
    panel.deaths.assign(R, std::vector<long>(panel.weeks.size(), 0));
    panel.exposure.assign(R, std::vector<double>(panel.weeks.size(), exposure));
    for (int r = 0; r < R; ++r) {
        mortenv::Rng rng = mortenv::stream_rng(seed, "panel", static_cast<std::uint64_t>(r));
        const Eigen::Matrix<double, 6, 1> b = beta.row(r);
        for (std::size_t wi = 0; wi < panel.weeks.size(); ++wi) {
            const auto z = mortenv::design_vector(panel.weeks[wi].year - first_year,
                                                  panel.weeks[wi].week);
            const double mu = exposure * std::exp(z.dot(b));
            panel.deaths[r][wi] = rng.next_poisson(mu);
        }
    }
    return panel;
}

inline Eigen::MatrixXd serfling_beta(int n_regions, double spread, std::uint64_t seed) {
    Eigen::MatrixXd beta(n_regions, 6);
    mortenv::Rng rng = mortenv::stream_rng(seed, "beta");
    for (int r = 0; r < n_regions; ++r) {
        beta(r, 0) = -6.0 + spread * rng.next_normal();
        beta(r, 1) = 0.01 + 0.5 * spread * rng.next_normal();
        beta(r, 2) = 0.05 + spread * rng.next_normal();
        beta(r, 3) = 0.25 + spread * rng.next_normal();
        beta(r, 4) = 0.02 + 0.5 * spread * rng.next_normal();
        beta(r, 5) = -0.05 + 0.5 * spread * rng.next_normal();
    }
    return beta;
}

}  // namespace testsupport
