#pragma once

// Spatially smoothed Serfling baseline: per-region Poisson GLM with a
// log-linear year trend and two Fourier pairs, fitted jointly across
// regions by penalized IRLS. The quadratic penalty sums squared
// differences of each coefficient between neighboring regions; smoothing
// parameters are selected by UBRE over a log-spaced grid with
// coordinate-wise descent.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <limits>
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

namespace mortenv {

constexpr int kBaselineCoefs = 6;

// (1, t, sin(2 pi w / 52.18), cos(2 pi w / 52.18), sin(2 pi w / 26.09),
//  cos(2 pi w / 26.09)); the half period is always weeks_per_year / 2.
inline Eigen::Matrix<double, kBaselineCoefs, 1> design_vector(
    double year_index, int week, double weeks_per_year = kAverageWeeksPerYear) {
    const double base = 2.0 * std::numbers::pi * week / weeks_per_year;
    Eigen::Matrix<double, kBaselineCoefs, 1> z;
    z << 1.0, year_index, std::sin(base), std::cos(base), std::sin(2.0 * base),
        std::cos(2.0 * base);
    return z;
}

// ---------------------------------------------------------------------------
// Penalty matrix: s_ii = |N_i|, s_ij = -1 for neighbors, 0 elsewhere.

struct PenaltyMatrix {
    int n = 0;
    std::vector<int> entries;  // row-major

    int at(int i, int j) const { return entries[static_cast<std::size_t>(i) * n + j]; }
};

inline PenaltyMatrix build_penalty_matrix(const RegionGraph& graph) {
    PenaltyMatrix S;
    S.n = graph.size();
    S.entries.assign(static_cast<std::size_t>(S.n) * S.n, 0);
    for (int i = 0; i < S.n; ++i) {
        S.entries[static_cast<std::size_t>(i) * S.n + i] =
            static_cast<int>(graph.neighbors[i].size());
        for (const int j : graph.neighbors[i])
            S.entries[static_cast<std::size_t>(i) * S.n + j] = -1;
    }
    return S;
}

// beta' S beta == sum over unordered neighbor pairs of (beta_i - beta_j)^2.
inline double quadratic_penalty(std::span<const double> beta, const PenaltyMatrix& S) {
    if (static_cast<int>(beta.size()) != S.n)
        throw ValidationError("quadratic_penalty: vector length " +
                              std::to_string(beta.size()) + " does not match " +
                              std::to_string(S.n) + " regions");
    double acc = 0;
    for (int i = 0; i < S.n; ++i) {
        double row = 0;
        for (int j = 0; j < S.n; ++j) row += S.at(i, j) * beta[j];
        acc += beta[i] * row;
    }
    return acc;
}

// ---------------------------------------------------------------------------

inline double ubre_score(double deviance, long n, double edf) {
    if (n <= 0) throw ValidationError("ubre_score: n must be positive");
    const double nn = static_cast<double>(n);
    return deviance / nn - 1.0 + 2.0 * edf / nn;
}

struct UbreEval {
    std::array<double, kBaselineCoefs> lambdas{};
    double ubre = 0;
    double deviance = 0;
    double edf = 0;
};

struct BaselineFit {
    std::vector<std::string> regions;
    Eigen::MatrixXd beta;  // regions x 6
    std::array<double, kBaselineCoefs> lambdas{};
    double deviance = 0;
    double edf = 0;
    long n_cells = 0;
    int iterations = 0;
    std::vector<double> deviance_trace;
    std::vector<double> objective_trace;  // deviance + 2 * penalty
    std::vector<UbreEval> ubre_trace;
    int first_year = 0;
    double weeks_per_year = kAverageWeeksPerYear;
    bool exact_week_counts = false;
    std::set<int> source_years;
};

struct GlmOptions {
    double tolerance = 1e-8;
    int max_iterations = 100;
    double weeks_per_year = kAverageWeeksPerYear;
    bool exact_week_counts = false;
};

namespace detail {

struct GlmWorkspace {
    const WeeklyPanel* panel = nullptr;
    const PenaltyMatrix* S = nullptr;
    int n_regions = 0;
    int first_year = 0;
    std::vector<Eigen::Matrix<double, kBaselineCoefs, 1>> z;  // per week
    long n_cells = 0;
};

inline GlmWorkspace make_workspace(const WeeklyPanel& panel, const PenaltyMatrix& S,
                                   const GlmOptions& opt) {
    GlmWorkspace ws;
    ws.panel = &panel;
    ws.S = &S;
    ws.n_regions = panel.n_regions();
    ws.first_year = panel.weeks.front().year;
    for (const IsoWeek& w : panel.weeks) {
        const double wpy = opt.exact_week_counts
                               ? static_cast<double>(weeks_in_iso_year(w.year))
                               : opt.weeks_per_year;
        ws.z.push_back(design_vector(w.year - ws.first_year, w.week, wpy));
    }
    ws.n_cells = static_cast<long>(ws.n_regions) * panel.n_weeks();
    for (int r = 0; r < ws.n_regions; ++r)
        for (int w = 0; w < panel.n_weeks(); ++w)
            if (panel.exposure[r][w] <= 0)
                throw ValidationError("zero-exposure cell at region index " +
                                      std::to_string(r) + ", week (" +
                                      std::to_string(panel.weeks[w].year) + ", " +
                                      std::to_string(panel.weeks[w].week) + ")");
    return ws;
}

inline double poisson_deviance_cells(const GlmWorkspace& ws, const Eigen::MatrixXd& beta,
                                     Eigen::MatrixXd* mu_out = nullptr) {
    const WeeklyPanel& panel = *ws.panel;
    double dev = 0;
    for (int r = 0; r < ws.n_regions; ++r) {
        const Eigen::Matrix<double, kBaselineCoefs, 1> b = beta.row(r);
        for (int w = 0; w < panel.n_weeks(); ++w) {
            const double mu = panel.exposure[r][w] * std::exp(ws.z[w].dot(b));
            if (mu_out) (*mu_out)(r, w) = mu;
            const double d = static_cast<double>(panel.deaths[r][w]);
            dev += (d > 0 ? d * std::log(d / mu) : 0.0) - (d - mu);
        }
    }
    return 2.0 * dev;
}

inline double penalty_value(const GlmWorkspace& ws, const Eigen::MatrixXd& beta,
                            const std::array<double, kBaselineCoefs>& lambdas) {
    double pen = 0;
    std::vector<double> column(ws.n_regions);
    for (int p = 0; p < kBaselineCoefs; ++p) {
        if (lambdas[p] == 0) continue;
        for (int r = 0; r < ws.n_regions; ++r) column[r] = beta(r, p);
        pen += lambdas[p] * quadratic_penalty(column, *ws.S);
    }
    return pen;
}

}  // namespace detail

// Penalized IRLS at a fixed smoothing-parameter vector. Minimizes
// -loglik + sum_p lambda_p beta_p' S beta_p; the recorded objective trace
// is deviance + 2*penalty (an affine transform of the objective).
inline BaselineFit fit_penalized_glm_at(const WeeklyPanel& panel, const RegionGraph& graph,
                                        const std::array<double, kBaselineCoefs>& lambdas,
                                        const GlmOptions& opt = {},
                                        const Eigen::MatrixXd* warm_start = nullptr) {
    for (const double l : lambdas)
        if (l < 0) throw ValidationError("smoothing parameters must be non-negative");
    const PenaltyMatrix S = build_penalty_matrix(graph);
    detail::GlmWorkspace ws = detail::make_workspace(panel, S, opt);
    const int R = ws.n_regions;
    const int W = panel.n_weeks();
    const int dim = R * kBaselineCoefs;

    BaselineFit fit;
    fit.regions = graph.regions;
    fit.lambdas = lambdas;
    fit.n_cells = ws.n_cells;
    fit.first_year = ws.first_year;
    fit.weeks_per_year = opt.weeks_per_year;
    fit.exact_week_counts = opt.exact_week_counts;
    for (const IsoWeek& w : panel.weeks) fit.source_years.insert(w.year);

    Eigen::MatrixXd beta(R, kBaselineCoefs);
    if (warm_start && warm_start->rows() == R && warm_start->cols() == kBaselineCoefs) {
        beta = *warm_start;
    } else {
        beta.setZero();
        for (int r = 0; r < R; ++r) {
            double deaths = 0, exposure = 0;
            for (int w = 0; w < W; ++w) {
                deaths += static_cast<double>(panel.deaths[r][w]);
                exposure += panel.exposure[r][w];
            }
            beta(r, 0) = std::log(std::max(deaths, 0.5) / exposure);
        }
    }

    // Penalty block of the Newton Hessian: 2 * lambda_p * S at coefficient p.
    Eigen::MatrixXd penalty_block = Eigen::MatrixXd::Zero(dim, dim);
    for (int p = 0; p < kBaselineCoefs; ++p)
        for (int i = 0; i < R; ++i)
            for (int j = 0; j < R; ++j)
                penalty_block(i * kBaselineCoefs + p, j * kBaselineCoefs + p) =
                    2.0 * lambdas[p] * S.at(i, j);

    Eigen::MatrixXd mu(R, W);
    double objective = detail::poisson_deviance_cells(ws, beta, &mu) +
                       2.0 * detail::penalty_value(ws, beta, lambdas);
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(dim, dim);  // X'WX at convergence

    for (int it = 1; it <= opt.max_iterations; ++it) {
        fit.iterations = it;

        Eigen::MatrixXd hessian = penalty_block;
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
        info.setZero();
        for (int r = 0; r < R; ++r) {
            Eigen::Matrix<double, kBaselineCoefs, kBaselineCoefs> A;
            A.setZero();
            Eigen::Matrix<double, kBaselineCoefs, 1> g;
            g.setZero();
            const Eigen::Matrix<double, kBaselineCoefs, 1> b = beta.row(r);
            for (int w = 0; w < W; ++w) {
                const double m = mu(r, w);
                const double xi = ws.z[w].dot(b);
                A += m * ws.z[w] * ws.z[w].transpose();
                g += (m * xi + static_cast<double>(panel.deaths[r][w]) - m) * ws.z[w];
            }
            info.block<kBaselineCoefs, kBaselineCoefs>(r * kBaselineCoefs,
                                                       r * kBaselineCoefs) = A;
            hessian.block<kBaselineCoefs, kBaselineCoefs>(r * kBaselineCoefs,
                                                          r * kBaselineCoefs) += A;
            rhs.segment<kBaselineCoefs>(r * kBaselineCoefs) = g;
        }

        const Eigen::VectorXd solution = hessian.ldlt().solve(rhs);
        Eigen::MatrixXd beta_new(R, kBaselineCoefs);
        for (int r = 0; r < R; ++r)
            beta_new.row(r) = solution.segment<kBaselineCoefs>(r * kBaselineCoefs);

        // Step halving on the penalized objective.
        double step = 1.0;
        Eigen::MatrixXd candidate;
        double cand_objective = std::numeric_limits<double>::infinity();
        Eigen::MatrixXd cand_mu(R, W);
        while (true) {
            candidate = beta + step * (beta_new - beta);
            cand_objective = detail::poisson_deviance_cells(ws, candidate, &cand_mu) +
                             2.0 * detail::penalty_value(ws, candidate, lambdas);
            if (std::isfinite(cand_objective) && cand_objective <= objective + 1e-12)
                break;
            step *= 0.5;
            if (step < 1e-10) break;
        }
        if (!std::isfinite(cand_objective)) {
            std::string log;
            for (const double d : fit.deviance_trace) log += " " + std::to_string(d);
            throw NumericError("penalized IRLS diverged at iteration " +
                               std::to_string(it) + "; deviance trace:" + log);
        }

        beta = candidate;
        mu = cand_mu;
        const double new_objective = cand_objective;
        const double deviance =
            new_objective - 2.0 * detail::penalty_value(ws, beta, lambdas);
        fit.deviance_trace.push_back(deviance);
        fit.objective_trace.push_back(new_objective);

        const double change = std::abs(objective - new_objective);
        objective = new_objective;
        if (change < opt.tolerance * (std::abs(new_objective) + 0.1)) break;
    }

    fit.beta = beta;
    fit.deviance = detail::poisson_deviance_cells(ws, beta, &mu);

    // Effective degrees of freedom: trace of (X'WX + 2P)^{-1} X'WX at the
    // converged weights.
    {
        Eigen::MatrixXd hessian = penalty_block;
        info.setZero();
        for (int r = 0; r < R; ++r) {
            Eigen::Matrix<double, kBaselineCoefs, kBaselineCoefs> A;
            A.setZero();
            for (int w = 0; w < W; ++w) A += mu(r, w) * ws.z[w] * ws.z[w].transpose();
            info.block<kBaselineCoefs, kBaselineCoefs>(r * kBaselineCoefs,
                                                       r * kBaselineCoefs) = A;
            hessian.block<kBaselineCoefs, kBaselineCoefs>(r * kBaselineCoefs,
                                                          r * kBaselineCoefs) += A;
        }
        fit.edf = hessian.ldlt().solve(info).trace();
    }
    return fit;
}

// ---------------------------------------------------------------------------
// UBRE-driven smoothing parameter selection.

struct LambdaSearch {
    std::vector<double> grid;  // shared candidate set for every coefficient
    int passes = 2;

    LambdaSearch() {
        for (int e = -4; e <= 8; ++e) grid.push_back(std::pow(10.0, e));
    }
};

inline BaselineFit fit_penalized_glm(const WeeklyPanel& panel, const RegionGraph& graph,
                                     const LambdaSearch& search = {},
                                     const GlmOptions& opt = {}) {
    if (search.grid.empty()) throw ValidationError("empty smoothing-parameter grid");
    const long n_cells = static_cast<long>(panel.n_regions()) * panel.n_weeks();

    std::map<std::array<double, kBaselineCoefs>, BaselineFit> cache;
    std::vector<UbreEval> trace;

    const auto evaluate = [&](const std::array<double, kBaselineCoefs>& lambdas,
                              const Eigen::MatrixXd* warm) -> const BaselineFit& {
        auto it = cache.find(lambdas);
        if (it == cache.end()) {
            BaselineFit fit = fit_penalized_glm_at(panel, graph, lambdas, opt, warm);
            it = cache.emplace(lambdas, std::move(fit)).first;
            trace.push_back({lambdas, ubre_score(it->second.deviance, n_cells,
                                                 it->second.edf),
                             it->second.deviance, it->second.edf});
        }
        return it->second;
    };
    const auto score = [&](const BaselineFit& fit) {
        return ubre_score(fit.deviance, n_cells, fit.edf);
    };

    std::array<double, kBaselineCoefs> lambdas;
    lambdas.fill(1.0);
    const BaselineFit* best = &evaluate(lambdas, nullptr);

    for (int pass = 0; pass < search.passes; ++pass) {
        for (int p = 0; p < kBaselineCoefs; ++p) {
            double best_candidate = lambdas[p];
            double best_ubre = score(*best);
            for (const double c : search.grid) {
                auto trial = lambdas;
                trial[p] = c;
                const BaselineFit& fit = evaluate(trial, &best->beta);
                if (score(fit) < best_ubre - 1e-12) {
                    best_ubre = score(fit);
                    best_candidate = c;
                }
            }
            lambdas[p] = best_candidate;
            best = &cache.at(lambdas);
        }
    }

    BaselineFit out = *best;
    out.ubre_trace = std::move(trace);
    return out;
}

// ---------------------------------------------------------------------------

inline double predict_baseline(const BaselineFit& fit, const std::string& region,
                               int iso_year, int iso_week, double exposure) {
    int r = -1;
    for (std::size_t i = 0; i < fit.regions.size(); ++i)
        if (fit.regions[i] == region) r = static_cast<int>(i);
    if (r < 0) throw ValidationError("predict_baseline: unknown region '" + region + "'");
    const double wpy = fit.exact_week_counts
                           ? static_cast<double>(weeks_in_iso_year(iso_year))
                           : fit.weeks_per_year;
    const auto z = design_vector(iso_year - fit.first_year, iso_week, wpy);
    const Eigen::Matrix<double, kBaselineCoefs, 1> b = fit.beta.row(r);
    return exposure * std::exp(z.dot(b));
}

// Fitted baseline deaths for every panel cell, in panel layout.
inline Eigen::MatrixXd baseline_predictions(const BaselineFit& fit,
                                            const WeeklyPanel& panel) {
    Eigen::MatrixXd out(panel.n_regions(), panel.n_weeks());
    for (int r = 0; r < panel.n_regions(); ++r)
        for (int w = 0; w < panel.n_weeks(); ++w)
            out(r, w) = predict_baseline(fit, fit.regions[r], panel.weeks[w].year,
                                         panel.weeks[w].week, panel.exposure[r][w]);
    return out;
}

inline void write_baseline_predictions_csv(const BaselineFit& fit, const WeeklyPanel& panel,
                                           const std::string& path) {
    const Eigen::MatrixXd b = baseline_predictions(fit, panel);
    CsvWriter w(path, {"region", "iso_year", "iso_week", "exposure", "b_hat"});
    for (int r = 0; r < panel.n_regions(); ++r)
        for (int wi = 0; wi < panel.n_weeks(); ++wi) {
            w.field(fit.regions[r]);
            w.field(panel.weeks[wi].year);
            w.field(panel.weeks[wi].week);
            w.field(panel.exposure[r][wi]);
            w.field(b(r, wi));
            w.end_row();
        }
}

}  // namespace mortenv
