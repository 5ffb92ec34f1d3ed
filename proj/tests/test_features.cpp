#include <catch2/catch.hpp>

#include <numbers>

#include "mortenv/features.hpp"
#include "mortenv/rng.hpp"

using namespace mortenv;

namespace {

double sinusoid(double a0, double a1, double a2, const Date& d) {
    const double phase = 2.0 * std::numbers::pi * day_of_year(d) / 365.25;
    return a0 + a1 * std::sin(phase) + a2 * std::cos(phase);
}

}  // namespace

TEST_CASE("fit_anomaly_baseline recovers noiseless coefficients") {
    std::vector<std::int64_t> days;
    std::vector<double> values;
    for (std::int64_t d = serial_day({2013, 1, 1}); d <= serial_day({2015, 12, 31}); ++d) {
        days.push_back(d);
        values.push_back(sinusoid(5.0, 2.0, -1.0, date_from_serial(d)));
    }
    const AnomalyBaseline b = fit_anomaly_baseline(days, values);
    CHECK(b.a0 == Approx(5.0).margin(1e-6));
    CHECK(b.a1 == Approx(2.0).margin(1e-6));
    CHECK(b.a2 == Approx(-1.0).margin(1e-6));
    CHECK(b.converged);

    SECTION("anomalies of the fit have near-zero mean") {
        double sum = 0;
        for (std::size_t i = 0; i < days.size(); ++i)
            sum += anomaly(values[i], b, date_from_serial(days[i]));
        CHECK(std::abs(sum / static_cast<double>(days.size())) < 1e-8);
    }
}

TEST_CASE("fit_anomaly_baseline on a constant series") {
    std::vector<std::int64_t> days;
    std::vector<double> values;
    for (std::int64_t d = serial_day({2014, 1, 1}); d <= serial_day({2014, 12, 31}); ++d) {
        days.push_back(d);
        values.push_back(7.5);
    }
    const AnomalyBaseline b = fit_anomaly_baseline(days, values);
    CHECK(b.a0 == Approx(7.5).margin(1e-9));
    CHECK(std::abs(b.a1) < 1e-9);
    CHECK(std::abs(b.a2) < 1e-9);
}

TEST_CASE("Huber fit shrugs off gross outliers better than least squares") {
    Rng rng(77);
    std::vector<std::int64_t> days;
    std::vector<double> values;
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    const std::int64_t first = serial_day({2013, 1, 1});
    const int n = 730;
    X.resize(n, 3);
    y.resize(n);
    for (int i = 0; i < n; ++i) {
        const std::int64_t d = first + i;
        const Date date = date_from_serial(d);
        double v = sinusoid(5.0, 2.0, -1.0, date);
        if (rng.next_unit() < 0.05) v += 50.0;  // 5% gross contamination
        days.push_back(d);
        values.push_back(v);
        const double phase = 2.0 * std::numbers::pi * day_of_year(date) / 365.25;
        X(i, 0) = 1;
        X(i, 1) = std::sin(phase);
        X(i, 2) = std::cos(phase);
        y[i] = v;
    }
    const AnomalyBaseline robust = fit_anomaly_baseline(days, values);
    const Eigen::VectorXd ols = (X.transpose() * X).ldlt().solve(X.transpose() * y);

    const Eigen::Vector3d truth(5.0, 2.0, -1.0);
    const Eigen::Vector3d robust_beta(robust.a0, robust.a1, robust.a2);
    const double err_robust = (robust_beta - truth).norm();
    const double err_ols = (ols - truth).norm();
    CHECK(err_robust < err_ols);
    CHECK(err_robust < 0.2);
}

TEST_CASE("fit_anomaly_baseline input validation") {
    CHECK_THROWS_AS(fit_anomaly_baseline(std::vector<std::int64_t>{1, 2},
                                         std::vector<double>{1.0, 2.0}),
                    ValidationError);
    CHECK_THROWS_AS(
        fit_anomaly_baseline(std::vector<std::int64_t>{1, 1, 1, 1},
                             std::vector<double>{1.0, 1.0, 1.0, 1.0}),
        ValidationError);
}

TEST_CASE("anomaly zero-baseline and subtraction rules") {
    AnomalyBaseline zero;
    zero.zero_baseline = true;
    CHECK(anomaly(7.2, zero, {2015, 7, 1}) == 7.2);

    AnomalyBaseline fitted{8.5, 0.0, 0.0, false, true, 1};
    CHECK(anomaly(10.0, fitted, {2015, 7, 1}) == Approx(1.5).epsilon(1e-12));
    CHECK(anomaly(baseline_prediction(fitted, {2015, 7, 1}), fitted, {2015, 7, 1}) ==
          Approx(0.0).margin(1e-12));
}

TEST_CASE("extreme temperature index counts inclusive exceedances") {
    const Thresholds tmax{0.0, 30.0}, tavg{-2.0, 24.0}, tmin{-5.0, 18.0};
    CHECK(extreme_temperature_index(31, 25, 19, tmax, tavg, tmin, Direction::High) == 3);
    CHECK(extreme_temperature_index(20, 15, 10, tmax, tavg, tmin, Direction::High) == 0);
    CHECK(extreme_temperature_index(31, 15, 10, tmax, tavg, tmin, Direction::High) == 1);
    CHECK(extreme_temperature_index(30, 24, 18, tmax, tavg, tmin, Direction::High) == 3);
    CHECK(extreme_temperature_index(0, -2, -5, tmax, tavg, tmin, Direction::Low) == 3);

    SECTION("hot index is monotone in each statistic") {
        Rng rng(5);
        for (int i = 0; i < 200; ++i) {
            const double a = 40 * rng.next_unit() - 5, b = 30 * rng.next_unit() - 5,
                         c = 25 * rng.next_unit() - 8;
            const int base =
                extreme_temperature_index(a, b, c, tmax, tavg, tmin, Direction::High);
            CHECK(extreme_temperature_index(a + 5, b, c, tmax, tavg, tmin,
                                            Direction::High) >= base);
            CHECK(extreme_temperature_index(a, b + 5, c, tmax, tavg, tmin,
                                            Direction::High) >= base);
            CHECK(extreme_temperature_index(a, b, c + 5, tmax, tavg, tmin,
                                            Direction::High) >= base);
        }
    }
}

TEST_CASE("extreme factor indicator boundaries are inclusive") {
    const Thresholds thr{1.0, 9.0};
    CHECK(extreme_factor_indicator(9.0, thr, Direction::High) == 1);
    CHECK(extreme_factor_indicator(5.0, thr, Direction::High) == 0);
    CHECK(extreme_factor_indicator(5.0, thr, Direction::Low) == 0);
    CHECK(extreme_factor_indicator(1.0, thr, Direction::Low) == 1);
}

TEST_CASE("weekly_average") {
    const std::vector<double> constant(7, 3.0);
    CHECK(weekly_average(constant) == Approx(3.0).epsilon(1e-15));
    const std::vector<double> seq = {1, 2, 3, 4, 5, 6, 7};
    CHECK(weekly_average(seq) == Approx(4.0).epsilon(1e-15));
    Rng rng(11);
    std::vector<double> random;
    double sum = 0;
    for (int i = 0; i < 7; ++i) {
        random.push_back(rng.next_normal());
        sum += random.back();
    }
    CHECK(weekly_average(random) == Approx(sum / 7.0).margin(1e-12));
    CHECK_THROWS_AS(weekly_average(std::vector<double>(6, 1.0)), ValidationError);
}

TEST_CASE("season_of uses the Monday of the week, mid-month boundaries") {
    CHECK(season_of(Date{2016, 1, 6}) == Season::Winter);
    CHECK(season_of(Date{2016, 7, 1}) == Season::Summer);
    CHECK(season_of(Date{2016, 3, 15}) == Season::Spring);
    CHECK(season_of(Date{2016, 3, 14}) == Season::Winter);
    CHECK(season_of(Date{2016, 6, 15}) == Season::Summer);
    CHECK(season_of(Date{2016, 9, 15}) == Season::Autumn);
    CHECK(season_of(Date{2016, 12, 15}) == Season::Winter);
    CHECK(season_of(Date{2016, 12, 14}) == Season::Autumn);

    // Week starting Monday 2018-07-02.
    CHECK(season_of(IsoWeek{2018, 27}) == Season::Summer);
}

TEST_CASE("sample_quantile is the linear-interpolation estimator") {
    std::vector<double> v = {1, 2, 3, 4};
    CHECK(sample_quantile(v, 0.5) == Approx(2.5).epsilon(1e-12));
    CHECK(sample_quantile(v, 0.0) == 1.0);
    CHECK(sample_quantile(v, 1.0) == 4.0);
    CHECK(sample_quantile(v, 0.25) == Approx(1.75).epsilon(1e-12));
}

// ---------------------------------------------------------------------------
// A tiny synthetic environment shared by the assembly tests.

namespace {

struct EnvFixture {
    RegionGraph graph;
    std::map<std::string, RegionDailySeries> series;
    FeatureConfig config;
    EnvModel model;
    std::vector<IsoWeek> weeks;
};

EnvFixture build_env(int n_regions, int first_year, int last_year, std::uint64_t seed) {
    EnvFixture f;
    for (int r = 0; r < n_regions; ++r) {
        f.graph.regions.push_back("R" + std::to_string(r));
        f.graph.centroids.push_back({-3.0 + r, 40.0 + 0.5 * r});
        f.graph.neighbors.push_back({});
    }

    const DayWindow window = window_for_years(first_year, last_year);
    const auto value_for = [&](const std::string& factor, int r, std::int64_t serial,
                               Rng& rng) {
        const Date d = date_from_serial(serial);
        const double phase = 2.0 * std::numbers::pi * day_of_year(d) / 365.25;
        double level = 0;
        if (factor == "tmax") level = 18 - std::cos(phase) * 9 + r;
        else if (factor == "tavg") level = 13 - std::cos(phase) * 8 + r;
        else if (factor == "tmin") level = 8 - std::cos(phase) * 7 + r;
        else if (factor == "hum") level = 70 + std::cos(phase) * 8;
        else if (factor == "rain") level = 2.0;
        else if (factor == "wind") level = 5 + std::sin(phase);
        else level = 40 + 10 * std::sin(phase) + 2 * r;  // pollutants
        return level + rng.next_normal() * 1.5;
    };

    for (const auto& spec : default_factor_set()) {
        RegionDailySeries s;
        s.factor = spec.name;
        s.hourly_sourced = spec.hourly;
        s.first_day = window.first_day;
        s.n_days = window.n_days;
        s.values.resize(n_regions);
        for (int r = 0; r < n_regions; ++r) {
            Rng rng = stream_rng(seed, spec.name, static_cast<std::uint64_t>(r));
            for (int d = 0; d < window.n_days; ++d) {
                const double v = value_for(spec.name, r, window.first_day + d, rng);
                s.values[r].push_back({v, v, v});
            }
        }
        f.series.emplace(spec.name, std::move(s));
    }

    f.model = fit_env_model(f.series, f.graph, f.config, window, 1);
    for (int y = first_year; y <= last_year; ++y)
        for (int w = 1; w <= weeks_in_iso_year(y); ++w) f.weeks.push_back({y, w});
    return f;
}

}  // namespace

TEST_CASE("assemble_features produces the 56-column matrix with lag semantics") {
    const EnvFixture f = build_env(3, 2014, 2015, 99);
    const FeatureMatrix m = assemble_features(f.series, f.model, f.graph, f.weeks, 1);

    const int total_weeks = 52 + 53;
    CHECK(m.n_cols() == 56);
    CHECK(m.n_rows() == 3 * (total_weeks - 1));  // first week dropped per region

    SECTION("lag column equals the previous week's unlagged column") {
        const int cur = m.column_index("idx_hot");
        const int lag = m.column_index("l1_idx_hot");
        std::map<std::pair<int, IsoWeek>, double> unlagged;
        for (int i = 0; i < m.n_rows(); ++i)
            unlagged[{m.region[i], m.week[i]}] = m.values(i, cur);
        int checked = 0;
        for (int i = 0; i < m.n_rows(); ++i) {
            const auto it = unlagged.find({m.region[i], prev_week(m.week[i])});
            if (it == unlagged.end()) continue;
            CHECK(m.values(i, lag) == Approx(it->second).margin(1e-12));
            ++checked;
        }
        CHECK(checked > 0);
    }

    SECTION("season indicators are one-hot") {
        const int s0 = m.column_index("season_spring");
        for (int i = 0; i < m.n_rows(); ++i) {
            double sum = 0;
            for (int s = 0; s < 4; ++s) sum += m.values(i, s0 + s);
            CHECK(sum == 1.0);
        }
    }

    SECTION("coordinates match the centroids") {
        const int lon = m.column_index("lon");
        const int lat = m.column_index("lat");
        for (int i = 0; i < m.n_rows(); ++i) {
            CHECK(m.values(i, lon) == f.graph.centroids[m.region[i]][0]);
            CHECK(m.values(i, lat) == f.graph.centroids[m.region[i]][1]);
        }
    }

    SECTION("assembly is deterministic and parallel-invariant") {
        const FeatureMatrix again = assemble_features(f.series, f.model, f.graph, f.weeks, 4);
        REQUIRE(again.n_rows() == m.n_rows());
        CHECK((again.values - m.values).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("lag depth beyond one extends the columns and drops extra rows") {
    const EnvFixture base = build_env(2, 2014, 2015, 55);
    FeatureConfig deep = base.config;
    deep.lag_depth = 2;
    const DayWindow window = window_for_years(2014, 2015);
    const EnvModel model = fit_env_model(base.series, base.graph, deep, window, 1);
    const FeatureMatrix m = assemble_features(base.series, model, base.graph, base.weeks, 1);

    CHECK(m.n_cols() == 25 * 3 + 6);
    const int total_weeks = 52 + 53;
    CHECK(m.n_rows() == 2 * (total_weeks - 2));  // first two weeks lack lag sources
    CHECK(m.column_index("l2_idx_hot") >= 0);

    // The depth-2 lag equals the unlagged value two weeks earlier.
    const int cur = m.column_index("idx_cold");
    const int lag2 = m.column_index("l2_idx_cold");
    std::map<std::pair<int, IsoWeek>, double> unlagged;
    for (int i = 0; i < m.n_rows(); ++i)
        unlagged[{m.region[i], m.week[i]}] = m.values(i, cur);
    int checked = 0;
    for (int i = 0; i < m.n_rows(); ++i) {
        const auto it = unlagged.find({m.region[i], prev_week(prev_week(m.week[i]))});
        if (it == unlagged.end()) continue;
        CHECK(m.values(i, lag2) == Approx(it->second).margin(1e-12));
        ++checked;
    }
    CHECK(checked > 0);
}

TEST_CASE("indicator frequencies sit near the quantile tail mass") {
    const EnvFixture f = build_env(2, 2013, 2016, 123);
    // Daily high indicator for hum should fire on about 5% of calibration days.
    const auto& s = f.series.at("hum");
    const auto& thr = f.model.thresholds.at("hum");
    for (int r = 0; r < 2; ++r) {
        int fired = 0;
        for (int d = 0; d < s.n_days; ++d)
            fired += extreme_factor_indicator(s.values[r][d].avg, thr[r], Direction::High);
        const double frac = static_cast<double>(fired) / s.n_days;
        CHECK(std::abs(frac - 0.05) <= 2.0 / s.n_days + 1e-12);
    }
}

TEST_CASE("assemble_features rejects a factor with missing regions") {
    EnvFixture f = build_env(2, 2014, 2014, 7);
    auto broken = f.series;
    broken.erase("wind");
    CHECK_THROWS_WITH(assemble_features(broken, f.model, f.graph, f.weeks, 1),
                      Catch::Contains("wind"));
}

TEST_CASE("fit thresholds honour q5 <= q95") {
    const EnvFixture f = build_env(2, 2014, 2015, 41);
    for (const auto& [factor, per_region] : f.model.thresholds)
        for (const auto& thr : per_region) CHECK(thr.q5 <= thr.q95);
}
