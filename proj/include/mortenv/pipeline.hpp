#pragma once

// Subcommand orchestration shared by the CLI and the end-to-end tests.
// Each run_* function reads its inputs, writes the module's declared
// artifacts plus a manifest, and returns nothing; failures surface as
// ValidationError / NumericError.

#include <Eigen/Dense>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mortenv/analysis.hpp"
#include "mortenv/baseline.hpp"
#include "mortenv/boost.hpp"
#include "mortenv/config.hpp"
#include "mortenv/csv.hpp"
#include "mortenv/features.hpp"
#include "mortenv/interpret.hpp"
#include "mortenv/manifest.hpp"
#include "mortenv/model_io.hpp"
#include "mortenv/panel.hpp"
#include "mortenv/spatial.hpp"
#include "mortenv/synth.hpp"

namespace mortenv {

namespace pipeline {

inline void ensure_parent_dir(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
}

inline std::string out_path(const RunConfig& config, const std::string& key,
                            const std::string& fallback_name) {
    const std::string out_dir = config.get("out_dir", "out");
    std::string path = config.get(key, out_dir + "/" + fallback_name);
    ensure_parent_dir(path);
    return path;
}

inline void require_artifact(const std::string& path, const std::string& producer) {
    if (!std::filesystem::exists(path))
        throw ValidationError("missing artifact '" + path + "'; run `mortenv " +
                              producer + "` first");
}

inline PanelFiles panel_files(const RunConfig& config) {
    PanelFiles files;
    files.deaths = config.require("paths.deaths");
    files.population = config.require("paths.population");
    files.adjacency = config.require("paths.adjacency");
    files.centroids = config.require("paths.centroids");
    return files;
}

inline LoadedPanel load_panel_from_config(const RunConfig& config) {
    return load_panel(panel_files(config),
                      config.get_double("calendar.weeks_per_year", kAverageWeeksPerYear),
                      config.get_bool("calendar.exact_week_counts", false));
}

inline FeatureConfig feature_config_from(const RunConfig& config) {
    FeatureConfig fc;
    fc.lag_depth = static_cast<int>(config.get_long("features.lag_depth", 1));
    fc.days_per_year = config.get_double("features.days_per_year", kAverageDaysPerYear);
    const auto zero = config.get_list("features.zero_baseline");
    if (!zero.empty()) {
        const std::set<std::string> zero_set(zero.begin(), zero.end());
        for (auto& spec : fc.factors) spec.zero_baseline = zero_set.count(spec.name) > 0;
    }
    return fc;
}

struct SeriesBundle {
    std::map<std::string, RegionDailySeries> series;
    std::vector<std::string> input_files;
};

inline SeriesBundle build_series(const RunConfig& config, const RegionGraph& graph,
                                 const FeatureConfig& fc) {
    SeriesBundle bundle;
    const std::string daily_path = config.require("paths.grid_daily");
    const std::string hourly_path = config.get("paths.grid_hourly");
    auto daily = load_gridded_fields(daily_path, false);
    bundle.input_files.push_back(daily_path);
    std::map<std::string, GriddedField> hourly;
    if (!hourly_path.empty() && std::filesystem::exists(hourly_path)) {
        hourly = load_gridded_fields(hourly_path, true);
        bundle.input_files.push_back(hourly_path);
    }

    const std::string pop_path = config.require("paths.pop_grid");
    const std::string map_path = config.require("paths.mapping");
    const auto pop_grid = load_population_grid(pop_path);
    const auto mapping = load_point_region_map(map_path);
    bundle.input_files.push_back(pop_path);
    bundle.input_files.push_back(map_path);

    // Weights are reused across factors that share a grid.
    std::map<std::vector<GridPoint>, RegionWeights> weights_by_grid;
    const auto weights_for = [&](const GriddedField& field) -> const RegionWeights& {
        auto it = weights_by_grid.find(field.grid);
        if (it == weights_by_grid.end())
            it = weights_by_grid
                     .emplace(field.grid, build_population_weights(pop_grid, field.grid,
                                                                   mapping, graph))
                     .first;
        return it->second;
    };

    for (const auto& spec : fc.factors) {
        const GriddedField* field = nullptr;
        if (const auto it = hourly.find(spec.name); it != hourly.end())
            field = &it->second;
        else if (const auto it2 = daily.find(spec.name); it2 != daily.end())
            field = &it2->second;
        if (!field)
            throw ValidationError("factor '" + spec.name +
                                  "' not present in the gridded inputs");
        bundle.series.emplace(spec.name, region_daily_series(*field, weights_for(*field)));
    }
    return bundle;
}

// features.csv written by run_features, read back for later stages.
inline FeatureMatrix load_features_csv(const std::string& path, const RegionGraph& graph) {
    const CsvTable t = read_csv(path);
    if (t.header.size() < 4 || t.header[0] != "region" || t.header[1] != "iso_year" ||
        t.header[2] != "iso_week")
        throw ValidationError(path + ": not a features file");
    FeatureMatrix m;
    m.columns.assign(t.header.begin() + 3, t.header.end());
    m.values.resize(static_cast<Eigen::Index>(t.rows.size()),
                    static_cast<Eigen::Index>(m.columns.size()));
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        m.region.push_back(graph.require(t.rows[i][0]));
        const IsoWeek week{static_cast<int>(parse_long(t, i, 1)),
                           static_cast<int>(parse_long(t, i, 2))};
        m.week.push_back(week);
        m.source_years.insert(week.year);
        for (std::size_t j = 0; j < m.columns.size(); ++j)
            m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                parse_double(t, i, static_cast<int>(j + 3));
    }
    return m;
}

struct PredictionTable {
    // (region index, week) -> value
    std::map<std::pair<int, IsoWeek>, double> b_hat;
    std::map<std::pair<int, IsoWeek>, double> d_hat;
};

inline PredictionTable load_baseline_predictions(const std::string& path,
                                                 const RegionGraph& graph) {
    const CsvTable t = read_csv(path);
    const int c_region = t.column("region");
    const int c_year = t.column("iso_year");
    const int c_week = t.column("iso_week");
    const int c_b = t.column("b_hat");
    PredictionTable out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const int r = graph.require(t.rows[i][c_region]);
        const IsoWeek w{static_cast<int>(parse_long(t, i, c_year)),
                        static_cast<int>(parse_long(t, i, c_week))};
        out.b_hat[{r, w}] = parse_double(t, i, c_b);
    }
    return out;
}

struct AlignedRows {
    std::vector<double> offsets;
    std::vector<double> deaths;
    std::vector<int> row_year;
};

inline AlignedRows align_rows(const FeatureMatrix& features, const WeeklyPanel& panel,
                              const PredictionTable& predictions) {
    AlignedRows rows;
    for (int i = 0; i < features.n_rows(); ++i) {
        const int r = features.region[i];
        const IsoWeek w = features.week[i];
        const auto it = predictions.b_hat.find({r, w});
        if (it == predictions.b_hat.end())
            throw ValidationError("no baseline prediction for region index " +
                                  std::to_string(r) + ", week (" +
                                  std::to_string(w.year) + ", " + std::to_string(w.week) +
                                  ")");
        const int wi = panel.week_index(w);
        if (wi < 0)
            throw ValidationError("feature row outside the panel: week (" +
                                  std::to_string(w.year) + ", " + std::to_string(w.week) +
                                  ")");
        rows.offsets.push_back(it->second);
        rows.deaths.push_back(static_cast<double>(panel.deaths[r][wi]));
        rows.row_year.push_back(w.year);
    }
    return rows;
}

inline BoostParams boost_params_from(const RunConfig& config) {
    BoostParams params;
    const std::string from = config.get("boost.params_from");
    if (!from.empty()) {
        require_artifact(from, "cv");
        const nlohmann::json j = load_json(from);
        params.nrounds = j.at("nrounds").get<int>();
        params.eta = j.at("eta").get<double>();
        params.max_depth = j.at("max_depth").get<int>();
        params.subsample = j.at("subsample").get<double>();
        params.colsample_bytree = j.at("colsample_bytree").get<double>();
        params.min_child_weight = j.at("min_child_weight").get<double>();
    }
    params.nrounds = static_cast<int>(config.get_long("boost.nrounds", params.nrounds));
    params.eta = config.get_double("boost.eta", params.eta);
    params.max_depth =
        static_cast<int>(config.get_long("boost.max_depth", params.max_depth));
    params.subsample = config.get_double("boost.subsample", params.subsample);
    params.colsample_bytree =
        config.get_double("boost.colsample_bytree", params.colsample_bytree);
    params.min_child_weight =
        config.get_double("boost.min_child_weight", params.min_child_weight);
    params.seed = static_cast<std::uint64_t>(config.get_long("seed", 0));
    params.validate();
    return params;
}

inline CvGrid cv_grid_from(const RunConfig& config) {
    CvGrid grid = default_cv_grid();
    if (config.has("cv.nrounds")) grid.nrounds = config.get_ints("cv.nrounds");
    if (config.has("cv.eta")) grid.eta = config.get_doubles("cv.eta");
    if (config.has("cv.max_depth")) grid.max_depth = config.get_ints("cv.max_depth");
    if (config.has("cv.subsample")) grid.subsample = config.get_doubles("cv.subsample");
    if (config.has("cv.colsample_bytree"))
        grid.colsample_bytree = config.get_doubles("cv.colsample_bytree");
    if (config.has("cv.min_child_weight"))
        grid.min_child_weight = config.get_doubles("cv.min_child_weight");
    return grid;
}

inline std::array<double, kBaselineCoefs> lambdas_from_list(const std::vector<double>& v) {
    std::array<double, kBaselineCoefs> lambdas{};
    if (v.size() == 1) {
        lambdas.fill(v[0]);
    } else if (v.size() == kBaselineCoefs) {
        std::copy(v.begin(), v.end(), lambdas.begin());
    } else {
        throw ValidationError("lambda.fixed needs 1 or 6 values");
    }
    return lambdas;
}

// ---------------------------------------------------------------------------
// Subcommands.

inline void run_synth(const RunConfig& config, int jobs) {
    (void)jobs;
    SyntheticTruth truth;
    truth.seed = static_cast<std::uint64_t>(config.get_long("seed", 1));
    truth.n_regions = static_cast<int>(config.get_long("synth.regions", 6));
    truth.first_year = static_cast<int>(config.get_long("synth.first_year", 2014));
    truth.n_years = static_cast<int>(config.get_long("synth.years", 4));
    truth.base_population = config.get_double("synth.base_population", 60000);
    truth.hourly_pollutants = config.get_bool("synth.hourly_pollutants", false);
    truth.anomaly_sigma = config.get_double("synth.anomaly_sigma", 2.4);
    for (const auto& item : config.get_list("synth.planted")) {
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw ValidationError("synth.planted entries look like feature:coef");
        truth.planted[item.substr(0, colon)] = std::stod(item.substr(colon + 1));
    }

    const std::string dir = config.get("synth.out_dir", config.get("out_dir", "out"));
    const SyntheticFixture fx = synth_generate(truth);
    write_fixture_files(fx, truth, dir);

    nlohmann::json truth_json;
    truth_json["seed"] = truth.seed;
    truth_json["regions"] = truth.n_regions;
    truth_json["first_year"] = truth.first_year;
    truth_json["years"] = truth.n_years;
    truth_json["planted"] = truth.planted;
    nlohmann::json beta = nlohmann::json::array();
    for (Eigen::Index r = 0; r < fx.beta.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int p = 0; p < kBaselineCoefs; ++p) row.push_back(fx.beta(r, p));
        beta.push_back(row);
    }
    truth_json["beta"] = beta;
    save_json(truth_json, dir + "/truth.json");

    std::vector<std::string> outputs = {dir + "/deaths.csv",
                                        dir + "/population.csv",
                                        dir + "/adjacency.csv",
                                        dir + "/centroids.csv",
                                        dir + "/pop_grid.csv",
                                        dir + "/mapping.csv",
                                        dir + "/grid_daily.csv",
                                        dir + "/truth_multipliers.csv",
                                        dir + "/truth.json"};
    if (truth.hourly_pollutants) outputs.push_back(dir + "/grid_hourly.csv");
    write_manifest(config.get("out_dir", "out"), "synth", config, {}, outputs);
}

inline void run_ingest(const RunConfig& config, int jobs) {
    (void)jobs;
    const LoadedPanel loaded = load_panel_from_config(config);
    const std::string out = out_path(config, "paths.panel", "panel.csv");
    {
        CsvWriter w(out, {"region", "iso_year", "iso_week", "deaths", "exposure"});
        for (int r = 0; r < loaded.panel.n_regions(); ++r)
            for (int wi = 0; wi < loaded.panel.n_weeks(); ++wi) {
                w.field(loaded.graph.regions[r]);
                w.field(loaded.panel.weeks[wi].year);
                w.field(loaded.panel.weeks[wi].week);
                w.field(loaded.panel.deaths[r][wi]);
                w.field(loaded.panel.exposure[r][wi]);
                w.end_row();
            }
    }
    const PanelFiles files = panel_files(config);
    write_manifest(config.get("out_dir", "out"), "ingest", config,
                   {files.deaths, files.population, files.adjacency, files.centroids},
                   {out});
}

inline void run_features(const RunConfig& config, int jobs) {
    const LoadedPanel loaded = load_panel_from_config(config);
    const FeatureConfig fc = feature_config_from(config);
    validate_factor_set(fc);
    const SeriesBundle bundle = build_series(config, loaded.graph, fc);

    const std::vector<int> years = loaded.panel.years();
    const DayWindow window = window_for_years(years.front(), years.back());
    const EnvModel env_model =
        fit_env_model(bundle.series, loaded.graph, fc, window, jobs);
    const FeatureMatrix features =
        assemble_features(bundle.series, env_model, loaded.graph, loaded.panel.weeks, jobs);

    const std::string features_path = out_path(config, "paths.features", "features.csv");
    std::filesystem::create_directories(
        std::filesystem::path(features_path).parent_path());
    write_features_csv(features, loaded.graph, features_path);
    const std::string thresholds_path =
        out_path(config, "paths.thresholds", "thresholds.csv");
    write_thresholds_csv(env_model, loaded.graph, thresholds_path);
    const std::string baselines_path =
        out_path(config, "paths.anomaly_baselines", "anomaly_baselines.csv");
    write_baselines_csv(env_model, loaded.graph, baselines_path);

    // Column order contract, emitted alongside the matrix.
    nlohmann::json schema;
    schema["columns"] = features.columns;
    schema["lag_depth"] = fc.lag_depth;
    const std::string schema_path =
        out_path(config, "paths.features_schema", "features_schema.json");
    save_json(schema, schema_path);

    const PanelFiles files = panel_files(config);
    std::vector<std::string> inputs = {files.deaths, files.population, files.adjacency,
                                       files.centroids};
    inputs.insert(inputs.end(), bundle.input_files.begin(), bundle.input_files.end());
    write_manifest(config.get("out_dir", "out"), "features", config, inputs,
                   {features_path, thresholds_path, baselines_path, schema_path});
}

inline void run_baseline(const RunConfig& config, int jobs) {
    (void)jobs;
    const LoadedPanel loaded = load_panel_from_config(config);
    GlmOptions options;
    options.weeks_per_year =
        config.get_double("calendar.weeks_per_year", kAverageWeeksPerYear);
    options.exact_week_counts = config.get_bool("calendar.exact_week_counts", false);
    options.tolerance = config.get_double("baseline.tolerance", 1e-8);
    options.max_iterations =
        static_cast<int>(config.get_long("baseline.max_iterations", 100));

    BaselineFit fit;
    if (config.has("lambda.fixed")) {
        fit = fit_penalized_glm_at(loaded.panel, loaded.graph,
                                   lambdas_from_list(config.get_doubles("lambda.fixed")),
                                   options);
    } else {
        LambdaSearch search;
        if (config.has("lambda.grid")) search.grid = config.get_doubles("lambda.grid");
        search.passes = static_cast<int>(config.get_long("lambda.passes", 2));
        fit = fit_penalized_glm(loaded.panel, loaded.graph, search, options);
    }

    const std::string fit_path = out_path(config, "paths.baseline_fit", "baseline_fit.json");
    save_json(baseline_fit_to_json(fit), fit_path);
    const std::string pred_path =
        out_path(config, "paths.baseline_predictions", "baseline_predictions.csv");
    write_baseline_predictions_csv(fit, loaded.panel, pred_path);

    const PanelFiles files = panel_files(config);
    write_manifest(config.get("out_dir", "out"), "baseline", config,
                   {files.deaths, files.population, files.adjacency, files.centroids},
                   {fit_path, pred_path});
}

inline void run_cv(const RunConfig& config, int jobs) {
    const LoadedPanel loaded = load_panel_from_config(config);
    const std::string features_path = out_path(config, "paths.features", "features.csv");
    require_artifact(features_path, "features");
    const std::string pred_path =
        out_path(config, "paths.baseline_predictions", "baseline_predictions.csv");
    require_artifact(pred_path, "baseline");

    const FeatureMatrix features = load_features_csv(features_path, loaded.graph);
    const PredictionTable predictions = load_baseline_predictions(pred_path, loaded.graph);
    const AlignedRows rows = align_rows(features, loaded.panel, predictions);

    const CvGrid grid = cv_grid_from(config);
    const CvResult cv = cross_validate(features.values, rows.offsets, rows.deaths,
                                       rows.row_year, features.columns, grid,
                                       static_cast<std::uint64_t>(config.get_long("seed", 0)),
                                       jobs);

    const std::string results_path = out_path(config, "paths.cv_results", "cv_results.csv");
    {
        std::vector<std::string> header = {"nrounds",          "eta",
                                           "max_depth",        "subsample",
                                           "colsample_bytree", "min_child_weight"};
        for (const int y : cv.fold_years) header.push_back("fold_" + std::to_string(y));
        header.push_back("mean_loss");
        CsvWriter w(results_path, header);
        for (const auto& entry : cv.entries) {
            w.field(entry.params.nrounds);
            w.field(entry.params.eta);
            w.field(entry.params.max_depth);
            w.field(entry.params.subsample);
            w.field(entry.params.colsample_bytree);
            w.field(entry.params.min_child_weight);
            for (const double loss : entry.fold_loss) w.field(loss);
            w.field(entry.mean_loss);
            w.end_row();
        }
    }
    nlohmann::json best;
    best["nrounds"] = cv.best.nrounds;
    best["eta"] = cv.best.eta;
    best["max_depth"] = cv.best.max_depth;
    best["subsample"] = cv.best.subsample;
    best["colsample_bytree"] = cv.best.colsample_bytree;
    best["min_child_weight"] = cv.best.min_child_weight;
    best["mean_loss"] = cv.best_loss;
    const std::string best_path = out_path(config, "paths.cv_best", "cv_best.json");
    save_json(best, best_path);

    write_manifest(config.get("out_dir", "out"), "cv", config, {features_path, pred_path},
                   {results_path, best_path});
}

inline void run_boost(const RunConfig& config, int jobs) {
    (void)jobs;
    const LoadedPanel loaded = load_panel_from_config(config);
    const std::string features_path = out_path(config, "paths.features", "features.csv");
    require_artifact(features_path, "features");
    const std::string pred_path =
        out_path(config, "paths.baseline_predictions", "baseline_predictions.csv");
    require_artifact(pred_path, "baseline");

    const FeatureMatrix features = load_features_csv(features_path, loaded.graph);
    const PredictionTable predictions = load_baseline_predictions(pred_path, loaded.graph);
    const AlignedRows rows = align_rows(features, loaded.panel, predictions);

    const BoostParams params = boost_params_from(config);
    BoostedModel model =
        boost_fit(features.values, rows.offsets, rows.deaths, features.columns, params);
    model.source_years = features.source_years;

    const std::string model_path = out_path(config, "paths.boost_model", "boost_model.json");
    save_json(boost_model_to_json(model), model_path);

    const std::string out_pred = out_path(config, "paths.predictions", "predictions.csv");
    {
        CsvWriter w(out_pred, {"region", "iso_year", "iso_week", "deaths", "b_hat", "phi",
                               "d_hat"});
        for (int i = 0; i < features.n_rows(); ++i) {
            const double phi = predict_multiplier(model, features.values.row(i));
            w.field(loaded.graph.regions[features.region[i]]);
            w.field(features.week[i].year);
            w.field(features.week[i].week);
            w.field(rows.deaths[static_cast<std::size_t>(i)]);
            w.field(rows.offsets[static_cast<std::size_t>(i)]);
            w.field(phi);
            w.field(rows.offsets[static_cast<std::size_t>(i)] * phi);
            w.end_row();
        }
    }
    write_manifest(config.get("out_dir", "out"), "boost", config,
                   {features_path, pred_path}, {model_path, out_pred});
}

inline void run_interpret(const RunConfig& config, int jobs) {
    const LoadedPanel loaded = load_panel_from_config(config);
    const std::string model_path = out_path(config, "paths.boost_model", "boost_model.json");
    require_artifact(model_path, "boost");
    const std::string features_path = out_path(config, "paths.features", "features.csv");
    require_artifact(features_path, "features");
    const std::string pred_path =
        out_path(config, "paths.baseline_predictions", "baseline_predictions.csv");
    require_artifact(pred_path, "baseline");

    const BoostedModel model = boost_model_from_json(load_json(model_path));
    const FeatureMatrix features = load_features_csv(features_path, loaded.graph);
    if (features.columns != model.schema)
        throw ValidationError("feature columns do not match the model schema");
    const PredictionTable predictions = load_baseline_predictions(pred_path, loaded.graph);
    const AlignedRows rows = align_rows(features, loaded.panel, predictions);

    const int ale_bins = static_cast<int>(config.get_long("interpret.ale_bins", 40));
    const int interaction_bins =
        static_cast<int>(config.get_long("interpret.interaction_bins", 20));
    const int bootstrap_b = static_cast<int>(config.get_long("interpret.bootstrap", 0));
    const double level = config.get_double("interpret.level", 0.95);
    const std::uint64_t seed = static_cast<std::uint64_t>(config.get_long("seed", 0));

    const std::string scale = config.get("interpret.scale", "multiplier");
    if (scale != "multiplier" && scale != "log")
        throw ValidationError("interpret.scale must be 'multiplier' or 'log'");
    const bool log_scale = scale == "log";

    const ImportanceReport importance = feature_importance(model);

    // ALE features: explicit list, or the most important non-constant ones.
    std::vector<std::string> ale_features = config.get_list("interpret.ale_features");
    if (ale_features.empty()) {
        const long top = config.get_long("interpret.top_features", 5);
        std::vector<std::pair<double, std::string>> ranked;
        for (std::size_t i = 0; i < importance.features.size(); ++i)
            ranked.push_back({importance.importance[i], importance.features[i]});
        std::sort(ranked.rbegin(), ranked.rend());
        for (const auto& [score, name] : ranked) {
            if (static_cast<long>(ale_features.size()) >= top) break;
            const int col = features.column_index(name);
            if (features.values.col(col).minCoeff() ==
                features.values.col(col).maxCoeff())
                continue;  // constant columns have no bins
            if (score <= 0) break;
            ale_features.push_back(name);
        }
    }

    const Predictor predictor =
        log_scale ? log_multiplier_predictor(model) : multiplier_predictor(model);
    std::vector<AleCurve> curves;
    for (const auto& name : ale_features)
        curves.push_back(ale_main(predictor, features.values,
                                  features.column_index(name), ale_bins,
                                  &features.columns));

    // One bootstrap pass covers importance and every requested curve; each
    // replicate refits the model with the fixed tuning parameters.
    std::vector<double> imp_lo(importance.features.size(), 0),
        imp_hi(importance.features.size(), 0);
    std::vector<std::vector<double>> curve_lo(curves.size()), curve_hi(curves.size());
    if (bootstrap_b > 0) {
        const auto statistic = [&](const std::vector<int>& sample) {
            Eigen::MatrixXd Xb(sample.size(), features.values.cols());
            std::vector<double> ob, db;
            for (std::size_t i = 0; i < sample.size(); ++i) {
                Xb.row(static_cast<Eigen::Index>(i)) = features.values.row(sample[i]);
                ob.push_back(rows.offsets[static_cast<std::size_t>(sample[i])]);
                db.push_back(rows.deaths[static_cast<std::size_t>(sample[i])]);
            }
            const BoostedModel refit =
                boost_fit(Xb, ob, db, features.columns, model.params);
            const ImportanceReport imp = feature_importance(refit);
            std::vector<double> out = imp.importance;
            const Predictor refit_predictor =
                log_scale ? log_multiplier_predictor(refit) : multiplier_predictor(refit);
            for (std::size_t c = 0; c < curves.size(); ++c) {
                const AleCurve replicate =
                    ale_main(refit_predictor, Xb,
                             features.column_index(ale_features[c]), ale_bins);
                for (const double edge : curves[c].edges)
                    out.push_back(ale_value_at(replicate, edge));
            }
            return out;
        };
        const BootstrapResult ci = bootstrap_ci(statistic, features.n_rows(), bootstrap_b,
                                                level, seed, jobs);
        std::size_t cursor = 0;
        for (std::size_t i = 0; i < importance.features.size(); ++i, ++cursor) {
            imp_lo[i] = ci.lo[cursor];
            imp_hi[i] = ci.hi[cursor];
        }
        for (std::size_t c = 0; c < curves.size(); ++c) {
            for (std::size_t e = 0; e < curves[c].edges.size(); ++e, ++cursor) {
                curve_lo[c].push_back(ci.lo[cursor]);
                curve_hi[c].push_back(ci.hi[cursor]);
            }
        }
    } else {
        for (std::size_t i = 0; i < importance.features.size(); ++i) {
            imp_lo[i] = importance.importance[i];
            imp_hi[i] = importance.importance[i];
        }
        for (std::size_t c = 0; c < curves.size(); ++c) {
            curve_lo[c] = curves[c].effect;
            curve_hi[c] = curves[c].effect;
        }
    }

    const std::string importance_path =
        out_path(config, "paths.importance", "importance.csv");
    {
        CsvWriter w(importance_path, {"feature", "importance", "lo", "hi"});
        for (std::size_t i = 0; i < importance.features.size(); ++i) {
            w.field(importance.features[i]);
            w.field(importance.importance[i]);
            w.field(imp_lo[i]);
            w.field(imp_hi[i]);
            w.end_row();
        }
    }

    const std::string ale_path = out_path(config, "paths.ale_main", "ale_main.csv");
    {
        CsvWriter w(ale_path, {"feature", "edge", "effect", "count", "lo", "hi"});
        for (std::size_t c = 0; c < curves.size(); ++c) {
            const AleCurve& curve = curves[c];
            for (std::size_t e = 0; e < curve.edges.size(); ++e) {
                w.field(curve.feature_name);
                w.field(curve.edges[e]);
                w.field(curve.effect[e]);
                w.field(e == 0 ? 0L : curve.counts[e - 1]);
                w.field(curve_lo[c][e]);
                w.field(curve_hi[c][e]);
                w.end_row();
            }
        }
    }

    const std::string interaction_path =
        out_path(config, "paths.ale_interaction", "ale_interaction.csv");
    {
        CsvWriter w(interaction_path, {"f1", "f2", "e1", "e2", "effect", "missing"});
        for (const auto& pair : config.get_list("interpret.interactions")) {
            const auto colon = pair.find(':');
            if (colon == std::string::npos)
                throw ValidationError("interpret.interactions entries look like f1:f2");
            const std::string f1 = pair.substr(0, colon);
            const std::string f2 = pair.substr(colon + 1);
            const AleSurface surface =
                ale_interaction(predictor, features.values, features.column_index(f1),
                                features.column_index(f2), interaction_bins);
            for (Eigen::Index a = 0; a < surface.effect.rows(); ++a)
                for (Eigen::Index b = 0; b < surface.effect.cols(); ++b) {
                    w.field(f1);
                    w.field(f2);
                    w.field(surface.edges_a[static_cast<std::size_t>(a) + 1]);
                    w.field(surface.edges_b[static_cast<std::size_t>(b) + 1]);
                    w.field(surface.effect(a, b));
                    w.field(surface.missing[static_cast<std::size_t>(a)]
                                           [static_cast<std::size_t>(b)]
                                ? 1
                                : 0);
                    w.end_row();
                }
        }
    }

    write_manifest(config.get("out_dir", "out"), "interpret", config,
                   {model_path, features_path, pred_path},
                   {importance_path, ale_path, interaction_path});
}

inline void run_harvest(const RunConfig& config, int jobs) {
    (void)jobs;
    const LoadedPanel loaded = load_panel_from_config(config);
    const std::string features_path = out_path(config, "paths.features", "features.csv");
    require_artifact(features_path, "features");
    const std::string pred_path = out_path(config, "paths.predictions", "predictions.csv");
    require_artifact(pred_path, "boost");

    const FeatureMatrix features = load_features_csv(features_path, loaded.graph);
    const CsvTable predictions = read_csv(pred_path);
    const int c_region = predictions.column("region");
    const int c_year = predictions.column("iso_year");
    const int c_week = predictions.column("iso_week");
    const int c_deaths = predictions.column("deaths");
    const int c_b = predictions.column("b_hat");
    const int c_d = predictions.column("d_hat");
    std::map<std::pair<int, IsoWeek>, std::array<double, 3>> rows;  // d, b_hat, d_hat
    for (std::size_t i = 0; i < predictions.rows.size(); ++i) {
        const int r = loaded.graph.require(predictions.rows[i][c_region]);
        const IsoWeek w{static_cast<int>(parse_long(predictions, i, c_year)),
                        static_cast<int>(parse_long(predictions, i, c_week))};
        rows[{r, w}] = {parse_double(predictions, i, c_deaths),
                        parse_double(predictions, i, c_b),
                        parse_double(predictions, i, c_d)};
    }

    const int bins = static_cast<int>(config.get_long("harvest.bins", 4));
    auto harvest_features = config.get_list("harvest.features");
    if (harvest_features.empty()) harvest_features = {"idx_hot"};

    const std::string grid_path = out_path(config, "paths.edp_grid", "edp_grid.csv");
    CsvWriter w(grid_path, {"feature", "bin_lag", "bin_cur", "observed", "estimated",
                            "count"});
    for (const auto& name : harvest_features) {
        const int cur_col = features.column_index(name);
        const int lag_col = features.column_index("l1_" + name);
        std::vector<double> cur, lag, d, b, dh;
        for (int i = 0; i < features.n_rows(); ++i) {
            const auto it = rows.find({features.region[i], features.week[i]});
            if (it == rows.end())
                throw ValidationError("predictions.csv is missing a feature row");
            cur.push_back(features.values(i, cur_col));
            lag.push_back(features.values(i, lag_col));
            d.push_back(it->second[0]);
            b.push_back(it->second[1]);
            dh.push_back(it->second[2]);
        }
        const EdpGrid grid = harvesting_grid(cur, lag, d, b, dh, bins, name);
        for (int a = 0; a < grid.bins(); ++a)
            for (int c = 0; c < grid.bins(); ++c) {
                w.field(grid.feature);
                w.field(a + 1);
                w.field(c + 1);
                w.field(grid.observed(a, c));
                w.field(grid.estimated(a, c));
                w.field(static_cast<long>(grid.counts(a, c)));
                w.end_row();
            }
    }
    write_manifest(config.get("out_dir", "out"), "harvest", config,
                   {features_path, pred_path}, {grid_path});
}

inline void run_backtest(const RunConfig& config, int jobs) {
    const LoadedPanel loaded = load_panel_from_config(config);
    const FeatureConfig fc = feature_config_from(config);
    const SeriesBundle bundle = build_series(config, loaded.graph, fc);

    BacktestConfig bt;
    bt.features = fc;
    bt.seed = static_cast<std::uint64_t>(config.get_long("seed", 0));
    bt.jobs = jobs;
    bt.params = boost_params_from(config);
    if (config.has("backtest.nrounds")) bt.nrounds_grid = config.get_ints("backtest.nrounds");
    if (config.has("backtest.max_depth")) bt.depth_grid = config.get_ints("backtest.max_depth");
    bt.glm.weeks_per_year =
        config.get_double("calendar.weeks_per_year", kAverageWeeksPerYear);
    bt.glm.exact_week_counts = config.get_bool("calendar.exact_week_counts", false);

    std::vector<std::string> manifest_inputs = bundle.input_files;
    if (config.has("lambda.fixed")) {
        bt.lambda_hat = lambdas_from_list(config.get_doubles("lambda.fixed"));
    } else {
        const std::string fit_path =
            out_path(config, "paths.baseline_fit", "baseline_fit.json");
        require_artifact(fit_path, "baseline");
        bt.lambda_hat = baseline_fit_from_json(load_json(fit_path)).lambdas;
        manifest_inputs.push_back(fit_path);
    }

    const int holdout = static_cast<int>(config.get_long(
        "backtest.holdout_year", loaded.panel.years().back()));
    const BacktestResult result = backtest(loaded.graph, loaded.panel, bundle.series,
                                           holdout, bt);

    const std::string backtest_path = out_path(config, "paths.backtest", "backtest.csv");
    write_backtest_csv(result, backtest_path);
    const std::string series_path =
        out_path(config, "paths.backtest_series", "backtest_series.csv");
    {
        CsvWriter w(series_path,
                    {"region", "iso_year", "iso_week", "deaths", "b_hat", "d_hat"});
        for (const auto& cell : result.cells) {
            w.field(cell.region);
            w.field(cell.week.year);
            w.field(cell.week.week);
            w.field(cell.deaths);
            w.field(cell.b_hat);
            w.field(cell.d_hat);
            w.end_row();
        }
    }
    const PanelFiles files = panel_files(config);
    manifest_inputs.insert(manifest_inputs.end(),
                           {files.deaths, files.population, files.adjacency,
                            files.centroids});
    write_manifest(config.get("out_dir", "out"), "backtest", config, manifest_inputs,
                   {backtest_path, series_path});
}

}  // namespace pipeline
}  // namespace mortenv
