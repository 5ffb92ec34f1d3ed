#pragma once

// JSON serialization of the fitted artifacts: the spatially smoothed
// baseline (coefficients, smoothing parameters, UBRE trace) and the
// boosted model (nested tree nodes, schema, loss trace, params).

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "mortenv/baseline.hpp"
#include "mortenv/boost.hpp"
#include "mortenv/errors.hpp"

namespace mortenv {

inline nlohmann::json baseline_fit_to_json(const BaselineFit& fit) {
    nlohmann::json j;
    j["regions"] = fit.regions;
    nlohmann::json beta = nlohmann::json::array();
    for (Eigen::Index r = 0; r < fit.beta.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int p = 0; p < kBaselineCoefs; ++p) row.push_back(fit.beta(r, p));
        beta.push_back(row);
    }
    j["beta"] = beta;
    j["lambda"] = fit.lambdas;
    j["edf"] = fit.edf;
    j["deviance"] = fit.deviance;
    j["n_cells"] = fit.n_cells;
    if (fit.n_cells > 0) j["ubre"] = ubre_score(fit.deviance, fit.n_cells, fit.edf);
    j["ubre_formula"] = "deviance/n - 1 + 2*edf/n";
    j["iterations"] = fit.iterations;
    j["first_year"] = fit.first_year;
    j["weeks_per_year"] = fit.weeks_per_year;
    j["exact_week_counts"] = fit.exact_week_counts;
    j["source_years"] = fit.source_years;
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& eval : fit.ubre_trace)
        trace.push_back({{"lambda", eval.lambdas},
                         {"ubre", eval.ubre},
                         {"deviance", eval.deviance},
                         {"edf", eval.edf}});
    j["ubre_trace"] = trace;
    return j;
}

inline BaselineFit baseline_fit_from_json(const nlohmann::json& j) {
    BaselineFit fit;
    fit.regions = j.at("regions").get<std::vector<std::string>>();
    const auto& beta = j.at("beta");
    fit.beta.resize(static_cast<Eigen::Index>(beta.size()), kBaselineCoefs);
    for (std::size_t r = 0; r < beta.size(); ++r)
        for (int p = 0; p < kBaselineCoefs; ++p)
            fit.beta(static_cast<Eigen::Index>(r), p) = beta[r][p].get<double>();
    const auto lambda = j.at("lambda").get<std::vector<double>>();
    if (lambda.size() != kBaselineCoefs)
        throw ValidationError("baseline fit JSON: lambda must have 6 entries");
    std::copy(lambda.begin(), lambda.end(), fit.lambdas.begin());
    fit.edf = j.at("edf").get<double>();
    fit.deviance = j.at("deviance").get<double>();
    fit.n_cells = j.value("n_cells", 0L);
    fit.iterations = j.value("iterations", 0);
    fit.first_year = j.at("first_year").get<int>();
    fit.weeks_per_year = j.at("weeks_per_year").get<double>();
    fit.exact_week_counts = j.value("exact_week_counts", false);
    for (const int y : j.value("source_years", std::vector<int>{}))
        fit.source_years.insert(y);
    return fit;
}

// ---------------------------------------------------------------------------

namespace iodetail {

inline nlohmann::json node_to_json(const RegressionTree& tree, int index) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(index)];
    if (node.feature < 0) return {{"value", node.value}};
    return {{"feature", node.feature},
            {"threshold", node.threshold},
            {"gain", node.gain},
            {"left", node_to_json(tree, node.left)},
            {"right", node_to_json(tree, node.right)}};
}

inline int node_from_json(const nlohmann::json& j, RegressionTree& tree) {
    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (j.contains("feature")) {
        tree.nodes[index].feature = j.at("feature").get<int>();
        tree.nodes[index].threshold = j.at("threshold").get<double>();
        tree.nodes[index].gain = j.value("gain", 0.0);
        const int left = node_from_json(j.at("left"), tree);
        const int right = node_from_json(j.at("right"), tree);
        tree.nodes[index].left = left;
        tree.nodes[index].right = right;
    } else {
        tree.nodes[index].value = j.at("value").get<double>();
    }
    return index;
}

}  // namespace iodetail

inline nlohmann::json boost_model_to_json(const BoostedModel& model) {
    nlohmann::json j;
    j["eta"] = model.eta;
    j["schema"] = model.schema;
    j["train_loss"] = model.train_loss;
    j["params"] = {{"nrounds", model.params.nrounds},
                   {"eta", model.params.eta},
                   {"max_depth", model.params.max_depth},
                   {"subsample", model.params.subsample},
                   {"colsample_bytree", model.params.colsample_bytree},
                   {"min_child_weight", model.params.min_child_weight},
                   {"seed", model.params.seed}};
    j["source_years"] = model.source_years;
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : model.trees) trees.push_back(iodetail::node_to_json(tree, 0));
    j["trees"] = trees;
    return j;
}

inline BoostedModel boost_model_from_json(const nlohmann::json& j) {
    BoostedModel model;
    model.eta = j.at("eta").get<double>();
    model.schema = j.at("schema").get<std::vector<std::string>>();
    model.train_loss = j.value("train_loss", std::vector<double>{});
    const auto& params = j.at("params");
    model.params.nrounds = params.at("nrounds").get<int>();
    model.params.eta = params.at("eta").get<double>();
    model.params.max_depth = params.at("max_depth").get<int>();
    model.params.subsample = params.at("subsample").get<double>();
    model.params.colsample_bytree = params.at("colsample_bytree").get<double>();
    model.params.min_child_weight = params.at("min_child_weight").get<double>();
    model.params.seed = params.at("seed").get<std::uint64_t>();
    for (const int y : j.value("source_years", std::vector<int>{}))
        model.source_years.insert(y);
    for (const auto& tree_json : j.at("trees")) {
        RegressionTree tree;
        iodetail::node_from_json(tree_json, tree);
        model.trees.push_back(std::move(tree));
    }
    return model;
}

inline void save_json(const nlohmann::json& j, const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path);
    out << j.dump(2) << "\n";
}

inline nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ValidationError(path + ": invalid JSON (" + e.what() + ")");
    }
    return j;
}

}  // namespace mortenv
