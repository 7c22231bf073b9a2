#pragma once

// Elastic-net logistic and linear regression fitted by coordinate descent,
// k-fold cross-validation with per-fold robust standardization and internal
// alpha selection, and the evaluation metrics reported per fold.
//
// Objective (n rows, mixing l, scale a):
//   linear:   1/(2n) ||y - b - Xw||^2      + a * (l ||w||_1 + (1-l)/2 ||w||^2)
//   logistic: -1/n  sum loglik(y | b + Xw) + a * (l ||w||_1 + (1-l)/2 ||w||^2)

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "scicareer/features.hpp"

namespace scicareer {

enum class ModelKind { logistic, linear };
enum class Tier { baseline, gender, early_achievement, social_support };

std::string_view to_string(ModelKind k);
std::string_view to_string(Tier t);
std::optional<Tier> parse_tier(std::string_view text);

// Each tier's columns strictly contain the previous tier's.
std::vector<std::string> tier_columns(Tier tier);

struct ElasticNetConfig {
    ModelKind kind = ModelKind::linear;
    double lambda_mix = 0.5;
    std::optional<double> alpha;   // fixed penalty scale; selected per fold when empty
    int folds = 10;
    int inner_folds = 5;
    int alpha_grid = 20;
    double alpha_min_ratio = 1e-3;
    double tolerance = 1e-7;
    int max_iterations = 10000;
    bool standardize_target = false;
    double threshold = 0.5;

    // Throws std::invalid_argument on out-of-range values.
    void validate() const;
};

struct ElasticNetFit {
    double intercept = 0.0;
    Eigen::VectorXd coef;
    int iterations = 0;
    bool converged = false;
};

ElasticNetFit fit_elastic_net(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, ModelKind kind, double alpha,
                              double lambda_mix, double tolerance = 1e-7, int max_iterations = 10000,
                              const ElasticNetFit* warm_start = nullptr);

Eigen::VectorXd predict(const ElasticNetFit& fit, const Eigen::MatrixXd& X, ModelKind kind);

// Smallest alpha that zeroes every coefficient (for lambda_mix > 0).
double alpha_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda_mix);
std::vector<double> alpha_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ElasticNetConfig& config);

// fold[i] in [0, folds): a seeded shuffle dealt round-robin.
std::vector<int> fold_assignment(std::size_t n, int folds, std::uint64_t seed);

struct Dataset {
    std::vector<std::string> names;
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<bool> exempt;   // columns excluded from standardization
};

// Columns of the tier; target is "dropout" or "success".
Dataset make_dataset(const FeatureTable& table, Tier tier, std::string_view target);

struct ClassificationMetrics {
    double f1 = 0.0;
    double average_precision = 0.0;
    bool defined = false;   // false when truth has no positives
};

struct RegressionMetrics {
    double mse = 0.0;
    double r2 = 0.0;
    double adjusted_r2 = 0.0;
};

ClassificationMetrics evaluate_classification(std::span<const double> scores, std::span<const int> truth,
                                              double threshold = 0.5);
// Throws std::invalid_argument when n <= k + 1.
RegressionMetrics evaluate_regression(std::span<const double> predicted, std::span<const double> truth, std::size_t k);

struct RegressionReport {
    ModelKind kind = ModelKind::linear;
    std::string tier;
    std::vector<std::string> names;
    std::vector<std::vector<double>> fold_coef;
    std::vector<double> fold_intercept;
    std::vector<double> fold_alpha;
    std::vector<double> coef_mean;
    std::vector<double> coef_sd;
    double intercept_mean = 0.0;
    double alpha_mean = 0.0;
    std::size_t n_obs = 0;
    int folds = 0;
    int folds_used = 0;
    std::vector<std::string> warnings;
    // Fold averages over folds where the metric is defined.
    std::optional<double> f1;
    std::optional<double> average_precision;
    std::optional<double> mse;
    std::optional<double> adjusted_r2;
};

RegressionReport cross_validate(const Dataset& data, const ElasticNetConfig& config, std::uint64_t seed);

RegressionReport dropout_model(const FeatureTable& table, Tier tier, std::uint64_t seed,
                               ElasticNetConfig config = {});
RegressionReport success_model(const FeatureTable& table, Tier tier, bool dropouts_removed, std::uint64_t seed,
                               ElasticNetConfig config = {});

nlohmann::json to_json(const RegressionReport& report);

}  // namespace scicareer
