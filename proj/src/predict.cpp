#include "scicareer/predict.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace scicareer {

std::string_view to_string(ModelKind k) { return k == ModelKind::logistic ? "logistic" : "linear"; }

std::string_view to_string(Tier t) {
    switch (t) {
        case Tier::baseline: return "baseline";
        case Tier::gender: return "gender";
        case Tier::early_achievement: return "early_achievement";
        case Tier::social_support: return "social_support";
    }
    return "baseline";
}

std::optional<Tier> parse_tier(std::string_view text) {
    for (Tier t : {Tier::baseline, Tier::gender, Tier::early_achievement, Tier::social_support}) {
        if (to_string(t) == text) return t;
    }
    return std::nullopt;
}

std::vector<std::string> tier_columns(Tier tier) {
    std::vector<std::string> cols = {"cohort"};
    if (tier == Tier::baseline) return cols;
    cols.insert(cols.end(), {"male", "female", "undetected"});
    if (tier == Tier::gender) return cols;
    cols.insert(cols.end(), {"productivity", "productivity_1st", "impact", "top_source"});
    if (tier == Tier::early_achievement) return cols;
    cols.insert(cols.end(), {"collaboration_network", "team_size", "senior_support"});
    return cols;
}

void ElasticNetConfig::validate() const {
    if (!(lambda_mix >= 0.0 && lambda_mix <= 1.0)) throw std::invalid_argument("lambda_mix must lie in [0, 1]");
    if (alpha && !(*alpha >= 0.0)) throw std::invalid_argument("alpha must be nonnegative");
    if (folds < 2) throw std::invalid_argument("need at least 2 folds");
    if (inner_folds < 2) throw std::invalid_argument("need at least 2 inner folds");
    if (alpha_grid < 1) throw std::invalid_argument("alpha grid must be non-empty");
}

// ---------------------------------------------------------------------------
// Coordinate descent
// ---------------------------------------------------------------------------

namespace {

double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

double sigmoid(double eta) {
    if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

// Weighted penalized least squares by cyclic coordinate descent, updating
// (b, w) in place. Returns the number of sweeps.
int weighted_cd(const Eigen::MatrixXd& X, const Eigen::VectorXd& z, const Eigen::VectorXd& wt, double alpha,
                double lambda_mix, double tolerance, int max_sweeps, double& b, Eigen::VectorXd& w, bool& converged) {
    const auto n = static_cast<double>(X.rows());
    const Eigen::Index p = X.cols();
    const double l1 = alpha * lambda_mix;
    const double l2 = alpha * (1.0 - lambda_mix);
    const double wsum = wt.sum();

    Eigen::VectorXd xsq(p);
    for (Eigen::Index j = 0; j < p; ++j) xsq(j) = X.col(j).cwiseAbs2().dot(wt) / n;
    Eigen::VectorXd r = z - X * w - Eigen::VectorXd::Constant(X.rows(), b);

    converged = false;
    int sweep = 0;
    while (sweep < max_sweeps) {
        ++sweep;
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (xsq(j) <= 0.0) {
                w(j) = 0.0;
                continue;
            }
            const double old = w(j);
            const double rho = X.col(j).cwiseProduct(wt).dot(r) / n + xsq(j) * old;
            const double updated = soft_threshold(rho, l1) / (xsq(j) + l2);
            if (updated != old) {
                r.noalias() -= (updated - old) * X.col(j);
                w(j) = updated;
                max_change = std::max(max_change, std::sqrt(xsq(j)) * std::abs(updated - old));
            }
        }
        const double shift = r.dot(wt) / wsum;
        b += shift;
        r.array() -= shift;
        max_change = std::max(max_change, std::abs(shift) * std::sqrt(wsum / n));
        if (max_change < tolerance) {
            converged = true;
            break;
        }
    }
    return sweep;
}

}  // namespace

ElasticNetFit fit_elastic_net(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, ModelKind kind, double alpha,
                              double lambda_mix, double tolerance, int max_iterations, const ElasticNetFit* warm_start) {
    if (X.rows() != y.size()) throw std::invalid_argument("design matrix and target differ in length");
    if (X.rows() == 0) throw std::invalid_argument("cannot fit on zero rows");
    ElasticNetFit fit;
    fit.coef = Eigen::VectorXd::Zero(X.cols());
    if (warm_start && warm_start->coef.size() == X.cols()) {
        fit.coef = warm_start->coef;
        fit.intercept = warm_start->intercept;
    } else if (kind == ModelKind::linear) {
        fit.intercept = y.mean();
    } else {
        const double m = std::clamp(y.mean(), 1e-6, 1.0 - 1e-6);
        fit.intercept = std::log(m / (1.0 - m));
    }

    if (kind == ModelKind::linear) {
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(X.rows());
        fit.iterations =
            weighted_cd(X, y, ones, alpha, lambda_mix, tolerance, max_iterations, fit.intercept, fit.coef, fit.converged);
        return fit;
    }

    // Logistic: iteratively reweighted least squares around the current fit.
    int budget = max_iterations;
    fit.converged = false;
    while (budget > 0) {
        const Eigen::VectorXd eta = (X * fit.coef).array() + fit.intercept;
        Eigen::VectorXd prob(X.rows());
        Eigen::VectorXd wt(X.rows());
        Eigen::VectorXd z(X.rows());
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            prob(i) = sigmoid(eta(i));
            wt(i) = std::max(prob(i) * (1.0 - prob(i)), 1e-5);
            z(i) = eta(i) + (y(i) - prob(i)) / wt(i);
        }
        const Eigen::VectorXd before = fit.coef;
        const double b_before = fit.intercept;
        bool inner_converged = false;
        budget -= weighted_cd(X, z, wt, alpha, lambda_mix, tolerance, budget, fit.intercept, fit.coef, inner_converged);
        ++fit.iterations;
        double change = std::abs(fit.intercept - b_before);
        if (X.cols() > 0) change = std::max(change, (fit.coef - before).cwiseAbs().maxCoeff());
        if (inner_converged && change < 10.0 * tolerance) {
            fit.converged = true;
            break;
        }
    }
    return fit;
}

Eigen::VectorXd predict(const ElasticNetFit& fit, const Eigen::MatrixXd& X, ModelKind kind) {
    Eigen::VectorXd eta = (X * fit.coef).array() + fit.intercept;
    if (kind == ModelKind::logistic) {
        for (Eigen::Index i = 0; i < eta.size(); ++i) eta(i) = sigmoid(eta(i));
    }
    return eta;
}

double alpha_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda_mix) {
    const Eigen::VectorXd centered = y.array() - y.mean();
    const double grad = X.cols() ? (X.transpose() * centered).cwiseAbs().maxCoeff() / static_cast<double>(X.rows()) : 0.0;
    return grad / std::max(lambda_mix, 1e-3);
}

std::vector<double> alpha_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ElasticNetConfig& config) {
    const double top = std::max(alpha_max(X, y, config.lambda_mix), 1e-12);
    std::vector<double> path;
    const int k = config.alpha_grid;
    for (int i = 0; i < k; ++i) {
        const double frac = k == 1 ? 0.0 : static_cast<double>(i) / (k - 1);
        path.push_back(top * std::pow(config.alpha_min_ratio, frac));
    }
    return path;
}

std::vector<int> fold_assignment(std::size_t n, int folds, std::uint64_t seed) {
    if (folds < 1) throw std::invalid_argument("fold count must be positive");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng() % i);
        std::swap(order[i - 1], order[j]);
    }
    std::vector<int> fold(n);
    for (std::size_t pos = 0; pos < n; ++pos) fold[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(folds));
    return fold;
}

Dataset make_dataset(const FeatureTable& table, Tier tier, std::string_view target) {
    Dataset d;
    d.names = tier_columns(tier);
    const auto n = static_cast<Eigen::Index>(table.rows.size());
    d.X.resize(n, static_cast<Eigen::Index>(d.names.size()));
    d.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = table.rows[static_cast<std::size_t>(i)];
        for (std::size_t j = 0; j < d.names.size(); ++j) d.X(i, static_cast<Eigen::Index>(j)) = feature_value(row, d.names[j]);
        d.y(i) = feature_value(row, target);
    }
    for (const auto& name : d.names) d.exempt.push_back(is_binary_column(name));
    return d;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

ClassificationMetrics evaluate_classification(std::span<const double> scores, std::span<const int> truth,
                                              double threshold) {
    if (scores.size() != truth.size()) throw std::invalid_argument("scores and truth differ in length");
    ClassificationMetrics m;
    std::size_t positives = 0;
    for (int t : truth) positives += t != 0;
    if (positives == 0) {
        m.f1 = m.average_precision = std::numeric_limits<double>::quiet_NaN();
        return m;
    }
    m.defined = true;

    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] >= threshold;
        if (pred && truth[i]) ++tp;
        else if (pred) ++fp;
        else if (truth[i]) ++fn;
    }
    m.f1 = tp == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);

    // Sum over distinct score thresholds of (recall gain) * precision.
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    double ap = 0.0;
    double prev_recall = 0.0;
    std::size_t seen = 0, hits = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            hits += truth[order[j]] != 0;
            ++j;
        }
        seen = j;
        const double recall = static_cast<double>(hits) / static_cast<double>(positives);
        const double precision = static_cast<double>(hits) / static_cast<double>(seen);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    m.average_precision = ap;
    return m;
}

RegressionMetrics evaluate_regression(std::span<const double> predicted, std::span<const double> truth, std::size_t k) {
    if (predicted.size() != truth.size()) throw std::invalid_argument("predicted and truth differ in length");
    const std::size_t n = truth.size();
    if (n <= k + 1) throw std::invalid_argument("adjusted R^2 needs n > k + 1");
    const double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(n);
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ss_res += (truth[i] - predicted[i]) * (truth[i] - predicted[i]);
        ss_tot += (truth[i] - mean) * (truth[i] - mean);
    }
    RegressionMetrics m;
    m.mse = ss_res / static_cast<double>(n);
    m.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
    m.adjusted_r2 = 1.0 - (1.0 - m.r2) * static_cast<double>(n - 1) / static_cast<double>(n - k - 1);
    return m;
}

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& X, const std::vector<Eigen::Index>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
    return out;
}

Eigen::VectorXd take_rows(const Eigen::VectorXd& y, const std::vector<Eigen::Index>& rows) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = y(rows[i]);
    return out;
}

double validation_loss(const ElasticNetFit& fit, const Eigen::MatrixXd& X, const Eigen::VectorXd& y, ModelKind kind) {
    const Eigen::VectorXd pred = predict(fit, X, kind);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (kind == ModelKind::linear) {
            loss += (y(i) - pred(i)) * (y(i) - pred(i));
        } else {
            const double p = std::clamp(pred(i), 1e-12, 1.0 - 1e-12);
            loss -= y(i) > 0.5 ? std::log(p) : std::log(1.0 - p);
        }
    }
    return loss / static_cast<double>(y.size());
}

bool single_class(const Eigen::VectorXd& y) {
    for (Eigen::Index i = 1; i < y.size(); ++i) {
        if (y(i) != y(0)) return false;
    }
    return true;
}

double select_alpha(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ElasticNetConfig& config,
                    std::uint64_t seed) {
    const auto path = alpha_path(X, y, config);
    const auto inner = fold_assignment(static_cast<std::size_t>(X.rows()), config.inner_folds, seed);
    std::vector<double> loss(path.size(), 0.0);
    for (int f = 0; f < config.inner_folds; ++f) {
        std::vector<Eigen::Index> tr, va;
        for (Eigen::Index i = 0; i < X.rows(); ++i) (inner[static_cast<std::size_t>(i)] == f ? va : tr).push_back(i);
        if (tr.empty() || va.empty()) continue;
        const auto Xtr = take_rows(X, tr);
        const auto ytr = take_rows(y, tr);
        const auto Xva = take_rows(X, va);
        const auto yva = take_rows(y, va);
        if (config.kind == ModelKind::logistic && single_class(ytr)) continue;
        ElasticNetFit warm;
        for (std::size_t a = 0; a < path.size(); ++a) {
            warm = fit_elastic_net(Xtr, ytr, config.kind, path[a], config.lambda_mix, config.tolerance,
                                   config.max_iterations, a == 0 ? nullptr : &warm);
            loss[a] += validation_loss(warm, Xva, yva, config.kind);
        }
    }
    const auto best = std::min_element(loss.begin(), loss.end()) - loss.begin();
    return path[static_cast<std::size_t>(best)];
}

double sample_sd(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

RegressionReport cross_validate(const Dataset& data, const ElasticNetConfig& config, std::uint64_t seed) {
    config.validate();
    const auto n = static_cast<std::size_t>(data.X.rows());
    const auto p = data.X.cols();
    if (static_cast<std::size_t>(data.y.size()) != n) throw std::invalid_argument("dataset target length mismatch");
    if (n < static_cast<std::size_t>(config.folds)) throw std::invalid_argument("fewer rows than folds");
    if (!data.X.allFinite() || !data.y.allFinite()) throw std::invalid_argument("dataset has missing values");

    RegressionReport report;
    report.kind = config.kind;
    report.names = data.names;
    report.n_obs = n;
    report.folds = config.folds;

    const auto fold = fold_assignment(n, config.folds, seed);
    std::vector<double> f1s, aps, mses, r2s;
    for (int f = 0; f < config.folds; ++f) {
        std::vector<Eigen::Index> tr, te;
        std::vector<std::size_t> tr_rows;
        for (std::size_t i = 0; i < n; ++i) {
            if (fold[i] == f) {
                te.push_back(static_cast<Eigen::Index>(i));
            } else {
                tr.push_back(static_cast<Eigen::Index>(i));
                tr_rows.push_back(i);
            }
        }
        Eigen::MatrixXd X = data.X;
        Eigen::VectorXd y = data.y;
        for (Eigen::Index j = 0; j < p; ++j) {
            const bool exempt = static_cast<std::size_t>(j) < data.exempt.size() && data.exempt[static_cast<std::size_t>(j)];
            if (exempt) continue;
            std::vector<double> col(X.col(j).data(), X.col(j).data() + X.rows());
            const auto scale = fit_column_scale(data.names.at(static_cast<std::size_t>(j)), col, tr_rows);
            for (Eigen::Index i = 0; i < X.rows(); ++i) X(i, j) = scale.apply(X(i, j));
        }
        if (config.standardize_target) {
            std::vector<double> col(y.data(), y.data() + y.size());
            const auto scale = fit_column_scale("target", col, tr_rows);
            for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = scale.apply(y(i));
        }
        const auto Xtr = take_rows(X, tr);
        const auto ytr = take_rows(y, tr);
        const auto Xte = take_rows(X, te);
        const auto yte = take_rows(y, te);
        if (config.kind == ModelKind::logistic && single_class(ytr)) {
            report.warnings.push_back("fold " + std::to_string(f) + " skipped: single class in training rows");
            continue;
        }

        const double alpha = config.alpha ? *config.alpha : select_alpha(Xtr, ytr, config, seed + 1000003ULL * (f + 1));
        const auto fit = fit_elastic_net(Xtr, ytr, config.kind, alpha, config.lambda_mix, config.tolerance,
                                         config.max_iterations);
        if (!fit.converged) report.warnings.push_back("fold " + std::to_string(f) + " did not converge");

        const Eigen::VectorXd pred = predict(fit, Xte, config.kind);
        std::vector<double> pv(pred.data(), pred.data() + pred.size());
        if (config.kind == ModelKind::logistic) {
            std::vector<int> truth;
            for (Eigen::Index i = 0; i < yte.size(); ++i) truth.push_back(yte(i) > 0.5 ? 1 : 0);
            const auto m = evaluate_classification(pv, truth, config.threshold);
            if (m.defined) {
                f1s.push_back(m.f1);
                aps.push_back(m.average_precision);
            } else {
                report.warnings.push_back("fold " + std::to_string(f) + ": no positives in held-out rows");
            }
        } else {
            std::vector<double> tv(yte.data(), yte.data() + yte.size());
            if (tv.size() > static_cast<std::size_t>(p) + 1) {
                const auto m = evaluate_regression(pv, tv, static_cast<std::size_t>(p));
                mses.push_back(m.mse);
                r2s.push_back(m.adjusted_r2);
            }
        }
        report.fold_coef.emplace_back(fit.coef.data(), fit.coef.data() + fit.coef.size());
        report.fold_intercept.push_back(fit.intercept);
        report.fold_alpha.push_back(alpha);
    }

    report.folds_used = static_cast<int>(report.fold_coef.size());
    if (report.folds_used > 0) {
        const double k = report.folds_used;
        report.coef_mean.assign(static_cast<std::size_t>(p), 0.0);
        report.coef_sd.assign(static_cast<std::size_t>(p), 0.0);
        for (std::size_t j = 0; j < static_cast<std::size_t>(p); ++j) {
            std::vector<double> v;
            for (const auto& c : report.fold_coef) v.push_back(c[j]);
            report.coef_mean[j] = std::accumulate(v.begin(), v.end(), 0.0) / k;
            report.coef_sd[j] = sample_sd(v, report.coef_mean[j]);
        }
        report.intercept_mean = std::accumulate(report.fold_intercept.begin(), report.fold_intercept.end(), 0.0) / k;
        report.alpha_mean = std::accumulate(report.fold_alpha.begin(), report.fold_alpha.end(), 0.0) / k;
    }
    auto avg = [](const std::vector<double>& v) -> std::optional<double> {
        if (v.empty()) return std::nullopt;
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    report.f1 = avg(f1s);
    report.average_precision = avg(aps);
    report.mse = avg(mses);
    report.adjusted_r2 = avg(r2s);
    return report;
}

RegressionReport dropout_model(const FeatureTable& table, Tier tier, std::uint64_t seed, ElasticNetConfig config) {
    config.kind = ModelKind::logistic;
    config.standardize_target = false;
    auto report = cross_validate(make_dataset(table, tier, "dropout"), config, seed);
    report.tier = to_string(tier);
    return report;
}

RegressionReport success_model(const FeatureTable& table, Tier tier, bool dropouts_removed, std::uint64_t seed,
                               ElasticNetConfig config) {
    config.kind = ModelKind::linear;
    config.standardize_target = true;
    FeatureTable filtered;
    const FeatureTable* source = &table;
    if (dropouts_removed) {
        filtered.early_end = table.early_end;
        for (const auto& r : table.rows) {
            if (!r.dropout) filtered.rows.push_back(r);
        }
        source = &filtered;
    }
    auto report = cross_validate(make_dataset(*source, tier, "success"), config, seed);
    report.tier = std::string(to_string(tier)) + (dropouts_removed ? "+dropouts_removed" : "");
    return report;
}

nlohmann::json to_json(const RegressionReport& r) {
    using nlohmann::json;
    json coefs = json::array();
    for (std::size_t j = 0; j < r.names.size(); ++j) {
        json c = {{"name", r.names[j]}};
        if (j < r.coef_mean.size()) {
            c["mean"] = r.coef_mean[j];
            c["sd"] = r.coef_sd[j];
        }
        coefs.push_back(std::move(c));
    }
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json metrics;
    if (r.kind == ModelKind::logistic) {
        metrics = {{"f1", opt(r.f1)}, {"average_precision", opt(r.average_precision)}};
    } else {
        metrics = {{"mse", opt(r.mse)}, {"adjusted_r2", opt(r.adjusted_r2)}};
    }
    return {{"model", to_string(r.kind)},  {"tier", r.tier},
            {"n_obs", r.n_obs},            {"folds", r.folds},
            {"folds_used", r.folds_used},  {"coefficients", std::move(coefs)},
            {"intercept_mean", r.intercept_mean}, {"alpha_mean", r.alpha_mean},
            {"fold_alpha", r.fold_alpha},  {"fold_coefficients", r.fold_coef},
            {"metrics", std::move(metrics)}, {"warnings", r.warnings}};
}

}  // namespace scicareer
