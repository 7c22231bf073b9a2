#include "scicareer/matthew.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>

#include "scicareer/csv.hpp"

namespace scicareer {

namespace {

constexpr double kR2Tolerance = 1e-12;

// Counts are integers, so snap edges that land within rounding of one.
double snap(double edge) {
    const double r = std::round(edge);
    return std::abs(edge - r) <= 1e-9 * std::max(1.0, r) ? r : edge;
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

LineFit ols(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit f;
    f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    return f;
}

}  // namespace

std::string_view to_string(FitStatus s) {
    switch (s) {
        case FitStatus::ok: return "ok";
        case FitStatus::too_few_pairs: return "too_few_pairs";
        case FitStatus::too_few_bins: return "too_few_bins";
        case FitStatus::degenerate: return "degenerate";
    }
    return "degenerate";
}

std::vector<FeedbackPair> feedback_pairs(std::span<const CareerSeries> series, int t, Measure m) {
    if (t < 2 || t > kCareerLength) throw std::invalid_argument("feedback pairs need 2 <= t <= 15");
    std::vector<FeedbackPair> out;
    for (const auto& s : series) {
        const Count prev = m == Measure::productivity ? s.P_at(t - 1) : s.C_at(t - 1);
        const Count now = m == Measure::productivity ? s.p_at(t) : s.c_at(t);
        if (prev >= 1 && now >= 1) out.push_back({static_cast<double>(prev), static_cast<double>(now)});
    }
    return out;
}

std::vector<FeedbackPair> feedback_pairs(const CorpusView& view, Year cohort, int t, Measure m) {
    const auto series = build_series(view, cohort);
    return feedback_pairs(series, t, m);
}

BinnedData exponential_bins(std::span<const FeedbackPair> pairs, int bins, BinMean mean) {
    if (pairs.empty()) throw std::invalid_argument("cannot bin an empty pair set");
    if (bins < 1) throw std::invalid_argument("bin count must be positive");
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const auto& p : pairs) {
        if (!(p.x_prev >= 1.0)) throw std::invalid_argument("x_prev must be >= 1");
        lo = std::min(lo, p.x_prev);
        hi = std::max(hi, p.x_prev);
    }

    BinnedData out;
    out.degenerate = lo == hi;
    const int k = out.degenerate ? 1 : bins;
    const double log_lo = std::log(lo);
    const double log_span = std::log(hi) - log_lo;
    out.edges.resize(static_cast<std::size_t>(k) + 1);
    for (int i = 0; i <= k; ++i) out.edges[static_cast<std::size_t>(i)] = snap(std::exp(log_lo + log_span * i / k));
    out.edges.front() = lo;
    out.edges.back() = hi;

    struct Acc {
        std::size_t n = 0;
        double log_prev = 0.0;
        double now = 0.0;
    };
    std::vector<Acc> acc(static_cast<std::size_t>(k));
    for (const auto& p : pairs) {
        auto it = std::upper_bound(out.edges.begin(), out.edges.end() - 1, p.x_prev);
        auto idx = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - out.edges.begin() - 1));
        idx = std::min(idx, acc.size() - 1);
        auto& a = acc[idx];
        ++a.n;
        a.log_prev += std::log(p.x_prev);
        a.now += mean == BinMean::arithmetic ? p.x_now : std::log(p.x_now);
    }
    for (std::size_t i = 0; i < acc.size(); ++i) {
        const auto& a = acc[i];
        if (a.n == 0) continue;
        const double n = static_cast<double>(a.n);
        const double now = a.now / n;
        out.points.push_back({static_cast<int>(i), a.n, std::exp(a.log_prev / n),
                              mean == BinMean::arithmetic ? now : std::exp(now)});
    }
    return out;
}

namespace {

ScalingFit fit_binned(std::span<const FeedbackPair> pairs, const BinnedData& binned, double x_min,
                      const FitOptions& options) {
    ScalingFit fit;
    fit.x_min = x_min;
    if (binned.degenerate) {
        fit.status = FitStatus::degenerate;
        return fit;
    }
    std::vector<double> lx;
    std::vector<double> ly;
    for (const auto& b : binned.points) {
        if (b.x_prev >= x_min && b.x_now > 0.0) {
            lx.push_back(std::log(b.x_prev));
            ly.push_back(std::log(b.x_now));
        }
    }
    std::size_t n_obs = 0;
    for (const auto& p : pairs) {
        if (p.x_prev >= x_min) ++n_obs;
    }
    fit.n_obs = n_obs;
    fit.n_bins = lx.size();
    if (n_obs < options.min_pairs) {
        fit.status = FitStatus::too_few_pairs;
        return fit;
    }
    if (lx.size() < options.min_bins) {
        fit.status = FitStatus::too_few_bins;
        return fit;
    }
    const auto line = ols(lx, ly);
    fit.beta = line.slope;
    fit.intercept = line.intercept;

    double mean = 0.0;
    std::size_t m = 0;
    for (const auto& p : pairs) {
        if (p.x_prev >= x_min) {
            mean += std::log(p.x_now);
            ++m;
        }
    }
    mean /= static_cast<double>(m);
    double ss_res = 0.0, ss_tot = 0.0;
    for (const auto& p : pairs) {
        if (p.x_prev < x_min) continue;
        const double y = std::log(p.x_now);
        const double r = y - (fit.intercept + fit.beta * std::log(p.x_prev));
        ss_res += r * r;
        ss_tot += (y - mean) * (y - mean);
    }
    double r2;
    if (ss_tot > 0.0) {
        r2 = 1.0 - ss_res / ss_tot;
    } else {
        r2 = ss_res <= 1e-24 * std::max<double>(1.0, static_cast<double>(m)) ? 1.0 : 0.0;
    }
    fit.r2 = std::clamp(r2, 0.0, 1.0);
    fit.status = FitStatus::ok;
    return fit;
}

}  // namespace

ScalingFit fit_scaling(std::span<const FeedbackPair> pairs, double x_min, const FitOptions& options) {
    if (pairs.empty()) {
        ScalingFit fit;
        fit.x_min = x_min;
        return fit;
    }
    return fit_binned(pairs, exponential_bins(pairs, options.bins, options.bin_mean), x_min, options);
}

CutoffEstimate estimate_cutoff(std::span<const FeedbackPair> pairs, const FitOptions& options) {
    CutoffEstimate est;
    if (pairs.empty()) return est;
    const auto binned = exponential_bins(pairs, options.bins, options.bin_mean);

    std::vector<ScalingFit> fits;
    for (const auto& b : binned.points) {
        const double candidate = binned.edges[static_cast<std::size_t>(b.bin)];
        auto fit = fit_binned(pairs, binned, candidate, options);
        if (!fit.ok()) {
            if (fits.empty()) est.fit = fit;
            break;
        }
        est.candidates.push_back(candidate);
        est.r2.push_back(fit.r2);
        fits.push_back(fit);
    }
    if (fits.empty()) return est;

    std::size_t chosen = 0;
    for (std::size_t i = 1; i + 1 < est.r2.size(); ++i) {
        if (est.r2[i] > est.r2[i - 1] + kR2Tolerance && est.r2[i] + kR2Tolerance >= est.r2[i + 1]) {
            chosen = i;
            break;
        }
    }
    est.chosen = chosen;
    est.fit = fits[chosen];
    if (chosen == 0 && est.r2.size() >= 2 && est.r2.back() > est.r2.front() + kR2Tolerance) {
        bool nondecreasing = true;
        for (std::size_t i = 1; i < est.r2.size(); ++i) nondecreasing &= est.r2[i] + kR2Tolerance >= est.r2[i - 1];
        est.fit.boundary_maximum = nondecreasing;
    }
    return est;
}

ScalingFit fit_cell(std::span<const CareerSeries> series, Year cohort, int t, Measure m, const FitOptions& options) {
    const auto pairs = feedback_pairs(series, t, m);
    ScalingFit fit;
    if (pairs.size() < options.min_pairs) {
        fit.n_obs = pairs.size();
        fit.status = FitStatus::too_few_pairs;
    } else {
        fit = estimate_cutoff(pairs, options).fit;
    }
    fit.cohort = cohort;
    fit.t = t;
    fit.measure = m;
    return fit;
}

void aggregate_envelopes(MatthewReport& report) {
    auto add = [](Envelope& e, double v) {
        if (e.n == 0) {
            e.min = e.max = v;
        } else {
            e.min = std::min(e.min, v);
            e.max = std::max(e.max, v);
        }
        e.mean += v;
        ++e.n;
    };
    report.beta_by_age.clear();
    report.xmin_by_age.clear();
    report.beta_by_cohort.clear();
    report.xmin_by_cohort.clear();
    for (const auto& f : report.fits) {
        if (!f.ok()) continue;
        add(report.beta_by_age[f.t], f.beta);
        add(report.xmin_by_age[f.t], f.x_min);
        add(report.beta_by_cohort[f.cohort], f.beta);
        add(report.xmin_by_cohort[f.cohort], f.x_min);
    }
    for (auto* m : {&report.beta_by_age, &report.xmin_by_age}) {
        for (auto& [k, e] : *m) e.mean /= static_cast<double>(e.n);
    }
    for (auto* m : {&report.beta_by_cohort, &report.xmin_by_cohort}) {
        for (auto& [k, e] : *m) e.mean /= static_cast<double>(e.n);
    }
}

MatthewReport me_report(const CorpusView& view, YearRange cohorts, Measure m, const FitOptions& options) {
    MatthewReport report;
    report.measure = m;
    for (Year y : view.cohort_years()) {
        if (!cohorts.contains(y)) continue;
        const auto series = build_series(view, y);
        for (int t = 2; t <= kCareerLength; ++t) report.fits.push_back(fit_cell(series, y, t, m, options));
    }
    aggregate_envelopes(report);
    return report;
}

nlohmann::json to_json(const ScalingFit& fit) {
    nlohmann::json j = {{"cohort", fit.cohort},
                        {"t", fit.t},
                        {"measure", to_string(fit.measure)},
                        {"status", to_string(fit.status)},
                        {"n_obs", fit.n_obs},
                        {"n_bins", fit.n_bins}};
    if (fit.ok()) {
        j["beta"] = fit.beta;
        j["intercept"] = fit.intercept;
        j["x_min"] = fit.x_min;
        j["r2"] = fit.r2;
        j["boundary_maximum"] = fit.boundary_maximum;
    }
    return j;
}

nlohmann::json to_json(const MatthewReport& report) {
    using nlohmann::json;
    auto env = [](const auto& m) {
        json a = json::array();
        for (const auto& [k, e] : m) a.push_back({{"key", k}, {"mean", e.mean}, {"min", e.min}, {"max", e.max}, {"n", e.n}});
        return a;
    };
    json fits = json::array();
    for (const auto& f : report.fits) fits.push_back(to_json(f));
    return {{"measure", to_string(report.measure)},
            {"fits", std::move(fits)},
            {"beta_by_age", env(report.beta_by_age)},
            {"xmin_by_age", env(report.xmin_by_age)},
            {"beta_by_cohort", env(report.beta_by_cohort)},
            {"xmin_by_cohort", env(report.xmin_by_cohort)}};
}

void write_fit_matrix_csv(const MatthewReport& report, bool x_min, std::ostream& out) {
    std::set<Year> cohorts;
    for (const auto& f : report.fits) cohorts.insert(f.cohort);
    std::vector<std::string> header = {"cohort"};
    for (int t = 2; t <= kCareerLength; ++t) header.push_back("t" + std::to_string(t));
    csv::Writer w(out);
    w.row(header);
    for (Year y : cohorts) {
        std::vector<std::string> row(header.size());
        row[0] = std::to_string(y);
        for (const auto& f : report.fits) {
            if (f.cohort == y && f.ok()) row[static_cast<std::size_t>(f.t - 1)] = csv::format_double(x_min ? f.x_min : f.beta);
        }
        w.row(row);
    }
}

}  // namespace scicareer
