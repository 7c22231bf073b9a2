#pragma once

// Reproductive feedback: fit x_now ~ x_prev^beta for x_prev >= x_min on
// exponentially binned data, choosing x_min at the first maximum of the
// unbinned R^2.

#include <cstddef>
#include <map>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scicareer/careers.hpp"
#include "scicareer/inequality.hpp"

namespace scicareer {

struct FeedbackPair {
    double x_prev = 0.0;
    double x_now = 0.0;
    bool operator==(const FeedbackPair&) const = default;
};

// How a bin's x_now values are aggregated. x_prev always uses the geometric mean.
enum class BinMean { arithmetic, geometric };

struct FitOptions {
    int bins = 20;
    std::size_t min_pairs = 50;
    std::size_t min_bins = 3;
    BinMean bin_mean = BinMean::arithmetic;
};

enum class FitStatus { ok, too_few_pairs, too_few_bins, degenerate };
std::string_view to_string(FitStatus s);

// Productivity: (P(t-1), p(t)) for authors with p(t) >= 1 and P(t-1) >= 1.
// Impact: (C(t-1), c(t)) with c(t) >= 1 and C(t-1) >= 1. Requires t >= 2.
std::vector<FeedbackPair> feedback_pairs(std::span<const CareerSeries> series, int t, Measure m);
std::vector<FeedbackPair> feedback_pairs(const CorpusView& view, Year cohort, int t, Measure m);

struct BinnedPoint {
    int bin = 0;             // index into the edge list
    std::size_t count = 0;
    double x_prev = 0.0;     // geometric mean
    double x_now = 0.0;      // per BinMean
};

struct BinnedData {
    std::vector<double> edges;          // bins + 1 geometric edges; bin i is [edges[i], edges[i+1])
    std::vector<BinnedPoint> points;    // non-empty bins only, ascending
    bool degenerate = false;            // all x_prev identical
};

// Edges run geometrically from min(x_prev) to max(x_prev); the last bin is
// closed on the right. Throws std::invalid_argument for empty input or x_prev < 1.
BinnedData exponential_bins(std::span<const FeedbackPair> pairs, int bins = 20, BinMean mean = BinMean::arithmetic);

struct ScalingFit {
    Year cohort = 0;
    int t = 0;
    Measure measure = Measure::productivity;
    FitStatus status = FitStatus::too_few_pairs;
    double beta = 0.0;
    double intercept = 0.0;   // natural-log space
    double x_min = 1.0;
    double r2 = 0.0;          // log space, unbinned pairs above x_min, clamped to [0, 1]
    std::size_t n_obs = 0;
    std::size_t n_bins = 0;
    bool boundary_maximum = false;   // R^2 still rising at the last admissible cutoff

    bool ok() const { return status == FitStatus::ok; }
};

// OLS of log(x_now) on log(x_prev) over binned points with x_prev >= x_min.
ScalingFit fit_scaling(std::span<const FeedbackPair> pairs, double x_min, const FitOptions& options = {});

struct CutoffEstimate {
    ScalingFit fit;                    // fit at the chosen cutoff
    std::vector<double> candidates;    // admissible cutoffs, ascending
    std::vector<double> r2;            // R^2 at each candidate
    std::size_t chosen = 0;
};

// Scans bin lower edges ascending and returns the first interior local
// maximum of R^2 (strictly above its predecessor, not below its successor);
// falls back to the smallest candidate when there is none.
CutoffEstimate estimate_cutoff(std::span<const FeedbackPair> pairs, const FitOptions& options = {});

struct Envelope {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::size_t n = 0;
};

struct MatthewReport {
    Measure measure = Measure::productivity;
    std::vector<ScalingFit> fits;        // one per (cohort, t), t in [2, 15]
    std::map<int, Envelope> beta_by_age;       // over cohorts at fixed t
    std::map<int, Envelope> xmin_by_age;
    std::map<Year, Envelope> beta_by_cohort;   // over t at fixed cohort
    std::map<Year, Envelope> xmin_by_cohort;
};

ScalingFit fit_cell(std::span<const CareerSeries> series, Year cohort, int t, Measure m, const FitOptions& options = {});
MatthewReport me_report(const CorpusView& view, YearRange cohorts, Measure m, const FitOptions& options = {});
// Fills the envelopes from report.fits (non-ok fits are gaps).
void aggregate_envelopes(MatthewReport& report);

nlohmann::json to_json(const ScalingFit& fit);
nlohmann::json to_json(const MatthewReport& report);
// Rows are cohorts, columns career ages 2..15; empty cells for gaps.
void write_fit_matrix_csv(const MatthewReport& report, bool x_min, std::ostream& out);

}  // namespace scicareer
