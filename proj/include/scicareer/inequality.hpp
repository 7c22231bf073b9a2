#pragma once

// Individual inequality (Gini coefficient) and gender inequality
// (Mann-Whitney U with Cliff's d) per cohort and career age.

#include <array>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scicareer/careers.hpp"
#include "scicareer/corpus.hpp"

namespace scicareer {

enum class Measure { productivity, impact };
enum class Counting { cumulative, window };

std::string_view to_string(Measure m);
std::string_view to_string(Counting c);

// Raised when a statistic has no defined value for the input (e.g. the Gini
// of an all-zero vector).
class UndefinedResult : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Mean absolute pairwise difference over twice the mean, via the sorted
// O(n log n) form. Requires n >= 2, nonnegative values and a positive sum.
double gini(std::span<const double> values);

// x_i(t) for each series: P(t)/C(t) for cumulative counting, the windowed
// p/c counts otherwise.
std::vector<double> measure_values(std::span<const CareerSeries> series, Measure m, Counting counting, int t,
                                   int window = 3);

struct GiniSeries {
    Year cohort = 0;
    Measure measure = Measure::productivity;
    Counting counting = Counting::cumulative;
    std::size_t authors = 0;
    std::array<std::optional<double>, kCareerLength> values{};   // absent when undefined at t
};

// Throws std::invalid_argument when the cohort has fewer than 2 authors.
GiniSeries gini_series(std::span<const CareerSeries> series, Year cohort, Measure m, Counting counting,
                       int window = 3);
GiniSeries gini_series(const CorpusView& view, Year cohort, Measure m, Counting counting, int window = 3);

void write_gini_csv(std::span<const GiniSeries> rows, const CorpusView& view, std::ostream& out, bool header = true);

// ---------------------------------------------------------------------------
// Gender inequality
// ---------------------------------------------------------------------------

struct MannWhitney {
    std::size_t n_m = 0;
    std::size_t n_f = 0;
    double rank_sum_m = 0.0;   // R_m with midranks for ties
    double u = 0.0;            // R_m - n_m(n_m+1)/2
    double z = 0.0;
    double p = 1.0;            // two-sided, tie-corrected normal approximation with continuity correction
};

// Throws std::invalid_argument if either group is empty.
MannWhitney mann_whitney_u(std::span<const double> male, std::span<const double> female);

// 2U/(n_m n_f) - 1: +1 when every male value exceeds every female value.
double cliffs_d(std::span<const double> male, std::span<const double> female);
double cliffs_d(const MannWhitney& test);

struct GenderTestCell {
    Year cohort = 0;
    int t = 0;
    bool computable = false;
    std::size_t n_m = 0;
    std::size_t n_f = 0;
    double rank_sum_m = 0.0;
    double u = 0.0;
    double p = 1.0;
    double d = 0.0;
    bool significant = false;
};

struct GenderGridSummary {
    std::size_t cells = 0;
    std::size_t computable = 0;
    std::size_t significant = 0;
    double fraction_significant = 0.0;   // of computable cells
};

struct GenderGrid {
    Measure measure = Measure::productivity;
    double alpha = 0.05;
    std::vector<GenderTestCell> cells;   // ordered by (cohort, t)
    GenderGridSummary summary;
};

// Cumulative counts P(t) or C(t) of male vs female cohort members; authors of
// undetected gender are excluded. Cells with an empty group are not computable.
GenderTestCell gender_test(std::span<const CareerSeries> series, const Corpus& corpus, Year cohort, int t,
                           Measure m, double alpha = 0.05);
GenderGrid gender_grid(const CorpusView& view, YearRange cohorts, Measure m, double alpha = 0.05);

// Pearson correlation of Cliff's d between two grids over the cells that are
// significant in both. Empty when fewer than 3 such cells or zero variance.
std::optional<double> gender_grid_correlation(const GenderGrid& a, const GenderGrid& b);

void write_gender_grid_csv(const GenderGrid& grid, std::ostream& out, bool header = true);
nlohmann::json to_json(const GenderGridSummary& s);

}  // namespace scicareer
