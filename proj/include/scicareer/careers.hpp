#pragma once

// Per-author career time series over career ages 1..15 and field-level
// descriptive statistics.

#include <array>
#include <cstdint>
#include <map>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "scicareer/corpus.hpp"

namespace scicareer {

using Count = std::int64_t;
using AgeArray = std::array<Count, kCareerLength>;

// Ages are 1-based in every accessor; storage is 0-based.
struct CareerSeries {
    AuthorIndex author = 0;
    Year cohort = 0;
    AgeArray p{};   // publications authored in age t
    AgeArray P{};   // cumulative publications
    AgeArray c{};   // citations received in age t by publications of ages <= t
    AgeArray C{};   // cumulative citations
    // cite[a-1][t-1]: citations received in age t by publications authored in age a.
    std::array<AgeArray, kCareerLength> cite{};

    Count p_at(int t) const { return p.at(static_cast<std::size_t>(t - 1)); }
    Count P_at(int t) const { return P.at(static_cast<std::size_t>(t - 1)); }
    Count c_at(int t) const { return c.at(static_cast<std::size_t>(t - 1)); }
    Count C_at(int t) const { return C.at(static_cast<std::size_t>(t - 1)); }
    Count cite_at(int pub_age, int cite_age) const {
        return cite.at(static_cast<std::size_t>(pub_age - 1)).at(static_cast<std::size_t>(cite_age - 1));
    }

    // Recomputes c, P and C from p and cite.
    void accumulate();
};

struct SeriesBuildStats {
    std::size_t authors = 0;
    std::size_t citations_counted = 0;
    std::size_t citations_before_publication = 0;   // dropped as noise
    std::size_t citations_beyond_horizon = 0;       // received after age 15
};

std::vector<CareerSeries> build_series(const CorpusView& view, Year cohort, SeriesBuildStats* stats = nullptr);

struct WindowCounts {
    Count p = 0;
    Count c = 0;
    bool operator==(const WindowCounts&) const = default;
};

// Backward-looking window ending at age t: publications of ages [t-w+1, t]
// and the citations those publications received up to and including age t.
// Throws std::invalid_argument for t < width or t > 15.
WindowCounts window_counts(const CareerSeries& series, int t, int width = 3);

// Length of the initial unbroken run of publishing ages.
int persistence(const CareerSeries& series);

// ---------------------------------------------------------------------------
// Field descriptives
// ---------------------------------------------------------------------------

using GenderCounts = std::array<std::size_t, 3>;   // indexed by Gender

struct CohortDescriptives {
    Year cohort = 0;
    GenderCounts members{};
    GenderCounts dropouts{};

    std::size_t total_members() const { return members[0] + members[1] + members[2]; }
    std::size_t total_dropouts() const { return dropouts[0] + dropouts[1] + dropouts[2]; }
    // NaN when the group is empty.
    double dropout_fraction() const;
    double dropout_fraction(Gender g) const;
};

struct CcdfPoint {
    Count value = 0;
    double fraction_at_least = 0.0;
};

struct FieldDescriptives {
    std::vector<CohortDescriptives> cohorts;
    std::map<Year, double> mean_team_size;                        // calendar year -> authors per paper
    std::array<std::array<std::size_t, kCareerLength>, 3> persistence_histogram{};   // [gender][k-1]
    std::vector<CcdfPoint> ccdf_productivity;                     // P(15)
    std::vector<CcdfPoint> ccdf_impact;                           // C(15)
};

// Empirical complementary CDF at each distinct value.
std::vector<CcdfPoint> empirical_ccdf(std::vector<Count> values);

// Persistence and CCDFs use cohort members with a full 15-age window only.
FieldDescriptives field_descriptives(const Corpus& corpus, YearRange cohorts, int dropout_gap = 10);

nlohmann::json to_json(const FieldDescriptives& d);
void write_series_csv(const Corpus& corpus, const std::vector<CareerSeries>& series, std::ostream& out,
                      bool header = true);
void write_ccdf_csv(const std::vector<CcdfPoint>& ccdf, std::ostream& out);

}  // namespace scicareer
