#pragma once

// Early-career feature matrix, dependent variables (dropout, citation
// success) and robust median/IQR standardization.

#include <array>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scicareer/careers.hpp"
#include "scicareer/corpus.hpp"

namespace scicareer {

struct FeatureRow {
    AuthorIndex author = 0;
    std::string author_id;
    Year cohort = 0;
    int male = 0;
    int female = 0;
    int undetected = 0;
    Count productivity = 0;       // P(t_e)
    Count productivity_1st = 0;   // first-author publications up to t_e
    Count impact = 0;             // C(t_e)
    int top_source = 0;
    int top_source_quartile = 0;  // smallest quartile rank, 0 when undefined
    Count collaboration_network = 0;
    Count team_size = 0;
    Count senior_support = 0;
    bool dropout = false;
    Count success = 0;            // C(15) - C(t_e)
};

// Independent variable names in tier order, as accepted by feature_value().
inline constexpr std::array<std::string_view, 11> kFeatureColumns = {
    "cohort",       "male",       "female",       "undetected",           "productivity", "productivity_1st",
    "impact",       "top_source", "collaboration_network", "team_size",  "senior_support"};

bool is_binary_column(std::string_view name);

// Throws std::invalid_argument for an unknown column; also accepts
// "top_source_quartile", "dropout" and "success".
double feature_value(const FeatureRow& row, std::string_view column);

struct FeatureTable {
    int early_end = 3;
    std::vector<FeatureRow> rows;
    std::size_t excluded_incomplete = 0;      // members without a full 15-age window
    std::size_t top_source_undefined = 0;     // early publications in years with < 4 sources

    std::vector<double> column(std::string_view name) const;
};

bool dropout_label(const CareerSeries& series, int gap = 10);
Count success_label(const CareerSeries& series, int early_end = 3);

// Lower median for even counts.
Count lower_median(std::vector<Count> values);

struct FeatureOptions {
    int early_end = 3;
};

FeatureTable build_features(const CorpusView& view, YearRange cohorts, const FeatureOptions& options = {});

void write_features_csv(const FeatureTable& table, std::ostream& out);

// ---------------------------------------------------------------------------
// Robust standardization: (x - median) / (q3 - q1), quartiles by linear
// interpolation between order statistics.
// ---------------------------------------------------------------------------

// Quantile with linear interpolation on sorted input (position q*(n-1)).
double quantile_sorted(std::span<const double> sorted, double q);

struct ColumnScale {
    std::string name;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    bool exempt = false;      // binary columns are left untouched
    bool constant = false;    // q3 == q1: centered only

    double apply(double x) const;
};

struct StandardizationSpec {
    std::vector<ColumnScale> columns;

    const ColumnScale& at(std::string_view name) const;
};

// Column statistics from the given rows only (all rows when `rows` is empty).
ColumnScale fit_column_scale(std::string name, std::span<const double> values, std::span<const std::size_t> rows = {},
                             bool exempt = false);

// Standardizes one column with statistics from the given rows.
std::vector<double> standardize(std::span<const double> values, std::span<const std::size_t> rows = {},
                                ColumnScale* scale_out = nullptr);

nlohmann::json to_json(const StandardizationSpec& spec);
StandardizationSpec standardization_from_json(const nlohmann::json& j);

}  // namespace scicareer
