#include "scicareer/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "scicareer/csv.hpp"
#include "scicareer/indices.hpp"

namespace scicareer {

bool is_binary_column(std::string_view name) {
    return name == "male" || name == "female" || name == "undetected" || name == "top_source" || name == "dropout";
}

double feature_value(const FeatureRow& r, std::string_view c) {
    if (c == "cohort") return r.cohort;
    if (c == "male") return r.male;
    if (c == "female") return r.female;
    if (c == "undetected") return r.undetected;
    if (c == "productivity") return static_cast<double>(r.productivity);
    if (c == "productivity_1st") return static_cast<double>(r.productivity_1st);
    if (c == "impact") return static_cast<double>(r.impact);
    if (c == "top_source") return r.top_source;
    if (c == "top_source_quartile") return r.top_source_quartile;
    if (c == "collaboration_network") return static_cast<double>(r.collaboration_network);
    if (c == "team_size") return static_cast<double>(r.team_size);
    if (c == "senior_support") return static_cast<double>(r.senior_support);
    if (c == "dropout") return r.dropout ? 1.0 : 0.0;
    if (c == "success") return static_cast<double>(r.success);
    throw std::invalid_argument("unknown feature column '" + std::string(c) + "'");
}

std::vector<double> FeatureTable::column(std::string_view name) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(feature_value(r, name));
    return out;
}

bool dropout_label(const CareerSeries& series, int gap) {
    std::array<bool, kCareerLength> active{};
    for (std::size_t t = 0; t < kCareerLength; ++t) active[t] = series.p[t] >= 1;
    return has_publication_gap(active, gap);
}

Count success_label(const CareerSeries& series, int early_end) {
    return series.C_at(kCareerLength) - series.C_at(early_end);
}

Count lower_median(std::vector<Count> values) {
    if (values.empty()) throw std::invalid_argument("median of an empty set");
    std::sort(values.begin(), values.end());
    return values[(values.size() - 1) / 2];
}

FeatureTable build_features(const CorpusView& view, YearRange cohorts, const FeatureOptions& options) {
    const int te = options.early_end;
    if (te < 1 || te >= kCareerLength) throw std::invalid_argument("early career end must lie in [1, 14]");
    const Corpus& corpus = view.base();
    const SourceIndex sources(corpus);

    FeatureTable table;
    table.early_end = te;
    std::unordered_map<std::uint64_t, Count> h_cache;

    for (Year y : view.cohort_years()) {
        if (!cohorts.contains(y)) continue;
        const Year horizon = y + te - 1;
        for (const auto& s : build_series(view, y)) {
            const AuthorIndex a = s.author;
            if (!corpus.has_full_window(a)) {
                ++table.excluded_incomplete;
                continue;
            }
            FeatureRow row;
            row.author = a;
            row.author_id = corpus.author(a).author_id;
            row.cohort = y;
            switch (corpus.author(a).gender) {
                case Gender::male: row.male = 1; break;
                case Gender::female: row.female = 1; break;
                case Gender::undetected: row.undetected = 1; break;
            }
            row.productivity = s.P_at(te);
            row.impact = s.C_at(te);
            row.success = success_label(s, te);
            row.dropout = view.is_dropout(a);

            std::set<AuthorIndex> coauthors;
            std::vector<Count> team;
            for (PubIndex p : corpus.publications_of(a)) {
                const auto& pub = corpus.publication(p);
                if (pub.year > horizon) break;
                if (pub.authors.front() == a) ++row.productivity_1st;
                team.push_back(static_cast<Count>(pub.authors.size()));
                for (AuthorIndex b : pub.authors) {
                    if (b != a) coauthors.insert(b);
                }
            }
            // Every author has a publication at age 1 by construction.
            row.team_size = lower_median(team);
            row.collaboration_network = static_cast<Count>(coauthors.size());
            for (AuthorIndex b : coauthors) {
                const std::uint64_t key = (static_cast<std::uint64_t>(b) << 20) ^ static_cast<std::uint64_t>(horizon);
                auto it = h_cache.find(key);
                if (it == h_cache.end()) it = h_cache.emplace(key, author_h_index(corpus, b, horizon)).first;
                row.senior_support = std::max(row.senior_support, it->second);
            }
            const auto top = top_source_flag(corpus, sources, a, te);
            row.top_source = top.top ? 1 : 0;
            row.top_source_quartile = top.best_quartile;
            table.top_source_undefined += top.undefined_years;
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

void write_features_csv(const FeatureTable& table, std::ostream& out) {
    csv::Writer w(out);
    std::vector<std::string> header = {"author_id"};
    for (auto c : kFeatureColumns) header.emplace_back(c);
    header.insert(header.end(), {"top_source_quartile", "dropout", "success"});
    w.row(header);
    for (const auto& r : table.rows) {
        std::vector<std::string> fields = {r.author_id};
        for (std::size_t i = 1; i < header.size(); ++i) fields.push_back(csv::format_double(feature_value(r, header[i])));
        w.row(fields);
    }
}

// ---------------------------------------------------------------------------

double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("quantile of an empty set");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double ColumnScale::apply(double x) const {
    if (exempt) return x;
    if (constant) return x - median;
    return (x - median) / (q3 - q1);
}

const ColumnScale& StandardizationSpec::at(std::string_view name) const {
    for (const auto& c : columns) {
        if (c.name == name) return c;
    }
    throw std::invalid_argument("no standardization for column '" + std::string(name) + "'");
}

ColumnScale fit_column_scale(std::string name, std::span<const double> values, std::span<const std::size_t> rows,
                             bool exempt) {
    ColumnScale s;
    s.name = std::move(name);
    s.exempt = exempt;
    std::vector<double> v;
    if (rows.empty()) {
        v.assign(values.begin(), values.end());
    } else {
        v.reserve(rows.size());
        for (auto r : rows) v.push_back(values[r]);
    }
    if (v.empty()) throw std::invalid_argument("cannot standardize from zero rows");
    std::sort(v.begin(), v.end());
    s.q1 = quantile_sorted(v, 0.25);
    s.median = quantile_sorted(v, 0.5);
    s.q3 = quantile_sorted(v, 0.75);
    s.constant = !(s.q3 > s.q1);
    return s;
}

std::vector<double> standardize(std::span<const double> values, std::span<const std::size_t> rows,
                                ColumnScale* scale_out) {
    auto scale = fit_column_scale("", values, rows);
    std::vector<double> out;
    out.reserve(values.size());
    for (double x : values) out.push_back(scale.apply(x));
    if (scale_out) *scale_out = scale;
    return out;
}

nlohmann::json to_json(const StandardizationSpec& spec) {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : spec.columns) {
        cols.push_back({{"name", c.name},
                        {"median", c.median},
                        {"q1", c.q1},
                        {"q3", c.q3},
                        {"exempt", c.exempt},
                        {"constant", c.constant}});
    }
    return {{"columns", std::move(cols)}};
}

StandardizationSpec standardization_from_json(const nlohmann::json& j) {
    StandardizationSpec spec;
    for (const auto& c : j.at("columns")) {
        spec.columns.push_back({c.at("name").get<std::string>(), c.at("median").get<double>(), c.at("q1").get<double>(),
                                c.at("q3").get<double>(), c.at("exempt").get<bool>(), c.at("constant").get<bool>()});
    }
    return spec;
}

}  // namespace scicareer
