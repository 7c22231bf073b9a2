#include "scicareer/careers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "scicareer/csv.hpp"

namespace scicareer {

void CareerSeries::accumulate() {
    Count P_run = 0;
    Count C_run = 0;
    for (std::size_t t = 0; t < kCareerLength; ++t) {
        Count received = 0;
        for (std::size_t a = 0; a <= t; ++a) received += cite[a][t];
        c[t] = received;
        P_run += p[t];
        C_run += received;
        P[t] = P_run;
        C[t] = C_run;
    }
}

std::vector<CareerSeries> build_series(const CorpusView& view, Year cohort, SeriesBuildStats* stats) {
    const Corpus& corpus = view.base();
    std::vector<CareerSeries> out;
    SeriesBuildStats local;
    for (AuthorIndex a : view.cohort_members(cohort)) {
        CareerSeries s;
        s.author = a;
        s.cohort = cohort;
        const Year start = corpus.author(a).start_year;
        for (PubIndex p : view.attributed_publications(a)) {
            const Year pub_year = corpus.publication(p).year;
            const int age = pub_year - start + 1;
            if (age < 1 || age > kCareerLength) continue;
            ++s.p[static_cast<std::size_t>(age - 1)];
            for (Year y : corpus.citing_years(p)) {
                if (y < pub_year) {
                    ++local.citations_before_publication;
                    continue;
                }
                const int cite_age = y - start + 1;
                if (cite_age > kCareerLength) {
                    ++local.citations_beyond_horizon;
                    continue;
                }
                ++s.cite[static_cast<std::size_t>(age - 1)][static_cast<std::size_t>(cite_age - 1)];
                ++local.citations_counted;
            }
        }
        s.accumulate();
        out.push_back(s);
        ++local.authors;
    }
    if (stats) {
        stats->authors += local.authors;
        stats->citations_counted += local.citations_counted;
        stats->citations_before_publication += local.citations_before_publication;
        stats->citations_beyond_horizon += local.citations_beyond_horizon;
    }
    return out;
}

WindowCounts window_counts(const CareerSeries& series, int t, int width) {
    if (width < 1) throw std::invalid_argument("window width must be positive");
    if (t < width || t > kCareerLength) {
        throw std::invalid_argument("window of width " + std::to_string(width) + " undefined at career age " +
                                    std::to_string(t));
    }
    WindowCounts w;
    for (int a = t - width + 1; a <= t; ++a) {
        w.p += series.p_at(a);
        for (int u = a; u <= t; ++u) w.c += series.cite_at(a, u);
    }
    return w;
}

int persistence(const CareerSeries& series) {
    int k = 0;
    while (k < kCareerLength && series.p[static_cast<std::size_t>(k)] >= 1) ++k;
    return k;
}

// ---------------------------------------------------------------------------

namespace {

double fraction(std::size_t num, std::size_t den) {
    return den == 0 ? std::numeric_limits<double>::quiet_NaN() : static_cast<double>(num) / static_cast<double>(den);
}

std::size_t gidx(Gender g) { return static_cast<std::size_t>(g); }

}  // namespace

double CohortDescriptives::dropout_fraction() const { return fraction(total_dropouts(), total_members()); }

double CohortDescriptives::dropout_fraction(Gender g) const { return fraction(dropouts[gidx(g)], members[gidx(g)]); }

std::vector<CcdfPoint> empirical_ccdf(std::vector<Count> values) {
    std::vector<CcdfPoint> out;
    if (values.empty()) return out;
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    for (std::size_t i = 0; i < values.size();) {
        std::size_t j = i;
        while (j < values.size() && values[j] == values[i]) ++j;
        out.push_back({values[i], static_cast<double>(values.size() - i) / n});
        i = j;
    }
    return out;
}

FieldDescriptives field_descriptives(const Corpus& corpus, YearRange cohorts, int dropout_gap) {
    FieldDescriptives d;
    const CorpusView view(corpus, cohorts, false, false, dropout_gap);

    std::vector<Count> final_P;
    std::vector<Count> final_C;
    for (Year y : view.cohort_years()) {
        CohortDescriptives cd;
        cd.cohort = y;
        for (const auto& s : build_series(view, y)) {
            const Gender g = corpus.author(s.author).gender;
            ++cd.members[gidx(g)];
            if (view.is_dropout(s.author)) ++cd.dropouts[gidx(g)];
            if (corpus.has_full_window(s.author)) {
                const int k = persistence(s);
                if (k >= 1) ++d.persistence_histogram[gidx(g)][static_cast<std::size_t>(k - 1)];
                final_P.push_back(s.P_at(kCareerLength));
                final_C.push_back(s.C_at(kCareerLength));
            }
        }
        d.cohorts.push_back(cd);
    }

    std::map<Year, std::pair<std::size_t, std::size_t>> team;   // year -> (papers, author slots)
    for (const auto& pub : corpus.publications()) {
        auto& [papers, slots] = team[pub.year];
        ++papers;
        slots += pub.authors.size();
    }
    for (const auto& [year, ps] : team) d.mean_team_size[year] = fraction(ps.second, ps.first);

    d.ccdf_productivity = empirical_ccdf(std::move(final_P));
    d.ccdf_impact = empirical_ccdf(std::move(final_C));
    return d;
}

nlohmann::json to_json(const FieldDescriptives& d) {
    using nlohmann::json;
    auto num = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
    json cohorts = json::array();
    for (const auto& c : d.cohorts) {
        json row = {{"cohort", c.cohort}, {"members", c.total_members()}, {"dropouts", c.total_dropouts()},
                    {"dropout_fraction", num(c.dropout_fraction())}};
        for (Gender g : {Gender::male, Gender::female, Gender::undetected}) {
            row["members_" + std::string(to_string(g))] = c.members[gidx(g)];
            row["dropout_fraction_" + std::string(to_string(g))] = num(c.dropout_fraction(g));
        }
        cohorts.push_back(std::move(row));
    }
    json team = json::array();
    for (const auto& [year, mean] : d.mean_team_size) team.push_back({{"year", year}, {"mean_authors", mean}});
    json hist = json::object();
    for (Gender g : {Gender::male, Gender::female, Gender::undetected}) {
        hist[std::string(to_string(g))] = d.persistence_histogram[gidx(g)];
    }
    auto ccdf = [](const std::vector<CcdfPoint>& pts) {
        json a = json::array();
        for (const auto& p : pts) a.push_back({p.value, p.fraction_at_least});
        return a;
    };
    return {{"cohorts", std::move(cohorts)},
            {"mean_team_size", std::move(team)},
            {"persistence_histogram", std::move(hist)},
            {"ccdf_productivity_15", ccdf(d.ccdf_productivity)},
            {"ccdf_impact_15", ccdf(d.ccdf_impact)}};
}

void write_series_csv(const Corpus& corpus, const std::vector<CareerSeries>& series, std::ostream& out,
                      bool header) {
    csv::Writer w(out);
    if (header) w.row("author_id", "cohort", "t", "p", "P", "c", "C");
    for (const auto& s : series) {
        const auto& id = corpus.author(s.author).author_id;
        for (int t = 1; t <= kCareerLength; ++t) w.row(id, s.cohort, t, s.p_at(t), s.P_at(t), s.c_at(t), s.C_at(t));
    }
}

void write_ccdf_csv(const std::vector<CcdfPoint>& ccdf, std::ostream& out) {
    csv::Writer w(out);
    w.row("value", "ccdf");
    for (const auto& p : ccdf) w.row(p.value, p.fraction_at_least);
}

}  // namespace scicareer
