#include "scicareer/inequality.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "scicareer/csv.hpp"

namespace scicareer {

std::string_view to_string(Measure m) { return m == Measure::productivity ? "productivity" : "impact"; }

std::string_view to_string(Counting c) { return c == Counting::cumulative ? "cumulative" : "window"; }

double gini(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 2) throw std::invalid_argument("gini needs at least two values");
    std::vector<double> x(values.begin(), values.end());
    for (double v : x) {
        if (!(v >= 0.0)) throw std::invalid_argument("gini requires nonnegative values");
    }
    std::sort(x.begin(), x.end());
    // sum_i sum_j |x_i - x_j| = 2 sum_i (2i - n - 1) x_(i), i 1-based
    double weighted = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        weighted += (2.0 * static_cast<double>(i + 1) - static_cast<double>(n) - 1.0) * x[i];
        total += x[i];
    }
    if (total <= 0.0) throw UndefinedResult("gini undefined for an all-zero distribution");
    return weighted / (static_cast<double>(n) * total);
}

std::vector<double> measure_values(std::span<const CareerSeries> series, Measure m, Counting counting, int t,
                                   int window) {
    std::vector<double> out;
    out.reserve(series.size());
    for (const auto& s : series) {
        Count v;
        if (counting == Counting::cumulative) {
            v = m == Measure::productivity ? s.P_at(t) : s.C_at(t);
        } else {
            auto w = window_counts(s, t, window);
            v = m == Measure::productivity ? w.p : w.c;
        }
        out.push_back(static_cast<double>(v));
    }
    return out;
}

GiniSeries gini_series(std::span<const CareerSeries> series, Year cohort, Measure m, Counting counting, int window) {
    if (series.size() < 2) {
        throw std::invalid_argument("cohort " + std::to_string(cohort) + " has fewer than two authors");
    }
    GiniSeries g;
    g.cohort = cohort;
    g.measure = m;
    g.counting = counting;
    g.authors = series.size();
    const int first = counting == Counting::window ? window : 1;
    for (int t = first; t <= kCareerLength; ++t) {
        auto x = measure_values(series, m, counting, t, window);
        try {
            g.values[static_cast<std::size_t>(t - 1)] = gini(x);
        } catch (const UndefinedResult&) {
        }
    }
    return g;
}

GiniSeries gini_series(const CorpusView& view, Year cohort, Measure m, Counting counting, int window) {
    auto series = build_series(view, cohort);
    return gini_series(series, cohort, m, counting, window);
}

void write_gini_csv(std::span<const GiniSeries> rows, const CorpusView& view, std::ostream& out, bool header) {
    csv::Writer w(out);
    if (header) w.row("cohort", "measure", "counting", "first_author_only", "dropouts_removed", "t", "authors", "gini");
    for (const auto& g : rows) {
        for (int t = 1; t <= kCareerLength; ++t) {
            const auto& v = g.values[static_cast<std::size_t>(t - 1)];
            if (!v) continue;
            w.row(g.cohort, to_string(g.measure), to_string(g.counting), int(view.first_author_only()),
                  int(view.dropouts_removed()), t, g.authors, *v);
        }
    }
}

// ---------------------------------------------------------------------------

MannWhitney mann_whitney_u(std::span<const double> male, std::span<const double> female) {
    if (male.empty() || female.empty()) throw std::invalid_argument("Mann-Whitney U needs two non-empty groups");
    struct Obs {
        double value;
        bool is_male;
    };
    std::vector<Obs> pooled;
    pooled.reserve(male.size() + female.size());
    for (double v : male) pooled.push_back({v, true});
    for (double v : female) pooled.push_back({v, false});
    std::sort(pooled.begin(), pooled.end(), [](const Obs& a, const Obs& b) { return a.value < b.value; });

    const double n = static_cast<double>(pooled.size());
    double rank_sum = 0.0;
    double tie_term = 0.0;   // sum of (t^3 - t) over tie groups
    for (std::size_t i = 0; i < pooled.size();) {
        std::size_t j = i;
        while (j < pooled.size() && pooled[j].value == pooled[i].value) ++j;
        const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t k = i; k < j; ++k) {
            if (pooled[k].is_male) rank_sum += midrank;
        }
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }

    MannWhitney r;
    r.n_m = male.size();
    r.n_f = female.size();
    const double nm = static_cast<double>(r.n_m);
    const double nf = static_cast<double>(r.n_f);
    r.rank_sum_m = rank_sum;
    r.u = rank_sum - nm * (nm + 1.0) / 2.0;

    const double mean = nm * nf / 2.0;
    const double var = nm * nf / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if (var <= 0.0) {
        r.z = 0.0;
        r.p = 1.0;
        return r;
    }
    const double dev = std::max(0.0, std::abs(r.u - mean) - 0.5);
    r.z = std::copysign(dev / std::sqrt(var), r.u - mean);
    r.p = std::min(1.0, std::erfc(dev / std::sqrt(var) / std::sqrt(2.0)));
    return r;
}

double cliffs_d(const MannWhitney& test) {
    return 2.0 * test.u / (static_cast<double>(test.n_m) * static_cast<double>(test.n_f)) - 1.0;
}

double cliffs_d(std::span<const double> male, std::span<const double> female) {
    return cliffs_d(mann_whitney_u(male, female));
}

GenderTestCell gender_test(std::span<const CareerSeries> series, const Corpus& corpus, Year cohort, int t, Measure m,
                           double alpha) {
    GenderTestCell cell;
    cell.cohort = cohort;
    cell.t = t;
    std::vector<double> male;
    std::vector<double> female;
    for (const auto& s : series) {
        const double v = static_cast<double>(m == Measure::productivity ? s.P_at(t) : s.C_at(t));
        switch (corpus.author(s.author).gender) {
            case Gender::male: male.push_back(v); break;
            case Gender::female: female.push_back(v); break;
            case Gender::undetected: break;
        }
    }
    cell.n_m = male.size();
    cell.n_f = female.size();
    if (male.empty() || female.empty()) return cell;
    const auto test = mann_whitney_u(male, female);
    cell.computable = true;
    cell.rank_sum_m = test.rank_sum_m;
    cell.u = test.u;
    cell.p = test.p;
    cell.d = cliffs_d(test);
    cell.significant = test.p <= alpha;
    return cell;
}

GenderGrid gender_grid(const CorpusView& view, YearRange cohorts, Measure m, double alpha) {
    GenderGrid grid;
    grid.measure = m;
    grid.alpha = alpha;
    for (Year y : view.cohort_years()) {
        if (!cohorts.contains(y)) continue;
        const auto series = build_series(view, y);
        for (int t = 1; t <= kCareerLength; ++t) grid.cells.push_back(gender_test(series, view.base(), y, t, m, alpha));
    }
    auto& s = grid.summary;
    s.cells = grid.cells.size();
    for (const auto& c : grid.cells) {
        if (!c.computable) continue;
        ++s.computable;
        if (c.significant) ++s.significant;
    }
    s.fraction_significant = s.computable ? static_cast<double>(s.significant) / static_cast<double>(s.computable) : 0.0;
    return grid;
}

std::optional<double> gender_grid_correlation(const GenderGrid& a, const GenderGrid& b) {
    std::map<std::pair<Year, int>, double> first;
    for (const auto& c : a.cells) {
        if (c.computable && c.significant) first[{c.cohort, c.t}] = c.d;
    }
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& c : b.cells) {
        if (!c.computable || !c.significant) continue;
        if (auto it = first.find({c.cohort, c.t}); it != first.end()) {
            xs.push_back(it->second);
            ys.push_back(c.d);
        }
    }
    if (xs.size() < 3) return std::nullopt;
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

void write_gender_grid_csv(const GenderGrid& grid, std::ostream& out, bool header) {
    csv::Writer w(out);
    if (header) w.row("measure", "cohort", "t", "n_m", "n_f", "U", "p", "d", "significant", "computable");
    for (const auto& c : grid.cells) {
        w.row(to_string(grid.measure), c.cohort, c.t, c.n_m, c.n_f, c.u, c.p, c.d, int(c.significant),
              int(c.computable));
    }
}

nlohmann::json to_json(const GenderGridSummary& s) {
    return {{"cells", s.cells},
            {"computable", s.computable},
            {"significant", s.significant},
            {"fraction_significant", s.fraction_significant}};
}

}  // namespace scicareer
