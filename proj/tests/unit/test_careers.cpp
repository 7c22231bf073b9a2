#include <doctest.h>

#include <random>
#include <sstream>

#include "helpers.hpp"
#include "scicareer/careers.hpp"
#include "scicareer/synth.hpp"

using namespace scicareer;
using testing::Pub;

namespace {

const CareerSeries& series_of(const std::vector<CareerSeries>& all, const Corpus& c, const std::string& id) {
    const auto a = testing::author(c, id);
    for (const auto& s : all) {
        if (s.author == a) return s;
    }
    throw std::runtime_error("no series for " + id);
}

CareerSeries from_p(std::initializer_list<Count> p) {
    CareerSeries s;
    std::size_t i = 0;
    for (Count v : p) s.p[i++] = v;
    s.accumulate();
    return s;
}

}  // namespace

// ============================================================================
// build_series
// ============================================================================

TEST_CASE("publications at ages 1 and 3 without citations") {
    const Corpus c = testing::make_corpus({{"p1", 1990, {"A"}}, {"p2", 1992, {"A"}}});
    const auto all = build_series(make_view(c, {1990, 1990}, false, false), 1990);
    const auto& s = series_of(all, c, "A");
    CHECK(s.p_at(1) == 1);
    CHECK(s.p_at(2) == 0);
    CHECK(s.p_at(3) == 1);
    for (int t = 4; t <= 15; ++t) CHECK(s.p_at(t) == 0);
    CHECK(s.P_at(15) == 2);
    for (int t = 1; t <= 15; ++t) CHECK(s.C_at(t) == 0);
}

TEST_CASE("a citation from another cohort's paper at age 2 counts for c(2)") {
    const Corpus c = testing::make_corpus({{"p1", 1990, {"A"}}, {"q1", 1985, {"B"}}, {"q2", 1991, {"B"}}},
                                          {{"q2", "p1"}});
    const auto all = build_series(make_view(c, {1990, 1990}, false, false), 1990);
    REQUIRE(all.size() == 1);
    const auto& s = all[0];
    CHECK(s.c_at(1) == 0);
    CHECK(s.c_at(2) == 1);
    CHECK(s.C_at(2) == 1);
    CHECK(s.cite_at(1, 2) == 1);
}

TEST_CASE("first-author view: second authorship after age 1 yields p(t) = 0") {
    const Corpus c = testing::make_corpus(
        {{"p1", 1990, {"A"}}, {"p2", 1991, {"B", "A"}}, {"p3", 1994, {"B", "A"}}, {"p0", 1980, {"B"}}});
    const auto all = build_series(make_view(c, {1990, 1990}, true, false), 1990);
    const auto& s = series_of(all, c, "A");
    CHECK(s.p_at(1) == 1);
    for (int t = 2; t <= 15; ++t) CHECK(s.p_at(t) == 0);
}

TEST_CASE("absent cohort gives an empty sequence") {
    const Corpus c = testing::make_corpus({{"p1", 1990, {"A"}}});
    CHECK(build_series(make_view(c, {1990, 1995}, false, false), 1993).empty());
}

TEST_CASE("citations dated before the cited paper and beyond age 15 are dropped and counted") {
    // q0 (1989) cites p1 (1990).
    const Corpus c = testing::make_corpus(
        {{"p1", 1990, {"A"}}, {"q0", 1989, {"B"}}, {"q1", 2005, {"B"}}, {"q2", 2004, {"B"}}},
        {{"q0", "p1"}, {"q1", "p1"}, {"q2", "p1"}});
    SeriesBuildStats stats;
    const auto all = build_series(make_view(c, {1990, 1990}, false, false), 1990, &stats);
    REQUIRE(all.size() == 1);
    CHECK(all[0].C_at(15) == 1);   // only the 2004 citation at age 15
    CHECK(stats.citations_before_publication == 1);
    CHECK(stats.citations_beyond_horizon == 1);
    CHECK(stats.citations_counted == 1);
}

TEST_CASE("build_series matches a brute-force oracle on random corpora") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<Pub> pubs;
        std::vector<testing::Cite> cites;
        for (int i = 0; i < 80; ++i) {
            std::vector<std::string> authors{"a" + std::to_string(rng() % 15)};
            if (rng() % 2) {
                const std::string co = "a" + std::to_string(rng() % 15);
                if (co != authors[0]) authors.push_back(co);
            }
            pubs.push_back({"p" + std::to_string(i), static_cast<Year>(1990 + rng() % 25), authors});
        }
        for (int k = 0; k < 200; ++k) {
            const auto a = rng() % 80, b = rng() % 80;
            cites.push_back({"p" + std::to_string(a), "p" + std::to_string(b)});
        }
        const Corpus c = testing::make_corpus(pubs, cites, 1990);
        for (bool fa : {false, true}) {
            const CorpusView view = make_view(c, {1990, 2014}, fa, false);
            for (Year y : view.cohort_years()) {
                for (const auto& s : build_series(view, y)) {
                    const Year start = c.author(s.author).start_year;
                    CHECK(start == y);
                    AgeArray p{}, cc{};
                    for (PubIndex pi = 0; pi < c.publications().size(); ++pi) {
                        const auto& pub = c.publication(pi);
                        const bool credited = fa ? pub.authors.front() == s.author
                                                 : std::find(pub.authors.begin(), pub.authors.end(), s.author) != pub.authors.end();
                        if (!credited) continue;
                        const int age = pub.year - start + 1;
                        if (age >= 1 && age <= 15) ++p[static_cast<std::size_t>(age - 1)];
                        for (const auto& e : c.citations()) {
                            if (e.cited != pi || e.citing_year < pub.year) continue;
                            const int cage = e.citing_year - start + 1;
                            if (age <= 15 && cage >= 1 && cage <= 15) ++cc[static_cast<std::size_t>(cage - 1)];
                        }
                    }
                    CHECK(s.p == p);
                    CHECK(s.c == cc);
                }
            }
        }
    }
}

// ============================================================================
// Windows and persistence
// ============================================================================

TEST_CASE("window publication count is a direct sum over the last three ages") {
    const auto s = from_p({1, 2, 0, 4});
    CHECK(window_counts(s, 4).p == 6);
    CHECK(window_counts(s, 3).p == 3);
}

TEST_CASE("window citations: a paper at age t-2 cited once in each of t-2, t-1, t") {
    CareerSeries s;
    const int t = 7;
    s.p[t - 3] = 1;
    for (int age = t - 2; age <= t; ++age) s.cite[t - 3][static_cast<std::size_t>(age - 1)] = 1;
    s.accumulate();
    CHECK(window_counts(s, t).c == 3);
    CHECK(window_counts(s, t - 1).c == 2);
    CHECK(window_counts(s, t + 1) == WindowCounts{0, 0});
}

TEST_CASE("window counts reject ages before the window fills") {
    const auto s = from_p({1});
    CHECK_THROWS_AS(window_counts(s, 2), std::invalid_argument);
    CHECK_THROWS_AS(window_counts(s, 16), std::invalid_argument);
}

TEST_CASE("a window spanning the whole career equals cumulative counts") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        CareerSeries s;
        for (std::size_t a = 0; a < 15; ++a) {
            s.p[a] = static_cast<Count>(rng() % 4);
            for (std::size_t t = a; t < 15; ++t) s.cite[a][t] = s.p[a] ? static_cast<Count>(rng() % 5) : 0;
        }
        s.accumulate();
        for (int t = 1; t <= 15; ++t) {
            const auto w = window_counts(s, t, t);
            CHECK(w.p == s.P_at(t));
            CHECK(w.c == s.C_at(t));
            CHECK(s.C_at(15) >= s.C_at(t));
            CHECK(s.P_at(15) >= s.P_at(t));
        }
    }
}

TEST_CASE("persistence is the initial unbroken run of publishing ages") {
    CHECK(persistence(from_p({1})) == 1);
    CHECK(persistence(from_p({1, 1, 1, 0, 1})) == 3);
    CHECK(persistence(from_p({1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1})) == 15);
}

// ============================================================================
// Field descriptives
// ============================================================================

TEST_CASE("two-author cohort with one dropout has dropout fraction 0.5") {
    const Corpus c = testing::make_corpus({{"p1", 1990, {"mA"}}, {"p2", 2001, {"mA"}}, {"p3", 1990, {"mB"}},
                                           {"p4", 1995, {"mB"}}, {"p5", 2004, {"mB"}}});
    const auto d = field_descriptives(c, {1990, 1990});
    REQUIRE(d.cohorts.size() == 1);
    CHECK(d.cohorts[0].dropout_fraction() == doctest::Approx(0.5));
    CHECK(d.cohorts[0].dropout_fraction(Gender::male) == doctest::Approx(0.5));
}

TEST_CASE("mean team size per calendar year") {
    const Corpus c = testing::make_corpus({{"p1", 1990, {"A"}}, {"p2", 1990, {"B", "C", "D"}}});
    const auto d = field_descriptives(c, {1990, 1990});
    CHECK(d.mean_team_size.at(1990) == doctest::Approx(2.0));
}

TEST_CASE("empirical CCDF") {
    const auto ccdf = empirical_ccdf({1, 1, 2, 5});
    REQUIRE(ccdf.size() == 3);
    CHECK(ccdf[0].value == 1);
    CHECK(ccdf[0].fraction_at_least == doctest::Approx(1.0));
    CHECK(ccdf[1].fraction_at_least == doctest::Approx(0.5));
    CHECK(ccdf[2].fraction_at_least == doctest::Approx(0.25));
}

TEST_CASE("synthetic corpus with exponentially growing cohorts has a monotone cohort-size series") {
    SynthParams p;
    p.seed = 5;
    p.cohort_years = {1980, 1990};
    p.corpus_end = 2004;
    p.cohort_size_base = 40;
    p.cohort_size_growth = 0.15;
    p.field_authors = 60;
    p.field_papers_per_year = 40;
    const Corpus c = simulate(p);
    const auto d = field_descriptives(c, p.cohort_years);
    REQUIRE(d.cohorts.size() == 11);
    for (std::size_t i = 1; i < d.cohorts.size(); ++i) CHECK(d.cohorts[i].total_members() > d.cohorts[i - 1].total_members());
}

TEST_CASE("series CSV has one row per author and age") {
    const Corpus c = testing::make_corpus({{"p1", 1990, {"A"}}, {"p2", 1991, {"B"}}});
    const auto all = build_series(make_view(c, {1990, 1991}, false, false), 1990);
    std::ostringstream out;
    write_series_csv(c, all, out);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "author_id,cohort,t,p,P,c,C");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 15);
}
