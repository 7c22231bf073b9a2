#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "helpers.hpp"
#include "scicareer/indices.hpp"

using namespace scicareer;
using testing::Pub;

namespace {

Count h_brute(const std::vector<Count>& counts) {
    Count best = 0;
    for (Count h = 0; h <= static_cast<Count>(counts.size()); ++h) {
        Count at_least = 0;
        for (Count c : counts) at_least += c >= h;
        if (at_least >= h) best = h;
    }
    return best;
}

// A source "s<k>" paper "p<i>" cited by independent "q" papers at given years.
struct Planted {
    std::vector<Pub> pubs;
    std::vector<testing::Cite> cites;
    int next = 0;

    std::string paper(Year y, const std::string& source, const std::string& author = "z") {
        const std::string id = "p" + std::to_string(next++);
        pubs.push_back({id, y, {author}, source});
        return id;
    }
    void cite(const std::string& cited, Year y, int times = 1) {
        for (int i = 0; i < times; ++i) cites.push_back({paper(y, "citer"), cited});
    }
};

}  // namespace

// ============================================================================
// h-index
// ============================================================================

TEST_CASE("h-index worked examples") {
    CHECK(h_index(std::vector<Count>{}) == 0);
    CHECK(h_index(std::vector<Count>{6, 5, 3, 1, 0}) == 3);
    CHECK(h_index(std::vector<Count>{10, 10, 10}) == 3);
    CHECK(h_index(std::vector<Count>{0, 0}) == 0);
}

TEST_CASE("h-index matches brute force, ignores order and never drops when a citation is added") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<Count> counts(rng() % 51);
        for (auto& c : counts) c = static_cast<Count>(rng() % 30);
        const Count h = h_index(counts);
        CHECK(h == h_brute(counts));
        std::shuffle(counts.begin(), counts.end(), rng);
        CHECK(h_index(counts) == h);
        if (!counts.empty()) {
            ++counts[rng() % counts.size()];
            CHECK(h_index(counts) >= h);
        }
    }
}

TEST_CASE("author h-index counts only papers and citations up to the year") {
    Planted w;
    const auto a = w.paper(1990, "s0", "A");
    const auto b = w.paper(1991, "s0", "A");
    const auto c = w.paper(1995, "s0", "A");
    w.cite(a, 1991, 3);
    w.cite(b, 1992, 2);
    w.cite(b, 1996, 5);
    w.cite(c, 1996, 9);
    const Corpus corpus = testing::make_corpus(w.pubs, w.cites);
    const auto A = testing::author(corpus, "A");
    CHECK(author_h_index(corpus, A, 1990) == 0);
    CHECK(author_h_index(corpus, A, 1992) == 2);
    CHECK(author_h_index(corpus, A, 1995) == 2);
    CHECK(author_h_index(corpus, A, 1996) == 3);
}

// ============================================================================
// h5-index
// ============================================================================

TEST_CASE("h5 worked examples") {
    Planted w;
    const auto x = w.paper(2000, "s1");
    const auto y = w.paper(2001, "s1");
    w.paper(2002, "s1");
    w.cite(x, 2003, 5);
    w.cite(y, 2004, 4);
    const auto solo = w.paper(2000, "s2");
    w.cite(solo, 2002, 100);
    const Corpus c = testing::make_corpus(w.pubs, w.cites);
    CHECK(h5_index(c, "s1", 2004) == 2);
    CHECK(h5_index(c, "s2", 2004) == 1);
    CHECK(h5_index(c, "s1", 1995) == 0);
    CHECK(h5_index(c, "unknown", 2004) == 0);
    // x leaves the window in 2005; citations from 2005 onward fall outside earlier windows
    CHECK(h5_index(c, "s1", 2005) == 1);
}

TEST_CASE("h5 excludes citations from outside the window") {
    Planted w;
    const auto x = w.paper(2000, "s1");
    const auto y = w.paper(2000, "s1");
    w.cite(x, 2006, 3);
    w.cite(y, 2006, 3);
    w.cite(x, 2001, 1);
    const Corpus c = testing::make_corpus(w.pubs, w.cites);
    CHECK(h5_index(c, "s1", 2004) == 1);
}

TEST_CASE("h5 matches a brute-force oracle and the precomputed index") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 40; ++trial) {
        Planted w;
        std::vector<std::pair<std::string, Pub>> papers;
        const int n = 1 + static_cast<int>(rng() % 50);
        for (int i = 0; i < n; ++i) {
            const Year y = static_cast<Year>(2000 + rng() % 10);
            const std::string s = "s" + std::to_string(rng() % 3);
            const auto id = w.paper(y, s);
            papers.push_back({id, w.pubs.back()});
            const int k = static_cast<int>(rng() % 6);
            for (int j = 0; j < k; ++j) w.cite(id, static_cast<Year>(y + rng() % 6));
        }
        const Corpus c = testing::make_corpus(w.pubs, w.cites);
        const SourceIndex index(c);
        for (int s = 0; s < 3; ++s) {
            const std::string source = "s" + std::to_string(s);
            for (Year year = 2000; year <= 2015; ++year) {
                std::vector<Count> counts;
                for (const auto& [id, pub] : papers) {
                    if (pub.source != source || pub.year < year - 4 || pub.year > year) continue;
                    Count cnt = 0;
                    for (const auto& ci : w.cites) {
                        if (ci.cited != id) continue;
                        const auto& citing = *std::find_if(w.pubs.begin(), w.pubs.end(),
                                                           [&](const Pub& p) { return p.id == ci.citing; });
                        cnt += citing.year >= year - 4 && citing.year <= year;
                    }
                    counts.push_back(cnt);
                }
                const Count expected = h_brute(counts);
                CHECK(h5_index(c, source, year) == expected);
                CHECK(index.h5(source, year) == expected);
                CHECK(expected <= static_cast<Count>(counts.size()));
            }
        }
    }
}

// ============================================================================
// Percentiles and the top-source flag
// ============================================================================

namespace {

// Four sources in 2000 with h5 values 1, 2, 3 and 5 (each paper in source sK
// cited K times; s5 has five such papers, others K papers).
Planted four_sources() {
    Planted w;
    for (int k : {1, 2, 3, 5}) {
        const std::string s = "s" + std::to_string(k);
        for (int i = 0; i < k; ++i) w.cite(w.paper(2000, s, k == 5 ? "fTop" : (k == 1 ? "mLow" : "z")), 2000, k);
    }
    return w;
}

}  // namespace

TEST_CASE("nearest-rank percentile and top-quartile membership") {
    const Planted w = four_sources();
    const Corpus c = testing::make_corpus(w.pubs, w.cites);
    const SourceIndex index(c);
    CHECK(index.h5("s5", 2000) == 5);
    CHECK(index.h5("s1", 2000) == 1);
    CHECK(index.sources_in_year(2000) == 5);   // the citing papers' source counts too
    // ascending {0, 1, 2, 3, 5}: nearest rank ceil(0.75 * 5) = 4 -> 3
    CHECK(index.percentile(2000, 0.75) == 3);
    CHECK(index.is_top("s5", 2000));
    CHECK(index.is_top("s3", 2000));
    CHECK_FALSE(index.is_top("s1", 2000));
    CHECK(index.quartile_rank("s5", 2000) == 1);
    CHECK(index.quartile_rank("citer", 2000) == 4);

    const auto top = top_source_flag(c, index, testing::author(c, "fTop"));
    CHECK(top.top);
    CHECK(top.best_quartile == 1);
    CHECK_FALSE(top_source_flag(c, index, testing::author(c, "mLow")).top);
}

TEST_CASE("years with fewer than four sources leave the flag false") {
    Planted w;
    const auto x = w.paper(2000, "s1", "A");
    w.cite(x, 2000, 3);
    const Corpus c = testing::make_corpus(w.pubs, w.cites);
    const SourceIndex index(c);
    CHECK_FALSE(index.percentile(2000, 0.75).has_value());
    CHECK(index.quartile_rank("s1", 2000) == 0);
    const auto r = top_source_flag(c, index, testing::author(c, "A"));
    CHECK_FALSE(r.top);
    CHECK(r.undefined_years == 1);
}

TEST_CASE("only early-career publications count toward the flag") {
    Planted w = four_sources();
    w.paper(2000, "s1", "B");
    w.paper(2003, "s5", "B");   // age 4, outside the default early window
    const Corpus c = testing::make_corpus(w.pubs, w.cites);
    const SourceIndex index(c);
    const auto B = testing::author(c, "B");
    CHECK_FALSE(top_source_flag(c, index, B, 3).top);
}

TEST_CASE("source index CSV lists every source-year") {
    const Planted w = four_sources();
    const Corpus c = testing::make_corpus(w.pubs, w.cites);
    std::ostringstream out;
    SourceIndex(c).write_csv(out);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "source_id,year,h5,quartile");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 25);   // five sources, windows ending 2000..2004
}
