#pragma once

// Compact corpus construction for tests.

#include <initializer_list>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "scicareer/corpus.hpp"

namespace testing {

struct Pub {
    std::string id;
    scicareer::Year year;
    std::vector<std::string> authors;
    std::string source = "s";
};

struct Cite {
    std::string citing;
    std::string cited;
};

// Genders: author ids starting with 'm' are male, 'f' female, others undetected.
inline scicareer::Corpus make_corpus(const std::vector<Pub>& pubs, const std::vector<Cite>& cites = {},
                                     std::optional<scicareer::Year> coverage_start = std::nullopt, int guard = 0,
                                     std::optional<scicareer::Year> coverage_end = std::nullopt) {
    using namespace scicareer;
    IngestOptions options;
    options.coverage_start = coverage_start;
    options.coverage_end = coverage_end;
    options.cohort_guard_years = guard;
    CorpusBuilder builder(options);
    std::size_t line = 0;
    for (const auto& p : pubs) {
        PublicationRecord r;
        r.pub_id = p.id;
        r.title = "title " + p.id;
        r.year = p.year;
        r.source_id = p.source;
        for (const auto& a : p.authors) {
            AuthorRecord ar{a, a, std::nullopt};
            if (a[0] == 'm') ar.gender = Gender::male;
            if (a[0] == 'f') ar.gender = Gender::female;
            r.authors.push_back(ar);
        }
        builder.add(r, ++line);
    }
    Corpus corpus = builder.finish();
    if (cites.empty()) return corpus;
    std::vector<std::pair<CitationKey, CitationKey>> refs;
    for (const auto& c : cites) refs.emplace_back(CitationKey::by_id(c.citing), CitationKey::by_id(c.cited));
    return link_citations(corpus, refs).first;
}

inline scicareer::AuthorIndex author(const scicareer::Corpus& c, const std::string& id) {
    return c.find_author(id).value();
}

}  // namespace testing
