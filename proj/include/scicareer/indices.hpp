#pragma once

// Bibliometric indices used as features: author h-index, source h5-index and
// top-quartile source membership.

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scicareer/careers.hpp"
#include "scicareer/corpus.hpp"

namespace scicareer {

// Largest h such that at least h entries are >= h.
Count h_index(std::span<const Count> citation_counts);

// Author h-index over publications dated <= year, counting citations from
// citing years <= year.
Count author_h_index(const Corpus& corpus, AuthorIndex author, Year year);

// h-index of the source's publications from [year-4, year], counting only
// citations whose citing year also falls in that window. Unknown source -> 0.
Count h5_index(const Corpus& corpus, const std::string& source_id, Year year);

// Precomputed h5 for every (source, year) with at least one publication in the
// trailing five-year window, plus per-year distribution percentiles.
class SourceIndex {
public:
    explicit SourceIndex(const Corpus& corpus);

    Count h5(const std::string& source_id, Year year) const;
    // Nearest-rank percentile of the year's source-h5 distribution; empty when
    // the year has fewer than 4 sources.
    std::optional<Count> percentile(Year year, double q) const;
    bool is_top(const std::string& source_id, Year year) const;
    // 1 (top quartile) .. 4; 0 when the year's distribution is undefined.
    int quartile_rank(const std::string& source_id, Year year) const;
    std::size_t sources_in_year(Year year) const;

    void write_csv(std::ostream& out) const;

private:
    std::map<std::pair<std::string, Year>, Count> h5_;
    std::map<Year, std::vector<Count>> by_year_;   // sorted ascending
};

struct TopSourceResult {
    bool top = false;
    int best_quartile = 0;            // smallest quartile rank seen, 0 if none defined
    std::size_t undefined_years = 0;  // early publications in years with < 4 sources
};

// Early-career publications are those at career ages 1..early_end.
TopSourceResult top_source_flag(const Corpus& corpus, const SourceIndex& index, AuthorIndex author, int early_end = 3);

}  // namespace scicareer
