#include "scicareer/indices.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "scicareer/csv.hpp"

namespace scicareer {

Count h_index(std::span<const Count> citation_counts) {
    std::vector<Count> v(citation_counts.begin(), citation_counts.end());
    std::sort(v.begin(), v.end(), std::greater<>());
    Count h = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] >= static_cast<Count>(i + 1)) h = static_cast<Count>(i + 1);
        else break;
    }
    return h;
}

namespace {

Count citations_between(std::span<const Year> citing_years, Year lo, Year hi) {
    auto first = std::lower_bound(citing_years.begin(), citing_years.end(), lo);
    auto last = std::upper_bound(citing_years.begin(), citing_years.end(), hi);
    return static_cast<Count>(last - first);
}

}  // namespace

Count author_h_index(const Corpus& corpus, AuthorIndex author, Year year) {
    std::vector<Count> counts;
    for (PubIndex p : corpus.publications_of(author)) {
        if (corpus.publication(p).year > year) continue;
        auto ys = corpus.citing_years(p);
        counts.push_back(static_cast<Count>(std::upper_bound(ys.begin(), ys.end(), year) - ys.begin()));
    }
    return h_index(counts);
}

Count h5_index(const Corpus& corpus, const std::string& source_id, Year year) {
    std::vector<Count> counts;
    const auto pubs = corpus.publications();
    for (PubIndex p = 0; p < pubs.size(); ++p) {
        if (pubs[p].source_id != source_id || pubs[p].year < year - 4 || pubs[p].year > year) continue;
        counts.push_back(citations_between(corpus.citing_years(p), year - 4, year));
    }
    return h_index(counts);
}

SourceIndex::SourceIndex(const Corpus& corpus) {
    std::map<std::string, std::vector<PubIndex>> by_source;
    const auto pubs = corpus.publications();
    for (PubIndex p = 0; p < pubs.size(); ++p) by_source[pubs[p].source_id].push_back(p);

    for (auto& [source, list] : by_source) {
        std::sort(list.begin(), list.end(), [&](PubIndex a, PubIndex b) { return pubs[a].year < pubs[b].year; });
        const Year first = pubs[list.front()].year;
        const Year last = pubs[list.back()].year + 4;
        std::vector<Count> counts;
        for (Year y = first; y <= last; ++y) {
            counts.clear();
            for (PubIndex p : list) {
                if (pubs[p].year < y - 4) continue;
                if (pubs[p].year > y) break;
                counts.push_back(citations_between(corpus.citing_years(p), y - 4, y));
            }
            if (counts.empty()) continue;
            const Count h5 = h_index(counts);
            h5_.emplace(std::make_pair(source, y), h5);
            by_year_[y].push_back(h5);
        }
    }
    for (auto& [y, v] : by_year_) std::sort(v.begin(), v.end());
}

Count SourceIndex::h5(const std::string& source_id, Year year) const {
    auto it = h5_.find({source_id, year});
    return it == h5_.end() ? 0 : it->second;
}

std::size_t SourceIndex::sources_in_year(Year year) const {
    auto it = by_year_.find(year);
    return it == by_year_.end() ? 0 : it->second.size();
}

std::optional<Count> SourceIndex::percentile(Year year, double q) const {
    auto it = by_year_.find(year);
    if (it == by_year_.end() || it->second.size() < 4) return std::nullopt;
    const auto& v = it->second;
    auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
    rank = std::clamp<std::size_t>(rank, 1, v.size());
    return v[rank - 1];
}

bool SourceIndex::is_top(const std::string& source_id, Year year) const {
    auto threshold = percentile(year, 0.75);
    return threshold && h5(source_id, year) >= *threshold;
}

int SourceIndex::quartile_rank(const std::string& source_id, Year year) const {
    auto q75 = percentile(year, 0.75);
    if (!q75) return 0;
    const Count h = h5(source_id, year);
    if (h >= *q75) return 1;
    if (h >= *percentile(year, 0.5)) return 2;
    if (h >= *percentile(year, 0.25)) return 3;
    return 4;
}

void SourceIndex::write_csv(std::ostream& out) const {
    csv::Writer w(out);
    w.row("source_id", "year", "h5", "quartile");
    for (const auto& [key, h5] : h5_) w.row(key.first, key.second, h5, quartile_rank(key.first, key.second));
}

TopSourceResult top_source_flag(const Corpus& corpus, const SourceIndex& index, AuthorIndex author, int early_end) {
    TopSourceResult r;
    const Year start = corpus.author(author).start_year;
    for (PubIndex p : corpus.publications_of(author)) {
        const auto& pub = corpus.publication(p);
        if (pub.year - start + 1 > early_end) break;
        const int q = index.quartile_rank(pub.source_id, pub.year);
        if (q == 0) {
            ++r.undefined_years;
            continue;
        }
        if (r.best_quartile == 0 || q < r.best_quartile) r.best_quartile = q;
        if (q == 1) r.top = true;
    }
    return r;
}

}  // namespace scicareer
