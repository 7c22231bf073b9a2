#include "scicareer/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

#include "scicareer/csv.hpp"

namespace scicareer {

using nlohmann::json;

std::string_view to_string(Gender g) {
    switch (g) {
        case Gender::male: return "male";
        case Gender::female: return "female";
        case Gender::undetected: return "undetected";
    }
    return "undetected";
}

std::optional<Gender> parse_gender(std::string_view text) {
    std::string t;
    for (char c : text) {
        if (!std::isspace(static_cast<unsigned char>(c))) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (t == "male" || t == "m") return Gender::male;
    if (t == "female" || t == "f") return Gender::female;
    if (t == "undetected" || t == "unknown" || t.empty()) return Gender::undetected;
    return std::nullopt;
}

std::string normalize_title(std::string_view title) {
    std::string out;
    out.reserve(title.size());
    bool pending_space = false;
    for (char raw : title) {
        auto c = static_cast<unsigned char>(raw);
        if (c >= 0x80) {
            if (pending_space && !out.empty()) out.push_back(' ');
            pending_space = false;
            out.push_back(raw);
        } else if (std::isspace(c)) {
            pending_space = true;
        } else if (std::ispunct(c)) {
            continue;
        } else {
            if (pending_space && !out.empty()) out.push_back(' ');
            pending_space = false;
            out.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    return out;
}

json to_json(const IngestReport& r) {
    json errors = json::array();
    for (const auto& e : r.errors) errors.push_back({{"line", e.line}, {"message", e.message}});
    return {{"lines", r.lines},         {"accepted", r.accepted}, {"duplicates", r.duplicates},
            {"excluded", r.excluded},   {"rejected", r.rejected}, {"gender_conflicts", r.gender_conflicts},
            {"errors", std::move(errors)}};
}

json to_json(const LinkReport& r) {
    return {{"pairs", r.pairs},         {"matched", r.matched},       {"unmatched", r.unmatched},
            {"ambiguous", r.ambiguous}, {"self_edges", r.self_edges}, {"duplicates", r.duplicates}};
}

CitationKey parse_citation_key(std::string_view text) {
    CitationKey key;
    key.pub_id = std::string(text);
    auto at = text.rfind('@');
    if (at != std::string_view::npos && at + 1 < text.size()) {
        auto digits = text.substr(at + 1);
        Year y = 0;
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), y);
        if (ec == std::errc{} && ptr == digits.data() + digits.size()) {
            key.title = std::string(text.substr(0, at));
            key.year = y;
        }
    }
    return key;
}

// ---------------------------------------------------------------------------
// Corpus
// ---------------------------------------------------------------------------

std::optional<PubIndex> Corpus::find_publication(std::string_view pub_id) const {
    auto it = pub_lookup_.find(std::string(pub_id));
    if (it == pub_lookup_.end()) return std::nullopt;
    return it->second;
}

std::optional<AuthorIndex> Corpus::find_author(std::string_view author_id) const {
    auto it = author_lookup_.find(std::string(author_id));
    if (it == author_lookup_.end()) return std::nullopt;
    return it->second;
}

std::vector<PubIndex> Corpus::find_by_title(std::string_view norm_title, Year year) const {
    std::vector<PubIndex> out;
    auto [lo, hi] = title_lookup_.equal_range({std::string(norm_title), year});
    for (auto it = lo; it != hi; ++it) out.push_back(it->second);
    return out;
}

int career_age(Year start_year, Year year) {
    if (year < start_year) {
        throw std::invalid_argument("year " + std::to_string(year) + " precedes career start " +
                                    std::to_string(start_year));
    }
    return year - start_year + 1;
}

int Corpus::career_age(AuthorIndex a, Year year) const {
    return scicareer::career_age(authors_.at(a).start_year, year);
}

bool Corpus::has_full_window(AuthorIndex a) const {
    return authors_.at(a).start_year + kCareerLength - 1 <= coverage_.last;
}

Corpus Corpus::with_genders(const std::unordered_map<std::string, Gender>& genders) const {
    Corpus copy = *this;
    for (auto& a : copy.authors_) {
        if (auto it = genders.find(a.author_id); it != genders.end()) a.gender = it->second;
    }
    return copy;
}

bool Corpus::operator==(const Corpus& other) const {
    return pubs_ == other.pubs_ && authors_ == other.authors_ && edges_ == other.edges_ &&
           coverage_ == other.coverage_ && guard_years_ == other.guard_years_;
}

void Corpus::rebuild_indexes() {
    pub_lookup_.clear();
    author_lookup_.clear();
    title_lookup_.clear();
    by_author_.assign(authors_.size(), {});
    citing_years_.assign(pubs_.size(), {});

    for (PubIndex i = 0; i < pubs_.size(); ++i) {
        pub_lookup_.emplace(pubs_[i].pub_id, i);
        title_lookup_.emplace(std::make_pair(pubs_[i].norm_title, pubs_[i].year), i);
        for (AuthorIndex a : pubs_[i].authors) by_author_[a].push_back(i);
    }
    for (AuthorIndex a = 0; a < authors_.size(); ++a) {
        author_lookup_.emplace(authors_[a].author_id, a);
        std::stable_sort(by_author_[a].begin(), by_author_[a].end(),
                         [this](PubIndex x, PubIndex y) { return pubs_[x].year < pubs_[y].year; });
    }
    for (const auto& e : edges_) citing_years_[e.cited].push_back(e.citing_year);
    for (auto& ys : citing_years_) std::sort(ys.begin(), ys.end());
}

// ---------------------------------------------------------------------------
// Ingest
// ---------------------------------------------------------------------------

CorpusBuilder::CorpusBuilder(IngestOptions options) : options_(std::move(options)) {}

namespace {

bool same_fields(const PublicationRecord& a, const PublicationRecord& b) {
    if (a.title != b.title || a.year != b.year || a.source_id != b.source_id) return false;
    if (a.authors.size() != b.authors.size()) return false;
    for (std::size_t i = 0; i < a.authors.size(); ++i) {
        if (a.authors[i].author_id != b.authors[i].author_id) return false;
    }
    return true;
}

}  // namespace

bool CorpusBuilder::add(const PublicationRecord& in, std::size_t line) {
    ++report_.lines;
    auto reject = [&](std::string why) {
        ++report_.rejected;
        report_.errors.push_back({line, std::move(why)});
        return false;
    };
    if (in.pub_id.empty()) return reject("empty pub_id");
    if (in.authors.empty()) return reject("publication " + in.pub_id + " has no authors");
    if (options_.year_range && !options_.year_range->contains(in.year)) {
        return reject("publication " + in.pub_id + " year " + std::to_string(in.year) + " outside corpus range");
    }

    PublicationRecord record = in;
    {
        std::set<std::string> seen;
        std::vector<AuthorRecord> unique;
        for (const auto& a : record.authors) {
            if (a.author_id.empty()) return reject("publication " + in.pub_id + " has an empty author_id");
            if (seen.insert(a.author_id).second) unique.push_back(a);
        }
        record.authors = std::move(unique);
    }

    if (auto existing = corpus_.pub_lookup_.find(record.pub_id); existing != corpus_.pub_lookup_.end()) {
        if (!same_fields(kept_[existing->second], record)) {
            throw DataError("duplicate pub_id '" + record.pub_id + "' with conflicting fields (line " +
                            std::to_string(line) + ")");
        }
        ++report_.duplicates;
        return false;
    }
    if (record.exclude) {
        ++report_.excluded;
        return false;
    }

    Publication pub;
    pub.pub_id = record.pub_id;
    pub.title = record.title;
    pub.norm_title = normalize_title(record.title);
    pub.year = record.year;
    pub.source_id = record.source_id;
    for (const auto& ar : record.authors) {
        AuthorIndex idx;
        if (auto it = corpus_.author_lookup_.find(ar.author_id); it != corpus_.author_lookup_.end()) {
            idx = it->second;
            auto& author = corpus_.authors_[idx];
            author.start_year = std::min(author.start_year, record.year);
            if (ar.gender && *ar.gender != Gender::undetected) {
                if (author.gender == Gender::undetected) {
                    author.gender = *ar.gender;
                } else if (author.gender != *ar.gender) {
                    ++report_.gender_conflicts;
                }
            }
        } else {
            idx = static_cast<AuthorIndex>(corpus_.authors_.size());
            corpus_.authors_.push_back({ar.author_id, ar.name, ar.gender.value_or(Gender::undetected), record.year});
            corpus_.author_lookup_.emplace(ar.author_id, idx);
        }
        pub.authors.push_back(idx);
    }
    auto pidx = static_cast<PubIndex>(corpus_.pubs_.size());
    corpus_.pub_lookup_.emplace(pub.pub_id, pidx);
    corpus_.pubs_.push_back(std::move(pub));
    kept_.push_back(std::move(record));
    ++report_.accepted;
    return true;
}

void CorpusBuilder::reject(std::size_t line, std::string message) {
    ++report_.lines;
    ++report_.rejected;
    report_.errors.push_back({line, std::move(message)});
}

Corpus CorpusBuilder::finish() {
    Corpus out = std::move(corpus_);
    corpus_ = Corpus{};
    Year lo = 0;
    Year hi = -1;
    if (!out.pubs_.empty()) {
        auto [mn, mx] = std::minmax_element(out.pubs_.begin(), out.pubs_.end(),
                                            [](const auto& a, const auto& b) { return a.year < b.year; });
        lo = mn->year;
        hi = mx->year;
    }
    out.coverage_ = {options_.coverage_start.value_or(lo), options_.coverage_end.value_or(hi)};
    out.guard_years_ = options_.cohort_guard_years;
    out.rebuild_indexes();
    return out;
}

PublicationRecord parse_publication_record(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("record is not a JSON object");
    auto require = [&](const char* key) -> const json& {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) throw std::invalid_argument(std::string("missing field '") + key + "'");
        return *it;
    };
    PublicationRecord r;
    const json& id = require("pub_id");
    r.pub_id = id.is_string() ? id.get<std::string>() : id.dump();
    r.title = require("title").get<std::string>();
    const json& year = require("year");
    if (!year.is_number_integer()) throw std::invalid_argument("field 'year' is not an integer");
    r.year = year.get<Year>();
    if (auto it = j.find("source_id"); it != j.end() && !it->is_null()) {
        r.source_id = it->is_string() ? it->get<std::string>() : it->dump();
    }
    const json& authors = require("authors");
    if (!authors.is_array()) throw std::invalid_argument("field 'authors' is not an array");
    for (const auto& a : authors) {
        AuthorRecord ar;
        if (a.is_string()) {
            ar.author_id = a.get<std::string>();
        } else {
            ar.author_id = a.at("author_id").get<std::string>();
            if (auto it = a.find("name"); it != a.end() && it->is_string()) ar.name = it->get<std::string>();
            if (auto it = a.find("gender"); it != a.end() && it->is_string()) {
                auto g = parse_gender(it->get<std::string>());
                if (!g) throw std::invalid_argument("unknown gender label '" + it->get<std::string>() + "'");
                ar.gender = *g;
            }
        }
        r.authors.push_back(std::move(ar));
    }
    if (auto it = j.find("exclude"); it != j.end() && it->is_boolean()) r.exclude = it->get<bool>();
    return r;
}

json to_json(const Corpus& corpus, PubIndex p) {
    const auto& pub = corpus.publication(p);
    json authors = json::array();
    for (AuthorIndex a : pub.authors) {
        const auto& au = corpus.author(a);
        authors.push_back({{"author_id", au.author_id}, {"name", au.name}, {"gender", to_string(au.gender)}});
    }
    return {{"pub_id", pub.pub_id},
            {"title", pub.title},
            {"year", pub.year},
            {"source_id", pub.source_id},
            {"authors", std::move(authors)}};
}

std::pair<Corpus, IngestReport> parse_publications(std::istream& in, IngestOptions options) {
    CorpusBuilder builder(std::move(options));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        PublicationRecord record;
        try {
            record = parse_publication_record(json::parse(line));
        } catch (const std::exception& e) {
            builder.reject(lineno, e.what());
            continue;
        }
        builder.add(record, lineno);
    }
    IngestReport report = builder.report();
    return {builder.finish(), std::move(report)};
}

// ---------------------------------------------------------------------------
// Citations
// ---------------------------------------------------------------------------

namespace {

enum class Resolution { found, missing, ambiguous };

std::pair<Resolution, PubIndex> resolve(const Corpus& corpus, const CitationKey& key) {
    if (!key.pub_id.empty()) {
        if (auto p = corpus.find_publication(key.pub_id)) return {Resolution::found, *p};
    }
    if (key.year) {
        auto hits = corpus.find_by_title(normalize_title(key.title), *key.year);
        if (hits.size() == 1) return {Resolution::found, hits.front()};
        if (hits.size() > 1) return {Resolution::ambiguous, 0};
    }
    return {Resolution::missing, 0};
}

}  // namespace

std::pair<Corpus, LinkReport> link_citations(const Corpus& corpus,
                                             std::span<const std::pair<CitationKey, CitationKey>> refs) {
    Corpus out = corpus;
    LinkReport report;
    std::set<std::pair<PubIndex, PubIndex>> present;
    for (const auto& e : out.edges_) present.emplace(e.citing, e.cited);

    for (const auto& [citing_key, cited_key] : refs) {
        ++report.pairs;
        auto [rc, citing] = resolve(out, citing_key);
        auto [rd, cited] = resolve(out, cited_key);
        if (rc == Resolution::ambiguous || rd == Resolution::ambiguous) {
            ++report.ambiguous;
            continue;
        }
        if (rc == Resolution::missing || rd == Resolution::missing) {
            ++report.unmatched;
            continue;
        }
        if (citing == cited) {
            ++report.self_edges;
            continue;
        }
        if (!present.emplace(citing, cited).second) {
            ++report.duplicates;
            continue;
        }
        out.edges_.push_back({citing, cited, out.pubs_[citing].year});
        ++report.matched;
    }
    std::sort(out.edges_.begin(), out.edges_.end());
    out.rebuild_indexes();
    return {std::move(out), report};
}

std::vector<std::pair<CitationKey, CitationKey>> parse_citation_csv(std::istream& in) {
    std::vector<std::pair<CitationKey, CitationKey>> refs;
    bool first = true;
    while (auto row = csv::read_row(in)) {
        if (row->size() == 1 && (*row)[0].empty()) continue;
        if (row->size() < 2) throw DataError("citation row with fewer than two columns");
        if (first) {
            first = false;
            if ((*row)[0] == "citing" && (*row)[1] == "cited") continue;
        }
        refs.emplace_back(parse_citation_key((*row)[0]), parse_citation_key((*row)[1]));
    }
    return refs;
}

std::unordered_map<std::string, Gender> parse_gender_csv(std::istream& in) {
    std::unordered_map<std::string, Gender> out;
    bool first = true;
    while (auto row = csv::read_row(in)) {
        if (row->size() == 1 && (*row)[0].empty()) continue;
        if (row->size() < 2) throw DataError("gender row with fewer than two columns");
        if (first) {
            first = false;
            if ((*row)[0] == "author_id") continue;
        }
        auto g = parse_gender((*row)[1]);
        if (!g) throw DataError("unknown gender label '" + (*row)[1] + "' for author " + (*row)[0]);
        out[(*row)[0]] = *g;
    }
    return out;
}

std::map<Year, std::vector<AuthorIndex>> assign_cohorts(const Corpus& corpus, YearRange range) {
    if (range.empty()) throw DataError("empty cohort range");
    const Year earliest = corpus.coverage().first + corpus.cohort_guard_years();
    if (range.first < earliest) {
        throw DataError("cohort " + std::to_string(range.first) + " precedes the first admissible cohort " +
                        std::to_string(earliest) + " (coverage starts " + std::to_string(corpus.coverage().first) +
                        ", guard " + std::to_string(corpus.cohort_guard_years()) + " years)");
    }
    std::map<Year, std::vector<AuthorIndex>> cohorts;
    const auto authors = corpus.authors();
    for (AuthorIndex a = 0; a < authors.size(); ++a) {
        if (range.contains(authors[a].start_year)) cohorts[authors[a].start_year].push_back(a);
    }
    return cohorts;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

void write_publications_jsonl(const Corpus& corpus, std::ostream& out) {
    for (PubIndex p = 0; p < corpus.publications().size(); ++p) out << to_json(corpus, p).dump() << '\n';
}

void write_citations_csv(const Corpus& corpus, std::ostream& out) {
    csv::Writer w(out);
    w.row("citing", "cited");
    for (const auto& e : corpus.citations()) {
        w.row(corpus.publication(e.citing).pub_id, corpus.publication(e.cited).pub_id);
    }
}

json to_snapshot(const Corpus& corpus) {
    json pubs = json::array();
    for (PubIndex p = 0; p < corpus.publications().size(); ++p) pubs.push_back(to_json(corpus, p));
    json edges = json::array();
    for (const auto& e : corpus.citations()) {
        edges.push_back({corpus.publication(e.citing).pub_id, corpus.publication(e.cited).pub_id});
    }
    return {{"format", "scicareer-corpus"},
            {"version", 1},
            {"coverage", {corpus.coverage().first, corpus.coverage().last}},
            {"cohort_guard_years", corpus.cohort_guard_years()},
            {"publications", std::move(pubs)},
            {"citations", std::move(edges)}};
}

Corpus from_snapshot(const json& snapshot) {
    if (snapshot.value("format", "") != "scicareer-corpus") throw DataError("not a corpus snapshot");
    IngestOptions opts;
    opts.coverage_start = snapshot.at("coverage").at(0).get<Year>();
    opts.coverage_end = snapshot.at("coverage").at(1).get<Year>();
    opts.cohort_guard_years = snapshot.at("cohort_guard_years").get<int>();
    CorpusBuilder builder(opts);
    std::size_t i = 0;
    for (const auto& p : snapshot.at("publications")) {
        if (!builder.add(parse_publication_record(p), ++i)) throw DataError("invalid publication in snapshot");
    }
    Corpus base = builder.finish();
    std::vector<std::pair<CitationKey, CitationKey>> refs;
    for (const auto& e : snapshot.at("citations")) {
        refs.emplace_back(CitationKey::by_id(e.at(0).get<std::string>()), CitationKey::by_id(e.at(1).get<std::string>()));
    }
    auto [linked, report] = link_citations(base, refs);
    if (report.matched != refs.size()) throw DataError("snapshot citations do not resolve");
    return linked;
}

// ---------------------------------------------------------------------------
// Views
// ---------------------------------------------------------------------------

bool has_publication_gap(std::span<const bool> active, int gap) {
    int run = 0;
    for (bool on : active) {
        run = on ? 0 : run + 1;
        if (run >= gap) return true;
    }
    return false;
}

bool is_dropout(const Corpus& corpus, AuthorIndex a, int gap) {
    const Author& author = corpus.author(a);
    const Year last_observed = std::min(author.start_year + kCareerLength - 1, corpus.coverage().last);
    const int ages = std::max(0, last_observed - author.start_year + 1);
    std::vector<char> active(static_cast<std::size_t>(ages), 0);
    for (PubIndex p : corpus.publications_of(a)) {
        int t = corpus.publication(p).year - author.start_year + 1;
        if (t >= 1 && t <= ages) active[static_cast<std::size_t>(t - 1)] = 1;
    }
    bool flags[kCareerLength] = {};
    for (int t = 0; t < ages; ++t) flags[t] = active[static_cast<std::size_t>(t)] != 0;
    return has_publication_gap(std::span<const bool>(flags, static_cast<std::size_t>(ages)), gap);
}

CorpusView::CorpusView(const Corpus& base, YearRange cohorts, bool first_author_only, bool dropouts_removed,
                       int dropout_gap)
    : base_(&base),
      first_author_only_(first_author_only),
      dropouts_removed_(dropouts_removed),
      gap_(dropout_gap),
      cohorts_(cohorts) {
    dropout_.resize(base.authors().size());
    for (AuthorIndex a = 0; a < dropout_.size(); ++a) dropout_[a] = scicareer::is_dropout(base, a, gap_);
    if (!cohorts_.empty()) {
        for (auto& [year, members] : assign_cohorts(base, cohorts_)) {
            std::vector<AuthorIndex> kept;
            for (AuthorIndex a : members) {
                if (retains(a)) kept.push_back(a);
            }
            members_.emplace(year, std::move(kept));
        }
    }
}

bool CorpusView::retains(AuthorIndex a) const { return !(dropouts_removed_ && dropout_.at(a)); }

std::vector<PubIndex> CorpusView::attributed_publications(AuthorIndex a) const {
    std::vector<PubIndex> out;
    if (!retains(a)) return out;
    for (PubIndex p : base_->publications_of(a)) {
        if (!first_author_only_ || base_->publication(p).authors.front() == a) out.push_back(p);
    }
    return out;
}

std::vector<AuthorIndex> CorpusView::credited_authors(PubIndex p) const {
    std::vector<AuthorIndex> out;
    const auto& authors = base_->publication(p).authors;
    if (first_author_only_) {
        if (retains(authors.front())) out.push_back(authors.front());
        return out;
    }
    for (AuthorIndex a : authors) {
        if (retains(a)) out.push_back(a);
    }
    return out;
}

std::vector<AuthorIndex> CorpusView::cohort_members(Year cohort) const {
    auto it = members_.find(cohort);
    return it == members_.end() ? std::vector<AuthorIndex>{} : it->second;
}

std::vector<Year> CorpusView::cohort_years() const {
    std::vector<Year> out;
    for (const auto& [y, members] : members_) out.push_back(y);
    return out;
}

CorpusView make_view(const Corpus& corpus, YearRange cohorts, bool first_author_only, bool dropouts_removed,
                     int dropout_gap) {
    return CorpusView(corpus, cohorts, first_author_only, dropouts_removed, dropout_gap);
}

}  // namespace scicareer
