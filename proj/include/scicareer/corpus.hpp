#pragma once

// Bibliographic corpus: publications, authors, ordered authorship and
// citation edges. A Corpus is built once (ingest + linking) and is
// immutable afterwards; CorpusView applies attribution and dropout filters
// without touching the underlying store.

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

namespace scicareer {

using Year = int;
using PubIndex = std::uint32_t;
using AuthorIndex = std::uint32_t;

inline constexpr int kCareerLength = 15;

enum class Gender { male, female, undetected };

std::string_view to_string(Gender g);
std::optional<Gender> parse_gender(std::string_view text);

// Thrown for unrecoverable data problems (conflicting duplicates, bad
// configuration). Record-level problems are collected in reports instead.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct YearRange {
    Year first = 0;
    Year last = -1;

    bool empty() const { return last < first; }
    bool contains(Year y) const { return y >= first && y <= last; }
    std::size_t size() const { return empty() ? 0 : static_cast<std::size_t>(last - first + 1); }
    bool operator==(const YearRange&) const = default;
};

// Lowercase, strip ASCII punctuation, collapse whitespace, trim.
// Non-ASCII bytes are passed through unchanged (no Unicode normalization).
std::string normalize_title(std::string_view title);

struct Publication {
    std::string pub_id;
    std::string title;
    std::string norm_title;
    Year year = 0;
    std::string source_id;
    std::vector<AuthorIndex> authors;   // ordered, authors[0] is first author

    bool operator==(const Publication&) const = default;
};

struct Author {
    std::string author_id;
    std::string name;
    Gender gender = Gender::undetected;
    Year start_year = 0;

    bool operator==(const Author&) const = default;
};

struct CitationEdge {
    PubIndex citing = 0;
    PubIndex cited = 0;
    Year citing_year = 0;

    auto operator<=>(const CitationEdge&) const = default;
};

struct IngestOptions {
    std::optional<YearRange> year_range;    // records outside are rejected
    std::optional<Year> coverage_start;     // defaults to min observed year
    std::optional<Year> coverage_end;       // defaults to max observed year
    int cohort_guard_years = 10;
};

struct RecordError {
    std::size_t line = 0;
    std::string message;
};

struct IngestReport {
    std::size_t lines = 0;
    std::size_t accepted = 0;
    std::size_t duplicates = 0;
    std::size_t excluded = 0;      // records carrying the exclusion flag
    std::size_t rejected = 0;
    std::size_t gender_conflicts = 0;
    std::vector<RecordError> errors;
};

struct LinkReport {
    std::size_t pairs = 0;
    std::size_t matched = 0;
    std::size_t unmatched = 0;
    std::size_t ambiguous = 0;
    std::size_t self_edges = 0;
    std::size_t duplicates = 0;
};

nlohmann::json to_json(const IngestReport& r);
nlohmann::json to_json(const LinkReport& r);

// Either a publication id or a (normalized title, year) pair.
struct CitationKey {
    std::string pub_id;
    std::string title;
    std::optional<Year> year;

    static CitationKey by_id(std::string id) { return {std::move(id), {}, {}}; }
    static CitationKey by_title(std::string t, Year y) { return {{}, std::move(t), y}; }
};

// Parses the textual key form used in citation CSVs: "title@YYYY" selects a
// title lookup; anything else is a publication id. An exact pub_id match
// always wins over the title interpretation.
CitationKey parse_citation_key(std::string_view text);

class Corpus {
public:
    Corpus() = default;

    std::span<const Publication> publications() const { return pubs_; }
    std::span<const Author> authors() const { return authors_; }
    std::span<const CitationEdge> citations() const { return edges_; }

    const Publication& publication(PubIndex i) const { return pubs_.at(i); }
    const Author& author(AuthorIndex i) const { return authors_.at(i); }

    std::optional<PubIndex> find_publication(std::string_view pub_id) const;
    std::optional<AuthorIndex> find_author(std::string_view author_id) const;
    // All publications with the given normalized title and year.
    std::vector<PubIndex> find_by_title(std::string_view norm_title, Year year) const;

    // Publications of an author (any author position), sorted by year then index.
    std::span<const PubIndex> publications_of(AuthorIndex a) const { return by_author_.at(a); }
    // Calendar years of every citation the publication received, ascending.
    std::span<const Year> citing_years(PubIndex p) const { return citing_years_.at(p); }

    YearRange coverage() const { return coverage_; }
    int cohort_guard_years() const { return guard_years_; }

    // Career age with the start year counting as age 1.
    int career_age(AuthorIndex a, Year year) const;

    // Authors with a full kCareerLength-age observation window inside coverage.
    bool has_full_window(AuthorIndex a) const;

    // Builds a copy of this corpus with the gender labels replaced.
    Corpus with_genders(const std::unordered_map<std::string, Gender>& genders) const;

    bool operator==(const Corpus& other) const;

private:
    friend class CorpusBuilder;
    friend std::pair<Corpus, LinkReport> link_citations(const Corpus&, std::span<const std::pair<CitationKey, CitationKey>>);

    void rebuild_indexes();

    std::vector<Publication> pubs_;
    std::vector<Author> authors_;
    std::vector<CitationEdge> edges_;
    YearRange coverage_;
    int guard_years_ = 10;

    std::unordered_map<std::string, PubIndex> pub_lookup_;
    std::unordered_map<std::string, AuthorIndex> author_lookup_;
    std::multimap<std::pair<std::string, Year>, PubIndex> title_lookup_;
    std::vector<std::vector<PubIndex>> by_author_;
    std::vector<std::vector<Year>> citing_years_;
};

struct AuthorRecord {
    std::string author_id;
    std::string name;
    std::optional<Gender> gender;
};

struct PublicationRecord {
    std::string pub_id;
    std::string title;
    Year year = 0;
    std::string source_id;
    std::vector<AuthorRecord> authors;
    bool exclude = false;
};

// Incremental construction; finish() freezes the result.
class CorpusBuilder {
public:
    explicit CorpusBuilder(IngestOptions options = {});

    // Returns false (and records why in the report) for record-level problems.
    // Throws DataError for a duplicate pub_id whose fields conflict.
    bool add(const PublicationRecord& record, std::size_t line = 0);
    // Records a line that could not be parsed into a record at all.
    void reject(std::size_t line, std::string message);

    const IngestReport& report() const { return report_; }
    Corpus finish();

private:
    IngestOptions options_;
    IngestReport report_;
    Corpus corpus_;
    std::vector<PublicationRecord> kept_;
};

PublicationRecord parse_publication_record(const nlohmann::json& j);
nlohmann::json to_json(const Corpus& corpus, PubIndex p);

std::pair<Corpus, IngestReport> parse_publications(std::istream& in, IngestOptions options = {});

std::pair<Corpus, LinkReport> link_citations(const Corpus& corpus,
                                             std::span<const std::pair<CitationKey, CitationKey>> refs);

std::vector<std::pair<CitationKey, CitationKey>> parse_citation_csv(std::istream& in);
std::unordered_map<std::string, Gender> parse_gender_csv(std::istream& in);

// Cohort year -> member authors (sorted). Throws DataError for an empty range
// or a range starting inside the coverage guard band.
std::map<Year, std::vector<AuthorIndex>> assign_cohorts(const Corpus& corpus, YearRange range);

// Career age for a bare start year; throws std::invalid_argument when year < start.
int career_age(Year start_year, Year year);

// ---------------------------------------------------------------------------
// Serialization: JSON-lines publications + citation CSV by pub_id reproduce the
// corpus exactly when re-ingested; the snapshot bundles both with coverage.
// ---------------------------------------------------------------------------

void write_publications_jsonl(const Corpus& corpus, std::ostream& out);
void write_citations_csv(const Corpus& corpus, std::ostream& out);
nlohmann::json to_snapshot(const Corpus& corpus);
Corpus from_snapshot(const nlohmann::json& snapshot);

// ---------------------------------------------------------------------------
// Views
// ---------------------------------------------------------------------------

// True iff some run of `gap` consecutive ages in [1, kCareerLength] has no
// publication. `active` holds one flag per age.
bool has_publication_gap(std::span<const bool> active, int gap = 10);

// Dropout label from all of an author's publications (every-author attribution).
bool is_dropout(const Corpus& corpus, AuthorIndex a, int gap = 10);

class CorpusView {
public:
    CorpusView(const Corpus& base, YearRange cohorts, bool first_author_only, bool dropouts_removed,
               int dropout_gap = 10);

    const Corpus& base() const { return *base_; }
    bool first_author_only() const { return first_author_only_; }
    bool dropouts_removed() const { return dropouts_removed_; }
    int dropout_gap() const { return gap_; }

    bool retains(AuthorIndex a) const;
    // Publications credited to the author under this view's attribution.
    std::vector<PubIndex> attributed_publications(AuthorIndex a) const;
    // Authors credited with a publication under this view.
    std::vector<AuthorIndex> credited_authors(PubIndex p) const;

    // Cohort members retained by the view.
    std::vector<AuthorIndex> cohort_members(Year cohort) const;
    std::vector<Year> cohort_years() const;
    YearRange cohort_range() const { return cohorts_; }
    bool is_dropout(AuthorIndex a) const { return dropout_.at(a); }

private:
    const Corpus* base_;
    bool first_author_only_;
    bool dropouts_removed_;
    int gap_;
    YearRange cohorts_;
    std::vector<bool> dropout_;
    std::map<Year, std::vector<AuthorIndex>> members_;
};

CorpusView make_view(const Corpus& corpus, YearRange cohorts, bool first_author_only, bool dropouts_removed,
                     int dropout_gap = 10);

}  // namespace scicareer
