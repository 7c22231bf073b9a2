#include "scicareer/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "scicareer/careers.hpp"
#include "scicareer/csv.hpp"

namespace scicareer {

void SynthParams::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(std::string("invalid synth parameter: ") + what);
    };
    require(!cohort_years.empty(), "cohort_years empty");
    require(corpus_end >= cohort_years.last, "corpus_end before last cohort");
    require(guard_years >= 1, "guard_years < 1");
    require(cohort_size_base >= 1.0, "cohort_size_base < 1");
    require(std::isfinite(cohort_size_growth), "cohort_size_growth");
    for (double b : {beta_prod_first, beta_prod_last, beta_impact_first, beta_impact_last}) require(b >= 0.0, "negative beta");
    require(debut_rate >= 0.0, "debut_rate < 0");
    require(prod_rate > 0.0 && cite_rate > 0.0, "rates must be positive");
    require(impact_dispersion >= 0.0, "impact_dispersion < 0");
    require(cutoff_true >= 1.0, "cutoff_true < 1");
    for (double h : dropout_hazard) require(h >= 0.0 && h <= 1.0, "dropout_hazard outside [0, 1]");
    require(female_share >= 0.0 && undetected_share >= 0.0 && female_share + undetected_share <= 1.0, "gender mix");
    require(female_productivity_ratio > 0.0, "female_productivity_ratio <= 0");
    require(team_size_base >= 1.0, "team_size_base < 1");
    require(peer_coauthor_share >= 0.0 && peer_coauthor_share <= 1.0, "peer_coauthor_share outside [0, 1]");
    require(sources >= 1 && field_authors >= 1 && field_papers_per_year >= 1, "field sizes");
    require(field_cite_rate >= 0.0, "field_cite_rate < 0");
    require(max_expected > 0.0, "max_expected <= 0");
}

nlohmann::json to_json(const SynthParams& p) {
    return {{"seed", p.seed},
            {"cohort_years", {p.cohort_years.first, p.cohort_years.last}},
            {"corpus_end", p.corpus_end},
            {"guard_years", p.guard_years},
            {"cohort_size_base", p.cohort_size_base},
            {"cohort_size_growth", p.cohort_size_growth},
            {"beta_prod", {p.beta_prod_first, p.beta_prod_last}},
            {"beta_impact", {p.beta_impact_first, p.beta_impact_last}},
            {"debut_rate", p.debut_rate},
            {"prod_rate", p.prod_rate},
            {"cite_rate", p.cite_rate},
            {"impact_dispersion", p.impact_dispersion},
            {"cutoff_true", p.cutoff_true},
            {"dropout_hazard", {{"male", p.dropout_hazard[0]}, {"female", p.dropout_hazard[1]}, {"undetected", p.dropout_hazard[2]}}},
            {"female_share", p.female_share},
            {"undetected_share", p.undetected_share},
            {"female_productivity_ratio", p.female_productivity_ratio},
            {"team_size_base", p.team_size_base},
            {"team_size_drift", p.team_size_drift},
            {"peer_coauthor_share", p.peer_coauthor_share},
            {"sources", p.sources},
            {"field_authors", p.field_authors},
            {"field_papers_per_year", p.field_papers_per_year},
            {"field_cite_rate", p.field_cite_rate},
            {"max_expected", p.max_expected}};
}

SynthParams synth_params_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("scenario must be a JSON object");
    SynthParams p;
    const nlohmann::json known = to_json(p);
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) throw std::invalid_argument("unknown scenario key '" + key + "'");
    }
    auto get = [&](const char* key, auto& field) {
        if (auto it = j.find(key); it != j.end()) it->get_to(field);
    };
    get("seed", p.seed);
    if (auto it = j.find("cohort_years"); it != j.end()) p.cohort_years = {it->at(0).get<Year>(), it->at(1).get<Year>()};
    get("corpus_end", p.corpus_end);
    get("guard_years", p.guard_years);
    get("cohort_size_base", p.cohort_size_base);
    get("cohort_size_growth", p.cohort_size_growth);
    if (auto it = j.find("beta_prod"); it != j.end()) {
        p.beta_prod_first = it->at(0).get<double>();
        p.beta_prod_last = it->at(1).get<double>();
    }
    if (auto it = j.find("beta_impact"); it != j.end()) {
        p.beta_impact_first = it->at(0).get<double>();
        p.beta_impact_last = it->at(1).get<double>();
    }
    get("debut_rate", p.debut_rate);
    get("prod_rate", p.prod_rate);
    get("cite_rate", p.cite_rate);
    get("impact_dispersion", p.impact_dispersion);
    get("cutoff_true", p.cutoff_true);
    if (auto it = j.find("dropout_hazard"); it != j.end()) {
        p.dropout_hazard = {it->value("male", p.dropout_hazard[0]), it->value("female", p.dropout_hazard[1]),
                            it->value("undetected", p.dropout_hazard[2])};
    }
    get("female_share", p.female_share);
    get("undetected_share", p.undetected_share);
    get("female_productivity_ratio", p.female_productivity_ratio);
    get("team_size_base", p.team_size_base);
    get("team_size_drift", p.team_size_drift);
    get("peer_coauthor_share", p.peer_coauthor_share);
    get("sources", p.sources);
    get("field_authors", p.field_authors);
    get("field_papers_per_year", p.field_papers_per_year);
    get("field_cite_rate", p.field_cite_rate);
    get("max_expected", p.max_expected);
    p.validate();
    return p;
}

SynthParams paper_shaped_scenario() {
    SynthParams p;
    p.seed = 20240607;
    p.cohort_years = {1970, 2000};
    p.corpus_end = 2014;
    p.cohort_size_base = 300.0;
    p.cohort_size_growth = 0.055;
    p.beta_prod_first = 0.3;
    p.beta_prod_last = 1.0;
    p.beta_impact_first = 0.6;
    p.beta_impact_last = 0.6;
    p.debut_rate = 0.6;
    p.prod_rate = 0.35;
    p.cite_rate = 0.4;
    p.impact_dispersion = 1.0;
    p.max_expected = 20000.0;
    p.cutoff_true = 1.0;
    p.dropout_hazard = {0.05, 0.10, 0.06};
    p.female_share = 0.25;
    p.undetected_share = 0.2;
    p.female_productivity_ratio = 1.0;
    p.team_size_base = 1.4;
    p.team_size_drift = 0.04;
    p.peer_coauthor_share = 0.3;
    return p;
}

namespace {

constexpr double kFitnessCap = 10.0;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct Paper {
    Year year = 0;
    int source = 0;
    std::vector<std::size_t> authors;   // global author slots
};

struct Member {
    Year cohort = 0;
    Gender gender = Gender::undetected;
    double beta_prod = 0.0;
    double beta_impact = 0.0;
    double fitness = 1.0;   // multiplies the citation rate
    bool quit = false;
    Count P = 0;   // own lead publications
    Count C = 0;   // citations to own lead publications
    std::vector<std::size_t> lead_papers;
    std::mt19937_64 rng;
};

class Simulator {
public:
    explicit Simulator(const SynthParams& p) : p_(p), rng_(splitmix64(p.seed)) {
        coverage_start_ = p_.cohort_years.first - p_.guard_years;
        std::lognormal_distribution<double> quality(0.0, 0.8);
        double total = 0.0;
        for (int s = 0; s < p_.sources; ++s) {
            source_quality_.push_back(quality(rng_));
            total += source_quality_.back();
        }
        mean_quality_ = total / p_.sources;
        field_weight_.assign(static_cast<std::size_t>(p_.field_authors), 1.0);
    }

    Corpus run();

private:
    double poisson_mean(double mean) const {
        if (!(mean <= p_.max_expected)) {
            throw DataError("expected count " + std::to_string(mean) + " exceeds ceiling " +
                            std::to_string(p_.max_expected) + "; lower the rates or exponents");
        }
        return mean;
    }
    static Count draw_poisson(std::mt19937_64& rng, double mean) {
        if (mean <= 0.0) return 0;
        std::poisson_distribution<Count> d(mean);
        return d(rng);
    }
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
    std::size_t pick(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }

    double schedule(double first, double last, Year cohort) const {
        const auto span = static_cast<double>(p_.cohort_years.last - p_.cohort_years.first);
        if (span <= 0.0) return first;
        return first + (last - first) * (cohort - p_.cohort_years.first) / span;
    }
    int field_start(std::size_t i) const { return coverage_start_ + static_cast<int>(i % static_cast<std::size_t>(p_.guard_years)); }
    int draw_source() {
        double u = uniform() * mean_quality_ * p_.sources;
        for (int s = 0; s < p_.sources; ++s) {
            u -= source_quality_[static_cast<std::size_t>(s)];
            if (u <= 0.0) return s;
        }
        return p_.sources - 1;
    }
    std::size_t team_size(Year y) {
        const double mean = p_.team_size_base + p_.team_size_drift * (y - coverage_start_);
        return 1 + static_cast<std::size_t>(draw_poisson(rng_, std::max(0.0, mean - 1.0)));
    }
    std::size_t draw_field_author(Year y, bool preferential);
    void add_citation(std::size_t cited, Year y, Count& counter);

    const SynthParams& p_;
    std::mt19937_64 rng_;
    Year coverage_start_ = 0;
    std::vector<double> source_quality_;
    double mean_quality_ = 1.0;
    std::vector<double> field_weight_;
    std::vector<Member> members_;
    std::vector<Paper> papers_;
    std::vector<std::vector<std::size_t>> papers_by_year_;
    std::vector<std::pair<std::size_t, std::size_t>> edges_;
    std::unordered_set<std::uint64_t> edge_keys_;
};

std::size_t Simulator::draw_field_author(Year y, bool preferential) {
    const auto n = static_cast<std::size_t>(p_.field_authors);
    for (;;) {
        std::size_t i;
        if (preferential) {
            double total = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                if (field_start(k) <= y) total += field_weight_[k];
            }
            double u = uniform() * total;
            i = n - 1;
            for (std::size_t k = 0; k < n; ++k) {
                if (field_start(k) > y) continue;
                u -= field_weight_[k];
                if (u <= 0.0) {
                    i = k;
                    break;
                }
            }
        } else {
            i = pick(n);
        }
        if (field_start(i) <= y) return i;
    }
}

void Simulator::add_citation(std::size_t cited, Year y, Count& counter) {
    const auto& pool = papers_by_year_[static_cast<std::size_t>(y - coverage_start_)];
    if (pool.empty()) return;
    for (int attempt = 0; attempt < 16; ++attempt) {
        const std::size_t citing = pool[pick(pool.size())];
        if (citing == cited) continue;
        const std::uint64_t key = (static_cast<std::uint64_t>(citing) << 32) | cited;
        if (!edge_keys_.insert(key).second) continue;
        edges_.emplace_back(citing, cited);
        ++counter;
        return;
    }
}

Corpus Simulator::run() {
    const auto field_n = static_cast<std::size_t>(p_.field_authors);
    papers_by_year_.resize(static_cast<std::size_t>(p_.corpus_end - coverage_start_ + 1));

    for (Year y = coverage_start_; y <= p_.corpus_end; ++y) {
        auto& this_year = papers_by_year_[static_cast<std::size_t>(y - coverage_start_)];

        // Background field: every field author debuts in their start year, so
        // none of them falls into a cohort; further papers pick the lead by
        // preferential attachment and fill co-author slots from the field.
        std::vector<std::size_t> leads;
        for (std::size_t i = 0; i < field_n; ++i) {
            if (field_start(i) == y) leads.push_back(i);
        }
        for (int k = 0; k < p_.field_papers_per_year; ++k) leads.push_back(draw_field_author(y, true));
        for (const std::size_t lead : leads) {
            Paper paper;
            paper.year = y;
            paper.source = draw_source();
            paper.authors.push_back(lead);
            field_weight_[lead] += 1.0;
            const std::size_t size = team_size(y);
            for (std::size_t s = 1; s < size; ++s) {
                const std::size_t co = draw_field_author(y, false);
                if (std::find(paper.authors.begin(), paper.authors.end(), co) == paper.authors.end()) paper.authors.push_back(co);
            }
            this_year.push_back(papers_.size());
            papers_.push_back(std::move(paper));
        }

        if (p_.cohort_years.contains(y)) {
            const auto size = static_cast<std::size_t>(
                std::llround(p_.cohort_size_base * std::exp(p_.cohort_size_growth * (y - p_.cohort_years.first))));
            for (std::size_t i = 0; i < size; ++i) {
                Member m;
                m.cohort = y;
                m.rng.seed(splitmix64(p_.seed ^ splitmix64(members_.size() + 1)));
                const double u = std::uniform_real_distribution<double>(0.0, 1.0)(m.rng);
                m.gender = u < p_.female_share ? Gender::female
                           : u < p_.female_share + p_.undetected_share ? Gender::undetected
                                                                       : Gender::male;
                m.beta_prod = schedule(p_.beta_prod_first, p_.beta_prod_last, y);
                m.beta_impact = schedule(p_.beta_impact_first, p_.beta_impact_last, y);
                if (p_.impact_dispersion > 0.0) {
                    const double sigma = p_.impact_dispersion;
                    m.fitness = std::min(kFitnessCap, std::lognormal_distribution<double>(-0.5 * sigma * sigma, sigma)(m.rng));
                }
                members_.push_back(std::move(m));
            }
        }

        // Cohort members: decide this year's lead output, then wire teams.
        std::vector<std::pair<std::size_t, Count>> output;
        std::map<Year, std::vector<std::size_t>> active_by_cohort;
        for (std::size_t i = 0; i < members_.size(); ++i) {
            Member& m = members_[i];
            const int age = y - m.cohort + 1;
            if (age > kCareerLength || m.quit) continue;
            Count k;
            if (age == 1) {
                k = 1 + draw_poisson(m.rng, poisson_mean(p_.debut_rate));
            } else {
                const double hazard = p_.dropout_hazard[static_cast<std::size_t>(m.gender)];
                if (std::uniform_real_distribution<double>(0.0, 1.0)(m.rng) < hazard) {
                    m.quit = true;
                    continue;
                }
                double rate = p_.prod_rate * (m.gender == Gender::female ? p_.female_productivity_ratio : 1.0);
                const double state = std::max(static_cast<double>(m.P), p_.cutoff_true);
                k = draw_poisson(m.rng, poisson_mean(rate * std::pow(state, m.beta_prod)));
            }
            active_by_cohort[m.cohort].push_back(i);
            if (k > 0) output.emplace_back(i, k);
        }
        for (const auto& [i, k] : output) {
            const auto& peers = active_by_cohort[members_[i].cohort];
            for (Count n = 0; n < k; ++n) {
                Paper paper;
                paper.year = y;
                paper.source = draw_source();
                paper.authors.push_back(field_n + i);
                const std::size_t size = team_size(y);
                for (std::size_t s = 1; s < size; ++s) {
                    std::size_t co;
                    if (peers.size() > 1 && uniform() < p_.peer_coauthor_share) {
                        co = field_n + peers[pick(peers.size())];
                    } else {
                        co = draw_field_author(y, false);
                    }
                    if (std::find(paper.authors.begin(), paper.authors.end(), co) == paper.authors.end()) paper.authors.push_back(co);
                }
                members_[i].lead_papers.push_back(papers_.size());
                this_year.push_back(papers_.size());
                papers_.push_back(std::move(paper));
            }
            members_[i].P += k;
        }

        // Citations made this year.
        for (auto& m : members_) {
            const int age = y - m.cohort + 1;
            if (age < 1 || age > kCareerLength || m.lead_papers.empty()) continue;
            const double state = std::max(static_cast<double>(m.C), p_.cutoff_true);
            const Count k = draw_poisson(m.rng, poisson_mean(p_.cite_rate * m.fitness * std::pow(state, m.beta_impact)));
            if (k == 0) continue;
            std::vector<double> cumulative;
            double total = 0.0;
            for (std::size_t pi : m.lead_papers) {
                total += source_quality_[static_cast<std::size_t>(papers_[pi].source)];
                cumulative.push_back(total);
            }
            Count received = 0;
            for (Count n = 0; n < k; ++n) {
                const double u = std::uniform_real_distribution<double>(0.0, total)(m.rng);
                const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
                const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
                add_citation(m.lead_papers[idx], y, received);
            }
            m.C += received;
        }
        for (Year back = std::max(coverage_start_, y - 9); back <= y; ++back) {
            for (std::size_t pi : papers_by_year_[static_cast<std::size_t>(back - coverage_start_)]) {
                if (papers_[pi].authors.front() >= field_n) continue;
                const double q = source_quality_[static_cast<std::size_t>(papers_[pi].source)] / mean_quality_;
                Count unused = 0;
                const Count k = draw_poisson(rng_, poisson_mean(p_.field_cite_rate * q));
                for (Count n = 0; n < k; ++n) add_citation(pi, y, unused);
            }
        }
    }

    // Materialize through the regular ingest path.
    auto author_id = [&](std::size_t slot) {
        if (slot < field_n) return "f" + std::to_string(slot);
        const std::size_t i = slot - field_n;
        return "a" + std::to_string(members_[i].cohort) + "_" + std::to_string(i);
    };
    IngestOptions options;
    options.coverage_start = coverage_start_;
    options.coverage_end = p_.corpus_end;
    options.cohort_guard_years = p_.guard_years;
    CorpusBuilder builder(options);
    std::mt19937_64 field_gender(splitmix64(p_.seed + 17));
    std::vector<Gender> field_genders(field_n);
    for (auto& g : field_genders) g = field_gender() % 2 ? Gender::male : Gender::female;
    for (std::size_t pi = 0; pi < papers_.size(); ++pi) {
        const Paper& paper = papers_[pi];
        PublicationRecord r;
        r.pub_id = "p" + std::to_string(pi);
        r.title = "Synthetic study " + std::to_string(pi);
        r.year = paper.year;
        r.source_id = "s" + std::to_string(paper.source);
        for (std::size_t slot : paper.authors) {
            const Gender g = slot < field_n ? field_genders[slot] : members_[slot - field_n].gender;
            r.authors.push_back({author_id(slot), author_id(slot), g});
        }
        builder.add(r, pi + 1);
    }
    Corpus base = builder.finish();
    std::sort(edges_.begin(), edges_.end());
    std::vector<std::pair<CitationKey, CitationKey>> refs;
    refs.reserve(edges_.size());
    for (const auto& [citing, cited] : edges_) {
        refs.emplace_back(CitationKey::by_id("p" + std::to_string(citing)), CitationKey::by_id("p" + std::to_string(cited)));
    }
    return link_citations(base, refs).first;
}

}  // namespace

Corpus simulate(const SynthParams& params) {
    params.validate();
    Simulator sim(params);
    return sim.run();
}

void write_synthetic_corpus(const Corpus& corpus, const SynthParams& params, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "publications.jsonl");
        write_publications_jsonl(corpus, out);
    }
    {
        std::ofstream out(dir / "citations.csv");
        write_citations_csv(corpus, out);
    }
    {
        std::ofstream out(dir / "genders.csv");
        csv::Writer w(out);
        w.row("author_id", "gender");
        for (const auto& a : corpus.authors()) w.row(a.author_id, to_string(a.gender));
    }
    {
        std::ofstream out(dir / "scenario.json");
        out << to_json(params).dump(2) << '\n';
    }
}

}  // namespace scicareer
