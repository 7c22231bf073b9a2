#pragma once

// Cumulative-advantage cohort simulator. Produces corpora with known ground
// truth (feedback exponents, dropout hazards, gender differentials) in the
// same form the ingest path produces, so every measurement can be checked
// against the parameters that generated it.
//
// Per cohort member and career age t (calendar year = cohort + t - 1):
//   lead publications  p(t) ~ Poisson(prod_rate * max(P(t-1), cutoff)^beta_prod)   (t >= 2)
//   new citations      c(t) ~ Poisson(cite_rate * fitness * max(C(t-1), cutoff)^beta_impact)
// where P and C are the author's own lead-publication state. Citations are
// spread over the author's lead papers by source quality. Citing papers
// are drawn from everything published that year (cohorts and a background
// field population).

#include <array>
#include <cstdint>
#include <filesystem>

#include <json.hpp>

#include "scicareer/corpus.hpp"

namespace scicareer {

struct SynthParams {
    std::uint64_t seed = 1;
    YearRange cohort_years{1970, 2000};
    Year corpus_end = 2014;
    int guard_years = 10;                // field coverage starts this many years before the first cohort

    double cohort_size_base = 300.0;     // members of the first cohort
    double cohort_size_growth = 0.05;    // exponential growth rate per cohort year

    // Feedback exponents scheduled linearly from the first to the last cohort.
    double beta_prod_first = 0.5;
    double beta_prod_last = 0.5;
    double beta_impact_first = 0.5;
    double beta_impact_last = 0.5;

    double debut_rate = 0.5;             // P(1) = 1 + Poisson(debut_rate)
    double prod_rate = 0.5;
    double cite_rate = 0.5;
    double impact_dispersion = 0.0;      // sigma of a mean-one lognormal per-author citation fitness, clipped at 10
    double cutoff_true = 1.0;            // flat feedback below this activity level

    // Per-age probability (ages >= 2) of permanently leaving, by Gender index.
    std::array<double, 3> dropout_hazard{0.05, 0.05, 0.05};
    double female_share = 0.3;
    double undetected_share = 0.2;
    double female_productivity_ratio = 1.0;

    double team_size_base = 1.5;         // mean authors per paper in the first coverage year
    double team_size_drift = 0.03;       // increment per calendar year
    double peer_coauthor_share = 0.3;    // co-author slots filled from the same cohort

    int sources = 40;
    int field_authors = 400;
    int field_papers_per_year = 400;
    double field_cite_rate = 0.4;        // citations per field paper per year, for 10 years

    double max_expected = 2000.0;        // ceiling on any Poisson mean

    // Throws std::invalid_argument for out-of-range values.
    void validate() const;
};

nlohmann::json to_json(const SynthParams& p);
SynthParams synth_params_from_json(const nlohmann::json& j);

// Throws DataError when a Poisson mean exceeds max_expected.
Corpus simulate(const SynthParams& params);

// Exponential cohort growth, rising team sizes, broad P/C distributions, a
// feedback exponent rising 0.3 -> 1.0 across cohorts and a higher dropout
// hazard for women.
SynthParams paper_shaped_scenario();

// Writes publications.jsonl, citations.csv, genders.csv and scenario.json.
void write_synthetic_corpus(const Corpus& corpus, const SynthParams& params, const std::filesystem::path& dir);

}  // namespace scicareer
