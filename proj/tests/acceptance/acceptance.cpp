// Acceptance harness: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "scicareer/careers.hpp"
#include "scicareer/corpus.hpp"
#include "scicareer/features.hpp"
#include "scicareer/indices.hpp"
#include "scicareer/inequality.hpp"
#include "scicareer/matthew.hpp"
#include "scicareer/predict.hpp"
#include "scicareer/synth.hpp"

using namespace scicareer;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// ============================================================================
// 1. Gini oracle
// ============================================================================

Outcome gini_oracle() {
    const auto start = Clock::now();
    std::mt19937_64 rng(101);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng() % 199;
        const int max_value = trial % 3 == 0 ? 2 : (trial % 3 == 1 ? 20 : 1000);
        std::vector<double> x(n);
        for (auto& v : x) v = (rng() % 3 == 0) ? 0.0 : static_cast<double>(rng() % (max_value + 1));
        x[rng() % n] += 1.0;
        double num = 0.0, sum = 0.0;
        for (double a : x) {
            sum += a;
            for (double b : x) num += std::abs(a - b);
        }
        const double direct = num / (2.0 * static_cast<double>(n) * sum);
        worst = std::max(worst, std::abs(gini(x) - direct));
    }
    const double secs = seconds_since(start);
    return {worst <= 1e-9 && secs < 10.0,
            "1000 vectors, max |diff| " + fmt("%.2e", worst) + ", " + fmt("%.2f", secs) + " s"};
}

// ============================================================================
// 2. Effect-size oracle
// ============================================================================

Outcome effect_size_oracle() {
    std::mt19937_64 rng(202);
    std::size_t mismatches = 0;
    double worst_identity = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t nm = 1 + rng() % 60, nf = 1 + rng() % 60;
        const int range = 1 + static_cast<int>(rng() % 12);
        std::vector<double> m(nm), f(nf);
        for (auto& v : m) v = static_cast<double>(rng() % static_cast<unsigned>(range));
        for (auto& v : f) v = static_cast<double>(rng() % static_cast<unsigned>(range));
        long long dominance = 0;
        for (double a : m) {
            for (double b : f) dominance += (a > b) - (a < b);
        }
        const auto mw = mann_whitney_u(m, f);
        const double nmnf = static_cast<double>(nm * nf);
        // 2U - n_m n_f is the pairwise dominance count; compare as integers.
        if (2.0 * mw.u - nmnf != static_cast<double>(dominance)) ++mismatches;
        worst_identity = std::max(worst_identity, std::abs(cliffs_d(m, f) - (2.0 * mw.u / nmnf - 1.0)));
    }
    return {mismatches == 0 && worst_identity <= 1e-12,
            "1000 samples, " + std::to_string(mismatches) + " count mismatches, identity error " +
                fmt("%.1e", worst_identity)};
}

// ============================================================================
// 3. Scaling-fit recovery and cutoff location
// ============================================================================

std::vector<FeedbackPair> planted_pairs(std::uint64_t seed, std::size_t n,
                                        const std::function<double(double, std::mt19937_64&)>& draw) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> log_x(0.0, std::log(1000.0));
    std::vector<FeedbackPair> pairs;
    while (pairs.size() < n) {
        const double x = std::round(std::exp(log_x(rng)));
        const double y = draw(x, rng);
        if (y >= 1.0) pairs.push_back({x, y});   // the measurement keeps active authors only
    }
    return pairs;
}

Outcome scaling_recovery() {
    const auto start = Clock::now();
    std::string detail;
    bool ok = true;
    for (double beta : {0.0, 0.3, 0.8, 1.0}) {
        const auto pairs = planted_pairs(300 + static_cast<std::uint64_t>(beta * 10), 10000, [&](double x, std::mt19937_64& rng) {
            return static_cast<double>(std::poisson_distribution<long>(5.0 * std::pow(x, beta))(rng));
        });
        const auto est = estimate_cutoff(pairs);
        const bool hit = est.fit.ok() && std::abs(est.fit.beta - beta) <= 0.05;
        ok &= hit;
        detail += "beta " + fmt("%.1f", beta) + "->" + fmt("%.3f", est.fit.beta) + "; ";
    }

    // Flat below 10, power law above; lognormal noise keeps the log-space
    // variance constant across x.
    const double breakpoint = 10.0;
    const double bin_width = std::log(1000.0) / 20.0;
    auto located = [&](const std::vector<FeedbackPair>& pairs) {
        const auto est = estimate_cutoff(pairs);
        return est.fit.ok() && std::abs(std::log(est.fit.x_min) - std::log(breakpoint)) <= bin_width + 1e-9;
    };
    int hits = 0, poisson_hits = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        hits += located(planted_pairs(seed, 10000, [&](double x, std::mt19937_64& rng) {
            return 5.0 * std::max(x, breakpoint) * std::exp(std::normal_distribution<double>(0.0, 0.3)(rng));
        }));
        poisson_hits += located(planted_pairs(1000 + seed, 10000, [&](double x, std::mt19937_64& rng) {
            return static_cast<double>(std::poisson_distribution<long>(5.0 * std::max(x, breakpoint))(rng));
        }));
    }
    ok &= hits >= 45;
    const double secs = seconds_since(start);
    ok &= secs < 60.0;
    detail += "breakpoint within one bin in " + std::to_string(hits) + "/50 seeds (Poisson noise: " +
              std::to_string(poisson_hits) + "/50), " + fmt("%.1f", secs) + " s";
    return {ok, detail};
}

// ============================================================================
// 4. Dropout label
// ============================================================================

Outcome dropout_exhaustive() {
    const auto start = Clock::now();
    std::size_t mismatches = 0;
    for (std::uint32_t mask = 0; mask < (1u << 15); ++mask) {
        CareerSeries s;
        for (std::size_t a = 0; a < 15; ++a) s.p[a] = (mask >> a) & 1u;
        int run = 0, longest = 0;
        for (std::size_t a = 0; a < 15; ++a) {
            run = s.p[a] ? 0 : run + 1;
            longest = std::max(longest, run);
        }
        if (dropout_label(s) != (longest >= 10)) ++mismatches;
    }
    const double secs = seconds_since(start);
    return {mismatches == 0 && secs < 5.0,
            "32768 patterns, " + std::to_string(mismatches) + " mismatches, " + fmt("%.2f", secs) + " s"};
}

// ============================================================================
// 5. Elastic net
// ============================================================================

Outcome elastic_net() {
    std::mt19937_64 rng(505);
    std::normal_distribution<double> z(0.0, 1.0);
    std::string detail;

    // zero penalty against least squares
    const Eigen::Index n0 = 500;
    Eigen::MatrixXd X0(n0, 4);
    Eigen::VectorXd y0(n0);
    for (Eigen::Index i = 0; i < n0; ++i) {
        for (Eigen::Index j = 0; j < 4; ++j) X0(i, j) = z(rng);
        y0(i) = 1.0 + 0.5 * X0(i, 0) - X0(i, 2) + z(rng);
    }
    const auto fit0 = fit_elastic_net(X0, y0, ModelKind::linear, 0.0, 0.5, 1e-12, 100000);
    Eigen::MatrixXd A(n0, 5);
    A << Eigen::VectorXd::Ones(n0), X0;
    const Eigen::VectorXd ols = A.colPivHouseholderQr().solve(y0);
    double ols_diff = std::abs(fit0.intercept - ols(0));
    for (Eigen::Index j = 0; j < 4; ++j) ols_diff = std::max(ols_diff, std::abs(fit0.coef(j) - ols(j + 1)));
    const bool ols_ok = ols_diff <= 1e-6;
    detail += "OLS diff " + fmt("%.1e", ols_diff) + "; ";

    // planted coefficients under cross-validation
    const Eigen::Index n = 10000;
    Dataset data{{"x1", "x2", "x3"}, Eigen::MatrixXd(n, 3), Eigen::VectorXd(n), {true, true, true}};
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < 3; ++j) data.X(i, j) = z(rng);
        data.y(i) = 1.5 * data.X(i, 0) - 2.0 * data.X(i, 1) + 0.01 * z(rng);
    }
    const auto report = cross_validate(data, ElasticNetConfig{}, 7);
    const bool planted_ok = report.folds_used == 10 && std::abs(report.coef_mean[0] - 1.5) <= 0.05 &&
                            std::abs(report.coef_mean[1] + 2.0) <= 0.05 && std::abs(report.coef_mean[2]) <= 0.05;
    detail += "planted (1.5, -2, 0) -> (" + fmt("%.3f", report.coef_mean[0]) + ", " + fmt("%.3f", report.coef_mean[1]) +
              ", " + fmt("%.3f", report.coef_mean[2]) + "); ";

    // duplicated column
    Eigen::MatrixXd Xd(n, 3);
    Xd << data.X.col(0), data.X.col(0), data.X.col(1);
    const auto dup = fit_elastic_net(Xd, data.y, ModelKind::linear, 0.05, 0.5, 1e-10, 100000);
    const bool group_ok = dup.coef(0) > 0.1 && dup.coef(1) > 0.1 && std::abs(dup.coef(0) - dup.coef(1)) < 1e-3;
    detail += "duplicate copies " + fmt("%.3f", dup.coef(0)) + "/" + fmt("%.3f", dup.coef(1));
    return {ols_ok && planted_ok && group_ok, detail};
}

// ============================================================================
// 6. Index oracles
// ============================================================================

Count h_brute(const std::vector<Count>& counts) {
    Count best = 0;
    for (Count h = 1; h <= static_cast<Count>(counts.size()); ++h) {
        if (std::count_if(counts.begin(), counts.end(), [&](Count c) { return c >= h; }) >= h) best = h;
    }
    return best;
}

Outcome index_oracles() {
    std::mt19937_64 rng(606);
    std::size_t h_mismatch = 0, h5_mismatch = 0, trials = 10000;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const std::size_t pubs = 1 + rng() % 50;
        std::vector<Count> counts(pubs);
        for (auto& c : counts) c = static_cast<Count>(rng() % 25);
        if (h_index(counts) != h_brute(counts)) ++h_mismatch;

        // Corpus: `pubs` focal papers over 2000..2009 in two sources, plus citing papers.
        IngestOptions options;
        options.cohort_guard_years = 0;
        CorpusBuilder builder(options);
        std::vector<std::pair<CitationKey, CitationKey>> refs;
        std::vector<Year> year(pubs);
        std::vector<int> source(pubs);
        std::vector<std::vector<Year>> cited_in(pubs);
        std::size_t line = 0, citing = 0;
        auto add = [&](const std::string& id, Year y, const std::string& src) {
            PublicationRecord r;
            r.pub_id = id;
            r.title = id;
            r.year = y;
            r.source_id = src;
            r.authors.push_back({"u", "u", std::nullopt});
            builder.add(r, ++line);
        };
        for (std::size_t i = 0; i < pubs; ++i) {
            year[i] = static_cast<Year>(2000 + rng() % 10);
            source[i] = static_cast<int>(rng() % 2);
            add("p" + std::to_string(i), year[i], "s" + std::to_string(source[i]));
            const int k = static_cast<int>(rng() % 8);
            for (int j = 0; j < k; ++j) {
                const Year cy = static_cast<Year>(year[i] + rng() % 7);
                const std::string id = "c" + std::to_string(citing++);
                add(id, cy, "citer");
                refs.emplace_back(CitationKey::by_id(id), CitationKey::by_id("p" + std::to_string(i)));
                cited_in[i].push_back(cy);
            }
        }
        const Corpus corpus = link_citations(builder.finish(), refs).first;
        const Year y = static_cast<Year>(2000 + rng() % 14);
        for (int s = 0; s < 2; ++s) {
            std::vector<Count> window;
            for (std::size_t i = 0; i < pubs; ++i) {
                if (source[i] != s || year[i] < y - 4 || year[i] > y) continue;
                window.push_back(std::count_if(cited_in[i].begin(), cited_in[i].end(),
                                               [&](Year cy) { return cy >= y - 4 && cy <= y; }));
            }
            if (h5_index(corpus, "s" + std::to_string(s), y) != h_brute(window)) ++h5_mismatch;
        }
    }
    return {h_mismatch == 0 && h5_mismatch == 0,
            std::to_string(trials) + " trials, h mismatches " + std::to_string(h_mismatch) + ", h5 mismatches " +
                std::to_string(h5_mismatch)};
}

// ============================================================================
// 7. Directional replication on the paper-shaped scenario
// ============================================================================

// Values at t = 15 for every full-window cohort member, pooled over cohorts.
struct Pooled {
    std::vector<double> productivity, impact, male_p, female_p;
};

Pooled pooled_at_15(const Corpus& corpus, const CorpusView& view) {
    Pooled out;
    for (Year y : view.cohort_years()) {
        for (const auto& s : build_series(view, y)) {
            out.productivity.push_back(static_cast<double>(s.P_at(15)));
            out.impact.push_back(static_cast<double>(s.C_at(15)));
            const Gender g = corpus.author(s.author).gender;
            if (g == Gender::male) out.male_p.push_back(static_cast<double>(s.P_at(15)));
            if (g == Gender::female) out.female_p.push_back(static_cast<double>(s.P_at(15)));
        }
    }
    return out;
}

Outcome paper_scenario() {
    const auto start = Clock::now();
    const SynthParams params = paper_shaped_scenario();
    const Corpus corpus = simulate(params);
    const auto all = pooled_at_15(corpus, make_view(corpus, params.cohort_years, false, false));
    const auto kept = pooled_at_15(corpus, make_view(corpus, params.cohort_years, false, true));

    const double gini_p = gini(all.productivity), gini_c = gini(all.impact);
    const bool a = gini_c > gini_p;
    const auto mw = mann_whitney_u(all.male_p, all.female_p);
    const double d = cliffs_d(mw);
    const bool b = d > 0.0 && mw.p <= 0.05;
    const double d_kept = cliffs_d(kept.male_p, kept.female_p);
    const bool c = std::abs(d_kept) < std::abs(d);

    // Feedback is generated on lead publications, so the first-author view is
    // the matching measurement. Mean fitted exponent over ages per cohort,
    // averaged within five-year cohort blocks.
    const auto report = me_report(make_view(corpus, params.cohort_years, true, false), params.cohort_years,
                                  Measure::productivity);
    std::map<Year, std::pair<double, int>> blocks;
    for (const auto& [cohort, env] : report.beta_by_cohort) {
        const Year block = std::min<Year>(1995, params.cohort_years.first + (cohort - params.cohort_years.first) / 5 * 5);
        blocks[block].first += env.mean;
        ++blocks[block].second;
    }
    std::vector<double> trend;
    std::string trend_text;
    for (const auto& [block, acc] : blocks) {
        trend.push_back(acc.first / acc.second);
        trend_text += (trend_text.empty() ? "" : ",") + fmt("%.2f", trend.back());
    }
    bool dd = trend.size() >= 2;
    for (std::size_t i = 1; i < trend.size(); ++i) dd &= trend[i] > trend[i - 1];

    const double secs = seconds_since(start);
    const bool ok = a && b && c && dd && secs < 300.0;
    std::string detail = "(a) Gini C " + fmt("%.3f", gini_c) + " > P " + fmt("%.3f", gini_p) + (a ? "" : " [no]") +
                         "; (b) d " + fmt("%.3f", d) + " p " + fmt("%.1e", mw.p) + (b ? "" : " [no]") +
                         "; (c) d without dropouts " + fmt("%.3f", d_kept) + (c ? "" : " [no]") +
                         "; (d) beta by cohort block " + trend_text + (dd ? "" : " [not monotone]") + "; " +
                         fmt("%.0f", secs) + " s";
    return {ok, detail};
}

// ============================================================================
// 8. Null calibration
// ============================================================================

Outcome null_calibration() {
    const auto start = Clock::now();
    double total = 0.0;
    const int seeds = 20;
    for (int seed = 1; seed <= seeds; ++seed) {
        SynthParams p = paper_shaped_scenario();
        p.seed = static_cast<std::uint64_t>(seed);
        p.dropout_hazard = {0.06, 0.06, 0.06};
        p.female_productivity_ratio = 1.0;
        p.cohort_years = {1975, 2000};
        p.cohort_size_base = 120;
        p.cohort_size_growth = 0.03;
        p.field_papers_per_year = 150;
        p.field_authors = 200;
        const Corpus corpus = simulate(p);
        const auto grid = gender_grid(make_view(corpus, p.cohort_years, false, false), p.cohort_years,
                                      Measure::productivity);
        total += grid.summary.fraction_significant;
    }
    const double mean = total / seeds;
    return {mean <= 0.075, "mean significant fraction " + fmt("%.2f", 100.0 * mean) + "% over 20 seeds, " +
                               fmt("%.0f", seconds_since(start)) + " s"};
}

// ============================================================================
// 9. Determinism of `all`
// ============================================================================

int run_tool(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(SCICAREER_TOOL) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        out[fs::relative(e.path(), dir).generic_string()] = s.str();
    }
    return out;
}

Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / "scicareer_acceptance_determinism";
    fs::remove_all(root);
    fs::create_directories(root);
    std::ofstream(root / "scenario.json") << R"({"cohort_years": [1990, 1994], "corpus_end": 2008,
        "cohort_size_base": 150, "field_authors": 80, "field_papers_per_year": 60, "beta_prod": [0.3, 1.0]})";
    const fs::path log = root / "log.txt";
    if (run_tool("synth --scenario " + (root / "scenario.json").string() + " --seed 11 --out " + (root / "gen").string(), log) != 0) {
        return {false, "synth failed"};
    }
    const fs::path synth = root / "gen" / "synth";
    const std::string inputs = " --input " + (synth / "publications.jsonl").string() + " --citations " +
                               (synth / "citations.csv").string() + " --genders " + (synth / "genders.csv").string() +
                               " --cohorts 1990:1994 --seed 5";
    if (run_tool("all" + inputs + " --out " + (root / "a").string(), log) != 0 ||
        run_tool("all" + inputs + " --jobs 4 --out " + (root / "b").string(), log) != 0) {
        return {false, "all failed"};
    }
    const auto first = read_tree(root / "a");
    if (run_tool("all" + inputs + " --out " + (root / "a").string(), log) != 0) return {false, "rerun failed"};
    const auto again = read_tree(root / "a");
    const auto other = read_tree(root / "b");
    std::size_t differing = 0;
    for (const auto& [file, bytes] : first) {
        if (!again.count(file) || again.at(file) != bytes) ++differing;
        if (!other.count(file) || other.at(file) != bytes) ++differing;
    }
    const bool ok = differing == 0 && again.size() == first.size() && other.size() == first.size();
    fs::remove_all(root);
    return {ok, std::to_string(first.size()) + " artifacts, " + std::to_string(differing) +
                    " differing across reruns and job counts"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"gini oracle", gini_oracle},
        {"effect-size oracle", effect_size_oracle},
        {"scaling-fit recovery", scaling_recovery},
        {"dropout label exhaustive check", dropout_exhaustive},
        {"elastic net", elastic_net},
        {"index oracles", index_oracles},
        {"paper-shaped scenario directions", paper_scenario},
        {"null calibration", null_calibration},
        {"determinism of all", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
