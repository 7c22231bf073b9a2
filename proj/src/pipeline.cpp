#include "scicareer/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "scicareer/careers.hpp"
#include "scicareer/csv.hpp"
#include "scicareer/features.hpp"
#include "scicareer/indices.hpp"
#include "scicareer/inequality.hpp"
#include "scicareer/matthew.hpp"
#include "scicareer/predict.hpp"
#include "scicareer/synth.hpp"

namespace scicareer::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kCommands[] = {"ingest",  "describe", "inequality", "gender", "matthew",
                                          "features", "predict",  "synth",      "all"};

constexpr const char* kManifest = "manifest.json";
constexpr const char* kSnapshot = "corpus.json";

}  // namespace

std::string_view to_string(Command c) { return kCommands[static_cast<std::size_t>(c)]; }

std::optional<Command> parse_command(std::string_view text) {
    for (std::size_t i = 0; i < std::size(kCommands); ++i) {
        if (kCommands[i] == text) return static_cast<Command>(i);
    }
    return std::nullopt;
}

// ============================================================================
// Configuration
// ============================================================================

void RunConfig::validate() const {
    if (cohorts.empty()) throw UsageError("cohort range is empty");
    if (early_end < 1 || early_end >= kCareerLength) throw UsageError("--te must lie in [1, 14]");
    if (gap < 1 || gap > kCareerLength - 1) throw UsageError("--gap must lie in [1, 14]");
    if (window < 1 || window > kCareerLength) throw UsageError("--window must lie in [1, 15]");
    if (jobs < 1) throw UsageError("--jobs must be at least 1");
    if (out.empty()) throw UsageError("output directory is empty");
}

json RunConfig::analysis_json() const {
    return {{"cohorts", {cohorts.first, cohorts.last}},
            {"te", early_end},
            {"gap", gap},
            {"window", window},
            {"first_author", first_author},
            {"remove_dropouts", remove_dropouts},
            {"seed", seed}};
}

YearRange parse_year_range(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) throw UsageError("expected FIRST:LAST, got '" + std::string(text) + "'");
    auto parse = [&](std::string_view part) {
        Year y = 0;
        const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), y);
        if (ec != std::errc() || ptr != part.data() + part.size()) {
            throw UsageError("bad year '" + std::string(part) + "' in '" + std::string(text) + "'");
        }
        return y;
    };
    YearRange r{parse(text.substr(0, colon)), parse(text.substr(colon + 1))};
    if (r.empty()) throw UsageError("cohort range '" + std::string(text) + "' is empty");
    return r;
}

RunConfig apply_config_json(const json& j, RunConfig c) {
    if (!j.is_object()) throw UsageError("config file must hold a JSON object");
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "input") c.input = value.get<std::string>();
            else if (key == "citations") c.citations = value.get<std::string>();
            else if (key == "genders") c.genders = value.get<std::string>();
            else if (key == "scenario") c.scenario = value.get<std::string>();
            else if (key == "cohorts") c.cohorts = value.is_string() ? parse_year_range(value.get<std::string>())
                                                                      : YearRange{value.at(0).get<Year>(), value.at(1).get<Year>()};
            else if (key == "te") c.early_end = value.get<int>();
            else if (key == "gap") c.gap = value.get<int>();
            else if (key == "window") c.window = value.get<int>();
            else if (key == "first_author") c.first_author = value.get<bool>();
            else if (key == "remove_dropouts") c.remove_dropouts = value.get<bool>();
            else if (key == "out") c.out = value.get<std::string>();
            else if (key == "seed") c.seed = value.get<std::uint64_t>();
            else if (key == "jobs") c.jobs = value.get<int>();
            else throw UsageError("unknown config key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw UsageError(std::string("bad config value: ") + e.what());
    }
    return c;
}

fs::path default_output_root() {
    if (const char* env = std::getenv("SCICAREER_OUT"); env != nullptr && *env != '\0') return env;
    return "scicareer-out";
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buffer[1 << 16];
    while (in.read(buffer, sizeof buffer) || in.gcount() > 0) EVP_DigestUpdate(ctx, buffer, static_cast<std::size_t>(in.gcount()));
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

// ============================================================================
// Workspace: output directory, manifest and bounded parallelism
// ============================================================================

namespace {

// Runs fn(0..n-1) on up to `jobs` threads; results come back in index order.
template <class F>
auto parallel_map(std::size_t n, int jobs, F fn) -> std::vector<decltype(fn(std::size_t{}))> {
    using R = decltype(fn(std::size_t{}));
    std::vector<R> results(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                results[i] = fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto threads = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return results;
}

class Workspace {
public:
    Workspace(const RunConfig& config, std::ostream& log) : config_(config), log_(log), dir_(config.out) {
        const fs::path path = dir_ / kManifest;
        if (fs::exists(path)) {
            std::ifstream in(path);
            try {
                manifest_ = json::parse(in);
            } catch (const json::exception& e) {
                throw DataError("unreadable manifest " + path.string() + ": " + e.what());
            }
        } else {
            manifest_ = {{"format", "scicareer-manifest"}, {"version", 1}, {"stages", json::object()}};
        }
    }

    const fs::path& dir() const { return dir_; }
    std::ostream& log() { return log_; }
    const RunConfig& config() const { return config_; }

    // Starts a fresh analysis run: drops every recorded analysis stage and
    // its files, keeping synthetic corpus records.
    void reset_analysis() {
        auto& stages = manifest_["stages"];
        for (auto it = stages.begin(); it != stages.end();) {
            if (it.key() == "synth") {
                ++it;
                continue;
            }
            for (const auto& [file, digest] : it.value().at("outputs").items()) fs::remove(dir_ / file);
            it = stages.erase(it);
        }
        manifest_["config"] = config_.analysis_json();
        manifest_.erase("inputs");
    }

    // Refuses to mix outputs produced under different configurations and
    // checks the snapshot against the digest recorded at ingest.
    void require_snapshot() {
        const fs::path snapshot = dir_ / kSnapshot;
        if (!fs::exists(snapshot)) {
            throw DataError("corpus snapshot not found in " + dir_.string() + "; run `ingest` first");
        }
        const auto& stages = manifest_["stages"];
        if (!stages.contains("ingest")) {
            throw DataError("manifest in " + dir_.string() + " has no ingest record; run `ingest` again");
        }
        if (manifest_.value("config", json()) != config_.analysis_json()) {
            throw DataError("configuration differs from the one recorded in " + (dir_ / kManifest).string() +
                            " (" + manifest_.value("config", json()).dump() +
                            "); re-run `ingest` or `all`, or use another --out");
        }
        if (sha256_file(snapshot) != stages["ingest"]["outputs"].value(kSnapshot, "")) {
            throw DataError("corpus snapshot " + snapshot.string() + " does not match the manifest digest; re-run `ingest`");
        }
    }

    Corpus load_snapshot() {
        require_snapshot();
        std::ifstream in(dir_ / kSnapshot);
        return from_snapshot(json::parse(in));
    }

    void set_inputs(json inputs) { manifest_["inputs"] = std::move(inputs); }

    // Writes a file through a string buffer, registering it with the stage.
    void write(const std::string& stage, const fs::path& relative, const std::function<void(std::ostream&)>& body) {
        std::ostringstream buffer;
        body(buffer);
        const fs::path path = dir_ / relative;
        fs::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary);
        out << buffer.str();
        out.close();
        if (!out) throw DataError("cannot write " + path.string());
        pending_[stage].push_back(relative.generic_string());
    }
    void write_json(const std::string& stage, const fs::path& relative, const json& value) {
        write(stage, relative, [&](std::ostream& out) { out << value.dump(2) << '\n'; });
    }
    void adopt(const std::string& stage, const fs::path& relative) { pending_[stage].push_back(relative.generic_string()); }

    void commit(const std::string& stage, json extra = json::object()) {
        json outputs = json::object();
        for (const auto& file : pending_[stage]) outputs[file] = sha256_file(dir_ / file);
        extra["outputs"] = std::move(outputs);
        manifest_["stages"][stage] = std::move(extra);
        pending_.erase(stage);
        save();
    }

private:
    void save() {
        fs::create_directories(dir_);
        std::ofstream out(dir_ / kManifest, std::ios::binary);
        out << manifest_.dump(2) << '\n';
        if (!out) throw DataError("cannot write manifest in " + dir_.string());
    }

    const RunConfig& config_;
    std::ostream& log_;
    fs::path dir_;
    json manifest_;
    std::map<std::string, std::vector<std::string>> pending_;
};

CorpusView analysis_view(const Corpus& corpus, const RunConfig& c) {
    return make_view(corpus, c.cohorts, c.first_author, c.remove_dropouts, c.gap);
}

std::ifstream open_input(const fs::path& path, const char* what) {
    if (path.empty()) throw UsageError(std::string("missing --") + what);
    std::ifstream in(path);
    if (!in) throw DataError(std::string("cannot open ") + what + " file " + path.string());
    return in;
}

// ============================================================================
// Stages
// ============================================================================

void stage_ingest(Workspace& ws) {
    const RunConfig& c = ws.config();
    ws.reset_analysis();
    json inputs = json::object();

    auto pubs_in = open_input(c.input, "input");
    auto [corpus, report] = parse_publications(pubs_in);
    inputs["publications"] = {{"path", c.input.generic_string()}, {"sha256", sha256_file(c.input)}};
    json link_json = nullptr;
    if (!c.citations.empty()) {
        auto cites_in = open_input(c.citations, "citations");
        const auto refs = parse_citation_csv(cites_in);
        auto [linked, link] = link_citations(corpus, refs);
        corpus = std::move(linked);
        link_json = to_json(link);
        inputs["citations"] = {{"path", c.citations.generic_string()}, {"sha256", sha256_file(c.citations)}};
    }
    if (!c.genders.empty()) {
        auto genders_in = open_input(c.genders, "genders");
        corpus = corpus.with_genders(parse_gender_csv(genders_in));
        inputs["genders"] = {{"path", c.genders.generic_string()}, {"sha256", sha256_file(c.genders)}};
    }
    // Fail early on a cohort range the corpus cannot support.
    (void)assign_cohorts(corpus, c.cohorts);

    ws.set_inputs(std::move(inputs));
    ws.write("ingest", kSnapshot, [&](std::ostream& out) { out << to_snapshot(corpus).dump() << '\n'; });
    ws.write_json("ingest", "ingest_report.json",
                  {{"publications", to_json(report)},
                   {"citations", link_json},
                   {"corpus",
                    {{"publications", corpus.publications().size()},
                     {"authors", corpus.authors().size()},
                     {"citations", corpus.citations().size()},
                     {"coverage", {corpus.coverage().first, corpus.coverage().last}}}}});
    ws.commit("ingest");
    ws.log() << "ingest: " << corpus.publications().size() << " publications, " << corpus.authors().size()
             << " authors, " << corpus.citations().size() << " citations";
    if (report.rejected > 0) ws.log() << " (" << report.rejected << " lines rejected, see ingest_report.json)";
    ws.log() << '\n';
}

void stage_describe(Workspace& ws, const Corpus& corpus) {
    const RunConfig& c = ws.config();
    const auto desc = field_descriptives(corpus, c.cohorts, c.gap);
    const CorpusView view = analysis_view(corpus, c);
    const auto years = view.cohort_years();
    std::vector<SeriesBuildStats> stats(years.size());
    const auto series = parallel_map(years.size(), c.jobs, [&](std::size_t i) { return build_series(view, years[i], &stats[i]); });

    json build = json::object();
    for (std::size_t i = 0; i < years.size(); ++i) {
        build[std::to_string(years[i])] = {{"authors", stats[i].authors},
                                           {"citations_counted", stats[i].citations_counted},
                                           {"citations_before_publication", stats[i].citations_before_publication},
                                           {"citations_beyond_horizon", stats[i].citations_beyond_horizon}};
    }
    ws.write_json("describe", "descriptives.json", {{"field", to_json(desc)}, {"series_build", std::move(build)}});
    ws.write("describe", "ccdf_productivity.csv", [&](std::ostream& out) { write_ccdf_csv(desc.ccdf_productivity, out); });
    ws.write("describe", "ccdf_impact.csv", [&](std::ostream& out) { write_ccdf_csv(desc.ccdf_impact, out); });
    ws.write("describe", "series.csv", [&](std::ostream& out) {
        bool header = true;
        for (const auto& s : series) {
            write_series_csv(corpus, s, out, header);
            header = false;
        }
    });
    ws.commit("describe");
    ws.log() << "describe: " << years.size() << " cohorts\n";
}

void stage_inequality(Workspace& ws, const Corpus& corpus) {
    const RunConfig& c = ws.config();
    const CorpusView view = analysis_view(corpus, c);
    const auto years = view.cohort_years();
    struct CohortResult {
        std::vector<GiniSeries> rows;
        std::vector<CareerSeries> series;
    };
    const auto results = parallel_map(years.size(), c.jobs, [&](std::size_t i) {
        CohortResult r;
        r.series = build_series(view, years[i]);
        if (r.series.size() < 2) return r;
        for (Measure m : {Measure::productivity, Measure::impact}) {
            for (Counting k : {Counting::cumulative, Counting::window}) r.rows.push_back(gini_series(r.series, years[i], m, k, c.window));
        }
        return r;
    });
    std::vector<GiniSeries> rows;
    std::vector<double> pooled_p, pooled_c;
    for (const auto& r : results) {
        rows.insert(rows.end(), r.rows.begin(), r.rows.end());
        for (const auto& s : r.series) {
            pooled_p.push_back(static_cast<double>(s.P_at(kCareerLength)));
            pooled_c.push_back(static_cast<double>(s.C_at(kCareerLength)));
        }
    }
    auto pooled = [](const std::vector<double>& v) -> json {
        try {
            return gini(v);
        } catch (const std::exception&) {
            return nullptr;
        }
    };
    ws.write("inequality", "gini.csv", [&](std::ostream& out) { write_gini_csv(rows, view, out); });
    ws.write_json("inequality", "inequality_summary.json",
                  {{"authors", pooled_p.size()},
                   {"pooled_gini_productivity_15", pooled(pooled_p)},
                   {"pooled_gini_impact_15", pooled(pooled_c)}});
    ws.commit("inequality");
    ws.log() << "inequality: " << rows.size() << " Gini series\n";
}

void stage_gender(Workspace& ws, const Corpus& corpus) {
    const RunConfig& c = ws.config();
    const CorpusView view = analysis_view(corpus, c);
    const Measure measures[] = {Measure::productivity, Measure::impact};
    const auto grids = parallel_map(2, c.jobs, [&](std::size_t i) { return gender_grid(view, c.cohorts, measures[i]); });
    json summary = json::object();
    for (const auto& g : grids) {
        const std::string name(to_string(g.measure));
        ws.write("gender", "gender_" + name + ".csv", [&](std::ostream& out) { write_gender_grid_csv(g, out); });
        summary[name] = to_json(g.summary);
    }
    const auto corr = gender_grid_correlation(grids[0], grids[1]);
    summary["significant_cell_correlation"] = corr ? json(*corr) : json(nullptr);
    ws.write_json("gender", "gender_summary.json", summary);
    ws.commit("gender");
    ws.log() << "gender: " << grids[0].summary.significant << "/" << grids[0].summary.computable
             << " productivity cells significant\n";
}

void stage_matthew(Workspace& ws, const Corpus& corpus) {
    const RunConfig& c = ws.config();
    const CorpusView view = analysis_view(corpus, c);
    const Measure measures[] = {Measure::productivity, Measure::impact};
    const auto reports = parallel_map(2, c.jobs, [&](std::size_t i) { return me_report(view, c.cohorts, measures[i]); });
    for (const auto& r : reports) {
        const std::string name(to_string(r.measure));
        ws.write_json("matthew", "matthew_" + name + ".json", to_json(r));
        ws.write("matthew", "matthew_beta_" + name + ".csv", [&](std::ostream& out) { write_fit_matrix_csv(r, false, out); });
        ws.write("matthew", "matthew_xmin_" + name + ".csv", [&](std::ostream& out) { write_fit_matrix_csv(r, true, out); });
    }
    ws.commit("matthew");
    ws.log() << "matthew: " << reports[0].fits.size() << " cells per measure\n";
}

FeatureTable compute_features(const Corpus& corpus, const RunConfig& c) {
    const CorpusView view = analysis_view(corpus, c);
    FeatureOptions options;
    options.early_end = c.early_end;
    return build_features(view, c.cohorts, options);
}

void stage_features(Workspace& ws, const Corpus& corpus) {
    const auto table = compute_features(corpus, ws.config());
    ws.write("features", "features.csv", [&](std::ostream& out) { write_features_csv(table, out); });
    if (!table.rows.empty()) {
        StandardizationSpec spec;
        for (auto name : kFeatureColumns) {
            const auto values = table.column(name);
            spec.columns.push_back(fit_column_scale(std::string(name), values, {}, is_binary_column(name)));
        }
        ws.write_json("features", "standardization.json", to_json(spec));
    }
    ws.write("features", "sources.csv", [&](std::ostream& out) { SourceIndex(corpus).write_csv(out); });
    ws.commit("features", {{"rows", table.rows.size()},
                           {"excluded_incomplete", table.excluded_incomplete},
                           {"top_source_undefined", table.top_source_undefined}});
    ws.log() << "features: " << table.rows.size() << " authors\n";
}

void stage_predict(Workspace& ws, const Corpus& corpus) {
    const RunConfig& c = ws.config();
    const auto table = compute_features(corpus, c);
    if (table.rows.empty()) throw DataError("no authors with a complete 15-year window; nothing to predict");
    const Tier tiers[] = {Tier::baseline, Tier::gender, Tier::early_achievement, Tier::social_support};
    // Dropout models need both classes; they are skipped when dropouts are filtered out.
    const bool dropout_possible = !c.remove_dropouts;
    const auto reports = parallel_map(8, c.jobs, [&](std::size_t i) -> std::optional<RegressionReport> {
        const Tier tier = tiers[i % 4];
        if (i < 4) {
            if (!dropout_possible) return std::nullopt;
            return dropout_model(table, tier, c.seed);
        }
        return success_model(table, tier, false, c.seed);
    });
    json dropout = json::array(), success = json::array();
    for (std::size_t i = 0; i < 8; ++i) (i < 4 ? dropout : success).push_back(reports[i] ? to_json(*reports[i]) : json(nullptr));
    ws.write_json("predict", "predict_dropout.json", {{"rows", table.rows.size()}, {"models", dropout}});
    ws.write_json("predict", "predict_success.json", {{"rows", table.rows.size()}, {"models", success}});
    ws.write("predict", "predict_tables.csv", [&](std::ostream& out) {
        csv::Writer w(out);
        w.row("model", "tier", "term", "mean", "sd");
        for (std::size_t i = 0; i < 8; ++i) {
            if (!reports[i]) continue;
            const auto& r = *reports[i];
            const std::string model = i < 4 ? "dropout" : "success";
            const std::string tier(to_string(tiers[i % 4]));
            for (std::size_t j = 0; j < r.names.size(); ++j) w.row(model, tier, r.names[j], r.coef_mean[j], r.coef_sd[j]);
            w.row(model, tier, "intercept", r.intercept_mean, "");
            auto metric = [&](const char* name, const std::optional<double>& v) {
                if (v) w.row(model, tier, name, *v, "");
            };
            metric("f1", r.f1);
            metric("average_precision", r.average_precision);
            metric("mse", r.mse);
            metric("adjusted_r2", r.adjusted_r2);
            w.row(model, tier, "n_obs", static_cast<double>(r.n_obs), "");
        }
    });
    ws.commit("predict");
    ws.log() << "predict: " << table.rows.size() << " authors, " << (dropout_possible ? 8 : 4) << " models\n";
}

void stage_synth(Workspace& ws) {
    const RunConfig& c = ws.config();
    SynthParams params = paper_shaped_scenario();
    if (!c.scenario.empty()) {
        auto in = open_input(c.scenario, "scenario");
        try {
            params = synth_params_from_json(json::parse(in));
        } catch (const json::exception& e) {
            throw UsageError("bad scenario file " + c.scenario.string() + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    params.seed = c.seed;
    const Corpus corpus = simulate(params);
    const fs::path dir = ws.dir() / "synth";
    write_synthetic_corpus(corpus, params, dir);
    for (const char* f : {"publications.jsonl", "citations.csv", "genders.csv", "scenario.json"}) ws.adopt("synth", fs::path("synth") / f);
    ws.commit("synth", {{"params", to_json(params)}});
    ws.log() << "synth: " << corpus.publications().size() << " publications, " << corpus.authors().size()
             << " authors written to " << dir.string() << '\n';
}

}  // namespace

// ============================================================================
// Entry points
// ============================================================================

void execute(Command command, const RunConfig& config, std::ostream& log) {
    config.validate();
    Workspace ws(config, log);
    if (command == Command::synth) {
        stage_synth(ws);
        return;
    }
    if (command == Command::ingest || command == Command::all) stage_ingest(ws);
    if (command == Command::ingest) return;

    const Corpus corpus = ws.load_snapshot();
    switch (command) {
        case Command::describe: stage_describe(ws, corpus); break;
        case Command::inequality: stage_inequality(ws, corpus); break;
        case Command::gender: stage_gender(ws, corpus); break;
        case Command::matthew: stage_matthew(ws, corpus); break;
        case Command::features: stage_features(ws, corpus); break;
        case Command::predict: stage_predict(ws, corpus); break;
        case Command::all:
            stage_describe(ws, corpus);
            stage_inequality(ws, corpus);
            stage_gender(ws, corpus);
            stage_matthew(ws, corpus);
            stage_features(ws, corpus);
            stage_predict(ws, corpus);
            break;
        default: break;
    }
}

int run(Command command, const RunConfig& config, std::ostream& log, std::ostream& err) {
    try {
        execute(command, config, log);
        return 0;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace scicareer::cli
