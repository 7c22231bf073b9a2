// scicareer: career-inequality pipeline over publication/citation corpora.
//
//   scicareer synth --out runs/demo --seed 7
//   scicareer all --input runs/demo/synth/publications.jsonl \
//       --citations runs/demo/synth/citations.csv --out runs/demo

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "scicareer/pipeline.hpp"

namespace cli = scicareer::cli;

int main(int argc, char** argv) {
    CLI::App app{"Career inequality pipeline: ingest, describe, inequality, gender, matthew, features, predict, synth, all"};
    app.set_version_flag("--version", "scicareer 1.0");

    std::string command_text;
    std::string config_file, input, citations, genders, scenario, cohorts, out;
    int te = 3, gap = 10, window = 3, jobs = 1;
    std::uint64_t seed = 1;
    bool first_author = false, remove_dropouts = false;

    app.add_option("command", command_text, "ingest | describe | inequality | gender | matthew | features | predict | synth | all")
        ->required();
    auto* o_config = app.add_option("--config", config_file, "JSON config file; flags override its values");
    auto* o_input = app.add_option("--input", input, "publication records, one JSON object per line");
    auto* o_citations = app.add_option("--citations", citations, "citation pairs CSV (citing,cited)");
    auto* o_genders = app.add_option("--genders", genders, "gender labels CSV (author_id,gender)");
    auto* o_scenario = app.add_option("--scenario", scenario, "synth parameter JSON (default: paper-shaped scenario)");
    auto* o_cohorts = app.add_option("--cohorts", cohorts, "cohort years FIRST:LAST (default 1970:2000)");
    auto* o_te = app.add_option("--te", te, "last early-career age (default 3)");
    auto* o_gap = app.add_option("--gap", gap, "publication-free ages that make a dropout (default 10)");
    auto* o_window = app.add_option("--window", window, "window width for window counting (default 3)");
    auto* o_first = app.add_flag("--first-author", first_author, "credit publications to first authors only");
    auto* o_dropouts = app.add_flag("--remove-dropouts", remove_dropouts, "exclude dropouts from the analysis view");
    auto* o_out = app.add_option("--out", out, "output directory (default $SCICAREER_OUT or scicareer-out)");
    auto* o_seed = app.add_option("--seed", seed, "seed for cross-validation folds and synth (default 1)");
    auto* o_jobs = app.add_option("--jobs", jobs, "worker threads (default 1)");
    (void)o_config;

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    const auto command = cli::parse_command(command_text);
    if (!command) {
        std::cerr << "error: unknown command '" << command_text << "'\n" << app.help();
        return 1;
    }

    cli::RunConfig config;
    config.out = cli::default_output_root();
    try {
        if (!config_file.empty()) {
            std::ifstream in(config_file);
            if (!in) throw cli::UsageError("cannot open config file " + config_file);
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(in);
            } catch (const nlohmann::json::exception& e) {
                throw cli::UsageError("config file " + config_file + " is not valid JSON: " + e.what());
            }
            config = cli::apply_config_json(j, config);
        }
        if (o_input->count()) config.input = input;
        if (o_citations->count()) config.citations = citations;
        if (o_genders->count()) config.genders = genders;
        if (o_scenario->count()) config.scenario = scenario;
        if (o_cohorts->count()) config.cohorts = cli::parse_year_range(cohorts);
        if (o_te->count()) config.early_end = te;
        if (o_gap->count()) config.gap = gap;
        if (o_window->count()) config.window = window;
        if (o_first->count()) config.first_author = first_author;
        if (o_dropouts->count()) config.remove_dropouts = remove_dropouts;
        if (o_out->count()) config.out = out;
        if (o_seed->count()) config.seed = seed;
        if (o_jobs->count()) config.jobs = jobs;
    } catch (const cli::UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }

    return cli::run(*command, config, std::cout, std::cerr);
}
