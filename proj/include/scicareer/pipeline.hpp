#pragma once

// Command orchestration behind the scicareer tool: each command reads the
// corpus snapshot from the output directory, writes its artifacts there and
// records them in manifest.json together with the configuration and SHA-256
// digests of inputs and outputs.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scicareer/corpus.hpp"

namespace scicareer::cli {

enum class Command { ingest, describe, inequality, gender, matthew, features, predict, synth, all };

std::string_view to_string(Command c);
std::optional<Command> parse_command(std::string_view text);

// Bad flags or configuration values; maps to exit status 1.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::filesystem::path input;         // publications, one JSON record per line
    std::filesystem::path citations;     // optional citation CSV
    std::filesystem::path genders;       // optional gender label CSV
    std::filesystem::path scenario;      // optional synth parameter JSON
    YearRange cohorts{1970, 2000};
    int early_end = 3;
    int gap = 10;
    int window = 3;
    bool first_author = false;
    bool remove_dropouts = false;
    std::filesystem::path out;
    std::uint64_t seed = 1;
    int jobs = 1;

    // Throws UsageError.
    void validate() const;
    // The settings that shape analysis outputs (no paths, no job count).
    nlohmann::json analysis_json() const;
};

// "1970:2000" -> {1970, 2000}. Throws UsageError.
YearRange parse_year_range(std::string_view text);

// Applies the keys present in a config file on top of base. Throws UsageError
// for unknown keys or wrongly typed values.
RunConfig apply_config_json(const nlohmann::json& j, RunConfig base);

// Default output root: $SCICAREER_OUT, else "scicareer-out".
std::filesystem::path default_output_root();

std::string sha256_file(const std::filesystem::path& path);

// Runs the command, throwing UsageError, DataError or std::exception.
void execute(Command command, const RunConfig& config, std::ostream& log);

// Runs the command and maps failures to exit codes: 0 success, 1 usage,
// 2 data error. Messages go to err.
int run(Command command, const RunConfig& config, std::ostream& log, std::ostream& err);

}  // namespace scicareer::cli
