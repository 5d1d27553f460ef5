#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ranklab/sde_engine.hpp"

namespace ranklab {

/// Exit statuses of the command line front end.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitConfig = 2, kExitNumeric = 3, kExitIo = 4 };

inline const std::vector<std::string>& known_experiments() {
    static const std::vector<std::string> names{
        "simulate",      "verify_lemma2", "verify_lemma3", "verify_lemma4", "verify_prop1",
        "verify_prop3",  "convergence",   "coincidence",   "remark_probe"};
    return names;
}

struct ModelConfig {
    std::string type = "atlas";  // atlas | rank_based
    AtlasParams atlas;
    RankBasedParams rank_based;

    RankBasedParams as_rank_based() const;
    std::size_t n() const;
};

/**
 * One declarative JSON run file:
 *
 *   {
 *     "model": {"type": "atlas", "n": 3, "g": 0.1, "sigma": 0.2, "initial_log": [0, 0, 0]},
 *     "grid": {"T": 1.0, "M": 4096},
 *     "monte_carlo": {"paths": 100, "master_seed": 42},
 *     "experiments": ["verify_prop1"],
 *     "portfolio": {"generating_function": "entropy", "parameters": {}},
 *     "convergence": {"claim": "lemma2", "levels": [1024, 4096, 16384]},
 *     "coincidence": {"delta": 0.01},
 *     "output_dir": "out"
 *   }
 *
 * A rank_based model replaces n/g/sigma with "drifts" and "volatilities" tables.
 */
struct RunConfig {
    ModelConfig model;
    double horizon = 1.0;
    std::size_t steps = 1024;
    std::size_t paths = 100;
    std::uint64_t master_seed = 0;
    std::vector<std::string> experiments;
    std::string generating_function = "entropy";
    std::map<std::string, double> generating_parameters;
    std::string convergence_claim = "lemma2";
    std::vector<std::size_t> convergence_levels;  // empty means M/16, M/4, M
    std::optional<double> coincidence_delta;      // empty means sqrt(h)
    std::string output_dir = "out";

    /// Normalized config with defaults filled in; output_dir is not echoed.
    nlohmann::json echo() const;
    std::vector<std::size_t> resolved_levels() const;
};

/// Invalid configuration. Each diagnostic reads "line L: message" when the line is known.
class ConfigError : public ValidationError {
public:
    explicit ConfigError(std::vector<std::string> diagnostics);
    const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

private:
    std::vector<std::string> diagnostics_;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

using CsvCell = std::variant<std::int64_t, double, std::string>;

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<CsvCell>> rows;
};

/// Header row then one line per row; doubles printed with 17 significant digits.
void emit_csv(const CsvTable& table, const std::string& path);
void emit_summary(const nlohmann::json& summary, const std::string& path);

/// Reads a table written by emit_csv; every cell comes back as a string.
std::vector<std::vector<std::string>> read_csv(const std::string& path);

std::string format_double(double value);

struct RunOptions {
    std::optional<std::string> output_dir;
    int threads = 1;
};

/// Runs every requested experiment and returns the files written.
std::vector<std::string> run(const RunConfig& config, const RunOptions& options, std::ostream& log);

/// Entry point for the `ranklab` binary; returns an ExitCode.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

const char* version_string();

}  // namespace ranklab
