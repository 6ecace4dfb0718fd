#pragma once

// Run configuration, CSV ingestion and artifact emission for the command
// line front end. Every artifact starts with comment lines giving the
// config hash and the time unit, followed by a stable header row.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bursty/burst_stats.hpp"
#include "bursty/double_stochastic.hpp"
#include "bursty/sde_engine.hpp"

namespace bursty {

enum class Model { Simple, Complex };

struct AnalysisOptions {
    int bins_per_decade = kDefaultBinsPerDecade;
    double t_min = 0.0;  // lower duration cutoff (scaled); 0 means kappa^2
    // Analytic overlay is emitted when both are set.
    std::optional<double> eta;
    std::optional<double> lambda;
    // Fit ranges for the scatter laws; lo >= hi means all populated bins.
    double peak_vs_duration_lo = 0.0, peak_vs_duration_hi = 0.0;
    double size_vs_duration_lo = 0.0, size_vs_duration_hi = 0.0;
    double size_vs_peak_lo = 0.0, size_vs_peak_hi = 0.0;
    std::size_t min_bin_count = 5;
    std::size_t psd_grid_points = std::size_t{1} << 18;
    std::size_t psd_segments = 16;
    double psd_fit_lo = 0.0, psd_fit_hi = 0.0;
};

struct FptOptions {
    std::optional<double> nu;   // default: from simple.eta, simple.lambda
    std::optional<double> h_y;  // default: lamperti(threshold, simple.eta)
    double t_min = 0.0;         // 0 means kappa^2
    double t_lo = 0.0;          // 0 means t_min
    double t_hi = 0.0;          // 0 means 10 * crossover time
    std::size_t points = 200;
    std::size_t k_terms = 10000;
};

struct RunConfig {
    std::string subcommand = "simulate";
    Model model = Model::Simple;
    SdeParams simple;
    ComplexSdeParams complex;
    double r0_bar = 0.4;
    double tau_seconds = kMinuteSeconds;  // modulation window, real time
    double lambda2 = 5.0;
    double sample_dt = kMinuteSeconds;
    double filter_window = kHourSeconds;
    SimConfig sim;
    std::uint64_t noise_seed = 1;
    std::size_t realizations = 1;  // independent runs with seeds seed, seed+1, ...
    double threshold = 2.0;
    AnalysisOptions analysis;
    FptOptions fpt;
    std::string input;
    std::string output = "out";

    void validate() const;
    ReturnModelParams return_params() const;
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

// Hash of the canonical JSON of everything except the output location.
std::string config_hash(const RunConfig& c);

RunConfig load_config(const std::filesystem::path& file);
void save_config(const RunConfig& c, const std::filesystem::path& file);

// Hex SHA-256 of a file's bytes.
std::string file_checksum(const std::filesystem::path& file);

// A two-column series read from CSV, with time converted to scaled units.
struct InputSeries {
    std::vector<double> t_s;
    std::vector<double> x;
    std::string time_column;  // as found in the header
};

// Accepts headers `t_s,x` (scaled time) and `t,x` or `t_seconds,x`
// (seconds, multiplied by sigma_t_sq). Lines starting with '#' are skipped.
// Malformed rows raise IoError naming the line.
InputSeries read_series(const std::filesystem::path& file, double sigma_t_sq);

struct Column {
    std::string name;
    std::vector<double> values;
};

// Writes comment lines ("# key=value"), the header row and the columns,
// which must have equal length.
void write_csv(const std::filesystem::path& file, const std::vector<std::pair<std::string, std::string>>& comments,
               const std::vector<Column>& columns);

void write_json(const std::filesystem::path& file, const nlohmann::json& j);

// Outcome of a subcommand: files written (relative to the output directory)
// and a summary that also goes to summary.json.
struct RunResult {
    std::vector<std::string> files;
    nlohmann::json summary;
};

RunResult run_simulate(const RunConfig& cfg);
RunResult run_analyze(const RunConfig& cfg);
RunResult run_fpt(const RunConfig& cfg);
RunResult run_returns(const RunConfig& cfg);

// Dispatches on cfg.subcommand, then writes config.json, summary.json and
// manifest.json (checksums of every artifact) into cfg.output.
RunResult execute(const RunConfig& cfg);

struct VerifyReport {
    bool identical = true;
    std::vector<std::string> mismatched;
};

// Re-executes the config stored in `output_dir` into a scratch directory and
// compares the manifests; the stored files must also still match their checksums.
VerifyReport verify_run(const std::filesystem::path& output_dir);

// Exit code for an exception: 2 validation/domain, 3 I/O, 4 numerical.
int exit_code_for(const std::exception& e);

// Column documentation shown by --help.
const char* csv_formats_help();

}  // namespace bursty
