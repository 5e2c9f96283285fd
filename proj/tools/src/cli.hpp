#pragma once

#include <filesystem>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "parawave/experiments.hpp"

namespace parawave::cli {

enum class Command { SynthCheck, WaveDemo, Convergence, TimeReversal, KernelCheck, Rerun };

std::string to_string(Command c);
Command command_from_string(const std::string& name);

/// Parsed command line.
struct RunConfig {
    Command command = Command::KernelCheck;
    std::filesystem::path config;
    std::filesystem::path out = "out";
    int workers = 1;
    std::optional<std::uint64_t> seed;
    bool allow_out_of_range = false;
};

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

/// Full entry point; `out`/`err` receive the table and progress text.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// One row of a pass/fail table.
struct CheckRow {
    std::string name;
    bool pass = false;
    std::string detail;
};
void print_table(std::ostream& os, const std::vector<CheckRow>& rows);

/// Spectra and kinetic oracle suites behind `kernel-check` (sizes scaled by `draws`).
std::vector<CheckRow> kernel_checks(std::uint64_t seed, std::size_t draws, int workers);

/// Medium covariance check behind `synth-check`.
std::vector<CheckRow> synth_checks(const nlohmann::json& cfg, std::uint64_t seed, int workers,
                                   const std::filesystem::path& out_dir);

/// Plot-ready CSVs: mean_vs_reference.csv, variance_vs_eps.csv and
/// refocus_profiles.csv. Sections not present in the result stay header-only.
std::vector<std::filesystem::path> emit_plot_data(const StudyResult* study, const TimeReversalResult* reversal,
                                                  const std::filesystem::path& dir);

}  // namespace parawave::cli
