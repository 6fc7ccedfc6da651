#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "scalefn/grid.hpp"
#include "scalefn/levy_model.hpp"

namespace scalefn::cli {

enum class Command { Scale, Ruin, Resolvent, Renewal, Verify };

std::string_view command_name(Command c) noexcept;
std::optional<Command> parse_command(std::string_view name);

/// Exit codes of `run`.
inline constexpr int exit_pass = 0;
inline constexpr int exit_error = 1;
inline constexpr int exit_not_converged = 2;
inline constexpr int exit_verification_failed = 3;

/// Residual bound every command's self-check is held to.
inline constexpr double verify_tolerance = 1e-2;

/// Unset fields fall back to the [run] section of the model file, then to
/// the defaults noted here.
struct RunConfig {
    Command command = Command::Scale;
    std::string model_path;
    std::optional<double> q;             // 0
    std::optional<double> step;          // 1/1024
    std::optional<double> x_max;         // 10
    std::optional<double> tolerance;     // 0: series default
    std::optional<int> max_terms;        // 200
    std::optional<std::string> method;   // regime default
    std::optional<bool> richardson;      // false
    std::optional<std::string> out;      // CSV to the csv stream when absent
};

/// Renewal kernel g read from [run]: `kernel = power` gives
/// kernel_coef * x^kernel_exponent, `kernel = integrated_tail` gives
/// kernel_coef * nu-bar-bar of the model.
struct RenewalKernelSpec {
    std::string kind;
    double coef = 1.0;
    double exponent = -0.5;
};

/// A parsed model file.
struct ModelFile {
    LevyModel model;
    std::string text;  // verbatim, echoed into CSV headers
    RunConfig run;     // the [run] section (command and paths unused)
    std::optional<RenewalKernelSpec> renewal;
};

/// Reads "1/1024" as well as plain decimals. Throws ParseError.
double parse_number(std::string_view s);

/// INI text with sections [model], [jumps], [run]. Unknown sections, keys or
/// families and malformed numbers throw ParseError.
ModelFile parse_model(const std::string& text);
ModelFile load_model(const std::string& path);

/// Runs one command. CSV goes to config.out (or `csv` when unset), the
/// one-line summary to `summary`, diagnostics to `err`. Returns an exit code.
int run(const RunConfig& config, std::ostream& csv, std::ostream& summary, std::ostream& err);

}  // namespace scalefn::cli
