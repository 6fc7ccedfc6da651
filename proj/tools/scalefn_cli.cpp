#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "scalefn/cli.hpp"

using namespace scalefn;

namespace {

// numbers such as "1/1024" are accepted wherever a real is expected
std::optional<double> number_flag(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return cli::parse_number(s);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scale functions of spectrally negative Levy processes"};
    app.require_subcommand(1);

    struct Flags {
        std::string model, q, xmax, step, tol, method, out;
        int max_terms = 0;
        bool richardson = false;
    } flags;

    const std::pair<cli::Command, const char*> commands[] = {
        {cli::Command::Scale, "tabulate W^(q) and check it against its Laplace transform"},
        {cli::Command::Ruin, "ruin probability 1 - psi'(0+) W(x) of a bounded-variation model"},
        {cli::Command::Resolvent, "resolvent rho of the integrated tail, rho * nu-bar-bar = 1"},
        {cli::Command::Renewal, "solve f = 1 + g * f' for the kernel configured in [run]"},
        {cli::Command::Verify, "Laplace-identity residuals of W^(q) per beta"},
    };
    std::vector<std::pair<CLI::App*, cli::Command>> subs;
    for (const auto& [cmd, help] : commands) {
        CLI::App* sub = app.add_subcommand(std::string(cli::command_name(cmd)), help);
        sub->add_option("--model", flags.model, "model file (INI: [model], [jumps], [run])")->required();
        sub->add_option("--q", flags.q, "killing rate q >= 0");
        sub->add_option("--xmax", flags.xmax, "grid extent");
        sub->add_option("--step", flags.step, "grid step h, e.g. 1/1024");
        sub->add_option("--tol", flags.tol, "series tolerance (0: default)");
        sub->add_option("--max-terms", flags.max_terms, "series term limit")->check(CLI::PositiveNumber);
        sub->add_option("--method", flags.method, "method name, e.g. series-bv");
        sub->add_flag("--richardson", flags.richardson, "two-grid extrapolation");
        sub->add_option("--out", flags.out, "CSV path (stdout when absent)");
        subs.emplace_back(sub, cmd);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cli::exit_error;
    }

    cli::RunConfig cfg;
    for (const auto& [sub, cmd] : subs)
        if (sub->parsed()) cfg.command = cmd;
    cfg.model_path = flags.model;
    try {
        cfg.q = number_flag(flags.q);
        cfg.x_max = number_flag(flags.xmax);
        cfg.step = number_flag(flags.step);
        cfg.tolerance = number_flag(flags.tol);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::exit_error;
    }
    if (flags.max_terms > 0) cfg.max_terms = flags.max_terms;
    if (!flags.method.empty()) cfg.method = flags.method;
    if (flags.richardson) cfg.richardson = true;
    if (!flags.out.empty()) cfg.out = flags.out;

    // with CSV on stdout the summary moves to stderr
    std::ostream& summary = cfg.out ? std::cout : std::cerr;
    return cli::run(cfg, std::cout, summary, std::cerr);
}
