#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "scalefn/cli.hpp"
#include "scalefn/verify.hpp"

using namespace scalefn;
namespace fs = std::filesystem;

namespace {

// Closed forms the CSV values are held to.
double stable_1_5_at_1() { return 1.0 / std::tgamma(1.5); }  // x^(1/2) / Gamma(3/2)
double cl_ruin(double x) { return 0.5 * std::exp(-0.5 * x); }

fs::path scratch() {
    fs::path p = fs::temp_directory_path() / "scalefn_cli_tests";
    fs::create_directories(p);
    return p;
}

std::string write_file(const std::string& name, const std::string& text) {
    fs::path p = scratch() / name;
    std::ofstream(p, std::ios::binary) << text;
    return p.string();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Run {
    int code;
    std::string csv, summary, err;
};

Run run_cli(cli::RunConfig cfg) {
    std::ostringstream csv, summary, err;
    int code = cli::run(cfg, csv, summary, err);
    return {code, csv.str(), summary.str(), err.str()};
}

cli::RunConfig config(cli::Command c, const std::string& model_path) {
    cli::RunConfig cfg;
    cfg.command = c;
    cfg.model_path = model_path;
    return cfg;
}

// x -> value rows of a CSV, skipping '#' lines and the column header
std::map<double, double> rows(const std::string& csv) {
    std::map<double, double> out;
    std::istringstream in(csv);
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            header = true;
            continue;
        }
        auto comma = line.find(',');
        out[std::stod(line.substr(0, comma))] = std::stod(line.substr(comma + 1));
    }
    return out;
}

double at(const std::map<double, double>& r, double x) {
    auto hi = r.lower_bound(x);
    REQUIRE(hi != r.end());
    REQUIRE(hi != r.begin());
    auto lo = std::prev(hi);
    double t = (x - lo->first) / (hi->first - lo->first);
    return lo->second + t * (hi->second - lo->second);
}

const char* stable_ini = R"([model]
drift = 0
convention = c_double_prime

[jumps]
family = stable
alpha = 1.5

[run]
step = 1/1024
xmax = 4
)";

const char* cl_ini = R"([model]
drift = 2
convention = c_prime

[jumps]
family = compound_poisson
rate = 1
law = exponential
mean = 1

[run]
step = 1/512
xmax = 10
)";

const char* subordinator_ini = R"([model]
drift = 0
[jumps]
family = tempered_stable
alpha = 0.5
)";

int exit_status(const std::string& args) {
    std::string cmd = std::string(SCALEFN_CLI) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("parse_number") {
    CHECK(cli::parse_number("1/1024") == 1.0 / 1024);
    CHECK(cli::parse_number(" 0.25 ") == 0.25);
    CHECK(cli::parse_number("-3e-2") == -0.03);
    for (const char* bad : {"", "abc", "1/0", "1/2/3", "2x", "nan"}) {
        CAPTURE(bad);
        CHECK_THROWS_AS(cli::parse_number(bad), Error);
    }
}

TEST_CASE("parse_model") {
    auto m = cli::parse_model(stable_ini);
    CHECK(m.model.stable_index().value() == 1.5);
    CHECK(m.run.step.value() == 1.0 / 1024);
    CHECK(m.run.x_max.value() == 4.0);
    CHECK_FALSE(m.run.q);
    CHECK_FALSE(m.renewal);

    auto cl = cli::parse_model(cl_ini);
    CHECK(cl.model.classify() == Regime::BoundedVariation);
    CHECK(cl.model.psi_derivative(0.0) == doctest::Approx(1.0).epsilon(1e-6));

    SUBCASE("discrete laws carry unit mass") {
        for (const char* law : {"law = geometric\np = 0.4", "law = ztp\nmu = 1.5", "law = dirac\nat = 1"}) {
            CAPTURE(law);
            auto f = cli::parse_model(std::string("[model]\ndrift = 3\n[jumps]\nfamily = compound_poisson\nrate = 1\n") + law);
            const auto& cp = std::get<CompoundPoissonJumps>(f.model.jumps());
            CHECK(cp.law.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    SUBCASE("renewal kernel") {
        auto f = cli::parse_model("[run]\nkernel = power\nkernel_coef = 2\nkernel_exponent = -0.3\n");
        REQUIRE(f.renewal);
        CHECK(f.renewal->kind == "power");
        CHECK(f.renewal->coef == 2.0);
        CHECK(f.renewal->exponent == -0.3);
    }
    SUBCASE("malformed input is a ParseError") {
        for (const char* bad : {"[modle]\ndrift = 1\n", "[model]\ndirft = 1\n", "[jumps]\nfamily = gamma\n",
                                "[model]\ndrift = fast\n", "[model]\nconvention = c3\n", "[jumps]\nfamily = stable\n",
                                "[run]\nmax_terms = 2.5\n", "[run]\nrichardson = maybe\n", "[run]\nkernel = bump\n",
                                "[model\ndrift = 1\n"}) {
            CAPTURE(bad);
            try {
                cli::parse_model(bad);
                FAIL("accepted");
            } catch (const Error& e) {
                CHECK(e.kind() == ErrorKind::ParseError);
            }
        }
    }
}

TEST_CASE("run examples") {
    std::string stable = write_file("stable.ini", stable_ini);
    std::string cl = write_file("cl.ini", cl_ini);

    SUBCASE("stable scale function") {
        Run r = run_cli(config(cli::Command::Scale, stable));
        CHECK(r.code == cli::exit_pass);
        CHECK(r.summary.find("PASS") != std::string::npos);
        CHECK(r.summary.find("residual<0.01") != std::string::npos);
        CHECK(std::count(r.summary.begin(), r.summary.end(), '\n') == 1);
        CHECK(at(rows(r.csv), 1.0) == doctest::Approx(stable_1_5_at_1()).epsilon(1e-3));
        CHECK(at(rows(r.csv), 1.0) == doctest::Approx(1.1284).epsilon(1e-4));
    }
    SUBCASE("Cramer-Lundberg ruin") {
        auto cfg = config(cli::Command::Ruin, cl);
        Run r = run_cli(cfg);
        CHECK(r.code == cli::exit_pass);
        auto rw = rows(r.csv);
        CHECK(at(rw, 2.0) == doctest::Approx(0.18394).epsilon(1e-4));
        for (double x : {0.5, 3.0, 7.0}) CHECK(std::abs(at(rw, x) - cl_ruin(x)) < 1e-4);
    }
    SUBCASE("subordinator is rejected") {
        Run r = run_cli(config(cli::Command::Scale, write_file("sub.ini", subordinator_ini)));
        CHECK(r.code == cli::exit_error);
        CHECK(r.err.find("SubordinatorExcluded") != std::string::npos);
    }
    SUBCASE("series term limit") {
        auto cfg = config(cli::Command::Scale, stable);
        cfg.max_terms = 2;
        Run r = run_cli(cfg);
        CHECK(r.code == cli::exit_not_converged);
        CHECK(r.err.find("NotConverged") != std::string::npos);
    }
    SUBCASE("a failed self-check exits 3") {
        // near alpha = 1 the tempered-stable resolvent misses 1e-2 at this grid
        std::string ts = write_file("ts.ini",
                                    "[model]\ndrift = 0\nconvention = c_double_prime\n[jumps]\nfamily = tempered_stable\n"
                                    "alpha = 1.1\ntheta = 3\n[run]\nstep = 1/256\nxmax = 2\n");
        Run r = run_cli(config(cli::Command::Resolvent, ts));
        CHECK(r.code == cli::exit_verification_failed);
        CHECK(r.summary.find("FAIL") != std::string::npos);
    }
    SUBCASE("usage errors") {
        auto cfg = config(cli::Command::Scale, stable);
        cfg.q = -1.0;
        CHECK(run_cli(cfg).code == cli::exit_error);
        cfg = config(cli::Command::Scale, stable);
        cfg.x_max = 5.0 / 1024;
        CHECK(run_cli(cfg).code == cli::exit_error);
        cfg = config(cli::Command::Scale, stable);
        cfg.method = "no-such-method";
        Run r = run_cli(cfg);
        CHECK(r.code == cli::exit_error);
        CHECK(r.err.find("InvalidArgument") != std::string::npos);
        CHECK(run_cli(config(cli::Command::Scale, (scratch() / "missing.ini").string())).code == cli::exit_error);
        CHECK(run_cli(config(cli::Command::Renewal, stable)).code == cli::exit_error);
    }
    SUBCASE("resolvent, renewal and verify commands") {
        Run res = run_cli(config(cli::Command::Resolvent, stable));
        CHECK(res.code == cli::exit_pass);
        CHECK(at(rows(res.csv), 1.0) == doctest::Approx(1.0 / std::sqrt(M_PI)).epsilon(1e-3));

        std::string ren = write_file("ren.ini", "[run]\nkernel = power\nkernel_coef = 2\nkernel_exponent = -0.5\n"
                                                "step = 1/256\nxmax = 2\n");
        Run rn = run_cli(config(cli::Command::Renewal, ren));
        CHECK(rn.code == cli::exit_pass);

        Run v = run_cli(config(cli::Command::Verify, stable));
        CHECK(v.code == cli::exit_pass);
        CHECK(rows(v.csv).size() == 8);
    }
}

TEST_CASE("CSV format, determinism and re-run metadata") {
    std::string stable = write_file("stable.ini", stable_ini);
    auto cfg = config(cli::Command::Scale, stable);
    cfg.x_max = 2.0;
    cfg.step = 1.0 / 256;
    cfg.out = (scratch() / "a.csv").string();
    Run first = run_cli(cfg);
    REQUIRE(first.code == cli::exit_pass);
    std::string a = read_file(*cfg.out);
    cfg.out = (scratch() / "b.csv").string();
    run_cli(cfg);
    CHECK(a == read_file(*cfg.out));
    CHECK(first.csv.empty());
    CHECK(a.find('\r') == std::string::npos);
    CHECK(rows(a).size() == 512);  // the flags win over [run]

    // header: command, fingerprint, grid, method/terms/residual, config echo
    CHECK(a.rfind("# command=scale\n", 0) == 0);
    CHECK(a.find("# model=") != std::string::npos);
    CHECK(a.find("step=0.00390625 x_max=2") != std::string::npos);
    CHECK(a.find("\nx,W\n") != std::string::npos);

    // the config is echoed verbatim
    std::istringstream in(a);
    std::string line, echoed;
    while (std::getline(in, line))
        if (line.rfind("# config: ", 0) == 0) echoed += line.substr(10) + "\n";
    CHECK(echoed == stable_ini);

    // and reproduces the table to the last of the 17 printed digits
    auto again = config(cli::Command::Scale, write_file("echo.ini", echoed));
    again.x_max = 2.0;
    again.step = 1.0 / 256;
    Run r = run_cli(again);
    CHECK(rows(r.csv) == rows(a));
}

TEST_CASE("binary exit codes") {
    std::string stable = write_file("stable.ini", stable_ini);
    std::string out = (scratch() / "bin.csv").string();
    CHECK(exit_status("scale --model " + stable + " --xmax 2 --step 1/256 --out " + out) == 0);
    CHECK(at(rows(read_file(out)), 1.0) == doctest::Approx(stable_1_5_at_1()).epsilon(1e-2));
    CHECK(exit_status("scale --model " + stable + " --max-terms 2") == 2);
    CHECK(exit_status("scale --model " + write_file("sub.ini", subordinator_ini)) == 1);
    CHECK(exit_status("scale") == 1);
    CHECK(exit_status("frobnicate --model " + stable) == 1);
    CHECK(exit_status("scale --model " + stable + " --step abc") == 1);
    CHECK(exit_status("--help") == 0);
}
