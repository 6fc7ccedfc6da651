#include "scalefn/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "scalefn/resolvent.hpp"
#include "scalefn/scale_functions.hpp"
#include "scalefn/verify.hpp"

namespace scalefn::cli {

namespace {

namespace pt = boost::property_tree;

constexpr std::pair<Command, std::string_view> command_names[] = {
    {Command::Scale, "scale"},     {Command::Ruin, "ruin"},     {Command::Resolvent, "resolvent"},
    {Command::Renewal, "renewal"}, {Command::Verify, "verify"},
};

const std::map<std::string, std::set<std::string>> known_keys = {
    {"model", {"drift", "convention", "sigma2"}},
    {"jumps", {"family", "alpha", "theta", "scale", "rate", "law", "mean", "at", "p", "mu", "law_step", "law_xmax"}},
    {"run",
     {"q", "step", "xmax", "tol", "max_terms", "method", "richardson", "kernel", "kernel_coef", "kernel_exponent"}},
};

Error parse_error(const std::string& what) { return Error(ErrorKind::ParseError, what); }

struct Section {
    std::string name;
    const pt::ptree* tree = nullptr;

    std::optional<std::string> text(const std::string& key) const {
        if (!tree) return std::nullopt;
        auto v = tree->get_optional<std::string>(key);
        if (!v) return std::nullopt;
        return *v;
    }
    std::optional<double> number(const std::string& key) const {
        auto v = text(key);
        if (!v) return std::nullopt;
        try {
            return parse_number(*v);
        } catch (const Error&) {
            throw parse_error("[" + name + "] " + key + " = '" + *v + "' is not a number");
        }
    }
    double number_or(const std::string& key, double fallback) const { return number(key).value_or(fallback); }
    double required(const std::string& key) const {
        auto v = number(key);
        if (!v) throw parse_error("[" + name + "] needs '" + key + "'");
        return *v;
    }
};

bool parse_bool(const std::string& s) {
    if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
    if (s == "0" || s == "false" || s == "no" || s == "off") return false;
    throw parse_error("'" + s + "' is not a boolean");
}

MixedDistribution parse_law(const Section& j) {
    std::string law = j.text("law").value_or("exponential");
    if (law == "exponential") {
        double mean = j.number_or("mean", 1.0);
        if (!(mean > 0.0)) throw parse_error("[jumps] mean must be positive");
        Grid g = Grid::covering(j.number_or("law_step", 1.0 / 1024), j.number_or("law_xmax", 40.0 * mean));
        return MixedDistribution({}, GridFunction::sample(g, [mean](double x) { return std::exp(-x / mean) / mean; }));
    }
    if (law == "dirac") return MixedDistribution::dirac(j.required("at"), 1.0);
    std::vector<double> pmf;
    if (law == "geometric") pmf = geometric_pmf(j.required("p"));
    else if (law == "ztp") pmf = zero_truncated_poisson_pmf(j.required("mu"));
    else throw parse_error("[jumps] unknown law '" + law + "'");
    std::vector<Atom> atoms;
    for (std::size_t k = 1; k < pmf.size(); ++k) atoms.push_back({static_cast<double>(k), pmf[k]});
    // renormalise the truncated remainder onto the listed atoms
    double total = 0.0;
    for (const auto& a : atoms) total += a.mass;
    for (auto& a : atoms) a.mass /= total;
    return MixedDistribution(std::move(atoms));
}

JumpMeasure parse_jumps(const Section& j) {
    std::string family = j.text("family").value_or("none");
    if (family == "none") return NoJumps{};
    if (family == "stable") return StableJumps{j.required("alpha")};
    if (family == "tempered_stable")
        return TemperedStableJumps{j.required("alpha"), j.number_or("theta", 1.0), j.number_or("scale", 1.0)};
    if (family == "compound_poisson") return CompoundPoissonJumps{j.required("rate"), parse_law(j)};
    throw parse_error("[jumps] unknown family '" + family + "'");
}

DriftConvention parse_convention(const std::string& s) {
    if (s == "c") return DriftConvention::C;
    if (s == "c_prime") return DriftConvention::CPrime;
    if (s == "c_double_prime") return DriftConvention::CDoublePrime;
    throw parse_error("[model] unknown convention '" + s + "'");
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string short_fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

struct Outcome {
    std::vector<std::string> meta;  // extra "# key=value" lines
    std::string columns;
    std::vector<std::pair<double, double>> rows;
    std::string method;
    int terms = 0;
    double residual = 0.0;
    bool passed = false;
};

void add_rows(Outcome& o, const GridFunction& f) {
    for (std::size_t j = 0; j < f.size(); ++j) o.rows.emplace_back(f.node(j), f.value(j));
}

Outcome from_scale_check(const ScaleTable& t, const LaplaceCheck& c) {
    Outcome o;
    o.method = std::string(method_name(t.method));
    o.terms = t.report.terms_used;
    o.residual = c.max_residual();
    o.passed = c.passed;
    o.meta.push_back("w0=" + fmt(t.origin_value()));
    o.meta.push_back("truncation_bound=" + fmt(c.truncation_bound));
    return o;
}

Outcome execute(const RunConfig& cfg, const ModelFile& mf, const Grid& grid, double q, const ScaleOptions& opts) {
    const LevyModel& model = mf.model;
    std::optional<ScaleMethod> method;
    if (cfg.method) {
        method = parse_method(*cfg.method);
        if (!method) throw Error(ErrorKind::InvalidArgument, "unknown method '" + *cfg.method + "'");
    }

    switch (cfg.command) {
        case Command::Scale:
        case Command::Verify: {
            ScaleTable t = compute_scale(model, q, grid, method, std::nullopt, opts);
            LaplaceCheck c = verify_scale(model, q, t, verify_tolerance);
            Outcome o = from_scale_check(t, c);
            if (cfg.command == Command::Scale) {
                o.columns = "x,W";
                add_rows(o, t.W);
            } else {
                o.columns = "beta,residual";
                for (std::size_t i = 0; i < c.betas.size(); ++i) o.rows.emplace_back(c.betas[i], c.residuals[i]);
            }
            return o;
        }
        case Command::Ruin: {
            if (q != 0.0) throw Error(ErrorKind::InvalidArgument, "ruin uses q = 0");
            ScaleTable t = compute_scale(model, 0.0, grid, method.value_or(ScaleMethod::SeriesBoundedVariation),
                                         std::nullopt, opts);
            GridFunction r = ruin_from_scale(model, t);
            LaplaceCheck c = verify_scale(model, 0.0, t, verify_tolerance);
            Outcome o = from_scale_check(t, c);
            o.columns = "x,r";
            o.meta.push_back("r0=" + fmt(1.0 - model.psi_derivative(0.0) * t.origin_value()));
            add_rows(o, r);
            return o;
        }
        case Command::Resolvent: {
            ResolventResult r = solve_resolvent(model.integrated_tail_on(grid));
            Outcome o;
            o.method = "direct-volterra";
            o.residual = r.max_residual;
            o.passed = r.max_residual < verify_tolerance;
            o.columns = "x,rho";
            o.meta.push_back("rho_exponent=" + fmt(r.rho.exponent()));
            add_rows(o, r.rho);
            return o;
        }
        case Command::Renewal: {
            if (!mf.renewal) throw Error(ErrorKind::InvalidArgument, "renewal needs 'kernel' in [run]");
            const auto& k = *mf.renewal;
            GridFunction g = k.kind == "power" ? GridFunction::power(grid, k.exponent, k.coef)
                                               : model.integrated_tail_on(grid).scaled(k.coef);
            RenewalOptions ro;
            ro.tolerance = opts.tolerance;
            ro.max_terms = opts.max_terms;
            RenewalResult r = solve_renewal(g, ViaResolvent{}, ro);
            Outcome o;
            o.method = r.sign == RenewalSign::Derived ? "renewal-derived" : "renewal-printed";
            o.terms = r.report.terms_used;
            o.residual = r.residual;
            o.passed = r.residual < verify_tolerance;
            o.columns = "x,f";
            o.meta.push_back("other_sign_residual=" + fmt(r.other_residual));
            add_rows(o, r.f);
            return o;
        }
    }
    throw Error(ErrorKind::InvalidArgument, "unknown command");
}

void write_csv(std::ostream& os, const RunConfig& cfg, const ModelFile& mf, double q, double step, double x_max,
               const ScaleOptions& opts, const Outcome& o) {
    os << "# command=" << command_name(cfg.command) << '\n';
    os << "# model=" << mf.model.fingerprint() << '\n';
    os << "# q=" << fmt(q) << " step=" << fmt(step) << " x_max=" << fmt(x_max) << " tol=" << fmt(opts.tolerance)
       << " max_terms=" << opts.max_terms << " richardson=" << (opts.richardson ? 1 : 0) << '\n';
    os << "# method=" << o.method << " terms=" << o.terms << " residual=" << fmt(o.residual)
       << " verified=" << (o.passed ? "PASS" : "FAIL") << '\n';
    for (const auto& m : o.meta) os << "# " << m << '\n';
    std::istringstream lines(mf.text);
    for (std::string line; std::getline(lines, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        os << "# config: " << line << '\n';
    }
    os << o.columns << '\n';
    for (const auto& [x, v] : o.rows) os << fmt(x) << ',' << fmt(v) << '\n';
}

}  // namespace

std::string_view command_name(Command c) noexcept {
    for (const auto& [k, v] : command_names)
        if (k == c) return v;
    return "unknown";
}

std::optional<Command> parse_command(std::string_view name) {
    for (const auto& [k, v] : command_names)
        if (v == name) return k;
    return std::nullopt;
}

double parse_number(std::string_view s) {
    auto one = [](std::string_view t) {
        std::string str(t);
        std::size_t used = 0;
        double v;
        try {
            v = std::stod(str, &used);
        } catch (const std::exception&) {
            throw parse_error("'" + str + "' is not a number");
        }
        if (used != str.size() || !std::isfinite(v)) throw parse_error("'" + str + "' is not a number");
        return v;
    };
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    auto slash = s.find('/');
    if (slash == std::string_view::npos) return one(s);
    double den = one(s.substr(slash + 1));
    if (den == 0.0) throw parse_error("division by zero in '" + std::string(s) + "'");
    return one(s.substr(0, slash)) / den;
}

ModelFile parse_model(const std::string& text) {
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw parse_error(std::string("config: ") + e.what());
    }
    for (const auto& [name, sec] : tree) {
        auto known = known_keys.find(name);
        if (known == known_keys.end()) throw parse_error("unknown section [" + name + "]");
        for (const auto& [key, _] : sec)
            if (!known->second.count(key)) throw parse_error("unknown key '" + key + "' in [" + name + "]");
    }
    auto section = [&](const std::string& name) {
        auto child = tree.get_child_optional(name);
        return Section{name, child ? &*child : nullptr};
    };
    Section m = section("model"), j = section("jumps"), r = section("run");

    LevyModel model(m.number_or("drift", 0.0), parse_convention(m.text("convention").value_or("c_prime")),
                    m.number_or("sigma2", 0.0), parse_jumps(j));

    RunConfig run;
    run.q = r.number("q");
    run.step = r.number("step");
    run.x_max = r.number("xmax");
    run.tolerance = r.number("tol");
    if (auto v = r.number("max_terms")) {
        if (*v != std::floor(*v)) throw parse_error("[run] max_terms must be an integer");
        run.max_terms = static_cast<int>(*v);
    }
    run.method = r.text("method");
    if (auto v = r.text("richardson")) run.richardson = parse_bool(*v);

    std::optional<RenewalKernelSpec> renewal;
    if (auto k = r.text("kernel")) {
        if (*k != "power" && *k != "integrated_tail") throw parse_error("[run] unknown kernel '" + *k + "'");
        renewal = RenewalKernelSpec{*k, r.number_or("kernel_coef", 1.0), r.number_or("kernel_exponent", -0.5)};
    }
    return ModelFile{std::move(model), text, std::move(run), renewal};
}

ModelFile load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw parse_error("cannot read model file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model(buf.str());
}

int run(const RunConfig& config, std::ostream& csv, std::ostream& summary, std::ostream& err) {
    const auto started = std::chrono::steady_clock::now();
    try {
        ModelFile mf = load_model(config.model_path);
        RunConfig cfg = config;
        const RunConfig& d = mf.run;
        if (!cfg.q) cfg.q = d.q;
        if (!cfg.step) cfg.step = d.step;
        if (!cfg.x_max) cfg.x_max = d.x_max;
        if (!cfg.tolerance) cfg.tolerance = d.tolerance;
        if (!cfg.max_terms) cfg.max_terms = d.max_terms;
        if (!cfg.method) cfg.method = d.method;
        if (!cfg.richardson) cfg.richardson = d.richardson;

        const double q = cfg.q.value_or(0.0), step = cfg.step.value_or(1.0 / 1024), x_max = cfg.x_max.value_or(10.0);
        if (!(q >= 0.0)) throw Error(ErrorKind::InvalidArgument, "q must be nonnegative");
        if (!(step > 0.0)) throw Error(ErrorKind::InvalidArgument, "step must be positive");
        if (!(x_max >= 10.0 * step)) throw Error(ErrorKind::InvalidArgument, "x_max must be at least 10 steps");
        ScaleOptions opts;
        opts.tolerance = cfg.tolerance.value_or(0.0);
        opts.max_terms = cfg.max_terms.value_or(200);
        opts.richardson = cfg.richardson.value_or(false);
        if (opts.tolerance < 0.0) throw Error(ErrorKind::InvalidArgument, "tolerance must be nonnegative");

        Grid grid = Grid::covering(step, x_max);
        Outcome o = execute(cfg, mf, grid, q, opts);

        if (cfg.out) {
            std::ofstream file(*cfg.out, std::ios::binary);
            if (!file) throw Error(ErrorKind::InvalidArgument, "cannot write '" + *cfg.out + "'");
            write_csv(file, cfg, mf, q, step, x_max, opts, o);
        } else {
            write_csv(csv, cfg, mf, q, step, x_max, opts, o);
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        summary << command_name(cfg.command) << " method=" << o.method << " terms=" << o.terms
                << " max_residual=" << short_fmt(o.residual) << " residual<" << short_fmt(verify_tolerance) << ' '
                << (o.passed ? "PASS" : "FAIL") << " runtime=" << short_fmt(secs) << "s\n";
        return o.passed ? exit_pass : exit_verification_failed;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';  // what() starts with the error name
        return e.kind() == ErrorKind::NotConverged ? exit_not_converged : exit_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_error;
    }
}

}  // namespace scalefn::cli
