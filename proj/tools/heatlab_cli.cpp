// heatlab command-line driver: classify, verify-kernel, experiment.
//
// Exit codes: 0 decided / passed, 1 error, 2 Inconclusive, 3 a check failed.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "heatlab/heatlab.hpp"

namespace {

using namespace heatlab;

constexpr int exit_ok = 0;
constexpr int exit_error = 1;
constexpr int exit_inconclusive = 2;
constexpr int exit_check_failed = 3;

// ---------------------------------------------------------------------------
// Config file: "key = value" lines, '#' comments. Keys are long flag names
// without the dashes; flags given on the command line win.

std::vector<std::string> merge_config(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            args.erase(args.begin() + static_cast<long>(i));
            break;
        }
    }
    if (path.empty()) return args;
    std::ifstream in(path);
    if (!in) throw CLI::FileError::Missing(path);
    auto trim = [](std::string s) {
        auto b = s.find_first_not_of(" \t\r");
        auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw CLI::ConversionError(path + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        bool given = false;
        for (auto const& a : args)
            if (a == "--" + key || a.rfind("--" + key + "=", 0) == 0) given = true;
        if (!given) args.push_back("--" + key + "=" + value);
    }
    return args;
}

// ---------------------------------------------------------------------------
// Shared option groups

struct FSource {
    std::string expr;
    std::string builtin;
    double beta = std::numeric_limits<double>::quiet_NaN();
    double p = std::numeric_limits<double>::quiet_NaN();
    double p_high = std::numeric_limits<double>::quiet_NaN();
    double s0 = std::numeric_limits<double>::quiet_NaN();

    void add(CLI::App* app) {
        auto* fe = app->add_option("--f", expr, "Nonlinearity f(s), e.g. \"s^3\"");
        auto* fb = app->add_option("--builtin", builtin, "Built-in family")
                       ->check(CLI::IsMember({"power", "log_family", "piecewise_power"}));
        fe->excludes(fb);
        app->add_option("--beta", beta, "log_family exponent")->check(CLI::NonNegativeNumber);
        app->add_option("--p", p, "power / piecewise_power exponent")->check(CLI::NonNegativeNumber);
        app->add_option("--p-high", p_high, "piecewise_power exponent above s0")->check(CLI::NonNegativeNumber);
        app->add_option("--s0", s0, "piecewise_power switch point")->check(CLI::PositiveNumber);
    }

    Expression resolve(int d) const {
        if (!expr.empty()) return Expression::parse(expr);
        if (builtin.empty()) throw CLI::RequiredError("--f or --builtin");
        FamilyParams params;
        if (builtin == "log_family") params["d"] = d;
        if (!std::isnan(beta)) params["beta"] = beta;
        if (!std::isnan(p)) params["p"] = p;
        if (!std::isnan(p_high)) params["p_high"] = p_high;
        if (!std::isnan(s0)) params["s0"] = s0;
        return builtin_family(builtin, params);
    }
};

struct Output {
    std::string out;
    std::string csv;

    void add(CLI::App* app, bool with_csv = true) {
        app->add_option("--out", out, "Write the JSON report here (atomic, plus <out>.meta.json)");
        if (with_csv) app->add_option("--csv", csv, "Write plot-ready CSV here");
    }
};

std::string command_line;

void emit(json body, Output const& o, std::string const& csv = {}) {
    if (!o.csv.empty() && !csv.empty()) write_atomic(o.csv, csv);
    if (o.out.empty()) {
        body["schema"] = report_schema_version;
        std::cout << body.dump(2) << "\n";
    } else {
        write_report(o.out, std::move(body), command_line);
    }
}

void summary(std::string const& line, Output const& o) {
    if (!o.out.empty()) std::cout << line << "\n";
}

std::pair<int, int> parse_range(std::string const& s) {
    auto dots = s.find("..");
    try {
        if (dots == std::string::npos) {
            int v = std::stoi(s);
            return {v, v};
        }
        return {std::stoi(s.substr(0, dots)), std::stoi(s.substr(dots + 2))};
    } catch (std::exception const&) {
        throw CLI::ValidationError("--N", "expected an integer or a range a..b, got '" + s + "'");
    }
}

json criteria_constants(int d, CriteriaOptions const& opt) {
    return {{"kernel", to_json(kernel_constants(d, KernelVariant::WholeSpace))}, {"criteria", to_json(opt)}};
}

// ---------------------------------------------------------------------------
// classify

struct ClassifyArgs {
    FSource f;
    int d = 1;
    double q = 1.0;
    std::string domain = "bounded";
    std::string method = "integral";
    double dead_band = 0.05;
    Output out;
};

int run_classify(ClassifyArgs const& a) {
    Expression f = a.f.resolve(a.d);
    CriteriaOptions opt;
    opt.slope_dead_band = opt.block_dead_band = a.dead_band;
    Verdict v;
    if (a.domain == "whole_space")
        v = classify_whole_space(f, a.q, a.d, opt);
    else if (a.q > 1.0)
        v = classify_lq(f, a.q, a.d, opt);
    else if (a.method == "series")
        v = classify_l1_series(f, a.d, opt);
    else
        v = classify_l1(f, a.d, opt);
    json body{{"command", "classify"},
              {"config",
               {{"f", f.to_string()}, {"d", a.d}, {"q", num(a.q)}, {"domain", a.domain}, {"method", a.method}}},
              {"verdict", to_json(v)},
              {"constants", criteria_constants(a.d, opt)}};
    if (a.q > 1.0 && a.domain == "bounded") body["critical_exponent"] = to_json(critical_exponent_report(f, a.d, opt));
    emit(body, a.out, series_csv("x", v.evidence.series_label.empty() ? "y" : v.evidence.series_label, v.evidence.x,
                                 v.evidence.y));
    summary(std::string(to_string(v.outcome)) + " (" + to_string(v.criterion) + ")", a.out);
    return v.outcome == Outcome::Inconclusive ? exit_inconclusive : exit_ok;
}

// ---------------------------------------------------------------------------
// verify-kernel

struct VerifyArgs {
    int d = 1;
    std::string variant = "whole_space";
    CertificationOptions cert{};
    Output out;
};

int run_verify(VerifyArgs const& a) {
    auto variant = a.variant == "dirichlet" ? KernelVariant::Dirichlet : KernelVariant::WholeSpace;
    auto rep = verify_lower_bounds(a.d, variant, a.cert);
    json body{{"command", "verify-kernel"}, {"report", to_json(rep)}};
    emit(body, a.out);
    if (!rep.passed()) {
        for (auto const* c : {&rep.pointwise, &rep.mass, &rep.no_tail})
            if (!c->violations.empty()) {
                auto const& w = c->violations.front();
                std::cerr << "certification failed: " << c->name << " at r = " << w.r << ", t = " << w.t
                          << ", x = " << w.x << ": value " << w.value << " < bound " << w.bound << "\n";
            }
        return exit_check_failed;
    }
    summary("passed (min margins " + format_number(rep.pointwise.min_margin) + ", " +
                format_number(rep.mass.min_margin) + ", " + format_number(rep.no_tail.min_margin) + ")",
            a.out);
    return exit_ok;
}

// ---------------------------------------------------------------------------
// experiment horizon

struct HorizonArgs {
    FSource f;
    int d = 1;
    double u0_l1 = 1.0;
    double A = 2.0;
    Output out;
};

/// Re-evaluates K^{2/d} int_0^{T K^{-2/d}} tau^{d/2} ftilde(tau^{-d/2}) dtau directly in tau.
double recheck_horizon(Expression const& f, int d, HorizonResult const& h) {
    double const dd = d;
    double const K = 2.0 * h.A * h.c * h.u0_l1;
    double const X = h.T * std::pow(K, -2.0 / dd);
    double const y_top = 0x1p256;
    auto env = sup_ratio_envelope(f, y_top, EnvelopeOrigin::One);
    auto integrand = [&](double lt) {
        double tau = std::exp(lt);
        double y = std::pow(tau, -dd / 2.0);
        double ft = y <= 1.0 ? eval_f(f, y) : y * env.at(y);
        return tau * std::pow(tau, dd / 2.0) * ft;
    };
    double lt_min = -2.0 / dd * std::log(y_top);
    double lt_max = std::log(X);
    if (lt_max <= lt_min) return std::pow(K, 2.0 / dd) * h.tail_estimate;
    double v = integrate_or_throw(integrand, lt_min, lt_max, {0.0, 1e-9, 20000}, "horizon recheck").value;
    return std::pow(K, 2.0 / dd) * (v + h.tail_estimate);
}

int run_horizon(HorizonArgs const& a) {
    Expression f = a.f.resolve(a.d);
    HorizonOptions opt;
    opt.A = a.A;
    auto h = find_existence_horizon(a.u0_l1, f, a.d, opt);
    double recheck = h.unbounded ? 0.0 : recheck_horizon(f, a.d, h);
    json body{{"command", "experiment horizon"},
              {"config", {{"f", f.to_string()}, {"d", a.d}, {"u0_l1", num(a.u0_l1)}, {"A", num(a.A)}}},
              {"horizon", to_json(h)},
              {"recheck_integral_value", num(recheck)}};
    emit(body, a.out);
    summary("T = " + format_number(h.T) + " (integral value " + format_number(h.integral_value) + ", recheck " +
                format_number(recheck) + ", target " + format_number(h.target) + ")",
            a.out);
    return exit_ok;
}

// ---------------------------------------------------------------------------
// experiment iterate

struct IterateArgs {
    FSource f;
    int d = 1;
    double R = 1.0;
    double amp = 0.1;
    double radius = 0.5;
    std::size_t cells = 256;
    std::size_t steps = 64;
    std::size_t iters = 50;
    double A = 2.0;
    double T = 0.0;
    double tol = 1e-8;
    Output out;
};

int run_iterate(IterateArgs const& a) {
    Expression f = a.f.resolve(a.d);
    HeatPropagator P(RadialGrid::uniform(a.d, a.R, a.cells));
    auto u0 = RadialField::indicator(P.grid(), a.radius, a.amp);
    json horizon = nullptr;
    double T = a.T;
    if (!(T > 0.0)) {
        HorizonOptions ho;
        ho.A = a.A;
        auto h = find_existence_horizon(lq_norm(u0, 1.0), f, a.d, ho);
        T = h.T;
        horizon = to_json(h);
    }
    auto v = linear_part(P, u0, T, a.steps);
    for (auto& s : v.slices)
        for (double& x : s.values) x = a.A * x + 1.0;
    auto margin = supersolution_check(P, u0, f, v);
    IterationOptions io;
    io.tolerance = a.tol;
    auto tr = duhamel_iterate(P, u0, f, v, a.iters, io);
    auto const& lim = tr.limit();
    double above_init = -std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < lim.slices.size(); ++m)
        for (std::size_t i = 0; i < u0.size(); ++i)
            above_init = std::max(above_init, lim.slices[m].values[i] - v.slices[m].values[i]);
    json body{{"command", "experiment iterate"},
              {"config",
               {{"f", f.to_string()},
                {"d", a.d},
                {"R", num(a.R)},
                {"u0", {{"amplitude", num(a.amp)}, {"radius", num(a.radius)}}},
                {"cells", a.cells},
                {"time_steps", a.steps},
                {"max_iterations", a.iters},
                {"A", num(a.A)},
                {"T", num(T)},
                {"tolerance", num(a.tol)}}},
              {"horizon", horizon},
              {"supersolution", to_json(margin)},
              {"trace", to_json(tr)},
              {"max_limit_minus_v_init", num(above_init)},
              {"final_slice", to_json(lim.slices.back())}};
    auto nodes = P.grid()->nodes();
    emit(body, a.out,
         series_csv("r", "u_T", {nodes.begin(), nodes.end() - 1}, lim.slices.back().values));
    summary(std::string(tr.converged ? "converged" : "not converged") + " after " + std::to_string(tr.iterations) +
                " maps, residual " + format_number(tr.residual) + ", margin " + format_number(margin.min_margin),
            a.out);
    return tr.converged && margin.certified() ? exit_ok : exit_check_failed;
}

// ---------------------------------------------------------------------------
// experiment simulate

struct SimulateArgs {
    FSource f;
    int d = 1;
    double R = 1.0;
    double amp = 1.0;
    double radius = 0.5;
    std::size_t cells = 256;
    double T = 0.1;
    SimulationControls ctl{};
    Output out;
};

int run_simulate(SimulateArgs const& a) {
    Expression f = a.f.resolve(a.d);
    HeatPropagator P(RadialGrid::uniform(a.d, a.R, a.cells));
    auto u0 = RadialField::indicator(P.grid(), a.radius, a.amp);
    auto tr = simulate_forward(P, u0, f, a.T, a.ctl);
    json body{{"command", "experiment simulate"},
              {"config",
               {{"f", f.to_string()},
                {"d", a.d},
                {"R", num(a.R)},
                {"u0", {{"amplitude", num(a.amp)}, {"radius", num(a.radius)}}},
                {"cells", a.cells},
                {"T", num(a.T)},
                {"q", num(a.ctl.q)},
                {"dt_initial", num(a.ctl.dt_initial)},
                {"dt_max", num(a.ctl.dt_max)},
                {"dt_min", num(a.ctl.dt_min)},
                {"blowup_sup", num(a.ctl.blowup_sup)}}},
              {"trajectory", to_json(tr)},
              {"final_field", to_json(tr.final_field)}};
    emit(body, a.out, trajectory_csv(tr));
    summary(tr.numeric_blowup ? "numeric blow-up at t = " + format_number(tr.blowup_time) + " (" + tr.blowup_reason + ")"
                              : "reached T = " + format_number(tr.samples.back().t),
            a.out);
    return exit_ok;
}

// ---------------------------------------------------------------------------
// experiment lower_bound

struct LowerBoundArgs {
    FSource f;
    int d = 1;
    double q = 1.0;
    double amp = 1.0;
    double radius = 0.1;
    double t = 0.01;
    int t1_N = 0;
    double epsilon = 0.0;
    double R = 1.0;
    std::string inner = "exact";
    std::string outer = "exact";
    std::size_t points = 64;
    Output out;
};

int run_lower_bound(LowerBoundArgs const& a) {
    Expression f = a.f.resolve(a.d);
    require_audit(monotonicity_audit(f, 1e12, 600), "lower_bound");
    LowerBoundOptions lo;
    lo.inner = a.inner == "certified" ? KernelMode::Certified : KernelMode::Exact;
    lo.outer = a.outer == "certified" ? KernelMode::Certified : KernelMode::Exact;
    json cfg{{"f", f.to_string()}, {"d", a.d}, {"q", num(a.q)}, {"inner", a.inner}, {"outer", a.outer}};
    if (a.t1_N > 0) {
        auto data = build_t1_data(f, a.d, a.q, a.t1_N, a.epsilon, a.R);
        std::vector<int> ks;
        for (int k = 1; k <= a.t1_N; ++k) ks.push_back(k);
        ChainOptions co;
        co.lower = lo;
        co.profile_points = a.points;
        auto chain = t1_lower_bound_chain(data.spec, ks, co);
        json terms = json::array();
        std::vector<double> kx, ratio;
        bool dominated = true;
        for (auto const& c : chain) {
            terms.push_back({{"k", c.k},
                             {"t_k", num(c.t_k)},
                             {"prediction", to_json(c.prediction)},
                             {"lq_pow_lower", num(c.profile.lq_pow_lower)},
                             {"lq_pow_upper", num(c.profile.lq_pow_upper)},
                             {"ratio", num(c.ratio)},
                             {"window_times", num_array(c.window_times)},
                             {"window_values", num_array(c.window_values)},
                             {"window_chain", num_array(c.window_chain)},
                             {"min_pointwise_ratio", num(c.min_pointwise_ratio)}});
            kx.push_back(c.k);
            ratio.push_back(c.ratio);
            dominated = dominated && c.ratio >= 1.0;
        }
        cfg["t1_N"] = a.t1_N;
        json body{{"command", "experiment lower_bound"},
                  {"config", cfg},
                  {"data", to_json(data.spec)},
                  {"chain", terms},
                  {"dominated", dominated}};
        emit(body, a.out, series_csv("k", "ratio", kx, ratio));
        summary(std::string(dominated ? "lower bound dominates" : "lower bound does NOT dominate") +
                    " the predictions for k = 1.." + std::to_string(a.t1_N),
                a.out);
        return dominated ? exit_ok : exit_check_failed;
    }
    auto pr = duhamel_lower_bound({a.radius, {}, a.amp}, f, a.t, a.d, a.q, lo, a.points);
    cfg["u_k"] = {{"amplitude", num(a.amp)}, {"radius", num(a.radius)}};
    cfg["t"] = num(a.t);
    json body{{"command", "experiment lower_bound"},
              {"config", cfg},
              {"constants", to_json(kernel_constants(a.d, KernelVariant::WholeSpace))},
              {"profile", to_json(pr)}};
    emit(body, a.out, series_csv("r", "lower_bound", pr.radii, pr.values));
    summary("|lb|_q^q >= " + format_number(pr.lq_pow_lower), a.out);
    return exit_ok;
}

// ---------------------------------------------------------------------------
// experiment blowup_trend

struct TrendArgs {
    FSource f;
    int d = 1;
    double q = 1.0;
    std::string N = "3..8";
    double R = 1.0;
    double T = 0.05;
    double epsilon = 0.0;
    std::size_t cells = 400;
    Output out;
};

int run_trend(TrendArgs const& a) {
    Expression f = a.f.resolve(a.d);
    auto [lo, hi] = parse_range(a.N);
    TrendOptions opt;
    opt.R = a.R;
    opt.T = a.T;
    opt.epsilon = a.epsilon;
    opt.data.grid.cells = a.cells;
    opt.controls.q = a.q;
    auto trend = blowup_trend(f, a.d, a.q, lo, hi, opt);
    json runs = json::array();
    std::ostringstream csv;
    csv << "N,u0_l1,peak_l1,numeric_blowup,blowup_time,steps\n";
    for (auto const& r : trend.runs) {
        runs.push_back({{"N", r.N}, {"u0_l1", num(r.u0_l1)}, {"peak_l1", num(r.peak_l1)}, {"trajectory", to_json(r.trajectory)}});
        csv << r.N << ',' << csv_number(r.u0_l1) << ',' << csv_number(r.peak_l1) << ',' << r.trajectory.numeric_blowup
            << ',' << csv_number(r.trajectory.blowup_time) << ',' << r.trajectory.samples.size() - 1 << '\n';
    }
    bool inc = trend.strictly_increasing();
    json body{{"command", "experiment blowup_trend"},
              {"config",
               {{"f", f.to_string()}, {"d", a.d}, {"q", num(a.q)}, {"N", {lo, hi}}, {"R", num(a.R)}, {"T", num(a.T)}, {"cells", a.cells}}},
              {"data", to_json(trend.data.spec)},
              {"runs", runs},
              {"peak_l1_strictly_increasing", inc},
              {"note", "numeric blow-up is a threshold crossing in the simulation, not a proof"}};
    emit(body, a.out, csv.str());
    summary(std::string("peak |u|_1 ") + (inc ? "strictly increasing" : "NOT strictly increasing") + " in N", a.out);
    return inc ? exit_ok : exit_check_failed;
}

// ---------------------------------------------------------------------------
// experiment equivalence_suite

struct SuiteArgs {
    std::uint64_t seed = 7;
    std::size_t count = 20;
    Output out;
};

int run_suite(SuiteArgs const& a) {
    CriteriaOptions opt;
    auto suite = equivalence_suite(a.seed, a.count, opt);
    json cases = json::array();
    std::ostringstream csv;
    csv << "d,c,a,b,integral,series,agreement\n";
    for (auto const& c : suite.cases) {
        cases.push_back({{"d", c.d}, {"f", c.expression}, {"report", to_json(c.report)}});
        csv << c.d << ',' << csv_number(c.c) << ',' << csv_number(c.a) << ',' << csv_number(c.b) << ','
            << to_string(c.report.integral.outcome) << ',' << to_string(c.report.series.outcome) << ','
            << to_string(c.report.agreement) << '\n';
    }
    json body{{"command", "experiment equivalence_suite"},
              {"config", {{"seed", a.seed}, {"count", a.count}}},
              {"constants", {{"criteria", to_json(opt)}}},
              {"cases", cases},
              {"decided", suite.decided},
              {"agree", suite.agree},
              {"disagree", suite.disagree},
              {"rejected_by_audit", suite.rejected_by_audit}};
    emit(body, a.out, csv.str());
    summary(std::to_string(suite.decided) + "/" + std::to_string(suite.cases.size()) + " decided, " +
                std::to_string(suite.agree) + " agree, " + std::to_string(suite.disagree) + " disagree",
            a.out);
    return suite.disagree == 0 ? exit_ok : exit_check_failed;
}

// ---------------------------------------------------------------------------
// experiment warmup

struct WarmupArgs {
    FSource f;
    int d = 2;
    int shells = 12;
    double theta = 2.0;
    Output out;
};

int run_warmup(WarmupArgs const& a) {
    Expression f = a.f.resolve(a.d);
    require_audit(monotonicity_audit(f, 1e12, 600), "warmup");
    WarmupOptions wo;
    wo.theta = a.theta;
    auto rep = warmup_shells(f, a.d, a.shells, wo);
    std::vector<double> k, s;
    for (auto const& sh : rep.shells) k.push_back(sh.k), s.push_back(sh.partial_sum);
    json body{{"command", "experiment warmup"},
              {"config", {{"f", f.to_string()}, {"d", a.d}, {"shells", a.shells}, {"theta", num(a.theta)}}},
              {"warmup", to_json(rep)}};
    emit(body, a.out, series_csv("k", "partial_sum", k, s));
    summary("partial sum after " + std::to_string(a.shells) + " shells: " + format_number(s.back()), a.out);
    return exit_ok;
}

// ---------------------------------------------------------------------------
// experiment data

struct DataArgs {
    std::string kind = "t1";
    FSource f;
    int d = 1;
    double q = 1.0;
    int N = 5;
    double epsilon = 0.0;
    double R = 1.0;
    std::size_t cells = 400;
    double theta = 2.0;
    int k_power = 1;
    Output out;
};

int run_data(DataArgs const& a) {
    Expression f = a.f.resolve(a.d);
    BlowupData data;
    if (a.kind == "t1") {
        T1Options o;
        o.grid.cells = a.cells;
        data = build_t1_data(f, a.d, a.q, a.N, a.epsilon, a.R, o);
    } else {
        auto w = series_search(f, a.d, a.theta);
        ToddOptions o;
        o.grid.cells = a.cells;
        int m = a.k_power;
        o.k_schedule = [m](int n) { return static_cast<int>(std::lround(std::pow(n, m))); };
        data = build_todd_data(f, a.d, a.N, a.R, w.sequence, a.theta, o);
    }
    json body{{"command", "experiment data"},
              {"spec", to_json(data.spec)},
              {"sampled_lq", num(data.sampled_lq)},
              {"field", to_json(data.field)}};
    auto nodes = data.grid->nodes();
    emit(body, a.out, series_csv("r", "u0", {nodes.begin(), nodes.end() - 1}, data.field.values));
    summary(std::string(to_string(data.spec.kind)) + " data with " + std::to_string(data.spec.terms.size()) +
                " terms, |u0|_q = " + format_number(data.spec.analytic_lq),
            a.out);
    return exit_ok;
}

// ---------------------------------------------------------------------------

void print_error(std::string const& type, std::string const& message, json extra = json::object()) {
    json e{{"error", {{"type", type}, {"message", message}}}};
    for (auto& [k, v] : extra.items()) e["error"][k] = v;
    std::cerr << e.dump() << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"heatlab: local existence for u_t - Laplace u = f(u) with L^q data"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "heatlab 1.0");
    app.add_option("--config", "key = value file; command-line flags take precedence")->check(CLI::ExistingFile);

    ClassifyArgs ca;
    auto* classify = app.add_subcommand("classify", "Decide local existence for f in L^q");
    ca.f.add(classify);
    classify->add_option("--d", ca.d, "Dimension")->required()->check(CLI::Range(1, 3));
    classify->add_option("--q", ca.q, "Lebesgue exponent (>= 1)")->check(CLI::Range(1.0, 1e6));
    classify->add_option("--domain", ca.domain, "bounded | whole_space")->check(CLI::IsMember({"bounded", "whole_space"}));
    classify->add_option("--method", ca.method, "q = 1 test: integral | series")->check(CLI::IsMember({"integral", "series"}));
    classify->add_option("--dead-band", ca.dead_band, "Dead-band on slopes and block ratios")->check(CLI::Range(0.0, 1.0));
    ca.out.add(classify);

    VerifyArgs va;
    auto* verify = app.add_subcommand("verify-kernel", "Check the heat-kernel lower bounds numerically");
    verify->add_option("--d", va.d, "Dimension")->check(CLI::Range(1, 3));
    verify->add_option("--variant", va.variant, "whole_space | dirichlet")->check(CLI::IsMember({"whole_space", "dirichlet"}));
    verify->add_option("--r-grid", va.cert.r_grid, "Ball radii")->delimiter(',')->check(CLI::PositiveNumber);
    verify->add_option("--t-relative", va.cert.t_relative, "Times as multiples of r^2")->delimiter(',')->check(CLI::PositiveNumber);
    verify->add_option("--t-absolute", va.cert.t_absolute, "Absolute times")->delimiter(',')->check(CLI::PositiveNumber);
    verify->add_option("--x-points", va.cert.x_points, "Radial evaluation points per case")->check(CLI::Range(2, 10000));
    verify->add_option("--tolerance", va.cert.tolerance, "Allowed negative margin")->check(CLI::NonNegativeNumber);
    verify->add_option("--delta", va.cert.delta, "Dirichlet: distance to the boundary (0 = sqrt(max t))")->check(CLI::NonNegativeNumber);
    verify->add_option("--c-scale", va.cert.c_scale, "Multiply c_d (testing only)")->check(CLI::PositiveNumber)->group("Testing");
    va.out.add(verify, false);

    auto* experiment = app.add_subcommand("experiment", "Solver and data experiments");
    experiment->require_subcommand(1);

    HorizonArgs ha;
    auto* horizon = experiment->add_subcommand("horizon", "Existence horizon from the L^1 integral condition");
    ha.f.add(horizon);
    horizon->add_option("--d", ha.d, "Dimension")->required()->check(CLI::Range(1, 3));
    horizon->add_option("--u0-l1", ha.u0_l1, "|u0|_1")->required()->check(CLI::PositiveNumber);
    horizon->add_option("--A", ha.A, "Supersolution factor A > 1")->check(CLI::Range(1.0 + 1e-12, 1e6));
    ha.out.add(horizon, false);

    IterateArgs ia;
    auto* iterate = experiment->add_subcommand("iterate", "Monotone iteration from v = A S(t)u0 + 1");
    ia.f.add(iterate);
    iterate->add_option("--d", ia.d, "Dimension")->required()->check(CLI::Range(1, 3));
    iterate->add_option("--R", ia.R, "Domain radius")->check(CLI::PositiveNumber);
    iterate->add_option("--amp", ia.amp, "u0 amplitude")->check(CLI::NonNegativeNumber);
    iterate->add_option("--radius", ia.radius, "u0 ball radius")->check(CLI::PositiveNumber);
    iterate->add_option("--cells", ia.cells, "Radial cells")->check(CLI::Range(32, 100000));
    iterate->add_option("--steps", ia.steps, "Time steps")->check(CLI::Range(1, 1000000));
    iterate->add_option("--iters", ia.iters, "Maximum iterations")->check(CLI::Range(1, 100000));
    iterate->add_option("--A", ia.A, "Supersolution factor")->check(CLI::Range(1.0 + 1e-12, 1e6));
    iterate->add_option("--T", ia.T, "Horizon (default: find_existence_horizon)")->check(CLI::NonNegativeNumber);
    iterate->add_option("--tol", ia.tol, "Stop when the sup change is below this")->check(CLI::PositiveNumber);
    ia.out.add(iterate);

    SimulateArgs sa;
    auto* simulate = experiment->add_subcommand("simulate", "Forward simulation with adaptive steps");
    sa.f.add(simulate);
    simulate->add_option("--d", sa.d, "Dimension")->required()->check(CLI::Range(1, 3));
    simulate->add_option("--R", sa.R, "Domain radius")->check(CLI::PositiveNumber);
    simulate->add_option("--amp", sa.amp, "u0 amplitude")->check(CLI::NonNegativeNumber);
    simulate->add_option("--radius", sa.radius, "u0 ball radius")->check(CLI::PositiveNumber);
    simulate->add_option("--cells", sa.cells, "Radial cells")->check(CLI::Range(32, 100000));
    simulate->add_option("--T", sa.T, "Final time")->check(CLI::PositiveNumber);
    simulate->add_option("--q", sa.ctl.q, "Reported L^q norm")->check(CLI::Range(1.0, 1e6));
    simulate->add_option("--dt-initial", sa.ctl.dt_initial, "First time step")->check(CLI::PositiveNumber);
    simulate->add_option("--dt-max", sa.ctl.dt_max, "Largest time step")->check(CLI::PositiveNumber);
    sa.out.add(simulate);

    LowerBoundArgs la;
    auto* lower = experiment->add_subcommand("lower_bound", "Quadrature lower bound from a ball, or the T1 chain");
    la.f.add(lower);
    lower->add_option("--d", la.d, "Dimension")->required()->check(CLI::Range(1, 3));
    lower->add_option("--q", la.q, "Norm exponent")->check(CLI::Range(1.0, 1e6));
    lower->add_option("--amp", la.amp, "Ball amplitude")->check(CLI::PositiveNumber);
    lower->add_option("--radius", la.radius, "Ball radius")->check(CLI::PositiveNumber);
    lower->add_option("--t", la.t, "Time")->check(CLI::PositiveNumber);
    lower->add_option("--t1-N", la.t1_N, "Run the T1 chain for k = 1..N instead")->check(CLI::Range(0, 64));
    lower->add_option("--epsilon", la.epsilon, "T1 epsilon (0 = largest admissible)")->check(CLI::NonNegativeNumber);
    lower->add_option("--R", la.R, "T1 domain radius")->check(CLI::PositiveNumber);
    lower->add_option("--inner", la.inner, "exact | certified")->check(CLI::IsMember({"exact", "certified"}));
    lower->add_option("--outer", la.outer, "exact | certified")->check(CLI::IsMember({"exact", "certified"}));
    lower->add_option("--points", la.points, "Radial profile intervals")->check(CLI::Range(2, 100000));
    la.out.add(lower);

    TrendArgs ta;
    auto* trend = experiment->add_subcommand("blowup_trend", "Peak L^1 norm against the T1 truncation level");
    ta.f.add(trend);
    trend->add_option("--d", ta.d, "Dimension")->required()->check(CLI::Range(1, 3));
    trend->add_option("--q", ta.q, "Lebesgue exponent")->check(CLI::Range(1.0, 1e6));
    trend->add_option("--N", ta.N, "Truncation levels a..b");
    trend->add_option("--R", ta.R, "Domain radius")->check(CLI::PositiveNumber);
    trend->add_option("--T", ta.T, "Final time")->check(CLI::PositiveNumber);
    trend->add_option("--epsilon", ta.epsilon, "T1 epsilon (0 = largest admissible)")->check(CLI::NonNegativeNumber);
    trend->add_option("--cells", ta.cells, "Radial cells")->check(CLI::Range(32, 100000));
    ta.out.add(trend);

    SuiteArgs qa;
    auto* suite = experiment->add_subcommand("equivalence_suite", "Randomized integral/series agreement suite");
    suite->add_option("--seed", qa.seed, "Random seed");
    suite->add_option("--count", qa.count, "Number of cases")->check(CLI::Range(1, 10000));
    qa.out.add(suite);

    WarmupArgs wa;
    auto* warmup = experiment->add_subcommand("warmup", "Dyadic-shell integrals for a point mass");
    wa.f.add(warmup);
    warmup->add_option("--d", wa.d, "Dimension")->check(CLI::Range(1, 3));
    warmup->add_option("--shells", wa.shells, "Number of shells")->check(CLI::Range(1, 200));
    warmup->add_option("--theta", wa.theta, "Shell ratio")->check(CLI::Range(1.0 + 1e-12, 1e6));
    wa.out.add(warmup);

    DataArgs da;
    auto* data = experiment->add_subcommand("data", "Build T1 or Todd initial data");
    da.f.add(data);
    data->add_option("--kind", da.kind, "t1 | todd")->check(CLI::IsMember({"t1", "todd"}));
    data->add_option("--d", da.d, "Dimension")->required()->check(CLI::Range(1, 3));
    data->add_option("--q", da.q, "Lebesgue exponent (T1)")->check(CLI::Range(1.0, 1e6));
    data->add_option("--N", da.N, "Truncation level")->check(CLI::Range(1, 10000));
    data->add_option("--epsilon", da.epsilon, "T1 epsilon (0 = largest admissible)")->check(CLI::NonNegativeNumber);
    data->add_option("--R", da.R, "Domain radius")->check(CLI::PositiveNumber);
    data->add_option("--cells", da.cells, "Radial cells")->check(CLI::Range(32, 100000));
    data->add_option("--theta", da.theta, "Todd witness ratio")->check(CLI::Range(1.0 + 1e-12, 1e6));
    data->add_option("--k-power", da.k_power, "Todd schedule k_n = n^m")->check(CLI::Range(1, 8));
    da.out.add(data);

    std::vector<std::string> args;
    try {
        args = merge_config(argc, argv);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (CLI::ParseError const& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        print_error("config_error", e.what());
        return exit_error;
    }
    for (int i = 0; i < argc; ++i) command_line += (i ? " " : "") + std::string(argv[i]);

    try {
        if (*classify) return run_classify(ca);
        if (*verify) return run_verify(va);
        if (*horizon) return run_horizon(ha);
        if (*iterate) return run_iterate(ia);
        if (*simulate) return run_simulate(sa);
        if (*lower) return run_lower_bound(la);
        if (*trend) return run_trend(ta);
        if (*suite) return run_suite(qa);
        if (*warmup) return run_warmup(wa);
        if (*data) return run_data(da);
    } catch (ParseError const& e) {
        print_error("parse_error", e.what(), {{"offset", e.offset()}});
    } catch (DomainError const& e) {
        print_error("domain_error", e.what(), {{"s", num(e.at())}});
    } catch (AuditFailure const& e) {
        print_error("audit_failure", e.what());
    } catch (HorizonError const& e) {
        print_error("horizon_error", e.what());
    } catch (ScheduleError const& e) {
        print_error("schedule_error", e.what());
    } catch (DivergenceError const& e) {
        print_error("divergence_error", e.what());
    } catch (QuadratureError const& e) {
        print_error("quadrature_error", e.what());
    } catch (GridMismatch const& e) {
        print_error("grid_mismatch", e.what());
    } catch (CLI::Error const& e) {
        print_error("config_error", e.what());
    } catch (std::invalid_argument const& e) {
        print_error("invalid_argument", e.what());
    } catch (std::exception const& e) {
        print_error("runtime_error", e.what());
    }
    return exit_error;
}
