#pragma once

// JSON and CSV serialization of results. Report bodies are deterministic;
// wall-clock data lives in a separate "<path>.meta.json" sidecar.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "heatlab/criteria.hpp"
#include "heatlab/databuilder.hpp"
#include "heatlab/duhamel.hpp"
#include "heatlab/heatkernel.hpp"
#include "heatlab/lower_bound.hpp"

namespace heatlab {

using json = nlohmann::json;

inline constexpr char const* report_schema_version = "heatlab-report/1";

/// Non-finite values become the strings "inf", "-inf" and "nan".
inline json num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
}

inline json num_array(std::vector<double> const& v) {
    json a = json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

inline double num_from(json const& j) {
    if (j.is_string()) {
        auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        throw std::invalid_argument("num_from: unexpected string " + s);
    }
    return j.get<double>();
}

inline json to_json(KernelConstants const& k) {
    return {{"d", k.d},
            {"variant", to_string(k.variant)},
            {"boundary_factor", num(k.boundary_factor)},
            {"c_prime", num(k.c_prime)},
            {"c_doubleprime", num(k.c_doubleprime)},
            {"c_d", num(k.c_d)},
            {"alpha_d", num(k.alpha_d)},
            {"beta_d", num(k.beta_d)},
            {"omega_d", num(k.omega_d)}};
}

inline json to_json(CriteriaOptions const& o) {
    return {{"slope_dead_band", num(o.slope_dead_band)},
            {"block_dead_band", num(o.block_dead_band)},
            {"limsup_s_max", num(o.limsup_s_max)},
            {"points_per_decade", o.points_per_decade},
            {"l1_s_max", num(o.l1_s_max)},
            {"audit_s_max", num(o.audit_s_max)},
            {"audit_samples", o.audit_samples},
            {"theta", num(o.theta)},
            {"series_terms", o.series_terms},
            {"window_stride", o.window_stride}};
}

inline json to_json(Verdict const& v) {
    json stats = json::object();
    for (auto const& [k, x] : v.evidence.stats) stats[k] = num(x);
    return {{"outcome", to_string(v.outcome)},
            {"criterion", to_string(v.criterion)},
            {"dead_band", num(v.dead_band)},
            {"evidence",
             {{"stats", stats},
              {"notes", v.evidence.notes},
              {"series", {{"label", v.evidence.series_label}, {"x", num_array(v.evidence.x)}, {"y", num_array(v.evidence.y)}}}}}};
}

inline json to_json(EquivalenceReport const& r) {
    return {{"agreement", to_string(r.agreement)}, {"integral", to_json(r.integral)}, {"series", to_json(r.series)}};
}

inline json to_json(CriticalExponentReport const& r) {
    return {{"d", r.d},
            {"gamma_star", num(r.gamma_star)},
            {"q_star", num(r.q_star)},
            {"bracket", {num(r.bracket_lo), num(r.bracket_hi)}},
            {"degenerate", r.degenerate},
            {"above_range", r.above_range}};
}

inline json to_json(BoundWitness const& w) {
    return {{"r", num(w.r)}, {"t", num(w.t)}, {"x", num(w.x)}, {"value", num(w.value)}, {"bound", num(w.bound)}};
}

inline json to_json(BoundCheck const& c) {
    json v = json::array();
    for (auto const& w : c.violations) v.push_back(to_json(w));
    return {{"name", c.name},
            {"min_margin", num(c.min_margin)},
            {"worst", to_json(c.worst)},
            {"checks", c.checks},
            {"violations", v}};
}

inline json to_json(CertificationReport const& r) {
    return {{"d", r.d},
            {"variant", to_string(r.variant)},
            {"delta", num(r.delta)},
            {"tolerance", num(r.tolerance)},
            {"c_scale", num(r.c_scale)},
            {"constants", to_json(r.constants)},
            {"r_grid", num_array(r.r_grid)},
            {"t_relative", num_array(r.t_grid_relative)},
            {"t_absolute", num_array(r.t_grid_absolute)},
            {"checks", {to_json(r.pointwise), to_json(r.mass), to_json(r.no_tail)}},
            {"passed", r.passed()}};
}

inline json to_json(HorizonResult const& h) {
    return {{"T", num(h.T)},
            {"T_integral", num(h.T_integral)},
            {"T_smoothing", num(h.T_smoothing)},
            {"integral_value", num(h.integral_value)},
            {"target", num(h.target)},
            {"A", num(h.A)},
            {"c", num(h.c)},
            {"u0_l1", num(h.u0_l1)},
            {"tail_estimate", num(h.tail_estimate)},
            {"unbounded", h.unbounded},
            {"capped_by_smoothing", h.capped_by_smoothing}};
}

inline json to_json(SupersolutionMargin const& m) {
    return {{"min_margin", num(m.min_margin)},
            {"time_index", m.time_index},
            {"node_index", m.node_index},
            {"certified", m.certified()}};
}

/// Summary of an iteration trace (fields are exported separately).
inline json to_json(IterationTrace const& t) {
    return {{"converged", t.converged},
            {"iterations", t.iterations},
            {"deltas", num_array(t.deltas)},
            {"residual", num(t.residual)},
            {"max_increase", num(t.max_increase)},
            {"min_above_linear", num(t.min_above_linear)},
            {"initial_margin", to_json(t.initial_margin)},
            {"warnings", t.warnings}};
}

inline json to_json(Trajectory const& tr) {
    return {{"q", num(tr.q)},
            {"steps", tr.samples.empty() ? 0 : tr.samples.size() - 1},
            {"final_time", tr.samples.empty() ? json(0.0) : num(tr.samples.back().t)},
            {"peak_l1", num(tr.peak_l1())},
            {"numeric_blowup", tr.numeric_blowup},
            {"blowup_time", num(tr.blowup_time)},
            {"blowup_reason", tr.blowup_reason},
            {"total_clamps", tr.total_clamps},
            {"total_violations", tr.total_violations}};
}

inline json to_json(GridPtr const& g) {
    return {{"d", g->d()}, {"R", num(g->R())}, {"cells", g->size()}, {"faces", num_array({g->faces().begin(), g->faces().end()})}};
}

inline json to_json(RadialField const& u) {
    return {{"grid", to_json(u.grid)},
            {"nodes", num_array({u.grid->nodes().begin(), u.grid->nodes().end() - 1})},
            {"values", num_array(u.values)}};
}

inline json to_json(Prediction const& p) {
    return {{"index", p.index},
            {"t_window", {num(p.t_lo), num(p.t_hi)}},
            {"value", num(p.value)},
            {"chain_value", num(p.chain_value)},
            {"pointwise", num(p.pointwise)},
            {"k_range", {p.k_lo, p.k_hi}}};
}

inline json to_json(BlowupDataSpec const& s) {
    json terms = json::array();
    for (auto const& t : s.terms)
        terms.push_back({{"index", t.index},
                         {"phi", num(t.phi)},
                         {"amplitude", num(t.amplitude)},
                         {"radius", num(t.radius)},
                         {"f_phi", num(t.f_phi)},
                         {"schedule_margin", num(t.schedule_margin)},
                         {"k_n", t.k_n},
                         {"zeta", t.zeta}});
    json preds = json::array();
    for (auto const& p : predicted_bounds(s)) preds.push_back(to_json(p));
    json j{{"kind", to_string(s.kind)},
           {"d", s.d},
           {"q", num(s.q)},
           {"p", num(s.p)},
           {"f", s.f},
           {"N", s.N},
           {"R", num(s.R)},
           {"constants", to_json(s.constants)},
           {"terms", terms},
           {"analytic_lq", num(s.analytic_lq)},
           {"lq_sum_bound", num(s.lq_sum_bound)},
           {"neglected_tail_bound", num(s.tail_bound)},
           {"lq_full_bound", num(s.lq_full_bound)},
           {"predictions", preds}};
    if (s.kind == DataKind::T1) {
        j["epsilon"] = num(s.epsilon);
    } else {
        j["n0"] = s.n0;
        j["k0"] = s.k0;
        j["theta"] = num(s.theta);
        j["delta0"] = num(s.delta0);
        j["todd_constant"] = num(todd_constant(s.constants, s.theta));
    }
    return j;
}

inline json to_json(LowerBoundProfile const& p) {
    return {{"t", num(p.t)},
            {"q", num(p.q)},
            {"radii", num_array(p.radii)},
            {"values", num_array(p.values)},
            {"lq_pow_lower", num(p.lq_pow_lower)},
            {"lq_pow_upper", num(p.lq_pow_upper)}};
}

inline json to_json(WarmupReport const& r) {
    json shells = json::array();
    for (auto const& s : r.shells)
        shells.push_back({{"k", s.k},
                          {"phi", num(s.phi)},
                          {"t_window", {num(s.t_lo), num(s.t_hi)}},
                          {"increment", num(s.increment)},
                          {"chain_bound", num(s.chain_bound)},
                          {"partial_sum", num(s.partial_sum)}});
    return {{"d", r.d}, {"theta", num(r.theta)}, {"p", num(r.p)}, {"c", num(r.c)}, {"shells", shells}};
}

// ---------------------------------------------------------------------------
// CSV

inline std::string csv_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// t, |u|_1, |u|_q, |u|_inf, dt, clamp_count
inline std::string trajectory_csv(Trajectory const& tr) {
    std::ostringstream os;
    os << "t,l1,lq,linf,dt,clamp_count\n";
    for (auto const& s : tr.samples)
        os << csv_number(s.t) << ',' << csv_number(s.l1) << ',' << csv_number(s.lq) << ',' << csv_number(s.linf) << ','
           << csv_number(s.dt) << ',' << s.clamp_count << '\n';
    return os.str();
}

/// Columns x, y under the given header names.
inline std::string series_csv(std::string const& xname, std::string const& yname, std::vector<double> const& x,
                              std::vector<double> const& y) {
    if (x.size() != y.size()) throw std::invalid_argument("series_csv: length mismatch");
    std::ostringstream os;
    os << xname << ',' << yname << '\n';
    for (std::size_t i = 0; i < x.size(); ++i) os << csv_number(x[i]) << ',' << csv_number(y[i]) << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------
// Files

/// Writes to "<path>.tmp" and renames over `path`.
inline void write_atomic(std::filesystem::path const& path, std::string const& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        os << content;
        os.flush();
        if (!os) throw std::runtime_error("write to " + tmp.string() + " failed");
    }
    std::filesystem::rename(tmp, path);
}

inline std::string utc_timestamp() {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Writes the report body and a sidecar with the timestamp and command line.
inline void write_report(std::filesystem::path const& path, json body, std::string const& command) {
    body["schema"] = report_schema_version;
    write_atomic(path, body.dump(2) + "\n");
    auto meta_path = path;
    meta_path += ".meta.json";
    json meta{{"schema", report_schema_version}, {"generated_at", utc_timestamp()}, {"command", command}};
    write_atomic(meta_path, meta.dump(2) + "\n");
}

} // namespace heatlab
