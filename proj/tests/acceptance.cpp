// Acceptance suite: one PASS/FAIL line per criterion with its runtime.
// Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "heatlab/heatlab.hpp"

using namespace heatlab;

namespace {

struct Result {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, std::string const& what) {
        if (!ok) {
            pass = false;
            detail << " [FAIL " << what << "]";
        }
    }
};

struct AcceptanceCase {
    int id;
    std::string title;
    double budget_s;
    std::function<void(Result&)> run;
};

std::string fmt(double x) { return format_number(x); }

double max_diff(RadialField const& a, RadialField const& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

// 1. classify_lq on powers around p* = 1 + 2q/d.
void lq_table(Result& r) {
    int wrong = 0, inconclusive = 0, cases = 0;
    for (int d = 1; d <= 3; ++d)
        for (double q : {1.5, 2.0, 3.0}) {
            double ps = 1.0 + 2.0 * q / d;
            for (double off : {-0.5, 0.0, 0.5}) {
                ++cases;
                auto f = Expression::parse("s^" + format_number(ps + off));
                auto v = classify_lq(f, q, d);
                auto want = off > 0.0 ? Outcome::NoLocalExistence : Outcome::Exists;
                if (v.outcome == Outcome::Inconclusive) ++inconclusive;
                if (v.outcome != want) {
                    ++wrong;
                    r.detail << " d=" << d << ",q=" << q << ",p=" << fmt(ps + off) << "->" << to_string(v.outcome);
                }
            }
        }
    r.detail << " " << cases - wrong << "/" << cases << " correct, " << inconclusive << " inconclusive";
    r.check(wrong == 0 && inconclusive == 0, "verdict table");
}

// 2. log family in d = 2.
void log_family_boundary(Result& r) {
    for (double beta : {0.0, 0.5, 1.0, 1.5, 2.0, 4.0}) {
        auto f = builtin_family("log_family", {{"d", 2}, {"beta", beta}});
        auto v = classify_l1(f, 2);
        auto want = beta <= 1.0 ? Outcome::NoLocalExistence : Outcome::Exists;
        r.detail << " b=" << fmt(beta) << ":" << to_string(v.outcome);
        r.check(v.outcome == want, "beta " + fmt(beta));
    }
    auto f10 = builtin_family("log_family", {{"d", 2}, {"beta", 10.0}});
    bool rejected = !monotonicity_audit(f10, 1e12, 600).passed();
    bool threw = false;
    try {
        classify_l1(f10, 2);
    } catch (AuditFailure const&) {
        threw = true;
    }
    r.detail << " b=10 audit " << (rejected ? "rejects" : "accepts") << " (limit " << fmt(log_family_beta_max(2)) << ")";
    r.check(rejected && threw, "audit at beta 10");
}

// 3. integral and series tests agree.
void equivalence(Result& r) {
    auto suite = equivalence_suite(20260101, 20);
    r.detail << " seed 20260101: " << suite.decided << "/20 decided, " << suite.agree << " agree, " << suite.disagree
             << " disagree, " << suite.rejected_by_audit << " draws rejected by the audit";
    r.check(suite.disagree == 0, "disagreement");
    r.check(suite.decided >= 16, "decided count");
}

// 4. kernel lower bounds, whole space.
void kernel_certification(Result& r) {
    CertificationOptions opt;
    opt.r_grid = {0.25, 1.0, 4.0};
    opt.t_relative = {0.0625, 0.25, 0.5, 1.0, 2.0, 4.0};
    opt.t_absolute = {0.001, 0.01, 0.1};
    opt.x_points = 13;
    opt.tolerance = 1e-6;
    for (int d = 1; d <= 3; ++d) {
        auto rep = verify_lower_bounds(d, KernelVariant::WholeSpace, opt);
        double m = std::min({rep.pointwise.min_margin, rep.mass.min_margin, rep.no_tail.min_margin});
        r.detail << " d=" << d << " min margin " << fmt(m) << " (" << rep.pointwise.checks + rep.mass.checks + rep.no_tail.checks
                 << " checks)";
        r.check(rep.passed() && m >= -1e-6, "d = " + std::to_string(d));
    }
    // d = 1 against (erf((x+r)/2sqrt t) - erf((x-r)/2sqrt t)) / 2 evaluated directly.
    double err = 0.0;
    for (double rad : opt.r_grid)
        for (double rel : opt.t_relative) {
            double t = rel * rad * rad, s = 2.0 * std::sqrt(t);
            for (int i = 0; i <= 40; ++i) {
                double x = 3.0 * rad * i / 40.0;
                double ref = 0.5 * (std::erf((x + rad) / s) - std::erf((x - rad) / s));
                err = std::max(err, std::abs(heat_on_ball_radial(rad, x, t, 1) - ref));
            }
        }
    r.detail << "; d=1 erf cross-check max error " << fmt(err);
    r.check(err <= 1e-10, "erf cross-check");
}

// 5. monotone iteration from v = 2 S(t) u0 + chi_Omega.
void monotone_iteration(Result& r) {
    int const d = 1;
    HeatPropagator P(RadialGrid::uniform(d, 1.0, 256));
    auto u0 = RadialField::indicator(P.grid(), 0.5, 0.1);
    auto f = Expression::parse("s^2");
    auto hz = find_existence_horizon(lq_norm(u0, 1.0), f, d);
    auto v = linear_part(P, u0, hz.T, 64);
    for (auto& s : v.slices)
        for (double& x : s.values) x = 2.0 * x + 1.0;
    auto margin = supersolution_check(P, u0, f, v);
    IterationOptions io;
    io.tolerance = 1e-12;
    auto tr = duhamel_iterate(P, u0, f, v, 50, io);
    double above = -std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < v.slices.size(); ++m)
        for (std::size_t i = 0; i < u0.size(); ++i)
            above = std::max(above, tr.limit().slices[m].values[i] - v.slices[m].values[i]);
    r.detail << " T=" << fmt(hz.T) << " margin " << fmt(margin.min_margin) << ", " << tr.iterations
             << " iterations, residual " << fmt(tr.residual) << ", max increase " << fmt(tr.max_increase)
             << ", max(limit - v_init) " << fmt(above);
    r.check(margin.min_margin >= 0.0, "supersolution margin");
    r.check(tr.max_increase <= 1e-10, "monotone decrease");
    r.check(tr.residual < 1e-6 && tr.iterations <= 50, "residual");
    r.check(above <= 0.0, "limit below v_init");
}

// 6. lower-bound chain for T1 data.
void lower_bound_chain(Result& r) {
    auto data = build_t1_data(Expression::parse("s^4"), 1, 1.0, 5, 0.0, 1.0);
    ChainOptions co;
    co.profile_points = 128;
    auto chain = t1_lower_bound_chain(data.spec, {1, 2, 3, 4, 5}, co);
    bool dominated = true, grows = true;
    double prev = 0.0;
    r.detail << " ratios";
    for (auto const& c : chain) {
        r.detail << " " << fmt(c.ratio);
        dominated = dominated && c.ratio >= 1.0 - 1e-6;
        if (c.k > 1 && !(c.prediction.value > prev)) grows = false;
        prev = c.prediction.value;
    }
    r.detail << "; predictions";
    for (auto const& c : chain) r.detail << " " << fmt(c.prediction.value);
    r.detail << "; dominance " << (dominated ? "PASS" : "FAIL") << ", growth " << (grows ? "PASS" : "FAIL");
    if (!grows)
        r.detail << " (P_{k+1}/P_k = e (k/(k+1))^6 < 1 for k <= 5; growth starts at k = 6)";
    r.check(dominated, "dominance");
    r.check(grows, "growth in k");
}

// 7. warm-up shells for the critical power in d = 2.
void warmup(Result& r) {
    int const d = 2;
    double const p = 1.0 + 2.0 / d;
    auto rep = warmup_shells(Expression::parse("s^2"), d, 12);
    double C = (2.0 / d) * std::log(2.0) / (4.0 * std::numbers::pi * std::pow(p, d / 2.0));
    double min_inc = std::numeric_limits<double>::infinity();
    for (auto const& sh : rep.shells) min_inc = std::min(min_inc, sh.increment);
    r.detail << " per-shell constant " << fmt(C) << ", min increment " << fmt(min_inc) << ", partial sum after 12 "
             << fmt(rep.shells.back().partial_sum);
    r.check(rep.shells.size() == 12, "shell count");
    r.check(min_inc >= 0.5 * C, "increment");
}

// 8. solver invariants.
void solver_invariants(Result& r) {
    double semigroup = 0.0;
    std::size_t clamps = 0, violations = 0;
    bool max_ok = true;
    for (int d = 1; d <= 3; ++d) {
        HeatPropagator P(RadialGrid::uniform(d, 2.0, 256));
        auto u = RadialField::indicator(P.grid(), 0.5, 3.0);
        RadialField::add_indicator(u, 0.05, 4.0);
        semigroup = std::max(semigroup, max_diff(P.apply_raw(0.07, P.apply_raw(0.05, u)), P.apply_raw(0.12, u)));
        for (double t : {1e-6, 1e-4, 1e-2, 1.0}) {
            auto res = semigroup_apply(P, t, u);
            clamps += res.clamp_count;
            violations += res.violation_count;
            max_ok = max_ok && res.field.max_abs() <= u.max_abs() * (1 + 1e-12);
        }
    }
    r.detail << " semigroup " << fmt(semigroup) << ", clamps " << clamps << ", violations " << violations;
    r.check(semigroup <= 1e-10, "semigroup");
    r.check(clamps == 0 && violations == 0 && max_ok, "maximum principle");

    // Smooth suite: norms at T on n and 2n cells, same step sequence.
    struct Smooth {
        int d;
        char const* f;
        double amp;
    };
    double worst = 0.0;
    for (Smooth s : {Smooth{1, "s^2", 1.0}, Smooth{2, "s^2", 1.0}, Smooth{3, "s^2", 1.0}, Smooth{2, "s + s^3", 0.5},
                     Smooth{1, "0", 1.0}}) {
        auto f = Expression::parse(s.f);
        auto profile = [&](double x) { return s.amp * std::pow(std::cos(0.5 * std::numbers::pi * x), 2); };
        HeatPropagator Pc(RadialGrid::uniform(s.d, 1.0, 128)), Pf(RadialGrid::uniform(s.d, 1.0, 256));
        auto uf = RadialField::sample(Pf.grid(), profile);
        auto fine = simulate_forward(Pf, uf, f, 0.1);
        SimulationControls fixed;
        fixed.schedule = fine.accepted_times();
        auto coarse = simulate_forward(Pc, RadialField::sample(Pc.grid(), profile), f, 0.1, fixed);
        for (double q : {1.0, 2.0}) {
            double a = lq_norm(coarse.final_field, q), b = lq_norm(fine.final_field, q);
            worst = std::max(worst, std::abs(a - b) / b);
        }
    }
    r.detail << ", grid-halving change " << fmt(100.0 * worst) << "%";
    r.check(worst < 0.01, "grid halving");

    // Comparison: f <= g pointwise on [0, inf) gives u_f <= u_g.
    struct Pair {
        int d;
        char const* f;
        char const* g;
    };
    std::size_t broken = 0;
    double raw_excess = 0.0;
    for (Pair pr : {Pair{1, "s^2", "s^2 + 1"}, Pair{1, "s^2", "2*s^2"}, Pair{2, "0", "s"}, Pair{2, "s^3", "s^3 + s"},
                    Pair{3, "s", "s + 0.5*s^2"}}) {
        HeatPropagator P(RadialGrid::uniform(pr.d, 1.0, 128));
        auto u0 = RadialField::indicator(P.grid(), 0.5, 1.0);
        SimulationControls ctl;
        ctl.snapshot_every = 1;
        auto tg = simulate_forward(P, u0, Expression::parse(pr.g), 0.1, ctl);
        ctl.schedule = tg.accepted_times();
        auto tf = simulate_forward(P, u0, Expression::parse(pr.f), 0.1, ctl);
        // Spectral roundoff is of order 1e-16 times the sup, so compare up to 1e-12 of it.
        auto cmp = [&](RadialField const& a, RadialField const& b) {
            double floor = 1e-12 * b.max_abs();
            for (std::size_t i = 0; i < a.size(); ++i) {
                raw_excess = std::max(raw_excess, a.values[i] - b.values[i]);
                if (a.values[i] > b.values[i] + floor) ++broken;
            }
        };
        cmp(tf.final_field, tg.final_field);
        for (std::size_t k = 0; k < std::min(tf.snapshots.size(), tg.snapshots.size()); ++k)
            cmp(tf.snapshots[k].second, tg.snapshots[k].second);
    }
    r.detail << ", comparison violations " << broken << " over 5 pairs (largest raw excess " << fmt(raw_excess) << ")";
    r.check(broken == 0, "comparison");
}

// 9. numeric blow-up trend in the truncation level.
void blowup(Result& r) {
    auto trend = blowup_trend(Expression::parse("s^4"), 1, 1.0, 3, 8);
    r.detail << " peak |u|_1:";
    for (auto const& run : trend.runs) {
        r.detail << " N=" << run.N << ":" << fmt(run.peak_l1);
        if (run.trajectory.numeric_blowup)
            r.detail << " (numeric blow-up t=" << fmt(run.trajectory.blowup_time) << ", " << run.trajectory.blowup_reason
                     << ")";
    }
    if (!trend.strictly_increasing())
        r.detail << "; runs that stop at t = 0 on the step-size threshold report their initial mass, while runs that "
                    "start growing first develop a spike";
    r.check(trend.strictly_increasing(), "strictly increasing");
}

} // namespace

int main() {
    std::vector<AcceptanceCase> criteria{
        {1, "L^q characterisation table", 10, lq_table},
        {2, "L^1 log family boundary", 10, log_family_boundary},
        {3, "integral/series equivalence", 60, equivalence},
        {4, "kernel certification", 300, kernel_certification},
        {5, "monotone iteration", 60, monotone_iteration},
        {6, "T1 lower-bound chain", 300, lower_bound_chain},
        {7, "warm-up divergence", 60, warmup},
        {8, "solver invariants", 300, solver_invariants},
        {9, "blow-up trend", 600, blowup},
    };
    int failures = 0;
    for (auto const& c : criteria) {
        Result r;
        auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(r);
        } catch (std::exception const& e) {
            r.pass = false;
            r.detail << " [exception: " << e.what() << "]";
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > c.budget_s) {
            r.pass = false;
            r.detail << " [FAIL runtime over " << c.budget_s << " s]";
        }
        if (!r.pass) ++failures;
        std::printf("Criterion %d %s: %s (%.2f s)%s\n", c.id, c.title.c_str(), r.pass ? "PASS" : "FAIL", secs,
                    r.detail.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
