#include "dglue/cli.hpp"

#include "dglue/connection.hpp"
#include "dglue/error.hpp"
#include "dglue/forms.hpp"
#include "dglue/generators.hpp"
#include "dglue/section.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace dglue::cli {

using nlohmann::json;

namespace {

std::string format_location(double x) {
    std::ostringstream os;
    os << "x = " << x;
    return os.str();
}

class Stopwatch {
public:
    double ms() const {
        return std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Five-point central difference stencil: the independent derivative oracle
// used by the demos, deliberately separate from the symbolic path.
double stencil_derivative(const Expr& e, double x, double h = 1e-3) {
    return (-e.eval(x + 2 * h) + 8 * e.eval(x + h) - 8 * e.eval(x - h) +
            e.eval(x - 2 * h)) /
           (12 * h);
}

std::string pad2(int n) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02d", n);
    return buf;
}

} // namespace

bool RunReport::all_pass() const {
    for (const CheckResult& c : checks)
        if (!c.pass) return false;
    return true;
}

void RunReport::finalize() {
    std::sort(checks.begin(), checks.end(),
              [](const CheckResult& a, const CheckResult& b) { return a.name < b.name; });
}

std::string RunReport::to_json_text() const {
    json j;
    j["schema_version"] = 1;
    j["command"] = command;
    j["seed"] = seed;
    j["samples"] = samples;
    j["tol"] = tol;
    j["all_pass"] = all_pass();
    j["checks"] = json::array();
    for (const CheckResult& c : checks) {
        json jc;
        jc["name"] = c.name;
        jc["pass"] = c.pass;
        jc["worst_residual"] = c.worst;
        jc["location"] = c.location;
        jc["samples"] = c.samples;
        jc["seed"] = c.seed;
        j["checks"].push_back(jc);
    }
    return j.dump(2) + "\n";
}

std::string RunReport::to_text() const {
    std::ostringstream os;
    for (const CheckResult& c : checks) {
        os << (c.pass ? "PASS" : "FAIL") << "  " << c.name << "  worst=" << c.worst;
        if (!c.location.empty()) os << " at " << c.location;
        os << "  (" << c.samples << " samples, seed " << c.seed << ", " << c.wall_ms
           << " ms)\n";
    }
    os << (all_pass() ? "all checks passed" : "SOME CHECKS FAILED") << "\n";
    return os.str();
}

namespace {

void push(RunReport& report, const std::string& name, bool pass, double worst,
          const std::string& location, int samples, std::uint64_t seed,
          const Stopwatch& sw) {
    report.checks.push_back(
        CheckResult{name, pass, worst, location, samples, seed, sw.ms()});
}

// ---------------------------------------------------------------------------
// check: run the named checks of a presentation file

void run_named_check(const Presentation& p, const NamedCheck& c, const Options& opts,
                     RunReport& report) {
    Stopwatch sw;
    auto arg = [&](const std::string& key) -> const std::string& {
        auto it = c.args.find(key);
        if (it == c.args.end())
            fail("ValidationError",
                 "check '" + c.name + "' (" + c.kind + ") is missing argument '" + key +
                     "'");
        return it->second;
    };
    auto grid = sample_grid(kSuiteWindow, opts.samples);

    if (c.kind == "glue_functions") {
        Expr h1 = parse_expr(arg("h1"));
        Expr h2 = parse_expr(arg("h2"));
        FunctionCompatReport rep = functions_compatibility(h1, h2, p.space, opts.tol);
        push(report, c.name, rep.ok, rep.worst, format_location(rep.at), 0, opts.seed,
             sw);
    } else if (c.kind == "forms_compatible") {
        OneFormPiece w1{parse_expr(arg("w1"))};
        OneFormPiece w2{parse_expr(arg("w2"))};
        ForResidual rep = forms_compatible_report(w1, w2, p.space, opts.tol);
        push(report, c.name, rep.ok, rep.worst, format_location(rep.at), 0, opts.seed,
             sw);
    } else if (c.kind == "is_compatible") {
        if (!p.bundle) fail("ValidationError", "is_compatible needs a bundle");
        CompatReport rep = is_compatible(p.section(arg("s1")), p.section(arg("s2")),
                                         *p.bundle, opts.tol);
        push(report, c.name, rep.ok, rep.worst, format_location(rep.at), 0, opts.seed,
             sw);
    } else if (c.kind == "is_invariant") {
        if (!p.bundle) fail("ValidationError", "is_invariant needs a bundle");
        CompatReport rep = is_invariant(p.section(arg("s1")), *p.bundle, opts.tol);
        push(report, c.name, rep.ok, rep.worst, format_location(rep.at), 0, opts.seed,
             sw);
    } else if (c.kind == "metrics_compatible_check") {
        if (!p.bundle) fail("ValidationError", "metrics_compatible_check needs a bundle");
        CheckReport rep = metrics_compatible_check(p.metric(arg("g1")),
                                                   p.metric(arg("g2")), *p.bundle,
                                                   opts.tol);
        push(report, c.name, rep.pass, rep.worst, format_location(rep.at), 0, opts.seed,
             sw);
    } else if (c.kind == "connections_compatible_check") {
        if (!p.bundle)
            fail("ValidationError", "connections_compatible_check needs a bundle");
        ConnectionCompatCertificate cert = connections_compatible_check(
            p.connection(arg("c1")), p.connection(arg("c2")), *p.bundle, opts.tol);
        push(report, c.name, cert.pass, cert.worst, format_location(cert.at),
             cert.samples, opts.seed, sw);
    } else if (c.kind == "leibniz_check") {
        CheckReport rep = leibniz_check(p.connection(arg("connection")),
                                        parse_expr(arg("h")), p.section(arg("section")),
                                        grid, opts.tol);
        push(report, c.name, rep.pass, rep.worst, format_location(rep.at), opts.samples,
             opts.seed, sw);
    } else if (c.kind == "metric_compatible_check") {
        CheckReport rep = metric_compatible_check(
            p.connection(arg("connection")), p.metric(arg("metric")),
            p.section(arg("s")), p.section(arg("t")), grid, opts.tol);
        push(report, c.name, rep.pass, rep.worst, format_location(rep.at), opts.samples,
             opts.seed, sw);
    } else if (c.kind == "induced_metric_compatibility_check") {
        if (!p.bundle) fail("ValidationError", "needs a bundle");
        GluedMetric gm = induced_pseudo_metric(p.metric(arg("g1")), p.metric(arg("g2")),
                                               *p.bundle, opts.tol);
        GluedConnection gc = induce_connection(p.connection(arg("c1")),
                                               p.connection(arg("c2")), *p.bundle,
                                               opts.tol);
        GluedSection s = glue_sections_S(p.section(arg("s1")), p.section(arg("s2")),
                                         *p.bundle, opts.tol);
        GluedSection t = glue_sections_S(p.section(arg("t1")), p.section(arg("t2")),
                                         *p.bundle, opts.tol);
        CheckReport rep = induced_metric_compatibility_check(gc, gm, *p.bundle, s, t,
                                                             opts.samples, opts.tol);
        push(report, c.name, rep.pass, rep.worst, format_location(rep.at), opts.samples,
             opts.seed, sw);
    } else {
        fail("ValidationError", "unknown check kind '" + c.kind + "'");
    }
}

} // namespace

RunReport run_check(const std::string& path, const Options& opts) {
    RunReport report{"check " + path, opts.seed, opts.samples, opts.tol, {}};
    Presentation p = parse_presentation(path);

    {
        // structural validation happened during parsing; record it
        Stopwatch sw;
        push(report, "parse_presentation", true, 0.0, "", 0, opts.seed, sw);
    }
    if (p.bundle) {
        // quotient machinery sanity: the reduced bundle must assemble under
        // the chosen complement (pushforward well-defined, projections commute)
        Stopwatch sw;
        bool ok = true;
        std::string where;
        try {
            (void)reduced_bundle(*p.bundle, opts.complement);
        } catch (const Error& e) {
            ok = false;
            where = e.what();
        }
        push(report, "reduced_bundle", ok, 0.0, where, 100, opts.seed, sw);
    }
    for (const NamedCheck& c : p.checks) run_named_check(p, c, opts, report);
    report.finalize();
    return report;
}

RunReport run_induce(const std::string& path, const Options& opts,
                     std::string* formula_out) {
    RunReport report{"induce-connection " + path, opts.seed, opts.samples, opts.tol, {}};
    Presentation p = parse_presentation(path);
    if (!p.bundle) fail("ValidationError", "induce-connection needs a bundle");

    const Connection* c1 = nullptr;
    const Connection* c2 = nullptr;
    for (const auto& [id, c] : p.connections) {
        if (p.side_of_bundle(c.bundle_id) == 1 && !c1) c1 = &c;
        if (p.side_of_bundle(c.bundle_id) == 2 && !c2) c2 = &c;
    }
    if (!c1 || !c2)
        fail("ValidationError", "induce-connection needs one connection per factor");

    Stopwatch sw;
    bool ok = true;
    double worst = 0.0;
    std::string where;
    try {
        GluedConnection gc = induce_connection(*c1, *c2, *p.bundle, opts.tol);
        worst = gc.certificate.worst;
        if (formula_out) {
            std::ostringstream os;
            os << "∇∪ on " << p.bundle->v1().id << " ∪ " << p.bundle->v2().id << ":\n";
            os << "  over i1(X1\\Y):     (s1' + Γ1·s1) dx ⊗ j1(e)\n";
            os << "  over i2(f(Y)):     pair( f̃·(s1' + Γ1·s1)(y), (s2' + Γ2·s2)(f(y)) ) ⊗ e\n";
            os << "  over i2(X2\\f(Y)): (s2' + Γ2·s2) dy ⊗ j2(e)\n";
            os << "  Γ1 = " << c1->gamma[0][0].str() << "\n";
            os << "  Γ2 = " << c2->gamma[0][0].str() << "\n";
            *formula_out = os.str();
        }
    } catch (const Error& e) {
        ok = false;
        where = e.what();
    }
    push(report, "induce_connection", ok, worst, where, opts.samples, opts.seed, sw);
    report.finalize();
    return report;
}

namespace {

// ---------------------------------------------------------------------------
// demos

// The two-lines-at-a-point example with its Levi-Civita pair.
struct WedgeData {
    GluedBundle bundle;
    PseudoMetric g1, g2;
    Connection lc1, lc2;
    GluedMetric metric;
    GluedConnection connection;
    GluedSection s, t;
};

WedgeData make_wedge_data() {
    const Expr x = Expr::variable();
    GluedSpace space = make_glued_space({"X1"}, {"X2"},
                                        FinitePointsLocus{{{0.0, 0.0}}});
    auto v1 = make_trivial_bundle("V1", {"X1"}, FibreDescriptor::standard(1));
    auto v2 = make_trivial_bundle("V2", {"X2"}, FibreDescriptor::standard(1));
    Eigen::MatrixXd one(1, 1);
    one << 1.0;
    GluedBundle bundle = glue_bundles(v1, v2, space, FibreMapFinite{{one}});

    Expr h1 = Expr::constant(1.0) + x.pow(2);
    Expr h2 = Expr::exp(x); // normalized: h2(0) = 1 = h1(0)
    PseudoMetric g1 = make_pseudo_metric(v1, {{h1}});
    PseudoMetric g2 = make_pseudo_metric(v2, {{h2}});
    Connection lc1 = levi_civita_1d(h1);
    lc1.bundle_id = "V1";
    lc1.base_id = "X1";
    Connection lc2 = levi_civita_1d(h2);
    lc2.bundle_id = "V2";
    lc2.base_id = "X2";

    GluedMetric gm = induced_pseudo_metric(g1, g2, bundle);
    GluedConnection gc = induce_connection(lc1, lc2, bundle);

    GluedSection s = glue_sections_S(
        Section{"V1", {Expr::constant(1.0) + Expr::sin(x)}},
        Section{"V2", {Expr::exp(x)}}, bundle);
    GluedSection t = glue_sections_S(
        Section{"V1", {Expr::constant(1.0) + x.pow(2)}},
        Section{"V2", {Expr::cos(x) * Expr::cos(x) + x * Expr::sin(x) * Expr::cos(x) +
                           x.pow(2)}},
        bundle);
    return WedgeData{bundle, g1,  g2, lc1, lc2,
                     gm,     gc, s,  t};
}

RunReport demo_wedge(const Options& opts, std::string* table_out) {
    RunReport report{"demo wedge", opts.seed, opts.samples, opts.tol, {}};
    WedgeData w = make_wedge_data();
    const Expr x = Expr::variable();
    const Expr h1 = Expr::constant(1.0) + x.pow(2);
    const Expr h2 = Expr::exp(x);

    // Christoffel symbol of the exp-metric is identically one half
    {
        Stopwatch sw;
        double worst = 0.0, at = 0.0;
        for (double p : sample_grid(kStandardWindow, 101)) {
            double res = std::fabs(w.lc2.gamma[0][0].eval(p) - 0.5);
            if (res > worst) {
                worst = res;
                at = p;
            }
        }
        push(report, "christoffel_exp_is_half", worst <= 1e-12, worst,
             format_location(at), 101, opts.seed, sw);
    }

    // off the wedge the glued connection acts as the factor covariant value;
    // certified against the difference-quotient oracle
    auto branch_check = [&](int side, const std::string& name) {
        Stopwatch sw;
        Rng rng(opts.seed + side);
        const Expr& h = side == 1 ? h1 : h2;
        const Section& sec = side == 1 ? w.s.s1 : w.s.s2;
        double worst = 0.0, at = 0.0;
        int n = 0;
        while (n < 100) {
            double p = rng.uniform(-4.0, 4.0);
            if (std::fabs(p) < 1e-3) continue;
            ++n;
            GluedPoint gp = side == 1 ? GluedPoint::first(p) : GluedPoint::second(p);
            GluedCovariantValue val = apply_glued_connection(w.connection, w.s,
                                                             w.bundle, gp);
            double gamma_fd = stencil_derivative(h, p) / (2.0 * h.eval(p));
            double oracle = stencil_derivative(sec.components[0], p) +
                            gamma_fd * sec.components[0].eval(p);
            double res = std::fabs(val.single().coeff(0) - oracle);
            if (res > worst) {
                worst = res;
                at = p;
            }
        }
        push(report, name, worst <= opts.tol, worst, format_location(at), 100,
             opts.seed, sw);
    };
    branch_check(1, "off_glue_matches_factor_side1");
    branch_check(2, "off_glue_matches_factor_side2");

    // the wedge-point value is exactly the pair of the two covariant values
    {
        Stopwatch sw;
        GluedCovariantValue val =
            apply_glued_connection(w.connection, w.s, w.bundle, GluedPoint::second(0.0));
        double want1 = apply_connection(w.lc1, w.s.s1)[0].eval(0.0);
        double want2 = apply_connection(w.lc2, w.s.s2)[0].eval(0.0);
        double worst = std::max(std::fabs(val.pair().from_side1(0) - want1),
                                std::fabs(val.pair().from_side2(0) - want2));
        push(report, "wedge_point_is_exact_pair", worst == 0.0, worst, "glue class", 1,
             opts.seed, sw);
    }

    // the induced connection respects the induced pseudo-metric branchwise
    {
        Stopwatch sw;
        CheckReport rep = induced_metric_compatibility_check(
            w.connection, w.metric, w.bundle, w.s, w.t, 101, opts.tol);
        push(report, "induced_metric_compatibility", rep.pass, rep.worst,
             format_location(rep.at), 101, opts.seed, sw);
    }

    if (table_out) {
        std::ostringstream os;
        os << "x\tbranch\tvalue\n";
        for (double p : {-2.0, -1.0, -0.5, 0.5, 1.0, 2.0}) {
            GluedCovariantValue val = apply_glued_connection(
                w.connection, w.s, w.bundle, GluedPoint::first(p));
            os << p << "\ti1(X1\\Y)\t" << val.single().coeff(0) << " dx⊗e\n";
        }
        GluedCovariantValue pv =
            apply_glued_connection(w.connection, w.s, w.bundle, GluedPoint::second(0.0));
        os << 0.0 << "\tglue class\tpair(" << pv.pair().from_side1(0) << " dx, "
           << pv.pair().from_side2(0) << " dy)⊗e\n";
        for (double p : {0.5, 1.0, 2.0}) {
            GluedCovariantValue val = apply_glued_connection(
                w.connection, w.s, w.bundle, GluedPoint::second(p));
            os << p << "\ti2(X2\\f(Y))\t" << val.single().coeff(0) << " dy⊗e\n";
        }
        *table_out = os.str();
    }

    report.finalize();
    return report;
}

RunReport demo_delta(const Options& opts, std::string* table_out) {
    RunReport report{"demo delta", opts.seed, opts.samples, opts.tol, {}};
    DeltaDemo d = delta_demo();

    {
        Stopwatch sw;
        double v0 = d.value_at(0.0);
        push(report, "delta_at_zero_is_one", v0 == 1.0, std::fabs(v0 - 1.0), "x = 0", 1,
             opts.seed, sw);
    }
    {
        Stopwatch sw;
        Rng rng(opts.seed);
        double worst = 0.0, at = 0.0;
        int n = 0;
        while (n < 200) {
            double p = rng.uniform(-10.0, 10.0);
            if (p == 0.0) continue;
            ++n;
            double v = d.value_at(p);
            if (std::fabs(v) > worst) {
                worst = std::fabs(v);
                at = p;
            }
        }
        push(report, "delta_vanishes_off_zero", worst == 0.0, worst, format_location(at),
             200, opts.seed, sw);
    }

    if (table_out) {
        std::ostringstream os;
        os << "x\th(p(x))\n";
        for (const auto& [p, v] : d.table) os << p << "\t" << v << "\n";
        *table_out = os.str();
    }
    report.finalize();
    return report;
}

RunReport demo_dim_witness(const Options& opts, std::string* table_out) {
    RunReport report{"demo dim-witness", opts.seed, opts.samples, opts.tol, {}};
    std::ostringstream table;
    table << "k\tpoints\tmin gap\tworst smooth mismatch\n";

    Rng rng(opts.seed);
    for (int k = 1; k <= 5; ++k) {
        // distinct, well-separated kink locations
        std::vector<double> pts;
        while (static_cast<int>(pts.size()) < k) {
            double c = rng.uniform(-4.0, 4.0);
            bool clash = false;
            for (double q : pts)
                if (std::fabs(q - c) < 0.2) clash = true;
            if (!clash) pts.push_back(c);
        }
        Stopwatch sw;
        DimWitness w = dim_witness(pts);
        WitnessCertificate cert =
            certify_dim_witness(w, opts.seed + static_cast<std::uint64_t>(k), 50, 1.9,
                                1e-6);
        push(report, "dim_witness_k" + std::to_string(k),
             cert.ok, cert.worst_match, "", 50,
             opts.seed, sw);

        table << k << "\t[";
        for (size_t i = 0; i < w.points.size(); ++i)
            table << (i ? ", " : "") << w.points[i];
        table << "]\t" << cert.min_gap << "\t" << cert.worst_match << "\n";
    }
    if (table_out) *table_out = table.str();
    report.finalize();
    return report;
}

// ---------------------------------------------------------------------------
// suites

RunReport suite_leibniz(const Options& opts) {
    RunReport report{"suite leibniz", opts.seed, opts.samples, opts.tol, {}};
    auto grid = sample_grid(kSuiteWindow, opts.samples);
    auto v1 = make_trivial_bundle("V1", {"X1"}, FibreDescriptor::standard(1));
    Rng rng(opts.seed);

    for (int trial = 0; trial < 50; ++trial) {
        Stopwatch sw;
        Connection c = make_connection(v1, {{random_smooth(rng)}});
        Expr h = random_smooth(rng);
        Section s{"V1", {random_smooth(rng)}};
        CheckReport rep = leibniz_check(c, h, s, grid, opts.tol);
        push(report, "leibniz_check[" + pad2(trial) + "]", rep.pass, rep.worst,
             format_location(rep.at), opts.samples, opts.seed, sw);
    }

    // negative control: dropping dh ⊗ s must be visible
    {
        Stopwatch sw;
        const Expr x = Expr::variable();
        Connection flat = make_connection(v1, {{Expr::constant(0.0)}});
        Section s{"V1", {Expr::constant(1.0)}};
        Section hs{"V1", {x}};
        Expr broken = apply_connection(flat, hs)[0] - x * apply_connection(flat, s)[0];
        double worst = 0.0;
        for (double p : grid) worst = std::max(worst, std::fabs(broken.eval(p)));
        push(report, "negative_control_dropped_term", worst >= 0.5, worst, "", opts.samples,
             opts.seed, sw);
    }
    report.finalize();
    return report;
}

RunReport suite_metric(const Options& opts) {
    RunReport report{"suite metric", opts.seed, opts.samples, opts.tol, {}};
    auto grid = sample_grid(kSuiteWindow, opts.samples);
    auto v1 = make_trivial_bundle("V1", {"X1"}, FibreDescriptor::standard(1));
    Rng rng(opts.seed);

    for (int trial = 0; trial < 20; ++trial) {
        Expr h = random_positive(rng);
        Section s{"V1", {random_smooth(rng)}};
        Section t{"V1", {random_smooth(rng)}};
        PseudoMetric g = make_pseudo_metric(v1, {{h}});

        Connection lc = levi_civita_1d(h);
        lc.bundle_id = "V1";
        lc.base_id = "X1";
        {
            Stopwatch sw;
            CheckReport rep = metric_compatible_check(lc, g, s, t, grid, opts.tol);
            push(report, "metric_compatible[" + pad2(trial) + "]", rep.pass, rep.worst,
                 format_location(rep.at), opts.samples, opts.seed, sw);
        }
        {
            Stopwatch sw;
            Connection off = lc;
            off.gamma[0][0] = off.gamma[0][0] + Expr::constant(0.1);
            CheckReport rep = metric_compatible_check(off, g, Section{"V1", {Expr::constant(1.0)}},
                                                      Section{"V1", {Expr::constant(1.0)}},
                                                      grid, opts.tol);
            push(report, "metric_control[" + pad2(trial) + "]", rep.worst >= 0.05,
                 rep.worst, format_location(rep.at), opts.samples, opts.seed, sw);
        }
    }
    report.finalize();
    return report;
}

RunReport suite_compat(const Options& opts) {
    RunReport report{"suite compat", opts.seed, opts.samples, opts.tol, {}};
    Rng rng(opts.seed);
    const Expr x = Expr::variable();

    // the interval-locus form-compatibility criterion against a brute-force
    // check by direct substitution with difference-quotient derivatives
    int negatives = 0;
    for (int trial = 0; trial < 10; ++trial) {
        Stopwatch sw;
        Expr f = random_monotone(rng);
        GluedSpace s = make_glued_space({"X1"}, {"X2"}, IntervalLocus{{-1.0, 2.0}, f});
        OneFormPiece w2{random_smooth(rng)};
        bool make_negative = trial % 3 == 2; // three seeded negatives
        OneFormPiece w1 = pullback(f, w2, Interval{-1.0, 2.0});
        if (make_negative) {
            ++negatives;
            w1.coeff = w1.coeff + Expr::constant(0.01 * (1 + trial));
        }

        bool lib = forms_compatible(w1, w2, s, opts.tol);

        double brute_worst = 0.0;
        for (double y : sample_grid({-1.0, 2.0}, 256)) {
            double res = std::fabs(w1.coeff.eval(y) -
                                   w2.coeff.eval(f.eval(y)) * stencil_derivative(f, y));
            brute_worst = std::max(brute_worst, res);
        }
        bool brute = brute_worst <= 1e-7; // stencil error floor
        push(report, "forms_criterion_agreement[" + pad2(trial) + "]", lib == brute,
             brute_worst, make_negative ? "negative case" : "positive case", 256,
             opts.seed, sw);
    }
    {
        Stopwatch sw;
        push(report, "forms_criterion_negative_count", negatives >= 3,
             static_cast<double>(negatives), "", 0, opts.seed, sw);
    }

    // connection compatibility over an interval locus: transported pair passes,
    // mismatched Christoffel data fails
    {
        Stopwatch sw;
        GluedSpace s = make_glued_space({"X1"}, {"X2"}, IntervalLocus{{0.0, 1.0}, x});
        auto v1 = make_trivial_bundle("V1", {"X1"}, FibreDescriptor::standard(1));
        auto v2 = make_trivial_bundle("V2", {"X2"}, FibreDescriptor::standard(1));
        GluedBundle g = glue_bundles(v1, v2, s,
                                     FibreMapInterval{{{Expr::constant(1.0)}}});
        Connection c1{"V1", "X1", {{x}}};
        Connection c2{"V2", "X2", {{x}}};
        ConnectionCompatCertificate cert = connections_compatible_check(c1, c2, g,
                                                                        opts.tol);
        push(report, "connection_compat_positive", cert.pass, cert.worst,
             format_location(cert.at), cert.samples, opts.seed, sw);

        Connection flat{"V1", "X1", {{Expr::constant(0.0)}}};
        Connection one{"V2", "X2", {{Expr::constant(1.0)}}};
        ConnectionCompatCertificate bad = connections_compatible_check(flat, one, g,
                                                                       opts.tol);
        push(report, "connection_compat_negative", !bad.pass && bad.worst >= 0.5,
             bad.worst, format_location(bad.at), bad.samples, opts.seed, sw);
    }
    report.finalize();
    return report;
}

} // namespace

RunReport run_demo(const std::string& which, const Options& opts,
                   std::string* table_out) {
    if (which == "wedge") return demo_wedge(opts, table_out);
    if (which == "delta") return demo_delta(opts, table_out);
    if (which == "dim-witness") return demo_dim_witness(opts, table_out);
    fail("ValidationError", "unknown demo '" + which + "'");
}

RunReport run_suite(const std::string& which, const Options& opts) {
    if (which == "leibniz") return suite_leibniz(opts);
    if (which == "metric") return suite_metric(opts);
    if (which == "compat") return suite_compat(opts);
    fail("ValidationError", "unknown suite '" + which + "'");
}

namespace {

void emit(const RunReport& report, const Options& opts, const std::string& extra) {
    if (!extra.empty()) std::cout << extra << "\n";
    std::cout << report.to_text();
    if (!opts.report_path.empty()) {
        std::ofstream out(opts.report_path);
        out << report.to_json_text();
    }
}

double parse_number(const std::string& tok, const std::string& spec) {
    try {
        size_t used = 0;
        double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        fail("ValidationError",
             "--complement expects <locus-point>=<v1,v2,...>, got '" + spec + "'");
    }
}

ComplementChoice parse_complement(const std::vector<std::string>& specs) {
    ComplementChoice choice;
    for (const std::string& spec : specs) {
        auto eq = spec.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size())
            fail("ValidationError",
                 "--complement expects <locus-point>=<v1,v2,...>, got '" + spec + "'");
        std::string key = spec.substr(0, eq);
        std::vector<double> entries;
        std::stringstream ss(spec.substr(eq + 1));
        std::string tok;
        while (std::getline(ss, tok, ',')) entries.push_back(parse_number(tok, spec));
        if (entries.empty())
            fail("ValidationError", "--complement needs at least one vector entry");
        Eigen::MatrixXd col(static_cast<Eigen::Index>(entries.size()), 1);
        for (size_t i = 0; i < entries.size(); ++i)
            col(static_cast<Eigen::Index>(i), 0) = entries[i];
        if (key == "*") {
            choice.uniform = col;
        } else {
            choice.per_point[parse_number(key, spec)] = col;
        }
    }
    return choice;
}

} // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"gluing calculus for diffeological vector pseudo-bundles"};
    app.name("dglue");
    app.require_subcommand(1);

    Options opts;
    std::string path, which;
    std::vector<std::string> complement_specs;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", opts.seed, "random seed");
        cmd->add_option("--samples", opts.samples, "sample count per check");
        cmd->add_option("--tol", opts.tol, "residual tolerance");
        cmd->add_option("--report", opts.report_path, "write the machine report here");
        cmd->add_option("--complement", complement_specs,
                        "override the quotient splitting: <locus-point>=<v1,v2,...>");
    };

    CLI::App* check = app.add_subcommand("check", "validate a presentation file");
    check->add_option("file", path)->required();
    add_common(check);

    CLI::App* induce =
        app.add_subcommand("induce-connection", "assemble the induced connection");
    induce->add_option("file", path)->required();
    add_common(induce);

    CLI::App* demo = app.add_subcommand("demo", "run a built-in demonstration");
    demo->add_option("which", which, "wedge|delta|dim-witness")->required();
    add_common(demo);

    CLI::App* suite = app.add_subcommand("suite", "run a verification suite");
    suite->add_option("which", which, "leibniz|metric|compat")->required();
    add_common(suite);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        opts.complement = parse_complement(complement_specs);
        RunReport report;
        std::string extra;
        if (check->parsed()) {
            report = run_check(path, opts);
        } else if (induce->parsed()) {
            report = run_induce(path, opts, &extra);
        } else if (demo->parsed()) {
            report = run_demo(which, opts, &extra);
        } else {
            report = run_suite(which, opts);
        }
        emit(report, opts, extra);
        return report.all_pass() ? 0 : 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace dglue::cli
