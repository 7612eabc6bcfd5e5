#include "dglue/presentation.hpp"

#include "dglue/error.hpp"

#include <json.hpp>

#include <fstream>
#include <limits>
#include <sstream>

namespace dglue {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& what) { fail("ValidationError", what); }

// Parse an expression field and check every division denominator against the
// declared domain.
Expr parse_checked(const std::string& text, Interval dom, const std::string& field) {
    Expr e = [&] {
        try {
            return parse_expr(text);
        } catch (const Error& err) {
            fail("ParseError", "field '" + field + "': " + err.what());
        }
    }();
    for (const Expr& den : reciprocal_denominators(e)) {
        ScanReport rep = scan_nonvanishing(den, dom, 1e-6);
        if (!rep.ok) {
            std::ostringstream os;
            os << "field '" << field << "': denominator " << den.str() << " reaches |"
               << rep.worst << "| at x = " << rep.at
               << "; divisions must stay bounded away from zero on the declared domain";
            invalid(os.str());
        }
    }
    return e;
}

GluingLocus parse_locus(const json& j, const std::string& field) {
    std::string type = j.value("type", "");
    if (type == "points") {
        FinitePointsLocus locus;
        if (!j.contains("points") || !j["points"].is_array() || j["points"].empty())
            invalid(field + ": a points gluing needs a nonempty 'points' array");
        for (const auto& p : j["points"])
            locus.points.emplace_back(p.at("y").get<double>(),
                                      p.at("image").get<double>());
        return locus;
    }
    if (type == "interval") {
        const double inf = std::numeric_limits<double>::infinity();
        double a = j.contains("a") ? j["a"].get<double>() : -inf;
        double b = j.contains("b") ? j["b"].get<double>() : inf;
        Interval dom{a, b};
        Interval scan = std::isinf(a) || std::isinf(b) ? kStandardWindow : dom;
        Expr f = parse_checked(j.at("map").get<std::string>(), scan, field + ".map");
        return IntervalLocus{dom, f};
    }
    invalid(field + ": gluing type must be 'points' or 'interval'");
}

ExprMatrix parse_expr_matrix(const json& j, Interval dom, const std::string& field) {
    ExprMatrix m;
    for (const auto& row : j) {
        std::vector<Expr> r;
        for (const auto& cell : row)
            r.push_back(parse_checked(cell.get<std::string>(), dom,
                                      field + "[" + std::to_string(m.size()) + "]"));
        m.push_back(std::move(r));
    }
    return m;
}

Eigen::MatrixXd parse_matrix(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        invalid(field + ": expected a matrix (array of rows)");
    Eigen::MatrixXd m(j.size(), j[0].size());
    for (size_t i = 0; i < j.size(); ++i) {
        if (j[i].size() != j[0].size()) invalid(field + ": ragged matrix");
        for (size_t c = 0; c < j[i].size(); ++c)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
                j[i][c].get<double>();
    }
    return m;
}

} // namespace

const TrivialPseudoBundle& Presentation::factor(const std::string& id) const {
    if (!bundle) invalid("presentation declares no bundles");
    if (bundle->v1().id == id) return bundle->v1();
    if (bundle->v2().id == id) return bundle->v2();
    invalid("unknown bundle id '" + id + "'");
}

int Presentation::side_of_bundle(const std::string& id) const {
    return factor(id).id == bundle->v1().id ? 1 : 2;
}

const PseudoMetric& Presentation::metric(const std::string& id) const {
    auto it = metrics.find(id);
    if (it == metrics.end()) invalid("unknown metric id '" + id + "'");
    return it->second;
}

const Connection& Presentation::connection(const std::string& id) const {
    auto it = connections.find(id);
    if (it == connections.end()) invalid("unknown connection id '" + id + "'");
    return it->second;
}

const Section& Presentation::section(const std::string& id) const {
    auto it = sections.find(id);
    if (it == sections.end()) invalid("unknown section id '" + id + "'");
    return it->second;
}

Presentation parse_presentation_text(const std::string& text) {
    json root = [&] {
        try {
            return json::parse(text);
        } catch (const json::parse_error& e) {
            fail("ParseError", e.what());
        }
    }();

    try {
        // pieces
        if (!root.contains("pieces") || root["pieces"].size() != 2)
            invalid("a presentation needs exactly two pieces");
        Piece x1{root["pieces"][0].at("id").get<std::string>(),
                 root["pieces"][0].value("dim", 1)};
        Piece x2{root["pieces"][1].at("id").get<std::string>(),
                 root["pieces"][1].value("dim", 1)};

        if (!root.contains("gluing") || root["gluing"].empty())
            invalid("a presentation needs a nonempty 'gluing' section");
        GluedSpace space = make_glued_space(x1, x2, parse_locus(root["gluing"], "gluing"));

        Presentation p{std::move(space), std::nullopt, {}, {}, {}, {}};

        // bundles and fibre map
        if (root.contains("bundles")) {
            if (root["bundles"].size() != 2)
                invalid("either no bundles or exactly two (one per piece)");
            TrivialPseudoBundle factors[2] = {TrivialPseudoBundle{}, TrivialPseudoBundle{}};
            for (int i = 0; i < 2; ++i) {
                const json& jb = root["bundles"][static_cast<size_t>(i)];
                std::string base = jb.at("base").get<std::string>();
                if (base != (i == 0 ? x1.id : x2.id))
                    invalid("bundle '" + jb.at("id").get<std::string>() +
                            "' must sit over piece '" + (i == 0 ? x1.id : x2.id) + "'");
                FibreDescriptor fd;
                fd.rank = jb.at("rank").get<int>();
                if (jb.contains("rough")) {
                    for (const auto& jr : jb["rough"]) {
                        RoughGenerator g;
                        const auto& dir = jr.at("direction");
                        g.direction = Eigen::VectorXd(dir.size());
                        for (size_t d = 0; d < dir.size(); ++d)
                            g.direction(static_cast<Eigen::Index>(d)) = dir[d].get<double>();
                        g.profile = parse_checked(jr.at("profile").get<std::string>(),
                                                  kStandardWindow, "rough.profile");
                        fd.rough.push_back(std::move(g));
                    }
                }
                factors[i] = make_trivial_bundle(jb.at("id").get<std::string>(),
                                                 {base, i == 0 ? x1.dim : x2.dim},
                                                 std::move(fd));
            }

            if (!root.contains("fibre_map"))
                invalid("bundles declared without a 'fibre_map'");
            const json& jm = root["fibre_map"];
            FibreMap map;
            if (jm.contains("matrices")) {
                FibreMapFinite fin;
                for (const auto& m : jm["matrices"])
                    fin.matrices.push_back(parse_matrix(m, "fibre_map.matrices"));
                map = std::move(fin);
            } else if (jm.contains("entries")) {
                Interval dom = p.space.finite_locus() ? kStandardWindow
                               : p.space.interval().whole_line()
                                   ? kStandardWindow
                                   : p.space.interval().domain;
                map = FibreMapInterval{
                    parse_expr_matrix(jm["entries"], dom, "fibre_map.entries")};
            } else {
                invalid("fibre_map needs 'matrices' (points locus) or 'entries'");
            }
            p.bundle = glue_bundles(factors[0], factors[1], p.space, std::move(map));
        }

        // metrics
        for (const json& jg : root.value("metrics", json::array())) {
            std::string id = jg.at("id").get<std::string>();
            const TrivialPseudoBundle& owner =
                p.factor(jg.at("bundle").get<std::string>());
            ExprMatrix m = parse_expr_matrix(jg.at("matrix"), kStandardWindow,
                                             "metrics." + id);
            p.metrics.emplace(id, make_pseudo_metric(owner, std::move(m)));
        }

        // connections: explicit Christoffel data or a Levi-Civita seed
        for (const json& jc : root.value("connections", json::array())) {
            std::string id = jc.at("id").get<std::string>();
            const TrivialPseudoBundle& owner =
                p.factor(jc.at("bundle").get<std::string>());
            if (jc.contains("levi_civita_of")) {
                Expr h = parse_checked(jc["levi_civita_of"].get<std::string>(),
                                       kStandardWindow, "connections." + id);
                Connection c = levi_civita_1d(h);
                c.bundle_id = owner.id;
                c.base_id = owner.base.id;
                if (owner.fibre.rank != 1)
                    invalid("levi_civita_of needs a rank-1 bundle");
                p.connections.emplace(id, std::move(c));
            } else {
                ExprMatrix gamma = parse_expr_matrix(jc.at("christoffel"),
                                                     kStandardWindow,
                                                     "connections." + id);
                p.connections.emplace(id, make_connection(owner, std::move(gamma)));
            }
        }

        // sections
        for (const json& js : root.value("sections", json::array())) {
            std::string id = js.at("id").get<std::string>();
            const TrivialPseudoBundle& owner =
                p.factor(js.at("bundle").get<std::string>());
            Section s{owner.id, {}};
            for (const auto& comp : js.at("components"))
                s.components.push_back(parse_checked(comp.get<std::string>(),
                                                     kStandardWindow,
                                                     "sections." + id));
            if (static_cast<int>(s.components.size()) != owner.fibre.rank)
                invalid("section '" + id + "' has " +
                        std::to_string(s.components.size()) + " components, bundle '" +
                        owner.id + "' has rank " + std::to_string(owner.fibre.rank));
            p.sections.emplace(id, std::move(s));
        }

        // named checks
        for (const json& jc : root.value("checks", json::array())) {
            NamedCheck c;
            c.name = jc.at("name").get<std::string>();
            c.kind = jc.at("kind").get<std::string>();
            for (const auto& [key, val] : jc.items()) {
                if (key == "name" || key == "kind") continue;
                c.args[key] = val.get<std::string>();
            }
            p.checks.push_back(std::move(c));
        }
        return p;
    } catch (const json::exception& e) {
        fail("ParseError", e.what());
    } catch (const Error& e) {
        // surface library invariant violations as validation failures, keeping
        // the violated invariant's code in the message
        if (e.code() == "ParseError" || e.code() == "ValidationError") throw;
        fail("ValidationError", e.what());
    }
}

Presentation parse_presentation(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("ParseError", "cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_presentation_text(buffer.str());
}

} // namespace dglue
