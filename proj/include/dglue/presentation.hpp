#ifndef DGLUE_PRESENTATION_HPP
#define DGLUE_PRESENTATION_HPP

#include "dglue/bundle.hpp"
#include "dglue/connection.hpp"
#include "dglue/gluing.hpp"
#include "dglue/section.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dglue {

// One named check from a presentation file. `kind` is the library operation
// it instantiates; the arguments are object ids or inline expressions,
// resolved per kind.
struct NamedCheck {
    std::string name;
    std::string kind;
    std::map<std::string, std::string> args;
};

// A fully validated presentation: the glued space, optionally a glued bundle
// with named metrics, connections and sections over its factors, plus the
// checks to run. Everything is constructed through the library factories, so
// holding a Presentation means all structural invariants hold.
struct Presentation {
    GluedSpace space;
    std::optional<GluedBundle> bundle;
    std::map<std::string, PseudoMetric> metrics;
    std::map<std::string, Connection> connections;
    std::map<std::string, Section> sections;
    std::vector<NamedCheck> checks;

    const TrivialPseudoBundle& factor(const std::string& id) const;
    int side_of_bundle(const std::string& id) const; // 1 or 2

    const PseudoMetric& metric(const std::string& id) const;
    const Connection& connection(const std::string& id) const;
    const Section& section(const std::string& id) const;
};

/// Parses and validates a presentation file (JSON, expressions as strings in
/// the text grammar). Throws Error("ParseError") on malformed input and
/// Error("ValidationError") naming the violated invariant otherwise.
Presentation parse_presentation(const std::string& path);
Presentation parse_presentation_text(const std::string& text);

} // namespace dglue

#endif
