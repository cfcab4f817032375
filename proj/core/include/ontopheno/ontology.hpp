#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace ontopheno {

enum class Relation { is_a, part_of };

struct OntologyTerm {
    std::string id;
    std::string name;
    std::vector<std::pair<std::string, Relation>> parents;
    bool obsolete = false;
};

/// Validated ontology DAG. Immutable after construction; edges cover is_a and
/// part_of only. Obsolete terms are retained as inert nodes without edges and
/// without a depth.
class OntologyGraph {
public:
    /// Builds and validates a graph from already-parsed terms.
    /// Throws DataError on duplicate ids, dangling parent references, or cycles.
    explicit OntologyGraph(std::vector<OntologyTerm> terms);

    bool contains(const std::string& id) const { return terms_.count(id) != 0; }
    const OntologyTerm& term(const std::string& id) const;

    /// All term ids in ascending order (including obsolete nodes).
    const std::vector<std::string>& term_ids() const { return term_ids_; }

    /// Non-obsolete terms with no parents, ascending order.
    const std::vector<std::string>& roots() const { return roots_; }

    /// Shortest-path distance to the nearest root; roots have depth 0.
    /// Throws DataError for unknown or obsolete ids.
    int depth(const std::string& id) const;

    /// Strict ancestors via is_a and part_of. Throws DataError for unknown ids.
    std::set<std::string> ancestors(const std::string& id) const;

    /// Direct children (terms listing `id` as a parent), ascending order.
    const std::vector<std::string>& children(const std::string& id) const;

    const std::map<std::string, OntologyTerm>& terms() const { return terms_; }

private:
    std::map<std::string, OntologyTerm> terms_;
    std::vector<std::string> term_ids_;
    std::vector<std::string> roots_;
    std::map<std::string, int> depth_;
    std::map<std::string, std::vector<std::string>> children_;
    std::vector<std::string> no_children_;
};

/// Parses an OBO-subset text stream of [Term] stanzas. Recognized keys:
/// id, name, is_a ("is_a: <id> ! <name>"), "relationship: part_of <id>",
/// and "is_obsolete: true". Unknown keys are ignored. Obsolete terms keep
/// their node but drop all edges.
OntologyGraph parse_obo(const std::string& text);

}  // namespace ontopheno
