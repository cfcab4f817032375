#include "ontopheno/ontology.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

#include "ontopheno/errors.hpp"

namespace ontopheno {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Finds a directed cycle among the given nodes and renders it as a path.
std::string describe_cycle(const std::map<std::string, OntologyTerm>& terms,
                           const std::set<std::string>& candidates) {
    // Iterative DFS with colors; candidates all lie on or lead into a cycle.
    std::map<std::string, int> color;  // 0 white, 1 gray, 2 black
    std::map<std::string, std::string> came_from;
    for (const auto& start : candidates) {
        if (color[start] != 0) continue;
        std::vector<std::pair<std::string, std::size_t>> stack{{start, 0}};
        color[start] = 1;
        while (!stack.empty()) {
            auto& [node, next_edge] = stack.back();
            const auto& parents = terms.at(node).parents;
            if (next_edge < parents.size()) {
                const std::string& p = parents[next_edge].first;
                ++next_edge;
                if (!candidates.count(p)) continue;
                if (color[p] == 1) {
                    // Unwind the gray path from `node` back to `p`.
                    std::vector<std::string> cycle{p};
                    for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
                        cycle.push_back(it->first);
                        if (it->first == p) break;
                    }
                    std::reverse(cycle.begin(), cycle.end());
                    std::string out;
                    for (const auto& id : cycle) {
                        if (!out.empty()) out += " -> ";
                        out += id;
                    }
                    return out;
                }
                if (color[p] == 0) {
                    color[p] = 1;
                    stack.emplace_back(p, 0);
                }
            } else {
                color[node] = 2;
                stack.pop_back();
            }
        }
    }
    return "(unlocated)";
}

}  // namespace

OntologyGraph::OntologyGraph(std::vector<OntologyTerm> term_list) {
    for (auto& t : term_list) {
        if (terms_.count(t.id))
            throw DataError("duplicate term id: " + t.id);
        if (t.obsolete) t.parents.clear();
        terms_.emplace(t.id, std::move(t));
    }
    for (const auto& [id, t] : terms_) {
        term_ids_.push_back(id);
        for (const auto& [pid, rel] : t.parents) {
            (void)rel;
            if (!terms_.count(pid))
                throw DataError("dangling parent reference: " + pid + " (from " + id + ")");
            if (terms_.at(pid).obsolete)
                throw DataError("parent reference to obsolete term: " + pid + " (from " + id + ")");
            children_[pid].push_back(id);
        }
        if (t.parents.empty() && !t.obsolete) roots_.push_back(id);
    }
    for (auto& [id, kids] : children_) std::sort(kids.begin(), kids.end());

    // Kahn's algorithm over non-obsolete nodes: validates acyclicity and
    // yields shortest-path depths from the nearest root in the same pass
    // (BFS layering works because every processed node's depth is final once
    // all parents are finalized and depth = 1 + min parent depth).
    std::map<std::string, std::size_t> pending;
    std::deque<std::string> queue;
    std::size_t active = 0;
    for (const auto& [id, t] : terms_) {
        if (t.obsolete) continue;
        ++active;
        pending[id] = t.parents.size();
        if (t.parents.empty()) {
            depth_[id] = 0;
            queue.push_back(id);
        }
    }
    std::size_t processed = 0;
    while (!queue.empty()) {
        const std::string id = queue.front();
        queue.pop_front();
        ++processed;
        auto it = children_.find(id);
        if (it == children_.end()) continue;
        for (const auto& c : it->second) {
            auto d = depth_.find(c);
            const int through = depth_.at(id) + 1;
            if (d == depth_.end() || through < d->second) depth_[c] = through;
            if (--pending[c] == 0) queue.push_back(c);
        }
    }
    if (processed != active) {
        std::set<std::string> leftover;
        for (const auto& [id, n] : pending)
            if (n > 0) leftover.insert(id);
        throw DataError("cycle detected: " + describe_cycle(terms_, leftover));
    }
}

const OntologyTerm& OntologyGraph::term(const std::string& id) const {
    auto it = terms_.find(id);
    if (it == terms_.end()) throw DataError("unknown term id: " + id);
    return it->second;
}

int OntologyGraph::depth(const std::string& id) const {
    auto it = depth_.find(id);
    if (it == depth_.end()) {
        if (terms_.count(id)) throw DataError("term is obsolete, no depth: " + id);
        throw DataError("unknown term id: " + id);
    }
    return it->second;
}

std::set<std::string> OntologyGraph::ancestors(const std::string& id) const {
    const OntologyTerm& start = term(id);
    std::set<std::string> out;
    std::deque<const OntologyTerm*> queue{&start};
    while (!queue.empty()) {
        const OntologyTerm* t = queue.front();
        queue.pop_front();
        for (const auto& [pid, rel] : t->parents) {
            (void)rel;
            if (out.insert(pid).second) queue.push_back(&terms_.at(pid));
        }
    }
    return out;
}

const std::vector<std::string>& OntologyGraph::children(const std::string& id) const {
    term(id);  // existence check
    auto it = children_.find(id);
    return it == children_.end() ? no_children_ : it->second;
}

OntologyGraph parse_obo(const std::string& text) {
    std::vector<OntologyTerm> terms;
    std::istringstream in(text);
    std::string line;
    bool in_term = false;
    OntologyTerm current;
    auto flush = [&] {
        if (in_term) {
            if (current.id.empty()) throw DataError("[Term] stanza without id");
            terms.push_back(std::move(current));
            current = OntologyTerm{};
        }
    };
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            flush();
            in_term = (line == "[Term]");
            continue;
        }
        if (!in_term) continue;
        auto colon = line.find(':');
        if (colon == std::string::npos) continue;
        const std::string key = line.substr(0, colon);
        const std::string value = trim(line.substr(colon + 1));
        if (key == "id") {
            current.id = value;
        } else if (key == "name") {
            current.name = value;
        } else if (key == "is_a") {
            // "is_a: <id> ! <name>"
            std::string target = value;
            auto bang = target.find('!');
            if (bang != std::string::npos) target = target.substr(0, bang);
            current.parents.emplace_back(trim(target), Relation::is_a);
        } else if (key == "relationship") {
            std::istringstream rel(value);
            std::string kind, target;
            rel >> kind >> target;
            if (kind == "part_of" && !target.empty())
                current.parents.emplace_back(target, Relation::part_of);
            // other relationship kinds (regulates, ...) are ignored
        } else if (key == "is_obsolete") {
            current.obsolete = (value == "true");
        }
        // unknown stanza keys ignored
    }
    flush();
    return OntologyGraph(std::move(terms));
}

}  // namespace ontopheno
