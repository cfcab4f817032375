#include "ontopheno/exclusivity.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "ontopheno/errors.hpp"

namespace ontopheno {

namespace {

const std::vector<std::pair<std::string, std::string>> kWholeWordOpposites = {
    {"increased", "decreased"}, {"high", "low"},          {"big", "small"},
    {"tall", "short"},          {"excess", "deficient"},  {"accelerated", "delayed"},
    {"early", "late"},          {"enlarged", "reduced"},
};

const std::vector<std::pair<std::string, std::string>> kPrefixOpposites = {
    {"hyper", "hypo"}, {"macro", "micro"}, {"over", "under"},
};

std::vector<std::string> lower_words(const std::string& name) {
    std::vector<std::string> words;
    std::string cur;
    for (char c : name) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!cur.empty()) {
            words.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    return words;
}

bool prefix_match(const std::string& word, const std::string& prefix, std::string* rest) {
    if (word.size() < prefix.size() || word.compare(0, prefix.size(), prefix) != 0) return false;
    *rest = word.substr(prefix.size());
    return true;
}

bool opposing_words(const std::string& a, const std::string& b) {
    for (const auto& [p, q] : kWholeWordOpposites) {
        if ((a == p && b == q) || (a == q && b == p)) return true;
    }
    for (const auto& [p, q] : kPrefixOpposites) {
        std::string ra, rb;
        if (prefix_match(a, p, &ra) && prefix_match(b, q, &rb) && ra == rb) return true;
        if (prefix_match(a, q, &ra) && prefix_match(b, p, &rb) && ra == rb) return true;
    }
    return false;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
        auto tab = line.find('\t', start);
        if (tab == std::string::npos) {
            cols.push_back(trim(line.substr(start)));
            break;
        }
        cols.push_back(trim(line.substr(start, tab - start)));
        start = tab + 1;
    }
    return cols;
}

const std::string kPromptText =
    "You are a biomedical expert. Given a list of phenotype pairs, determine whether each "
    "pair is biologically mutually exclusive.\n"
    "Return 1 if they are mutually exclusive (i.e., cannot occur together in the same DNA "
    "individual), or 0 if they are not exclusive or unclear.\n"
    "\n"
    "Respond in the format:\n"
    "Phenotype_1 vs Phenotype_2: 1 or 0\n";

}  // namespace

void ExclusivePairSet::insert(const std::string& a, const std::string& b, PairProvenance prov) {
    if (a == b) throw DataError("exclusive pair must be irreflexive: " + a);
    Pair key = a < b ? Pair{a, b} : Pair{b, a};
    auto [it, inserted] = pairs_.emplace(std::move(key), prov);
    if (!inserted && prov == PairProvenance::keyword) it->second = PairProvenance::keyword;
}

bool ExclusivePairSet::contains(const std::string& a, const std::string& b) const {
    Pair key = a < b ? Pair{a, b} : Pair{b, a};
    return pairs_.count(key) != 0;
}

ExclusivePairSet ExclusivePairSet::merged_with(const ExclusivePairSet& other) const {
    ExclusivePairSet out = *this;
    for (const auto& [p, prov] : other.pairs_) out.insert(p.first, p.second, prov);
    out.rejected_non_sibling = rejected_non_sibling + other.rejected_non_sibling;
    return out;
}

std::vector<std::pair<int, int>> ExclusivePairSet::to_indices(
    const std::vector<std::string>& term_ids, bool allow_missing) const {
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < term_ids.size(); ++i) index[term_ids[i]] = static_cast<int>(i);
    std::vector<std::pair<int, int>> out;
    for (const auto& [p, prov] : pairs_) {
        (void)prov;
        auto a = index.find(p.first);
        auto b = index.find(p.second);
        if (a == index.end() || b == index.end()) {
            if (allow_missing) continue;
            throw DataError("exclusive pair term not in label set: " +
                            (a == index.end() ? p.first : p.second));
        }
        out.emplace_back(a->second, b->second);
    }
    return out;
}

std::vector<SiblingGroup> sibling_groups(const OntologyGraph& graph) {
    std::vector<SiblingGroup> out;
    for (const auto& id : graph.term_ids()) {
        if (graph.term(id).obsolete) continue;
        const auto& kids = graph.children(id);
        if (kids.size() >= 2) out.push_back({id, kids});
    }
    return out;
}

bool opposing_names(const std::string& a, const std::string& b) {
    const auto wa = lower_words(a);
    const auto wb = lower_words(b);
    if (wa.size() != wb.size() || wa.empty()) return false;
    // Exactly one differing word, and that word pair must be opposing.
    std::size_t diff = wa.size();
    for (std::size_t i = 0; i < wa.size(); ++i) {
        if (wa[i] != wb[i]) {
            if (diff != wa.size()) return false;  // second difference
            diff = i;
        }
    }
    if (diff == wa.size()) return false;  // identical names
    return opposing_words(wa[diff], wb[diff]);
}

ExclusivePairSet mine_keyword_pairs(const std::vector<SiblingGroup>& groups,
                                    const std::map<std::string, std::string>& names) {
    ExclusivePairSet out;
    for (const auto& group : groups) {
        for (std::size_t i = 0; i < group.children.size(); ++i) {
            for (std::size_t j = i + 1; j < group.children.size(); ++j) {
                auto na = names.find(group.children[i]);
                auto nb = names.find(group.children[j]);
                if (na == names.end() || nb == names.end())
                    throw DataError("missing name for term: " +
                                    (na == names.end() ? group.children[i] : group.children[j]));
                if (opposing_names(na->second, nb->second))
                    out.insert(group.children[i], group.children[j], PairProvenance::keyword);
            }
        }
    }
    return out;
}

namespace {

bool are_siblings(const OntologyGraph& graph, const std::string& a, const std::string& b) {
    std::set<std::string> pa;
    for (const auto& [pid, rel] : graph.term(a).parents) {
        (void)rel;
        pa.insert(pid);
    }
    for (const auto& [pid, rel] : graph.term(b).parents) {
        (void)rel;
        if (pa.count(pid)) return true;
    }
    return false;
}

std::string resolve_term(const std::string& token, const OntologyGraph& graph,
                         const std::map<std::string, std::vector<std::string>>& by_name) {
    if (graph.contains(token)) return token;
    auto it = by_name.find(token);
    if (it == by_name.end())
        throw DataError("unresolvable term id or name: " + token);
    if (it->second.size() > 1)
        throw DataError("ambiguous term name: " + token);
    return it->second.front();
}

}  // namespace

ExclusivePairSet ingest_pairs(const std::string& tsv_text, const OntologyGraph& graph) {
    std::map<std::string, std::vector<std::string>> by_name;
    for (const auto& [id, t] : graph.terms())
        if (!t.name.empty()) by_name[t.name].push_back(id);

    ExclusivePairSet out;
    std::istringstream in(tsv_text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        auto cols = split_tabs(line);
        if (cols.size() < 3 || cols.size() > 4)
            throw DataError("malformed pair row at line " + std::to_string(line_no) +
                            ": expected 3 columns");
        if (cols[2] != "0" && cols[2] != "1")
            throw DataError("malformed pair row at line " + std::to_string(line_no) +
                            ": flag must be 0 or 1");
        if (cols[2] == "0") continue;
        const std::string a = resolve_term(cols[0], graph, by_name);
        const std::string b = resolve_term(cols[1], graph, by_name);
        if (a == b)
            throw DataError("self-pair at line " + std::to_string(line_no) + ": " + a);
        if (!are_siblings(graph, a, b)) {
            ++out.rejected_non_sibling;
            continue;
        }
        // Optional 4th column carries the original provenance through a
        // write/read round trip; rows without it are external by definition.
        const bool keyword = cols.size() == 4 && cols[3] == "keyword";
        out.insert(a, b, keyword ? PairProvenance::keyword : PairProvenance::external);
    }
    return out;
}

std::string pairs_to_tsv(const ExclusivePairSet& set) {
    std::ostringstream out;
    for (const auto& [p, prov] : set.pairs()) {
        out << p.first << '\t' << p.second << "\t1\t"
            << (prov == PairProvenance::keyword ? "keyword" : "external") << '\n';
    }
    return out.str();
}

std::vector<std::string> emit_annotation_requests(const std::vector<SiblingGroup>& groups,
                                                  const std::map<std::string, std::string>& names,
                                                  std::size_t batch_size) {
    if (batch_size == 0) throw UsageError("batch size must be positive");
    std::vector<std::string> docs;
    for (const auto& group : groups) {
        std::vector<std::string> pair_lines;
        for (std::size_t i = 0; i < group.children.size(); ++i) {
            for (std::size_t j = i + 1; j < group.children.size(); ++j) {
                const std::string& na = names.at(group.children[i]);
                const std::string& nb = names.at(group.children[j]);
                pair_lines.push_back(na + " vs " + nb);
            }
        }
        for (std::size_t start = 0; start < pair_lines.size(); start += batch_size) {
            std::ostringstream doc;
            doc << kPromptText << '\n';
            const std::size_t end = std::min(start + batch_size, pair_lines.size());
            for (std::size_t k = start; k < end; ++k) doc << pair_lines[k] << '\n';
            docs.push_back(doc.str());
        }
    }
    return docs;
}

std::string parse_annotation_responses(const std::string& response_text) {
    std::ostringstream out;
    std::istringstream in(response_text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string stripped = trim(line);
        if (stripped.empty()) continue;
        auto colon = stripped.rfind(':');
        const auto vs = stripped.find(" vs ");
        if (colon == std::string::npos || vs == std::string::npos || colon < vs)
            throw DataError("malformed response at line " + std::to_string(line_no) +
                            ": expected 'Phenotype_1 vs Phenotype_2: 1 or 0'");
        const std::string verdict = trim(stripped.substr(colon + 1));
        if (verdict != "0" && verdict != "1")
            throw DataError("malformed response at line " + std::to_string(line_no) +
                            ": verdict must be 0 or 1");
        const std::string a = trim(stripped.substr(0, vs));
        const std::string b = trim(stripped.substr(vs + 4, colon - vs - 4));
        if (a.empty() || b.empty())
            throw DataError("malformed response at line " + std::to_string(line_no) +
                            ": empty phenotype name");
        out << a << '\t' << b << '\t' << verdict << '\n';
    }
    return out.str();
}

}  // namespace ontopheno
