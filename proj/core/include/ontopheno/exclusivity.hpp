#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ontopheno/ontology.hpp"

namespace ontopheno {

enum class PairProvenance { keyword, external };

/// Symmetric irreflexive set of mutually exclusive term pairs, stored with
/// the lexicographically smaller id first.
class ExclusivePairSet {
public:
    using Pair = std::pair<std::string, std::string>;

    /// Normalizes order; self-pairs are rejected. Keyword provenance wins on
    /// duplicate insertion so the rule-based origin stays visible.
    void insert(const std::string& a, const std::string& b, PairProvenance prov);

    bool contains(const std::string& a, const std::string& b) const;
    std::size_t size() const { return pairs_.size(); }
    const std::map<Pair, PairProvenance>& pairs() const { return pairs_; }

    /// Count of ingested rows dropped for violating the sibling constraint.
    std::size_t rejected_non_sibling = 0;

    /// Set union; provenance keyword wins where both sides carry a pair.
    ExclusivePairSet merged_with(const ExclusivePairSet& other) const;

    /// Maps pairs onto indices into `term_ids`. Pairs with a term outside the
    /// list are skipped when `allow_missing`, otherwise rejected with DataError.
    std::vector<std::pair<int, int>> to_indices(const std::vector<std::string>& term_ids,
                                                bool allow_missing = true) const;

private:
    std::map<Pair, PairProvenance> pairs_;
};

struct SiblingGroup {
    std::string parent_id;
    std::vector<std::string> children;  // ascending term ids
};

/// One group per non-leaf term with at least two direct children, ordered by
/// parent id. A child with several parents appears in each parent's group.
std::vector<SiblingGroup> sibling_groups(const OntologyGraph& graph);

/// True when the two names are identical up to exactly one opposing-keyword
/// substitution (case-insensitive, word boundaries; hyper/hypo, macro/micro
/// and over/under match as word prefixes).
bool opposing_names(const std::string& a, const std::string& b);

/// Rule-based miner over sibling groups; provenance = keyword.
ExclusivePairSet mine_keyword_pairs(const std::vector<SiblingGroup>& groups,
                                    const std::map<std::string, std::string>& names);

/// Reads a pair TSV (term_a<TAB>term_b<TAB>flag, optional provenance column;
/// terms given as ids or exact names). Keeps flag=1 rows as external pairs;
/// rows whose terms do not share a direct parent are dropped and counted in
/// rejected_non_sibling. Throws DataError on malformed rows or unresolvable
/// terms.
ExclusivePairSet ingest_pairs(const std::string& tsv_text, const OntologyGraph& graph);

/// Pair TSV text for an ExclusivePairSet (term_a, term_b, 1, provenance).
std::string pairs_to_tsv(const ExclusivePairSet& set);

/// Annotation-request documents: a fixed prompt followed by enumerated
/// "Name_a vs Name_b" lines, batched per group and capped at `batch_size`
/// pairs per document.
std::vector<std::string> emit_annotation_requests(const std::vector<SiblingGroup>& groups,
                                                  const std::map<std::string, std::string>& names,
                                                  std::size_t batch_size);

/// Parses response lines "Name_a vs Name_b: 0|1" into pair-TSV text suitable
/// for ingest_pairs. Throws DataError with the line number on contract
/// violations; blank lines are ignored.
std::string parse_annotation_responses(const std::string& response_text);

}  // namespace ontopheno
