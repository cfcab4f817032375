#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ontopheno/ontology.hpp"

namespace ontopheno {

/// Sparse binary gene-by-term matrix. Gene and term orderings are fixed at
/// construction; term ids are expected in ascending order so matrices and
/// reports are byte-reproducible.
class AnnotationMatrix {
public:
    AnnotationMatrix() = default;
    AnnotationMatrix(std::vector<std::string> gene_ids, std::vector<std::string> term_ids);

    std::size_t n_genes() const { return gene_ids_.size(); }
    std::size_t n_terms() const { return term_ids_.size(); }

    const std::vector<std::string>& gene_ids() const { return gene_ids_; }
    const std::vector<std::string>& term_ids() const { return term_ids_; }

    /// Throws DataError if the id is unknown.
    std::size_t gene_index(const std::string& id) const;
    std::size_t term_index(const std::string& id) const;
    bool has_term(const std::string& id) const { return term_index_.count(id) != 0; }
    bool has_gene(const std::string& id) const { return gene_index_.count(id) != 0; }

    void set(std::size_t gene, std::size_t term);
    bool get(std::size_t gene, std::size_t term) const;

    /// Positive term indices of one gene, ascending.
    const std::set<std::size_t>& positives(std::size_t gene) const;

    /// Number of positive genes for one term column.
    std::size_t term_frequency(std::size_t term) const;

    std::size_t n_entries() const;

    bool operator==(const AnnotationMatrix& other) const;

private:
    std::vector<std::string> gene_ids_;
    std::vector<std::string> term_ids_;
    std::map<std::string, std::size_t> gene_index_;
    std::map<std::string, std::size_t> term_index_;
    std::vector<std::set<std::size_t>> rows_;
};

/// Upward closure of every gene's positive set along is_a/part_of edges.
/// Output term ids are the ascending union of the input term ids and every
/// ancestor reached. Idempotent. Throws DataError when an annotated term is
/// unknown to the graph or obsolete, listing the offending ids.
AnnotationMatrix propagate(const OntologyGraph& graph, const AnnotationMatrix& ann);

/// Terms at depth exactly 2 whose training column is nonzero, ascending by id.
/// Expects `train_ann` already propagated.
std::vector<std::string> select_bottleneck_terms(const OntologyGraph& graph,
                                                 const AnnotationMatrix& train_ann);

}  // namespace ontopheno
