#include "ontopheno/annotation.hpp"

#include <algorithm>

#include "ontopheno/errors.hpp"

namespace ontopheno {

AnnotationMatrix::AnnotationMatrix(std::vector<std::string> gene_ids,
                                   std::vector<std::string> term_ids)
    : gene_ids_(std::move(gene_ids)), term_ids_(std::move(term_ids)), rows_(gene_ids_.size()) {
    for (std::size_t i = 0; i < gene_ids_.size(); ++i) {
        if (!gene_index_.emplace(gene_ids_[i], i).second)
            throw DataError("duplicate gene id: " + gene_ids_[i]);
    }
    for (std::size_t i = 0; i < term_ids_.size(); ++i) {
        if (!term_index_.emplace(term_ids_[i], i).second)
            throw DataError("duplicate term id: " + term_ids_[i]);
    }
}

std::size_t AnnotationMatrix::gene_index(const std::string& id) const {
    auto it = gene_index_.find(id);
    if (it == gene_index_.end()) throw DataError("unknown gene id: " + id);
    return it->second;
}

std::size_t AnnotationMatrix::term_index(const std::string& id) const {
    auto it = term_index_.find(id);
    if (it == term_index_.end()) throw DataError("unknown term id: " + id);
    return it->second;
}

void AnnotationMatrix::set(std::size_t gene, std::size_t term) {
    if (gene >= n_genes() || term >= n_terms())
        throw DataError("annotation index out of range");
    rows_[gene].insert(term);
}

bool AnnotationMatrix::get(std::size_t gene, std::size_t term) const {
    if (gene >= n_genes() || term >= n_terms())
        throw DataError("annotation index out of range");
    return rows_[gene].count(term) != 0;
}

const std::set<std::size_t>& AnnotationMatrix::positives(std::size_t gene) const {
    if (gene >= n_genes()) throw DataError("gene index out of range");
    return rows_[gene];
}

std::size_t AnnotationMatrix::term_frequency(std::size_t term) const {
    if (term >= n_terms()) throw DataError("term index out of range");
    std::size_t freq = 0;
    for (const auto& row : rows_) freq += row.count(term);
    return freq;
}

std::size_t AnnotationMatrix::n_entries() const {
    std::size_t n = 0;
    for (const auto& row : rows_) n += row.size();
    return n;
}

bool AnnotationMatrix::operator==(const AnnotationMatrix& other) const {
    return gene_ids_ == other.gene_ids_ && term_ids_ == other.term_ids_ && rows_ == other.rows_;
}

AnnotationMatrix propagate(const OntologyGraph& graph, const AnnotationMatrix& ann) {
    std::vector<std::string> bad;
    for (const auto& id : ann.term_ids()) {
        if (!graph.contains(id) || graph.term(id).obsolete) bad.push_back(id);
    }
    // Only terms actually used by some gene are offending.
    if (!bad.empty()) {
        std::vector<std::string> used;
        for (const auto& id : bad) {
            const std::size_t t = ann.term_index(id);
            for (std::size_t g = 0; g < ann.n_genes(); ++g) {
                if (ann.get(g, t)) {
                    used.push_back(id);
                    break;
                }
            }
        }
        if (!used.empty()) {
            std::string msg = "annotations reference unknown or obsolete terms:";
            for (const auto& id : used) msg += " " + id;
            throw DataError(msg);
        }
    }

    // Output term universe: ascending union of input terms and all ancestors.
    std::set<std::string> universe(ann.term_ids().begin(), ann.term_ids().end());
    std::map<std::size_t, std::set<std::string>> closures;  // input term index -> closed id set
    for (std::size_t t = 0; t < ann.n_terms(); ++t) {
        const std::string& id = ann.term_ids()[t];
        if (!graph.contains(id) || graph.term(id).obsolete) continue;  // unused, checked above
        std::set<std::string> closed = graph.ancestors(id);
        closed.insert(id);
        universe.insert(closed.begin(), closed.end());
        closures.emplace(t, std::move(closed));
    }

    AnnotationMatrix out(ann.gene_ids(),
                         std::vector<std::string>(universe.begin(), universe.end()));
    for (std::size_t g = 0; g < ann.n_genes(); ++g) {
        for (std::size_t t : ann.positives(g)) {
            for (const auto& id : closures.at(t)) out.set(g, out.term_index(id));
        }
    }
    return out;
}

std::vector<std::string> select_bottleneck_terms(const OntologyGraph& graph,
                                                 const AnnotationMatrix& train_ann) {
    std::vector<std::string> out;
    for (const auto& id : graph.term_ids()) {
        const OntologyTerm& t = graph.term(id);
        if (t.obsolete || graph.depth(id) != 2) continue;
        if (!train_ann.has_term(id)) continue;
        if (train_ann.term_frequency(train_ann.term_index(id)) == 0) continue;
        out.push_back(id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace ontopheno
