#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "ontopheno/annotation.hpp"
#include "ontopheno/exclusivity.hpp"
#include "ontopheno/model.hpp"

namespace ontopheno {

/// Loaded dataset: features plus phenotype and bottleneck-GO labels. The
/// splits partition a subset of the gene ids.
struct Dataset {
    std::vector<std::string> gene_ids;
    Eigen::MatrixXd features;      // genes x d
    AnnotationMatrix pheno;        // propagated phenotype labels
    AnnotationMatrix go;           // bottleneck GO labels
    std::vector<std::uint8_t> go_mask;  // per gene: has GO annotation
    std::vector<std::string> train, valid, test;
};

struct FeatureTable {
    std::vector<std::string> gene_ids;
    Eigen::MatrixXd values;
};

/// CSV with header gene_id,f0,...,f{d-1}. Rejects duplicate gene ids, ragged
/// rows, and non-numeric cells (with line numbers).
FeatureTable parse_features(const std::string& csv_text);
std::string features_to_csv(const FeatureTable& table);

/// Annotation TSV: gene_id<TAB>term_id per line, '#' comments ignored.
/// The matrix covers all of the graph's terms; propagation optional.
AnnotationMatrix parse_annotations(const std::string& tsv_text, const OntologyGraph& graph,
                                   bool propagate_labels);

/// Annotation TSV over an explicit term universe (no ontology involved).
AnnotationMatrix parse_annotations_flat(const std::string& tsv_text,
                                        const std::vector<std::string>& term_ids);
std::string annotations_to_tsv(const AnnotationMatrix& ann);

struct SynthSpec {
    int genes = 400;
    int features = 20;
    int phenotypes = 12;
    int bottleneck = 6;
    int exclusive_pairs = 3;
    double noise = 0.05;
    double margin = 0.5;
    double x_max = 1.0;
    double go_mask_fraction = 0.8;
    std::uint64_t seed = 605;
    /// When set, phenotype logits flow through the planted GO layer so the
    /// strongest GO-to-phenotype link is recoverable from a trained model.
    bool bottleneck_path = false;
    double train_fraction = 0.8, valid_fraction = 0.1, test_fraction = 0.1;
};

struct SynthResult {
    Dataset dataset;
    ExclusivePairSet pairs;               // planted exclusive phenotype pairs
    ModelParameters planted;              // linear kind; effective feature->phenotype map
    Eigen::MatrixXd planted_go;           // n x d planted GO layer
    Eigen::MatrixXd planted_bp;           // C x n planted GO->phenotype map (bottleneck_path)
};

/// Seeded synthetic dataset with planted exclusivity and bottleneck
/// structure. Planted pair labels are never co-positive, features stay in
/// the radius-x_max ball. Throws UsageError on infeasible specs.
SynthResult synth_generate(const SynthSpec& spec);

struct SplitFractions {
    double train = 0.8, valid = 0.1, test = 0.1;
};

struct Splits {
    std::vector<std::string> train, valid, test;
};

/// Greedy frequency-stratified split: genes carrying the rarest terms are
/// spread across splits first. Deterministic per seed.
Splits stratified_split(const std::vector<std::string>& gene_ids, const AnnotationMatrix& pheno,
                        const SplitFractions& fractions, std::uint64_t seed);

std::string splits_to_text(const Splits& splits);
Splits parse_splits(const std::string& text);

/// Dataset directory round-trip. Layout: features.csv, pheno_terms.txt,
/// go_terms.txt, phenotype_labels.tsv, go_labels.tsv, go_mask.tsv,
/// splits.txt.
void save_dataset(const Dataset& dataset, const std::string& dir);
Dataset load_dataset(const std::string& dir);

/// Dense per-split view for the trainer: features X, phenotype labels Y,
/// bottleneck labels G and the GO mask, in the order of `gene_subset`.
struct DenseView {
    std::vector<std::string> gene_ids;
    Eigen::MatrixXd X;
    Eigen::MatrixXi Y;
    Eigen::MatrixXi G;
    std::vector<std::uint8_t> go_mask;
};

DenseView dense_view(const Dataset& dataset, const std::vector<std::string>& gene_subset);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace ontopheno
