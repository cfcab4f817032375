#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ontopheno/annotation.hpp"

namespace ontopheno {

/// Dense score matrix in [0, 1] aligned to an AnnotationMatrix ordering.
struct PredictionMatrix {
    std::vector<std::string> gene_ids;
    std::vector<std::string> term_ids;
    Eigen::MatrixXd scores;  // genes x terms
};

struct CurvePoint {
    double threshold = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct FmaxResult {
    double fmax = 0.0;
    double threshold = 0.0;  // grid member achieving fmax
    std::vector<CurvePoint> curve;
};

/// Gene-centric Fmax over the threshold grid {0.01, ..., 1.00}. At each
/// threshold, predicted positives are terms with score >= t; precision is
/// averaged over genes with at least one predicted positive, recall over all
/// genes with a non-empty truth set. Throws DataError on id misalignment.
FmaxResult fmax(const PredictionMatrix& pred, const AnnotationMatrix& truth);

enum class AucMode { roc, pr };

struct TermAucResult {
    double macro = 0.0;  // average over evaluable terms
    std::vector<std::pair<std::string, double>> per_term;
    std::size_t excluded_terms = 0;  // terms lacking a positive or negative gene
};

/// Phenotype-centric AUC. roc: Mann-Whitney with ties counted half.
/// pr: step-interpolated area under the precision envelope.
/// Throws DataError when no term is evaluable.
TermAucResult term_auc(const PredictionMatrix& pred, const AnnotationMatrix& truth, AucMode mode);

/// Fixed frequency bins of the stratified report: 11-30, 31-100, 101-300,
/// >=301. Terms with frequency <= 10 fall in no bin but stay in "All".
int frequency_bin(std::size_t frequency);
extern const std::vector<std::string> kFrequencyBinNames;

struct BinReport {
    std::string bin;
    std::size_t n_terms = 0;
    double fmax_pct = 0.0;
    double auc_pct = 0.0;
    double aupr_pct = 0.0;
    double threshold = 0.0;
};

struct EvaluationReport {
    std::vector<BinReport> rows;  // four bins then "All"
    AucMode mode = AucMode::roc;
    FmaxResult all_curve;
    std::size_t excluded_terms = 0;
};

/// Per-bin and overall metrics. `frequency_source` supplies per-term positive
/// counts and must cover the full propagated dataset.
EvaluationReport stratify(const PredictionMatrix& pred, const AnnotationMatrix& truth,
                          const AnnotationMatrix& frequency_source, AucMode mode);

/// Report TSV: bin, n_terms, Fmax, AUC-ROC or AUC-PR, AUPR (percent, 2
/// decimals; NA for empty bins).
std::string report_tsv(const EvaluationReport& report);

/// Curve TSV: threshold, precision, recall, F per grid point.
std::string curve_tsv(const FmaxResult& result);

/// Baseline scoring every gene by each term's training-set frequency ratio.
PredictionMatrix frequency_prior(const AnnotationMatrix& train,
                                 const std::vector<std::string>& gene_ids,
                                 const std::vector<std::string>& term_ids);

}  // namespace ontopheno
