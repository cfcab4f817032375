#include "ontopheno/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "ontopheno/errors.hpp"

namespace ontopheno {

const std::vector<std::string> kFrequencyBinNames = {"11-30", "31-100", "101-300", ">=301", "All"};

namespace {

void check_alignment(const PredictionMatrix& pred, const AnnotationMatrix& truth) {
    if (pred.gene_ids != truth.gene_ids() || pred.term_ids != truth.term_ids())
        throw DataError("prediction and truth matrices are misaligned");
    if (pred.scores.rows() != static_cast<Eigen::Index>(pred.gene_ids.size()) ||
        pred.scores.cols() != static_cast<Eigen::Index>(pred.term_ids.size()))
        throw DataError("prediction score matrix shape mismatch");
    for (Eigen::Index r = 0; r < pred.scores.rows(); ++r)
        for (Eigen::Index c = 0; c < pred.scores.cols(); ++c) {
            const double v = pred.scores(r, c);
            if (!(v >= 0.0 && v <= 1.0))
                throw DataError("prediction score outside [0,1]");
        }
}

}  // namespace

FmaxResult fmax(const PredictionMatrix& pred, const AnnotationMatrix& truth) {
    check_alignment(pred, truth);
    const std::size_t n_genes = pred.gene_ids.size();
    const std::size_t n_terms = pred.term_ids.size();

    FmaxResult out;
    out.curve.reserve(100);
    for (int k = 1; k <= 100; ++k) {
        const double t = static_cast<double>(k) / 100.0;
        double prec_sum = 0.0, rec_sum = 0.0;
        std::size_t genes_with_pred = 0, genes_with_truth = 0;
        for (std::size_t g = 0; g < n_genes; ++g) {
            std::size_t n_pred = 0, tp = 0;
            for (std::size_t c = 0; c < n_terms; ++c) {
                if (pred.scores(g, c) >= t) {
                    ++n_pred;
                    if (truth.get(g, c)) ++tp;
                }
            }
            const std::size_t n_truth = truth.positives(g).size();
            if (n_pred > 0) {
                ++genes_with_pred;
                prec_sum += static_cast<double>(tp) / static_cast<double>(n_pred);
            }
            if (n_truth > 0) {
                ++genes_with_truth;
                rec_sum += static_cast<double>(tp) / static_cast<double>(n_truth);
            }
        }
        CurvePoint pt;
        pt.threshold = t;
        pt.precision = genes_with_pred ? prec_sum / static_cast<double>(genes_with_pred) : 0.0;
        pt.recall = genes_with_truth ? rec_sum / static_cast<double>(genes_with_truth) : 0.0;
        const double pr = pt.precision + pt.recall;
        pt.f1 = (genes_with_pred && pr > 0.0) ? 2.0 * pt.precision * pt.recall / pr : 0.0;
        out.curve.push_back(pt);
        if (pt.f1 > out.fmax) {
            out.fmax = pt.f1;
            out.threshold = t;
        }
    }
    if (out.threshold == 0.0) out.threshold = 0.01;  // all-zero curve, report grid start
    return out;
}

namespace {

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    // Mann-Whitney with average ranks for ties.
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double rank_sum_pos = 0.0;
    std::size_t n_pos = 0, n_neg = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]]) rank_sum_pos += avg_rank;
        i = j;
    }
    for (int y : labels) (y ? n_pos : n_neg) += 1;
    return (rank_sum_pos - static_cast<double>(n_pos) * (n_pos + 1) / 2.0) /
           (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double pr_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += (y != 0);

    // Precision/recall points after each distinct-score group.
    std::vector<std::pair<double, double>> points;  // (recall, precision)
    std::size_t tp = 0, taken = 0, i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        for (std::size_t k = i; k < j; ++k) tp += (labels[order[k]] != 0);
        taken += j - i;
        points.emplace_back(static_cast<double>(tp) / static_cast<double>(n_pos),
                            static_cast<double>(tp) / static_cast<double>(taken));
        i = j;
    }
    // Precision envelope from the high-recall end, then a step integral.
    for (std::size_t k = points.size(); k-- > 1;)
        points[k - 1].second = std::max(points[k - 1].second, points[k].second);
    double area = 0.0, prev_recall = 0.0;
    for (const auto& [r, p] : points) {
        area += (r - prev_recall) * p;
        prev_recall = r;
    }
    return area;
}

}  // namespace

TermAucResult term_auc(const PredictionMatrix& pred, const AnnotationMatrix& truth, AucMode mode) {
    check_alignment(pred, truth);
    const std::size_t n_genes = pred.gene_ids.size();
    TermAucResult out;
    double sum = 0.0;
    for (std::size_t c = 0; c < pred.term_ids.size(); ++c) {
        std::vector<double> scores(n_genes);
        std::vector<int> labels(n_genes);
        std::size_t n_pos = 0;
        for (std::size_t g = 0; g < n_genes; ++g) {
            scores[g] = pred.scores(g, c);
            labels[g] = truth.get(g, c) ? 1 : 0;
            n_pos += labels[g];
        }
        if (n_pos == 0 || n_pos == n_genes) {
            ++out.excluded_terms;
            continue;
        }
        const double auc =
            mode == AucMode::roc ? roc_auc(scores, labels) : pr_auc(scores, labels);
        out.per_term.emplace_back(pred.term_ids[c], auc);
        sum += auc;
    }
    if (out.per_term.empty()) throw DataError("no evaluable terms for AUC");
    out.macro = sum / static_cast<double>(out.per_term.size());
    return out;
}

int frequency_bin(std::size_t frequency) {
    if (frequency >= 11 && frequency <= 30) return 0;
    if (frequency >= 31 && frequency <= 100) return 1;
    if (frequency >= 101 && frequency <= 300) return 2;
    if (frequency >= 301) return 3;
    return -1;  // <= 10: only in "All"
}

namespace {

// Restriction of prediction + truth to a term subset.
void restrict_terms(const PredictionMatrix& pred, const AnnotationMatrix& truth,
                    const std::vector<std::size_t>& term_subset, PredictionMatrix* sub_pred,
                    AnnotationMatrix* sub_truth) {
    std::vector<std::string> term_ids;
    term_ids.reserve(term_subset.size());
    for (std::size_t c : term_subset) term_ids.push_back(pred.term_ids[c]);
    sub_pred->gene_ids = pred.gene_ids;
    sub_pred->term_ids = term_ids;
    sub_pred->scores.resize(pred.scores.rows(), static_cast<Eigen::Index>(term_subset.size()));
    for (std::size_t k = 0; k < term_subset.size(); ++k)
        sub_pred->scores.col(static_cast<Eigen::Index>(k)) =
            pred.scores.col(static_cast<Eigen::Index>(term_subset[k]));
    *sub_truth = AnnotationMatrix(pred.gene_ids, term_ids);
    for (std::size_t g = 0; g < pred.gene_ids.size(); ++g)
        for (std::size_t k = 0; k < term_subset.size(); ++k)
            if (truth.get(g, term_subset[k])) sub_truth->set(g, k);
}

}  // namespace

EvaluationReport stratify(const PredictionMatrix& pred, const AnnotationMatrix& truth,
                          const AnnotationMatrix& frequency_source, AucMode mode) {
    check_alignment(pred, truth);
    EvaluationReport report;
    report.mode = mode;

    std::vector<std::vector<std::size_t>> bins(5);
    for (std::size_t c = 0; c < pred.term_ids.size(); ++c) {
        std::size_t freq = 0;
        if (frequency_source.has_term(pred.term_ids[c]))
            freq = frequency_source.term_frequency(frequency_source.term_index(pred.term_ids[c]));
        const int bin = frequency_bin(freq);
        if (bin >= 0) bins[bin].push_back(c);
        bins[4].push_back(c);  // All
    }

    for (std::size_t b = 0; b < bins.size(); ++b) {
        BinReport row;
        row.bin = kFrequencyBinNames[b];
        row.n_terms = bins[b].size();
        if (!bins[b].empty()) {
            PredictionMatrix sub_pred;
            AnnotationMatrix sub_truth;
            restrict_terms(pred, truth, bins[b], &sub_pred, &sub_truth);
            const FmaxResult f = fmax(sub_pred, sub_truth);
            row.fmax_pct = 100.0 * f.fmax;
            row.threshold = f.threshold;
            try {
                row.auc_pct = 100.0 * term_auc(sub_pred, sub_truth, mode).macro;
                row.aupr_pct = 100.0 * term_auc(sub_pred, sub_truth, AucMode::pr).macro;
            } catch (const DataError&) {
                row.auc_pct = row.aupr_pct = -1.0;  // no evaluable terms, NA in TSV
            }
            if (b == 4) {
                report.all_curve = f;
                report.excluded_terms = term_auc(sub_pred, sub_truth, mode).excluded_terms;
            }
        }
        report.rows.push_back(row);
    }
    return report;
}

namespace {

std::string pct(double v) {
    if (v < 0.0) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace

std::string report_tsv(const EvaluationReport& report) {
    std::ostringstream out;
    out << "bin\tn_terms\tFmax\t" << (report.mode == AucMode::roc ? "AUC-ROC" : "AUC-PR")
        << "\tAUPR\tthreshold\n";
    for (const auto& row : report.rows) {
        out << row.bin << '\t' << row.n_terms << '\t';
        if (row.n_terms == 0) {
            out << "NA\tNA\tNA\tNA\n";
            continue;
        }
        char thr[32];
        std::snprintf(thr, sizeof(thr), "%.2f", row.threshold);
        out << pct(row.fmax_pct) << '\t' << pct(row.auc_pct) << '\t' << pct(row.aupr_pct) << '\t'
            << thr << '\n';
    }
    return out.str();
}

std::string curve_tsv(const FmaxResult& result) {
    std::ostringstream out;
    out << "threshold\tprecision\trecall\tF\n";
    char buf[128];
    for (const auto& pt : result.curve) {
        std::snprintf(buf, sizeof(buf), "%.2f\t%.6f\t%.6f\t%.6f\n", pt.threshold, pt.precision,
                      pt.recall, pt.f1);
        out << buf;
    }
    return out.str();
}

PredictionMatrix frequency_prior(const AnnotationMatrix& train,
                                 const std::vector<std::string>& gene_ids,
                                 const std::vector<std::string>& term_ids) {
    PredictionMatrix out;
    out.gene_ids = gene_ids;
    out.term_ids = term_ids;
    out.scores.resize(static_cast<Eigen::Index>(gene_ids.size()),
                      static_cast<Eigen::Index>(term_ids.size()));
    const double denom = std::max<std::size_t>(train.n_genes(), 1);
    for (std::size_t c = 0; c < term_ids.size(); ++c) {
        double score = 0.0;
        if (train.has_term(term_ids[c]))
            score = static_cast<double>(train.term_frequency(train.term_index(term_ids[c]))) /
                    denom;
        out.scores.col(static_cast<Eigen::Index>(c)).setConstant(std::clamp(score, 0.0, 1.0));
    }
    return out;
}

}  // namespace ontopheno
