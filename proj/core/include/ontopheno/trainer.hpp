#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ontopheno/dataio.hpp"
#include "ontopheno/exclusivity.hpp"
#include "ontopheno/model.hpp"
#include "ontopheno/objective.hpp"

namespace ontopheno {

enum class Optimizer { sgd, adam };

struct TrainConfig {
    ModelKind kind = ModelKind::linear;
    ModelDims dims;
    LossConfig loss;
    Optimizer optimizer = Optimizer::adam;
    double learning_rate = 1e-2;
    int batch_size = 32;
    int epochs = 50;
    std::uint64_t seed = 605;
    double grad_norm_tol = 1e-5;
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
};

/// Flat `key = value` config, '#' comments. Keys exactly: kind, d, h, n, C,
/// variant, tau, lambda1, lambda2, optimizer, learning_rate, batch_size,
/// epochs, seed, grad_norm_tol. Unknown or duplicate keys are errors.
TrainConfig parse_train_config(const std::string& text);
std::string train_config_to_text(const TrainConfig& config);

struct TrainReport {
    std::vector<double> epoch_loss;      // mean per-sample training objective
    std::vector<double> epoch_val_fmax;  // validation Fmax after each epoch
    double final_grad_norm = 0.0;        // full-batch norm of the returned model
    int best_epoch = 0;                  // 1-based epoch of the returned checkpoint
};

struct TrainOutcome {
    ModelParameters model;  // best-validation checkpoint
    TrainReport report;
};

/// Deterministic mini-batch training. Same seed and data give identical
/// checkpoints and reports. Returns the epoch checkpoint with the highest
/// validation Fmax (earliest epoch on ties; last epoch when the validation
/// split is empty). Throws NumericError naming epoch and batch on divergence.
TrainOutcome train(const ModelParameters& init, const Dataset& dataset,
                   const ExclusivePairSet& pairs, const TrainConfig& config);

/// Infinity-norm of the full-batch objective gradient over the training
/// split. Zero for an empty split.
double check_stationarity(const ModelParameters& model, const Dataset& dataset,
                          const ExclusivePairSet& pairs, const TrainConfig& config);

struct PairConflict {
    std::string term_a, term_b;
    double conflict_rate = 0.0;  // fraction of samples with both logits > 0
};

struct ExclusivityAudit {
    std::vector<PairConflict> pairs;
    double empirical_risk = 0.0;  // mean per-sample objective on the subset
    double bound = 0.0;           // empirical_risk / (lambda1 * log 2)
    bool holds = true;            // every conflict_rate <= bound
};

/// Theorem-style audit over `gene_subset`: since the per-sample objective
/// dominates lambda1 * log(2) whenever a pair conflicts, each conflict rate
/// is bounded by empirical_risk / (lambda1 * log 2) with no tolerance.
/// Throws UsageError when lambda1 <= 0.
ExclusivityAudit exclusivity_audit(const ModelParameters& model, const Dataset& dataset,
                                   const std::vector<std::string>& gene_subset,
                                   const ExclusivePairSet& pairs, const LossConfig& loss);

/// Plain full-batch gradient descent until the gradient infinity-norm drops
/// to `tol` or `max_iters` is hit; used by the stationarity experiments.
/// Returns the final gradient norm through `final_norm` when non-null.
ModelParameters full_batch_gd(ModelParameters params, const DenseView& view,
                              const std::vector<std::pair<int, int>>& pair_indices,
                              const LossConfig& loss, double learning_rate, int max_iters,
                              double tol, double* final_norm = nullptr);

/// Mean objective over `view`, with the parameter gradient accumulated into
/// `grad` (shape of zeros_like) when non-null.
double batch_objective(const ModelParameters& params, const DenseView& view,
                       const std::vector<std::pair<int, int>>& pair_indices,
                       const LossConfig& loss, ModelParameters* grad);

std::string train_report_to_text(const TrainReport& report);

}  // namespace ontopheno
