#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

namespace ontopheno {

enum class LossVariant { contrastive, zlpr };

struct LossConfig {
    double tau = 1.0;
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    LossVariant variant = LossVariant::contrastive;
};

/// Rank-form contrastive multi-label loss:
///   L+ = sum_{i in pos} log(1 + sum_{j in neg} exp((s_j - s_i)/tau))
///   L- = sum_{j in neg} log(1 + sum_{i in pos} exp((s_j - s_i)/tau))
/// Zero when either index set is empty. Throws NumericError on non-finite
/// logits, UsageError on tau <= 0.
double contrastive_mlc(const Eigen::VectorXd& logits, const Eigen::VectorXi& labels, double tau);

/// ZLPR loss: log(1 + sum_pos e^{-s_i}) + log(1 + sum_neg e^{s_j}).
double zlpr(const Eigen::VectorXd& logits, const Eigen::VectorXi& labels);

double mlc_loss(const Eigen::VectorXd& logits, const Eigen::VectorXi& labels,
                const LossConfig& config);

/// Analytic gradient of the selected variant with respect to the logits.
/// For zlpr every component lies strictly in (-1, 1).
Eigen::VectorXd loss_gradient(const Eigen::VectorXd& logits, const Eigen::VectorXi& labels,
                              const LossConfig& config);

/// Per-sample softplus penalty over exclusive index pairs:
///   sum_{(i,j)} log(1 + e^{s_i + s_j})
/// When `grad` is non-null it receives the accumulated sigma(s_i + s_j)
/// contributions (resized and zeroed first).
double exclusivity_penalty(const Eigen::VectorXd& logits,
                           const std::vector<std::pair<int, int>>& pairs,
                           Eigen::VectorXd* grad = nullptr);

/// Bottleneck supervision: the configured MLC variant on (go_logits,
/// go_labels); exactly 0 for samples without GO annotation (has_go = false).
double bottleneck_loss(const Eigen::VectorXd& go_logits, const Eigen::VectorXi& go_labels,
                       bool has_go, const LossConfig& config);

struct BatchObjective {
    double value = 0.0;
    Eigen::MatrixXd d_pheno;  // N x C, gradient wrt phenotype logits
    Eigen::MatrixXd d_go;     // N x n, gradient wrt bottleneck logits (0 x 0 when absent)
};

/// Mean over samples of  L_MLC + lambda1 * L_ex + lambda2 * L_GO, with the
/// matching gradient. Pass 0-column `go_logits`/`go_labels` to drop the
/// bottleneck term (linear models).
BatchObjective total_objective(const Eigen::MatrixXd& pheno_logits, const Eigen::MatrixXi& labels,
                               const std::vector<std::pair<int, int>>& pairs,
                               const Eigen::MatrixXd& go_logits, const Eigen::MatrixXi& go_labels,
                               const std::vector<std::uint8_t>& go_mask,
                               const LossConfig& config);

}  // namespace ontopheno
