#include "ontopheno/objective.hpp"

#include <cmath>
#include <limits>

#include "ontopheno/errors.hpp"

namespace ontopheno {

namespace {

void check_finite(const Eigen::VectorXd& logits) {
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
        if (!std::isfinite(logits[i]))
            throw NumericError("non-finite logit at index " + std::to_string(i));
    }
}

void check_labels(const Eigen::VectorXd& logits, const Eigen::VectorXi& labels) {
    if (logits.size() != labels.size())
        throw DataError("logits/labels length mismatch: " + std::to_string(logits.size()) +
                        " vs " + std::to_string(labels.size()));
}

double softplus(double u) {
    return u > 0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

double sigmoid(double u) {
    return u >= 0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
}

// log sum_k exp(v_k) over a masked subset; -inf for an empty subset.
template <typename Pred>
double logsumexp_where(const Eigen::VectorXd& v, Pred keep) {
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < v.size(); ++k)
        if (keep(k) && v[k] > m) m = v[k];
    if (!std::isfinite(m)) return m;
    double acc = 0.0;
    for (Eigen::Index k = 0; k < v.size(); ++k)
        if (keep(k)) acc += std::exp(v[k] - m);
    return m + std::log(acc);
}

}  // namespace

double contrastive_mlc(const Eigen::VectorXd& logits, const Eigen::VectorXi& labels, double tau) {
    if (tau <= 0) throw UsageError("temperature must be positive");
    check_labels(logits, labels);
    check_finite(logits);

    const Eigen::VectorXd s = logits / tau;
    auto pos = [&](Eigen::Index k) { return labels[k] != 0; };
    auto neg = [&](Eigen::Index k) { return labels[k] == 0; };
    const double lse_neg = logsumexp_where(s, neg);        // log sum_neg e^{s_j}
    const double lse_pos = logsumexp_where(-s, pos);       // log sum_pos e^{-s_i}
    if (!std::isfinite(lse_neg) || !std::isfinite(lse_pos)) return 0.0;  // empty side

    double loss = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (pos(i)) loss += softplus(lse_neg - s[i]);
        else loss += softplus(s[i] + lse_pos);
    }
    return loss;
}

double zlpr(const Eigen::VectorXd& logits, const Eigen::VectorXi& labels) {
    check_labels(logits, labels);
    check_finite(logits);
    auto pos = [&](Eigen::Index k) { return labels[k] != 0; };
    auto neg = [&](Eigen::Index k) { return labels[k] == 0; };
    const double lse_pos = logsumexp_where(-logits, pos);
    const double lse_neg = logsumexp_where(logits, neg);
    // log(1 + sum e^x) = softplus(log sum e^x); empty sums contribute 0.
    double loss = 0.0;
    if (std::isfinite(lse_pos)) loss += softplus(lse_pos);
    if (std::isfinite(lse_neg)) loss += softplus(lse_neg);
    return loss;
}

double mlc_loss(const Eigen::VectorXd& logits, const Eigen::VectorXi& labels,
                const LossConfig& config) {
    return config.variant == LossVariant::zlpr ? zlpr(logits, labels)
                                               : contrastive_mlc(logits, labels, config.tau);
}

namespace {

Eigen::VectorXd contrastive_gradient(const Eigen::VectorXd& logits, const Eigen::VectorXi& labels,
                                     double tau) {
    const Eigen::VectorXd s = logits / tau;
    auto pos = [&](Eigen::Index k) { return labels[k] != 0; };
    auto neg = [&](Eigen::Index k) { return labels[k] == 0; };
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(s.size());
    const double lse_neg = logsumexp_where(s, neg);
    const double lse_pos = logsumexp_where(-s, pos);
    if (!std::isfinite(lse_neg) || !std::isfinite(lse_pos)) return grad;

    // sigma terms of each softplus anchor, plus softmax weights inside the
    // pooled denominators.
    double sum_sig_pos = 0.0;  // sum_i sigma(lse_neg - s_i)
    double sum_sig_neg = 0.0;  // sum_j sigma(s_j + lse_pos)
    for (Eigen::Index k = 0; k < s.size(); ++k) {
        if (pos(k)) sum_sig_pos += sigmoid(lse_neg - s[k]);
        else sum_sig_neg += sigmoid(s[k] + lse_pos);
    }
    for (Eigen::Index k = 0; k < s.size(); ++k) {
        if (pos(k)) {
            const double w = std::exp(-s[k] - lse_pos);  // softmax over positives
            grad[k] = (-sigmoid(lse_neg - s[k]) - w * sum_sig_neg) / tau;
        } else {
            const double p = std::exp(s[k] - lse_neg);  // softmax over negatives
            grad[k] = (sigmoid(s[k] + lse_pos) + p * sum_sig_pos) / tau;
        }
    }
    return grad;
}

Eigen::VectorXd zlpr_gradient(const Eigen::VectorXd& logits, const Eigen::VectorXi& labels) {
    auto pos = [&](Eigen::Index k) { return labels[k] != 0; };
    auto neg = [&](Eigen::Index k) { return labels[k] == 0; };
    const double lse_pos = logsumexp_where(-logits, pos);
    const double lse_neg = logsumexp_where(logits, neg);
    // 1 + sum e^x in log space: softplus(lse) = log(1 + e^{lse}).
    const double log_den_pos = std::isfinite(lse_pos) ? softplus(lse_pos) : 0.0;
    const double log_den_neg = std::isfinite(lse_neg) ? softplus(lse_neg) : 0.0;
    Eigen::VectorXd grad(logits.size());
    for (Eigen::Index t = 0; t < logits.size(); ++t) {
        if (pos(t)) grad[t] = -std::exp(-logits[t] - log_den_pos);
        else grad[t] = std::exp(logits[t] - log_den_neg);
    }
    return grad;
}

}  // namespace

Eigen::VectorXd loss_gradient(const Eigen::VectorXd& logits, const Eigen::VectorXi& labels,
                              const LossConfig& config) {
    check_labels(logits, labels);
    check_finite(logits);
    if (config.variant == LossVariant::zlpr) return zlpr_gradient(logits, labels);
    if (config.tau <= 0) throw UsageError("temperature must be positive");
    return contrastive_gradient(logits, labels, config.tau);
}

double exclusivity_penalty(const Eigen::VectorXd& logits,
                           const std::vector<std::pair<int, int>>& pairs,
                           Eigen::VectorXd* grad) {
    check_finite(logits);
    if (grad) *grad = Eigen::VectorXd::Zero(logits.size());
    double penalty = 0.0;
    for (const auto& [i, j] : pairs) {
        if (i < 0 || j < 0 || i >= logits.size() || j >= logits.size())
            throw DataError("exclusive pair index out of range");
        if (i == j) throw DataError("exclusive pair must be irreflexive");
        const double u = logits[i] + logits[j];
        penalty += softplus(u);
        if (grad) {
            const double sig = sigmoid(u);
            (*grad)[i] += sig;
            (*grad)[j] += sig;
        }
    }
    return penalty;
}

double bottleneck_loss(const Eigen::VectorXd& go_logits, const Eigen::VectorXi& go_labels,
                       bool has_go, const LossConfig& config) {
    if (!has_go) return 0.0;
    return mlc_loss(go_logits, go_labels, config);
}

BatchObjective total_objective(const Eigen::MatrixXd& pheno_logits, const Eigen::MatrixXi& labels,
                               const std::vector<std::pair<int, int>>& pairs,
                               const Eigen::MatrixXd& go_logits, const Eigen::MatrixXi& go_labels,
                               const std::vector<std::uint8_t>& go_mask,
                               const LossConfig& config) {
    const Eigen::Index N = pheno_logits.rows();
    if (labels.rows() != N || labels.cols() != pheno_logits.cols())
        throw DataError("phenotype logits/labels shape mismatch");
    const bool with_go = go_logits.cols() > 0;
    if (with_go) {
        if (go_logits.rows() != N || go_labels.rows() != N ||
            go_labels.cols() != go_logits.cols())
            throw DataError("bottleneck logits/labels shape mismatch");
        if (go_mask.size() != static_cast<std::size_t>(N))
            throw DataError("go_mask length mismatch");
    }
    if (N == 0) throw DataError("empty batch");

    BatchObjective out;
    out.d_pheno = Eigen::MatrixXd::Zero(N, pheno_logits.cols());
    out.d_go = Eigen::MatrixXd::Zero(with_go ? N : 0, with_go ? go_logits.cols() : 0);

    double total = 0.0;
    for (Eigen::Index r = 0; r < N; ++r) {
        const Eigen::VectorXd s = pheno_logits.row(r);
        const Eigen::VectorXi y = labels.row(r);
        total += mlc_loss(s, y, config);
        Eigen::VectorXd ds = loss_gradient(s, y, config);
        if (config.lambda1 != 0.0 && !pairs.empty()) {
            Eigen::VectorXd dex;
            total += config.lambda1 * exclusivity_penalty(s, pairs, &dex);
            ds += config.lambda1 * dex;
        }
        out.d_pheno.row(r) = ds / static_cast<double>(N);
        if (with_go && config.lambda2 != 0.0 && go_mask[r]) {
            const Eigen::VectorXd g = go_logits.row(r);
            const Eigen::VectorXi gy = go_labels.row(r);
            total += config.lambda2 * mlc_loss(g, gy, config);
            out.d_go.row(r) =
                config.lambda2 * loss_gradient(g, gy, config) / static_cast<double>(N);
        }
    }
    out.value = total / static_cast<double>(N);
    return out;
}

}  // namespace ontopheno
