#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace ontopheno {

enum class ModelKind { linear, bottleneck_mlp };

struct ModelDims {
    int d = 0;  // feature width
    int h = 0;  // hidden width (bottleneck_mlp only)
    int n = 0;  // bottleneck width (bottleneck_mlp only)
    int C = 0;  // phenotype count
};

/// Weights of the linear or bottleneck-MLP predictor. The same struct doubles
/// as a gradient accumulator (see zeros_like). For bottleneck_mlp, W_bp maps
/// bottleneck *logits* to phenotype logits, so its entries are directly the
/// interpretation weights.
struct ModelParameters {
    ModelKind kind = ModelKind::linear;
    ModelDims dims;

    // linear
    Eigen::MatrixXd W;   // C x d
    Eigen::VectorXd b;   // C

    // bottleneck_mlp
    Eigen::MatrixXd W1;    // h x d
    Eigen::VectorXd b1;    // h
    Eigen::MatrixXd W_go;  // n x h
    Eigen::VectorXd b_go;  // n
    Eigen::MatrixXd W_bp;  // C x n
    Eigen::VectorXd b_p;   // C
};

/// Seeded deterministic init: weights uniform in [-1/sqrt(fan_in),
/// +1/sqrt(fan_in)], biases zero. Throws UsageError on non-positive dims.
ModelParameters init_model(ModelKind kind, const ModelDims& dims, std::uint64_t seed);

ModelParameters zeros_like(const ModelParameters& params);
void axpy(double alpha, const ModelParameters& x, ModelParameters& y);  // y += alpha * x
double inf_norm(const ModelParameters& params);

struct ForwardResult {
    Eigen::VectorXd pheno;       // s, length C
    Eigen::VectorXd go;          // g_hat, length n (empty for linear)
    Eigen::VectorXd hidden_pre;  // W1 x + b1 before relu (empty for linear)
};

ForwardResult forward(const ModelParameters& params, const Eigen::VectorXd& x);

/// Exact chain-rule gradients, accumulated into `acc` (shape of zeros_like).
/// `ds` is dL/ds; `dg` is the extra dL/d g_hat from the bottleneck loss and
/// may be empty. The relu subgradient at 0 is 0.
void backward(const ModelParameters& params, const Eigen::VectorXd& x, const ForwardResult& fwd,
              const Eigen::VectorXd& ds, const Eigen::VectorXd& dg, ModelParameters& acc);

struct InterpretationEntry {
    std::string go_id;
    std::string pheno_id;
    double weight = 0.0;
};

/// Top-k W_bp entries by |weight|, descending; ties break by (go, pheno) id.
/// Throws UsageError for linear models.
std::vector<InterpretationEntry> extract_interpretation(const ModelParameters& params,
                                                        const std::vector<std::string>& go_ids,
                                                        const std::vector<std::string>& pheno_ids,
                                                        std::size_t top_k);

/// Row-major W_bp slice for the requested id subsets (rows = go terms,
/// columns = phenotypes).
std::vector<double> interpretation_slice(const ModelParameters& params,
                                         const std::vector<std::string>& go_ids,
                                         const std::vector<std::string>& pheno_ids,
                                         const std::vector<std::string>& go_subset,
                                         const std::vector<std::string>& pheno_subset);

/// Text checkpoint: header "ontopheno-model v1 <kind> d=<d> h=<h> n=<n> C=<C>"
/// then one row-major tensor per line at 17 significant digits. Round-trips
/// bit-exactly.
std::string checkpoint_to_text(const ModelParameters& params);
ModelParameters checkpoint_from_text(const std::string& text);
void save_checkpoint(const ModelParameters& params, const std::string& path);
ModelParameters load_checkpoint(const std::string& path);

}  // namespace ontopheno
