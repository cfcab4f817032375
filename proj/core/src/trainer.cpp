#include "ontopheno/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "ontopheno/errors.hpp"
#include "ontopheno/evaluation.hpp"
#include "ontopheno/rng.hpp"

namespace ontopheno {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

/// Flat views over the parameter tensors of one model kind, so optimizer
/// updates need no per-tensor code.
struct TensorViews {
    std::vector<double*> data;
    std::vector<std::size_t> size;
};

TensorViews views(ModelParameters& p) {
    TensorViews v;
    auto add_m = [&](Eigen::MatrixXd& m) {
        v.data.push_back(m.data());
        v.size.push_back(static_cast<std::size_t>(m.size()));
    };
    auto add_v = [&](Eigen::VectorXd& x) {
        v.data.push_back(x.data());
        v.size.push_back(static_cast<std::size_t>(x.size()));
    };
    if (p.kind == ModelKind::linear) {
        add_m(p.W);
        add_v(p.b);
    } else {
        add_m(p.W1);
        add_v(p.b1);
        add_m(p.W_go);
        add_v(p.b_go);
        add_m(p.W_bp);
        add_v(p.b_p);
    }
    return v;
}

double parse_number(const std::string& value, const std::string& key) {
    std::size_t consumed = 0;
    double v;
    try {
        v = std::stod(value, &consumed);
    } catch (const std::exception&) {
        throw UsageError("config key " + key + ": not a number: '" + value + "'");
    }
    if (consumed != value.size())
        throw UsageError("config key " + key + ": not a number: '" + value + "'");
    return v;
}

int parse_int(const std::string& value, const std::string& key) {
    const double v = parse_number(value, key);
    if (v != std::floor(v)) throw UsageError("config key " + key + ": expected an integer");
    return static_cast<int>(v);
}

void validate_dims(const ModelParameters& model, const Dataset& dataset) {
    if (model.dims.d != dataset.features.cols())
        throw DataError("model d=" + std::to_string(model.dims.d) + " but dataset has " +
                        std::to_string(dataset.features.cols()) + " features");
    if (model.dims.C != static_cast<int>(dataset.pheno.n_terms()))
        throw DataError("model C=" + std::to_string(model.dims.C) + " but dataset has " +
                        std::to_string(dataset.pheno.n_terms()) + " phenotype terms");
    if (model.kind == ModelKind::bottleneck_mlp &&
        model.dims.n != static_cast<int>(dataset.go.n_terms()))
        throw DataError("model n=" + std::to_string(model.dims.n) + " but dataset has " +
                        std::to_string(dataset.go.n_terms()) + " bottleneck terms");
}

AnnotationMatrix truth_subset(const AnnotationMatrix& full,
                              const std::vector<std::string>& genes) {
    AnnotationMatrix sub(genes, full.term_ids());
    for (std::size_t r = 0; r < genes.size(); ++r)
        for (std::size_t t : full.positives(full.gene_index(genes[r]))) sub.set(r, t);
    return sub;
}

double validation_fmax(const ModelParameters& model, const Dataset& dataset,
                       const DenseView& valid) {
    PredictionMatrix pred;
    pred.gene_ids = valid.gene_ids;
    pred.term_ids = dataset.pheno.term_ids();
    pred.scores.resize(valid.X.rows(), static_cast<Eigen::Index>(pred.term_ids.size()));
    for (Eigen::Index r = 0; r < valid.X.rows(); ++r) {
        const ForwardResult f = forward(model, valid.X.row(r));
        pred.scores.row(r) = (1.0 / (1.0 + (-f.pheno.array()).exp())).matrix();
    }
    return fmax(pred, truth_subset(dataset.pheno, valid.gene_ids)).fmax;
}

}  // namespace

TrainConfig parse_train_config(const std::string& text) {
    TrainConfig cfg;
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
        if (!kv.emplace(key, value).second)
            throw UsageError("config line " + std::to_string(line_no) + ": duplicate key " + key);
    }

    for (const auto& [key, value] : kv) {
        if (key == "kind") {
            if (value == "linear") cfg.kind = ModelKind::linear;
            else if (value == "bottleneck_mlp") cfg.kind = ModelKind::bottleneck_mlp;
            else throw UsageError("config key kind: unknown model kind '" + value + "'");
        } else if (key == "d") cfg.dims.d = parse_int(value, key);
        else if (key == "h") cfg.dims.h = parse_int(value, key);
        else if (key == "n") cfg.dims.n = parse_int(value, key);
        else if (key == "C") cfg.dims.C = parse_int(value, key);
        else if (key == "variant") {
            if (value == "contrastive") cfg.loss.variant = LossVariant::contrastive;
            else if (value == "zlpr") cfg.loss.variant = LossVariant::zlpr;
            else throw UsageError("config key variant: unknown loss variant '" + value + "'");
        } else if (key == "tau") cfg.loss.tau = parse_number(value, key);
        else if (key == "lambda1") cfg.loss.lambda1 = parse_number(value, key);
        else if (key == "lambda2") cfg.loss.lambda2 = parse_number(value, key);
        else if (key == "optimizer") {
            if (value == "sgd") cfg.optimizer = Optimizer::sgd;
            else if (value == "adam") cfg.optimizer = Optimizer::adam;
            else throw UsageError("config key optimizer: unknown optimizer '" + value + "'");
        } else if (key == "learning_rate") cfg.learning_rate = parse_number(value, key);
        else if (key == "batch_size") cfg.batch_size = parse_int(value, key);
        else if (key == "epochs") cfg.epochs = parse_int(value, key);
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(value, key));
        else if (key == "grad_norm_tol") cfg.grad_norm_tol = parse_number(value, key);
        else throw UsageError("unknown config key: " + key);
    }

    if (cfg.learning_rate < 0.0) throw UsageError("learning_rate must be non-negative");
    if (cfg.batch_size <= 0) throw UsageError("batch_size must be positive");
    if (cfg.epochs <= 0) throw UsageError("epochs must be positive");
    if (cfg.grad_norm_tol <= 0.0) throw UsageError("grad_norm_tol must be positive");
    if (cfg.loss.tau <= 0.0) throw UsageError("tau must be positive");
    if (cfg.loss.lambda1 < 0.0 || cfg.loss.lambda2 < 0.0)
        throw UsageError("lambda1/lambda2 must be non-negative");
    return cfg;
}

std::string train_config_to_text(const TrainConfig& config) {
    std::ostringstream out;
    out << "kind = "
        << (config.kind == ModelKind::linear ? "linear" : "bottleneck_mlp") << '\n';
    out << "d = " << config.dims.d << '\n';
    out << "h = " << config.dims.h << '\n';
    out << "n = " << config.dims.n << '\n';
    out << "C = " << config.dims.C << '\n';
    out << "variant = "
        << (config.loss.variant == LossVariant::contrastive ? "contrastive" : "zlpr") << '\n';
    out << "tau = " << config.loss.tau << '\n';
    out << "lambda1 = " << config.loss.lambda1 << '\n';
    out << "lambda2 = " << config.loss.lambda2 << '\n';
    out << "optimizer = " << (config.optimizer == Optimizer::sgd ? "sgd" : "adam") << '\n';
    out << "learning_rate = " << config.learning_rate << '\n';
    out << "batch_size = " << config.batch_size << '\n';
    out << "epochs = " << config.epochs << '\n';
    out << "seed = " << config.seed << '\n';
    out << "grad_norm_tol = " << config.grad_norm_tol << '\n';
    return out.str();
}

double batch_objective(const ModelParameters& params, const DenseView& view,
                       const std::vector<std::pair<int, int>>& pair_indices,
                       const LossConfig& loss, ModelParameters* grad) {
    const Eigen::Index N = view.X.rows();
    if (N == 0) return 0.0;
    const bool bottleneck = params.kind == ModelKind::bottleneck_mlp;
    const Eigen::Index n = bottleneck ? params.dims.n : 0;

    std::vector<ForwardResult> fwd(static_cast<std::size_t>(N));
    Eigen::MatrixXd pheno(N, params.dims.C);
    Eigen::MatrixXd go(N, n);
    for (Eigen::Index r = 0; r < N; ++r) {
        fwd[static_cast<std::size_t>(r)] = forward(params, view.X.row(r));
        pheno.row(r) = fwd[static_cast<std::size_t>(r)].pheno;
        if (bottleneck) go.row(r) = fwd[static_cast<std::size_t>(r)].go;
    }
    const Eigen::MatrixXi go_labels =
        bottleneck ? Eigen::MatrixXi(view.G) : Eigen::MatrixXi(N, 0);
    const BatchObjective batch =
        total_objective(pheno, view.Y, pair_indices, go, go_labels, view.go_mask, loss);

    if (grad) {
        const Eigen::VectorXd empty;
        for (Eigen::Index r = 0; r < N; ++r) {
            const Eigen::VectorXd ds = batch.d_pheno.row(r);
            if (bottleneck && batch.d_go.size() > 0)
                backward(params, view.X.row(r), fwd[static_cast<std::size_t>(r)], ds,
                         batch.d_go.row(r), *grad);
            else
                backward(params, view.X.row(r), fwd[static_cast<std::size_t>(r)], ds, empty,
                         *grad);
        }
    }
    return batch.value;
}

TrainOutcome train(const ModelParameters& init, const Dataset& dataset,
                   const ExclusivePairSet& pairs, const TrainConfig& config) {
    validate_dims(init, dataset);
    const auto pair_indices = pairs.to_indices(dataset.pheno.term_ids());
    const DenseView train_view = dense_view(dataset, dataset.train);
    const DenseView valid_view = dense_view(dataset, dataset.valid);
    const std::size_t n_train = dataset.train.size();
    if (n_train == 0) throw DataError("empty training split");

    ModelParameters params = init;
    ModelParameters m = zeros_like(params), v = zeros_like(params);
    std::size_t adam_step = 0;

    TrainOutcome out;
    out.report.best_epoch = 0;
    double best_fmax = -1.0;
    Rng rng(config.seed);
    std::vector<std::size_t> order(n_train);
    for (std::size_t i = 0; i < n_train; ++i) order[i] = i;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t start = 0, batch_no = 1; start < n_train;
             start += static_cast<std::size_t>(config.batch_size), ++batch_no) {
            const std::size_t stop =
                std::min(n_train, start + static_cast<std::size_t>(config.batch_size));
            DenseView batch;
            batch.X.resize(static_cast<Eigen::Index>(stop - start), train_view.X.cols());
            batch.Y.resize(static_cast<Eigen::Index>(stop - start), train_view.Y.cols());
            batch.G.resize(static_cast<Eigen::Index>(stop - start), train_view.G.cols());
            batch.go_mask.resize(stop - start);
            for (std::size_t k = start; k < stop; ++k) {
                const Eigen::Index dst = static_cast<Eigen::Index>(k - start);
                const Eigen::Index src = static_cast<Eigen::Index>(order[k]);
                batch.X.row(dst) = train_view.X.row(src);
                batch.Y.row(dst) = train_view.Y.row(src);
                batch.G.row(dst) = train_view.G.row(src);
                batch.go_mask[k - start] = train_view.go_mask[order[k]];
            }

            ModelParameters grad = zeros_like(params);
            double value;
            try {
                value = batch_objective(params, batch, pair_indices, config.loss, &grad);
            } catch (const NumericError& e) {
                throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(batch_no) + ": " + e.what());
            }
            if (!std::isfinite(value))
                throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(batch_no));
            loss_sum += value * static_cast<double>(stop - start);

            if (config.optimizer == Optimizer::sgd) {
                axpy(-config.learning_rate, grad, params);
            } else {
                ++adam_step;
                const double bc1 = 1.0 - std::pow(config.beta1, double(adam_step));
                const double bc2 = 1.0 - std::pow(config.beta2, double(adam_step));
                TensorViews pv = views(params), gv = views(grad), mv = views(m), vv = views(v);
                for (std::size_t t = 0; t < pv.data.size(); ++t) {
                    for (std::size_t i = 0; i < pv.size[t]; ++i) {
                        const double g = gv.data[t][i];
                        mv.data[t][i] = config.beta1 * mv.data[t][i] + (1.0 - config.beta1) * g;
                        vv.data[t][i] =
                            config.beta2 * vv.data[t][i] + (1.0 - config.beta2) * g * g;
                        pv.data[t][i] -= config.learning_rate * (mv.data[t][i] / bc1) /
                                         (std::sqrt(vv.data[t][i] / bc2) + config.adam_eps);
                    }
                }
            }
        }

        out.report.epoch_loss.push_back(loss_sum / static_cast<double>(n_train));
        const double vf =
            valid_view.gene_ids.empty() ? 0.0 : validation_fmax(params, dataset, valid_view);
        out.report.epoch_val_fmax.push_back(vf);
        const bool take = valid_view.gene_ids.empty()
                              ? epoch == config.epochs  // no validation: keep the last epoch
                              : vf > best_fmax;
        if (take) {
            best_fmax = vf;
            out.model = params;
            out.report.best_epoch = epoch;
        }
    }

    ModelParameters grad = zeros_like(out.model);
    batch_objective(out.model, train_view, pair_indices, config.loss, &grad);
    out.report.final_grad_norm = inf_norm(grad);
    return out;
}

double check_stationarity(const ModelParameters& model, const Dataset& dataset,
                          const ExclusivePairSet& pairs, const TrainConfig& config) {
    if (dataset.train.empty()) return 0.0;
    validate_dims(model, dataset);
    const DenseView view = dense_view(dataset, dataset.train);
    ModelParameters grad = zeros_like(model);
    batch_objective(model, view, pairs.to_indices(dataset.pheno.term_ids()), config.loss, &grad);
    return inf_norm(grad);
}

ExclusivityAudit exclusivity_audit(const ModelParameters& model, const Dataset& dataset,
                                   const std::vector<std::string>& gene_subset,
                                   const ExclusivePairSet& pairs, const LossConfig& loss) {
    if (loss.lambda1 <= 0.0)
        throw UsageError("exclusivity audit needs lambda1 > 0: the bound is undefined otherwise");
    validate_dims(model, dataset);
    const DenseView view = dense_view(dataset, gene_subset);
    const auto pair_indices = pairs.to_indices(dataset.pheno.term_ids());

    ExclusivityAudit audit;
    audit.empirical_risk = batch_objective(model, view, pair_indices, loss, nullptr);
    audit.bound = audit.empirical_risk / (loss.lambda1 * std::log(2.0));

    const Eigen::Index N = view.X.rows();
    Eigen::MatrixXd logits(N, model.dims.C);
    for (Eigen::Index r = 0; r < N; ++r) logits.row(r) = forward(model, view.X.row(r)).pheno;

    const auto& term_ids = dataset.pheno.term_ids();
    for (const auto& [i, j] : pair_indices) {
        PairConflict pc;
        pc.term_a = term_ids[static_cast<std::size_t>(i)];
        pc.term_b = term_ids[static_cast<std::size_t>(j)];
        if (N > 0) {
            Eigen::Index conflicts = 0;
            for (Eigen::Index r = 0; r < N; ++r)
                if (logits(r, i) > 0.0 && logits(r, j) > 0.0) ++conflicts;
            pc.conflict_rate = static_cast<double>(conflicts) / static_cast<double>(N);
        }
        if (pc.conflict_rate > audit.bound) audit.holds = false;
        audit.pairs.push_back(pc);
    }
    return audit;
}

ModelParameters full_batch_gd(ModelParameters params, const DenseView& view,
                              const std::vector<std::pair<int, int>>& pair_indices,
                              const LossConfig& loss, double learning_rate, int max_iters,
                              double tol, double* final_norm) {
    double norm = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        ModelParameters grad = zeros_like(params);
        const double value = batch_objective(params, view, pair_indices, loss, &grad);
        if (!std::isfinite(value))
            throw NumericError("full-batch descent diverged at iteration " + std::to_string(it));
        norm = inf_norm(grad);
        if (norm <= tol) break;
        axpy(-learning_rate, grad, params);
    }
    if (final_norm) *final_norm = norm;
    return params;
}

std::string train_report_to_text(const TrainReport& report) {
    std::ostringstream out;
    char buf[64];
    out << "epoch\ttrain_loss\tval_fmax\n";
    for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) {
        out << (e + 1);
        std::snprintf(buf, sizeof(buf), "%.17g", report.epoch_loss[e]);
        out << '\t' << buf;
        std::snprintf(buf, sizeof(buf), "%.17g", report.epoch_val_fmax[e]);
        out << '\t' << buf << '\n';
    }
    out << "# best_epoch = " << report.best_epoch << '\n';
    std::snprintf(buf, sizeof(buf), "%.17g", report.final_grad_norm);
    out << "# final_grad_norm = " << buf << '\n';
    return out.str();
}

}  // namespace ontopheno
