#include "ontopheno/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <tuple>

#include "ontopheno/errors.hpp"
#include "ontopheno/rng.hpp"

namespace ontopheno {

namespace {

Eigen::MatrixXd uniform_matrix(Rng& rng, int rows, int cols, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
    return m;
}

void for_each_tensor(const ModelParameters& p,
                     const std::function<void(const Eigen::MatrixXd&)>& mat,
                     const std::function<void(const Eigen::VectorXd&)>& vec) {
    if (p.kind == ModelKind::linear) {
        mat(p.W);
        vec(p.b);
    } else {
        mat(p.W1);
        vec(p.b1);
        mat(p.W_go);
        vec(p.b_go);
        mat(p.W_bp);
        vec(p.b_p);
    }
}

}  // namespace

ModelParameters init_model(ModelKind kind, const ModelDims& dims, std::uint64_t seed) {
    if (dims.d <= 0 || dims.C <= 0)
        throw UsageError("model dims d and C must be positive");
    if (kind == ModelKind::bottleneck_mlp && (dims.h <= 0 || dims.n <= 0))
        throw UsageError("bottleneck model dims h and n must be positive");
    Rng rng(seed);
    ModelParameters p;
    p.kind = kind;
    p.dims = dims;
    if (kind == ModelKind::linear) {
        p.W = uniform_matrix(rng, dims.C, dims.d, dims.d);
        p.b = Eigen::VectorXd::Zero(dims.C);
    } else {
        p.W1 = uniform_matrix(rng, dims.h, dims.d, dims.d);
        p.b1 = Eigen::VectorXd::Zero(dims.h);
        p.W_go = uniform_matrix(rng, dims.n, dims.h, dims.h);
        p.b_go = Eigen::VectorXd::Zero(dims.n);
        p.W_bp = uniform_matrix(rng, dims.C, dims.n, dims.n);
        p.b_p = Eigen::VectorXd::Zero(dims.C);
    }
    return p;
}

ModelParameters zeros_like(const ModelParameters& params) {
    ModelParameters z;
    z.kind = params.kind;
    z.dims = params.dims;
    if (params.kind == ModelKind::linear) {
        z.W = Eigen::MatrixXd::Zero(params.W.rows(), params.W.cols());
        z.b = Eigen::VectorXd::Zero(params.b.size());
    } else {
        z.W1 = Eigen::MatrixXd::Zero(params.W1.rows(), params.W1.cols());
        z.b1 = Eigen::VectorXd::Zero(params.b1.size());
        z.W_go = Eigen::MatrixXd::Zero(params.W_go.rows(), params.W_go.cols());
        z.b_go = Eigen::VectorXd::Zero(params.b_go.size());
        z.W_bp = Eigen::MatrixXd::Zero(params.W_bp.rows(), params.W_bp.cols());
        z.b_p = Eigen::VectorXd::Zero(params.b_p.size());
    }
    return z;
}

void axpy(double alpha, const ModelParameters& x, ModelParameters& y) {
    if (x.kind != y.kind) throw DataError("parameter kind mismatch in axpy");
    if (x.kind == ModelKind::linear) {
        y.W += alpha * x.W;
        y.b += alpha * x.b;
    } else {
        y.W1 += alpha * x.W1;
        y.b1 += alpha * x.b1;
        y.W_go += alpha * x.W_go;
        y.b_go += alpha * x.b_go;
        y.W_bp += alpha * x.W_bp;
        y.b_p += alpha * x.b_p;
    }
}

double inf_norm(const ModelParameters& params) {
    double norm = 0.0;
    for_each_tensor(
        params,
        [&](const Eigen::MatrixXd& m) {
            if (m.size() > 0) norm = std::max(norm, m.cwiseAbs().maxCoeff());
        },
        [&](const Eigen::VectorXd& v) {
            if (v.size() > 0) norm = std::max(norm, v.cwiseAbs().maxCoeff());
        });
    return norm;
}

ForwardResult forward(const ModelParameters& params, const Eigen::VectorXd& x) {
    if (x.size() != params.dims.d) throw DataError("feature vector length mismatch");
    ForwardResult out;
    if (params.kind == ModelKind::linear) {
        out.pheno = params.W * x + params.b;
        return out;
    }
    out.hidden_pre = params.W1 * x + params.b1;
    const Eigen::VectorXd a = out.hidden_pre.cwiseMax(0.0);
    out.go = params.W_go * a + params.b_go;
    out.pheno = params.W_bp * out.go + params.b_p;
    return out;
}

void backward(const ModelParameters& params, const Eigen::VectorXd& x, const ForwardResult& fwd,
              const Eigen::VectorXd& ds, const Eigen::VectorXd& dg, ModelParameters& acc) {
    if (ds.size() != params.dims.C) throw DataError("ds length mismatch");
    if (params.kind == ModelKind::linear) {
        acc.W += ds * x.transpose();
        acc.b += ds;
        return;
    }
    if (dg.size() != 0 && dg.size() != params.dims.n) throw DataError("dg length mismatch");
    Eigen::VectorXd dgo = params.W_bp.transpose() * ds;
    if (dg.size() != 0) dgo += dg;

    const Eigen::VectorXd a = fwd.hidden_pre.cwiseMax(0.0);
    acc.W_bp += ds * fwd.go.transpose();
    acc.b_p += ds;
    acc.W_go += dgo * a.transpose();
    acc.b_go += dgo;

    Eigen::VectorXd dpre = params.W_go.transpose() * dgo;
    for (Eigen::Index i = 0; i < dpre.size(); ++i)
        if (fwd.hidden_pre[i] <= 0.0) dpre[i] = 0.0;
    acc.W1 += dpre * x.transpose();
    acc.b1 += dpre;
}

std::vector<InterpretationEntry> extract_interpretation(const ModelParameters& params,
                                                        const std::vector<std::string>& go_ids,
                                                        const std::vector<std::string>& pheno_ids,
                                                        std::size_t top_k) {
    if (params.kind != ModelKind::bottleneck_mlp)
        throw UsageError("interpretation requires a bottleneck model");
    if (go_ids.size() != static_cast<std::size_t>(params.dims.n) ||
        pheno_ids.size() != static_cast<std::size_t>(params.dims.C))
        throw DataError("interpretation id lists do not match model dims");
    std::vector<InterpretationEntry> entries;
    entries.reserve(static_cast<std::size_t>(params.dims.n) * params.dims.C);
    for (int g = 0; g < params.dims.n; ++g)
        for (int c = 0; c < params.dims.C; ++c)
            entries.push_back({go_ids[g], pheno_ids[c], params.W_bp(c, g)});
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        const double ma = std::abs(a.weight), mb = std::abs(b.weight);
        if (ma != mb) return ma > mb;
        return std::tie(a.go_id, a.pheno_id) < std::tie(b.go_id, b.pheno_id);
    });
    if (entries.size() > top_k) entries.resize(top_k);
    return entries;
}

std::vector<double> interpretation_slice(const ModelParameters& params,
                                         const std::vector<std::string>& go_ids,
                                         const std::vector<std::string>& pheno_ids,
                                         const std::vector<std::string>& go_subset,
                                         const std::vector<std::string>& pheno_subset) {
    if (params.kind != ModelKind::bottleneck_mlp)
        throw UsageError("interpretation requires a bottleneck model");
    auto index_of = [](const std::vector<std::string>& ids, const std::string& id) {
        auto it = std::find(ids.begin(), ids.end(), id);
        if (it == ids.end()) throw DataError("unknown term in slice request: " + id);
        return static_cast<int>(it - ids.begin());
    };
    std::vector<double> out;
    out.reserve(go_subset.size() * pheno_subset.size());
    for (const auto& g : go_subset) {
        const int gi = index_of(go_ids, g);
        for (const auto& p : pheno_subset) out.push_back(params.W_bp(index_of(pheno_ids, p), gi));
    }
    return out;
}

namespace {

void write_tensor(std::ostringstream& out, const Eigen::MatrixXd& m) {
    char buf[64];
    bool first = true;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(r, c));
            if (!first) out << ' ';
            out << buf;
            first = false;
        }
    }
    out << '\n';
}

Eigen::MatrixXd read_tensor(std::istream& in, Eigen::Index rows, Eigen::Index cols,
                            const char* what) {
    std::string line;
    if (!std::getline(in, line)) throw DataError(std::string("checkpoint truncated before ") + what);
    std::istringstream vals(line);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            if (!(vals >> m(r, c)))
                throw DataError(std::string("checkpoint tensor too short: ") + what);
        }
    }
    double extra;
    if (vals >> extra) throw DataError(std::string("checkpoint tensor too long: ") + what);
    return m;
}

}  // namespace

std::string checkpoint_to_text(const ModelParameters& p) {
    std::ostringstream out;
    out << "ontopheno-model v1 "
        << (p.kind == ModelKind::linear ? "linear" : "bottleneck_mlp") << " d=" << p.dims.d
        << " h=" << p.dims.h << " n=" << p.dims.n << " C=" << p.dims.C << '\n';
    for_each_tensor(
        p, [&](const Eigen::MatrixXd& m) { write_tensor(out, m); },
        [&](const Eigen::VectorXd& v) { write_tensor(out, v); });
    return out.str();
}

ModelParameters checkpoint_from_text(const std::string& text) {
    std::istringstream in(text);
    std::string magic, version, kind, dtok, htok, ntok, ctok;
    std::string header;
    if (!std::getline(in, header)) throw DataError("empty checkpoint");
    std::istringstream hs(header);
    if (!(hs >> magic >> version >> kind >> dtok >> htok >> ntok >> ctok) ||
        magic != "ontopheno-model" || version != "v1")
        throw DataError("bad checkpoint header");
    auto parse_dim = [](const std::string& tok, const char* key) {
        const std::string prefix = std::string(key) + "=";
        if (tok.rfind(prefix, 0) != 0) throw DataError("bad checkpoint header field: " + tok);
        return std::stoi(tok.substr(prefix.size()));
    };
    ModelParameters p;
    p.dims.d = parse_dim(dtok, "d");
    p.dims.h = parse_dim(htok, "h");
    p.dims.n = parse_dim(ntok, "n");
    p.dims.C = parse_dim(ctok, "C");
    if (kind == "linear") {
        p.kind = ModelKind::linear;
        p.W = read_tensor(in, p.dims.C, p.dims.d, "W");
        p.b = read_tensor(in, p.dims.C, 1, "b");
    } else if (kind == "bottleneck_mlp") {
        p.kind = ModelKind::bottleneck_mlp;
        p.W1 = read_tensor(in, p.dims.h, p.dims.d, "W1");
        p.b1 = read_tensor(in, p.dims.h, 1, "b1");
        p.W_go = read_tensor(in, p.dims.n, p.dims.h, "W_go");
        p.b_go = read_tensor(in, p.dims.n, 1, "b_go");
        p.W_bp = read_tensor(in, p.dims.C, p.dims.n, "W_bp");
        p.b_p = read_tensor(in, p.dims.C, 1, "b_p");
    } else {
        throw DataError("unknown model kind: " + kind);
    }
    return p;
}

void save_checkpoint(const ModelParameters& params, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw UsageError("cannot open checkpoint for writing: " + path);
    out << checkpoint_to_text(params);
}

ModelParameters load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open checkpoint: " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return checkpoint_from_text(text.str());
}

}  // namespace ontopheno
