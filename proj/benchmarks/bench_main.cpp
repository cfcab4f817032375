// Microbenchmarks for the hot paths: loss kernels, batch gradients, Fmax.

#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <vector>

#include "ontopheno/dataio.hpp"
#include "ontopheno/evaluation.hpp"
#include "ontopheno/model.hpp"
#include "ontopheno/objective.hpp"
#include "ontopheno/rng.hpp"
#include "ontopheno/trainer.hpp"

using namespace ontopheno;

namespace {

void random_instance(Rng& rng, int C, Eigen::VectorXd& s, Eigen::VectorXi& y) {
    s.resize(C);
    y.resize(C);
    for (int c = 0; c < C; ++c) {
        s[c] = rng.gaussian();
        y[c] = rng.uniform() < 0.3 ? 1 : 0;
    }
}

void bench_contrastive(benchmark::State& state) {
    Rng rng(1);
    const int C = static_cast<int>(state.range(0));
    Eigen::VectorXd s;
    Eigen::VectorXi y;
    random_instance(rng, C, s, y);
    for (auto _ : state) benchmark::DoNotOptimize(contrastive_mlc(s, y, 1.0));
}
BENCHMARK(bench_contrastive)->Arg(16)->Arg(128)->Arg(1024);

void bench_zlpr(benchmark::State& state) {
    Rng rng(2);
    const int C = static_cast<int>(state.range(0));
    Eigen::VectorXd s;
    Eigen::VectorXi y;
    random_instance(rng, C, s, y);
    for (auto _ : state) benchmark::DoNotOptimize(zlpr(s, y));
}
BENCHMARK(bench_zlpr)->Arg(16)->Arg(128)->Arg(1024);

void bench_loss_gradient(benchmark::State& state) {
    Rng rng(3);
    const int C = static_cast<int>(state.range(0));
    Eigen::VectorXd s;
    Eigen::VectorXi y;
    random_instance(rng, C, s, y);
    LossConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(loss_gradient(s, y, cfg));
}
BENCHMARK(bench_loss_gradient)->Arg(16)->Arg(128)->Arg(1024);

void bench_batch_gradient(benchmark::State& state) {
    SynthSpec spec;
    spec.genes = static_cast<int>(state.range(0));
    const SynthResult synth = synth_generate(spec);
    const DenseView view = dense_view(synth.dataset, synth.dataset.train);
    const auto pair_idx = synth.pairs.to_indices(synth.dataset.pheno.term_ids());
    ModelParameters params = init_model(
        ModelKind::linear, ModelDims{spec.features, 0, 0, spec.phenotypes}, 7);
    LossConfig cfg;
    for (auto _ : state) {
        ModelParameters grad = zeros_like(params);
        benchmark::DoNotOptimize(batch_objective(params, view, pair_idx, cfg, &grad));
    }
}
BENCHMARK(bench_batch_gradient)->Arg(100)->Arg(400);

void bench_fmax(benchmark::State& state) {
    Rng rng(4);
    const int N = static_cast<int>(state.range(0)), C = 64;
    PredictionMatrix pred;
    std::vector<std::string> genes, terms;
    for (int g = 0; g < N; ++g) genes.push_back("g" + std::to_string(g));
    for (int t = 0; t < C; ++t) terms.push_back("t" + std::to_string(t));
    pred.gene_ids = genes;
    pred.term_ids = terms;
    pred.scores.resize(N, C);
    AnnotationMatrix truth(genes, terms);
    for (int g = 0; g < N; ++g)
        for (int t = 0; t < C; ++t) {
            pred.scores(g, t) = rng.uniform();
            if (rng.uniform() < 0.2) truth.set(g, t);
        }
    for (auto _ : state) benchmark::DoNotOptimize(fmax(pred, truth));
}
BENCHMARK(bench_fmax)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
