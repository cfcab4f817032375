#include <doctest.h>

#include <cmath>

#include "ontopheno/dataio.hpp"
#include "ontopheno/errors.hpp"
#include "ontopheno/trainer.hpp"

using namespace ontopheno;

namespace {

// Tiny hand-rolled dataset: two separable genes, two phenotype labels.
Dataset tiny_dataset() {
    Dataset ds;
    ds.gene_ids = {"g1", "g2"};
    ds.features.resize(2, 2);
    ds.features << 1.0, 0.0, 0.0, 1.0;
    ds.pheno = AnnotationMatrix(ds.gene_ids, {"p0", "p1"});
    ds.pheno.set(0, 0);
    ds.pheno.set(1, 1);
    ds.go = AnnotationMatrix(ds.gene_ids, {});
    ds.go_mask = {0, 0};
    ds.train = {"g1", "g2"};
    return ds;
}

TrainConfig tiny_config() {
    TrainConfig cfg;
    cfg.kind = ModelKind::linear;
    cfg.dims = {2, 0, 0, 2};
    cfg.loss.lambda1 = 0.0;
    cfg.loss.lambda2 = 0.0;
    cfg.optimizer = Optimizer::sgd;
    cfg.learning_rate = 0.1;
    cfg.batch_size = 2;
    cfg.epochs = 10;
    return cfg;
}

}  // namespace

TEST_CASE("config file parsing") {
    const char* text =
        "# comment\n"
        "kind = bottleneck_mlp\n"
        "d = 20\n"
        "h = 8\n"
        "n = 6\n"
        "C = 12\n"
        "variant = zlpr\n"
        "tau = 0.5\n"
        "lambda1 = 2\n"
        "lambda2 = 0.25\n"
        "optimizer = sgd\n"
        "learning_rate = 0.05\n"
        "batch_size = 16\n"
        "epochs = 3\n"
        "seed = 7\n"
        "grad_norm_tol = 1e-6\n";
    const TrainConfig cfg = parse_train_config(text);
    CHECK(cfg.kind == ModelKind::bottleneck_mlp);
    CHECK(cfg.dims.d == 20);
    CHECK(cfg.dims.n == 6);
    CHECK(cfg.loss.variant == LossVariant::zlpr);
    CHECK(cfg.loss.tau == 0.5);
    CHECK(cfg.loss.lambda1 == 2.0);
    CHECK(cfg.optimizer == Optimizer::sgd);
    CHECK(cfg.batch_size == 16);
    CHECK(cfg.seed == 7);
    CHECK(cfg.grad_norm_tol == 1e-6);

    CHECK(parse_train_config("").optimizer == Optimizer::adam);  // defaults
    CHECK(parse_train_config("").seed == 605);
    CHECK_THROWS_AS(parse_train_config("unknown_key = 1\n"), UsageError);
    CHECK_THROWS_AS(parse_train_config("epochs = 1\nepochs = 2\n"), UsageError);
    CHECK_THROWS_AS(parse_train_config("epochs\n"), UsageError);
    CHECK_THROWS_AS(parse_train_config("tau = 0\n"), UsageError);
    CHECK_THROWS_AS(parse_train_config("batch_size = 0\n"), UsageError);

    const TrainConfig back = parse_train_config(train_config_to_text(cfg));
    CHECK(back.kind == cfg.kind);
    CHECK(back.loss.tau == cfg.loss.tau);
    CHECK(back.learning_rate == cfg.learning_rate);
}

TEST_CASE("sgd on separable data decreases the loss every epoch") {
    const Dataset ds = tiny_dataset();
    const TrainConfig cfg = tiny_config();
    const ModelParameters init = init_model(cfg.kind, cfg.dims, cfg.seed);
    const TrainOutcome out = train(init, ds, {}, cfg);
    REQUIRE(out.report.epoch_loss.size() == 10);
    for (std::size_t e = 1; e < 10; ++e)
        CHECK(out.report.epoch_loss[e] < out.report.epoch_loss[e - 1]);
    CHECK(out.report.best_epoch == 10);  // no validation split: last epoch kept
}

TEST_CASE("lr = 0 leaves parameters untouched") {
    const Dataset ds = tiny_dataset();
    TrainConfig cfg = tiny_config();
    cfg.learning_rate = 0.0;
    const ModelParameters init = init_model(cfg.kind, cfg.dims, cfg.seed);
    const TrainOutcome out = train(init, ds, {}, cfg);
    CHECK(out.model.W == init.W);
    CHECK(out.model.b == init.b);
    for (std::size_t e = 1; e < out.report.epoch_loss.size(); ++e)
        CHECK(out.report.epoch_loss[e] == doctest::Approx(out.report.epoch_loss[0]));
}

TEST_CASE("same seed gives byte-identical checkpoints and reports") {
    SynthSpec spec;
    spec.genes = 60;
    const SynthResult synth = synth_generate(spec);
    TrainConfig cfg;
    cfg.kind = ModelKind::linear;
    cfg.dims = {spec.features, 0, 0, spec.phenotypes};
    cfg.epochs = 5;
    cfg.learning_rate = 0.05;
    const ModelParameters init = init_model(cfg.kind, cfg.dims, cfg.seed);

    const TrainOutcome a = train(init, synth.dataset, synth.pairs, cfg);
    const TrainOutcome b = train(init, synth.dataset, synth.pairs, cfg);
    CHECK(checkpoint_to_text(a.model) == checkpoint_to_text(b.model));
    CHECK(train_report_to_text(a.report) == train_report_to_text(b.report));
    CHECK(a.report.epoch_val_fmax == b.report.epoch_val_fmax);

    TrainConfig shifted = cfg;
    shifted.seed = cfg.seed + 1;
    const TrainOutcome c = train(init, synth.dataset, synth.pairs, shifted);
    CHECK(checkpoint_to_text(c.model) != checkpoint_to_text(a.model));
}

TEST_CASE("divergent learning rate raises a numeric error naming the batch") {
    SynthSpec spec;
    spec.genes = 40;
    const SynthResult synth = synth_generate(spec);
    TrainConfig cfg;
    // The MLP's gradients scale with its weights, so an oversized step
    // compounds into overflow within a few batches.
    cfg.kind = ModelKind::bottleneck_mlp;
    cfg.dims = {spec.features, 8, spec.bottleneck, spec.phenotypes};
    cfg.optimizer = Optimizer::sgd;
    cfg.learning_rate = 1e4;
    cfg.epochs = 50;
    try {
        train(init_model(cfg.kind, cfg.dims, cfg.seed), synth.dataset, synth.pairs, cfg);
        FAIL("expected divergence");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("epoch") != std::string::npos);
        CHECK(std::string(e.what()).find("batch") != std::string::npos);
    }
}

TEST_CASE("stationarity check: empty split is 0, fresh init is not stationary") {
    Dataset empty = tiny_dataset();
    empty.train.clear();
    const TrainConfig cfg = tiny_config();
    const ModelParameters init = init_model(cfg.kind, cfg.dims, 3);
    CHECK(check_stationarity(init, empty, {}, cfg) == 0.0);

    const Dataset ds = tiny_dataset();
    CHECK(check_stationarity(init, ds, {}, cfg) > cfg.grad_norm_tol);
}

TEST_CASE("full-batch descent reaches stationarity on the tiny problem") {
    const Dataset ds = tiny_dataset();
    const TrainConfig cfg = tiny_config();
    const DenseView view = dense_view(ds, ds.train);
    double norm = -1.0;
    const ModelParameters sol = full_batch_gd(init_model(cfg.kind, cfg.dims, cfg.seed), view, {},
                                              cfg.loss, 0.5, 200000, 1e-5, &norm);
    CHECK(norm <= 1e-5);
    CHECK(check_stationarity(sol, ds, {}, cfg) == doctest::Approx(norm));
}

TEST_CASE("exclusivity audit: hand-built conflict case") {
    // 4 genes on the real line; identity-ish model makes s_0 = s_1 = x for a
    // single conflicting input.
    Dataset ds;
    ds.gene_ids = {"g1", "g2", "g3", "g4"};
    ds.features.resize(4, 1);
    ds.features << 1.0, -1.0, -2.0, -3.0;
    ds.pheno = AnnotationMatrix(ds.gene_ids, {"p0", "p1"});
    ds.pheno.set(0, 0);
    ds.go = AnnotationMatrix(ds.gene_ids, {});
    ds.go_mask = {0, 0, 0, 0};
    ds.train = ds.gene_ids;

    ModelParameters model;
    model.kind = ModelKind::linear;
    model.dims = {1, 0, 0, 2};
    model.W.resize(2, 1);
    model.W << 1.0, 1.0;
    model.b = Eigen::VectorXd::Zero(2);

    ExclusivePairSet pairs;
    pairs.insert("p0", "p1", PairProvenance::external);
    LossConfig loss;
    loss.lambda1 = 1.0;

    const ExclusivityAudit audit = exclusivity_audit(model, ds, ds.train, pairs, loss);
    REQUIRE(audit.pairs.size() == 1);
    CHECK(audit.pairs[0].conflict_rate == doctest::Approx(0.25));
    CHECK(audit.empirical_risk >= 0.25 * std::log(2.0));
    CHECK(audit.holds);
    CHECK(audit.bound == doctest::Approx(audit.empirical_risk / std::log(2.0)));

    loss.lambda1 = 0.0;
    CHECK_THROWS_AS(exclusivity_audit(model, ds, ds.train, pairs, loss), UsageError);
}

TEST_CASE("audit is trivially satisfied when all logits are negative") {
    Dataset ds = tiny_dataset();
    ModelParameters model;
    model.kind = ModelKind::linear;
    model.dims = {2, 0, 0, 2};
    model.W = Eigen::MatrixXd::Zero(2, 2);
    model.b = Eigen::VectorXd::Constant(2, -5.0);
    ExclusivePairSet pairs;
    pairs.insert("p0", "p1", PairProvenance::external);
    LossConfig loss;
    const ExclusivityAudit audit = exclusivity_audit(model, ds, ds.train, pairs, loss);
    CHECK(audit.pairs[0].conflict_rate == 0.0);
    CHECK(audit.holds);
}

TEST_CASE("dimension mismatches are rejected up front") {
    const Dataset ds = tiny_dataset();
    TrainConfig cfg = tiny_config();
    cfg.dims.d = 3;
    CHECK_THROWS_AS(train(init_model(cfg.kind, cfg.dims, 1), ds, {}, cfg), DataError);
}
