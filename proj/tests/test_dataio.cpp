#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <set>

#include "ontopheno/dataio.hpp"
#include "ontopheno/errors.hpp"
#include "ontopheno/model.hpp"
#include "ontopheno/ontology.hpp"

using namespace ontopheno;

namespace {

std::string temp_dir(const char* tag) {
    const auto dir = std::filesystem::temp_directory_path() / (std::string("ontopheno_") + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

}  // namespace

TEST_CASE("feature CSV parsing and round trip") {
    const std::string csv = "gene_id,f0,f1\ng1,0.5,-1.25\ng2,3,4\n";
    const FeatureTable t = parse_features(csv);
    REQUIRE(t.gene_ids == std::vector<std::string>{"g1", "g2"});
    CHECK(t.values(0, 1) == doctest::Approx(-1.25));
    CHECK(parse_features(features_to_csv(t)).values == t.values);

    CHECK_THROWS_AS(parse_features(""), DataError);
    CHECK_THROWS_AS(parse_features("gene_id,f0\ng1,1\ng1,2\n"), DataError);  // duplicate
    CHECK_THROWS_AS(parse_features("gene_id,f0\ng1,1,2\n"), DataError);      // ragged
    CHECK_THROWS_AS(parse_features("gene_id,f0\ng1,abc\n"), DataError);      // non-numeric
    CHECK_THROWS_AS(parse_features("wrong,f0\ng1,1\n"), DataError);
}

TEST_CASE("annotation TSV parsing with and without an ontology") {
    const char* obo = R"(
[Term]
id: A:0
name: root

[Term]
id: A:1
name: child
is_a: A:0 ! root
)";
    const OntologyGraph g = parse_obo(obo);
    const AnnotationMatrix plain = parse_annotations("# comment\ng1\tA:1\n", g, false);
    CHECK(plain.get(0, plain.term_index("A:1")));
    CHECK_FALSE(plain.get(0, plain.term_index("A:0")));
    const AnnotationMatrix prop = parse_annotations("g1\tA:1\n", g, true);
    CHECK(prop.get(0, prop.term_index("A:0")));
    CHECK_THROWS_AS(parse_annotations("g1\tA:9\n", g, false), DataError);
    CHECK_THROWS_AS(parse_annotations("g1 only\n", g, false), DataError);

    const AnnotationMatrix flat = parse_annotations_flat("g2\tt1\ng1\tt0\n", {"t0", "t1"});
    CHECK(flat.gene_ids() == std::vector<std::string>{"g1", "g2"});
    CHECK(flat.get(0, 0));
    CHECK(flat.get(1, 1));

    const std::string tsv = annotations_to_tsv(flat);
    const AnnotationMatrix back = parse_annotations_flat(tsv, {"t0", "t1"});
    CHECK(back == flat);
}

TEST_CASE("stratified split: sizes, disjointness, determinism") {
    std::vector<std::string> genes;
    for (int i = 0; i < 100; ++i) genes.push_back("g" + std::to_string(100 + i));
    AnnotationMatrix pheno(genes, {"common", "rare"});
    for (int i = 0; i < 60; ++i) pheno.set(i, 0);
    for (int i = 0; i < 10; ++i) pheno.set(i, 1);

    const Splits s = stratified_split(genes, pheno, {0.8, 0.1, 0.1}, 605);
    CHECK(s.train.size() == 80);
    CHECK(s.valid.size() == 10);
    CHECK(s.test.size() == 10);
    std::set<std::string> all(s.train.begin(), s.train.end());
    all.insert(s.valid.begin(), s.valid.end());
    all.insert(s.test.begin(), s.test.end());
    CHECK(all.size() == 100);

    const Splits again = stratified_split(genes, pheno, {0.8, 0.1, 0.1}, 605);
    CHECK(again.train == s.train);
    CHECK(again.test == s.test);
    const Splits other = stratified_split(genes, pheno, {0.8, 0.1, 0.1}, 606);
    CHECK(other.train != s.train);

    // The 10 rare-term genes are spread across all three splits.
    auto rare_count = [&](const std::vector<std::string>& part) {
        return std::count_if(part.begin(), part.end(), [&](const std::string& id) {
            return pheno.get(pheno.gene_index(id), 1);
        });
    };
    CHECK(rare_count(s.train) >= 1);
    CHECK(rare_count(s.valid) >= 1);
    CHECK(rare_count(s.test) >= 1);

    CHECK_THROWS_AS(stratified_split(genes, pheno, {0.8, 0.2, 0.0}, 1), UsageError);
    CHECK_THROWS_AS(stratified_split(genes, pheno, {0.5, 0.3, 0.3}, 1), UsageError);
}

TEST_CASE("split file round trip") {
    Splits s;
    s.train = {"a", "b"};
    s.valid = {"c"};
    s.test = {"d"};
    const Splits back = parse_splits(splits_to_text(s));
    CHECK(back.train == s.train);
    CHECK(back.valid == s.valid);
    CHECK(back.test == s.test);
    CHECK_THROWS_AS(parse_splits("[bogus]\n"), DataError);
    CHECK_THROWS_AS(parse_splits("gene-before-section\n"), DataError);
}

TEST_CASE("synthetic generation invariants") {
    SynthSpec spec;
    spec.genes = 200;
    const SynthResult r = synth_generate(spec);
    const Dataset& ds = r.dataset;
    CHECK(ds.gene_ids.size() == 200);
    CHECK(ds.features.rows() == 200);
    CHECK(ds.pheno.n_terms() == 12);
    CHECK(ds.go.n_terms() == 6);
    CHECK(r.pairs.size() == 3);

    // Features stay inside the x_max ball.
    for (int g = 0; g < 200; ++g) CHECK(ds.features.row(g).norm() <= spec.x_max + 1e-12);

    // Planted exclusive pairs are never co-positive, even after noise.
    const auto idx = r.pairs.to_indices(ds.pheno.term_ids());
    REQUIRE(idx.size() == 3);
    for (int g = 0; g < 200; ++g)
        for (const auto& [i, j] : idx)
            CHECK_FALSE(bool(ds.pheno.get(g, std::size_t(i)) && ds.pheno.get(g, std::size_t(j))));

    // Splits partition the genes 80/10/10.
    CHECK(ds.train.size() == 160);
    CHECK(ds.valid.size() == 20);
    CHECK(ds.test.size() == 20);

    // Determinism per seed.
    const SynthResult r2 = synth_generate(spec);
    CHECK(r2.dataset.features == ds.features);
    CHECK(r2.dataset.pheno == ds.pheno);
    CHECK(r2.dataset.train == ds.train);
    SynthSpec other = spec;
    other.seed = 9;
    CHECK(synth_generate(other).dataset.features != ds.features);

    // Planted model labels its own noise-free data exactly.
    SynthSpec clean = spec;
    clean.noise = 0.0;
    const SynthResult rc = synth_generate(clean);
    for (int g = 0; g < clean.genes; ++g) {
        const Eigen::VectorXd s = rc.planted.W * rc.dataset.features.row(g).transpose();
        for (int c = 0; c < clean.phenotypes; ++c)
            CHECK(rc.dataset.pheno.get(g, std::size_t(c)) == (s[c] >= clean.margin));
    }

    SynthSpec bad = spec;
    bad.exclusive_pairs = 7;  // needs 14 phenotypes
    CHECK_THROWS_AS(synth_generate(bad), UsageError);
}

TEST_CASE("bottleneck-path generation wires phenotypes through the GO layer") {
    SynthSpec spec;
    spec.genes = 50;
    spec.bottleneck_path = true;
    spec.noise = 0.0;
    const SynthResult r = synth_generate(spec);
    CHECK(r.planted_bp.rows() == spec.phenotypes);
    CHECK(r.planted_bp.cols() == spec.bottleneck);
    CHECK((r.planted.W - r.planted_bp * r.planted_go).norm() == doctest::Approx(0.0));
    // GO labels threshold the planted GO logits.
    for (int g = 0; g < spec.genes; ++g) {
        const Eigen::VectorXd gs = r.planted_go * r.dataset.features.row(g).transpose();
        for (int k = 0; k < spec.bottleneck; ++k)
            CHECK(r.dataset.go.get(g, std::size_t(k)) == (gs[k] >= spec.margin));
    }
}

TEST_CASE("dataset directory round trip") {
    SynthSpec spec;
    spec.genes = 30;
    const SynthResult r = synth_generate(spec);
    const std::string dir = temp_dir("roundtrip");
    save_dataset(r.dataset, dir);
    const Dataset back = load_dataset(dir);
    CHECK(back.gene_ids == r.dataset.gene_ids);
    CHECK(back.features == r.dataset.features);
    CHECK(back.pheno == r.dataset.pheno);
    CHECK(back.go == r.dataset.go);
    CHECK(back.go_mask == r.dataset.go_mask);
    CHECK(back.train == r.dataset.train);
    CHECK(back.test == r.dataset.test);
    std::filesystem::remove_all(dir);
}

TEST_CASE("dense view gathers rows in subset order") {
    SynthSpec spec;
    spec.genes = 20;
    const SynthResult r = synth_generate(spec);
    const std::vector<std::string> subset{r.dataset.gene_ids[5], r.dataset.gene_ids[2]};
    const DenseView v = dense_view(r.dataset, subset);
    CHECK(v.X.rows() == 2);
    CHECK(v.X.row(0) == r.dataset.features.row(5));
    CHECK(v.X.row(1) == r.dataset.features.row(2));
    for (std::size_t t = 0; t < r.dataset.pheno.n_terms(); ++t)
        CHECK((v.Y(1, Eigen::Index(t)) != 0) == r.dataset.pheno.get(2, t));
    CHECK(v.go_mask[0] == r.dataset.go_mask[5]);
}
