#include "ontopheno/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "ontopheno/errors.hpp"
#include "ontopheno/rng.hpp"

namespace ontopheno {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

double parse_double(const std::string& cell, std::size_t line_no) {
    std::size_t consumed = 0;
    double v;
    try {
        v = std::stod(cell, &consumed);
    } catch (const std::exception&) {
        throw DataError("non-numeric cell at line " + std::to_string(line_no) + ": '" + cell +
                        "'");
    }
    if (consumed != cell.size())
        throw DataError("non-numeric cell at line " + std::to_string(line_no) + ": '" + cell +
                        "'");
    return v;
}

}  // namespace

FeatureTable parse_features(const std::string& csv_text) {
    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty feature file");
    const auto header = split(line, ',');
    if (header.empty() || header[0] != "gene_id")
        throw DataError("feature header must start with gene_id");
    const std::size_t d = header.size() - 1;

    FeatureTable table;
    std::vector<std::vector<double>> rows;
    std::set<std::string> seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cols = split(line, ',');
        if (cols.size() != d + 1)
            throw DataError("ragged feature row at line " + std::to_string(line_no) +
                            ": expected " + std::to_string(d + 1) + " columns, got " +
                            std::to_string(cols.size()));
        if (!seen.insert(cols[0]).second)
            throw DataError("duplicate gene id at line " + std::to_string(line_no) + ": " +
                            cols[0]);
        table.gene_ids.push_back(cols[0]);
        std::vector<double> row(d);
        for (std::size_t k = 0; k < d; ++k) row[k] = parse_double(cols[k + 1], line_no);
        rows.push_back(std::move(row));
    }
    table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < d; ++c)
            table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return table;
}

std::string features_to_csv(const FeatureTable& table) {
    std::ostringstream out;
    out << "gene_id";
    for (Eigen::Index c = 0; c < table.values.cols(); ++c) out << ",f" << c;
    out << '\n';
    char buf[64];
    for (std::size_t r = 0; r < table.gene_ids.size(); ++r) {
        out << table.gene_ids[r];
        for (Eigen::Index c = 0; c < table.values.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g",
                          table.values(static_cast<Eigen::Index>(r), c));
            out << ',' << buf;
        }
        out << '\n';
    }
    return out.str();
}

namespace {

struct AnnotationRows {
    std::vector<std::pair<std::string, std::string>> entries;  // gene, term
};

AnnotationRows parse_annotation_rows(const std::string& tsv_text) {
    AnnotationRows rows;
    std::istringstream in(tsv_text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        const auto cols = split(line, '\t');
        if (cols.size() != 2 || cols[0].empty() || cols[1].empty())
            throw DataError("malformed annotation row at line " + std::to_string(line_no) +
                            ": expected gene_id<TAB>term_id");
        rows.entries.emplace_back(cols[0], cols[1]);
    }
    return rows;
}

}  // namespace

AnnotationMatrix parse_annotations(const std::string& tsv_text, const OntologyGraph& graph,
                                   bool propagate_labels) {
    const AnnotationRows rows = parse_annotation_rows(tsv_text);
    std::set<std::string> genes, bad;
    for (const auto& [g, t] : rows.entries) {
        genes.insert(g);
        if (!graph.contains(t) || graph.term(t).obsolete) bad.insert(t);
    }
    if (!bad.empty()) {
        std::string msg = "annotations reference unknown or obsolete terms:";
        for (const auto& t : bad) msg += " " + t;
        throw DataError(msg);
    }
    AnnotationMatrix ann(std::vector<std::string>(genes.begin(), genes.end()), graph.term_ids());
    for (const auto& [g, t] : rows.entries) ann.set(ann.gene_index(g), ann.term_index(t));
    return propagate_labels ? propagate(graph, ann) : ann;
}

AnnotationMatrix parse_annotations_flat(const std::string& tsv_text,
                                        const std::vector<std::string>& term_ids) {
    const AnnotationRows rows = parse_annotation_rows(tsv_text);
    std::set<std::string> genes;
    for (const auto& [g, t] : rows.entries) {
        (void)t;
        genes.insert(g);
    }
    AnnotationMatrix ann(std::vector<std::string>(genes.begin(), genes.end()), term_ids);
    for (const auto& [g, t] : rows.entries) ann.set(ann.gene_index(g), ann.term_index(t));
    return ann;
}

std::string annotations_to_tsv(const AnnotationMatrix& ann) {
    std::ostringstream out;
    for (std::size_t g = 0; g < ann.n_genes(); ++g)
        for (std::size_t t : ann.positives(g))
            out << ann.gene_ids()[g] << '\t' << ann.term_ids()[t] << '\n';
    return out.str();
}

namespace {

Eigen::VectorXd sample_in_ball(Rng& rng, int d, double radius) {
    Eigen::VectorXd x(d);
    for (int k = 0; k < d; ++k) x[k] = rng.gaussian();
    const double norm = x.norm();
    if (norm == 0.0) return Eigen::VectorXd::Zero(d);
    const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
    return x * (r / norm);
}

// Raw gaussian rows keep the planted logits near unit scale (row norm ~
// sqrt(cols) against ball-uniform inputs), so the margin stays meaningful as
// dimensions grow.
Eigen::MatrixXd gaussian_matrix(Rng& rng, int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = rng.gaussian();
    return m;
}

std::string padded_id(const char* prefix, int i, int width) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%0*d", prefix, width, i);
    return buf;
}

}  // namespace

SynthResult synth_generate(const SynthSpec& spec) {
    if (spec.genes <= 0 || spec.features <= 0 || spec.phenotypes <= 0 || spec.bottleneck <= 0)
        throw UsageError("synthetic spec dims must be positive");
    if (spec.exclusive_pairs < 0 || 2 * spec.exclusive_pairs > spec.phenotypes)
        throw UsageError("infeasible exclusive pair count: " +
                         std::to_string(spec.exclusive_pairs) + " pairs need " +
                         std::to_string(2 * spec.exclusive_pairs) + " phenotypes, have " +
                         std::to_string(spec.phenotypes));
    if (spec.noise < 0.0 || spec.noise >= 1.0) throw UsageError("noise rate must be in [0,1)");
    if (spec.x_max <= 0.0 || spec.margin < 0.0) throw UsageError("x_max/margin out of range");
    if (spec.go_mask_fraction < 0.0 || spec.go_mask_fraction > 1.0)
        throw UsageError("go_mask_fraction must be in [0,1]");

    Rng rng(spec.seed);
    const int N = spec.genes, d = spec.features, C = spec.phenotypes, n = spec.bottleneck;

    SynthResult out;
    std::vector<std::string> gene_ids(N), pheno_ids(C), go_ids(n);
    for (int i = 0; i < N; ++i) gene_ids[i] = padded_id("g", i, 5);
    for (int c = 0; c < C; ++c) pheno_ids[c] = padded_id("P", c, 3);
    for (int g = 0; g < n; ++g) go_ids[g] = padded_id("G", g, 3);

    // Planted maps. Exclusive pair (2k, 2k+1) rows are exact opposites, so a
    // positive margin makes co-positivity impossible before noise.
    out.planted_go = gaussian_matrix(rng, n, d);
    Eigen::MatrixXd effective;  // C x d feature->phenotype logit map
    if (spec.bottleneck_path) {
        out.planted_bp = gaussian_matrix(rng, C, n);
        for (int k = 0; k < spec.exclusive_pairs; ++k)
            out.planted_bp.row(2 * k + 1) = -out.planted_bp.row(2 * k);
        // Boost the single strongest GO->phenotype link so it stays the
        // largest entry under the per-unit rescaling a trained model is free
        // to apply; without a clear gap the planted maximum is unrecoverable.
        int bc = 0, bk = 0;
        out.planted_bp.cwiseAbs().maxCoeff(&bc, &bk);
        out.planted_bp(bc, bk) *= 3.5;
        if (bc < 2 * spec.exclusive_pairs)
            out.planted_bp(bc ^ 1, bk) = -out.planted_bp(bc, bk);
        effective = out.planted_bp * out.planted_go;
    } else {
        effective = gaussian_matrix(rng, C, d);
        for (int k = 0; k < spec.exclusive_pairs; ++k)
            effective.row(2 * k + 1) = -effective.row(2 * k);
    }
    out.planted.kind = ModelKind::linear;
    out.planted.dims = {d, 0, 0, C};
    out.planted.W = effective;
    out.planted.b = Eigen::VectorXd::Zero(C);

    std::vector<std::pair<int, int>> planted_pairs;
    for (int k = 0; k < spec.exclusive_pairs; ++k) {
        planted_pairs.emplace_back(2 * k, 2 * k + 1);
        out.pairs.insert(pheno_ids[2 * k], pheno_ids[2 * k + 1], PairProvenance::external);
    }

    Dataset& ds = out.dataset;
    ds.gene_ids = gene_ids;
    ds.features.resize(N, d);
    ds.pheno = AnnotationMatrix(gene_ids, pheno_ids);
    ds.go = AnnotationMatrix(gene_ids, go_ids);
    ds.go_mask.resize(N);

    std::vector<int> partner(C, -1);
    for (const auto& [i, j] : planted_pairs) {
        partner[i] = j;
        partner[j] = i;
    }

    for (int g = 0; g < N; ++g) {
        const Eigen::VectorXd x = sample_in_ball(rng, d, spec.x_max);
        ds.features.row(g) = x;

        std::vector<int> y(C);
        const Eigen::VectorXd s = effective * x;
        for (int c = 0; c < C; ++c) y[c] = s[c] >= spec.margin ? 1 : 0;
        for (int c = 0; c < C; ++c) {
            if (rng.uniform() >= spec.noise) continue;
            const int flipped = 1 - y[c];
            // A flip that would co-activate a planted exclusive pair is dropped.
            if (flipped == 1 && partner[c] >= 0 && y[partner[c]] == 1) continue;
            y[c] = flipped;
        }
        for (int c = 0; c < C; ++c)
            if (y[c]) ds.pheno.set(g, c);

        const Eigen::VectorXd gs = out.planted_go * x;
        for (int k = 0; k < n; ++k) {
            int label = gs[k] >= spec.margin ? 1 : 0;
            if (rng.uniform() < spec.noise) label = 1 - label;
            if (label) ds.go.set(g, k);
        }
        ds.go_mask[g] = rng.uniform() < spec.go_mask_fraction ? 1 : 0;
    }

    const Splits splits = stratified_split(
        gene_ids, ds.pheno, {spec.train_fraction, spec.valid_fraction, spec.test_fraction},
        spec.seed + 1);
    ds.train = splits.train;
    ds.valid = splits.valid;
    ds.test = splits.test;
    return out;
}

Splits stratified_split(const std::vector<std::string>& gene_ids, const AnnotationMatrix& pheno,
                        const SplitFractions& fractions, std::uint64_t seed) {
    if (fractions.train <= 0.0 || fractions.valid <= 0.0 || fractions.test <= 0.0)
        throw UsageError("split fractions must be positive");
    if (std::abs(fractions.train + fractions.valid + fractions.test - 1.0) > 1e-9)
        throw UsageError("split fractions must sum to 1");

    const std::size_t N = gene_ids.size();
    std::array<std::size_t, 3> quota{};
    quota[0] = static_cast<std::size_t>(std::floor(fractions.train * N));
    quota[1] = static_cast<std::size_t>(std::floor(fractions.valid * N));
    quota[2] = static_cast<std::size_t>(std::floor(fractions.test * N));
    for (std::size_t k = 0; quota[0] + quota[1] + quota[2] < N; k = (k + 1) % 3) ++quota[k];

    // Rarity key: minimum frequency among a gene's positive terms. Genes with
    // the rarest terms are placed first so each split sees them.
    std::vector<std::size_t> freq(pheno.n_terms());
    for (std::size_t t = 0; t < pheno.n_terms(); ++t) freq[t] = pheno.term_frequency(t);
    std::vector<std::size_t> order(N);
    for (std::size_t i = 0; i < N; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    std::vector<std::size_t> rarity(N, std::numeric_limits<std::size_t>::max());
    for (std::size_t i = 0; i < N; ++i) {
        const std::size_t g = pheno.has_gene(gene_ids[i]) ? pheno.gene_index(gene_ids[i]) : N;
        if (g >= pheno.n_genes()) continue;
        for (std::size_t t : pheno.positives(g)) rarity[i] = std::min(rarity[i], freq[t]);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return rarity[a] < rarity[b]; });

    Splits out;
    std::array<std::vector<std::string>*, 3> buckets{&out.train, &out.valid, &out.test};
    std::array<std::size_t, 3> assigned{};
    for (std::size_t idx : order) {
        int best = -1;
        double best_deficit = -1.0;
        for (int k = 0; k < 3; ++k) {
            if (assigned[k] >= quota[k]) continue;
            const double deficit =
                static_cast<double>(quota[k] - assigned[k]) / static_cast<double>(quota[k]);
            if (deficit > best_deficit) {
                best_deficit = deficit;
                best = k;
            }
        }
        buckets[best]->push_back(gene_ids[idx]);
        ++assigned[best];
    }
    for (auto* b : buckets) std::sort(b->begin(), b->end());
    return out;
}

std::string splits_to_text(const Splits& splits) {
    std::ostringstream out;
    out << "[train]\n";
    for (const auto& g : splits.train) out << g << '\n';
    out << "[valid]\n";
    for (const auto& g : splits.valid) out << g << '\n';
    out << "[test]\n";
    for (const auto& g : splits.test) out << g << '\n';
    return out.str();
}

Splits parse_splits(const std::string& text) {
    Splits out;
    std::vector<std::string>* current = nullptr;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        if (stripped == "[train]") current = &out.train;
        else if (stripped == "[valid]") current = &out.valid;
        else if (stripped == "[test]") current = &out.test;
        else if (stripped.front() == '[')
            throw DataError("unknown split section at line " + std::to_string(line_no) + ": " +
                            stripped);
        else if (!current)
            throw DataError("gene id before any split section at line " +
                            std::to_string(line_no));
        else current->push_back(stripped);
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open file: " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw UsageError("cannot open file for writing: " + path);
    out << content;
}

namespace {

std::string ids_to_lines(const std::vector<std::string>& ids) {
    std::string out;
    for (const auto& id : ids) {
        out += id;
        out += '\n';
    }
    return out;
}

std::vector<std::string> lines_to_ids(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

AnnotationMatrix fill_annotations(const std::string& tsv_text,
                                  const std::vector<std::string>& gene_ids,
                                  const std::vector<std::string>& term_ids) {
    AnnotationMatrix ann(gene_ids, term_ids);
    for (const auto& [g, t] : parse_annotation_rows(tsv_text).entries)
        ann.set(ann.gene_index(g), ann.term_index(t));
    return ann;
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::string& dir) {
    fs::create_directories(dir);
    FeatureTable table{dataset.gene_ids, dataset.features};
    write_file(dir + "/features.csv", features_to_csv(table));
    write_file(dir + "/pheno_terms.txt", ids_to_lines(dataset.pheno.term_ids()));
    write_file(dir + "/go_terms.txt", ids_to_lines(dataset.go.term_ids()));
    write_file(dir + "/phenotype_labels.tsv", annotations_to_tsv(dataset.pheno));
    write_file(dir + "/go_labels.tsv", annotations_to_tsv(dataset.go));
    std::ostringstream mask;
    for (std::size_t g = 0; g < dataset.gene_ids.size(); ++g)
        mask << dataset.gene_ids[g] << '\t' << int(dataset.go_mask[g]) << '\n';
    write_file(dir + "/go_mask.tsv", mask.str());
    write_file(dir + "/splits.txt",
               splits_to_text({dataset.train, dataset.valid, dataset.test}));
}

Dataset load_dataset(const std::string& dir) {
    Dataset ds;
    const FeatureTable table = parse_features(read_file(dir + "/features.csv"));
    ds.gene_ids = table.gene_ids;
    ds.features = table.values;
    const auto pheno_terms = lines_to_ids(read_file(dir + "/pheno_terms.txt"));
    const auto go_terms = lines_to_ids(read_file(dir + "/go_terms.txt"));
    ds.pheno = fill_annotations(read_file(dir + "/phenotype_labels.tsv"), ds.gene_ids, pheno_terms);
    ds.go = fill_annotations(read_file(dir + "/go_labels.tsv"), ds.gene_ids, go_terms);

    ds.go_mask.assign(ds.gene_ids.size(), 0);
    std::istringstream mask(read_file(dir + "/go_mask.tsv"));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(mask, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cols = split(line, '\t');
        if (cols.size() != 2 || (cols[1] != "0" && cols[1] != "1"))
            throw DataError("malformed go_mask row at line " + std::to_string(line_no));
        ds.go_mask[ds.pheno.gene_index(cols[0])] = cols[1] == "1";
    }

    const Splits splits = parse_splits(read_file(dir + "/splits.txt"));
    ds.train = splits.train;
    ds.valid = splits.valid;
    ds.test = splits.test;
    for (const auto* part : {&ds.train, &ds.valid, &ds.test})
        for (const auto& g : *part)
            if (!ds.pheno.has_gene(g)) throw DataError("split references unknown gene: " + g);
    return ds;
}

DenseView dense_view(const Dataset& dataset, const std::vector<std::string>& gene_subset) {
    DenseView view;
    view.gene_ids = gene_subset;
    const Eigen::Index d = dataset.features.cols();
    const Eigen::Index C = static_cast<Eigen::Index>(dataset.pheno.n_terms());
    const Eigen::Index n = static_cast<Eigen::Index>(dataset.go.n_terms());
    view.X.resize(static_cast<Eigen::Index>(gene_subset.size()), d);
    view.Y = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(gene_subset.size()), C);
    view.G = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(gene_subset.size()), n);
    view.go_mask.resize(gene_subset.size());
    for (std::size_t r = 0; r < gene_subset.size(); ++r) {
        const std::size_t g = dataset.pheno.gene_index(gene_subset[r]);
        view.X.row(static_cast<Eigen::Index>(r)) = dataset.features.row(static_cast<Eigen::Index>(g));
        for (std::size_t t : dataset.pheno.positives(g))
            view.Y(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t)) = 1;
        for (std::size_t t : dataset.go.positives(g))
            view.G(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t)) = 1;
        view.go_mask[r] = dataset.go_mask[g];
    }
    return view;
}

}  // namespace ontopheno
