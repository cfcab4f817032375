// Command-line front end: mine / prepare / train / eval / interpret / synth.
// Exit codes: 0 ok, 1 usage, 2 bad data, 3 numerical failure.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ontopheno/annotation.hpp"
#include "ontopheno/dataio.hpp"
#include "ontopheno/errors.hpp"
#include "ontopheno/evaluation.hpp"
#include "ontopheno/exclusivity.hpp"
#include "ontopheno/model.hpp"
#include "ontopheno/objective.hpp"
#include "ontopheno/ontology.hpp"
#include "ontopheno/trainer.hpp"

namespace op = ontopheno;
namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::map<std::string, std::string> term_names(const op::OntologyGraph& graph) {
    std::map<std::string, std::string> names;
    for (const auto& [id, term] : graph.terms())
        if (!term.obsolete) names[id] = term.name;
    return names;
}

/// Pair TSV without an ontology: term_a<TAB>term_b<TAB>flag[<TAB>provenance].
/// Used for synthetic pair files whose terms exist in no OBO graph.
op::ExclusivePairSet parse_pair_tsv(const std::string& text) {
    op::ExclusivePairSet set;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        std::vector<std::string> cols;
        std::size_t start = 0;
        while (true) {
            auto pos = line.find('\t', start);
            if (pos == std::string::npos) {
                cols.push_back(trim(line.substr(start)));
                break;
            }
            cols.push_back(trim(line.substr(start, pos - start)));
            start = pos + 1;
        }
        if (cols.size() != 3 && cols.size() != 4)
            throw op::DataError("pair file line " + std::to_string(line_no) +
                                ": expected 3 or 4 tab-separated columns");
        if (cols[2] != "0" && cols[2] != "1")
            throw op::DataError("pair file line " + std::to_string(line_no) +
                                ": flag must be 0 or 1");
        if (cols[2] == "0") continue;
        const op::PairProvenance prov = cols.size() == 4 && cols[3] == "keyword"
                                            ? op::PairProvenance::keyword
                                            : op::PairProvenance::external;
        set.insert(cols[0], cols[1], prov);
    }
    return set;
}

op::PredictionMatrix score_split(const op::ModelParameters& model, const op::DenseView& view,
                                 const std::vector<std::string>& term_ids) {
    op::PredictionMatrix pred;
    pred.gene_ids = view.gene_ids;
    pred.term_ids = term_ids;
    pred.scores.resize(view.X.rows(), static_cast<Eigen::Index>(term_ids.size()));
    for (Eigen::Index r = 0; r < view.X.rows(); ++r) {
        const op::ForwardResult f = op::forward(model, view.X.row(r));
        pred.scores.row(r) = (1.0 / (1.0 + (-f.pheno.array()).exp())).matrix();
    }
    return pred;
}

op::AnnotationMatrix truth_subset(const op::AnnotationMatrix& full,
                                  const std::vector<std::string>& genes) {
    op::AnnotationMatrix sub(genes, full.term_ids());
    for (std::size_t r = 0; r < genes.size(); ++r)
        for (std::size_t t : full.positives(full.gene_index(genes[r]))) sub.set(r, t);
    return sub;
}

std::string matrix_tsv(const Eigen::MatrixXd& m) {
    std::ostringstream out;
    char buf[64];
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(r, c));
            if (c) out << '\t';
            out << buf;
        }
        out << '\n';
    }
    return out.str();
}

int run_mine(const std::string& obo_path, const std::string& out_path,
             const std::string& ingest_path, const std::string& requests_dir,
             std::size_t batch_size) {
    const op::OntologyGraph graph = op::parse_obo(op::read_file(obo_path));
    const auto groups = op::sibling_groups(graph);
    const auto names = term_names(graph);
    op::ExclusivePairSet mined = op::mine_keyword_pairs(groups, names);
    if (!ingest_path.empty())
        mined = mined.merged_with(op::ingest_pairs(op::read_file(ingest_path), graph));
    op::write_file(out_path, op::pairs_to_tsv(mined));
    if (!requests_dir.empty()) {
        fs::create_directories(requests_dir);
        const auto docs = op::emit_annotation_requests(groups, names, batch_size);
        for (std::size_t k = 0; k < docs.size(); ++k) {
            char name[32];
            std::snprintf(name, sizeof(name), "request_%03zu.txt", k);
            op::write_file(requests_dir + "/" + name, docs[k]);
        }
    }
    std::cout << "pairs: " << mined.size() << " (non-sibling rejected: "
              << mined.rejected_non_sibling << ")\n";
    return 0;
}

int run_prepare(const std::string& obo, const std::string& annotations, const std::string& go_obo,
                const std::string& go_annotations, const std::string& out_dir) {
    const op::OntologyGraph pheno_graph = op::parse_obo(op::read_file(obo));
    const op::OntologyGraph go_graph = op::parse_obo(op::read_file(go_obo));
    const op::AnnotationMatrix pheno =
        op::parse_annotations(op::read_file(annotations), pheno_graph, true);
    const op::AnnotationMatrix go =
        op::parse_annotations(op::read_file(go_annotations), go_graph, true);

    const auto bottleneck = op::select_bottleneck_terms(go_graph, go);
    op::AnnotationMatrix go_bottleneck(go.gene_ids(), bottleneck);
    for (std::size_t g = 0; g < go.n_genes(); ++g)
        for (std::size_t t = 0; t < bottleneck.size(); ++t)
            if (go.get(g, go.term_index(bottleneck[t]))) go_bottleneck.set(g, t);

    fs::create_directories(out_dir);
    std::string terms;
    for (const auto& id : pheno.term_ids()) terms += id + "\n";
    op::write_file(out_dir + "/pheno_terms.txt", terms);
    op::write_file(out_dir + "/phenotype_labels.tsv", op::annotations_to_tsv(pheno));
    std::string bterms;
    for (const auto& id : bottleneck) bterms += id + "\n";
    op::write_file(out_dir + "/bottleneck_terms.txt", bterms);
    op::write_file(out_dir + "/go_terms.txt", bterms);
    op::write_file(out_dir + "/go_labels.tsv", op::annotations_to_tsv(go_bottleneck));
    std::cout << "phenotype terms: " << pheno.n_terms() << ", bottleneck terms: "
              << bottleneck.size() << "\n";
    return 0;
}

int run_train(const std::string& config_path, const std::string& data_dir,
              const std::string& pairs_path, const std::string& out_path) {
    const op::TrainConfig config = op::parse_train_config(op::read_file(config_path));
    const op::Dataset dataset = op::load_dataset(data_dir);
    const op::ExclusivePairSet pairs = parse_pair_tsv(op::read_file(pairs_path));
    const op::ModelParameters init = op::init_model(config.kind, config.dims, config.seed);
    const op::TrainOutcome outcome = op::train(init, dataset, pairs, config);
    op::save_checkpoint(outcome.model, out_path);
    op::write_file(out_path + ".report.tsv", op::train_report_to_text(outcome.report));
    std::cout << "best epoch " << outcome.report.best_epoch << ", final grad norm "
              << outcome.report.final_grad_norm << "\n";
    return 0;
}

int run_eval(const std::string& model_path, const std::string& data_dir,
             const std::string& auc_mode, const std::string& split, const std::string& out_path) {
    const op::ModelParameters model = op::load_checkpoint(model_path);
    const op::Dataset dataset = op::load_dataset(data_dir);
    const std::vector<std::string>* genes = &dataset.test;
    if (split == "train") genes = &dataset.train;
    else if (split == "valid") genes = &dataset.valid;
    else if (split != "test") throw op::UsageError("unknown split: " + split);
    if (genes->empty()) throw op::DataError("split '" + split + "' is empty");

    const op::DenseView view = op::dense_view(dataset, *genes);
    const op::PredictionMatrix pred = score_split(model, view, dataset.pheno.term_ids());
    const op::AnnotationMatrix truth = truth_subset(dataset.pheno, *genes);
    const op::AucMode mode = auc_mode == "pr" ? op::AucMode::pr : op::AucMode::roc;
    const op::EvaluationReport report = op::stratify(pred, truth, dataset.pheno, mode);
    op::write_file(out_path, op::report_tsv(report));
    op::write_file(out_path + ".curve.tsv", op::curve_tsv(report.all_curve));
    std::cout << op::report_tsv(report);
    return 0;
}

int run_interpret(const std::string& model_path, const std::string& go_terms_path,
                  const std::string& pheno_terms_path, std::size_t top_k,
                  const std::string& out_path, const std::string& go_subset,
                  const std::string& pheno_subset, const std::string& slice_out) {
    const op::ModelParameters model = op::load_checkpoint(model_path);
    auto read_ids = [](const std::string& path) {
        std::vector<std::string> ids;
        std::istringstream in(op::read_file(path));
        std::string line;
        while (std::getline(in, line))
            if (!trim(line).empty()) ids.push_back(trim(line));
        return ids;
    };
    const auto go_ids = read_ids(go_terms_path);
    const auto pheno_ids = read_ids(pheno_terms_path);

    const auto entries = op::extract_interpretation(model, go_ids, pheno_ids, top_k);
    std::ostringstream out;
    out << "go_term\tphenotype\tweight\n";
    char buf[64];
    for (const auto& e : entries) {
        std::snprintf(buf, sizeof(buf), "%.17g", e.weight);
        out << e.go_id << '\t' << e.pheno_id << '\t' << buf << '\n';
    }
    op::write_file(out_path, out.str());

    if (!slice_out.empty()) {
        auto split_list = [](const std::string& csv) {
            std::vector<std::string> out_ids;
            std::istringstream in(csv);
            std::string item;
            while (std::getline(in, item, ','))
                if (!trim(item).empty()) out_ids.push_back(trim(item));
            return out_ids;
        };
        const auto gsub = go_subset.empty() ? go_ids : split_list(go_subset);
        const auto psub = pheno_subset.empty() ? pheno_ids : split_list(pheno_subset);
        const auto values = op::interpretation_slice(model, go_ids, pheno_ids, gsub, psub);
        std::ostringstream slice;
        slice << "go_term";
        for (const auto& p : psub) slice << '\t' << p;
        slice << '\n';
        for (std::size_t r = 0; r < gsub.size(); ++r) {
            slice << gsub[r];
            for (std::size_t c = 0; c < psub.size(); ++c) {
                std::snprintf(buf, sizeof(buf), "%.17g", values[r * psub.size() + c]);
                slice << '\t' << buf;
            }
            slice << '\n';
        }
        op::write_file(slice_out, slice.str());
    }
    return 0;
}

int run_synth(const std::vector<std::string>& spec_kv, const std::string& out_dir) {
    op::SynthSpec spec;
    for (const auto& kv : spec_kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw op::UsageError("--spec entries take the form key=value: " + kv);
        const std::string key = trim(kv.substr(0, eq));
        const std::string value = trim(kv.substr(eq + 1));
        double num = 0.0;
        try {
            std::size_t used = 0;
            num = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
        } catch (const std::exception&) {
            throw op::UsageError("spec key " + key + ": not a number: '" + value + "'");
        }
        if (key == "genes") spec.genes = int(num);
        else if (key == "features") spec.features = int(num);
        else if (key == "phenotypes") spec.phenotypes = int(num);
        else if (key == "bottleneck") spec.bottleneck = int(num);
        else if (key == "exclusive_pairs") spec.exclusive_pairs = int(num);
        else if (key == "noise") spec.noise = num;
        else if (key == "margin") spec.margin = num;
        else if (key == "x_max") spec.x_max = num;
        else if (key == "go_mask_fraction") spec.go_mask_fraction = num;
        else if (key == "seed") spec.seed = std::uint64_t(num);
        else if (key == "bottleneck_path") spec.bottleneck_path = num != 0.0;
        else if (key == "train_fraction") spec.train_fraction = num;
        else if (key == "valid_fraction") spec.valid_fraction = num;
        else if (key == "test_fraction") spec.test_fraction = num;
        else throw op::UsageError("unknown spec key: " + key);
    }

    const op::SynthResult result = op::synth_generate(spec);
    op::save_dataset(result.dataset, out_dir);
    op::write_file(out_dir + "/pairs.tsv", op::pairs_to_tsv(result.pairs));
    op::save_checkpoint(result.planted, out_dir + "/planted.ckpt");
    op::write_file(out_dir + "/planted_go.tsv", matrix_tsv(result.planted_go));
    if (result.planted_bp.size() > 0)
        op::write_file(out_dir + "/planted_bp.tsv", matrix_tsv(result.planted_bp));
    std::cout << "genes: " << spec.genes << ", phenotypes: " << spec.phenotypes
              << ", pairs: " << result.pairs.size() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ontology-aware multi-label phenotype prediction toolkit"};
    app.require_subcommand(1);

    std::string obo, out, ingest, requests_dir;
    std::size_t batch_size = 20;
    auto* mine = app.add_subcommand("mine", "Mine mutually exclusive phenotype pairs");
    mine->add_option("--obo", obo, "Ontology OBO file")->required();
    mine->add_option("--out", out, "Output pair TSV")->required();
    mine->add_option("--ingest", ingest, "External pair TSV to union in");
    mine->add_option("--emit-requests", requests_dir, "Directory for annotation request docs");
    mine->add_option("--batch-size", batch_size, "Pairs per request document");

    std::string annotations, go_obo, go_annotations;
    auto* prepare = app.add_subcommand("prepare", "Propagate annotations, pick bottleneck terms");
    prepare->add_option("--obo", obo, "Phenotype ontology OBO")->required();
    prepare->add_option("--annotations", annotations, "Phenotype annotation TSV")->required();
    prepare->add_option("--go-obo", go_obo, "GO OBO file")->required();
    prepare->add_option("--go-annotations", go_annotations, "GO annotation TSV")->required();
    prepare->add_option("--out", out, "Output directory")->required();

    std::string config_path, data_dir, pairs_path;
    auto* train = app.add_subcommand("train", "Train a model");
    train->add_option("--config", config_path, "Training config file")->required();
    train->add_option("--data", data_dir, "Dataset directory")->required();
    train->add_option("--pairs", pairs_path, "Exclusive pair TSV")->required();
    train->add_option("--out", out, "Checkpoint path")->required();

    std::string model_path, auc_mode = "roc", split = "test";
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
    eval->add_option("--model", model_path, "Checkpoint path")->required();
    eval->add_option("--data", data_dir, "Dataset directory")->required();
    eval->add_option("--auc-mode", auc_mode, "roc or pr")
        ->check(CLI::IsMember({"roc", "pr"}));
    eval->add_option("--split", split, "train, valid or test");
    eval->add_option("--out", out, "Report TSV path")->required();

    std::string go_terms_path, pheno_terms_path, go_subset, pheno_subset, slice_out;
    std::size_t top_k = 10;
    auto* interpret = app.add_subcommand("interpret", "Extract bottleneck weights");
    interpret->add_option("--model", model_path, "Checkpoint path")->required();
    interpret->add_option("--go-terms", go_terms_path, "Bottleneck term id file")->required();
    interpret->add_option("--pheno-terms", pheno_terms_path, "Phenotype term id file")->required();
    interpret->add_option("--top-k", top_k, "Entries to keep");
    interpret->add_option("--out", out, "Interpretation TSV")->required();
    interpret->add_option("--go-subset", go_subset, "Comma list of GO ids for the slice");
    interpret->add_option("--pheno-subset", pheno_subset, "Comma list of phenotype ids");
    interpret->add_option("--slice-out", slice_out, "Rectangular slice TSV path");

    std::vector<std::string> spec_kv;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
    synth->add_option("--spec", spec_kv, "key=value overrides");
    synth->add_option("--out", out, "Output directory")->required();

    try {
        app.parse(argc, argv);
        if (app.got_subcommand(mine))
            return run_mine(obo, out, ingest, requests_dir, batch_size);
        if (app.got_subcommand(prepare))
            return run_prepare(obo, annotations, go_obo, go_annotations, out);
        if (app.got_subcommand(train)) return run_train(config_path, data_dir, pairs_path, out);
        if (app.got_subcommand(eval)) return run_eval(model_path, data_dir, auc_mode, split, out);
        if (app.got_subcommand(interpret))
            return run_interpret(model_path, go_terms_path, pheno_terms_path, top_k, out,
                                 go_subset, pheno_subset, slice_out);
        if (app.got_subcommand(synth)) return run_synth(spec_kv, out);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const op::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const op::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const op::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
