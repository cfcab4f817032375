#include "oracles.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>

using namespace ontopheno;

namespace oracles {

Eigen::VectorXd finite_diff(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double h) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Eigen::VectorXd hi = x, lo = x;
        hi[i] += h;
        lo[i] -= h;
        g[i] = (f(hi) - f(lo)) / (2.0 * h);
    }
    return g;
}

double grad_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < analytic.size(); ++i) {
        const double denom = std::max(1.0, std::abs(numeric[i]));
        worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
    }
    return worst;
}

double brute_fmax(const PredictionMatrix& pred, const AnnotationMatrix& truth) {
    double best = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double t = k / 100.0;
        double psum = 0.0, rsum = 0.0;
        int with_pred = 0, with_truth = 0;
        for (std::size_t g = 0; g < pred.gene_ids.size(); ++g) {
            std::set<std::size_t> predicted;
            for (std::size_t c = 0; c < pred.term_ids.size(); ++c)
                if (pred.scores(g, c) >= t) predicted.insert(c);
            const std::set<std::size_t>& actual = truth.positives(g);
            std::size_t tp = 0;
            for (std::size_t c : predicted) tp += actual.count(c);
            if (!predicted.empty()) {
                ++with_pred;
                psum += double(tp) / double(predicted.size());
            }
            if (!actual.empty()) {
                ++with_truth;
                rsum += double(tp) / double(actual.size());
            }
        }
        if (with_pred == 0 || with_truth == 0) continue;
        const double p = psum / with_pred, r = rsum / with_truth;
        if (p + r > 0.0) best = std::max(best, 2.0 * p * r / (p + r));
    }
    return best;
}

double pair_roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0.0;
    std::size_t n_pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            ++n_pairs;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    if (n_pairs == 0) return -1.0;
    return wins / double(n_pairs);
}

double brute_pr_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += (y != 0);
    if (n_pos == 0 || n_pos == labels.size()) return -1.0;

    // One (recall, precision) point per distinct score threshold.
    std::set<double, std::greater<double>> thresholds(scores.begin(), scores.end());
    std::vector<std::pair<double, double>> points;
    for (double t : thresholds) {
        std::size_t tp = 0, taken = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (scores[i] >= t) {
                ++taken;
                tp += (labels[i] != 0);
            }
        }
        points.emplace_back(double(tp) / double(n_pos), double(tp) / double(taken));
    }
    double area = 0.0, prev_recall = 0.0;
    for (std::size_t k = 0; k < points.size(); ++k) {
        double env = points[k].second;
        for (std::size_t j = k + 1; j < points.size(); ++j) env = std::max(env, points[j].second);
        area += (points[k].first - prev_recall) * env;
        prev_recall = points[k].first;
    }
    return area;
}

int bfs_depth(const OntologyGraph& graph, const std::string& id) {
    // Walk upward breadth-first until a root is reached.
    std::set<std::string> frontier{id};
    int depth = 0;
    while (!frontier.empty()) {
        std::set<std::string> next;
        for (const auto& t : frontier) {
            if (graph.term(t).parents.empty()) return depth;
            for (const auto& [p, rel] : graph.term(t).parents) {
                (void)rel;
                next.insert(p);
            }
        }
        frontier = next;
        ++depth;
    }
    return -1;
}

OntologyGraph random_dag(Rng& rng, int n_terms) {
    std::vector<OntologyTerm> terms(static_cast<std::size_t>(n_terms));
    for (int i = 0; i < n_terms; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "T:%04d", i);
        terms[static_cast<std::size_t>(i)].id = buf;
        terms[static_cast<std::size_t>(i)].name = "term " + std::to_string(i);
        if (i == 0) continue;  // single root
        const int n_parents = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(
                                      std::min(i, 3))));
        std::set<int> parents;
        while (static_cast<int>(parents.size()) < n_parents)
            parents.insert(static_cast<int>(rng.below(static_cast<std::uint64_t>(i))));
        for (int p : parents) {
            char pb[16];
            std::snprintf(pb, sizeof(pb), "T:%04d", p);
            terms[static_cast<std::size_t>(i)].parents.emplace_back(
                pb, rng.uniform() < 0.5 ? Relation::is_a : Relation::part_of);
        }
    }
    return OntologyGraph(std::move(terms));
}

std::set<std::string> naive_ancestors(const OntologyGraph& graph, const std::string& id) {
    std::set<std::string> out;
    std::vector<std::string> stack{id};
    while (!stack.empty()) {
        const std::string t = stack.back();
        stack.pop_back();
        for (const auto& [p, rel] : graph.term(t).parents) {
            (void)rel;
            if (out.insert(p).second) stack.push_back(p);
        }
    }
    return out;
}

}  // namespace oracles
