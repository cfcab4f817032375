#include <doctest.h>

#include <cmath>

#include "ontopheno/errors.hpp"
#include "ontopheno/objective.hpp"
#include "ontopheno/rng.hpp"
#include "oracles.hpp"

using namespace ontopheno;

namespace {

void random_instance(Rng& rng, int C, Eigen::VectorXd& s, Eigen::VectorXi& y, double scale = 2.0) {
    s.resize(C);
    y.resize(C);
    for (int c = 0; c < C; ++c) {
        s[c] = scale * rng.gaussian();
        y[c] = rng.uniform() < 0.4 ? 1 : 0;
    }
}

// Appendix-style closed form for the zlpr gradient.
Eigen::VectorXd zlpr_closed_form(const Eigen::VectorXd& s, const Eigen::VectorXi& y) {
    double pos_sum = 0.0, neg_sum = 0.0;
    for (Eigen::Index c = 0; c < s.size(); ++c)
        (y[c] ? pos_sum : neg_sum) += y[c] ? std::exp(-s[c]) : std::exp(s[c]);
    Eigen::VectorXd g(s.size());
    for (Eigen::Index c = 0; c < s.size(); ++c)
        g[c] = y[c] ? -std::exp(-s[c]) / (1.0 + pos_sum) : std::exp(s[c]) / (1.0 + neg_sum);
    return g;
}

}  // namespace

TEST_CASE("hand-computed loss values") {
    Eigen::VectorXd s(2);
    Eigen::VectorXi y(2);
    y << 1, 0;

    SUBCASE("zero margin") {
        s << 0.0, 0.0;
        CHECK(contrastive_mlc(s, y, 1.0) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
        CHECK(zlpr(s, y) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
    }
    SUBCASE("margin 4 apart") {
        s << 2.0, -2.0;
        CHECK(contrastive_mlc(s, y, 1.0) ==
              doctest::Approx(2.0 * std::log1p(std::exp(-4.0))).epsilon(1e-12));
        CHECK(zlpr(s, y) == doctest::Approx(2.0 * std::log1p(std::exp(-2.0))).epsilon(1e-12));
    }
    SUBCASE("zlpr gradient at zero") {
        s << 0.0, 0.0;
        LossConfig cfg;
        cfg.variant = LossVariant::zlpr;
        const Eigen::VectorXd g = loss_gradient(s, y, cfg);
        CHECK(g[0] == doctest::Approx(-0.5).epsilon(1e-12));
        CHECK(g[1] == doctest::Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("degenerate label sets give zero loss and gradient") {
    Eigen::VectorXd s(3);
    s << 1.0, -2.0, 0.5;
    Eigen::VectorXi all_pos = Eigen::VectorXi::Ones(3), all_neg = Eigen::VectorXi::Zero(3);
    CHECK(contrastive_mlc(s, all_pos, 1.0) == 0.0);
    CHECK(contrastive_mlc(s, all_neg, 1.0) == 0.0);
    LossConfig cfg;
    CHECK(loss_gradient(s, all_pos, cfg).norm() == 0.0);
    // zlpr degrades gracefully too: one side drops out.
    CHECK(zlpr(s, all_neg) ==
          doctest::Approx(std::log1p(std::exp(1.0) + std::exp(-2.0) + std::exp(0.5))));
}

TEST_CASE("error contracts") {
    Eigen::VectorXd s(2);
    Eigen::VectorXi y(2);
    s << 1.0, 0.0;
    y << 1, 0;
    CHECK_THROWS_AS(contrastive_mlc(s, y, 0.0), UsageError);
    CHECK_THROWS_AS(contrastive_mlc(s, y, -1.0), UsageError);
    s[1] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(contrastive_mlc(s, y, 1.0), NumericError);
    CHECK_THROWS_AS(zlpr(s, y), NumericError);
    Eigen::VectorXi bad(1);
    bad << 1;
    s[1] = 0.0;
    CHECK_THROWS_AS(contrastive_mlc(s, bad, 1.0), DataError);
}

TEST_CASE("temperature identity L(s, tau) = L(s / tau, 1)") {
    Rng rng(21);
    for (int trial = 0; trial < 10000; ++trial) {
        const int C = 2 + int(rng.below(8));
        Eigen::VectorXd s;
        Eigen::VectorXi y;
        random_instance(rng, C, s, y);
        const double tau = 0.25 + 2.0 * rng.uniform();
        CHECK(contrastive_mlc(s, y, tau) ==
              doctest::Approx(contrastive_mlc(s / tau, y, 1.0)).epsilon(1e-12));
    }
}

TEST_CASE("rank-form and factored-sum identity per instance") {
    // The two-sided rank loss decomposes into softplus terms around the
    // per-side log-sum-exp; check the term-by-term regrouping numerically.
    Rng rng(22);
    for (int trial = 0; trial < 10000; ++trial) {
        const int C = 2 + int(rng.below(8));
        Eigen::VectorXd s;
        Eigen::VectorXi y;
        random_instance(rng, C, s, y);
        double direct = 0.0;
        for (int i = 0; i < C; ++i) {
            if (!y[i]) continue;
            double inner = 0.0;
            for (int j = 0; j < C; ++j)
                if (!y[j]) inner += std::exp(s[j] - s[i]);
            direct += std::log1p(inner);
        }
        for (int j = 0; j < C; ++j) {
            if (y[j]) continue;
            double inner = 0.0;
            for (int i = 0; i < C; ++i)
                if (y[i]) inner += std::exp(s[j] - s[i]);
            direct += std::log1p(inner);
        }
        CHECK(contrastive_mlc(s, y, 1.0) == doctest::Approx(direct).epsilon(1e-11));
    }
}

TEST_CASE("analytic gradients match finite differences") {
    Rng rng(23);
    LossConfig contrastive_cfg;
    LossConfig zlpr_cfg;
    zlpr_cfg.variant = LossVariant::zlpr;

    for (int trial = 0; trial < 1000; ++trial) {
        const int C = 2 + int(rng.below(8));
        Eigen::VectorXd s;
        Eigen::VectorXi y;
        random_instance(rng, C, s, y);
        const double tau = 0.5 + rng.uniform();
        contrastive_cfg.tau = tau;

        const auto num_c = oracles::finite_diff(
            [&](const Eigen::VectorXd& v) { return contrastive_mlc(v, y, tau); }, s);
        CHECK(oracles::grad_error(loss_gradient(s, y, contrastive_cfg), num_c) < 1e-4);

        const auto num_z =
            oracles::finite_diff([&](const Eigen::VectorXd& v) { return zlpr(v, y); }, s);
        CHECK(oracles::grad_error(loss_gradient(s, y, zlpr_cfg), num_z) < 1e-4);
    }
}

TEST_CASE("zlpr gradient matches the closed form and stays in (-1, 1)") {
    Rng rng(24);
    LossConfig cfg;
    cfg.variant = LossVariant::zlpr;
    for (int trial = 0; trial < 1000; ++trial) {
        const int C = 2 + int(rng.below(8));
        Eigen::VectorXd s;
        Eigen::VectorXi y;
        random_instance(rng, C, s, y);
        const Eigen::VectorXd g = loss_gradient(s, y, cfg);
        const Eigen::VectorXd closed = zlpr_closed_form(s, y);
        for (int c = 0; c < C; ++c) {
            CHECK(std::abs(g[c] - closed[c]) <= 1e-12);
            CHECK(g[c] > -1.0);
            CHECK(g[c] < 1.0);
        }
    }
}

TEST_CASE("exclusivity penalty values and gradient") {
    Eigen::VectorXd s(3);
    s << 0.0, 0.0, 2.0;
    const std::vector<std::pair<int, int>> pairs{{0, 1}};
    CHECK(exclusivity_penalty(s, pairs) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(exclusivity_penalty(s, {{0, 2}}) ==
          doctest::Approx(std::log1p(std::exp(2.0))).epsilon(1e-12));
    CHECK(exclusivity_penalty(s, {}) == 0.0);

    Rng rng(25);
    for (int trial = 0; trial < 1000; ++trial) {
        Eigen::VectorXd v(4);
        for (int i = 0; i < 4; ++i) v[i] = 2.0 * rng.gaussian();
        const std::vector<std::pair<int, int>> ps{{0, 1}, {1, 2}, {0, 3}};
        Eigen::VectorXd g;
        exclusivity_penalty(v, ps, &g);
        const auto num = oracles::finite_diff(
            [&](const Eigen::VectorXd& w) { return exclusivity_penalty(w, ps); }, v);
        CHECK(oracles::grad_error(g, num) < 1e-4);
    }
}

TEST_CASE("bottleneck loss masks genes without annotations") {
    Eigen::VectorXd g(2);
    g << 1.0, -1.0;
    Eigen::VectorXi y(2);
    y << 1, 0;
    LossConfig cfg;
    CHECK(bottleneck_loss(g, y, false, cfg) == 0.0);
    CHECK(bottleneck_loss(g, y, true, cfg) == doctest::Approx(mlc_loss(g, y, cfg)));
}

TEST_CASE("total objective composes the three terms with the batch mean") {
    Rng rng(26);
    const int N = 5, C = 4, n = 3;
    Eigen::MatrixXd s(N, C), g(N, n);
    Eigen::MatrixXi y(N, C), gy(N, n);
    std::vector<std::uint8_t> mask(N);
    for (int r = 0; r < N; ++r) {
        mask[r] = r % 2 == 0;
        for (int c = 0; c < C; ++c) {
            s(r, c) = rng.gaussian();
            y(r, c) = rng.uniform() < 0.4;
        }
        for (int k = 0; k < n; ++k) {
            g(r, k) = rng.gaussian();
            gy(r, k) = rng.uniform() < 0.4;
        }
    }
    const std::vector<std::pair<int, int>> pairs{{0, 1}, {2, 3}};
    LossConfig cfg;
    cfg.lambda1 = 0.7;
    cfg.lambda2 = 1.3;

    const BatchObjective batch = total_objective(s, y, pairs, g, gy, mask, cfg);
    double expected = 0.0;
    for (int r = 0; r < N; ++r) {
        expected += mlc_loss(s.row(r), y.row(r), cfg);
        expected += cfg.lambda1 * exclusivity_penalty(s.row(r), pairs);
        expected += cfg.lambda2 * bottleneck_loss(g.row(r), gy.row(r), mask[r] != 0, cfg);
    }
    expected /= N;
    CHECK(batch.value == doctest::Approx(expected).epsilon(1e-12));

    // Gradient against finite differences over the stacked logits.
    for (int r = 0; r < N; ++r) {
        for (int c = 0; c < C; ++c) {
            Eigen::MatrixXd hi = s, lo = s;
            hi(r, c) += 1e-5;
            lo(r, c) -= 1e-5;
            const double num = (total_objective(hi, y, pairs, g, gy, mask, cfg).value -
                                total_objective(lo, y, pairs, g, gy, mask, cfg).value) /
                               2e-5;
            CHECK(batch.d_pheno(r, c) == doctest::Approx(num).epsilon(1e-4));
        }
        for (int k = 0; k < n; ++k) {
            Eigen::MatrixXd hi = g, lo = g;
            hi(r, k) += 1e-5;
            lo(r, k) -= 1e-5;
            const double num = (total_objective(s, y, pairs, hi, gy, mask, cfg).value -
                                total_objective(s, y, pairs, lo, gy, mask, cfg).value) /
                               2e-5;
            CHECK(batch.d_go(r, k) == doctest::Approx(num).epsilon(1e-4));
        }
    }

    // Masked genes contribute no bottleneck gradient.
    for (int r = 0; r < N; ++r)
        if (!mask[r]) CHECK(batch.d_go.row(r).norm() == 0.0);

    // Empty batches and shape mismatches are rejected.
    CHECK_THROWS_AS(total_objective(Eigen::MatrixXd(0, C), Eigen::MatrixXi(0, C), pairs,
                                    Eigen::MatrixXd(0, 0), Eigen::MatrixXi(0, 0), {}, cfg),
                    DataError);
    CHECK_THROWS_AS(total_objective(s, Eigen::MatrixXi(N, C + 1), pairs, g, gy, mask, cfg),
                    DataError);
}
