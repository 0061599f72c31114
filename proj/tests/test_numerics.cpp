#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "mixco/contrastive.hpp"
#include "mixco/errors.hpp"
#include "mixco/numerics.hpp"
#include "mixco/rng.hpp"
#include "oracles.hpp"

using namespace mixco;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, Rng& rng) {
    Tensor t = Tensor::zeros(r, c);
    for (double& v : t.values()) v = rng.normal();
    return t;
}

}  // namespace

TEST(Tensor, RejectsMismatchedData) {
    EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), DimensionError);
    const Tensor empty_queue = Tensor::zeros(0, 4);
    EXPECT_EQ(empty_queue.rows(), 0u);
    EXPECT_EQ(empty_queue.cols(), 4u);
}

TEST(Tensor, BitwiseEqualSeesSignedZero) {
    const Tensor a = Tensor::from_rows({{0.0}});
    const Tensor b = Tensor::from_rows({{-0.0}});
    EXPECT_TRUE(a == b);
    EXPECT_FALSE(bitwise_equal(a, b));
}

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
    const Tensor x = Tensor::from_rows({{3, 4}, {5, 6}});
    EXPECT_EQ(matmul(Tensor::identity(2), x), x);
}

TEST(Matmul, ZeroColumn) {
    EXPECT_EQ(matmul(Tensor::from_rows({{1, 2}}), Tensor::from_rows({{0}, {0}})), Tensor::from_rows({{0}}));
}

TEST(Matmul, HandArithmetic) {
    EXPECT_EQ(matmul(Tensor::from_rows({{1, 2}, {3, 4}}), Tensor::from_rows({{5}, {6}})),
              Tensor::from_rows({{17}, {39}}));
}

TEST(Matmul, InnerDimensionMismatchThrows) {
    EXPECT_THROW((void)matmul(Tensor::zeros(2, 3), Tensor::zeros(2, 3)), DimensionError);
}

TEST(Matmul, TransposedVariantsAgreeWithReference) {
    Rng rng(5);
    const Tensor a = random_matrix(4, 7, rng);
    const Tensor b = random_matrix(5, 7, rng);
    const Tensor c = random_matrix(4, 3, rng);
    const auto ref_bt = oracle::matmul(oracle::to_matrix(a), [&] {
        oracle::Matrix t(7, std::vector<double>(5));
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 7; ++j) t[j][i] = b(i, j);
        return t;
    }());
    const Tensor bt = matmul_bt(a, b);
    const Tensor at = matmul_at(a, c);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(bt(i, j), ref_bt[i][j], 1e-12);
    for (std::size_t i = 0; i < 7; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < 4; ++k) s += a(k, i) * c(k, j);
            EXPECT_NEAR(at(i, j), s, 1e-12);
        }
    }
}

TEST(LogSoftmax, UniformRow) {
    const Tensor out = log_softmax(Tensor::from_rows({{0, 0, 0, 0}}));
    for (double v : out.values()) EXPECT_NEAR(v, -1.3862944, 1e-7);
}

TEST(LogSoftmax, ShiftInvariant) {
    for (double t : {-700.0, -3.5, 0.0, 42.0, 900.0}) {
        const Tensor out = log_softmax(Tensor::from_rows({{t, t}}));
        EXPECT_NEAR(out(0, 0), -std::log(2.0), 1e-15);
        EXPECT_NEAR(out(0, 1), -std::log(2.0), 1e-15);
    }
}

TEST(LogSoftmax, MatchesDirectSummation) {
    const Tensor out = log_softmax(Tensor::from_rows({{1, 2, 3}}));
    const double denom = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(out(0, j), (j + 1.0) - std::log(denom), 1e-12);
}

TEST(LogSoftmax, NonFiniteInputThrows) {
    EXPECT_THROW((void)log_softmax(Tensor::from_rows({{1.0, NAN}})), DomainError);
    EXPECT_THROW((void)log_softmax(Tensor::from_rows({{INFINITY, 0.0}})), DomainError);
}

TEST(SoftCrossEntropy, OneHotIsOrdinaryCrossEntropy) {
    const Tensor logits = Tensor::from_rows({{0.5, -1.0, 2.0}, {1.0, 1.0, 0.0}});
    const Tensor targets = Tensor::from_rows({{0, 0, 1}, {1, 0, 0}});
    const Tensor ls = log_softmax(logits);
    EXPECT_NEAR(soft_cross_entropy(logits, targets).value, -(ls(0, 2) + ls(1, 0)) / 2.0, 1e-15);
}

TEST(SoftCrossEntropy, UniformLogitsGiveLogC) {
    const Tensor logits = Tensor::from_rows({{0.7, 0.7, 0.7, 0.7, 0.7}});
    const Tensor targets = Tensor::from_rows({{0.1, 0.2, 0.3, 0.4, 0.0}});
    EXPECT_NEAR(soft_cross_entropy(logits, targets).value, std::log(5.0), 1e-14);
}

TEST(SoftCrossEntropy, DirectEvaluation) {
    const Tensor logits = Tensor::from_rows({{1, 0, -1}});
    const Tensor targets = Tensor::from_rows({{0.3, 0.7, 0.0}});
    const double lse = oracle::log_sum_exp({1.0, 0.0, -1.0});
    const double expected = -(0.3 * (1.0 - lse) + 0.7 * (0.0 - lse));
    EXPECT_NEAR(soft_cross_entropy(logits, targets).value, expected, 1e-15);
}

TEST(SoftCrossEntropy, RejectsNonDistributionTargets) {
    const Tensor logits = Tensor::from_rows({{1, 0}});
    EXPECT_THROW((void)soft_cross_entropy(logits, Tensor::from_rows({{0.5, 0.6}})), ContractError);
    EXPECT_THROW((void)soft_cross_entropy(logits, Tensor::from_rows({{1.2, -0.2}})), ContractError);
    EXPECT_THROW((void)soft_cross_entropy(logits, Tensor::from_rows({{1.0, 0.0, 0.0}})), DimensionError);
}

TEST(KlDivergence, ZeroAgainstOwnSoftmax) {
    const Tensor logits = Tensor::from_rows({{0.3, -1.2, 2.2}, {0.0, 0.0, 1.0}});
    EXPECT_NEAR(kl_divergence_to_logits(logits, softmax(logits)).value, 0.0, 1e-15);
}

TEST(KlDivergence, OneHotOnUniformLogits) {
    const Tensor logits = Tensor::from_rows({{2, 2, 2, 2}});
    const Tensor targets = Tensor::from_rows({{1, 0, 0, 0}});
    EXPECT_NEAR(kl_divergence_to_logits(logits, targets).value, std::log(4.0), 1e-15);
}

TEST(KlDivergence, DiffersFromCrossEntropyByEntropy) {
    const Tensor logits = Tensor::from_rows({{1, 0, -1}});
    const Tensor targets = Tensor::from_rows({{0.3, 0.7, 0.0}});
    const double entropy = -(0.3 * std::log(0.3) + 0.7 * std::log(0.7));
    const LossGrad ce = soft_cross_entropy(logits, targets);
    const LossGrad kl = kl_divergence_to_logits(logits, targets);
    EXPECT_NEAR(kl.value, ce.value - entropy, 1e-15);
    EXPECT_NEAR(mean_row_entropy(targets), entropy, 1e-15);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(kl.grad[i], ce.grad[i]);
}

TEST(GradCheck, Quadratic) {
    const ScalarFunction f = [](const Tensor& x) {
        double s = 0.0;
        for (double v : x.values()) s += v * v;
        return s;
    };
    const Tensor point = Tensor::from_rows({{1, 2}});
    const GradCheckReport r = finite_difference_check(f, point, Tensor::from_rows({{2, 4}}), 1e-5);
    EXPECT_LT(r.max_relative_error, 1e-8);
}

TEST(GradCheck, ReportsWrongGradient) {
    const ScalarFunction f = [](const Tensor& x) { return 3.0 * x[0] + x[1]; };
    const GradCheckReport r =
        finite_difference_check(f, Tensor::from_rows({{0.5, 0.5}}), Tensor::from_rows({{3, 2}}), 1e-5);
    EXPECT_EQ(r.worst_coordinate, 1u);
    EXPECT_NEAR(r.max_relative_error, 1.0 / 3.0, 1e-8);
}

TEST(GradCheck, SoftCrossEntropyRandomLogits) {
    Rng rng(11);
    const Tensor logits = random_matrix(4, 6, rng);
    Tensor targets = Tensor::zeros(4, 6);
    for (std::size_t i = 0; i < 4; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 6; ++j) s += (targets(i, j) = rng.uniform());
        for (std::size_t j = 0; j < 6; ++j) targets(i, j) /= s;
    }
    const ScalarFunction f = [&](const Tensor& l) { return soft_cross_entropy(l, targets).value; };
    const GradCheckReport r = finite_difference_check(f, logits, soft_cross_entropy(logits, targets).grad, 1e-5);
    EXPECT_LT(r.max_relative_error, 1e-6);
}

TEST(GradCheck, ContrastiveLossQueries) {
    Rng rng(12);
    const Tensor q = oracle::random_unit_rows(4, 5, rng);
    const Tensor k = oracle::random_unit_rows(4, 5, rng);
    const Tensor queue = oracle::random_unit_rows(4, 5, rng);
    const ScalarFunction f = [&](const Tensor& x) { return contrastive_loss(x, k, queue, 0.2).value; };
    const GradCheckReport r =
        finite_difference_check(f, q, contrastive_loss(q, k, queue, 0.2).grad_queries, 1e-5);
    EXPECT_LT(r.max_relative_error, 1e-6);
}

TEST(L2Normalize, HandArithmetic) {
    const Tensor y = l2_normalize_rows(Tensor::from_rows({{3, 4}}), 1e-12);
    EXPECT_NEAR(y(0, 0), 0.6, 1e-15);
    EXPECT_NEAR(y(0, 1), 0.8, 1e-15);
}

TEST(L2Normalize, UnitRowUnchanged) {
    const Tensor x = Tensor::from_rows({{0, 1, 0}, {1, 0, 0}});
    EXPECT_EQ(l2_normalize_rows(x, 1e-12), x);
}

TEST(L2Normalize, ZeroRowStaysZero) {
    const Tensor y = l2_normalize_rows(Tensor::from_rows({{0, 0, 0}}), 1e-12);
    for (double v : y.values()) EXPECT_EQ(v, 0.0);
}

TEST(L2Normalize, BackwardMatchesFiniteDifferences) {
    Rng rng(13);
    const Tensor x = random_matrix(3, 4, rng);
    const Tensor w = random_matrix(3, 4, rng);
    const ScalarFunction f = [&](const Tensor& p) {
        const Tensor y = l2_normalize_rows(p, 1e-12);
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) s += w[i] * y[i];
        return s;
    };
    const GradCheckReport r = finite_difference_check(f, x, l2_normalize_rows_backward(x, 1e-12, w), 1e-5);
    EXPECT_LT(r.max_relative_error, 1e-6);
}

TEST(Rng, SameSeedSameStream) {
    Rng a(2024), b(2024);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.uniform(), b.uniform());
}

TEST(Rng, DerivedStreamsDiffer) {
    Rng a = Rng::derive(1, "augment");
    Rng b = Rng::derive(1, "mix");
    Rng c = Rng::derive(1, "augment");
    const auto x = a.next();
    EXPECT_NE(x, b.next());
    EXPECT_EQ(x, c.next());
}

TEST(Rng, UniformInHalfOpenRange) {
    Rng rng(3);
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        const double o = rng.uniform_open();
        ASSERT_GT(o, 0.0);
        ASSERT_LT(o, 1.0);
    }
}

TEST(Rng, PermutationIsBijection) {
    Rng rng(4);
    for (std::size_t n : {0u, 1u, 2u, 17u, 1000u}) {
        auto p = rng.permutation(n);
        std::sort(p.begin(), p.end());
        std::vector<std::size_t> expected(n);
        std::iota(expected.begin(), expected.end(), 0u);
        EXPECT_EQ(p, expected);
    }
}

TEST(Rng, BelowIsRoughlyUniform) {
    Rng rng(6);
    std::vector<int> counts(7, 0);
    const int draws = 70000;
    for (int i = 0; i < draws; ++i) ++counts[rng.below(7)];
    // Binomial sd is about 92 per bucket; 5 sd.
    for (int c : counts) EXPECT_NEAR(c, draws / 7, 460);
}

TEST(Rng, NormalMoments) {
    Rng rng(8);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s += z;
        s2 += z * z;
    }
    EXPECT_NEAR(s / n, 0.0, 0.012);
    EXPECT_NEAR(s2 / n, 1.0, 0.015);
}
