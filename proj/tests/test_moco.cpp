#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mixco/errors.hpp"
#include "mixco/moco.hpp"
#include "oracles.hpp"

using namespace mixco;

namespace {

const std::vector<std::size_t> kSizes{4, 6, 3};

MoCoState fresh(std::size_t queue, double m, std::uint64_t seed = 1) {
    Rng rng(seed);
    return init_moco(kSizes, queue, m, rng, seed);
}

// Perturbs the query encoder so that query and key differ.
void drift_query(MoCoState& s, Rng& rng) {
    for (auto& w : s.query.weights)
        for (double& v : w.values()) v += rng.normal(0.0, 0.3);
    for (auto& b : s.query.biases)
        for (double& v : b.values()) v += rng.normal(0.0, 0.3);
}

Tensor tagged_keys(std::size_t rows, std::size_t cols, double first_tag) {
    Tensor t = Tensor::zeros(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) t(i, 0) = first_tag + static_cast<double>(i);
    return t;
}

}  // namespace

TEST(MocoInit, KeyCopiesQueryAndQueueIsUnit) {
    const MoCoState s = fresh(8, 0.999);
    EXPECT_TRUE(bitwise_equal(s.query, s.key));
    EXPECT_EQ(s.queue.shape(), (std::vector<std::size_t>{8, 3}));
    EXPECT_EQ(s.queue_ptr, 0u);
    EXPECT_FALSE(s.queue_warm());
    for (std::size_t i = 0; i < 8; ++i) {
        double n = 0.0;
        for (double v : s.queue.row(i)) n += v * v;
        EXPECT_NEAR(std::sqrt(n), 1.0, 1e-12);
    }
}

TEST(MocoInit, SameSeedSameState) {
    EXPECT_TRUE(bitwise_equal(fresh(8, 0.99, 3), fresh(8, 0.99, 3)));
    EXPECT_FALSE(bitwise_equal(fresh(8, 0.99, 3), fresh(8, 0.99, 4)));
}

TEST(MocoInit, RejectsMomentumOutsideUnitInterval) {
    Rng rng(1);
    EXPECT_THROW((void)init_moco(kSizes, 8, 1.5, rng), ConfigError);
}

TEST(MomentumUpdate, FrozenAtOne) {
    MoCoState s = fresh(8, 1.0);
    Rng rng(2);
    drift_query(s, rng);
    const EncoderParams before = s.key;
    momentum_update(s);
    EXPECT_TRUE(bitwise_equal(s.key, before));
}

TEST(MomentumUpdate, CopiesAtZero) {
    MoCoState s = fresh(8, 0.0);
    Rng rng(3);
    drift_query(s, rng);
    momentum_update(s);
    EXPECT_TRUE(bitwise_equal(s.key, s.query));
}

TEST(MomentumUpdate, ScalarArithmetic) {
    MoCoState s = fresh(8, 0.999);
    s.key.weights[0][0] = 0.0;
    s.query.weights[0][0] = 1.0;
    momentum_update(s);
    EXPECT_NEAR(s.key.weights[0][0], 0.001, 1e-15);
}

TEST(MomentumUpdate, EveryEntryStaysBetweenKeyAndQuery) {
    MoCoState s = fresh(8, 0.9);
    Rng rng(4);
    for (int step = 0; step < 20; ++step) {
        drift_query(s, rng);
        const EncoderParams old = s.key;
        momentum_update(s);
        for (std::size_t l = 0; l < s.key.layer_count(); ++l) {
            for (std::size_t i = 0; i < s.key.weights[l].size(); ++i) {
                const double a = old.weights[l][i];
                const double b = s.query.weights[l][i];
                const double k = s.key.weights[l][i];
                ASSERT_GE(k, std::min(a, b));
                ASSERT_LE(k, std::max(a, b));
            }
        }
    }
}

TEST(Queue, WrapsAfterTwoBatches) {
    MoCoState s = fresh(4, 0.999);
    s.queue = Tensor::zeros(4, 3);
    enqueue_dequeue(s, tagged_keys(2, 3, 10));
    EXPECT_EQ(s.queue_ptr, 2u);
    enqueue_dequeue(s, tagged_keys(2, 3, 20));
    EXPECT_EQ(s.queue_ptr, 0u);
    EXPECT_EQ(s.queue(0, 0), 10.0);
    EXPECT_EQ(s.queue(1, 0), 11.0);
    EXPECT_EQ(s.queue(2, 0), 20.0);
    EXPECT_EQ(s.queue(3, 0), 21.0);
    EXPECT_TRUE(s.queue_warm());
}

TEST(Queue, FullReplacementAfterKOverBEnqueues) {
    MoCoState s = fresh(12, 0.999);
    for (int b = 0; b < 4; ++b) enqueue_dequeue(s, tagged_keys(3, 3, 100.0 + 3 * b));
    for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(s.queue(i, 0), 100.0 + static_cast<double>(i));
    EXPECT_EQ(s.keys_enqueued, 12u);
}

TEST(Queue, WriteThenReadIsIdentity) {
    MoCoState s = fresh(8, 0.999);
    Rng rng(5);
    enqueue_dequeue(s, oracle::random_unit_rows(4, 3, rng));
    const std::size_t before = s.queue_ptr;
    const Tensor keys = oracle::random_unit_rows(4, 3, rng);
    enqueue_dequeue(s, keys);
    std::vector<std::size_t> idx{before, before + 1, before + 2, before + 3};
    EXPECT_TRUE(bitwise_equal(gather_rows(s.queue, idx), keys));
}

TEST(Queue, OversizedOrMisalignedBatchRejected) {
    MoCoState s = fresh(4, 0.999);
    EXPECT_THROW(enqueue_dequeue(s, Tensor::zeros(8, 3)), ConfigError);
    EXPECT_THROW(enqueue_dequeue(s, Tensor::zeros(3, 3)), ConfigError);
    EXPECT_THROW(enqueue_dequeue(s, Tensor::zeros(2, 5)), DimensionError);
}

TEST(KeyForward, SameAsEncodeWithKeyParameters) {
    MoCoState s = fresh(8, 0.5);
    Rng rng(6);
    drift_query(s, rng);
    momentum_update(s);
    Tensor x = Tensor::zeros(5, 4);
    for (double& v : x.values()) v = rng.normal();
    const Tensor k = key_forward_no_grad(s, x);
    EXPECT_TRUE(bitwise_equal(k, encode(s.key, x).v));
    for (std::size_t i = 0; i < 5; ++i) {
        double n = 0.0;
        for (double v : k.row(i)) n += v * v;
        EXPECT_NEAR(std::sqrt(n), 1.0, 1e-12);
    }
    s.momentum = 0.0;
    momentum_update(s);
    EXPECT_TRUE(bitwise_equal(key_forward_no_grad(s, x), encode(s.query, x).v));
}

TEST(MocoCheckpoint, RoundTripIsBitExact) {
    MoCoState s = fresh(8, 0.99, 7);
    Rng rng(7);
    drift_query(s, rng);
    momentum_update(s);
    enqueue_dequeue(s, oracle::random_unit_rows(4, 3, rng));
    const MoCoState back = deserialize_moco(serialize_moco(s));
    EXPECT_TRUE(bitwise_equal(s, back));
    EXPECT_EQ(back.queue_ptr, 4u);
    EXPECT_EQ(back.keys_enqueued, 4u);
    EXPECT_EQ(back.momentum, 0.99);
}

TEST(MocoCheckpoint, CorruptInputRejected) {
    const std::string bytes = serialize_moco(fresh(8, 0.99));
    std::string wrong = bytes;
    wrong[2] = 'Q';
    EXPECT_THROW((void)deserialize_moco(wrong), FormatError);
    EXPECT_THROW((void)deserialize_moco(bytes.substr(0, bytes.size() - 8)), FormatError);
    EXPECT_THROW((void)deserialize_moco(""), FormatError);
}
