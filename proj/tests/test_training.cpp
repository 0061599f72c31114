#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mixco/errors.hpp"
#include "mixco/training.hpp"
#include "oracles.hpp"

using namespace mixco;
namespace fs = std::filesystem;

namespace {

Dataset clusters(int classes, std::size_t per_class, std::size_t dim, double spread, double sigma,
                 std::uint64_t seed) {
    Rng rng(seed);
    return generate_gaussian_clusters(ClusterSpec{classes, per_class, dim, spread, sigma}, rng);
}

RunConfig small_config() {
    RunConfig cfg;
    cfg.layers = {6, 12, 8};
    cfg.batch_size = 8;
    cfg.queue_size = 32;
    cfg.epochs = 3;
    cfg.seed = 5;
    return cfg;
}

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("mixco_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

EncoderParams identity_encoder(std::size_t d) {
    EncoderParams p;
    p.layer_sizes = {d, d};
    p.weights = {Tensor::identity(d)};
    p.biases = {Tensor::zeros(1, d)};
    return p;
}

}  // namespace

TEST(RunConfigValidation, Defaults) {
    const RunConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    EXPECT_EQ(cfg.beta, 1.0);
    EXPECT_EQ(cfg.tau_mix, 0.05);
    EXPECT_EQ(cfg.tau, 0.2);
    EXPECT_EQ(cfg.embed_dim(), 64u);
    const ProbeConfig probe;
    EXPECT_EQ(probe.epochs, 100u);
    EXPECT_EQ(probe.lr0, 3.0 * 64.0 / 256.0);
}

TEST(RunConfigValidation, RejectsInconsistentFields) {
    auto expect_bad = [](auto mutate) {
        RunConfig cfg = small_config();
        mutate(cfg);
        EXPECT_THROW(cfg.validate(), ConfigError);
    };
    expect_bad([](RunConfig& c) { c.batch_size = 7; });
    expect_bad([](RunConfig& c) { c.queue_size = 30; });
    expect_bad([](RunConfig& c) { c.queue_size = 4; });
    expect_bad([](RunConfig& c) { c.tau = 0.0; });
    expect_bad([](RunConfig& c) { c.tau_mix = -1.0; });
    expect_bad([](RunConfig& c) { c.beta = -0.5; });
    expect_bad([](RunConfig& c) { c.key_momentum = 1.5; });
    expect_bad([](RunConfig& c) {
        c.mode = Mode::simclr;
        c.queue_size = 32;
    });
}

TEST(RunConfigText, RoundTripThroughKeyValues) {
    RunConfig cfg = small_config();
    cfg.tau_mix = 0.1 + 0.2;
    cfg.mode = Mode::simclr_mixco;
    cfg.queue_size = 0;
    cfg.lr_schedule = LrSchedule::constant;
    RunConfig back;
    for (const auto& [k, v] : to_key_values(cfg)) ASSERT_TRUE(apply_key_value(back, k, v)) << k;
    EXPECT_EQ(to_key_values(back), to_key_values(cfg));
    EXPECT_EQ(back.tau_mix, cfg.tau_mix);
}

TEST(RunConfigText, UnknownAndMalformed) {
    RunConfig cfg;
    EXPECT_FALSE(apply_key_value(cfg, "no_such_key", "1"));
    try {
        apply_key_value(cfg, "tau", "abc");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(std::string(e.what()).rfind("tau:", 0), 0u) << e.what();
    }
    EXPECT_THROW(apply_key_value(cfg, "mode", "byol"), ConfigError);
    EXPECT_THROW(apply_key_value(cfg, "layers", "20,,64"), ConfigError);
}

TEST(MetricsLog, LineRoundTripIsExact) {
    MetricsRecord r{7, 1.0 / 3.0, 2.0 / 7.0, 1.0 / 3.0 + 2.0 / 7.0, 0.049, 12.5};
    const MetricsRecord back = parse_metrics_line(format_metrics_line(r));
    EXPECT_EQ(back.epoch, 7u);
    EXPECT_EQ(back.l_contrast, r.l_contrast);
    EXPECT_EQ(back.l_mixco, r.l_mixco);
    EXPECT_EQ(back.l_total, r.l_total);
    EXPECT_EQ(back.lr, r.lr);
    EXPECT_EQ(format_metrics_line(r).find("wall"), std::string::npos);
}

TEST(Schedule, CosineAndConstant) {
    RunConfig cfg = small_config();
    cfg.epochs = 10;
    EXPECT_EQ(learning_rate_at(cfg, 0), cfg.lr);
    EXPECT_LT(learning_rate_at(cfg, 9), learning_rate_at(cfg, 5));
    EXPECT_NEAR(learning_rate_at(cfg, 5), cfg.lr * 0.5, 1e-15);
    cfg.lr_schedule = LrSchedule::constant;
    EXPECT_EQ(learning_rate_at(cfg, 9), cfg.lr);
}

TEST(Pretrain, ZeroLearningRateFreezesEncoder) {
    const Dataset d = clusters(3, 16, 6, 4.0, 1.0, 1);
    RunConfig cfg = small_config();
    cfg.epochs = 1;
    cfg.lr = 0.0;
    const PretrainResult r = pretrain(cfg, UnlabeledView(d));
    EXPECT_TRUE(bitwise_equal(r.encoder, initial_encoder(cfg)));
    ASSERT_EQ(r.metrics.size(), 1u);
    EXPECT_TRUE(std::isfinite(r.metrics[0].l_total));
    EXPECT_GT(r.metrics[0].l_mixco, 0.0);
}

TEST(Pretrain, TotalIsContrastPlusWeightedMixco) {
    const Dataset d = clusters(3, 16, 6, 4.0, 1.0, 2);
    RunConfig cfg = small_config();
    cfg.beta = 0.7;
    for (const MetricsRecord& m : pretrain(cfg, UnlabeledView(d)).metrics) {
        EXPECT_NEAR(m.l_total, m.l_contrast + 0.7 * m.l_mixco, 1e-10);
    }
}

TEST(Pretrain, ZeroBetaMatchesMixcoDisabledBitwise) {
    const Dataset d = clusters(3, 16, 6, 4.0, 1.0, 3);
    RunConfig with_zero_beta = small_config();
    with_zero_beta.beta = 0.0;
    RunConfig plain = small_config();
    plain.mode = Mode::moco;
    const PretrainResult a = pretrain(with_zero_beta, UnlabeledView(d));
    const PretrainResult b = pretrain(plain, UnlabeledView(d));
    EXPECT_TRUE(bitwise_equal(a.encoder, b.encoder));
    EXPECT_TRUE(bitwise_equal(*a.moco, *b.moco));
    for (std::size_t e = 0; e < a.metrics.size(); ++e) {
        EXPECT_EQ(a.metrics[e].l_contrast, b.metrics[e].l_contrast);
        EXPECT_EQ(a.metrics[e].l_total, b.metrics[e].l_total);
    }
}

TEST(Pretrain, SameSeedSameTrajectory) {
    const Dataset d = clusters(3, 16, 6, 4.0, 1.0, 4);
    const PretrainResult a = pretrain(small_config(), UnlabeledView(d));
    const PretrainResult b = pretrain(small_config(), UnlabeledView(d));
    EXPECT_TRUE(bitwise_equal(*a.moco, *b.moco));
    for (std::size_t e = 0; e < a.metrics.size(); ++e)
        EXPECT_EQ(format_metrics_line(a.metrics[e]), format_metrics_line(b.metrics[e]));
}

TEST(Pretrain, InBatchModesTrainWithoutQueue) {
    const Dataset d = clusters(3, 16, 6, 4.0, 1.0, 5);
    for (Mode m : {Mode::simclr, Mode::simclr_mixco}) {
        RunConfig cfg = small_config();
        cfg.mode = m;
        cfg.queue_size = 0;
        const PretrainResult r = pretrain(cfg, UnlabeledView(d));
        EXPECT_FALSE(r.moco.has_value());
        EXPECT_FALSE(bitwise_equal(r.encoder, initial_encoder(cfg)));
        EXPECT_EQ(r.metrics.back().l_mixco > 0.0, m == Mode::simclr_mixco);
    }
}

TEST(Pretrain, WarmupSkipLeavesEncoderUntilQueueIsFull) {
    const Dataset d = clusters(3, 16, 6, 4.0, 1.0, 6);
    RunConfig cfg = small_config();
    cfg.epochs = 1;
    cfg.queue_size = 48;  // one epoch has 6 batches of 8: the queue fills exactly
    cfg.skip_warmup_loss = true;
    const PretrainResult r = pretrain(cfg, UnlabeledView(d));
    EXPECT_TRUE(bitwise_equal(r.encoder, initial_encoder(cfg)));
    EXPECT_TRUE(r.moco->queue_warm());
}

TEST(Pretrain, DivergenceNamesEpochAndBatch) {
    const Dataset d = clusters(3, 16, 6, 4.0, 1.0, 7);
    RunConfig cfg = small_config();
    cfg.lr = 1e300;
    try {
        (void)pretrain(cfg, UnlabeledView(d));
        FAIL() << "expected DivergenceError";
    } catch (const DivergenceError& e) {
        EXPECT_NE(std::string(e.what()).find("epoch 1, batch"), std::string::npos) << e.what();
    }
}

TEST(Pretrain, RejectsMismatchedData) {
    const Dataset d = clusters(3, 16, 5, 4.0, 1.0, 8);
    EXPECT_THROW((void)pretrain(small_config(), UnlabeledView(d)), ConfigError);
}

TEST(Pretrain, SmokeRunLossDecreases) {
    double first = 0.0, last = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Dataset d = clusters(10, 50, 20, 2.0, 1.0, 100 + seed);
        RunConfig cfg;
        cfg.epochs = 20;
        cfg.queue_size = 128;
        cfg.seed = seed;
        const PretrainResult r = pretrain(cfg, UnlabeledView(d));
        first += r.metrics.front().l_total;
        last += r.metrics.back().l_total;
    }
    EXPECT_LT(last, first);
}

TEST(LinearEval, IdentityEncoderOnSeparableClusters) {
    const Dataset d = clusters(5, 80, 8, 10.0, 0.3, 9);
    Rng rng(9);
    const auto [train, test] = split_train_test(d, 0.25, rng);
    const ProbeResult r = linear_eval(identity_encoder(8), train, test, ProbeConfig{});
    EXPECT_GE(r.accuracy, 0.95);
    EXPECT_TRUE(r.probe.weight.all_finite());
}

TEST(LinearEval, PermutedLabelsGiveChance) {
    Dataset d = clusters(10, 500, 20, 2.0, 1.0, 10);
    Rng rng(10);
    const auto perm = rng.permutation(d.size());
    std::vector<int> shuffled(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) shuffled[i] = d.labels[perm[i]];
    d.labels = shuffled;
    const auto [train, test] = split_train_test(d, 0.2, rng);
    Rng init(10);
    const std::vector<std::size_t> sizes{20, 64, 64};
    const ProbeResult r = linear_eval(init_encoder(sizes, init), train, test, ProbeConfig{});
    EXPECT_NEAR(r.accuracy, 0.1, 0.05);
}

TEST(LinearEval, ZeroEpochsReported) {
    const Dataset d = clusters(4, 30, 6, 4.0, 1.0, 11);
    Rng rng(11);
    const auto [train, test] = split_train_test(d, 0.25, rng);
    ProbeConfig cfg;
    cfg.epochs = 0;
    const ProbeResult r = linear_eval(identity_encoder(6), train, test, cfg);
    RecordProperty("zero_epoch_accuracy", std::to_string(r.accuracy));
    EXPECT_GE(r.accuracy, 0.0);
    EXPECT_LE(r.accuracy, 1.0);
}

TEST(LinearEval, MissingClassIsConfigError) {
    const Dataset d = clusters(3, 10, 4, 4.0, 1.0, 12);
    std::vector<std::size_t> first_two;
    for (std::size_t i = 0; i < 20; ++i) first_two.push_back(i);
    const Dataset train = subset(d, first_two);
    EXPECT_THROW((void)linear_eval(identity_encoder(4), train, d, ProbeConfig{}), ConfigError);
}

namespace {

// Three clusters in the plane with different sizes and spreads.
struct Toy {
    Tensor x;
    std::vector<int> labels;
};

Toy toy_set() {
    Toy t;
    t.x = Tensor::from_rows({{0, 0}, {1, 0}, {0, 1}, {5, 5}, {6, 5}, {5.5, 6.5}, {5, 4}, {-4, 3}, {-3, 3.5}});
    t.labels = {0, 0, 0, 1, 1, 1, 1, 2, 2};
    return t;
}

}  // namespace

TEST(DaviesBouldin, SingletonClustersAreZero) {
    const ClusterIndex r = davies_bouldin(Tensor::from_rows({{0, 0}, {3, 4}}), std::vector<int>{0, 1});
    EXPECT_EQ(r.value, 0.0);
    EXPECT_FALSE(r.degenerate);
}

TEST(DaviesBouldin, TranslationInvariant) {
    const Toy t = toy_set();
    Tensor moved = t.x;
    for (std::size_t i = 0; i < moved.rows(); ++i) {
        moved(i, 0) += 1000.0;
        moved(i, 1) -= 250.0;
    }
    EXPECT_NEAR(davies_bouldin(moved, t.labels).value, davies_bouldin(t.x, t.labels).value, 1e-9);
}

TEST(DaviesBouldin, MatchesScalarLoop) {
    const Toy t = toy_set();
    EXPECT_NEAR(davies_bouldin(t.x, t.labels).value, oracle::davies_bouldin(oracle::to_matrix(t.x), t.labels),
                1e-10);
}

TEST(DaviesBouldin, CoincidentCentroidsFlagged) {
    const ClusterIndex r =
        davies_bouldin(Tensor::from_rows({{1, 0}, {-1, 0}, {0, 1}, {0, -1}}), std::vector<int>{0, 0, 1, 1});
    EXPECT_TRUE(r.degenerate);
    EXPECT_TRUE(std::isinf(r.value));
}

TEST(CalinskiHarabasz, MatchesScalarLoop) {
    const Toy t = toy_set();
    EXPECT_NEAR(calinski_harabasz(t.x, t.labels).value,
                oracle::calinski_harabasz(oracle::to_matrix(t.x), t.labels), 1e-10);
}

TEST(CalinskiHarabasz, ScaleInvariant) {
    const Toy t = toy_set();
    Tensor scaled = t.x;
    for (double& v : scaled.values()) v *= 3.7;
    EXPECT_NEAR(calinski_harabasz(scaled, t.labels).value, calinski_harabasz(t.x, t.labels).value, 1e-10);
}

TEST(CalinskiHarabasz, ShuffledLabelsReported) {
    const Dataset d = clusters(5, 100, 8, 4.0, 1.0, 13);
    Rng rng(13);
    const auto perm = rng.permutation(d.size());
    std::vector<int> shuffled(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) shuffled[i] = d.labels[perm[i]];
    const double real = calinski_harabasz(d.features, d.labels).value;
    const double null = calinski_harabasz(d.features, shuffled).value;
    RecordProperty("shuffled_ch", std::to_string(null));
    EXPECT_LT(null, real);
}

TEST(CalinskiHarabasz, ZeroWithinDispersionFlagged) {
    const ClusterIndex r =
        calinski_harabasz(Tensor::from_rows({{0, 0}, {0, 0}, {1, 1}, {1, 1}}), std::vector<int>{0, 0, 1, 1});
    EXPECT_TRUE(r.degenerate);
    EXPECT_THROW((void)calinski_harabasz(Tensor::from_rows({{0, 0}, {1, 1}}), std::vector<int>{0, 1}),
                 ConfigError);
}

TEST(Embeddings, ExportRoundTrip) {
    const Dataset d = clusters(3, 7, 5, 4.0, 1.0, 14);
    Rng rng(14);
    const std::vector<std::size_t> sizes{5, 6, 4};
    const EncoderParams enc = init_encoder(sizes, rng);
    const fs::path dir = scratch_dir("embeddings");
    export_embeddings(enc, d, dir / "e.txt");

    std::ifstream in(dir / "e.txt");
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) ++lines;
    EXPECT_EQ(lines, d.size() + 1);

    const EmbeddingTable back = load_embeddings(dir / "e.txt");
    EXPECT_TRUE(bitwise_equal(back.embeddings, embed(enc, d.features)));
    EXPECT_EQ(back.labels, d.labels);
    fs::remove_all(dir);
}
