#include "lpn/pipelines.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace lpn;

TEST(RestrictedGamma, SpecValue) {
    // 1/2 + sqrt(ln 20 / 2^17)
    EXPECT_NEAR(restricted_gamma(131072), 0.50478, 1e-5);
}

TEST(HalfLog2Grid, GeometricMidpoints) {
    EXPECT_EQ(half_log2_to_samples(7.0), 128u);
    EXPECT_EQ(half_log2_to_samples(10.5), 1448u);  // round(2^10.5)
    EXPECT_EQ(half_log2_to_samples(16.0), 65536u);
}

TEST(ProfileValidation, RejectsBadProfiles) {
    HyperProfile p = abundant_default();
    p.learning_rate = 0;
    EXPECT_THROW(validate(p), std::invalid_argument);
    p = abundant_default();
    p.loss = Loss::ZeroOne;
    EXPECT_THROW(validate(p), std::invalid_argument);
    p = abundant_default();
    p.width = 0;
    EXPECT_THROW(validate(p), std::invalid_argument);
}

TEST(SolveAbundant, NoiselessToyRecoversExactSecret) {
    Rng rng(101);
    auto inst = LpnInstance::generate(8, 1e-9, rng.split("instance"));
    HyperProfile p = abundant_default();
    p.width = 64;
    p.batch = 256;
    p.learning_rate = 0.01;
    p.stop = StopSpec::accuracy(0.999, 50);
    AbundantOptions options;
    options.eval_test_size = 2048;
    options.verify_size = 2048;
    options.max_steps = 8000;
    auto res = solve_abundant(inst, p, rng.split("solve"), options);
    EXPECT_TRUE(res.success);
    EXPECT_EQ(res.secret, inst.secret);
    EXPECT_DOUBLE_EQ(res.verification_accuracy, 1.0);
    EXPECT_GT(res.train_steps, 0u);
}

TEST(SolveAbundant, TimeStopWithoutLearningIsFailureNotError) {
    Rng rng(102);
    auto inst = LpnInstance::generate(14, 0.49, rng.split("instance"));
    HyperProfile p = abundant_default();
    p.width = 16;
    p.batch = 64;
    p.stop = StopSpec::time(0.2);  // far too short to learn anything
    AbundantOptions options;
    options.eval_test_size = 1024;
    options.verify_size = 1024;
    auto res = solve_abundant(inst, p, rng.split("solve"), options);
    EXPECT_FALSE(res.success);
    EXPECT_EQ(res.detail, "time-limit");
}

TEST(TuneAbundant, SinglaProfileAndMinOverRepeats) {
    std::vector<HyperProfile> profiles = {abundant_default()};
    TuneAbundantConfig cfg;
    cfg.repeat = 3;
    int calls = 0;
    auto res = tune_abundant(profiles, cfg, Rng(1),
                             [&](const HyperProfile&, int trial, Rng) {
                                 ++calls;
                                 const double times[] = {5.0, 2.0, 7.0};
                                 return times[trial];
                             });
    EXPECT_EQ(res.best_index, 0u);
    EXPECT_EQ(calls, 3);
    EXPECT_DOUBLE_EQ(res.seconds[0], 2.0);  // min, not mean
}

TEST(TuneAbundant, PicksArgminProfileAndRecordsInfinity) {
    std::vector<HyperProfile> profiles(3, abundant_default());
    profiles[0].learning_rate = 1e-4;
    profiles[1].learning_rate = 1e-3;
    profiles[2].learning_rate = 1e-2;
    TuneAbundantConfig cfg;
    cfg.repeat = 2;
    auto res = tune_abundant(profiles, cfg, Rng(2),
                             [&](const HyperProfile& p, int, Rng) {
                                 if (p.learning_rate == 1e-2)
                                     return std::numeric_limits<double>::infinity();
                                 return p.learning_rate == 1e-3 ? 3.0 : 9.0;
                             });
    EXPECT_EQ(res.best_index, 1u);
    EXPECT_TRUE(std::isinf(res.seconds[2]));
}

TEST(TuneRestricted, BinarySearchFindsExactThreshold) {
    std::vector<size_t> grid = {128, 256, 512, 1024, 2048};
    std::vector<HyperProfile> profiles = {restricted_default()};
    TuneRestrictedConfig cfg;
    cfg.repeat = 3;
    auto res = tune_restricted(profiles, grid, cfg, Rng(3),
                               [&](const HyperProfile&, size_t m, int, Rng) { return m >= 512; });
    ASSERT_TRUE(res.min_samples[0].has_value());
    EXPECT_EQ(*res.min_samples[0], 512u);
}

TEST(TuneRestricted, SentinelWhenGridTooSmall) {
    std::vector<size_t> grid = {128, 256};
    std::vector<HyperProfile> profiles = {restricted_default()};
    TuneRestrictedConfig cfg;
    cfg.repeat = 3;
    auto res = tune_restricted(profiles, grid, cfg, Rng(4),
                               [&](const HyperProfile&, size_t, int, Rng) { return false; });
    EXPECT_FALSE(res.min_samples[0].has_value());
}

TEST(TuneRestricted, SingleCellGridEvaluatesOnlyIt) {
    std::vector<size_t> grid = {4096};
    std::vector<HyperProfile> profiles = {restricted_default()};
    TuneRestrictedConfig cfg;
    cfg.repeat = 3;
    int calls = 0;
    auto res = tune_restricted(profiles, grid, cfg, Rng(5),
                               [&](const HyperProfile&, size_t m, int, Rng) {
                                   ++calls;
                                   EXPECT_EQ(m, 4096u);
                                   return true;
                               });
    EXPECT_EQ(calls, 3);
    EXPECT_EQ(*res.min_samples[0], 4096u);
}

TEST(TuneRestricted, MajorityBarIsTwoThirds) {
    // repeat=3 -> bar = 2: exactly 2 successes must pass, 1 must not
    std::vector<size_t> grid = {100, 200};
    std::vector<HyperProfile> profiles = {restricted_default()};
    TuneRestrictedConfig cfg;
    cfg.repeat = 3;
    auto res = tune_restricted(profiles, grid, cfg, Rng(6),
                               [&](const HyperProfile&, size_t m, int trial, Rng) {
                                   if (m == 100) return trial == 0;  // 1 of 3
                                   return trial <= 1;                // 2 of 3
                               });
    ASSERT_TRUE(res.min_samples[0].has_value());
    EXPECT_EQ(*res.min_samples[0], 200u);
}

TEST(SolveRestricted, NoiselessSeparationReturnsTrueLastBit) {
    Rng rng(103);
    const size_t n = 6;
    Rng srng = rng.split("secret");
    auto s = BitVector::random(n, srng);
    Rng drng = rng.split("data");
    auto data = make_noisy_dataset(s, 256, 0.0, drng);
    HyperProfile p = restricted_default();
    p.width = 64;
    p.learning_rate = 3e-3;
    p.weight_decay = 1e-3;
    p.stop = StopSpec::step(4000);
    RestrictedOptions options;
    options.repeat = 4;
    options.eval_interval = 100;
    auto res = solve_restricted(data, p, rng.split("solve"), options);
    ASSERT_TRUE(res.found);
    EXPECT_EQ(res.guess, s.get(n - 1) ? 1 : 0);
    EXPECT_GT(res.best_accuracy, res.gamma);
    EXPECT_GT(res.gamma, 0.6);  // 1/2 + sqrt(ln 20 / 256)
}

TEST(SolveRestricted, DegenerateDatasetIsInconclusive) {
    Rng rng(104);
    auto s = BitVector::random(5, rng);
    auto data = make_noisy_dataset(s, 3, 0.1, rng);
    auto res = solve_restricted(data, restricted_default(), rng);
    EXPECT_FALSE(res.found);
}

TEST(SolveModerate, SmallScaleEndToEnd) {
    Rng rng(105);
    const uint32_t n = 10;
    const double tau = 0.40;
    auto inst = LpnInstance::generate(n, tau, rng.split("instance"));
    Rng drng = rng.split("data");
    auto data = oracle_samples(inst, 30000, drng);
    HyperProfile p = moderate_default();
    p.width = 64;
    p.batch = 4096;
    p.stop = StopSpec::step(400);
    ModerateOptions options;
    options.m_prime = 8192;
    options.pool_size = 4096;
    options.test_size = 4096;
    options.tau_prime = 0.45;
    options.max_gauss_iterations = 4000;
    options.record_trace = false;
    auto res = solve_moderate(data, p, rng.split("solve"), options);
    EXPECT_EQ(res.m1, 2000u);  // 2n/(1/2-tau)^2
    ASSERT_TRUE(res.solve.success);
    EXPECT_EQ(res.solve.secret, inst.secret);
    EXPECT_GE(res.solve.verification_accuracy, res.accept_threshold);
    // rebalance keeps the boosting labels balanced
    EXPECT_NEAR(res.boosting_label_mean, 0.5, 3 * std::sqrt(0.25 / 8192));
}

TEST(SolveModerate, BoostingFlipRateMatchesModelCleanError) {
    Rng rng(115);
    const uint32_t n = 10;
    auto inst = LpnInstance::generate(n, 0.40, rng.split("instance"));
    Rng drng = rng.split("data");
    auto data = oracle_samples(inst, 30000, drng);
    HyperProfile p = moderate_default();
    p.width = 64;
    p.batch = 4096;
    p.stop = StopSpec::step(300);
    ModerateOptions options;
    options.m_prime = 16384;
    options.pool_size = 8192;
    options.test_size = 8192;
    options.tau_prime = 0.45;
    options.max_gauss_iterations = 500;
    options.keep_boosting_set = true;
    options.record_trace = false;
    auto res = solve_moderate(data, p, rng.split("solve"), options);
    // flip rate of the boosting labels against the extended secret (s,1)
    // equals the model's clean error rate
    BitVector ext(n + 1);
    for (size_t i = 0; i < n; ++i) ext.set(i, inst.secret.get(i));
    ext.set(n, true);
    const double flip = empirical_flip_rate(*res.boosting_set, ext);
    Rng crng = rng.split("clean");
    auto clean = make_clean_testset(inst.secret, 16384, crng);
    const double err = 1.0 - evaluate_accuracy(res.model, clean);
    const double sigma = std::sqrt(std::max(err * (1 - err), 1e-6) / 16384);
    EXPECT_NEAR(flip, err, 4 * sigma);
}

TEST(SolveAbundant, NoiselessRecoveryAcrossSeeds) {
    int solved = 0;
    for (uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(derive_seed(900, seed));
        auto inst = LpnInstance::generate(8 + seed % 5, 1e-9, rng.split("instance"));
        HyperProfile p = abundant_default();
        p.width = 64;
        p.batch = 256;
        p.learning_rate = 0.01;
        p.stop = StopSpec::accuracy(0.999, 50);
        AbundantOptions options;
        options.eval_test_size = 2048;
        options.verify_size = 2048;
        options.max_steps = 10000;
        auto res = solve_abundant(inst, p, rng.split("solve"), options);
        solved += res.success && res.secret == inst.secret;
    }
    EXPECT_GE(solved, 9);
}

TEST(SolveModerate, UntrainedModelFailsButStaysBalanced) {
    Rng rng(106);
    const uint32_t n = 10;
    auto inst = LpnInstance::generate(n, 0.40, rng.split("instance"));
    Rng drng = rng.split("data");
    auto data = oracle_samples(inst, 12000, drng);
    HyperProfile p = moderate_default();
    p.width = 32;
    p.batch = 1024;
    p.stop = StopSpec::step(0);  // no training at all
    ModerateOptions options;
    options.m_prime = 8192;
    options.pool_size = 4096;
    options.test_size = 4096;
    options.tau_prime = 0.45;
    options.max_gauss_iterations = 500;
    options.record_trace = false;
    auto res = solve_moderate(data, p, rng.split("solve"), options);
    EXPECT_FALSE(res.solve.success);
    // the appended uniform bit keeps labels balanced no matter how biased the
    // (untrained) model is
    EXPECT_NEAR(res.boosting_label_mean, 0.5, 3 * std::sqrt(0.25 / 8192));
}

TEST(SolveModerate, RejectsDatasetSmallerThanTestSplit) {
    Rng rng(107);
    auto inst = LpnInstance::generate(10, 0.40, rng.split("instance"));
    Rng drng = rng.split("data");
    auto data = oracle_samples(inst, 1500, drng);  // below m1 = 2000
    ModerateOptions options;
    options.m_prime = 4096;
    options.pool_size = 2048;
    options.test_size = 2048;
    EXPECT_THROW(solve_moderate(data, moderate_default(), rng, options), std::invalid_argument);
}

namespace {

InnerSolver small_gauss_inner() {
    PooledGaussConfig cfg;
    cfg.pool_size = 1024;
    cfg.test_size = 1024;
    cfg.tau_prime = 0.2;
    cfg.max_iterations = 300;
    return make_gauss_inner(cfg);
}

}  // namespace

TEST(SolveHybrid, NoiselessGaussInnerRecoversSecret) {
    Rng rng(108);
    const size_t n = 12, k = 4;
    Rng srng = rng.split("secret");
    auto s = BitVector::random(n, srng);
    Rng drng = rng.split("data");
    auto data = make_noisy_dataset(s, 8192, 0.0, drng);
    auto res = solve_hybrid(data, k, small_gauss_inner(), rng.split("solve"));
    ASSERT_TRUE(res.solve.success);
    EXPECT_EQ(res.solve.secret, s);
    uint64_t true_suffix = 0;
    for (size_t i = 0; i < k; ++i) true_suffix |= static_cast<uint64_t>(s.get(n - k + i)) << i;
    EXPECT_EQ(*res.winning_suffix, true_suffix);
    EXPECT_DOUBLE_EQ(res.solve.verification_accuracy, 1.0);
}

TEST(SolveHybrid, ZeroWidthEqualsInnerSolver) {
    Rng rng(109);
    Rng srng = rng.split("secret");
    auto s = BitVector::random(10, srng);
    Rng drng = rng.split("data");
    auto data = make_noisy_dataset(s, 8192, 0.0, drng);
    auto res = solve_hybrid(data, 0, small_gauss_inner(), rng.split("solve"));
    ASSERT_TRUE(res.solve.success);
    EXPECT_EQ(res.solve.secret, s);
    EXPECT_EQ(res.suffixes_tried, 1u);
}

TEST(SolveHybrid, ForcedCorrectSuffixMatchesInnerOnReduced) {
    Rng rng(110);
    const size_t n = 12, k = 4;
    Rng srng = rng.split("secret");
    auto s = BitVector::random(n, srng);
    Rng drng = rng.split("data");
    auto data = make_noisy_dataset(s, 8192, 0.0, drng);
    uint64_t true_suffix = 0;
    for (size_t i = 0; i < k; ++i) true_suffix |= static_cast<uint64_t>(s.get(n - k + i)) << i;

    HybridOptions options;
    options.forced_first_suffix = true_suffix;
    auto res = solve_hybrid(data, k, small_gauss_inner(), rng.split("solve"), options);
    ASSERT_TRUE(res.solve.success);
    EXPECT_EQ(res.suffixes_tried, 1u);

    // the inner solver alone on the correctly reduced instance returns the
    // same low bits the hybrid run embedded
    const size_t holdout = std::min<size_t>(65536, data.size() / 4);
    Dataset part;
    part.inputs = BitMatrix(data.size() - holdout, n);
    part.labels = BitVector(data.size() - holdout);
    part.meta = data.meta;
    for (size_t i = 0; i < part.size(); ++i) {
        part.inputs.set_row(i, data.inputs.row(i));
        part.labels.set(i, data.labels.get(i));
    }
    auto reduced = enumerate_suffix(part, k, suffix_bits(true_suffix, k));
    auto low = small_gauss_inner()(reduced, rng.split("solve").split("suffix", true_suffix));
    ASSERT_TRUE(low.has_value());
    for (size_t i = 0; i < n - k; ++i) EXPECT_EQ(res.solve.secret.get(i), low->get(i));
}

TEST(SolveHybrid, GuardsSuffixWidth) {
    Rng rng(111);
    auto s = BitVector::random(8, rng);
    auto data = make_noisy_dataset(s, 1024, 0.0, rng);
    EXPECT_THROW(solve_hybrid(data, 25, small_gauss_inner(), Rng(1)), std::invalid_argument);
    EXPECT_THROW(solve_hybrid(data, 8, small_gauss_inner(), Rng(1)), std::invalid_argument);
}
