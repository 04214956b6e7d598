#include "lpn/lpn.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "oracle_helpers.hpp"

using namespace lpn;

namespace {

// errors recomputed from the planted secret: e_i = y_i xor <s, x_i>
BitVector recompute_errors(const Dataset& d, const BitVector& s) {
    BitVector e(d.size());
    for (size_t i = 0; i < d.size(); ++i)
        e.set(i, d.labels.get(i) ^ (dot_parity(d.inputs.row(i), s) != 0));
    return e;
}

}  // namespace

TEST(SampleSecret, ExactWeights) {
    Rng rng(1);
    EXPECT_EQ(sample_secret(20, 0.498, rng).popcount(), 9u);  // floor(20 * 0.498)
    EXPECT_EQ(sample_secret(10, 0.05, rng).popcount(), 0u);
    EXPECT_EQ(sample_secret(30, 0.2, rng).popcount(), 6u);
    for (int t = 0; t < 50; ++t) EXPECT_EQ(sample_secret_with_weight(40, 7, rng).popcount(), 7u);
}

TEST(OracleSampler, NoiselessLimitLabelsAreParities) {
    Rng rng(2);
    auto inst = LpnInstance::generate(12, 1e-9, rng);
    OracleSampler sampler(inst, 1000, rng.split("sampler"));
    Dataset d = sampler.get_data();
    for (size_t i = 0; i < d.size(); ++i)
        EXPECT_EQ(d.labels.get(i), dot_parity(d.inputs.row(i), inst.secret) != 0);
}

TEST(OracleSampler, ZeroSecretLabelMeanIsTau) {
    Rng rng(3);
    const double tau = 0.3;
    const size_t B = 100000;
    BitVector s(16);  // zero secret: parity identically 0
    auto d = make_noisy_dataset(s, B, tau, rng);
    const double mean = static_cast<double>(d.labels.popcount()) / B;
    const double sigma = std::sqrt(tau * (1 - tau) / B);
    EXPECT_NEAR(mean, tau, 3 * sigma);
}

TEST(OracleSampler, FlipRateMatchesTau) {
    Rng rng(4);
    auto inst = LpnInstance::generate(8, 0.25, rng);
    auto d = oracle_samples(inst, 100000, rng);
    const BitVector e = recompute_errors(d, inst.secret);
    const double rate = static_cast<double>(e.popcount()) / d.size();
    EXPECT_NEAR(rate, 0.25, 0.005);
}

TEST(OracleSampler, LawOfLargeNumbersAtMillion) {
    Rng rng(5);
    auto inst = LpnInstance::generate(10, 0.4, rng);
    auto d = oracle_samples(inst, 1000000, rng);
    const BitVector e = recompute_errors(d, inst.secret);
    const double rate = static_cast<double>(e.popcount()) / d.size();
    const double sigma = std::sqrt(0.4 * 0.6 / 1e6);
    EXPECT_NEAR(rate, 0.4, 3 * sigma);
}

TEST(BatchSampler, SingleRowRepeats) {
    Rng rng(6);
    Dataset src;
    src.inputs = BitMatrix(1, 5);
    src.inputs.set(0, 2, true);
    src.labels = BitVector(1);
    src.labels.set(0, true);
    src.meta = {5, 0.1, "test"};
    BatchSampler sampler(src, 7, rng);
    Dataset b = sampler.get_data();
    ASSERT_EQ(b.size(), 7u);
    for (size_t i = 0; i < 7; ++i) {
        EXPECT_EQ(b.inputs.row(i), src.inputs.row(0));
        EXPECT_TRUE(b.labels.get(i));
    }
}

TEST(BatchSampler, IndexFrequenciesUniform) {
    Rng rng(7);
    const size_t N = 16;
    Dataset src;
    src.inputs = BitMatrix(N, 8);
    src.labels = BitVector(N);
    src.meta = {8, 0.1, "test"};
    // encode the row index in the row bits so draws are identifiable
    for (size_t i = 0; i < N; ++i)
        for (int b = 0; b < 4; ++b) src.inputs.set(i, b, (i >> b) & 1);
    const size_t draws = 1000000;
    BatchSampler sampler(src, draws, rng);
    Dataset batch = sampler.get_data();
    std::vector<size_t> count(N, 0);
    for (size_t i = 0; i < draws; ++i) {
        size_t idx = 0;
        for (int b = 0; b < 4; ++b) idx |= static_cast<size_t>(batch.inputs.get(i, b)) << b;
        count[idx]++;
    }
    const double expect = static_cast<double>(draws) / N;
    const double sigma = std::sqrt(draws * (1.0 / N) * (1.0 - 1.0 / N));
    for (size_t i = 0; i < N; ++i) EXPECT_NEAR(count[i], expect, 3 * sigma) << "index " << i;
}

TEST(BatchSampler, EmptyDatasetThrows) {
    Rng rng(8);
    Dataset empty;
    empty.meta = {0, 0.1, "x"};
    EXPECT_THROW(BatchSampler(empty, 4, rng), std::invalid_argument);
}

TEST(SparseSecret, NoiselessOutputHasZeroEffectiveSecret) {
    Rng rng(9);
    auto s = sample_secret_with_weight(6, 3, rng);
    auto d = make_noisy_dataset(s, 30, 0.0, rng);
    auto t = sparse_secret_transform(d);
    ASSERT_TRUE(t.has_value());
    EXPECT_EQ(t->data.size(), 24u);
    EXPECT_EQ(t->block.consumed_rows.size(), 6u);
    // e1 = 0, e2 = 0: every output label must be 0
    EXPECT_EQ(t->data.labels.popcount(), 0u);
}

TEST(SparseSecret, OutputLabelsMatchErrorParity) {
    Rng rng(10);
    const size_t n = 4, m = 12;
    auto s = sample_secret_with_weight(n, 2, rng);
    auto d = make_noisy_dataset(s, m, 0.25, rng);
    auto t = sparse_secret_transform(d);
    ASSERT_TRUE(t.has_value());
    const BitVector e = recompute_errors(d, s);
    BitVector e1(n);
    for (size_t i = 0; i < n; ++i) e1.set(i, e.get(t->block.consumed_rows[i]));
    std::vector<bool> consumed(m, false);
    for (size_t r : t->block.consumed_rows) consumed[r] = true;
    size_t o = 0;
    for (size_t r = 0; r < m; ++r) {
        if (consumed[r]) continue;
        const bool expect = (dot_parity(e1, t->data.inputs.row(o)) != 0) ^ e.get(r);
        EXPECT_EQ(t->data.labels.get(o), expect) << "output row " << o;
        ++o;
    }
    EXPECT_EQ(o, t->data.size());
}

TEST(SparseSecret, ExhaustiveLabelCheckSmallDims) {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const size_t n = 2 + rng.below(7);  // n <= 8
        const size_t m = n + 1 + rng.below(30);
        auto s = BitVector::random(n, rng);
        auto d = make_noisy_dataset(s, m, 0.25, rng);
        auto t = sparse_secret_transform(d);
        if (!t) continue;  // rank-deficient draw
        const BitVector e = recompute_errors(d, s);
        BitVector e1(n);
        for (size_t i = 0; i < n; ++i) e1.set(i, e.get(t->block.consumed_rows[i]));
        std::vector<bool> consumed(m, false);
        for (size_t r : t->block.consumed_rows) consumed[r] = true;
        size_t o = 0;
        size_t mismatches = 0;
        for (size_t r = 0; r < m; ++r) {
            if (consumed[r]) continue;
            const bool expect = (dot_parity(e1, t->data.inputs.row(o)) != 0) ^ e.get(r);
            if (t->data.labels.get(o) != expect) ++mismatches;
            ++o;
        }
        EXPECT_EQ(mismatches, 0u);
    }
}

TEST(SparseSecret, RankDeficientFails) {
    Dataset d;
    d.inputs = BitMatrix(5, 3);  // all rows equal
    for (size_t r = 0; r < 5; ++r) d.inputs.set(r, 0, true);
    d.labels = BitVector(5);
    d.meta = {3, 0.1, "x"};
    EXPECT_FALSE(sparse_secret_transform(d).has_value());
}

TEST(RecoverOriginalSecret, NoiselessRoundTrip) {
    Rng rng(12);
    auto s = sample_secret_with_weight(6, 2, rng);
    auto d = make_noisy_dataset(s, 40, 0.0, rng);
    auto t = sparse_secret_transform(d);
    ASSERT_TRUE(t.has_value());
    // noiseless: e1 = 0
    EXPECT_EQ(recover_original_secret(t->block, BitVector(6)), s);
}

TEST(RecoverOriginalSecret, NoisyRoundTripWithTrueErrors) {
    Rng rng(13);
    const size_t n = 6;
    auto s = sample_secret(n, 0.2, rng);
    auto d = make_noisy_dataset(s, 40, 0.2, rng);
    auto t = sparse_secret_transform(d);
    ASSERT_TRUE(t.has_value());
    const BitVector e = recompute_errors(d, s);
    BitVector e1(n);
    for (size_t i = 0; i < n; ++i) e1.set(i, e.get(t->block.consumed_rows[i]));
    EXPECT_EQ(recover_original_secret(t->block, e1), s);
}

TEST(RecoverOriginalSecret, WrongErrorBitFailsVerification) {
    Rng rng(14);
    const size_t n = 6;
    auto s = sample_secret(n, 0.2, rng);
    auto d = make_noisy_dataset(s, 400, 0.2, rng);
    auto t = sparse_secret_transform(d);
    ASSERT_TRUE(t.has_value());
    const BitVector e = recompute_errors(d, s);
    BitVector e1(n);
    for (size_t i = 0; i < n; ++i) e1.set(i, e.get(t->block.consumed_rows[i]));
    e1.flip(3);
    const BitVector wrong = recover_original_secret(t->block, e1);
    EXPECT_NE(wrong, s);
    // hypothesis test on held-out rows: wrong secret disagrees at rate ~1/2,
    // far above tau = 0.2
    size_t errs = 0;
    for (size_t i = 0; i < d.size(); ++i)
        errs += d.labels.get(i) ^ (dot_parity(d.inputs.row(i), wrong) != 0);
    EXPECT_GT(static_cast<double>(errs) / d.size(), 0.35);
}

TEST(GuessTransform, GuessZeroKeepsLabels) {
    Rng rng(15);
    auto s = BitVector::random(7, rng);
    auto d = make_noisy_dataset(s, 50, 0.25, rng);
    auto g0 = guess_transform(d, 0);
    EXPECT_EQ(g0.dim(), 6u);
    EXPECT_EQ(g0.labels, d.labels);
    for (size_t i = 0; i < d.size(); ++i)
        for (size_t c = 0; c < 6; ++c) EXPECT_EQ(g0.inputs.get(i, c), d.inputs.get(i, c));
}

TEST(GuessTransform, LastBitZeroRowsUnchangedUnderGuessOne) {
    Rng rng(16);
    auto s = BitVector::random(5, rng);
    auto d = make_noisy_dataset(s, 64, 0.25, rng);
    auto g1 = guess_transform(d, 1);
    for (size_t i = 0; i < d.size(); ++i)
        if (!d.inputs.get(i, 4)) EXPECT_EQ(g1.labels.get(i), d.labels.get(i));
}

TEST(GuessTransform, ExhaustiveNoiselessSeparation) {
    // all 2^5 inputs, tau = 0: correct guess leaves truncated-parity labels,
    // wrong guess flips exactly the rows whose last bit is 1
    Rng rng(17);
    const size_t n = 5;
    auto s = BitVector::random(n, rng);
    Dataset d;
    d.inputs = BitMatrix(32, n);
    d.labels = BitVector(32);
    d.meta = {n, 0.0, "exhaustive"};
    for (size_t v = 0; v < 32; ++v) {
        for (size_t b = 0; b < n; ++b) d.inputs.set(v, b, (v >> b) & 1);
        d.labels.set(v, dot_parity(d.inputs.row(v), s) != 0);
    }
    BitVector strunc(n - 1);
    for (size_t b = 0; b + 1 < n; ++b) strunc.set(b, s.get(b));
    const int true_bit = s.get(n - 1) ? 1 : 0;
    auto good = guess_transform(d, true_bit);
    auto bad = guess_transform(d, 1 - true_bit);
    for (size_t v = 0; v < 32; ++v) {
        const bool trunc_parity = dot_parity(good.inputs.row(v), strunc) != 0;
        EXPECT_EQ(good.labels.get(v), trunc_parity);
        const bool last = d.inputs.get(v, n - 1);
        EXPECT_EQ(bad.labels.get(v) != trunc_parity, last);
    }
}

TEST(GuessTransform, CorrectGuessKeepsNoiseRate) {
    Rng rng(175);
    const size_t n = 9;
    const double tau = 0.2;
    const size_t m = 40000;
    auto s = BitVector::random(n, rng);
    auto d = make_noisy_dataset(s, m, tau, rng);
    auto g = guess_transform(d, s.get(n - 1) ? 1 : 0);
    BitVector strunc(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) strunc.set(i, s.get(i));
    const double sigma = std::sqrt(tau * (1 - tau) / m);
    EXPECT_NEAR(empirical_flip_rate(g, strunc), tau, 3 * sigma);
}

TEST(EnumerateSuffix, IdentityAtZero) {
    Rng rng(18);
    auto s = BitVector::random(6, rng);
    auto d = make_noisy_dataset(s, 20, 0.25, rng);
    auto same = enumerate_suffix(d, 0, {});
    EXPECT_EQ(same.inputs, d.inputs);
    EXPECT_EQ(same.labels, d.labels);
}

TEST(EnumerateSuffix, FullPeelToOneDim) {
    Rng rng(19);
    const size_t n = 5;
    auto s = BitVector::random(n, rng);
    auto d = make_noisy_dataset(s, 64, 0.0, rng);
    std::vector<int> suffix(n - 1);
    for (size_t i = 0; i < n - 1; ++i) suffix[i] = s.get(1 + i) ? 1 : 0;
    auto r = enumerate_suffix(d, n - 1, suffix);
    ASSERT_EQ(r.dim(), 1u);
    for (size_t i = 0; i < r.size(); ++i)
        EXPECT_EQ(r.labels.get(i), s.get(0) && r.inputs.get(i, 0));
}

TEST(EnumerateSuffix, EqualsComposition) {
    Rng rng(20);
    auto s = BitVector::random(8, rng);
    auto d = make_noisy_dataset(s, 40, 0.3, rng);
    std::vector<int> suffix = {1, 0, 1};
    auto a = enumerate_suffix(d, 3, suffix);
    auto b = guess_transform(guess_transform(guess_transform(d, 1), 0), 1);
    EXPECT_EQ(a.inputs, b.inputs);
    EXPECT_EQ(a.labels, b.labels);
}

TEST(CleanTestset, ZeroSecretAndParityCheck) {
    Rng rng(21);
    BitVector zero(9);
    auto d0 = make_clean_testset(zero, 100, rng);
    EXPECT_EQ(d0.labels.popcount(), 0u);
    auto s = BitVector::random(9, rng);
    auto d = make_clean_testset(s, 500, rng);
    for (size_t i = 0; i < d.size(); ++i)
        EXPECT_EQ(d.labels.get(i), dot_parity(s, d.inputs.row(i)) != 0);
    EXPECT_EQ(kDefaultCleanTestSize, 131072u);
}

TEST(DatasetFile, RoundTripBitExact) {
    Rng rng(22);
    auto s = BitVector::random(13, rng);
    auto d = make_noisy_dataset(s, 77, 0.3, rng);
    d.meta.tau = 0.3;
    const std::string bytes = serialize_dataset(d, s);
    auto f = deserialize_dataset(bytes);
    EXPECT_EQ(f.data.inputs, d.inputs);
    EXPECT_EQ(f.data.labels, d.labels);
    EXPECT_EQ(f.data.meta.n, 13u);
    EXPECT_DOUBLE_EQ(f.data.meta.tau, 0.3);
    ASSERT_TRUE(f.secret.has_value());
    EXPECT_EQ(*f.secret, s);
    EXPECT_EQ(serialize_dataset(f.data, f.secret), bytes);

    // public file: no secret
    auto pub = deserialize_dataset(serialize_dataset(d, std::nullopt));
    EXPECT_FALSE(pub.secret.has_value());
    EXPECT_EQ(pub.data.labels, d.labels);
}

TEST(DatasetFile, SizeArithmetic) {
    Rng rng(23);
    auto s = BitVector::random(20, rng);
    auto d = make_noisy_dataset(s, 1000, 0.498, rng);
    // 4 magic + 4 n + 8 m + 8 tau + 1 flag + 3 secret + 1000*3 rows + 125 labels
    EXPECT_EQ(serialize_dataset(d, s).size(), 4u + 4 + 8 + 8 + 1 + 3 + 3000 + 125);
}

TEST(DatasetFile, SeededRunsAreByteIdentical) {
    auto make = [] {
        Rng rng(4242);
        auto inst = LpnInstance::generate(18, 0.25, rng);
        auto d = oracle_samples(inst, 333, rng);
        return serialize_dataset(d, inst.secret);
    };
    EXPECT_EQ(make(), make());
}

TEST(DatasetFile, FileIo) {
    Rng rng(24);
    auto s = BitVector::random(10, rng);
    auto d = make_noisy_dataset(s, 64, 0.25, rng);
    const std::string path = std::filesystem::temp_directory_path() / "lpn_test_io.bin";
    write_dataset_file(path, d, s);
    auto f = read_dataset_file(path);
    EXPECT_EQ(f.data.inputs, d.inputs);
    EXPECT_EQ(f.data.labels, d.labels);
    std::remove(path.c_str());
}
