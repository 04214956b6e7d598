#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpn/lpn.hpp"

namespace lpn {

struct HypothesisTestResult {
    bool accept = false;
    double error_rate = 0.0;
};

// Empirical disagreement rate of the candidate's parities against the labels;
// accept iff the rate is at most tau_prime.
inline HypothesisTestResult hypothesis_test(const BitVector& candidate, const Dataset& data,
                                            double tau_prime) {
    const double rate = empirical_flip_rate(data, candidate);
    return {rate <= tau_prime, rate};
}

// Acceptance bar for the noisy held-out test of the moderate pipeline:
// 1 - tau - sqrt(3 (1/2 - tau) n / m1).
inline double moderate_accept_threshold(size_t n, double tau, size_t m1) {
    if (m1 == 0) throw std::invalid_argument("moderate_accept_threshold: m1 must be positive");
    return 1.0 - tau -
           std::sqrt(3.0 * (0.5 - tau) * static_cast<double>(n) / static_cast<double>(m1));
}

struct PooledGaussConfig {
    size_t pool_size = 131072;  // rows the square systems are drawn from
    size_t test_size = 100000;  // rows reserved for hypothesis testing
    double tau_prime = 0.45;    // empirical-error acceptance threshold
    size_t max_iterations = 200000;  // total draw attempts, singular ones included
};

struct PooledGaussResult {
    std::optional<BitVector> secret;
    size_t candidate_draws = 0;  // non-singular systems that produced a candidate
    size_t singular_draws = 0;
    double error_rate = std::numeric_limits<double>::quiet_NaN();  // of the accepted candidate
};

// Guess-then-Gaussian-elimination: draw n pool rows, solve the square GF(2)
// system, hypothesis-test the candidate, repeat. Singular draws are resampled;
// they count against max_iterations but not against the candidate count. A
// cheap screening test on a fixed prefix of the test rows filters the ~0.5
// error rate candidates before the full scan; its cutoff sits several sigma
// above tau_prime so acceptable candidates practically never get screened out.
// The final accept decision is always the full-test empirical rate.
inline PooledGaussResult pooled_gauss(const Dataset& pool, const PooledGaussConfig& cfg, Rng& rng) {
    const size_t n = pool.dim();
    if (cfg.pool_size < n) throw std::invalid_argument("pooled_gauss: pool smaller than dimension");
    if (pool.size() < cfg.pool_size + cfg.test_size)
        throw std::invalid_argument("pooled_gauss: dataset smaller than pool + test split");
    if (!(cfg.tau_prime > 0.0 && cfg.tau_prime < 0.5))
        throw std::invalid_argument("pooled_gauss: tau_prime must be in (0, 0.5)");

    Dataset test;
    test.inputs = BitMatrix(cfg.test_size, n);
    test.labels = BitVector(cfg.test_size);
    test.meta = pool.meta;
    for (size_t i = 0; i < cfg.test_size; ++i) {
        test.inputs.set_row(i, pool.inputs.row(cfg.pool_size + i));
        test.labels.set(i, pool.labels.get(cfg.pool_size + i));
    }
    const size_t screen_size = std::min<size_t>(4096, cfg.test_size);
    const double screen_sigma = std::sqrt(0.25 / static_cast<double>(screen_size));
    const double screen_cutoff =
        cfg.tau_prime + std::max(3.0 * screen_sigma, (0.5 - cfg.tau_prime) / 2.0);
    // a cutoff the screen cannot separate from the 0.5 noise floor would only
    // add bias, so fall back to full tests
    const bool use_screen = screen_cutoff <= 0.5 - 2.0 * screen_sigma;

    PooledGaussResult res;
    std::vector<uint32_t> idx(cfg.pool_size);
    std::iota(idx.begin(), idx.end(), 0u);
    BitMatrix system(n, n);
    BitVector rhs(n);

    for (size_t it = 0; it < cfg.max_iterations; ++it) {
        // n distinct pool rows by partial shuffle
        for (size_t i = 0; i < n; ++i) {
            const size_t j = i + static_cast<size_t>(rng.below(cfg.pool_size - i));
            std::swap(idx[i], idx[j]);
            system.set_row(i, pool.inputs.row(idx[i]));
            rhs.set(i, pool.labels.get(idx[i]));
        }
        auto candidate = solve_linear_system_checked(system, rhs);
        if (!candidate) {
            ++res.singular_draws;
            continue;
        }
        ++res.candidate_draws;

        if (use_screen) {
            size_t screen_errs = 0;
            for (size_t i = 0; i < screen_size; ++i)
                screen_errs += test.labels.get(i) ^
                               (parity_of_and(test.inputs.row_words(i), candidate->words()) != 0);
            if (static_cast<double>(screen_errs) / screen_size > screen_cutoff) continue;
        }

        const auto ht = hypothesis_test(*candidate, test, cfg.tau_prime);
        if (ht.accept) {
            res.secret = std::move(*candidate);
            res.error_rate = ht.error_rate;
            return res;
        }
    }
    return res;  // not found
}

struct BkwConfig {
    size_t block_width = 0;  // b: coordinates zeroed per round
    size_t rounds = 0;       // a
    size_t max_block_width = 28;  // guard for the 2^b bucket table
};

class BkwStarvationError : public std::runtime_error {
public:
    explicit BkwStarvationError(size_t round)
        : std::runtime_error("bkw_reduce: no samples survive round " + std::to_string(round)),
          round_(round) {}
    size_t round() const { return round_; }

private:
    size_t round_;
};

inline uint64_t extract_bits(std::span<const uint64_t> words, size_t start, size_t width) {
    const size_t w = start >> 6, off = start & 63;
    uint64_t v = words[w] >> off;
    if (off + width > 64) v |= words[w + 1] << (64 - off);
    return width >= 64 ? v : (v & ((uint64_t(1) << width) - 1));
}

// XOR of 2^rounds independent Bernoulli(tau) errors: (1 - (1-2 tau)^(2^a)) / 2.
inline double predicted_bkw_noise(double tau, size_t rounds) {
    if (!(tau > 0.0 && tau < 0.5)) throw std::domain_error("predicted_bkw_noise: tau in (0, 0.5)");
    return (1.0 - std::pow(1.0 - 2.0 * tau, std::pow(2.0, static_cast<double>(rounds)))) / 2.0;
}

// Block-xor reduction. Round r buckets the samples by the current top b
// coordinates, XORs everything in a bucket with the first sample that landed
// there, and drops that representative. After `rounds` rounds the zeroed
// a*b coordinates are truncated away.
inline Dataset bkw_reduce(const Dataset& in, const BkwConfig& cfg) {
    const size_t n = in.dim();
    if (cfg.block_width < 1) throw std::invalid_argument("bkw_reduce: block width must be >= 1");
    if (cfg.block_width > cfg.max_block_width)
        throw std::invalid_argument("bkw_reduce: block width exceeds bucket-table guard");
    if (cfg.rounds * cfg.block_width > n)
        throw std::invalid_argument("bkw_reduce: a*b exceeds the dimension");

    BitMatrix cur = in.inputs;
    BitVector labels = in.labels;
    const size_t b = cfg.block_width;

    for (size_t round = 1; round <= cfg.rounds; ++round) {
        const size_t key_start = n - round * b;
        const size_t m = cur.rows();
        std::vector<int64_t> rep(size_t(1) << b, -1);
        BitMatrix next(m, n);  // at most m survivors, shrink after
        BitVector next_labels(m);
        size_t out = 0;
        for (size_t i = 0; i < m; ++i) {
            const uint64_t key = extract_bits(cur.row_words(i), key_start, b);
            if (rep[key] < 0) {
                rep[key] = static_cast<int64_t>(i);
                continue;
            }
            const auto r = cur.row_words(static_cast<size_t>(rep[key]));
            auto src = cur.row_words(i);
            auto dst = next.row_words(out);
            for (size_t w = 0; w < cur.words_per_row(); ++w) dst[w] = src[w] ^ r[w];
            next_labels.set(out, labels.get(i) ^ labels.get(static_cast<size_t>(rep[key])));
            ++out;
        }
        if (out == 0) throw BkwStarvationError(round);
        BitMatrix shrunk(out, n);
        BitVector shrunk_labels(out);
        for (size_t i = 0; i < out; ++i) {
            shrunk.set_row(i, next.row(i));
            shrunk_labels.set(i, next_labels.get(i));
        }
        cur = std::move(shrunk);
        labels = std::move(shrunk_labels);
    }

    const size_t out_dim = n - cfg.rounds * b;
    Dataset out;
    out.inputs = BitMatrix(cur.rows(), out_dim);
    for (size_t i = 0; i < cur.rows(); ++i) {
        auto src = cur.row_words(i);
        auto dst = out.inputs.row_words(i);
        for (size_t w = 0; w < out.inputs.words_per_row(); ++w) dst[w] = src[w];
        out.inputs.mask_row_tail(i);
    }
    out.labels = std::move(labels);
    out.meta.n = static_cast<uint32_t>(out_dim);
    out.meta.tau = in.meta.tau > 0 && in.meta.tau < 0.5 && cfg.rounds > 0
                       ? predicted_bkw_noise(in.meta.tau, cfg.rounds)
                       : in.meta.tau;
    out.meta.source = "bkw";
    return out;
}

}  // namespace lpn
