#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lpn/gf2.hpp"
#include "lpn/rng.hpp"

namespace lpn {

struct DatasetMeta {
    uint32_t n = 0;
    double tau = 0.0;
    std::string source;
};

// Paired samples: row i of inputs with bit i of labels.
struct Dataset {
    BitMatrix inputs;
    BitVector labels;
    DatasetMeta meta;

    size_t size() const { return inputs.rows(); }
    size_t dim() const { return inputs.cols(); }
};

inline void check_dataset(const Dataset& d) {
    if (d.inputs.rows() != d.labels.size())
        throw std::invalid_argument("dataset: row/label count mismatch");
    if (d.meta.n != d.inputs.cols()) throw std::invalid_argument("dataset: meta.n mismatch");
}

// Uniform secret of exact Hamming weight (floor(n*tau) by default, per the
// sparse-secret convention). Weight positions are a partial Fisher-Yates
// shuffle of [0, n).
inline BitVector sample_secret_with_weight(size_t n, size_t weight, Rng& rng) {
    if (weight > n) throw std::invalid_argument("sample_secret: weight > n");
    std::vector<uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    BitVector s(n);
    for (size_t i = 0; i < weight; ++i) {
        const size_t j = i + static_cast<size_t>(rng.below(n - i));
        std::swap(idx[i], idx[j]);
        s.set(idx[i], true);
    }
    return s;
}

inline size_t default_secret_weight(size_t n, double tau) {
    return static_cast<size_t>(std::floor(static_cast<double>(n) * tau));
}

inline BitVector sample_secret(size_t n, double tau, Rng& rng) {
    return sample_secret_with_weight(n, default_secret_weight(n, tau), rng);
}

// A problem instance owned by the harness: it knows the planted secret and
// can answer oracle queries. tau must lie in (0, 1/2); the noiseless limit is
// reached by passing a tiny tau.
struct LpnInstance {
    uint32_t n = 0;
    double tau = 0.0;
    BitVector secret;
    uint64_t seed = 0;

    static LpnInstance generate(uint32_t n, double tau, Rng rng) {
        if (!(tau > 0.0 && tau < 0.5)) throw std::domain_error("LpnInstance: tau must be in (0, 0.5)");
        LpnInstance inst;
        inst.n = n;
        inst.tau = tau;
        inst.seed = rng.seed();
        Rng srng = rng.split("secret");
        inst.secret = sample_secret(n, tau, srng);
        return inst;
    }

    static LpnInstance generate_with_weight(uint32_t n, double tau, size_t weight, Rng rng) {
        if (!(tau > 0.0 && tau < 0.5)) throw std::domain_error("LpnInstance: tau must be in (0, 0.5)");
        LpnInstance inst;
        inst.n = n;
        inst.tau = tau;
        inst.seed = rng.seed();
        Rng srng = rng.split("secret");
        inst.secret = sample_secret_with_weight(n, weight, srng);
        return inst;
    }
};

inline void fill_random_row(BitMatrix& m, size_t r, Rng& rng) {
    auto w = m.row_words(r);
    for (auto& x : w) x = rng.next_u64();
    m.mask_row_tail(r);
}

// Fraction of labels disagreeing with the parity under the given secret.
inline double empirical_flip_rate(const Dataset& d, const BitVector& secret) {
    if (d.size() == 0) throw std::invalid_argument("empirical_flip_rate: empty dataset");
    size_t flips = 0;
    for (size_t i = 0; i < d.size(); ++i)
        flips += d.labels.get(i) ^ (parity_of_and(d.inputs.row_words(i), secret.words()) != 0);
    return static_cast<double>(flips) / static_cast<double>(d.size());
}

// Uniform inputs, labels <s,a> xor Bern(tau). tau = 0 gives exact parities.
inline Dataset make_noisy_dataset(const BitVector& secret, size_t m, double tau, Rng& rng) {
    Dataset d;
    const uint32_t n = static_cast<uint32_t>(secret.size());
    d.inputs = BitMatrix(m, n);
    d.labels = BitVector(m);
    d.meta = {n, tau, "sampled"};
    for (size_t i = 0; i < m; ++i) {
        fill_random_row(d.inputs, i, rng);
        bool y = parity_of_and(d.inputs.row_words(i), secret.words()) != 0;
        if (tau > 0.0 && rng.bernoulli(tau)) y = !y;
        d.labels.set(i, y);
    }
    return d;
}

// Draws m fresh oracle samples from a planted instance.
inline Dataset oracle_samples(const LpnInstance& inst, size_t m, Rng& rng) {
    Dataset d = make_noisy_dataset(inst.secret, m, inst.tau, rng);
    d.meta.source = "oracle";
    return d;
}

// Noiseless evaluation data: labels are exact parities. Default size follows
// the meta-tuner's fixed test-set size.
constexpr size_t kDefaultCleanTestSize = 131072;

inline Dataset make_clean_testset(const BitVector& secret, size_t count, Rng& rng) {
    Dataset d = make_noisy_dataset(secret, count, 0.0, rng);
    d.meta.source = "clean";
    return d;
}

// Batch source for the training loop. The oracle variant draws fresh samples
// each call; the batch variant resamples rows of a fixed dataset i.i.d. with
// replacement. Holds mutable RNG state, so confine one sampler to one worker.
class Sampler {
public:
    virtual ~Sampler() = default;
    virtual void get_data(Dataset& out) = 0;
    virtual size_t batch_size() const = 0;
    Dataset get_data() {
        Dataset d;
        get_data(d);
        return d;
    }
};

class OracleSampler final : public Sampler {
public:
    OracleSampler(LpnInstance inst, size_t batch, Rng rng)
        : inst_(std::move(inst)), batch_(batch), rng_(rng) {
        if (batch_ == 0) throw std::invalid_argument("OracleSampler: batch size must be >= 1");
    }

    using Sampler::get_data;
    void get_data(Dataset& out) override { out = oracle_samples(inst_, batch_, rng_); }
    size_t batch_size() const override { return batch_; }

private:
    LpnInstance inst_;
    size_t batch_;
    Rng rng_;
};

class BatchSampler final : public Sampler {
public:
    BatchSampler(const Dataset& data, size_t batch, Rng rng)
        : data_(&data), batch_(batch), rng_(rng) {
        if (data.size() == 0) throw std::invalid_argument("BatchSampler: empty dataset");
        if (batch_ == 0) throw std::invalid_argument("BatchSampler: batch size must be >= 1");
    }

    using Sampler::get_data;
    void get_data(Dataset& out) override {
        const size_t n = data_->size();
        out.inputs = BitMatrix(batch_, data_->inputs.cols());
        out.labels = BitVector(batch_);
        out.meta = data_->meta;
        const size_t wpr = data_->inputs.words_per_row();
        for (size_t i = 0; i < batch_; ++i) {
            const size_t j = static_cast<size_t>(rng_.below(n));
            auto src = data_->inputs.row_words(j);
            auto dst = out.inputs.row_words(i);
            for (size_t w = 0; w < wpr; ++w) dst[w] = src[w];
            out.labels.set(i, data_->labels.get(j));
        }
    }
    size_t batch_size() const override { return batch_; }

private:
    const Dataset* data_;
    size_t batch_;
    Rng rng_;
};

// Bookkeeping from the sparse-secret reduction, enough to map a recovered
// transformed secret back to the original one.
struct SparseSecretBlock {
    std::vector<size_t> consumed_rows;  // the n samples used as the invertible block
    BitMatrix block;                    // R: consumed inputs stacked as rows (n x n)
    BitMatrix block_inverse;            // R^{-1}
    BitVector consumed_labels;          // y1
};

struct SparseSecretTransform {
    Dataset data;  // m - n samples whose effective secret is the consumed error block e1
    SparseSecretBlock block;
};

// Rewrites an m-sample dimension-n dataset into an (m-n)-sample dataset whose
// effective secret is the error vector of the n consumed samples. Consumed
// samples are the first n linearly independent input rows. Fails when the
// inputs have rank below n.
inline std::optional<SparseSecretTransform> sparse_secret_transform(const Dataset& in) {
    const size_t n = in.dim();
    const size_t m = in.size();
    if (m <= n) throw std::invalid_argument("sparse_secret_transform: needs more than n samples");
    auto chosen = select_independent_rows(in.inputs, n);
    if (!chosen) return std::nullopt;

    SparseSecretTransform out;
    out.block.consumed_rows = *chosen;
    out.block.block = BitMatrix(n, n);
    out.block.consumed_labels = BitVector(n);
    std::vector<bool> is_consumed(m, false);
    for (size_t i = 0; i < n; ++i) {
        const size_t r = (*chosen)[i];
        is_consumed[r] = true;
        out.block.block.set_row(i, in.inputs.row(r));
        out.block.consumed_labels.set(i, in.labels.get(r));
    }
    auto inv = invert(out.block.block);
    out.block.block_inverse = std::move(*inv);  // invertible by construction

    // Remaining samples x map to x * R^{-1}; their labels pick up <y1, x'>.
    out.data.inputs = BitMatrix(m - n, n);
    out.data.labels = BitVector(m - n);
    out.data.meta = {static_cast<uint32_t>(n), in.meta.tau, "sparse-secret"};
    size_t o = 0;
    for (size_t r = 0; r < m; ++r) {
        if (is_consumed[r]) continue;
        BitVector x = in.inputs.row(r);
        // row vector times R^{-1}: XOR the rows of R^{-1} selected by x
        BitVector xr(n);
        auto xw = x.words();
        for (size_t wi = 0; wi < x.word_count(); ++wi) {
            uint64_t bits = xw[wi];
            while (bits) {
                const size_t k = wi * 64 + static_cast<size_t>(__builtin_ctzll(bits));
                bits &= bits - 1;
                xr ^= out.block.block_inverse.row(k);
            }
        }
        out.data.inputs.set_row(o, xr);
        const bool y = in.labels.get(r) ^ (dot_parity(out.block.consumed_labels, xr) != 0);
        out.data.labels.set(o, y);
        ++o;
    }
    return out;
}

// Inverts the reduction once the error block e1 is known: R s = y1 xor e1.
inline BitVector recover_original_secret(const SparseSecretBlock& block, const BitVector& e1) {
    BitVector rhs = block.consumed_labels;
    rhs ^= e1;
    return block.block_inverse.mul(rhs);
}

// Drops the last coordinate and folds a guessed secret bit into the labels:
// (x, y) -> (x[0..n-2], y xor (x[n-1] & g)). When g matches the true last
// secret bit the result is an LPN dataset of dimension n-1 with the same tau.
inline Dataset guess_transform(const Dataset& in, int guess) {
    const size_t n = in.dim();
    if (n < 2) throw std::invalid_argument("guess_transform: dimension must be >= 2");
    Dataset out;
    out.inputs = BitMatrix(in.size(), n - 1);
    out.labels = in.labels;
    out.meta = {static_cast<uint32_t>(n - 1), in.meta.tau, in.meta.source};
    const size_t last_word = (n - 1) / 64;
    const uint64_t last_mask = uint64_t(1) << ((n - 1) % 64);
    for (size_t r = 0; r < in.size(); ++r) {
        auto src = in.inputs.row_words(r);
        auto dst = out.inputs.row_words(r);
        for (size_t w = 0; w < out.inputs.words_per_row(); ++w) dst[w] = src[w];
        out.inputs.mask_row_tail(r);
        if (guess && (src[last_word] & last_mask)) out.labels.flip(r);
    }
    return out;
}

// Applies guess_transform k times, peeling the last coordinate each round.
// suffix bit i corresponds to original coordinate n-k+i, so the innermost
// (highest) coordinate is consumed first.
inline Dataset enumerate_suffix(const Dataset& in, size_t k, const std::vector<int>& suffix) {
    if (suffix.size() != k) throw std::invalid_argument("enumerate_suffix: suffix width mismatch");
    if (k >= in.dim() && k > 0) throw std::invalid_argument("enumerate_suffix: k must be < n");
    Dataset cur = in;
    for (size_t i = 0; i < k; ++i) cur = guess_transform(cur, suffix[k - 1 - i]);
    return cur;
}

inline std::vector<int> suffix_bits(uint64_t value, size_t k) {
    std::vector<int> bits(k);
    for (size_t i = 0; i < k; ++i) bits[i] = static_cast<int>((value >> i) & 1);
    return bits;
}

// ---------------------------------------------------------------------------
// Dataset file format "LPN1" (all integers little-endian):
//   magic "LPN1" | u32 n | u64 m | f64 tau | u8 has_secret |
//   [ceil(n/8) secret bytes] | m * ceil(n/8) row bytes | ceil(m/8) label bytes
// Bit order within a byte is little-endian, matching the in-memory packing.
// ---------------------------------------------------------------------------

namespace detail {

inline void put_bytes(std::string& out, const void* p, size_t n) {
    out.append(static_cast<const char*>(p), n);
}

template <class T>
void put_le(std::string& out, T v) {
    for (size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_le(out, bits);
}

inline void put_bits(std::string& out, const BitVector& v) {
    const size_t nbytes = (v.size() + 7) / 8;
    for (size_t b = 0; b < nbytes; ++b)
        out.push_back(static_cast<char>(v.words()[b / 8] >> (8 * (b % 8))));
}

class ByteReader {
public:
    ByteReader(const std::string& s) : s_(s) {}
    uint8_t u8() { return static_cast<uint8_t>(s_.at(pos_++)); }
    template <class T>
    T le() {
        T v = 0;
        for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(u8()) << (8 * i);
        return v;
    }
    double f64() {
        uint64_t bits = le<uint64_t>();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    BitVector bits(size_t nbits) {
        BitVector v(nbits);
        const size_t nbytes = (nbits + 7) / 8;
        for (size_t b = 0; b < nbytes; ++b)
            v.words()[b / 8] |= static_cast<uint64_t>(u8()) << (8 * (b % 8));
        v.mask_tail();
        return v;
    }

private:
    const std::string& s_;
    size_t pos_ = 0;
};

}  // namespace detail

struct DatasetFile {
    Dataset data;
    std::optional<BitVector> secret;
};

inline std::string serialize_dataset(const Dataset& d, const std::optional<BitVector>& secret) {
    check_dataset(d);
    std::string out;
    out += "LPN1";
    detail::put_le<uint32_t>(out, d.meta.n);
    detail::put_le<uint64_t>(out, d.size());
    detail::put_f64(out, d.meta.tau);
    out.push_back(secret.has_value() ? 1 : 0);
    if (secret) {
        if (secret->size() != d.meta.n) throw std::invalid_argument("serialize_dataset: secret width");
        detail::put_bits(out, *secret);
    }
    for (size_t r = 0; r < d.size(); ++r) detail::put_bits(out, d.inputs.row(r));
    detail::put_bits(out, d.labels);
    return out;
}

inline DatasetFile deserialize_dataset(const std::string& bytes) {
    if (bytes.size() < 4 || bytes.compare(0, 4, "LPN1") != 0)
        throw std::runtime_error("dataset file: bad magic");
    detail::ByteReader r(bytes);
    r.le<uint32_t>();  // magic, already checked
    DatasetFile f;
    const uint32_t n = r.le<uint32_t>();
    const uint64_t m = r.le<uint64_t>();
    const double tau = r.f64();
    const uint8_t has_secret = r.u8();
    if (has_secret) f.secret = r.bits(n);
    f.data.inputs = BitMatrix(m, n);
    for (uint64_t i = 0; i < m; ++i) f.data.inputs.set_row(i, r.bits(n));
    f.data.labels = r.bits(m);
    f.data.meta = {n, tau, "file"};
    return f;
}

inline void write_dataset_file(const std::string& path, const Dataset& d,
                               const std::optional<BitVector>& secret) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    const std::string bytes = serialize_dataset(d, secret);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline DatasetFile read_dataset_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_dataset(bytes);
}

}  // namespace lpn
