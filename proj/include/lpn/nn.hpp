#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpn/lpn.hpp"
#include "lpn/rng.hpp"

namespace lpn {

enum class Activation : uint8_t { Identity = 0, Relu = 1, Sigmoid = 2, Cosine = 3 };
enum class Loss : uint8_t { ZeroOne, Logistic, Mae, Mse };
enum class RegKind : uint8_t { None, L1, L2 };

struct Regularizer {
    RegKind kind = RegKind::None;
    double lambda = 0.0;
};

template <class T>
T activation_eval(Activation a, T x) {
    switch (a) {
        case Activation::Identity: return x;
        case Activation::Relu: return x > T(0) ? x : T(0);
        case Activation::Sigmoid: return T(1) / (T(1) + std::exp(-x));
        case Activation::Cosine: return std::cos(x);
    }
    return x;
}

// Derivative at the pre-activation x. relu'(0) is taken as 0.
template <class T>
T activation_grad(Activation a, T x) {
    switch (a) {
        case Activation::Identity: return T(1);
        case Activation::Relu: return x > T(0) ? T(1) : T(0);
        case Activation::Sigmoid: {
            const T s = T(1) / (T(1) + std::exp(-x));
            return s * (T(1) - s);
        }
        case Activation::Cosine: return -std::sin(x);
    }
    return T(1);
}

inline double loss_eval(Loss loss, double pred, int label) {
    switch (loss) {
        case Loss::ZeroOne: return (pred > 0.5 ? 1 : 0) != label ? 1.0 : 0.0;
        case Loss::Logistic:
            if (!(pred > 0.0 && pred < 1.0)) throw std::domain_error("logistic loss: prediction outside (0,1)");
            return label ? -std::log(pred) : -std::log(1.0 - pred);
        case Loss::Mae: return std::abs(pred - label);
        case Loss::Mse: return (pred - label) * (pred - label);
    }
    return 0.0;
}

// dLoss/dPrediction. Zero-one loss is evaluation-only.
inline double loss_grad(Loss loss, double pred, int label) {
    switch (loss) {
        case Loss::ZeroOne: throw std::invalid_argument("zero-one loss has no gradient");
        case Loss::Logistic:
            if (!(pred > 0.0 && pred < 1.0)) throw std::domain_error("logistic loss: prediction outside (0,1)");
            return label ? -1.0 / pred : 1.0 / (1.0 - pred);
        case Loss::Mae: {
            const double d = pred - label;
            return d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
        }
        case Loss::Mse: return 2.0 * (pred - label);
    }
    return 0.0;
}

// One affine layer, w row-major with shape out x in.
template <class T>
struct Layer {
    size_t in = 0;
    size_t out = 0;
    std::vector<T> w;
    std::vector<T> b;
    Activation act = Activation::Identity;

    bool operator==(const Layer&) const = default;
};

template <class T>
struct Mlp {
    std::vector<Layer<T>> layers;

    size_t input_dim() const { return layers.empty() ? 0 : layers.front().in; }
    size_t output_dim() const { return layers.empty() ? 0 : layers.back().out; }
    size_t param_count() const {
        size_t c = 0;
        for (const auto& l : layers) c += l.w.size() + l.b.size();
        return c;
    }
    size_t max_width() const {
        size_t m = input_dim();
        for (const auto& l : layers) m = std::max(m, l.out);
        return m;
    }

    bool operator==(const Mlp&) const = default;

    template <class U>
    Mlp<U> cast() const {
        Mlp<U> r;
        r.layers.resize(layers.size());
        for (size_t i = 0; i < layers.size(); ++i) {
            r.layers[i].in = layers[i].in;
            r.layers[i].out = layers[i].out;
            r.layers[i].act = layers[i].act;
            r.layers[i].w.assign(layers[i].w.begin(), layers[i].w.end());
            r.layers[i].b.assign(layers[i].b.begin(), layers[i].b.end());
        }
        return r;
    }
};

// Gradient buffers with the same shapes as the model parameters.
template <class T>
struct Gradients {
    std::vector<std::vector<T>> w;
    std::vector<std::vector<T>> b;

    static Gradients zeros_like(const Mlp<T>& m) {
        Gradients g;
        g.w.resize(m.layers.size());
        g.b.resize(m.layers.size());
        for (size_t i = 0; i < m.layers.size(); ++i) {
            g.w[i].assign(m.layers[i].w.size(), T(0));
            g.b[i].assign(m.layers[i].b.size(), T(0));
        }
        return g;
    }
};

// Base model: `depth` hidden layers of the given width and activation, then a
// sigmoid output unit. Kaiming-uniform init on (-sqrt(6/fan_in), +sqrt(6/fan_in))
// for weights and biases.
template <class T = float>
Mlp<T> build_base_model(size_t n, size_t width, Rng rng, size_t depth = 1,
                        Activation hidden_act = Activation::Relu) {
    if (n < 1 || width < 1 || depth < 1) throw std::invalid_argument("build_base_model: bad dims");
    Mlp<T> m;
    size_t in = n;
    for (size_t l = 0; l < depth; ++l) {
        Layer<T> layer;
        layer.in = in;
        layer.out = width;
        layer.act = hidden_act;
        const double bound = std::sqrt(6.0 / static_cast<double>(in));
        layer.w.resize(layer.in * layer.out);
        layer.b.resize(layer.out);
        for (auto& x : layer.w) x = static_cast<T>(rng.uniform_pm(bound));
        for (auto& x : layer.b) x = static_cast<T>(rng.uniform_pm(bound));
        m.layers.push_back(std::move(layer));
        in = width;
    }
    Layer<T> head;
    head.in = in;
    head.out = 1;
    head.act = Activation::Sigmoid;
    const double bound = std::sqrt(6.0 / static_cast<double>(in));
    head.w.resize(in);
    head.b.resize(1);
    for (auto& x : head.w) x = static_cast<T>(rng.uniform_pm(bound));
    head.b[0] = static_cast<T>(rng.uniform_pm(bound));
    m.layers.push_back(std::move(head));
    return m;
}

// Exact parity network: a width-n hidden relu layer whose rows all equal the
// secret, biases 0,-1,...,-(n-1), and an alternating-sign head that maps the
// hidden ramp back to (s.x) mod 2. Linear output, no sigmoid.
template <class T = double>
Mlp<T> build_parity_network(const BitVector& secret) {
    const size_t n = secret.size();
    if (n < 1) throw std::invalid_argument("build_parity_network: empty secret");
    Mlp<T> m;
    Layer<T> l1;
    l1.in = n;
    l1.out = n;
    l1.act = Activation::Relu;
    l1.w.assign(n * n, T(0));
    l1.b.resize(n);
    for (size_t j = 0; j < n; ++j) {
        for (size_t i = 0; i < n; ++i) l1.w[j * n + i] = secret.get(i) ? T(1) : T(0);
        l1.b[j] = -static_cast<T>(j);
    }
    Layer<T> l2;
    l2.in = n;
    l2.out = 1;
    l2.act = Activation::Identity;
    l2.w.resize(n);
    l2.b.assign(1, T(0));
    // w[k] = k mod 2 - sum_{j<k} w[j] * (k - j + 1), 1-based k
    for (size_t k = 1; k <= n; ++k) {
        T acc = static_cast<T>(k % 2);
        for (size_t j = 1; j < k; ++j) acc -= l2.w[j - 1] * static_cast<T>(k - j + 1);
        l2.w[k - 1] = acc;
    }
    m.layers.push_back(std::move(l1));
    m.layers.push_back(std::move(l2));
    return m;
}

// Penalty over every weight matrix and bias vector.
template <class T>
double regularizer_eval(const Regularizer& reg, const Mlp<T>& m) {
    if (reg.kind == RegKind::None || reg.lambda == 0.0) return 0.0;
    double acc = 0.0;
    for (const auto& l : m.layers) {
        if (reg.kind == RegKind::L2) {
            for (T x : l.w) acc += static_cast<double>(x) * x;
            for (T x : l.b) acc += static_cast<double>(x) * x;
        } else {
            for (T x : l.w) acc += std::abs(static_cast<double>(x));
            for (T x : l.b) acc += std::abs(static_cast<double>(x));
        }
    }
    return reg.kind == RegKind::L2 ? 0.5 * reg.lambda * acc : reg.lambda * acc;
}

namespace detail {

inline bool row_bit(std::span<const uint64_t> row, size_t i) {
    return (row[i >> 6] >> (i & 63)) & 1;
}

// Adds the columns of the first layer selected by the input bits. w1t is the
// layer's weight matrix transposed to in x out so each selected column is a
// contiguous run.
template <class T>
void first_layer_forward(std::span<const uint64_t> row, const T* w1t, const T* bias, size_t in,
                         size_t out, T* acc) {
    std::memcpy(acc, bias, out * sizeof(T));
    const size_t words = (in + 63) / 64;
    for (size_t wi = 0; wi < words; ++wi) {
        uint64_t bits = row[wi];
        while (bits) {
            const size_t i = wi * 64 + static_cast<size_t>(__builtin_ctzll(bits));
            bits &= bits - 1;
            const T* col = w1t + i * out;
            for (size_t j = 0; j < out; ++j) acc[j] += col[j];
        }
    }
}

}  // namespace detail

// Scratch for a single-sample forward/backward pass.
template <class T>
struct ForwardScratch {
    std::vector<std::vector<T>> pre;   // pre-activation per layer
    std::vector<std::vector<T>> post;  // post-activation per layer
    void resize(const Mlp<T>& m) {
        pre.resize(m.layers.size());
        post.resize(m.layers.size());
        for (size_t l = 0; l < m.layers.size(); ++l) {
            pre[l].resize(m.layers[l].out);
            post[l].resize(m.layers[l].out);
        }
    }
};

// Single-sample forward on a bit-packed input row. Generic over depth; the
// batch drivers below provide the fast path for the input layer.
template <class T>
T forward_row(const Mlp<T>& m, std::span<const uint64_t> row, ForwardScratch<T>& s) {
    s.resize(m);
    for (size_t l = 0; l < m.layers.size(); ++l) {
        const auto& layer = m.layers[l];
        auto& pre = s.pre[l];
        for (size_t j = 0; j < layer.out; ++j) {
            T acc = layer.b[j];
            const T* wrow = layer.w.data() + j * layer.in;
            if (l == 0) {
                for (size_t i = 0; i < layer.in; ++i)
                    if (detail::row_bit(row, i)) acc += wrow[i];
            } else {
                const auto& prev = s.post[l - 1];
                for (size_t i = 0; i < layer.in; ++i) acc += wrow[i] * prev[i];
            }
            pre[j] = acc;
        }
        for (size_t j = 0; j < layer.out; ++j) s.post[l][j] = activation_eval(layer.act, pre[j]);
    }
    return s.post.back()[0];
}

template <class T>
T forward_row(const Mlp<T>& m, const BitVector& x) {
    if (x.size() != m.input_dim()) throw std::invalid_argument("forward: input width mismatch");
    ForwardScratch<T> s;
    return forward_row(m, x.words(), s);
}

namespace detail {

template <class T>
std::vector<T> transpose_first_layer(const Mlp<T>& m) {
    const auto& l0 = m.layers.front();
    std::vector<T> w1t(l0.w.size());
    for (size_t j = 0; j < l0.out; ++j)
        for (size_t i = 0; i < l0.in; ++i) w1t[i * l0.out + j] = l0.w[j * l0.in + i];
    return w1t;
}

// Forward pass with a pre-transposed first layer; upper layers run the
// generic dense path.
template <class T>
T forward_row_fast(const Mlp<T>& m, const T* w1t, std::span<const uint64_t> row,
                   ForwardScratch<T>& s) {
    const auto& l0 = m.layers.front();
    first_layer_forward(row, w1t, l0.b.data(), l0.in, l0.out, s.pre[0].data());
    for (size_t j = 0; j < l0.out; ++j) s.post[0][j] = activation_eval(l0.act, s.pre[0][j]);
    for (size_t l = 1; l < m.layers.size(); ++l) {
        const auto& layer = m.layers[l];
        const auto& prev = s.post[l - 1];
        for (size_t j = 0; j < layer.out; ++j) {
            T a = layer.b[j];
            const T* wrow = layer.w.data() + j * layer.in;
            for (size_t i = 0; i < layer.in; ++i) a += wrow[i] * prev[i];
            s.pre[l][j] = a;
        }
        for (size_t j = 0; j < layer.out; ++j) s.post[l][j] = activation_eval(layer.act, s.pre[l][j]);
    }
    return s.post.back()[0];
}

}  // namespace detail

// Batch forward. Rows are independent, so the parallel split cannot change
// any prediction.
template <class T>
std::vector<T> predict(const Mlp<T>& m, const BitMatrix& inputs) {
    if (inputs.cols() != m.input_dim()) throw std::invalid_argument("predict: input width mismatch");
    std::vector<T> out(inputs.rows());
    const auto w1t = detail::transpose_first_layer(m);
    const int64_t rows = static_cast<int64_t>(inputs.rows());
#pragma omp parallel
    {
        ForwardScratch<T> scratch;
        scratch.resize(m);
#pragma omp for schedule(static)
        for (int64_t r = 0; r < rows; ++r)
            out[static_cast<size_t>(r)] = detail::forward_row_fast(
                m, w1t.data(), inputs.row_words(static_cast<size_t>(r)), scratch);
    }
    return out;
}

struct BatchStats {
    double mean_loss = 0.0;  // mean data loss plus the regularization term
    double accuracy = 0.0;   // rounded-prediction accuracy on the batch, ties to 0
};

namespace detail {

// Flattened parameter layout used by the chunk accumulators. The first
// layer's weight block is stored transposed (in x out) so the per-bit
// gradient scatter is contiguous.
template <class T>
struct ParamLayout {
    std::vector<size_t> w_ofs, b_ofs;
    size_t total = 0;

    explicit ParamLayout(const Mlp<T>& m) {
        for (const auto& l : m.layers) {
            w_ofs.push_back(total);
            total += l.w.size();
            b_ofs.push_back(total);
            total += l.b.size();
        }
    }
};

constexpr int kGradChunks = 16;

}  // namespace detail

// Mean-batch-loss gradient plus the regularizer gradient, written into `out`
// (resized to match the model). Per-sample arithmetic runs in T; chunk
// accumulation runs in double, and chunks are reduced in a fixed order so the
// result does not depend on thread count.
template <class T>
BatchStats backward_batch(const Mlp<T>& model, const Dataset& batch, Loss loss,
                          const Regularizer& reg, Gradients<T>& out) {
    if (loss == Loss::ZeroOne) throw std::invalid_argument("backward: zero-one loss unsupported");
    if (batch.dim() != model.input_dim()) throw std::invalid_argument("backward: input width mismatch");
    const size_t B = batch.size();
    if (B == 0) throw std::invalid_argument("backward: empty batch");

    const auto& l0 = model.layers.front();
    const bool fused_logistic =
        loss == Loss::Logistic && model.layers.back().act == Activation::Sigmoid;

    const std::vector<T> w1t = detail::transpose_first_layer(model);

    const detail::ParamLayout<T> layout(model);
    const int chunks = static_cast<int>(std::min<size_t>(detail::kGradChunks, B));
    std::vector<std::vector<double>> chunk_grad(chunks);
    std::vector<double> chunk_loss(chunks, 0.0);
    std::vector<size_t> chunk_correct(chunks, 0);

#pragma omp parallel for schedule(static)
    for (int c = 0; c < chunks; ++c) {
        auto& acc = chunk_grad[c];
        acc.assign(layout.total, 0.0);
        const size_t lo = B * c / chunks;
        const size_t hi = B * (c + 1) / chunks;
        const size_t L = model.layers.size();
        ForwardScratch<T> s;
        s.resize(model);
        std::vector<std::vector<T>> delta(L);
        for (size_t l = 0; l < L; ++l) delta[l].resize(model.layers[l].out);

        for (size_t r = lo; r < hi; ++r) {
            const auto row = batch.inputs.row_words(r);
            const int y = batch.labels.get(r) ? 1 : 0;

            // forward
            detail::first_layer_forward(row, w1t.data(), l0.b.data(), l0.in, l0.out, s.pre[0].data());
            for (size_t j = 0; j < l0.out; ++j) s.post[0][j] = activation_eval(l0.act, s.pre[0][j]);
            for (size_t l = 1; l < L; ++l) {
                const auto& layer = model.layers[l];
                const auto& prev = s.post[l - 1];
                for (size_t j = 0; j < layer.out; ++j) {
                    T a = layer.b[j];
                    const T* wrow = layer.w.data() + j * layer.in;
                    for (size_t i = 0; i < layer.in; ++i) a += wrow[i] * prev[i];
                    s.pre[l][j] = a;
                }
                for (size_t j = 0; j < layer.out; ++j)
                    s.post[l][j] = activation_eval(layer.act, s.pre[l][j]);
            }
            const T pred = s.post[L - 1][0];
            chunk_correct[c] += static_cast<size_t>((pred > T(0.5) ? 1 : 0) == y);

            // loss and the gradient seed at the last layer's pre-activation
            if (fused_logistic) {
                const T z = s.pre[L - 1][0];
                const T az = std::abs(z);
                chunk_loss[c] += static_cast<double>(std::max(z, T(0)) - z * static_cast<T>(y) +
                                                     std::log1p(std::exp(-az)));
                delta[L - 1][0] = pred - static_cast<T>(y);
            } else {
                chunk_loss[c] += loss_eval(loss, static_cast<double>(pred), y);
                const T dldp = static_cast<T>(loss_grad(loss, static_cast<double>(pred), y));
                delta[L - 1][0] =
                    dldp * activation_grad(model.layers[L - 1].act, s.pre[L - 1][0]);
            }

            // backward
            for (size_t l = L - 1; l > 0; --l) {
                const auto& layer = model.layers[l];
                auto& dprev = delta[l - 1];
                const auto& prevact = model.layers[l - 1].act;
                const auto& prevpre = s.pre[l - 1];
                std::fill(dprev.begin(), dprev.end(), T(0));
                double* gw = acc.data() + layout.w_ofs[l];
                double* gb = acc.data() + layout.b_ofs[l];
                const auto& prev = s.post[l - 1];
                for (size_t j = 0; j < layer.out; ++j) {
                    const T dj = delta[l][j];
                    if (dj == T(0)) continue;
                    const T* wrow = layer.w.data() + j * layer.in;
                    double* gwrow = gw + j * layer.in;
                    for (size_t i = 0; i < layer.in; ++i) {
                        gwrow[i] += static_cast<double>(dj) * prev[i];
                        dprev[i] += dj * wrow[i];
                    }
                    gb[j] += dj;
                }
                for (size_t i = 0; i < layer.in; ++i)
                    dprev[i] *= activation_grad(prevact, prevpre[i]);
            }
            // input layer: scatter into the transposed weight block
            {
                double* gw = acc.data() + layout.w_ofs[0];
                double* gb = acc.data() + layout.b_ofs[0];
                const auto& d0 = delta[0];
                const size_t words = (l0.in + 63) / 64;
                for (size_t wi = 0; wi < words; ++wi) {
                    uint64_t bits = row[wi];
                    while (bits) {
                        const size_t i = wi * 64 + static_cast<size_t>(__builtin_ctzll(bits));
                        bits &= bits - 1;
                        double* gcol = gw + i * l0.out;
                        for (size_t j = 0; j < l0.out; ++j) gcol[j] += d0[j];
                    }
                }
                for (size_t j = 0; j < l0.out; ++j) gb[j] += d0[j];
            }
        }
    }

    // fixed-order reduction
    std::vector<double> total(layout.total, 0.0);
    double loss_sum = 0.0;
    size_t correct = 0;
    for (int c = 0; c < chunks; ++c) {
        const auto& acc = chunk_grad[c];
        for (size_t i = 0; i < layout.total; ++i) total[i] += acc[i];
        loss_sum += chunk_loss[c];
        correct += chunk_correct[c];
    }

    out = Gradients<T>::zeros_like(model);
    const double inv_b = 1.0 / static_cast<double>(B);
    for (size_t l = 0; l < model.layers.size(); ++l) {
        const auto& layer = model.layers[l];
        const double* gw = total.data() + layout.w_ofs[l];
        const double* gb = total.data() + layout.b_ofs[l];
        if (l == 0) {
            for (size_t i = 0; i < layer.in; ++i)
                for (size_t j = 0; j < layer.out; ++j)
                    out.w[0][j * layer.in + i] = static_cast<T>(gw[i * layer.out + j] * inv_b);
        } else {
            for (size_t k = 0; k < layer.w.size(); ++k) out.w[l][k] = static_cast<T>(gw[k] * inv_b);
        }
        for (size_t j = 0; j < layer.out; ++j) out.b[l][j] = static_cast<T>(gb[j] * inv_b);
    }

    // regularizer gradient: lambda * w (L2) or lambda * sign(w) (L1)
    if (reg.kind != RegKind::None && reg.lambda != 0.0) {
        const T lam = static_cast<T>(reg.lambda);
        for (size_t l = 0; l < model.layers.size(); ++l) {
            auto add = [&](std::vector<T>& g, const std::vector<T>& p) {
                for (size_t k = 0; k < p.size(); ++k) {
                    if (reg.kind == RegKind::L2)
                        g[k] += lam * p[k];
                    else
                        g[k] += p[k] > T(0) ? lam : (p[k] < T(0) ? -lam : T(0));
                }
            };
            add(out.w[l], model.layers[l].w);
            add(out.b[l], model.layers[l].b);
        }
    }

    BatchStats st;
    st.mean_loss = loss_sum * inv_b + regularizer_eval(reg, model);
    st.accuracy = static_cast<double>(correct) * inv_b;
    return st;
}

// Loss-only evaluation of the regularized batch objective (used by the
// finite-difference checks).
template <class T>
double batch_loss(const Mlp<T>& model, const Dataset& batch, Loss loss, const Regularizer& reg) {
    const size_t B = batch.size();
    if (B == 0) throw std::invalid_argument("batch_loss: empty batch");
    double acc = 0.0;
    ForwardScratch<T> s;
    for (size_t r = 0; r < B; ++r) {
        const T pred = forward_row(model, batch.inputs.row_words(r), s);
        acc += loss_eval(loss, static_cast<double>(pred), batch.labels.get(r) ? 1 : 0);
    }
    return acc / static_cast<double>(B) + regularizer_eval(reg, model);
}

// ---------------------------------------------------------------------------
// Weight checkpoint format "MLP1":
//   magic "MLP1" | u32 layer count |
//   per layer: u32 out | u32 in | u8 activation tag |
//   then per layer: row-major f32 little-endian W, then b.
// ---------------------------------------------------------------------------

template <class T>
std::string serialize_checkpoint(const Mlp<T>& m) {
    std::string out;
    out += "MLP1";
    detail::put_le<uint32_t>(out, static_cast<uint32_t>(m.layers.size()));
    for (const auto& l : m.layers) {
        detail::put_le<uint32_t>(out, static_cast<uint32_t>(l.out));
        detail::put_le<uint32_t>(out, static_cast<uint32_t>(l.in));
        out.push_back(static_cast<char>(l.act));
    }
    for (const auto& l : m.layers) {
        auto put_f32 = [&](T v) {
            float f = static_cast<float>(v);
            uint32_t bits;
            std::memcpy(&bits, &f, 4);
            detail::put_le(out, bits);
        };
        for (T v : l.w) put_f32(v);
        for (T v : l.b) put_f32(v);
    }
    return out;
}

inline Mlp<float> deserialize_checkpoint(const std::string& bytes) {
    if (bytes.size() < 4 || bytes.compare(0, 4, "MLP1") != 0)
        throw std::runtime_error("checkpoint: bad magic");
    detail::ByteReader r(bytes);
    r.le<uint32_t>();
    const uint32_t count = r.le<uint32_t>();
    Mlp<float> m;
    m.layers.resize(count);
    for (auto& l : m.layers) {
        l.out = r.le<uint32_t>();
        l.in = r.le<uint32_t>();
        l.act = static_cast<Activation>(r.u8());
        l.w.resize(l.in * l.out);
        l.b.resize(l.out);
    }
    for (auto& l : m.layers) {
        auto get_f32 = [&] {
            uint32_t bits = r.le<uint32_t>();
            float f;
            std::memcpy(&f, &bits, 4);
            return f;
        };
        for (auto& v : l.w) v = get_f32();
        for (auto& v : l.b) v = get_f32();
    }
    return m;
}

template <class T>
void save_checkpoint(const std::string& path, const Mlp<T>& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    const std::string bytes = serialize_checkpoint(m);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline Mlp<float> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes);
}

}  // namespace lpn
