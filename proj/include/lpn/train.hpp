#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpn/nn.hpp"

namespace lpn {

enum class OptimizerKind : uint8_t { Sgd, Adam };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Adam;
    double learning_rate = 1e-3;
    double weight_decay = 0.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// SGD: W <- W - eta (lambda W + g).
// Adam: dW <- lambda W + g, moments with bias correction beta^t, then
// W <- W - eta m_hat / (sqrt(v_hat) + eps).
template <class T>
class Optimizer {
public:
    Optimizer(OptimizerConfig cfg, const Mlp<T>& model) : cfg_(cfg) {
        if (cfg.learning_rate < 0) throw std::invalid_argument("optimizer: negative learning rate");
        if (cfg.kind == OptimizerKind::Adam) {
            m_ = Gradients<T>::zeros_like(model);
            v_ = Gradients<T>::zeros_like(model);
        }
    }

    const OptimizerConfig& config() const { return cfg_; }
    uint64_t step_count() const { return t_; }

    void update(Mlp<T>& model, const Gradients<T>& g) {
        ++t_;
        const T eta = static_cast<T>(cfg_.learning_rate);
        const T lam = static_cast<T>(cfg_.weight_decay);
        if (cfg_.kind == OptimizerKind::Sgd) {
            for (size_t l = 0; l < model.layers.size(); ++l) {
                apply_sgd(model.layers[l].w, g.w[l], eta, lam);
                apply_sgd(model.layers[l].b, g.b[l], eta, lam);
            }
            return;
        }
        const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
        const T c1 = static_cast<T>(1.0 - std::pow(cfg_.beta1, static_cast<double>(t_)));
        const T c2 = static_cast<T>(1.0 - std::pow(cfg_.beta2, static_cast<double>(t_)));
        const T eps = static_cast<T>(cfg_.eps);
        for (size_t l = 0; l < model.layers.size(); ++l) {
            apply_adam(model.layers[l].w, g.w[l], m_.w[l], v_.w[l], eta, lam, b1, b2, c1, c2, eps);
            apply_adam(model.layers[l].b, g.b[l], m_.b[l], v_.b[l], eta, lam, b1, b2, c1, c2, eps);
        }
    }

private:
    static void apply_sgd(std::vector<T>& w, const std::vector<T>& g, T eta, T lam) {
        for (size_t k = 0; k < w.size(); ++k) w[k] -= eta * (lam * w[k] + g[k]);
    }
    static void apply_adam(std::vector<T>& w, const std::vector<T>& g, std::vector<T>& m,
                           std::vector<T>& v, T eta, T lam, T b1, T b2, T c1, T c2, T eps) {
        for (size_t k = 0; k < w.size(); ++k) {
            const T dw = lam * w[k] + g[k];
            m[k] = b1 * m[k] + (T(1) - b1) * dw;
            v[k] = b2 * v[k] + (T(1) - b2) * dw * dw;
            const T mhat = m[k] / c1;
            const T vhat = v[k] / c2;
            w[k] -= eta * mhat / (std::sqrt(vhat) + eps);
        }
    }

    OptimizerConfig cfg_;
    Gradients<T> m_, v_;
    uint64_t t_ = 0;
};

// Fraction of samples whose rounded prediction matches the label. The
// rounding threshold is 0.5 with ties going to 0.
template <class T>
double evaluate_accuracy(const Mlp<T>& model, const Dataset& data) {
    if (data.size() == 0) throw std::invalid_argument("evaluate_accuracy: empty dataset");
    if (data.dim() != model.input_dim()) throw std::invalid_argument("evaluate_accuracy: width mismatch");
    const auto w1t = detail::transpose_first_layer(model);
    const int64_t rows = static_cast<int64_t>(data.size());
    size_t correct = 0;
#pragma omp parallel
    {
        ForwardScratch<T> scratch;
        scratch.resize(model);
        size_t local = 0;
#pragma omp for schedule(static)
        for (int64_t r = 0; r < rows; ++r) {
            const T p = detail::forward_row_fast(model, w1t.data(),
                                                 data.inputs.row_words(static_cast<size_t>(r)), scratch);
            const int pred = p > T(0.5) ? 1 : 0;
            local += static_cast<size_t>(pred == (data.labels.get(static_cast<size_t>(r)) ? 1 : 0));
        }
#pragma omp atomic
        correct += local;
    }
    return static_cast<double>(correct) / static_cast<double>(rows);
}

struct StopCriterion {
    enum class Kind { ByTime, ByStep, ByAccuracy };
    Kind kind = Kind::ByStep;
    double seconds = 0.0;
    uint64_t steps = 0;
    const Dataset* eval = nullptr;
    double gamma = 0.0;
    uint64_t interval = 100;  // evaluation cadence in steps

    static StopCriterion by_time(double seconds) {
        StopCriterion s;
        s.kind = Kind::ByTime;
        s.seconds = seconds;
        return s;
    }
    static StopCriterion by_step(uint64_t steps) {
        StopCriterion s;
        s.kind = Kind::ByStep;
        s.steps = steps;
        return s;
    }
    static StopCriterion by_accuracy(const Dataset& eval, double gamma, uint64_t interval) {
        StopCriterion s;
        s.kind = Kind::ByAccuracy;
        s.eval = &eval;
        s.gamma = gamma;
        s.interval = interval;
        return s;
    }
};

enum class StopReason : uint8_t { StepLimit, TimeLimit, AccuracyReached, StepCap, TimeCap };

inline const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::StepLimit: return "step-limit";
        case StopReason::TimeLimit: return "time-limit";
        case StopReason::AccuracyReached: return "accuracy-reached";
        case StopReason::StepCap: return "step-cap";
        case StopReason::TimeCap: return "time-cap";
    }
    return "?";
}

struct TracePoint {
    uint64_t step = 0;
    double wall_ms = 0.0;
    double train_acc = std::numeric_limits<double>::quiet_NaN();  // on the last training batch
    double test_acc = std::numeric_limits<double>::quiet_NaN();
};

template <class T>
struct TrainReport {
    uint64_t steps = 0;
    double wall_seconds = 0.0;
    std::vector<TracePoint> trace;
    StopReason stop_reason = StopReason::StepLimit;
    double final_eval_accuracy = std::numeric_limits<double>::quiet_NaN();
    Mlp<T> final_model;
};

struct TrainOptions {
    uint64_t trace_interval = 100;        // cadence for trace records
    const Dataset* trace_eval = nullptr;  // optional test set for the trace
    bool record_trace = true;
    uint64_t max_steps = 0;    // safety caps on top of the stop criterion; 0 disables
    double max_seconds = 0.0;
};

// One record per evaluation point plus a closing record with the stop reason.
template <class T>
std::string train_report_jsonl(const TrainReport<T>& r) {
    std::string out;
    char buf[256];
    auto num = [](double v) -> std::string {
        if (std::isnan(v)) return "null";
        char b[64];
        std::snprintf(b, sizeof b, "%.17g", v);
        return b;
    };
    for (const auto& p : r.trace) {
        std::snprintf(buf, sizeof buf, "{\"step\":%llu,\"wall_ms\":%s,\"train_acc\":%s,\"test_acc\":%s}\n",
                      static_cast<unsigned long long>(p.step), num(p.wall_ms).c_str(),
                      num(p.train_acc).c_str(), num(p.test_acc).c_str());
        out += buf;
    }
    std::snprintf(buf, sizeof buf,
                  "{\"steps\":%llu,\"wall_ms\":%s,\"stop_reason\":\"%s\",\"final_acc\":%s}\n",
                  static_cast<unsigned long long>(r.steps), num(r.wall_seconds * 1e3).c_str(),
                  to_string(r.stop_reason), num(r.final_eval_accuracy).c_str());
    out += buf;
    return out;
}

// The training loop: get batch, regularized loss gradient, optimizer update,
// until the stop criterion fires. Stop checks happen between steps only; a
// step is never aborted mid-update. Deterministic given the sampler's seed.
template <class T>
TrainReport<T> run_training(Mlp<T>& model, Sampler& sampler, Loss loss, const Regularizer& reg,
                            Optimizer<T>& opt, const StopCriterion& stop,
                            const TrainOptions& options = {}) {
    if (loss == Loss::ZeroOne) throw std::invalid_argument("run_training: zero-one loss has no gradient");
    if (stop.kind == StopCriterion::Kind::ByAccuracy && stop.eval == nullptr)
        throw std::invalid_argument("run_training: stop-by-accuracy without an eval dataset");

    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    TrainReport<T> report;
    Dataset batch;
    Gradients<T> grads;
    double last_train_acc = std::numeric_limits<double>::quiet_NaN();
    uint64_t step = 0;

    auto record = [&](double test_acc) {
        if (!options.record_trace) return;
        report.trace.push_back({step, elapsed() * 1e3, last_train_acc, test_acc});
    };

    while (true) {
        bool fire = false;
        switch (stop.kind) {
            case StopCriterion::Kind::ByStep:
                fire = step >= stop.steps;
                break;
            case StopCriterion::Kind::ByTime:
                fire = elapsed() >= stop.seconds;
                break;
            case StopCriterion::Kind::ByAccuracy:
                if (step % stop.interval == 0) {
                    const double acc = evaluate_accuracy(model, *stop.eval);
                    record(acc);
                    report.final_eval_accuracy = acc;
                    fire = acc > stop.gamma;
                }
                break;
        }
        if (fire) {
            report.stop_reason = stop.kind == StopCriterion::Kind::ByStep ? StopReason::StepLimit
                                 : stop.kind == StopCriterion::Kind::ByTime
                                     ? StopReason::TimeLimit
                                     : StopReason::AccuracyReached;
            break;
        }
        if (options.max_steps && step >= options.max_steps) {
            report.stop_reason = StopReason::StepCap;
            break;
        }
        if (options.max_seconds > 0 && elapsed() >= options.max_seconds) {
            report.stop_reason = StopReason::TimeCap;
            break;
        }

        sampler.get_data(batch);
        const BatchStats stats = backward_batch(model, batch, loss, reg, grads);
        opt.update(model, grads);
        ++step;
        last_train_acc = stats.accuracy;

        if (stop.kind != StopCriterion::Kind::ByAccuracy && step % options.trace_interval == 0) {
            double test_acc = std::numeric_limits<double>::quiet_NaN();
            if (options.trace_eval) test_acc = evaluate_accuracy(model, *options.trace_eval);
            record(test_acc);
        }
    }

    report.steps = step;
    report.wall_seconds = elapsed();
    report.final_model = model;
    return report;
}

// ---------------------------------------------------------------------------
// Gradient scaling probe: with MAE loss a flipped label exactly negates the
// per-sample gradient, so the noisy-batch gradient rescaled by 1/(1-2tau)
// concentrates on the clean one. Reports the l2 deviation per parameter
// block together with the empirical bound constant C.
// ---------------------------------------------------------------------------

struct GradScalingResult {
    std::vector<std::string> block_names;
    std::vector<double> deviation;  // ||grad_noisy/(1-2tau) - grad_clean||_2 per block
    std::vector<double> block_c;    // empirical max |d pred / d w|_inf per block
    double c_max = 0.0;
    double max_deviation = 0.0;
};

// Solves 8 n d exp(-eps^2 (1-2tau)^2 B / (2 n d C^2)) = delta for eps.
inline double grad_scaling_epsilon(size_t n, size_t d, double c, double tau, size_t B,
                                   double delta) {
    const double nd = static_cast<double>(n) * static_cast<double>(d);
    return c * std::sqrt(2.0 * nd * std::log(8.0 * nd / delta) /
                         ((1.0 - 2.0 * tau) * (1.0 - 2.0 * tau) * static_cast<double>(B)));
}

inline GradScalingResult gradient_scaling_probe(const Mlp<double>& model, const BitVector& secret,
                                                size_t B, double tau, Rng& rng) {
    if (tau >= 0.5) throw std::domain_error("gradient_scaling_probe: tau must be < 0.5");
    if (model.input_dim() != secret.size())
        throw std::invalid_argument("gradient_scaling_probe: width mismatch");

    // shared inputs, clean labels, and the flips
    Dataset data = make_noisy_dataset(secret, B, 0.0, rng);
    BitVector flips(B);
    for (size_t i = 0; i < B; ++i) flips.set(i, tau > 0.0 && rng.bernoulli(tau));

    const size_t L = model.layers.size();
    detail::ParamLayout<double> layout(model);
    const int chunks = static_cast<int>(std::min<size_t>(detail::kGradChunks, B));
    std::vector<std::vector<double>> acc_clean(chunks), acc_noisy(chunks), acc_cmax(chunks);

#pragma omp parallel for schedule(static)
    for (int c = 0; c < chunks; ++c) {
        acc_clean[c].assign(layout.total, 0.0);
        acc_noisy[c].assign(layout.total, 0.0);
        acc_cmax[c].assign(layout.total, 0.0);
        const size_t lo = B * c / chunks;
        const size_t hi = B * (c + 1) / chunks;
        ForwardScratch<double> s;
        s.resize(model);
        std::vector<std::vector<double>> delta(L);
        for (size_t l = 0; l < L; ++l) delta[l].resize(model.layers[l].out);
        std::vector<double> dpdw(layout.total);

        for (size_t r = lo; r < hi; ++r) {
            const auto row = data.inputs.row_words(r);
            const double p = forward_row(model, row, s);
            // backprop of d pred / d params
            std::fill(dpdw.begin(), dpdw.end(), 0.0);
            delta[L - 1][0] = activation_grad(model.layers[L - 1].act, s.pre[L - 1][0]);
            for (size_t l = L - 1; l > 0; --l) {
                const auto& layer = model.layers[l];
                auto& dprev = delta[l - 1];
                std::fill(dprev.begin(), dprev.end(), 0.0);
                double* gw = dpdw.data() + layout.w_ofs[l];
                double* gb = dpdw.data() + layout.b_ofs[l];
                const auto& prev = s.post[l - 1];
                for (size_t j = 0; j < layer.out; ++j) {
                    const double dj = delta[l][j];
                    const double* wrow = layer.w.data() + j * layer.in;
                    for (size_t i = 0; i < layer.in; ++i) {
                        gw[j * layer.in + i] += dj * prev[i];
                        dprev[i] += dj * wrow[i];
                    }
                    gb[j] += dj;
                }
                for (size_t i = 0; i < layer.in; ++i)
                    dprev[i] *= activation_grad(model.layers[l - 1].act, s.pre[l - 1][i]);
            }
            {
                const auto& l0 = model.layers[0];
                double* gw = dpdw.data() + layout.w_ofs[0];
                double* gb = dpdw.data() + layout.b_ofs[0];
                for (size_t j = 0; j < l0.out; ++j) {
                    const double dj = delta[0][j];
                    for (size_t i = 0; i < l0.in; ++i)
                        if (detail::row_bit(row, i)) gw[j * l0.in + i] += dj;
                    gb[j] += dj;
                }
            }
            // MAE loss gradient is sign(p - y): +1 for y = 0, -1 for y = 1
            const int y_clean = data.labels.get(r) ? 1 : 0;
            const int y_noisy = y_clean ^ (flips.get(r) ? 1 : 0);
            const double s_clean = y_clean ? -1.0 : 1.0;
            const double s_noisy = y_noisy ? -1.0 : 1.0;
            for (size_t k = 0; k < layout.total; ++k) {
                acc_clean[c][k] += s_clean * dpdw[k];
                acc_noisy[c][k] += s_noisy * dpdw[k];
                acc_cmax[c][k] = std::max(acc_cmax[c][k], std::abs(dpdw[k]));
            }
        }
    }

    std::vector<double> g_clean(layout.total, 0.0), g_noisy(layout.total, 0.0),
        cmax(layout.total, 0.0);
    for (int c = 0; c < chunks; ++c)
        for (size_t k = 0; k < layout.total; ++k) {
            g_clean[k] += acc_clean[c][k];
            g_noisy[k] += acc_noisy[c][k];
            cmax[k] = std::max(cmax[k], acc_cmax[c][k]);
        }

    GradScalingResult res;
    const double scale = 1.0 / (1.0 - 2.0 * tau);
    for (size_t l = 0; l < L; ++l) {
        auto block = [&](const char* tag, size_t ofs, size_t len) {
            double dev = 0.0, cbound = 0.0;
            for (size_t k = ofs; k < ofs + len; ++k) {
                const double d = scale * g_noisy[k] / B - g_clean[k] / B;
                dev += d * d;
                cbound = std::max(cbound, cmax[k]);
            }
            res.block_names.push_back(tag + std::to_string(l + 1));
            res.deviation.push_back(std::sqrt(dev));
            res.block_c.push_back(cbound);
        };
        block("W", layout.w_ofs[l], model.layers[l].w.size());
        block("b", layout.b_ofs[l], model.layers[l].b.size());
    }
    for (size_t i = 0; i < res.deviation.size(); ++i) {
        res.max_deviation = std::max(res.max_deviation, res.deviation[i]);
        res.c_max = std::max(res.c_max, res.block_c[i]);
    }
    return res;
}

}  // namespace lpn
