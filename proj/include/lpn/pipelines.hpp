#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lpn/classic.hpp"
#include "lpn/train.hpp"

namespace lpn {

// Stop-criterion specification carried by a profile; the dataset for
// accuracy stops is bound by the pipeline at run time.
struct StopSpec {
    enum class Kind : uint8_t { Time, Step, Accuracy };
    Kind kind = Kind::Time;
    double seconds = 1200.0;
    uint64_t steps = 0;
    double gamma = 0.8;
    uint64_t interval = 10;

    static StopSpec time(double seconds) { return {Kind::Time, seconds, 0, 0, 0}; }
    static StopSpec step(uint64_t steps) { return {Kind::Step, 0, steps, 0, 0}; }
    static StopSpec accuracy(double gamma, uint64_t interval) {
        return {Kind::Accuracy, 0, 0, gamma, interval};
    }
};

// The row schema of the hyperparameter tables: everything a training run
// needs besides the data itself. batch == 0 means full-batch training.
struct HyperProfile {
    double learning_rate = 2e-3;
    size_t batch = 131072;
    double weight_decay = 0.0;
    size_t width = 1000;
    size_t depth = 1;
    Activation activation = Activation::Relu;
    Loss loss = Loss::Logistic;
    OptimizerKind optimizer = OptimizerKind::Adam;
    StopSpec stop;

    std::string summary() const {
        char buf[160];
        std::snprintf(buf, sizeof buf, "lr=%g B=%zu wd=%g width=%zu depth=%zu", learning_rate,
                      batch, weight_decay, width, depth);
        return buf;
    }
};

inline void validate(const HyperProfile& p) {
    if (!(p.learning_rate > 0)) throw std::invalid_argument("profile: learning rate must be > 0");
    if (p.weight_decay < 0) throw std::invalid_argument("profile: negative weight decay");
    if (p.width < 1 || p.depth < 1) throw std::invalid_argument("profile: width/depth must be >= 1");
    if (p.loss == Loss::ZeroOne) throw std::invalid_argument("profile: zero-one loss cannot train");
}

inline HyperProfile abundant_default() {
    HyperProfile p;
    p.learning_rate = 2e-3;
    p.batch = 131072;
    p.weight_decay = 0.0;
    p.width = 1000;
    p.stop = StopSpec::time(1200.0);
    return p;
}

inline HyperProfile restricted_default() {
    HyperProfile p;
    p.learning_rate = 1e-4;
    p.batch = 0;  // full batch
    p.weight_decay = 2e-3;
    p.width = 1000;
    p.stop = StopSpec::step(300000);
    return p;
}

inline HyperProfile moderate_default() {
    HyperProfile p;
    p.learning_rate = 2e-3;
    p.batch = 1048576;
    p.weight_decay = 0.0;
    p.width = 1000;
    p.stop = StopSpec::time(1200.0);
    return p;
}

struct PhaseTiming {
    std::string name;
    double seconds = 0.0;
};

struct SolveResult {
    bool success = false;
    BitVector secret;
    double verification_accuracy = std::numeric_limits<double>::quiet_NaN();
    double wall_seconds = 0.0;
    std::vector<PhaseTiming> phases;
    uint64_t train_steps = 0;
    double stop_accuracy = std::numeric_limits<double>::quiet_NaN();
    std::string detail;
    std::vector<TracePoint> trace;
};

namespace detail {

class PhaseClock {
public:
    PhaseClock() : start_(std::chrono::steady_clock::now()), last_(start_) {}
    double lap() {
        const auto now = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        return s;
    }
    double total() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_, last_;
};

inline BitMatrix unit_rows(size_t n) {
    return BitMatrix::identity(n);
}

inline StopCriterion bind_stop(const StopSpec& spec, const Dataset* eval) {
    switch (spec.kind) {
        case StopSpec::Kind::Time: return StopCriterion::by_time(spec.seconds);
        case StopSpec::Kind::Step: return StopCriterion::by_step(spec.steps);
        case StopSpec::Kind::Accuracy:
            if (!eval) throw std::invalid_argument("accuracy stop needs an eval dataset");
            return StopCriterion::by_accuracy(*eval, spec.gamma, spec.interval ? spec.interval : 10);
    }
    throw std::logic_error("bind_stop");
}

inline BitMatrix truncate_cols(const BitMatrix& m, size_t cols) {
    BitMatrix out(m.rows(), cols);
    for (size_t r = 0; r < m.rows(); ++r) {
        auto src = m.row_words(r);
        auto dst = out.row_words(r);
        for (size_t w = 0; w < out.words_per_row(); ++w) dst[w] = src[w];
        out.mask_row_tail(r);
    }
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Abundant-sample solver: train on fresh oracle batches, then read each
// secret bit off the model at the unit vectors and verify on clean data.
// ---------------------------------------------------------------------------

struct AbundantOptions {
    size_t eval_test_size = kDefaultCleanTestSize;  // clean set for accuracy stops / traces
    size_t verify_size = 8192;                      // fresh clean set for the final check
    double success_accuracy = 0.99;
    uint64_t max_steps = 0;  // safety caps on top of the profile stop
    double max_seconds = 0.0;
    bool record_trace = true;
};

inline SolveResult solve_abundant(const LpnInstance& inst, const HyperProfile& profile, Rng rng,
                                  const AbundantOptions& options = {}) {
    validate(profile);
    detail::PhaseClock clock;
    SolveResult res;

    Rng test_rng = rng.split("test");
    const Dataset testset = make_clean_testset(inst.secret, options.eval_test_size, test_rng);
    OracleSampler sampler(inst, profile.batch ? profile.batch : 131072, rng.split("sampler"));
    auto model = build_base_model<float>(inst.n, profile.width, rng.split("init"), profile.depth,
                                         profile.activation);
    Optimizer<float> opt({profile.optimizer, profile.learning_rate, profile.weight_decay}, model);
    res.phases.push_back({"setup", clock.lap()});

    TrainOptions topt;
    topt.max_steps = options.max_steps;
    topt.max_seconds = options.max_seconds;
    topt.record_trace = options.record_trace;
    topt.trace_eval = profile.stop.kind == StopSpec::Kind::Accuracy ? nullptr : &testset;
    topt.trace_interval = 100;
    const StopCriterion stop = detail::bind_stop(profile.stop, &testset);
    auto report = run_training(model, sampler, profile.loss, {RegKind::None, 0.0}, opt, stop, topt);
    res.phases.push_back({"train", clock.lap()});
    res.train_steps = report.steps;
    res.stop_accuracy = report.final_eval_accuracy;
    res.trace = std::move(report.trace);
    res.detail = to_string(report.stop_reason);

    // s_hat[i] = 1{model(e_i) > 0.5}
    const auto preds = predict(model, detail::unit_rows(inst.n));
    BitVector s_hat(inst.n);
    for (size_t i = 0; i < inst.n; ++i) s_hat.set(i, preds[i] > 0.5f);
    res.secret = s_hat;
    res.phases.push_back({"inference", clock.lap()});

    Rng verify_rng = rng.split("verify");
    const Dataset verify = make_clean_testset(inst.secret, options.verify_size, verify_rng);
    res.verification_accuracy = 1.0 - empirical_flip_rate(verify, s_hat);
    res.success = res.verification_accuracy >= options.success_accuracy;
    res.phases.push_back({"verify", clock.lap()});
    res.wall_seconds = clock.total();
    return res;
}

// ---------------------------------------------------------------------------
// Abundant meta-tuner: per profile, time stop-by-accuracy runs on fresh
// secrets and keep the minimum (solving with constant probability is enough).
// ---------------------------------------------------------------------------

struct TuneAbundantConfig {
    uint32_t n = 20;
    double tau = 0.4;
    int repeat = 3;
    double gamma = 0.8;
    size_t test_size = kDefaultCleanTestSize;
    double wall_cap_seconds = 600.0;
};

// Returns the wall seconds a fresh-secret run needs to reach gamma, or
// infinity when the cap fires first.
using AbundantTrialFn = std::function<double(const HyperProfile&, int trial, Rng rng)>;

struct TuneAbundantResult {
    size_t best_index = 0;
    std::vector<double> seconds;  // min over repeats, per profile
};

inline double run_abundant_trial(const HyperProfile& profile, const TuneAbundantConfig& cfg,
                                 Rng rng) {
    auto inst = LpnInstance::generate(cfg.n, cfg.tau, rng.split("instance"));
    Rng test_rng = rng.split("test");
    const Dataset testset = make_clean_testset(inst.secret, cfg.test_size, test_rng);
    OracleSampler sampler(inst, profile.batch ? profile.batch : 131072, rng.split("sampler"));
    auto model = build_base_model<float>(inst.n, profile.width, rng.split("init"), profile.depth,
                                         profile.activation);
    Optimizer<float> opt({profile.optimizer, profile.learning_rate, profile.weight_decay}, model);
    TrainOptions topt;
    topt.max_seconds = cfg.wall_cap_seconds;
    topt.record_trace = false;
    auto report = run_training(model, sampler, profile.loss, {}, opt,
                               StopCriterion::by_accuracy(testset, cfg.gamma, 10), topt);
    if (report.stop_reason != StopReason::AccuracyReached)
        return std::numeric_limits<double>::infinity();
    return report.wall_seconds;
}

inline TuneAbundantResult tune_abundant(const std::vector<HyperProfile>& profiles,
                                        const TuneAbundantConfig& cfg, Rng rng,
                                        AbundantTrialFn trial = {}) {
    if (profiles.empty()) throw std::invalid_argument("tune_abundant: no profiles");
    if (!trial)
        trial = [&cfg](const HyperProfile& p, int t, Rng r) { return run_abundant_trial(p, cfg, r); };
    TuneAbundantResult res;
    res.seconds.assign(profiles.size(), std::numeric_limits<double>::infinity());
    for (size_t pi = 0; pi < profiles.size(); ++pi) {
        for (int r = 0; r < cfg.repeat; ++r) {
            const double t = trial(profiles[pi], r, rng.split("tune-abundant", pi * 1000 + r));
            res.seconds[pi] = std::min(res.seconds[pi], t);
        }
        if (res.seconds[pi] < res.seconds[res.best_index]) res.best_index = pi;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Restricted-sample solver: guess the last secret bit, reduce, and train
// full-batch repeatedly; a guess whose test accuracy clears gamma wins.
// ---------------------------------------------------------------------------

struct RestrictedOptions {
    int repeat = 8;
    double gamma = std::numeric_limits<double>::quiet_NaN();  // NaN: 1/2 + sqrt(ln 20 / m)
    uint64_t eval_interval = 100;
    bool parallel_inits = true;
};

struct RestrictedResult {
    bool found = false;
    int guess = -1;
    double best_accuracy = 0.0;  // max test accuracy over inits of the returned guess
    int successful_inits = 0;
    double gamma = 0.0;
    uint64_t total_steps = 0;
    double wall_seconds = 0.0;
};

inline double restricted_gamma(size_t m) { return 0.5 + std::sqrt(std::log(20.0) / static_cast<double>(m)); }

inline RestrictedResult solve_restricted(const Dataset& data, const HyperProfile& profile, Rng rng,
                                         const RestrictedOptions& options = {}) {
    validate(profile);
    detail::PhaseClock clock;
    RestrictedResult res;
    const size_t m = data.size();
    if (m < 4) return res;  // inconclusive: cannot split
    res.gamma = std::isnan(options.gamma) ? restricted_gamma(m) : options.gamma;

    const size_t half = m / 2;
    Dataset train, test;
    train.inputs = BitMatrix(half, data.dim());
    train.labels = BitVector(half);
    train.meta = data.meta;
    test.inputs = BitMatrix(half, data.dim());
    test.labels = BitVector(half);
    test.meta = data.meta;
    for (size_t i = 0; i < half; ++i) {
        train.inputs.set_row(i, data.inputs.row(i));
        train.labels.set(i, data.labels.get(i));
        test.inputs.set_row(i, data.inputs.row(half + i));
        test.labels.set(i, data.labels.get(half + i));
    }

    for (int g = 0; g <= 1; ++g) {
        const Dataset train_g = guess_transform(train, g);
        const Dataset test_g = guess_transform(test, g);
        const size_t batch = profile.batch ? std::min(profile.batch, train_g.size()) : train_g.size();

        std::vector<double> acc(options.repeat, 0.0);
        std::vector<uint64_t> steps(options.repeat, 0);
        std::vector<char> ok(options.repeat, 0);
        const int reps = options.repeat;
#pragma omp parallel for schedule(dynamic, 1) if (options.parallel_inits)
        for (int r = 0; r < reps; ++r) {
            Rng trial_rng = rng.split("guess", static_cast<uint64_t>(g) * 1000 + r);
            BatchSampler sampler(train_g, batch, trial_rng.split("sampler"));
            auto model = build_base_model<float>(train_g.dim(), profile.width,
                                                 trial_rng.split("init"), profile.depth,
                                                 profile.activation);
            Optimizer<float> opt(
                {profile.optimizer, profile.learning_rate, profile.weight_decay}, model);
            TrainOptions topt;
            topt.record_trace = false;
            topt.max_steps = profile.stop.kind == StopSpec::Kind::Step ? profile.stop.steps : 0;
            topt.max_seconds = profile.stop.kind == StopSpec::Kind::Time ? profile.stop.seconds : 0;
            auto report = run_training(
                model, sampler, profile.loss, {RegKind::None, 0.0}, opt,
                StopCriterion::by_accuracy(test_g, res.gamma, options.eval_interval), topt);
            acc[r] = evaluate_accuracy(model, test_g);
            steps[r] = report.steps;
            ok[r] = report.stop_reason == StopReason::AccuracyReached ? 1 : 0;
        }
        for (int r = 0; r < reps; ++r) res.total_steps += steps[r];
        int succeeded = 0;
        double best = 0.0;
        for (int r = 0; r < reps; ++r) {
            succeeded += ok[r];
            best = std::max(best, acc[r]);
        }
        if (succeeded > 0) {
            res.found = true;
            res.guess = g;
            res.best_accuracy = best;
            res.successful_inits = succeeded;
            break;
        }
    }
    res.wall_seconds = clock.total();
    return res;
}

// ---------------------------------------------------------------------------
// Restricted meta-tuner: binary search the sample grid for the smallest m at
// which at least floor(2 Repeat / 3) of fresh-dataset trials return the true
// last secret bit.
// ---------------------------------------------------------------------------

struct TuneRestrictedConfig {
    uint32_t n = 44;
    double tau = 0.2;
    int repeat = 3;
    RestrictedOptions solver;
};

// One fresh-secret trial at the given sample count; true on a correct guess.
using RestrictedTrialFn = std::function<bool(const HyperProfile&, size_t m, int trial, Rng rng)>;

struct TuneRestrictedResult {
    size_t best_index = 0;
    // per profile: smallest grid value that succeeded, or nullopt when even
    // the largest one failed
    std::vector<std::optional<size_t>> min_samples;
};

inline bool run_restricted_trial(const HyperProfile& profile, const TuneRestrictedConfig& cfg,
                                 size_t m, Rng rng) {
    auto inst = LpnInstance::generate(cfg.n, cfg.tau, rng.split("instance"));
    Rng data_rng = rng.split("data");
    const Dataset data = oracle_samples(inst, m, data_rng);
    const auto res = solve_restricted(data, profile, rng.split("solve"), cfg.solver);
    return res.found && res.guess == (inst.secret.get(cfg.n - 1) ? 1 : 0);
}

inline TuneRestrictedResult tune_restricted(const std::vector<HyperProfile>& profiles,
                                            const std::vector<size_t>& sample_grid,
                                            const TuneRestrictedConfig& cfg, Rng rng,
                                            RestrictedTrialFn trial = {}) {
    if (profiles.empty()) throw std::invalid_argument("tune_restricted: no profiles");
    if (sample_grid.empty()) throw std::invalid_argument("tune_restricted: empty grid");
    if (!std::is_sorted(sample_grid.begin(), sample_grid.end()))
        throw std::invalid_argument("tune_restricted: grid must be ascending");
    if (!trial)
        trial = [&cfg](const HyperProfile& p, size_t m, int t, Rng r) {
            return run_restricted_trial(p, cfg, m, r);
        };

    TuneRestrictedResult res;
    res.min_samples.assign(profiles.size(), std::nullopt);
    const int bar = (2 * cfg.repeat) / 3;

    for (size_t pi = 0; pi < profiles.size(); ++pi) {
        std::vector<std::optional<bool>> memo(sample_grid.size());
        auto passes = [&](size_t gi) {
            if (!memo[gi]) {
                int c = 0;
                for (int r = 0; r < cfg.repeat; ++r)
                    c += trial(profiles[pi], sample_grid[gi], r,
                               rng.split("tune-restricted", (pi * 100 + gi) * 100 + r));
                memo[gi] = c >= bar;
            }
            return *memo[gi];
        };
        size_t left = 0, right = sample_grid.size() - 1;
        while (left != right) {
            const size_t mid = (left + right) / 2;
            if (passes(mid))
                right = mid;
            else
                left = mid + 1;
        }
        if (passes(left)) res.min_samples[pi] = sample_grid[left];
    }
    for (size_t pi = 0; pi < profiles.size(); ++pi) {
        const auto& best = res.min_samples[res.best_index];
        const auto& cur = res.min_samples[pi];
        if (cur && (!best || *cur < *best)) res.best_index = pi;
    }
    return res;
}

// Table rows like 10.5 denote geometric midpoints: m = round(2^(k/2)) on the
// doubled-exponent grid.
inline size_t half_log2_to_samples(double half_log2) {
    return static_cast<size_t>(std::llround(std::pow(2.0, half_log2)));
}

// ---------------------------------------------------------------------------
// Moderate-sample solver: train on the fixed dataset, pseudo-label a fresh
// rebalanced boosting set with the model, and decode it with pooled Gauss.
// ---------------------------------------------------------------------------

struct ModerateOptions {
    int repeat = 1;
    int repeat_post = 20;
    size_t m_prime = 231072;
    size_t pool_size = 131072;
    size_t test_size = 100000;
    double tau_prime = 0.483;
    size_t max_gauss_iterations = 20000;
    uint64_t max_steps = 0;
    double max_seconds = 0.0;
    bool keep_boosting_set = false;
    bool record_trace = true;
};

struct ModerateResult {
    SolveResult solve;
    double boosting_label_mean = std::numeric_limits<double>::quiet_NaN();
    std::vector<BitVector> candidates;  // stripped, deduplicated, in discovery order
    std::optional<Dataset> boosting_set;
    Mlp<float> model;  // trained model of the last round
    size_t m1 = 0;
    double accept_threshold = std::numeric_limits<double>::quiet_NaN();
};

inline ModerateResult solve_moderate(const Dataset& data, const HyperProfile& profile, Rng rng,
                                     const ModerateOptions& options = {}) {
    validate(profile);
    if (options.m_prime < options.pool_size + options.test_size)
        throw std::invalid_argument("solve_moderate: m' smaller than pool + test split");
    const size_t n = data.dim();
    const double tau = data.meta.tau;
    if (!(tau > 0.0 && tau < 0.5)) throw std::invalid_argument("solve_moderate: dataset tau unknown");
    detail::PhaseClock clock;
    ModerateResult res;

    const double gap = 0.5 - tau;
    res.m1 = static_cast<size_t>(std::ceil(2.0 * n / (gap * gap) - 1e-9));
    if (data.size() <= res.m1)
        throw std::invalid_argument("solve_moderate: dataset smaller than the m1 test split");
    res.accept_threshold = moderate_accept_threshold(n, tau, res.m1);

    const size_t train_size = data.size() - res.m1;
    Dataset train, test;
    train.inputs = BitMatrix(train_size, n);
    train.labels = BitVector(train_size);
    train.meta = data.meta;
    test.inputs = BitMatrix(res.m1, n);
    test.labels = BitVector(res.m1);
    test.meta = data.meta;
    for (size_t i = 0; i < train_size; ++i) {
        train.inputs.set_row(i, data.inputs.row(i));
        train.labels.set(i, data.labels.get(i));
    }
    for (size_t i = 0; i < res.m1; ++i) {
        test.inputs.set_row(i, data.inputs.row(train_size + i));
        test.labels.set(i, data.labels.get(train_size + i));
    }
    res.solve.phases.push_back({"split", clock.lap()});

    for (int r = 0; r < options.repeat; ++r) {
        Rng round_rng = rng.split("round", r);
        BatchSampler sampler(train, profile.batch ? profile.batch : train.size(),
                             round_rng.split("sampler"));
        auto model = build_base_model<float>(n, profile.width, round_rng.split("init"),
                                             profile.depth, profile.activation);
        Optimizer<float> opt({profile.optimizer, profile.learning_rate, profile.weight_decay},
                             model);
        TrainOptions topt;
        topt.record_trace = options.record_trace;
        topt.trace_interval = 100;
        topt.max_steps = options.max_steps;
        topt.max_seconds = options.max_seconds;
        auto report = run_training(model, sampler, profile.loss, {RegKind::None, 0.0}, opt,
                                   detail::bind_stop(profile.stop, nullptr), topt);
        res.solve.train_steps += report.steps;
        res.solve.trace = std::move(report.trace);
        res.solve.phases.push_back({"train", clock.lap()});

        // rebalance step: fresh (n+1)-bit inputs, pseudo-label xor the extra bit
        Rng boost_rng = round_rng.split("boost");
        Dataset boosting;
        boosting.inputs = BitMatrix(options.m_prime, n + 1);
        boosting.labels = BitVector(options.m_prime);
        boosting.meta = {static_cast<uint32_t>(n + 1), 0.0, "boosting"};
        for (size_t i = 0; i < options.m_prime; ++i) fill_random_row(boosting.inputs, i, boost_rng);
        const BitMatrix queries = detail::truncate_cols(boosting.inputs, n);
        const auto preds = predict(model, queries);
        for (size_t i = 0; i < options.m_prime; ++i) {
            const bool pseudo = preds[i] > 0.5f;
            boosting.labels.set(i, pseudo ^ boosting.inputs.get(i, n));
        }
        res.boosting_label_mean =
            static_cast<double>(boosting.labels.popcount()) / static_cast<double>(options.m_prime);
        res.solve.phases.push_back({"boost", clock.lap()});

        // post-processing: pooled Gauss on the boosting set, candidates keep
        // their first n coordinates
        PooledGaussConfig gcfg;
        gcfg.pool_size = options.pool_size;
        gcfg.test_size = options.test_size;
        gcfg.tau_prime = options.tau_prime;
        gcfg.max_iterations = options.max_gauss_iterations;
        for (int k = 0; k < options.repeat_post; ++k) {
            Rng grng = round_rng.split("post", k);
            auto gres = pooled_gauss(boosting, gcfg, grng);
            if (!gres.secret) continue;
            BitVector stripped(n);
            for (size_t i = 0; i < n; ++i) stripped.set(i, gres.secret->get(i));
            if (std::find(res.candidates.begin(), res.candidates.end(), stripped) ==
                res.candidates.end())
                res.candidates.push_back(std::move(stripped));
        }
        res.solve.phases.push_back({"gauss", clock.lap()});

        for (const auto& cand : res.candidates) {
            const double acc = 1.0 - empirical_flip_rate(test, cand);
            if (acc >= res.accept_threshold) {
                res.solve.success = true;
                res.solve.secret = cand;
                res.solve.verification_accuracy = acc;
                break;
            }
        }
        res.solve.phases.push_back({"verify", clock.lap()});
        if (options.keep_boosting_set) res.boosting_set = std::move(boosting);
        res.model = std::move(model);
        if (res.solve.success) break;
    }
    res.solve.wall_seconds = clock.total();
    res.solve.detail = res.solve.success ? "accepted" : "no candidate accepted";
    return res;
}

// ---------------------------------------------------------------------------
// Hybrid driver: enumerate suffixes of the last k secret bits, run an inner
// solver on each reduced instance, and verify candidates on held-out rows.
// ---------------------------------------------------------------------------

using InnerSolver = std::function<std::optional<BitVector>(const Dataset&, Rng)>;

struct HybridOptions {
    size_t holdout = 65536;  // rows reserved for candidate verification
    double tau_prime = std::numeric_limits<double>::quiet_NaN();  // NaN: midpoint of tau and 1/2
    std::optional<uint64_t> forced_first_suffix;
};

struct HybridResult {
    SolveResult solve;
    uint64_t suffixes_tried = 0;
    std::optional<uint64_t> winning_suffix;
};

inline HybridResult solve_hybrid(const Dataset& data, size_t suffix_width, const InnerSolver& inner,
                                 Rng rng, const HybridOptions& options = {}) {
    if (suffix_width > 24) throw std::invalid_argument("solve_hybrid: suffix width above the 2^24 guard");
    const size_t n = data.dim();
    if (suffix_width >= n) throw std::invalid_argument("solve_hybrid: suffix must be narrower than n");
    const size_t holdout = std::min(options.holdout, data.size() / 4);
    if (holdout == 0) throw std::invalid_argument("solve_hybrid: dataset too small for a holdout");

    detail::PhaseClock clock;
    HybridResult res;
    const size_t solve_rows = data.size() - holdout;
    Dataset part, held;
    part.inputs = BitMatrix(solve_rows, n);
    part.labels = BitVector(solve_rows);
    part.meta = data.meta;
    held.inputs = BitMatrix(holdout, n);
    held.labels = BitVector(holdout);
    held.meta = data.meta;
    for (size_t i = 0; i < solve_rows; ++i) {
        part.inputs.set_row(i, data.inputs.row(i));
        part.labels.set(i, data.labels.get(i));
    }
    for (size_t i = 0; i < holdout; ++i) {
        held.inputs.set_row(i, data.inputs.row(solve_rows + i));
        held.labels.set(i, data.labels.get(solve_rows + i));
    }
    const double tau = data.meta.tau;
    const double tprime = std::isnan(options.tau_prime) ? (tau + 0.5) / 2.0 : options.tau_prime;

    std::vector<uint64_t> order;
    order.reserve(size_t(1) << suffix_width);
    if (options.forced_first_suffix) order.push_back(*options.forced_first_suffix);
    for (uint64_t v = 0; v < (uint64_t(1) << suffix_width); ++v)
        if (!options.forced_first_suffix || v != *options.forced_first_suffix) order.push_back(v);

    for (uint64_t v : order) {
        ++res.suffixes_tried;
        const auto bits = suffix_bits(v, suffix_width);
        const Dataset reduced = enumerate_suffix(part, suffix_width, bits);
        auto low = inner(reduced, rng.split("suffix", v));
        if (!low) continue;
        BitVector candidate(n);
        for (size_t i = 0; i < n - suffix_width; ++i) candidate.set(i, low->get(i));
        for (size_t i = 0; i < suffix_width; ++i) candidate.set(n - suffix_width + i, bits[i] != 0);
        const auto ht = hypothesis_test(candidate, held, tprime);
        if (ht.accept) {
            res.solve.success = true;
            res.solve.secret = candidate;
            res.solve.verification_accuracy = 1.0 - ht.error_rate;
            res.winning_suffix = v;
            break;
        }
    }
    res.solve.wall_seconds = clock.total();
    res.solve.detail = res.solve.success ? "accepted" : "all suffixes failed";
    return res;
}

// Pooled-Gauss inner solver for the hybrid driver.
inline InnerSolver make_gauss_inner(PooledGaussConfig cfg) {
    return [cfg](const Dataset& reduced, Rng rng) -> std::optional<BitVector> {
        PooledGaussConfig local = cfg;
        if (reduced.size() < local.pool_size + local.test_size) {
            local.pool_size = std::min(local.pool_size, reduced.size() / 2);
            local.test_size = reduced.size() - local.pool_size;
        }
        auto res = pooled_gauss(reduced, local, rng);
        return res.secret;
    };
}

}  // namespace lpn
