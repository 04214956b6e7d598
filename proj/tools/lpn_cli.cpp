// Experiment harness: dataset generation, the three neural solvers, the
// classical baselines, hyperparameter sweeps, and the theory checks. Every
// run takes an explicit --seed and emits a JSON-lines log whose payload is
// reproducible (timing fields excepted).

#include <cmath>
#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lpn/pipelines.hpp"
#include "lpn/runlog.hpp"
#include "lpn/version.hpp"

using nlohmann::json;
using namespace lpn;

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInconclusive = 2;
constexpr int kExitUsage = 64;

struct CommonArgs {
    uint64_t seed = 0;
    std::string out;
    bool deterministic = false;
};

struct ProfileArgs {
    double lr = 0.0;  // 0: keep the setting default
    size_t batch = SIZE_MAX;
    double wd = -1.0;
    size_t width = 0;
    size_t depth = 0;
    std::string loss;
    std::string opt;
    std::string act;
    std::string stop;
    double time_cap = 0.0;
};

void add_common(CLI::App* cmd, CommonArgs& c) {
    cmd->add_option("--seed", c.seed, "experiment seed (mandatory)")->required();
    cmd->add_option("--out", c.out, "write the JSON-lines run log here as well");
    cmd->add_flag("--deterministic", c.deterministic,
                  "record deterministic mode (runs are reproducible by construction)");
    cmd->add_option("--config", "flat key=value file; command-line flags win")
        ->type_name("FILE");
}

// Flat key=value config support with command-line precedence: keys become
// --key=value tokens appended after the real arguments, skipping any flag
// already given on the command line.
std::vector<std::string> merge_config_args(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    std::string path;
    for (size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size())
            path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0)
            path = args[i].substr(9);
    }
    if (path.empty()) return args;
    std::ifstream in(path);
    if (!in) throw std::domain_error("cannot open config file " + path);
    std::set<std::string> present;
    for (const auto& a : args)
        if (a.rfind("--", 0) == 0) present.insert(a.substr(0, a.find('=')));
    auto trim = [](std::string v) {
        const auto l = v.find_first_not_of(" \t\r");
        const auto r = v.find_last_not_of(" \t\r");
        return l == std::string::npos ? std::string() : v.substr(l, r - l + 1);
    };
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::domain_error("config line without '=': " + t);
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty() || key == "config") continue;
        if (!present.count("--" + key)) args.push_back("--" + key + "=" + value);
    }
    return args;
}

void add_profile(CLI::App* cmd, ProfileArgs& p) {
    cmd->add_option("--lr", p.lr, "learning rate");
    cmd->add_option("--batch", p.batch, "batch size (0 = full dataset)");
    cmd->add_option("--wd", p.wd, "weight decay");
    cmd->add_option("--width", p.width, "hidden width");
    cmd->add_option("--depth", p.depth, "hidden depth");
    cmd->add_option("--loss", p.loss, "loss: logistic | mse | mae")
        ->check(CLI::IsMember({"logistic", "mse", "mae"}));
    cmd->add_option("--opt", p.opt, "optimizer: adam | sgd")->check(CLI::IsMember({"adam", "sgd"}));
    cmd->add_option("--act", p.act, "hidden activation: relu | sigmoid | cos")
        ->check(CLI::IsMember({"relu", "sigmoid", "cos"}));
    cmd->add_option("--stop", p.stop, "stop criterion: time:<s> | step:<k> | acc:<gamma>");
    cmd->add_option("--time-cap", p.time_cap, "wall-time safety cap in seconds");
}

Loss parse_loss(const std::string& s) {
    if (s == "logistic") return Loss::Logistic;
    if (s == "mse") return Loss::Mse;
    if (s == "mae") return Loss::Mae;
    throw std::domain_error("unknown loss " + s);
}

Activation parse_act(const std::string& s) {
    if (s == "relu") return Activation::Relu;
    if (s == "sigmoid") return Activation::Sigmoid;
    if (s == "cos") return Activation::Cosine;
    throw std::domain_error("unknown activation " + s);
}

StopSpec parse_stop(const std::string& s, uint64_t acc_interval) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw std::domain_error("stop spec needs kind:value, got " + s);
    const std::string kind = s.substr(0, colon);
    const double value = std::stod(s.substr(colon + 1));
    if (kind == "time") return StopSpec::time(value);
    if (kind == "step") return StopSpec::step(static_cast<uint64_t>(value));
    if (kind == "acc") return StopSpec::accuracy(value, acc_interval);
    throw std::domain_error("unknown stop kind " + kind);
}

HyperProfile resolve_profile(HyperProfile base, const ProfileArgs& a, uint64_t acc_interval) {
    if (a.lr > 0) base.learning_rate = a.lr;
    if (a.batch != SIZE_MAX) base.batch = a.batch;
    if (a.wd >= 0) base.weight_decay = a.wd;
    if (a.width > 0) base.width = a.width;
    if (a.depth > 0) base.depth = a.depth;
    if (!a.loss.empty()) base.loss = parse_loss(a.loss);
    if (!a.opt.empty()) base.optimizer = a.opt == "sgd" ? OptimizerKind::Sgd : OptimizerKind::Adam;
    if (!a.act.empty()) base.activation = parse_act(a.act);
    if (!a.stop.empty()) base.stop = parse_stop(a.stop, acc_interval);
    validate(base);
    return base;
}

json profile_json(const HyperProfile& p) {
    const char* stop_kind = p.stop.kind == StopSpec::Kind::Time   ? "time"
                            : p.stop.kind == StopSpec::Kind::Step ? "step"
                                                                  : "acc";
    return {{"lr", p.learning_rate},
            {"batch", p.batch},
            {"wd", p.weight_decay},
            {"width", p.width},
            {"depth", p.depth},
            {"loss", p.loss == Loss::Logistic ? "logistic" : (p.loss == Loss::Mse ? "mse" : "mae")},
            {"opt", p.optimizer == OptimizerKind::Adam ? "adam" : "sgd"},
            {"stop",
             {{"kind", stop_kind},
              {"seconds", p.stop.seconds},
              {"steps", p.stop.steps},
              {"gamma", p.stop.gamma},
              {"interval", p.stop.interval}}}};
}

void check_tau(double tau) {
    if (!(tau > 0.0 && tau < 0.5)) throw std::domain_error("tau must lie in (0, 0.5)");
}

void log_trace(RunLog& log, const std::vector<TracePoint>& trace) {
    for (const auto& t : trace) {
        json j = {{"type", "eval"}, {"step", t.step}, {"wall_ms", t.wall_ms}};
        j["train_acc"] = std::isnan(t.train_acc) ? json() : json(t.train_acc);
        j["test_acc"] = std::isnan(t.test_acc) ? json() : json(t.test_acc);
        log.record(j);
    }
}

void log_phases(RunLog& log, const std::vector<PhaseTiming>& phases) {
    for (const auto& p : phases)
        log.record({{"type", "phase"}, {"name", p.name}, {"wall_ms", p.seconds * 1e3}});
}

// Dataset source: either --data <file> or a generated instance from
// --n/--tau/--m. The planted secret is kept when available so runs can
// report ground-truth agreement.
struct DataArgs {
    std::string path;
    uint32_t n = 0;
    double tau = 0.0;
    size_t m = 0;
    long long sparsity = -1;
};

void add_data(CLI::App* cmd, DataArgs& d) {
    cmd->add_option("--data", d.path, "LPN1 dataset file");
    cmd->add_option("--n", d.n, "dimension");
    cmd->add_option("--tau", d.tau, "noise rate in (0, 0.5)");
    cmd->add_option("--m", d.m, "sample count for generated datasets");
    cmd->add_option("--sparsity", d.sparsity, "secret Hamming weight override");
}

struct LoadedData {
    Dataset data;
    std::optional<BitVector> secret;
};

LpnInstance make_instance(const DataArgs& a, Rng& rng) {
    check_tau(a.tau);
    if (a.sparsity >= 0)
        return LpnInstance::generate_with_weight(a.n, a.tau, static_cast<size_t>(a.sparsity),
                                                 rng.split("instance"));
    return LpnInstance::generate(a.n, a.tau, rng.split("instance"));
}

LoadedData resolve_data(const DataArgs& a, Rng& rng) {
    if (!a.path.empty()) {
        auto f = read_dataset_file(a.path);
        return {std::move(f.data), std::move(f.secret)};
    }
    if (a.n == 0 || a.m == 0) throw std::domain_error("need --data or --n/--tau/--m");
    const auto inst = make_instance(a, rng);
    Rng data_rng = rng.split("data");
    return {oracle_samples(inst, a.m, data_rng), inst.secret};
}

json result_base(bool success, double wall_seconds) {
    return {{"type", "result"}, {"success", success}, {"wall_ms", wall_seconds * 1e3}};
}

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

int cmd_gen(const CommonArgs& common, const DataArgs& data, const std::string& out_path,
            bool make_public) {
    if (data.n == 0 || data.m == 0 || out_path.empty())
        throw std::domain_error("gen needs --n, --tau, --m and --dataset-out");
    RunLog log(common.out);
    Rng rng(common.seed);
    const auto inst = make_instance(data, rng);
    Rng drng = rng.split("data");
    const Dataset d = oracle_samples(inst, data.m, drng);
    const auto file_secret = make_public ? std::nullopt : std::optional(inst.secret);
    write_dataset_file(out_path, d, file_secret);
    std::ofstream key(out_path + ".key");
    key << secret_hex(inst.secret) << " n=" << data.n << "\n";

    log.record({{"type", "config"},
                {"command", "gen"},
                {"version", kToolkitVersion},
                {"seed", common.seed},
                {"n", data.n},
                {"tau", data.tau},
                {"m", data.m},
                {"public", make_public},
                {"out", out_path},
                {"secret_weight", inst.secret.popcount()}});
    json res = result_base(true, 0.0);
    res["secret"] = secret_hex(inst.secret);
    res["file_bytes"] = serialize_dataset(d, file_secret).size();
    res["exit_code"] = kExitSuccess;
    log.record(res);
    return kExitSuccess;
}

// ---------------------------------------------------------------------------
// solve subcommands
// ---------------------------------------------------------------------------

int cmd_solve_abundant(const CommonArgs& common, const DataArgs& data, const ProfileArgs& pargs,
                       double gamma) {
    if (data.n == 0) throw std::domain_error("abundant needs --n and --tau (oracle access)");
    RunLog log(common.out);
    Rng rng(common.seed);
    const auto inst = make_instance(data, rng);

    HyperProfile profile = abundant_default();
    profile.stop = StopSpec::accuracy(gamma, 10);
    profile = resolve_profile(profile, pargs, 10);
    AbundantOptions options;
    options.max_seconds = pargs.time_cap > 0 ? pargs.time_cap : 1800.0;

    log.record({{"type", "config"},
                {"command", "solve"},
                {"setting", "abundant"},
                {"version", kToolkitVersion},
                {"seed", common.seed},
                {"n", data.n},
                {"tau", data.tau},
                {"gamma", gamma},
                {"deterministic", common.deterministic},
                {"profile", profile_json(profile)}});

    const auto res = solve_abundant(inst, profile, rng.split("solve"), options);
    log_trace(log, res.trace);
    log_phases(log, res.phases);
    json out = result_base(res.success, res.wall_seconds);
    out["secret"] = secret_hex(res.secret);
    out["accuracy"] = res.verification_accuracy;
    out["steps"] = res.train_steps;
    out["stop"] = res.detail;
    out["ground_truth_match"] = res.secret == inst.secret;
    out["exit_code"] = res.success ? kExitSuccess : kExitFailure;
    log.record(out);
    return res.success ? kExitSuccess : kExitFailure;
}

int cmd_solve_restricted(const CommonArgs& common, const DataArgs& data, const ProfileArgs& pargs,
                         double gamma, int repeat) {
    RunLog log(common.out);
    Rng rng(common.seed);
    auto loaded = resolve_data(data, rng);

    HyperProfile profile = resolve_profile(restricted_default(), pargs, 100);
    RestrictedOptions options;
    if (repeat > 0) options.repeat = repeat;
    if (!std::isnan(gamma) && gamma > 0) options.gamma = gamma;

    log.record({{"type", "config"},
                {"command", "solve"},
                {"setting", "restricted"},
                {"version", kToolkitVersion},
                {"seed", common.seed},
                {"n", loaded.data.dim()},
                {"tau", loaded.data.meta.tau},
                {"m", loaded.data.size()},
                {"repeat", options.repeat},
                {"deterministic", common.deterministic},
                {"profile", profile_json(profile)}});

    const auto res = solve_restricted(loaded.data, profile, rng.split("solve"), options);
    json out = result_base(res.found, res.wall_seconds);
    out["gamma"] = res.gamma;
    out["bit_index"] = loaded.data.dim() - 1;
    out["guess"] = res.guess;
    out["accuracy"] = res.best_accuracy;
    out["successful_inits"] = res.successful_inits;
    out["steps"] = res.total_steps;
    if (loaded.secret)
        out["ground_truth_match"] =
            res.found && res.guess == (loaded.secret->get(loaded.data.dim() - 1) ? 1 : 0);
    const int code = res.found ? kExitSuccess : kExitInconclusive;
    out["exit_code"] = code;
    log.record(out);
    return code;
}

int cmd_solve_moderate(const CommonArgs& common, const DataArgs& data, const ProfileArgs& pargs,
                       double tau_prime, size_t m_prime, size_t pool, size_t test, int repeat,
                       int repeat_post) {
    RunLog log(common.out);
    Rng rng(common.seed);
    auto loaded = resolve_data(data, rng);

    HyperProfile profile = moderate_default();
    if (pargs.time_cap > 0) profile.stop = StopSpec::time(pargs.time_cap);
    profile = resolve_profile(profile, pargs, 100);
    ModerateOptions options;
    options.tau_prime = tau_prime;
    options.m_prime = m_prime;
    options.pool_size = pool;
    options.test_size = test;
    if (repeat > 0) options.repeat = repeat;
    if (repeat_post > 0) options.repeat_post = repeat_post;

    log.record({{"type", "config"},
                {"command", "solve"},
                {"setting", "moderate"},
                {"version", kToolkitVersion},
                {"seed", common.seed},
                {"n", loaded.data.dim()},
                {"tau", loaded.data.meta.tau},
                {"m", loaded.data.size()},
                {"tau_prime", tau_prime},
                {"m_prime", m_prime},
                {"pool", pool},
                {"test", test},
                {"repeat", options.repeat},
                {"repeat_post", options.repeat_post},
                {"deterministic", common.deterministic},
                {"profile", profile_json(profile)}});

    const auto res = solve_moderate(loaded.data, profile, rng.split("solve"), options);
    log_trace(log, res.solve.trace);
    log_phases(log, res.solve.phases);
    json out = result_base(res.solve.success, res.solve.wall_seconds);
    out["secret"] = res.solve.success ? secret_hex(res.solve.secret) : "";
    out["accuracy"] = res.solve.verification_accuracy;
    out["accept_threshold"] = res.accept_threshold;
    out["m1"] = res.m1;
    out["boosting_label_mean"] = res.boosting_label_mean;
    out["candidates"] = res.candidates.size();
    out["steps"] = res.solve.train_steps;
    if (loaded.secret)
        out["ground_truth_match"] = res.solve.success && res.solve.secret == *loaded.secret;
    out["exit_code"] = res.solve.success ? kExitSuccess : kExitFailure;
    log.record(out);
    return res.solve.success ? kExitSuccess : kExitFailure;
}

int cmd_solve_gauss(const CommonArgs& common, const DataArgs& data, double tau_prime, size_t pool,
                    size_t test, size_t max_iters) {
    RunLog log(common.out);
    Rng rng(common.seed);
    DataArgs d = data;
    if (d.path.empty() && d.m == 0) d.m = pool + test;
    auto loaded = resolve_data(d, rng);

    PooledGaussConfig cfg;
    cfg.pool_size = std::min(pool, loaded.data.size() / 2);
    cfg.test_size = std::min(test, loaded.data.size() - cfg.pool_size);
    cfg.tau_prime = std::isnan(tau_prime) ? (loaded.data.meta.tau + 0.5) / 2.0 : tau_prime;
    cfg.max_iterations = max_iters;

    log.record({{"type", "config"},
                {"command", "solve"},
                {"setting", "gauss"},
                {"version", kToolkitVersion},
                {"seed", common.seed},
                {"n", loaded.data.dim()},
                {"tau", loaded.data.meta.tau},
                {"m", loaded.data.size()},
                {"tau_prime", cfg.tau_prime},
                {"pool", cfg.pool_size},
                {"test", cfg.test_size},
                {"max_iters", cfg.max_iterations},
                {"deterministic", common.deterministic}});

    detail::PhaseClock clock;
    Rng grng = rng.split("gauss");
    const auto res = pooled_gauss(loaded.data, cfg, grng);
    json out = result_base(res.secret.has_value(), clock.total());
    out["secret"] = res.secret ? secret_hex(*res.secret) : "";
    out["candidate_draws"] = res.candidate_draws;
    out["singular_draws"] = res.singular_draws;
    if (res.secret) out["error_rate"] = res.error_rate;
    if (loaded.secret) out["ground_truth_match"] = res.secret && *res.secret == *loaded.secret;
    out["exit_code"] = res.secret ? kExitSuccess : kExitFailure;
    log.record(out);
    return res.secret ? kExitSuccess : kExitFailure;
}

int cmd_solve_hybrid(const CommonArgs& common, const DataArgs& data, const ProfileArgs& pargs,
                     size_t suffix_width, const std::string& inner_name, double tau_prime,
                     size_t m_prime, size_t pool, size_t test, int repeat_post) {
    RunLog log(common.out);
    Rng rng(common.seed);
    auto loaded = resolve_data(data, rng);

    InnerSolver inner;
    if (inner_name == "gauss") {
        PooledGaussConfig cfg;
        cfg.pool_size = pool;
        cfg.test_size = test;
        cfg.tau_prime = std::isnan(tau_prime) ? (loaded.data.meta.tau + 0.5) / 2.0 : tau_prime;
        cfg.max_iterations = 4000;
        inner = make_gauss_inner(cfg);
    } else {  // moderate
        HyperProfile profile = moderate_default();
        if (pargs.time_cap > 0) profile.stop = StopSpec::time(pargs.time_cap);
        const HyperProfile resolved = resolve_profile(profile, pargs, 100);
        ModerateOptions mopt;
        mopt.tau_prime = std::isnan(tau_prime) ? 0.483 : tau_prime;
        mopt.m_prime = m_prime;
        mopt.pool_size = pool;
        mopt.test_size = test;
        if (repeat_post > 0) mopt.repeat_post = repeat_post;
        inner = [resolved, mopt](const Dataset& reduced, Rng r) -> std::optional<BitVector> {
            auto res = solve_moderate(reduced, resolved, r, mopt);
            if (!res.solve.success) return std::nullopt;
            return res.solve.secret;
        };
    }

    log.record({{"type", "config"},
                {"command", "solve"},
                {"setting", "hybrid"},
                {"version", kToolkitVersion},
                {"seed", common.seed},
                {"n", loaded.data.dim()},
                {"tau", loaded.data.meta.tau},
                {"m", loaded.data.size()},
                {"suffix_bits", suffix_width},
                {"inner", inner_name},
                {"deterministic", common.deterministic}});

    const auto res = solve_hybrid(loaded.data, suffix_width, inner, rng.split("solve"));
    json out = result_base(res.solve.success, res.solve.wall_seconds);
    out["secret"] = res.solve.success ? secret_hex(res.solve.secret) : "";
    out["accuracy"] = res.solve.verification_accuracy;
    out["suffixes_tried"] = res.suffixes_tried;
    if (res.winning_suffix) out["winning_suffix"] = *res.winning_suffix;
    if (loaded.secret)
        out["ground_truth_match"] = res.solve.success && res.solve.secret == *loaded.secret;
    out["exit_code"] = res.solve.success ? kExitSuccess : kExitFailure;
    log.record(out);
    return res.solve.success ? kExitSuccess : kExitFailure;
}

// ---------------------------------------------------------------------------
// tune
// ---------------------------------------------------------------------------

std::vector<double> parse_grid(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    if (out.empty()) throw std::domain_error("empty grid: " + csv);
    return out;
}

int cmd_tune_abundant(const CommonArgs& common, uint32_t n, double tau, const std::string& lr_grid,
                      const std::string& batch_grid, const ProfileArgs& pargs, int repeat,
                      double gamma, double time_cap) {
    check_tau(tau);
    RunLog log(common.out);
    const auto lrs = lr_grid.empty() ? std::vector<double>{abundant_default().learning_rate}
                                     : parse_grid(lr_grid);
    const auto batches = batch_grid.empty()
                             ? std::vector<double>{static_cast<double>(abundant_default().batch)}
                             : parse_grid(batch_grid);
    std::vector<HyperProfile> profiles;
    for (double b : batches)
        for (double lr : lrs) {
            HyperProfile p = resolve_profile(abundant_default(), pargs, 10);
            p.learning_rate = lr;
            p.batch = static_cast<size_t>(b);
            profiles.push_back(p);
        }
    TuneAbundantConfig cfg;
    cfg.n = n;
    cfg.tau = tau;
    cfg.repeat = repeat;
    cfg.gamma = gamma;
    cfg.wall_cap_seconds = time_cap > 0 ? time_cap : 600.0;

    log.record({{"type", "config"},
                {"command", "tune"},
                {"setting", "abundant"},
                {"version", kToolkitVersion},
                {"seed", common.seed},
                {"n", n},
                {"tau", tau},
                {"repeat", repeat},
                {"gamma", gamma},
                {"profiles", profiles.size()},
                {"deterministic", common.deterministic}});

    const auto res = tune_abundant(profiles, cfg, Rng(common.seed));
    for (size_t i = 0; i < profiles.size(); ++i) {
        const double s = res.seconds[i];
        log.record({{"type", "cell"},
                    {"profile", profile_json(profiles[i])},
                    {"seconds", std::isinf(s) ? json() : json(s)},
                    {"solved", !std::isinf(s)}});
    }
    // lr rows x batch columns, seconds to reach gamma
    std::fprintf(stderr, "%12s", "lr \\ batch");
    for (double b : batches) std::fprintf(stderr, " %10zu", static_cast<size_t>(b));
    std::fprintf(stderr, "\n");
    for (size_t li = 0; li < lrs.size(); ++li) {
        std::fprintf(stderr, "%12g", lrs[li]);
        for (size_t bi = 0; bi < batches.size(); ++bi) {
            const double s = res.seconds[bi * lrs.size() + li];
            if (std::isinf(s))
                std::fprintf(stderr, " %10s", ">cap");
            else
                std::fprintf(stderr, " %10.1f", s);
        }
        std::fprintf(stderr, "\n");
    }
    json out = result_base(!std::isinf(res.seconds[res.best_index]), 0.0);
    out["best_profile"] = profile_json(profiles[res.best_index]);
    out["exit_code"] = kExitSuccess;
    log.record(out);
    return kExitSuccess;
}

int cmd_tune_restricted(const CommonArgs& common, uint32_t n, double tau,
                        const std::string& m_grid, const std::string& lr_grid,
                        const std::string& wd_grid, const ProfileArgs& pargs, int repeat,
                        int solver_repeat) {
    check_tau(tau);
    if (m_grid.empty()) throw std::domain_error("tune restricted needs --m-grid");
    RunLog log(common.out);
    std::vector<size_t> grid;
    for (double half_log2 : parse_grid(m_grid)) grid.push_back(half_log2_to_samples(half_log2));
    std::vector<HyperProfile> profiles;
    const auto lrs = lr_grid.empty() ? std::vector<double>{0} : parse_grid(lr_grid);
    const auto wds = wd_grid.empty() ? std::vector<double>{-1} : parse_grid(wd_grid);
    for (double wd : wds)
        for (double lr : lrs) {
            HyperProfile p = resolve_profile(restricted_default(), pargs, 100);
            if (lr > 0) p.learning_rate = lr;
            if (wd >= 0) p.weight_decay = wd;
            profiles.push_back(p);
        }
    TuneRestrictedConfig cfg;
    cfg.n = n;
    cfg.tau = tau;
    cfg.repeat = repeat;
    if (solver_repeat > 0) cfg.solver.repeat = solver_repeat;

    log.record({{"type", "config"},
                {"command", "tune"},
                {"setting", "restricted"},
                {"version", kToolkitVersion},
                {"seed", common.seed},
                {"n", n},
                {"tau", tau},
                {"repeat", repeat},
                {"grid", grid},
                {"profiles", profiles.size()},
                {"deterministic", common.deterministic}});

    const auto res = tune_restricted(profiles, grid, cfg, Rng(common.seed));
    for (size_t i = 0; i < profiles.size(); ++i) {
        json cell = {{"type", "cell"}, {"profile", profile_json(profiles[i])}};
        cell["min_samples"] = res.min_samples[i] ? json(*res.min_samples[i]) : json();
        log.record(cell);
        const bool is_default_wd = profiles[i].weight_decay == restricted_default().weight_decay;
        std::fprintf(stderr, "%-44s%s %s\n", profiles[i].summary().c_str(),
                     is_default_wd ? " *" : "  ",
                     res.min_samples[i] ? std::to_string(*res.min_samples[i]).c_str()
                                        : "failed at grid max");
    }
    json out = result_base(res.min_samples[res.best_index].has_value(), 0.0);
    out["best_profile"] = profile_json(profiles[res.best_index]);
    if (res.min_samples[res.best_index]) out["min_samples"] = *res.min_samples[res.best_index];
    out["exit_code"] = kExitSuccess;
    log.record(out);
    return kExitSuccess;
}

// ---------------------------------------------------------------------------
// verify-theory
// ---------------------------------------------------------------------------

bool check_parity_net(Rng rng, RunLog& log) {
    size_t mismatches = 0;
    for (int t = 0; t < 20; ++t) {
        const size_t n = 12;
        auto s = BitVector::random(n, rng);
        auto net = build_parity_network<double>(s);
        ForwardScratch<double> scratch;
        for (uint64_t v = 0; v < (uint64_t(1) << n); ++v) {
            BitVector x(n);
            for (size_t b = 0; b < n; ++b) x.set(b, (v >> b) & 1);
            const double out = forward_row(net, x.words(), scratch);
            if (out != static_cast<double>(dot_parity(s, x))) ++mismatches;
        }
    }
    const bool pass = mismatches == 0;
    log.record({{"type", "check"},
                {"name", "parity-net"},
                {"pass", pass},
                {"mismatches", mismatches},
                {"cases", 20 * 4096}});
    std::printf("[parity-net] %s (%zu mismatches over %d exhaustive cases)\n",
                pass ? "PASS" : "FAIL", mismatches, 20 * 4096);
    return pass;
}

bool check_grad(Rng rng, RunLog& log) {
    double worst = 0.0;
    int done = 0;
    for (int t = 0; done < 50; ++t) {
        const size_t n = 2 + rng.below(9);
        const size_t d = 2 + rng.below(15);
        Rng init = rng.split("init", t);
        auto m = build_base_model<double>(n, d, init, 1 + rng.below(2));
        Dataset batch;
        batch.inputs = BitMatrix::random(1 + rng.below(16), n, rng);
        batch.labels = BitVector::random(batch.inputs.rows(), rng);
        batch.meta = {static_cast<uint32_t>(n), 0.0, "check"};
        // skip draws whose relu pre-activations sit inside the FD step
        double margin = 1e300;
        ForwardScratch<double> s;
        for (size_t r = 0; r < batch.size(); ++r) {
            forward_row(m, batch.inputs.row_words(r), s);
            for (size_t l = 0; l < m.layers.size(); ++l)
                if (m.layers[l].act == Activation::Relu)
                    for (double x : s.pre[l]) margin = std::min(margin, std::abs(x));
        }
        if (margin < 1e-4) continue;
        ++done;
        const Loss loss = t % 3 == 0 ? Loss::Logistic : (t % 3 == 1 ? Loss::Mse : Loss::Mae);
        Gradients<double> g;
        backward_batch(m, batch, loss, {}, g);
        const double h = 1e-6;
        for (size_t l = 0; l < m.layers.size(); ++l) {
            auto probe = [&](std::vector<double>& params, const std::vector<double>& grad) {
                for (size_t k = 0; k < params.size(); ++k) {
                    const double orig = params[k];
                    params[k] = orig + h;
                    const double up = batch_loss(m, batch, loss, {});
                    params[k] = orig - h;
                    const double dn = batch_loss(m, batch, loss, {});
                    params[k] = orig;
                    const double fd = (up - dn) / (2 * h);
                    const double denom = std::max({std::abs(fd), std::abs(grad[k]), 1e-5});
                    worst = std::max(worst, std::abs(fd - grad[k]) / denom);
                }
            };
            probe(m.layers[l].w, g.w[l]);
            probe(m.layers[l].b, g.b[l]);
        }
    }
    const bool pass = worst < 1e-4;
    log.record({{"type", "check"}, {"name", "grad-check"}, {"pass", pass}, {"max_rel_err", worst}});
    std::printf("[grad-check] %s (max relative error %.3g, tolerance 1e-4)\n", pass ? "PASS" : "FAIL",
                worst);
    return pass;
}

bool check_grad_scaling(Rng rng, RunLog& log) {
    const size_t n = 10, d = 16, B = 100000;
    const double tau = 0.25;
    auto s = sample_secret_with_weight(n, 3, rng);
    auto model = build_base_model<double>(n, d, rng.split("init"), 1, Activation::Sigmoid);
    Rng probe = rng.split("probe");
    const auto res = gradient_scaling_probe(model, s, B, tau, probe);
    const double eps = grad_scaling_epsilon(n, d, res.c_max, tau, B, 0.01);
    const bool pass = res.max_deviation < eps;
    log.record({{"type", "check"},
                {"name", "grad-scaling"},
                {"pass", pass},
                {"max_deviation", res.max_deviation},
                {"epsilon", eps},
                {"B", B},
                {"tau", tau}});
    std::printf("[grad-scaling] %s (max block deviation %.3g < eps %.3g at B=%zu, tau=%.2f)\n",
                pass ? "PASS" : "FAIL", res.max_deviation, eps, B, tau);
    return pass;
}

bool check_lemma1(Rng rng, RunLog& log) {
    size_t label_mismatches = 0, recover_failures = 0;
    for (int t = 0; t < 40; ++t) {
        const size_t n = 2 + rng.below(7);
        const size_t m = n + 1 + rng.below(56);
        const double tau = t % 2 ? 0.25 : 0.0;
        auto s = BitVector::random(n, rng);
        auto d = make_noisy_dataset(s, m, tau, rng);
        auto tr = sparse_secret_transform(d);
        if (!tr) continue;
        BitVector e(m);
        for (size_t i = 0; i < m; ++i)
            e.set(i, d.labels.get(i) ^ (dot_parity(d.inputs.row(i), s) != 0));
        BitVector e1(n);
        for (size_t i = 0; i < n; ++i) e1.set(i, e.get(tr->block.consumed_rows[i]));
        std::vector<bool> consumed(m, false);
        for (size_t r : tr->block.consumed_rows) consumed[r] = true;
        size_t o = 0;
        for (size_t r = 0; r < m; ++r) {
            if (consumed[r]) continue;
            const bool want = (dot_parity(e1, tr->data.inputs.row(o)) != 0) ^ e.get(r);
            if (tr->data.labels.get(o) != want) ++label_mismatches;
            ++o;
        }
        if (recover_original_secret(tr->block, e1) != s) ++recover_failures;
    }
    const bool pass = label_mismatches == 0 && recover_failures == 0;
    log.record({{"type", "check"},
                {"name", "lemma1"},
                {"pass", pass},
                {"label_mismatches", label_mismatches},
                {"recover_failures", recover_failures}});
    std::printf("[lemma1] %s (%zu label mismatches, %zu recovery failures)\n", pass ? "PASS" : "FAIL",
                label_mismatches, recover_failures);
    return pass;
}

bool check_piling_up(Rng rng, RunLog& log) {
    const double analytic = predicted_bkw_noise(0.25, 3);
    const bool analytic_ok = std::abs(analytic - 0.498) <= 0.0005;
    // simulate the xor of 2^3 Bernoulli(0.25) errors
    const size_t trials = 1000000;
    size_t flips = 0;
    for (size_t t = 0; t < trials; ++t) {
        int x = 0;
        for (int k = 0; k < 8; ++k) x ^= rng.bernoulli(0.25) ? 1 : 0;
        flips += x;
    }
    const double empirical = static_cast<double>(flips) / trials;
    const bool empirical_ok = std::abs(empirical - 0.498) <= 0.002;
    const bool pass = analytic_ok && empirical_ok;
    log.record({{"type", "check"},
                {"name", "piling-up"},
                {"pass", pass},
                {"analytic", analytic},
                {"empirical", empirical}});
    std::printf("[piling-up] %s (analytic %.6f, empirical %.6f, target 0.498)\n",
                pass ? "PASS" : "FAIL", analytic, empirical);
    return pass;
}

int cmd_verify_theory(const CommonArgs& common, const std::string& check) {
    RunLog log(common.out);
    log.record({{"type", "config"},
                {"command", "verify-theory"},
                {"version", kToolkitVersion},
                {"seed", common.seed},
                {"check", check}});
    Rng rng(common.seed);
    bool pass = true;
    const bool all = check == "all";
    if (all || check == "parity-net") pass &= check_parity_net(rng.split("parity-net"), log);
    if (all || check == "grad-check") pass &= check_grad(rng.split("grad-check"), log);
    if (all || check == "grad-scaling") pass &= check_grad_scaling(rng.split("grad-scaling"), log);
    if (all || check == "lemma1") pass &= check_lemma1(rng.split("lemma1"), log);
    if (all || check == "piling-up") pass &= check_piling_up(rng.split("piling-up"), log);
    json out = result_base(pass, 0.0);
    out["exit_code"] = pass ? kExitSuccess : kExitFailure;
    log.record(out);
    return pass ? kExitSuccess : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string(kToolkitVersion) + " - LPN solving experiments"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen", "generate an LPN1 dataset file plus a sidecar key file");
    CommonArgs gen_common;
    DataArgs gen_data;
    std::string gen_out;
    bool gen_public = false;
    add_common(gen, gen_common);
    add_data(gen, gen_data);
    gen->add_option("--dataset-out", gen_out, "output dataset path")->required();
    gen->add_flag("--public", gen_public, "omit the secret from the dataset file");

    auto* solve = app.add_subcommand("solve", "run a solver");
    solve->require_subcommand(1);
    struct SolveArgs {
        CommonArgs common;
        DataArgs data;
        ProfileArgs profile;
        double gamma = std::numeric_limits<double>::quiet_NaN();
        double tau_prime = std::numeric_limits<double>::quiet_NaN();
        size_t m_prime = 231072, pool = 131072, test = 100000;
        size_t max_iters = 200000;
        size_t suffix_bits = 0;
        std::string inner = "gauss";
        int repeat = 0, repeat_post = 0;
    };
    auto add_solve_sub = [&](const char* name, const char* help) {
        auto* sub = solve->add_subcommand(name, help);
        auto args = std::make_shared<SolveArgs>();
        add_common(sub, args->common);
        add_data(sub, args->data);
        add_profile(sub, args->profile);
        sub->add_option("--gamma", args->gamma, "accuracy threshold");
        sub->add_option("--tau-prime", args->tau_prime, "hypothesis-test error threshold");
        sub->add_option("--m-prime", args->m_prime, "boosting set size");
        sub->add_option("--pool", args->pool, "pooled-Gauss sample pool size");
        sub->add_option("--test", args->test, "hypothesis-test sample count");
        sub->add_option("--max-iters", args->max_iters, "pooled-Gauss draw budget");
        sub->add_option("--suffix-bits", args->suffix_bits, "suffix width to enumerate");
        sub->add_option("--inner", args->inner, "hybrid inner solver: gauss | moderate")
            ->check(CLI::IsMember({"gauss", "moderate"}));
        sub->add_option("--repeat", args->repeat, "initializations / rounds");
        sub->add_option("--repeat-post", args->repeat_post, "pooled-Gauss repetitions");
        return args;
    };
    auto abundant_args = add_solve_sub("abundant", "oracle-sampler training, direct secret read-out");
    auto restricted_args = add_solve_sub("restricted", "guess the last secret bit from a fixed dataset");
    auto moderate_args = add_solve_sub("moderate", "train, rebalance-boost, pooled-Gauss decode");
    auto gauss_args = add_solve_sub("gauss", "pooled Gaussian elimination baseline");
    auto hybrid_args = add_solve_sub("hybrid", "enumerate a secret suffix around an inner solver");
    CLI::App* solve_subs[] = {solve->get_subcommand("abundant"), solve->get_subcommand("restricted"),
                              solve->get_subcommand("moderate"), solve->get_subcommand("gauss"),
                              solve->get_subcommand("hybrid")};

    auto* tune = app.add_subcommand("tune", "hyperparameter sweeps");
    tune->require_subcommand(1);
    struct TuneArgs {
        CommonArgs common;
        ProfileArgs profile;
        uint32_t n = 0;
        double tau = 0.0;
        std::string lr_grid, batch_grid, m_grid, wd_grid;
        int repeat = 3;
        int solver_repeat = 0;
        double gamma = 0.8;
    };
    auto add_tune_sub = [&](const char* name, const char* help) {
        auto* sub = tune->add_subcommand(name, help);
        auto args = std::make_shared<TuneArgs>();
        add_common(sub, args->common);
        add_profile(sub, args->profile);
        sub->add_option("--n", args->n, "dimension")->required();
        sub->add_option("--tau", args->tau, "noise rate")->required();
        sub->add_option("--lr-grid", args->lr_grid, "comma list of learning rates");
        sub->add_option("--batch-grid", args->batch_grid, "comma list of batch sizes");
        sub->add_option("--m-grid", args->m_grid, "comma list of log2 sample counts (halves ok)");
        sub->add_option("--wd-grid", args->wd_grid, "comma list of weight decays");
        sub->add_option("--repeat", args->repeat, "trials per cell");
        sub->add_option("--solver-repeat", args->solver_repeat, "inits per restricted trial");
        sub->add_option("--gamma", args->gamma, "accuracy threshold for timing runs");
        return args;
    };
    auto tune_abundant_args = add_tune_sub("abundant", "time-to-accuracy over an (lr x batch) grid");
    auto tune_restricted_args = add_tune_sub("restricted", "minimal sample count by binary search");

    auto* verify = app.add_subcommand("verify-theory", "run the exactness/statistical checks");
    CommonArgs verify_common;
    std::string verify_check = "all";
    add_common(verify, verify_common);
    verify->add_option("--check", verify_check,
                       "parity-net | grad-check | grad-scaling | lemma1 | piling-up | all")
        ->check(CLI::IsMember(
            {"parity-net", "grad-check", "grad-scaling", "lemma1", "piling-up", "all"}));

    std::vector<std::string> merged;
    try {
        merged = merge_config_args(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    std::vector<char*> cargs;
    cargs.reserve(merged.size());
    for (auto& a : merged) cargs.push_back(a.data());
    try {
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (gen->parsed()) return cmd_gen(gen_common, gen_data, gen_out, gen_public);
        if (solve_subs[0]->parsed())
            return cmd_solve_abundant(abundant_args->common, abundant_args->data,
                                      abundant_args->profile,
                                      std::isnan(abundant_args->gamma) ? 0.8 : abundant_args->gamma);
        if (solve_subs[1]->parsed())
            return cmd_solve_restricted(restricted_args->common, restricted_args->data,
                                        restricted_args->profile, restricted_args->gamma,
                                        restricted_args->repeat);
        if (solve_subs[2]->parsed())
            return cmd_solve_moderate(
                moderate_args->common, moderate_args->data, moderate_args->profile,
                std::isnan(moderate_args->tau_prime) ? 0.483 : moderate_args->tau_prime,
                moderate_args->m_prime, moderate_args->pool, moderate_args->test,
                moderate_args->repeat, moderate_args->repeat_post);
        if (solve_subs[3]->parsed())
            return cmd_solve_gauss(gauss_args->common, gauss_args->data, gauss_args->tau_prime,
                                   gauss_args->pool, gauss_args->test, gauss_args->max_iters);
        if (solve_subs[4]->parsed())
            return cmd_solve_hybrid(hybrid_args->common, hybrid_args->data, hybrid_args->profile,
                                    hybrid_args->suffix_bits, hybrid_args->inner,
                                    hybrid_args->tau_prime, hybrid_args->m_prime, hybrid_args->pool,
                                    hybrid_args->test, hybrid_args->repeat_post);
        if (tune->get_subcommand("abundant")->parsed())
            return cmd_tune_abundant(tune_abundant_args->common, tune_abundant_args->n,
                                     tune_abundant_args->tau, tune_abundant_args->lr_grid,
                                     tune_abundant_args->batch_grid, tune_abundant_args->profile,
                                     tune_abundant_args->repeat, tune_abundant_args->gamma,
                                     tune_abundant_args->profile.time_cap);
        if (tune->get_subcommand("restricted")->parsed())
            return cmd_tune_restricted(tune_restricted_args->common, tune_restricted_args->n,
                                       tune_restricted_args->tau, tune_restricted_args->m_grid,
                                       tune_restricted_args->lr_grid, tune_restricted_args->wd_grid,
                                       tune_restricted_args->profile, tune_restricted_args->repeat,
                                       tune_restricted_args->solver_repeat);
        if (verify->parsed()) return cmd_verify_theory(verify_common, verify_check);
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}
