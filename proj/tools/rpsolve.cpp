// Command line front end for the solver library.
//
//   recon     baseline policy and threat tables for an environment
//   plan      action pool and restricted plan from recon artifacts
//   run       full comparison: solve or train each method, evaluate, write tables
//   heatmap   least composed collision threat around a fixed agent motion state
//   transfer  re-evaluate trained artifacts on a changed environment
//
// Exit codes: 0 success, 2 invalid input or configuration, 3 when a plan
// stays uncertified while --require-certified is set.
//
// metrics.json, summary.csv and the per-episode tables hold only values that
// are exact functions of the configuration, so a rerun is byte identical;
// wall-clock numbers go to timings.json and stdout instead.

#include "rpmdp/baselines.hpp"
#include "rpmdp/cmdp.hpp"
#include "rpmdp/envs.hpp"
#include "rpmdp/experiment.hpp"
#include "rpmdp/io.hpp"
#include "rpmdp/planner.hpp"
#include "rpmdp/secure.hpp"
#include "rpmdp/sim.hpp"
#include "rpmdp/threat.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rpmdp;

namespace {

// Joint spaces larger than this are never enumerated for certification.
constexpr std::size_t kJointEnumCap = 200000;

ThreatMode parse_mode(const std::string& name) {
    if (name == "discounted") return ThreatMode::discounted;
    if (name == "accident") return ThreatMode::accident;
    throw ValidationError("unknown danger mode: " + name +
                          " (expected discounted or accident)");
}

const char* mode_name(ThreatMode mode) {
    return mode == ThreatMode::discounted ? "discounted" : "accident";
}

json load_json_file(const std::string& path) {
    try {
        return json::parse(io::read_text(path));
    } catch (const json::parse_error& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

void save_json_file(const fs::path& path, const json& j) {
    io::write_text(path.string(), j.dump(2) + "\n");
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    }
};

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

// Evaluation streams are keyed by the user's seed; training draws its own
// stream so the learner never replays the episodes it is graded on.
std::uint64_t train_seed(std::uint64_t seed) { return seed ^ 0x9e3779b97f4a7c15ull; }

double expect_double(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (...) {
        throw ValidationError(std::string("bad ") + what + ": " + s);
    }
}

long expect_long(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (...) {
        throw ValidationError(std::string("bad ") + what + ": " + s);
    }
}

// ---------------------------------------------------------------------------
// Method list: rp | penalized-q(lambda) | mpc(k).

struct MethodSpec {
    std::string name;
    double lambda = 1.0;
    long train_episodes = 20000;
    int k = 3;
    std::string label; // directory name, unique per method instance
};

void finish_label(MethodSpec& ms) {
    char buf[64];
    if (ms.name == "rp") {
        ms.label = "rp";
    } else if (ms.name == "penalized-q") {
        std::snprintf(buf, sizeof buf, "penalized-q_lambda%g", ms.lambda);
        ms.label = buf;
    } else if (ms.name == "mpc") {
        std::snprintf(buf, sizeof buf, "mpc_k%d", ms.k);
        ms.label = buf;
    } else {
        throw ValidationError("unknown method: " + ms.name +
                              " (expected rp, penalized-q or mpc)");
    }
}

MethodSpec method_from_token(const std::string& tok) {
    MethodSpec ms;
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : tok) {
        if (ch == ':') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    parts.push_back(cur);
    ms.name = parts[0];
    if (ms.name == "penalized-q") {
        if (parts.size() > 1) ms.lambda = expect_double(parts[1], "penalty weight");
        if (parts.size() > 2) ms.train_episodes = expect_long(parts[2], "episode count");
    } else if (ms.name == "mpc") {
        if (parts.size() > 1) ms.k = static_cast<int>(expect_long(parts[1], "lookahead"));
    } else if (parts.size() > 1) {
        throw ValidationError("method " + ms.name + " takes no parameters");
    }
    finish_label(ms);
    return ms;
}

MethodSpec method_from_json(const json& j) {
    if (j.is_string()) return method_from_token(j.get<std::string>());
    MethodSpec ms;
    ms.name = j.at("name").get<std::string>();
    ms.lambda = j.value("lambda", ms.lambda);
    ms.train_episodes = j.value("train_episodes", ms.train_episodes);
    ms.k = j.value("k", ms.k);
    finish_label(ms);
    return ms;
}

json methods_json(const std::vector<MethodSpec>& methods) {
    json arr = json::array();
    for (const auto& ms : methods) {
        json j{{"name", ms.name}};
        if (ms.name == "penalized-q") {
            j["lambda"] = ms.lambda;
            j["train_episodes"] = ms.train_episodes;
        } else if (ms.name == "mpc") {
            j["k"] = ms.k;
        }
        arr.push_back(std::move(j));
    }
    return arr;
}

// ---------------------------------------------------------------------------
// Environment specs.  A spec is a JSON object with a "kind" plus the fields
// of the matching config struct; coordinates are [x, y] pairs.

std::array<int, 2> coord(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 2)
        throw ValidationError(std::string(what) + " must be an [x, y] pair");
    return {j[0].get<int>(), j[1].get<int>()};
}

std::vector<std::array<int, 2>> coord_list(const json& j, const char* what) {
    std::vector<std::array<int, 2>> out;
    for (const auto& e : j) out.push_back(coord(e, what));
    return out;
}

struct BuiltEnv {
    std::string kind;
    json spec;
    std::optional<Cmdp> model; // dense model; built on demand for obstacle fields
    std::unique_ptr<JamEnv> jam;
    std::size_t dense_cap = 2000;
};

BuiltEnv build_env(const json& spec, std::size_t dense_cap) {
    if (!spec.is_object() || !spec.contains("kind"))
        throw ValidationError(
            "environment spec needs a kind (random, gather, circuit, jam or trap)");
    BuiltEnv env;
    env.kind = spec.at("kind").get<std::string>();
    env.spec = spec;
    env.dense_cap = dense_cap;
    if (env.kind == "random") {
        RandomCmdpConfig cfg;
        cfg.n_states = spec.value("n_states", cfg.n_states);
        cfg.n_actions = spec.value("n_actions", cfg.n_actions);
        cfg.horizon = spec.value("horizon", cfg.horizon);
        cfg.gamma = spec.value("gamma", cfg.gamma);
        cfg.beta = spec.value("beta", cfg.beta);
        cfg.hazard_density = spec.value("hazard_density", cfg.hazard_density);
        cfg.dirichlet = spec.value("dirichlet", cfg.dirichlet);
        cfg.uniform_initial = spec.value("uniform_initial", cfg.uniform_initial);
        cfg.seed = spec.value("seed", cfg.seed);
        env.model = random_cmdp(cfg);
    } else if (env.kind == "gather") {
        GatherConfig cfg;
        if (spec.contains("layout")) {
            cfg = gather_from_layout(spec.at("layout").get<std::vector<std::string>>());
        } else if (spec.contains("layout_file")) {
            cfg = gather_from_layout(
                io::load_layout(spec.at("layout_file").get<std::string>()));
        } else {
            cfg.width = spec.value("width", cfg.width);
            cfg.height = spec.value("height", cfg.height);
            cfg.start_x = spec.value("start_x", cfg.start_x);
            cfg.start_y = spec.value("start_y", cfg.start_y);
            if (spec.contains("apples"))
                cfg.apples = coord_list(spec.at("apples"), "apple");
            if (spec.contains("bombs")) cfg.bombs = coord_list(spec.at("bombs"), "bomb");
        }
        cfg.horizon = spec.value("horizon", cfg.horizon);
        cfg.gamma = spec.value("gamma", cfg.gamma);
        cfg.beta = spec.value("beta", cfg.beta);
        cfg.apple_reward = spec.value("apple_reward", cfg.apple_reward);
        env.model = grid_gather(cfg).cmdp;
    } else if (env.kind == "circuit") {
        CircuitConfig cfg;
        if (spec.contains("layout")) {
            cfg.layout = spec.at("layout").get<std::vector<std::string>>();
        } else if (spec.contains("layout_file")) {
            cfg.layout = io::load_layout(spec.at("layout_file").get<std::string>());
        } else {
            const json ring = spec.value("ring", json::object());
            cfg.layout = ring_layout(ring.value("outer_w", 12), ring.value("outer_h", 7),
                                     ring.value("band", 2), ring.value("narrow_len", 0));
        }
        cfg.horizon = spec.value("horizon", cfg.horizon);
        cfg.gamma = spec.value("gamma", cfg.gamma);
        cfg.beta = spec.value("beta", cfg.beta);
        cfg.crash_penalty = spec.value("crash_penalty", cfg.crash_penalty);
        cfg.stop_penalty = spec.value("stop_penalty", cfg.stop_penalty);
        env.model = grid_circuit(cfg).cmdp;
    } else if (env.kind == "jam") {
        JamConfig cfg;
        cfg.width = spec.value("width", cfg.width);
        cfg.height = spec.value("height", cfg.height);
        if (spec.contains("exit")) {
            const auto p = coord(spec.at("exit"), "exit");
            cfg.exit_x = p[0];
            cfg.exit_y = p[1];
        }
        cfg.exit_x = spec.value("exit_x", cfg.exit_x);
        cfg.exit_y = spec.value("exit_y", cfg.exit_y);
        if (spec.contains("agent")) {
            const auto p = coord(spec.at("agent"), "agent");
            cfg.agent_x = p[0];
            cfg.agent_y = p[1];
        }
        cfg.agent_x = spec.value("agent_x", cfg.agent_x);
        cfg.agent_y = spec.value("agent_y", cfg.agent_y);
        if (spec.contains("obstacles"))
            cfg.obstacles = coord_list(spec.at("obstacles"), "obstacle");
        if (spec.contains("obstacle_immobile"))
            for (const auto& e : spec.at("obstacle_immobile"))
                cfg.obstacle_immobile.push_back(
                    (e.is_boolean() ? e.get<bool>() : e.get<int>() != 0) ? 1 : 0);
        if (spec.contains("zones")) {
            cfg.zones = coord_list(spec.at("zones"), "zone");
            cfg.default_zones = false;
        }
        cfg.default_zones = spec.value("default_zones", cfg.default_zones);
        cfg.momentum = spec.value("momentum", cfg.momentum);
        cfg.horizon = spec.value("horizon", cfg.horizon);
        cfg.gamma = spec.value("gamma", cfg.gamma);
        cfg.beta = spec.value("beta", cfg.beta);
        cfg.goal_reward = spec.value("goal_reward", cfg.goal_reward);
        cfg.stop_penalty = spec.value("stop_penalty", cfg.stop_penalty);
        cfg.collision_penalty = spec.value("collision_penalty", cfg.collision_penalty);
        cfg.shaping_weight = spec.value("shaping_weight", cfg.shaping_weight);
        env.jam = std::make_unique<JamEnv>(cfg);
    } else if (env.kind == "trap") {
        env.model = deep_trap_cmdp(spec.value("lead", 2), spec.value("horizon", 0));
    } else {
        throw ValidationError("unknown environment kind: " + env.kind);
    }
    return env;
}

const Cmdp& dense_model(BuiltEnv& env) {
    if (!env.model) {
        try {
            env.model = env.jam->joint_cmdp(env.dense_cap);
        } catch (const std::invalid_argument& e) {
            throw ValidationError(
                std::string(e.what()) +
                " (only the composed rp method scales past the cap; raise "
                "--max-dense-states to force a dense model)");
        } catch (const std::bad_alloc&) {
            throw ValidationError(
                "joint model does not fit in memory; only the composed rp method "
                "scales to this field");
        }
    }
    return *env.model;
}

// ---------------------------------------------------------------------------
// Flag storage and config resolution.  Precedence: explicit flag, then the
// --config file, then the base config (a previous run's echo, for transfer),
// then built-in defaults.

struct Flags {
    std::string config;
    std::string env_kind;
    std::string out;
    std::string mode;
    std::string eta;
    std::string artifacts;
    std::string table;
    std::vector<std::string> methods;
    std::vector<std::uint64_t> seeds;
    std::uint64_t seed = 1;
    int episodes = 100;
    long rollouts = 0;
    double budget = 0.1;
    double deviation_cap = 1.0;
    bool per_action_gate = false;
    bool require_certified = false;
    std::size_t max_dense = 2000;
    int agent_x = -1, agent_y = -1, vx = 0, vy = 0, t = 0, obstacle = 0;
};

bool given(const CLI::App* sub, const char* name) {
    const CLI::Option* opt = sub->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
}

struct Setup {
    json env_spec;
    SafetySpec safety;
    double deviation_cap = 1.0;
    bool per_action_gate = false;
    std::vector<MethodSpec> methods;
    int episodes = 100;
    std::vector<std::uint64_t> seeds;
    fs::path out;
    std::string eta_file;
    bool require_certified = false;
    std::size_t dense_cap = 2000;
};

Setup resolve_setup(const CLI::App* sub, const Flags& f, const json& base,
                    const char* default_out) {
    Setup su;
    const json cfg = f.config.empty() ? json::object() : load_json_file(f.config);

    if (cfg.contains("env")) su.env_spec = cfg.at("env");
    else if (base.contains("env")) su.env_spec = base.at("env");
    if (given(sub, "--env")) {
        if (su.env_spec.is_object()) {
            if (su.env_spec.value("kind", f.env_kind) != f.env_kind)
                throw ValidationError(
                    "--env disagrees with the configured environment kind");
        } else {
            su.env_spec = json{{"kind", f.env_kind}};
        }
    }

    json safety = base.value("safety", json::object());
    safety.update(cfg.value("safety", json::object()));
    su.safety.budget = given(sub, "--budget") ? f.budget : safety.value("budget", 0.1);
    std::string mode = given(sub, "--mode") ? f.mode : safety.value("mode", std::string());
    if (mode.empty())
        mode = su.env_spec.value("kind", std::string()) == "jam" ? "accident"
                                                                 : "discounted";
    su.safety.mode = parse_mode(mode);
    su.deviation_cap =
        given(sub, "--deviation-cap") ? f.deviation_cap : safety.value("deviation_cap", 1.0);
    su.per_action_gate = f.per_action_gate || safety.value("per_action_gate", false);

    if (given(sub, "--methods")) {
        for (const auto& tok : f.methods) su.methods.push_back(method_from_token(tok));
    } else if (cfg.contains("methods")) {
        for (const auto& e : cfg.at("methods")) su.methods.push_back(method_from_json(e));
    } else if (base.contains("methods")) {
        for (const auto& e : base.at("methods"))
            su.methods.push_back(method_from_json(e));
    } else {
        su.methods.push_back(method_from_token("rp"));
    }
    for (std::size_t i = 0; i < su.methods.size(); ++i)
        for (std::size_t j = i + 1; j < su.methods.size(); ++j)
            if (su.methods[i].label == su.methods[j].label)
                throw ValidationError("duplicate method: " + su.methods[i].label);

    su.episodes = given(sub, "--episodes")
                      ? f.episodes
                      : cfg.value("episodes", base.value("episodes", 100));
    if (su.episodes < 1) throw ValidationError("episode count must be positive");

    if (given(sub, "--seeds")) su.seeds = f.seeds;
    else if (given(sub, "--seed")) su.seeds = {f.seed};
    else if (cfg.contains("seeds"))
        su.seeds = cfg.at("seeds").get<std::vector<std::uint64_t>>();
    else if (base.contains("seeds"))
        su.seeds = base.at("seeds").get<std::vector<std::uint64_t>>();
    else su.seeds = {1};
    if (su.seeds.empty()) throw ValidationError("seed list is empty");

    su.out = given(sub, "--out") ? f.out : cfg.value("out", std::string(default_out));
    su.eta_file = given(sub, "--eta") ? f.eta : cfg.value("eta", std::string());
    su.require_certified = f.require_certified || cfg.value("require_certified", false);
    su.dense_cap = f.max_dense;
    return su;
}

double step_threshold(const Cmdp& m, const SafetySpec& spec, double z) {
    return spec.mode == ThreatMode::discounted
               ? secure_threshold(spec.budget, m.beta, m.horizon)
               : accident_threshold(spec.budget, m.horizon, z);
}

// ---------------------------------------------------------------------------
// Per-method evaluation output.

struct SeedEval {
    std::uint64_t seed = 0;
    EvalResult res;
    std::vector<EpisodeRecord> log;
};

// Pools the per-seed evaluations into metrics.json and timings.json plus the
// per-episode table every aggregate is recomputable from.  Returns the
// metrics object for the caller's summary.
json write_method_outputs(const fs::path& dir, const MethodSpec& ms, const Setup& su,
                          const std::vector<SeedEval>& evals, const json& extra_metrics,
                          const json& extra_timings) {
    long long crashes = 0, episodes = 0, goals = 0, decisions = 0;
    double sum_return = 0.0, sum_danger = 0.0;
    json seeds = json::array(), by_seed_return = json::array(),
         by_seed_crashes = json::array();
    std::vector<double> medians;
    std::string csv = "seed,episode,return,danger,crashed,goal,steps\n";
    for (const auto& ev : evals) {
        episodes += ev.res.episodes;
        crashes += ev.res.crashes;
        goals += ev.res.goals;
        decisions += ev.res.decisions;
        sum_return += ev.res.avg_return;
        sum_danger += ev.res.avg_danger;
        seeds.push_back(ev.seed);
        by_seed_return.push_back(ev.res.avg_return);
        by_seed_crashes.push_back(ev.res.crashes);
        medians.push_back(ev.res.decision_ns_median);
        for (const auto& row : ev.log) {
            csv += std::to_string(ev.seed);
            csv += ',';
            csv += std::to_string(row.episode);
            csv += ',';
            csv += fmt(row.ret);
            csv += ',';
            csv += fmt(row.danger);
            csv += ',';
            csv += row.crashed ? '1' : '0';
            csv += ',';
            csv += row.goal ? '1' : '0';
            csv += ',';
            csv += std::to_string(row.steps);
            csv += '\n';
        }
    }
    const WilsonInterval ci = wilson_interval(crashes, episodes);
    json metrics{
        {"method", ms.label},
        {"mode", mode_name(su.safety.mode)},
        {"budget", su.safety.budget},
        {"seeds", seeds},
        {"episodes_per_seed", su.episodes},
        {"episodes", episodes},
        {"crashes", crashes},
        {"crash_rate", static_cast<double>(crashes) / static_cast<double>(episodes)},
        {"crash_ci_lo", ci.lo},
        {"crash_ci_hi", ci.hi},
        {"goals", goals},
        {"decisions", decisions},
        {"avg_return", sum_return / static_cast<double>(evals.size())},
        {"avg_danger", sum_danger / static_cast<double>(evals.size())},
        {"avg_return_by_seed", by_seed_return},
        {"crashes_by_seed", by_seed_crashes},
    };
    metrics.update(extra_metrics);
    json timings{
        {"decision_ns_median", median_of(medians)},
        {"decision_ns_median_by_seed", medians},
    };
    timings.update(extra_timings);
    fs::create_directories(dir);
    save_json_file(dir / "metrics.json", metrics);
    save_json_file(dir / "timings.json", timings);
    io::write_text((dir / "episodes.csv").string(), csv);
    std::printf("[%s] return %.6g  crash rate %.4f  ci [%.4f, %.4f]  decision %.0f ns\n",
                ms.label.c_str(), metrics.at("avg_return").get<double>(),
                metrics.at("crash_rate").get<double>(), ci.lo, ci.hi,
                median_of(medians));
    return metrics;
}

// ---------------------------------------------------------------------------
// Dense-model methods.

json run_dense_method(const MethodSpec& ms, const Setup& su, const Cmdp& m,
                      const fs::path& dir, const fs::path* src, bool* uncertified) {
    fs::create_directories(dir);
    if (ms.name == "rp") {
        RpOptions opts;
        opts.mode = su.safety.mode;
        opts.per_action_gate = su.per_action_gate;
        opts.deviation_cap = su.deviation_cap;
        Policy reused;
        if (src) {
            reused = io::policy_from_json(
                load_json_file((*src / "rp" / "eta.json").string()));
            if (!reused.compatible_with(m))
                throw ValidationError(
                    "transferred baseline does not fit the new environment's state "
                    "space");
            opts.baseline = &reused;
        } else if (!su.eta_file.empty()) {
            reused = io::policy_from_json(load_json_file(su.eta_file));
            require_compatible(m, reused, "run");
            opts.baseline = &reused;
        }
        Timer timer;
        const RpSolution sol = rp_solve(m, su.safety, opts);
        const double solve_seconds = timer.seconds();
        if (!sol.certified) {
            *uncertified = true;
            std::printf("[rp] uncertified: %s\n", sol.diagnostic.c_str());
        }
        save_json_file(dir / "eta.json", io::policy_to_json(sol.eta));
        io::write_text((dir / "threat.csv").string(), io::threat_to_csv(sol.threat));
        save_json_file(dir / "policy.json", io::policy_to_json(sol.policy));
        io::write_text((dir / "secure_set.csv").string(), io::secure_to_csv(sol.secure));
        json certs = json::array();
        std::size_t next = 0;
        for (int s0 = 0; s0 < m.n_states && next < sol.certificates.size(); ++s0) {
            if (m.initial[s0] == 0.0) continue;
            json jc = io::certificate_to_json(sol.certificates[next++]);
            jc["start"] = s0;
            certs.push_back(std::move(jc));
        }
        save_json_file(dir / "certificate.json",
                       json{{"certified", sol.certified},
                            {"x_star", sol.x_star},
                            {"mode", mode_name(su.safety.mode)},
                            {"budget", su.safety.budget},
                            {"value", sol.value},
                            {"diagnostic", sol.diagnostic},
                            {"certificates", std::move(certs)}});
        std::vector<SeedEval> evals;
        for (const std::uint64_t seed : su.seeds) {
            SeedEval ev;
            ev.seed = seed;
            PolicyAgent agent(sol.policy);
            ev.res = evaluate(m, agent,
                              {.episodes = su.episodes, .seed = seed,
                               .episode_log = &ev.log});
            evals.push_back(std::move(ev));
        }
        return write_method_outputs(
            dir, ms, su, evals,
            json{{"certified", sol.certified}, {"x_star", sol.x_star},
                 {"value", sol.value}},
            json{{"solve_seconds", solve_seconds}});
    }
    if (ms.name == "penalized-q") {
        std::vector<SeedEval> evals;
        json train_seconds = json::array();
        for (const std::uint64_t seed : su.seeds) {
            Policy pi;
            double secs = 0.0;
            const fs::path policy_path =
                dir / ("policy_seed" + std::to_string(seed) + ".json");
            if (src) {
                pi = io::policy_from_json(load_json_file(
                    (*src / ms.label / policy_path.filename()).string()));
                if (!pi.compatible_with(m))
                    throw ValidationError(
                        "frozen policy does not fit the new environment's state space");
            } else {
                Timer timer;
                QLearnResult learned =
                    penalized_q_learn(m, ms.lambda, ms.train_episodes, train_seed(seed));
                secs = timer.seconds();
                pi = std::move(learned.policy);
                save_json_file(policy_path, io::policy_to_json(pi));
            }
            train_seconds.push_back(secs);
            SeedEval ev;
            ev.seed = seed;
            PolicyAgent agent(pi);
            ev.res = evaluate(m, agent,
                              {.episodes = su.episodes, .seed = seed,
                               .episode_log = &ev.log});
            evals.push_back(std::move(ev));
        }
        return write_method_outputs(
            dir, ms, su, evals,
            json{{"lambda", ms.lambda}, {"train_episodes", ms.train_episodes}},
            json{{"train_seconds_by_seed", std::move(train_seconds)}});
    }
    // mpc replans at every decision; there is nothing to train or transfer.
    const double cap = step_threshold(m, su.safety, su.deviation_cap);
    std::vector<SeedEval> evals;
    long long branches = 0;
    for (const std::uint64_t seed : su.seeds) {
        SeedEval ev;
        ev.seed = seed;
        MpcAgent agent(m, ms.k, cap, su.safety.mode);
        ev.res = evaluate(m, agent,
                          {.episodes = su.episodes, .seed = seed,
                           .episode_log = &ev.log});
        branches += agent.stats().branch_evaluations;
        evals.push_back(std::move(ev));
    }
    save_json_file(dir / "mpc.json",
                   json{{"k", ms.k}, {"danger_cap", cap},
                        {"mode", mode_name(su.safety.mode)}});
    return write_method_outputs(
        dir, ms, su, evals,
        json{{"k", ms.k}, {"danger_cap", cap}, {"branch_evaluations", branches}},
        json::object());
}

// ---------------------------------------------------------------------------
// Obstacle-field methods.  All of them are graded by the sampling simulator;
// dense joint models appear only as training or lookahead material.

bool obstacle_is_immobile(const JamConfig& cfg, std::size_t j) {
    return !cfg.obstacle_immobile.empty() && cfg.obstacle_immobile[j] != 0;
}

const char* kind_file(bool immobile) {
    return immobile ? "subsystem_immobile.csv" : "subsystem_mobile.csv";
}

// Per-obstacle accident tables for a baseline that reads only the agent
// state.  Mobile obstacles share one table and immobile obstacles another,
// so each kind is computed or loaded once.
struct JamTables {
    Policy eta;
    std::map<bool, ThreatTable> by_kind;
    std::vector<const ThreatTable*> per_obstacle;
};

void index_obstacles(const JamEnv& jam, JamTables& tables) {
    const auto& cfg = jam.config();
    for (std::size_t j = 0; j < cfg.obstacles.size(); ++j)
        tables.per_obstacle.push_back(&tables.by_kind.at(obstacle_is_immobile(cfg, j)));
}

Policy jam_baseline(const JamEnv& jam, const std::string& eta_file) {
    const int T = jam.config().horizon;
    if (eta_file.empty())
        return Policy::uniform(T, jam.n_agent_states(), jam.n_actions());
    Policy eta = io::policy_from_json(load_json_file(eta_file));
    if (eta.n_states != jam.n_agent_states() || eta.n_actions != jam.n_actions() ||
        eta.horizon < T)
        throw ValidationError(
            "baseline policy must cover the agent state space over the full horizon");
    return eta;
}

JamTables compute_jam_tables(const JamEnv& jam, Policy eta) {
    JamTables tables;
    tables.eta = std::move(eta);
    const auto& cfg = jam.config();
    for (std::size_t j = 0; j < cfg.obstacles.size(); ++j) {
        const bool imm = obstacle_is_immobile(cfg, j);
        if (!tables.by_kind.count(imm))
            tables.by_kind.emplace(imm,
                                   jam.pair_threat(static_cast<int>(j), tables.eta));
    }
    index_obstacles(jam, tables);
    return tables;
}

JamTables load_jam_tables(const JamEnv& jam, const fs::path& dir) {
    const json manifest = load_json_file((dir / "recon.json").string());
    JamTables tables;
    tables.eta = io::policy_from_json(load_json_file((dir / "eta.json").string()));
    const auto& cfg = jam.config();
    const int n_sub = jam.n_agent_states() * jam.n_obstacle_states() + 1;
    for (std::size_t j = 0; j < cfg.obstacles.size(); ++j) {
        const bool imm = obstacle_is_immobile(cfg, j);
        if (tables.by_kind.count(imm)) continue;
        const char* key = imm ? "immobile" : "mobile";
        const json files = manifest.value("tables", json::object());
        if (!files.contains(key))
            throw ValidationError(std::string("trained artifacts carry no ") + key +
                                  " obstacle table");
        ThreatTable t = io::threat_from_csv(
            io::read_text((dir / files.at(key).get<std::string>()).string()),
            ThreatMode::accident);
        if (t.n_states != n_sub || t.n_actions != jam.n_actions())
            throw ValidationError(
                "transferred subsystem table does not fit this field's state space");
        if (t.horizon < cfg.horizon)
            throw ValidationError("transferred subsystem table is shorter than the "
                                  "horizon");
        tables.by_kind.emplace(imm, std::move(t));
    }
    index_obstacles(jam, tables);
    return tables;
}

void write_jam_tables(const fs::path& dir, const JamEnv& jam, const JamTables& tables) {
    fs::create_directories(dir);
    save_json_file(dir / "eta.json", io::policy_to_json(tables.eta));
    json files = json::object();
    for (const auto& [imm, table] : tables.by_kind) {
        io::write_text((dir / kind_file(imm)).string(), io::threat_to_csv(table));
        files[imm ? "immobile" : "mobile"] = kind_file(imm);
    }
    json obstacles = json::array();
    const auto& cfg = jam.config();
    for (std::size_t j = 0; j < cfg.obstacles.size(); ++j) {
        const bool imm = obstacle_is_immobile(cfg, j);
        obstacles.push_back(json{{"immobile", imm}, {"table", kind_file(imm)}});
    }
    save_json_file(dir / "recon.json", json{{"kind", "jam"},
                                            {"mode", "accident"},
                                            {"tables", std::move(files)},
                                            {"obstacles", std::move(obstacles)}});
}

struct JamPoolCheck {
    bool checked = false;
    bool holds = false;
    long long states = 0;
    std::string note;
};

// Pool-nonemptiness sweep over the reachable joint space: when every
// reachable (t, state) keeps an action with composed threat within x, the
// filter policy never leaves the pool and inherits the deviation bound
// x * (1 + (T - 1) z).  Stays unchecked when the joint space exceeds the cap.
JamPoolCheck certify_jam_pool(const JamEnv& env,
                              const std::vector<const ThreatTable*>& tables, double x) {
    JamPoolCheck chk;
    std::vector<std::vector<int>> reach;
    try {
        reach = env.reachable_joint(kJointEnumCap);
    } catch (const std::invalid_argument& e) {
        chk.note = e.what();
        return chk;
    }
    std::size_t terminal = static_cast<std::size_t>(env.n_agent_states());
    for (std::size_t j = 0; j < env.config().obstacles.size(); ++j)
        terminal *= static_cast<std::size_t>(env.n_obstacle_states());
    chk.checked = true;
    chk.holds = true;
    int agent = 0;
    std::vector<int> obstacles;
    for (int t = 0; t < env.config().horizon; ++t)
        for (const int s : reach[t]) {
            if (static_cast<std::size_t>(s) == terminal) continue;
            env.decode_joint(s, agent, obstacles);
            if (env.agent_at_exit(agent)) continue;
            double least = 2.0;
            for (int a = 0; a < env.n_actions() && least > x; ++a) {
                double sum = 0.0;
                for (std::size_t n = 0; n < obstacles.size(); ++n)
                    sum += tables[n]->at(t, env.subsystem_state(agent, obstacles[n]), a);
                least = std::min(least, std::min(1.0, sum));
            }
            ++chk.states;
            if (least > x + 1e-12) {
                chk.holds = false;
                std::ostringstream os;
                os << "no action clears the threshold at step " << t << ", joint state "
                   << s;
                chk.note = os.str();
                return chk;
            }
        }
    return chk;
}

class JamMpcAgent : public JamAgent {
  public:
    JamMpcAgent(const JamEnv& env, const Cmdp& joint, int k, double cap, ThreatMode mode)
        : env_(env), m_(joint), k_(k), cap_(cap), mode_(mode) {}
    int act(int t, const JamEnv::State& st, Rng&) override {
        return mpc_action(m_, env_.joint_state(st.agent, st.obstacles), t, k_, cap_,
                          mode_, &stats_);
    }
    const MpcStats& stats() const { return stats_; }

  private:
    const JamEnv& env_;
    const Cmdp& m_;
    int k_;
    double cap_;
    ThreatMode mode_;
    MpcStats stats_;
};

json run_jam_method(const MethodSpec& ms, const Setup& su, BuiltEnv& env,
                    const fs::path& dir, const fs::path* src, bool* uncertified) {
    JamEnv& jam = *env.jam;
    const int T = jam.config().horizon;
    const double x = accident_threshold(su.safety.budget, T, su.deviation_cap);
    fs::create_directories(dir);
    if (ms.name == "rp") {
        Timer timer;
        JamTables tables = src ? load_jam_tables(jam, *src / "rp")
                               : compute_jam_tables(jam, jam_baseline(jam, su.eta_file));
        const double recon_seconds = timer.seconds();
        write_jam_tables(dir, jam, tables);
        const JamPoolCheck chk = certify_jam_pool(jam, tables.per_obstacle, x);
        if (!chk.holds) {
            *uncertified = true;
            std::printf("[rp] uncertified: %s\n", chk.note.c_str());
        }
        save_json_file(
            dir / "certificate.json",
            json{{"certified", chk.holds},
                 {"checked", chk.checked},
                 {"threshold", x},
                 {"bound", x * (1.0 + (T - 1) * su.deviation_cap)},
                 {"reachable_states", chk.states},
                 {"note", chk.note}});
        std::vector<SeedEval> evals;
        for (const std::uint64_t seed : su.seeds) {
            SeedEval ev;
            ev.seed = seed;
            JamComposedAgent agent(jam, tables.per_obstacle, x);
            ev.res = evaluate_jam(jam, agent,
                                  {.episodes = su.episodes, .seed = seed,
                                   .episode_log = &ev.log});
            evals.push_back(std::move(ev));
        }
        return write_method_outputs(
            dir, ms, su, evals,
            json{{"certified", chk.holds}, {"threshold", x}},
            json{{"recon_seconds", recon_seconds}});
    }
    if (ms.name == "penalized-q") {
        const Cmdp& joint = dense_model(env);
        std::vector<SeedEval> evals;
        json train_seconds = json::array();
        for (const std::uint64_t seed : su.seeds) {
            Policy pi;
            double secs = 0.0;
            const fs::path policy_path =
                dir / ("policy_seed" + std::to_string(seed) + ".json");
            if (src) {
                pi = io::policy_from_json(load_json_file(
                    (*src / ms.label / policy_path.filename()).string()));
                if (!pi.compatible_with(joint))
                    throw ValidationError(
                        "frozen policy does not fit the new environment's state space");
            } else {
                Timer timer;
                QLearnResult learned = penalized_q_learn(joint, ms.lambda,
                                                         ms.train_episodes,
                                                         train_seed(seed));
                secs = timer.seconds();
                pi = std::move(learned.policy);
                save_json_file(policy_path, io::policy_to_json(pi));
            }
            train_seconds.push_back(secs);
            SeedEval ev;
            ev.seed = seed;
            JamPolicyAgent agent(jam, pi);
            ev.res = evaluate_jam(jam, agent,
                                  {.episodes = su.episodes, .seed = seed,
                                   .episode_log = &ev.log});
            evals.push_back(std::move(ev));
        }
        return write_method_outputs(
            dir, ms, su, evals,
            json{{"lambda", ms.lambda}, {"train_episodes", ms.train_episodes}},
            json{{"train_seconds_by_seed", std::move(train_seconds)}});
    }
    const Cmdp& joint = dense_model(env);
    std::vector<SeedEval> evals;
    long long branches = 0;
    for (const std::uint64_t seed : su.seeds) {
        SeedEval ev;
        ev.seed = seed;
        JamMpcAgent agent(jam, joint, ms.k, x, ThreatMode::accident);
        ev.res = evaluate_jam(jam, agent,
                              {.episodes = su.episodes, .seed = seed,
                               .episode_log = &ev.log});
        branches += agent.stats().branch_evaluations;
        evals.push_back(std::move(ev));
    }
    save_json_file(dir / "mpc.json",
                   json{{"k", ms.k}, {"danger_cap", x}, {"mode", "accident"}});
    return write_method_outputs(
        dir, ms, su, evals,
        json{{"k", ms.k}, {"danger_cap", x}, {"branch_evaluations", branches}},
        json::object());
}

// ---------------------------------------------------------------------------
// Subcommands.

int execute_methods(const Setup& su, BuiltEnv& env, const fs::path* src) {
    if (env.jam && su.safety.mode != ThreatMode::accident)
        throw ValidationError(
            "obstacle-field runs compose accident-mode threat tables; set the safety "
            "mode to accident");
    fs::create_directories(su.out);
    save_json_file(su.out / "config.json",
                   json{{"env", su.env_spec},
                        {"safety",
                         {{"budget", su.safety.budget},
                          {"mode", mode_name(su.safety.mode)},
                          {"deviation_cap", su.deviation_cap},
                          {"per_action_gate", su.per_action_gate}}},
                        {"methods", methods_json(su.methods)},
                        {"episodes", su.episodes},
                        {"seeds", su.seeds}});
    bool uncertified = false;
    std::string summary = "method,avg_return,crash_rate,ci_lo,ci_hi,episodes,crashes,goals\n";
    for (const MethodSpec& ms : su.methods) {
        const fs::path dir = su.out / ms.label;
        const json metrics =
            env.jam ? run_jam_method(ms, su, env, dir, src, &uncertified)
                    : run_dense_method(ms, su, *env.model, dir, src, &uncertified);
        summary += ms.label;
        summary += ',';
        summary += fmt(metrics.at("avg_return").get<double>());
        summary += ',';
        summary += fmt(metrics.at("crash_rate").get<double>());
        summary += ',';
        summary += fmt(metrics.at("crash_ci_lo").get<double>());
        summary += ',';
        summary += fmt(metrics.at("crash_ci_hi").get<double>());
        summary += ',';
        summary += std::to_string(metrics.at("episodes").get<long long>());
        summary += ',';
        summary += std::to_string(metrics.at("crashes").get<long long>());
        summary += ',';
        summary += std::to_string(metrics.at("goals").get<long long>());
        summary += '\n';
    }
    io::write_text((su.out / "summary.csv").string(), summary);
    std::printf("wrote %s\n", (su.out / "summary.csv").string().c_str());
    if (uncertified && su.require_certified) {
        std::fprintf(stderr,
                     "rpsolve: a plan stayed uncertified while --require-certified is "
                     "set\n");
        return 3;
    }
    return 0;
}

int cmd_run(const CLI::App* sub, const Flags& f) {
    const Setup su = resolve_setup(sub, f, json::object(), "rpsolve-out");
    if (!su.env_spec.is_object())
        throw ValidationError(
            "no environment given (use --config with an env entry or --env <kind>)");
    BuiltEnv env = build_env(su.env_spec, su.dense_cap);
    return execute_methods(su, env, nullptr);
}

int cmd_transfer(const CLI::App* sub, const Flags& f) {
    if (f.artifacts.empty())
        throw ValidationError("transfer needs --artifacts from a previous run");
    const fs::path src = f.artifacts;
    const json base = load_json_file((src / "config.json").string());
    const Setup su = resolve_setup(sub, f, base, "rpsolve-transfer");
    if (!su.env_spec.is_object())
        throw ValidationError("transfer has no environment to target");
    BuiltEnv env = build_env(su.env_spec, su.dense_cap);
    return execute_methods(su, env, &src);
}

int cmd_recon(const CLI::App* sub, const Flags& f) {
    const Setup su = resolve_setup(sub, f, json::object(), "rpsolve-recon");
    if (!su.env_spec.is_object())
        throw ValidationError(
            "no environment given (use --config with an env entry or --env <kind>)");
    BuiltEnv env = build_env(su.env_spec, su.dense_cap);
    fs::create_directories(su.out);
    if (env.jam) {
        if (su.safety.mode != ThreatMode::accident)
            throw ValidationError(
                "obstacle-field recon composes accident-mode tables; set the mode to "
                "accident");
        JamEnv& jam = *env.jam;
        Timer timer;
        const JamTables tables =
            compute_jam_tables(jam, jam_baseline(jam, su.eta_file));
        const double secs = timer.seconds();
        write_jam_tables(su.out, jam, tables);
        std::printf("[recon] %zu obstacle table(s) over %d pair states (%.2fs)\n",
                    tables.by_kind.size(),
                    jam.n_agent_states() * jam.n_obstacle_states() + 1, secs);
        return 0;
    }
    const Cmdp& m = dense_model(env);
    Policy eta;
    ThreatTable table;
    Timer timer;
    if (!su.eta_file.empty()) {
        eta = io::policy_from_json(load_json_file(su.eta_file));
        require_compatible(m, eta, "recon");
        table = f.rollouts > 0
                    ? monte_carlo_threat(m, eta, f.rollouts, f.seed, su.safety.mode).table
                    : compute_threat(m, eta, su.safety.mode);
    } else {
        MinThreatResult res = min_threat_policy(m, su.safety.mode);
        eta = std::move(res.policy);
        table = f.rollouts > 0
                    ? monte_carlo_threat(m, eta, f.rollouts, f.seed, su.safety.mode).table
                    : std::move(res.table);
    }
    const double secs = timer.seconds();
    save_json_file(su.out / "cmdp.json", io::cmdp_to_json(m));
    save_json_file(su.out / "eta.json", io::policy_to_json(eta));
    io::write_text((su.out / "threat.csv").string(), io::threat_to_csv(table));
    save_json_file(su.out / "recon.json",
                   json{{"kind", env.kind},
                        {"mode", mode_name(su.safety.mode)},
                        {"rollouts", f.rollouts}});
    double start_threat = 0.0;
    for (int s = 0; s < m.n_states; ++s) {
        if (m.initial[s] == 0.0) continue;
        double row = 0.0;
        for (int a = 0; a < m.n_actions; ++a)
            row += eta.prob(0, s, a) * table.at(0, s, a);
        start_threat += m.initial[s] * row;
    }
    std::printf("[recon] %d states, %d actions, horizon %d; start threat %.6g (%.2fs)\n",
                m.n_states, m.n_actions, m.horizon, start_threat, secs);
    return 0;
}

int cmd_plan(const CLI::App* sub, const Flags& f) {
    if (f.artifacts.empty()) throw ValidationError("plan needs --artifacts from recon");
    const fs::path src = f.artifacts;
    json manifest = json::object();
    if (fs::exists(src / "recon.json"))
        manifest = load_json_file((src / "recon.json").string());
    if (manifest.value("kind", std::string()) == "jam")
        throw ValidationError(
            "plan consumes dense-model artifacts; obstacle fields run end to end "
            "under `run`");
    const Cmdp m = io::cmdp_from_json(load_json_file((src / "cmdp.json").string()));
    require_valid(m);
    const Policy eta =
        io::policy_from_json(load_json_file((src / "eta.json").string()));
    require_compatible(m, eta, "plan");
    const ThreatMode mode = parse_mode(
        given(sub, "--mode") ? f.mode : manifest.value("mode", std::string("discounted")));
    const ThreatTable table = io::threat_from_csv(
        io::read_text((src / "threat.csv").string()), mode);
    if (!table.compatible_with(m))
        throw ValidationError("threat table does not fit the model");

    const double x = mode == ThreatMode::discounted
                         ? secure_threshold(f.budget, m.beta, m.horizon)
                         : accident_threshold(f.budget, m.horizon, f.deviation_cap);
    const SecureSet secure =
        build_secure_set(table, std::vector<double>(m.horizon, x));

    // Start gate on the artifact table, mirroring the in-library solver.
    std::ostringstream diag;
    bool gate_ok = true;
    for (int s0 = 0; s0 < m.n_states; ++s0) {
        if (m.initial[s0] == 0.0) continue;
        if (f.per_action_gate) {
            for (int a = 0; a < m.n_actions; ++a)
                if (eta.prob(0, s0, a) > 0.0 && table.at(0, s0, a) > x + 1e-12) {
                    gate_ok = false;
                    diag << "baseline threat " << table.at(0, s0, a) << " of action "
                         << a << " at start state " << s0 << " exceeds threshold " << x
                         << "; ";
                }
        } else {
            double expected = 0.0;
            for (int a = 0; a < m.n_actions; ++a)
                expected += eta.prob(0, s0, a) * table.at(0, s0, a);
            if (expected > x + 1e-12) {
                gate_ok = false;
                diag << "baseline expected threat " << expected << " at start state "
                     << s0 << " exceeds threshold " << x << "; ";
            }
        }
    }

    Policy pi;
    double value = 0.0;
    double solve_seconds = 0.0;
    bool certified = false;
    json certs = json::array();
    if (gate_ok) {
        Timer timer;
        PlanResult plan = solve_restricted(m, secure);
        solve_seconds = timer.seconds();
        pi = std::move(plan.policy);
        value = plan.value;
        certified = true;
        for (int s0 = 0; s0 < m.n_states; ++s0) {
            if (m.initial[s0] == 0.0) continue;
            try {
                BoundCertificate cert = certify_bound(m, eta, pi, secure, table, s0);
                if (!cert.holds) {
                    certified = false;
                    diag << "deviation bound fails at start state " << s0 << "; ";
                }
                json jc = io::certificate_to_json(cert);
                jc["start"] = s0;
                certs.push_back(std::move(jc));
            } catch (const PreconditionViolation& e) {
                certified = false;
                diag << e.what() << "; ";
            }
        }
    } else {
        pi = eta;
        value = exact_return(m, pi);
        diag << "no guarantee is available; keeping the baseline policy";
    }

    const fs::path out = given(sub, "--out") ? fs::path(f.out) : fs::path("rpsolve-plan");
    fs::create_directories(out);
    save_json_file(out / "policy.json", io::policy_to_json(pi));
    io::write_text((out / "secure_set.csv").string(), io::secure_to_csv(secure));
    save_json_file(out / "certificate.json", json{{"certified", certified},
                                                  {"x_star", x},
                                                  {"mode", mode_name(mode)},
                                                  {"budget", f.budget},
                                                  {"value", value},
                                                  {"diagnostic", diag.str()},
                                                  {"certificates", std::move(certs)}});
    int kept = 0;
    for (int s = 0; s < secure.n_states; ++s) kept += secure.is_secure(s) ? 1 : 0;
    std::printf("[plan] threshold %.6g, %d of %d states kept, certified %s, value %.6g "
                "(%.2fs)\n",
                x, kept, m.n_states, certified ? "yes" : "no", value, solve_seconds);
    if (!certified && f.require_certified) {
        std::fprintf(stderr, "rpsolve: plan is uncertified\n");
        return 3;
    }
    return 0;
}

int cmd_heatmap(const CLI::App* sub, const Flags& f) {
    const Setup su = resolve_setup(sub, f, json::object(), "rpsolve-heatmaps");
    if (!su.env_spec.is_object())
        throw ValidationError(
            "no environment given (use --config with an env entry or --env jam)");
    BuiltEnv env = build_env(su.env_spec, su.dense_cap);
    if (!env.jam)
        throw ValidationError("heatmaps cover obstacle fields; give a jam environment");
    JamEnv& jam = *env.jam;
    const auto& cfg = jam.config();
    const int ax = given(sub, "--agent-x") ? f.agent_x : cfg.agent_x;
    const int ay = given(sub, "--agent-y") ? f.agent_y : cfg.agent_y;
    if (ax < 0 || ax >= cfg.width || ay < 0 || ay >= cfg.height)
        throw ValidationError("agent cell outside the field");
    if (f.vx < -1 || f.vx > 1 || f.vy < -1 || f.vy > 1)
        throw ValidationError("velocity components must be in {-1, 0, 1}");
    if (!cfg.momentum && (f.vx != 0 || f.vy != 0))
        throw ValidationError(
            "this field has no momentum; a nonzero velocity is outside the model");
    if (f.t < 0 || f.t >= cfg.horizon)
        throw ValidationError("step index outside the horizon");

    ThreatTable table;
    if (!f.table.empty()) {
        table = io::threat_from_csv(io::read_text(f.table), ThreatMode::accident);
        if (table.n_states != jam.n_agent_states() * jam.n_obstacle_states() + 1 ||
            table.n_actions != jam.n_actions())
            throw ValidationError("threat table does not fit this field's state space");
        if (table.horizon <= f.t)
            throw ValidationError("threat table is shorter than the requested step");
    } else {
        if (cfg.obstacles.empty())
            throw ValidationError(
                "no obstacle to map; give a field with obstacles or a --table");
        if (f.obstacle < 0 || f.obstacle >= static_cast<int>(cfg.obstacles.size()))
            throw ValidationError("no such obstacle");
        table = jam.pair_threat(
            f.obstacle,
            Policy::uniform(cfg.horizon, jam.n_agent_states(), jam.n_actions()));
    }

    const int agent = jam.agent_state_of(ax, ay, f.vx, f.vy);
    const std::vector<double> heat = threat_heatmap(jam, table, f.t, agent);
    std::string csv;
    for (int y = 0; y < cfg.height; ++y) {
        for (int x = 0; x < cfg.width; ++x) {
            csv += fmt(heat[static_cast<std::size_t>(y) * cfg.width + x]);
            csv += x + 1 == cfg.width ? '\n' : ',';
        }
    }
    fs::create_directories(su.out);
    char name[128];
    std::snprintf(name, sizeof name, "heatmap_x%d_y%d_vx%d_vy%d_t%d.csv", ax, ay, f.vx,
                  f.vy, f.t);
    io::write_text((su.out / name).string(), csv);
    std::fputs(render_heatmap(jam, heat).c_str(), stdout);
    std::printf("[heatmap] wrote %s\n", (su.out / name).string().c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"reconnaissance-and-planning toolkit for constrained tabular MDPs"};
    app.require_subcommand(1);
    Flags f;

    const auto add_env_flags = [&](CLI::App* sub) {
        sub->add_option("--config", f.config,
                        "JSON config file (env, safety, methods, episodes, seeds, out)");
        sub->add_option("--env", f.env_kind,
                        "environment kind with default settings "
                        "(random, gather, circuit, jam, trap)");
        sub->add_option("--out", f.out, "output directory");
        sub->add_option("--mode", f.mode, "danger mode: discounted or accident");
        sub->add_option("--max-dense-states", f.max_dense,
                        "largest joint state space materialized as a dense model");
    };
    const auto add_eval_flags = [&](CLI::App* sub) {
        sub->add_option("--eta", f.eta,
                        "baseline policy JSON for the rp method (default: threat "
                        "minimizer; uniform agent policy on obstacle fields)");
        sub->add_option("--budget", f.budget, "whole-episode danger budget c");
        sub->add_option("--deviation-cap", f.deviation_cap,
                        "deviation allowance z in the accident-mode threshold");
        sub->add_flag("--per-action-gate", f.per_action_gate,
                      "gate every supported start action instead of the expectation");
        sub->add_option("--methods", f.methods,
                        "comma-separated methods: rp, penalized-q[:lambda[:episodes]], "
                        "mpc[:k]")
            ->delimiter(',');
        sub->add_option("--episodes", f.episodes, "evaluation episodes per seed");
        sub->add_option("--seeds", f.seeds, "comma-separated evaluation seeds")
            ->delimiter(',');
        sub->add_option("--seed", f.seed, "single evaluation seed");
        sub->add_flag("--require-certified", f.require_certified,
                      "exit 3 when a plan stays uncertified");
    };

    CLI::App* recon = app.add_subcommand(
        "recon", "baseline policy and threat tables for an environment");
    add_env_flags(recon);
    recon->add_option("--eta", f.eta, "baseline policy JSON (default: threat minimizer; "
                                      "uniform agent policy on obstacle fields)");
    recon->add_option("--rollouts", f.rollouts,
                      "estimate the tables from this many rollouts per cell instead of "
                      "solving exactly");
    recon->add_option("--seed", f.seed, "rollout seed");

    CLI::App* plan = app.add_subcommand(
        "plan", "action pool and restricted plan from recon artifacts");
    plan->add_option("--artifacts", f.artifacts, "recon output directory")->required();
    plan->add_option("--budget", f.budget, "whole-episode danger budget c");
    plan->add_option("--mode", f.mode, "danger mode: discounted or accident");
    plan->add_option("--deviation-cap", f.deviation_cap,
                     "deviation allowance z in the accident-mode threshold");
    plan->add_flag("--per-action-gate", f.per_action_gate,
                   "gate every supported start action instead of the expectation");
    plan->add_flag("--require-certified", f.require_certified,
                   "exit 3 when the plan stays uncertified");
    plan->add_option("--out", f.out, "output directory");

    CLI::App* run = app.add_subcommand(
        "run", "solve or train each method, evaluate, write metrics and tables");
    add_env_flags(run);
    add_eval_flags(run);

    CLI::App* heatmap = app.add_subcommand(
        "heatmap", "least composed collision threat around a fixed agent motion state");
    add_env_flags(heatmap);
    heatmap->add_option("--table", f.table, "subsystem threat CSV (default: computed "
                                            "for a uniform baseline)");
    heatmap->add_option("--obstacle", f.obstacle, "obstacle whose table is used");
    heatmap->add_option("--agent-x", f.agent_x, "agent cell x (default: start)");
    heatmap->add_option("--agent-y", f.agent_y, "agent cell y (default: start)");
    heatmap->add_option("--vx", f.vx, "agent velocity x, momentum fields only");
    heatmap->add_option("--vy", f.vy, "agent velocity y, momentum fields only");
    heatmap->add_option("--t", f.t, "step the map is read at");

    CLI::App* transfer = app.add_subcommand(
        "transfer", "re-evaluate trained artifacts on a changed environment");
    add_env_flags(transfer);
    add_eval_flags(transfer);
    transfer->add_option("--artifacts", f.artifacts, "output directory of the original "
                                                     "run")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (recon->parsed()) return cmd_recon(recon, f);
        if (plan->parsed()) return cmd_plan(plan, f);
        if (run->parsed()) return cmd_run(run, f);
        if (heatmap->parsed()) return cmd_heatmap(heatmap, f);
        return cmd_transfer(transfer, f);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "rpsolve: %s\n", e.what());
        return 2;
    }
}
