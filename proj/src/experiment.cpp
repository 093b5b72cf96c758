#include "rpmdp/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace rpmdp {

WilsonInterval wilson_interval(long long successes, long long trials) {
    if (trials <= 0) return {0.0, 1.0};
    const double z = 1.959963984540054; // 95% two-sided
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = p + z2 / (2.0 * n);
    const double spread = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    return {std::max(0.0, (center - spread) / denom), std::min(1.0, (center + spread) / denom)};
}

int PolicyAgent::act(int t, int s, Rng& rng) { return rng.sample(pi_.row(t, s)); }

int MpcAgent::act(int t, int s, Rng&) {
    return mpc_action(m_, s, t, lookahead_, danger_cap_, mode_, &stats_);
}

namespace {

class DecisionClock {
  public:
    void time(auto&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        samples_.push_back(
            std::chrono::duration_cast<std::chrono::duration<double, std::nano>>(t1 - t0)
                .count());
    }

    long long count() const { return static_cast<long long>(samples_.size()); }

    // Median, clamped below at one nanosecond so ratios stay finite.
    double median_ns() {
        if (samples_.empty()) return 1.0;
        std::sort(samples_.begin(), samples_.end());
        const std::size_t mid = samples_.size() / 2;
        double med = samples_.size() % 2 ? samples_[mid]
                                         : 0.5 * (samples_[mid - 1] + samples_[mid]);
        return std::max(med, 1.0);
    }

  private:
    std::vector<double> samples_;
};

} // namespace

EvalResult evaluate(const Cmdp& m, Agent& agent, const EvalOptions& opts) {
    require_valid(m);
    if (opts.episodes < 1) throw std::invalid_argument("evaluate: no episodes");
    EvalResult res;
    res.episodes = opts.episodes;
    DecisionClock clock;
    for (int ep = 0; ep < opts.episodes; ++ep) {
        Rng rng = Rng::derive(opts.seed, static_cast<std::uint64_t>(ep));
        int s = rng.sample(m.initial);
        double ret = 0.0, dng = 0.0, rw = 1.0, dw = 1.0;
        bool crashed = false;
        int steps = 0;
        for (int t = 0; t < m.horizon; ++t) {
            int a = 0;
            clock.time([&] { a = agent.act(t, s, rng); });
            ++steps;
            rw *= m.gamma;
            dw *= m.beta;
            ret += rw * m.reward[m.sa(s, a)];
            const double d = m.danger[m.sa(s, a)];
            dng += dw * d;
            if (d >= opts.accident_threshold) {
                crashed = true;
                if (opts.stop_on_accident) break;
            }
            s = rng.sample(m.row(s, a));
        }
        res.avg_return += ret;
        res.avg_danger += dng;
        if (crashed) ++res.crashes;
        if (opts.episode_log)
            opts.episode_log->push_back({ep, ret, dng, crashed, false, steps});
    }
    res.avg_return /= res.episodes;
    res.avg_danger /= res.episodes;
    res.crash_rate = static_cast<double>(res.crashes) / res.episodes;
    res.crash_ci = wilson_interval(res.crashes, res.episodes);
    res.decisions = clock.count();
    res.decision_ns_median = clock.median_ns();
    return res;
}

// ---------------------------------------------------------------------------
// Obstacle field.

int JamPolicyAgent::act(int t, const JamEnv::State& st, Rng& rng) {
    const int s = env_.joint_state(st.agent, st.obstacles);
    return rng.sample(pi_.row(t, s));
}

JamComposedAgent::JamComposedAgent(const JamEnv& env,
                                   std::vector<const ThreatTable*> obstacle_tables,
                                   double threshold)
    : env_(env), tables_(std::move(obstacle_tables)), threshold_(threshold) {
    if (tables_.size() != env_.config().obstacles.size())
        throw std::invalid_argument("composed agent: one threat table per obstacle expected");
    const int T = env_.config().horizon;
    const int n = env_.n_agent_states();
    const double gamma = env_.config().gamma;
    value_.assign(static_cast<std::size_t>(T + 1) * n, 0.0);
    for (int t = T - 1; t >= 0; --t)
        for (int s = 0; s < n; ++s) {
            double best = -1e300;
            for (int a = 0; a < env_.n_actions(); ++a) {
                double q = env_.agent_step_reward(s, a);
                const int s2 = env_.agent_next_state(s, a);
                if (!env_.agent_at_exit(s2)) q += gamma * value_[(t + 1) * n + s2];
                best = std::max(best, q);
            }
            value_[t * n + s] = best;
        }
}

double JamComposedAgent::composed(int t, const JamEnv::State& st, int a) const {
    double total = 0.0;
    for (std::size_t n = 0; n < st.obstacles.size(); ++n) {
        const int s = env_.subsystem_state(st.agent, st.obstacles[n]);
        total += tables_[n]->at(t, s, a);
    }
    return std::min(1.0, total);
}

int JamComposedAgent::act(int t, const JamEnv::State& st, Rng&) {
    const int n = env_.n_agent_states();
    const double gamma = env_.config().gamma;
    int best = -1, safest = 0;
    double best_q = 0.0, best_threat = 2.0, least = 2.0;
    for (int a = 0; a < env_.n_actions(); ++a) {
        const double threat = composed(t, st, a);
        if (threat < least) {
            least = threat;
            safest = a;
        }
        if (threat > threshold_ + 1e-12) continue;
        double q = env_.agent_step_reward(st.agent, a);
        const int s2 = env_.agent_next_state(st.agent, a);
        if (!env_.agent_at_exit(s2) && t + 1 < env_.config().horizon)
            q += gamma * value_[(t + 1) * n + s2];
        // Ties are common under gamma = 1, where the shaping term telescopes
        // and equally long routes share one value; settle them on threat.
        const bool better = best < 0 || q > best_q + 1e-9 ||
                            (q > best_q - 1e-9 && threat + 1e-12 < best_threat);
        if (better) {
            best = a;
            best_q = q;
            best_threat = threat;
        }
    }
    return best >= 0 ? best : safest;
}

EvalResult evaluate_jam(const JamEnv& env, JamAgent& agent, const EvalOptions& opts) {
    if (opts.episodes < 1) throw std::invalid_argument("evaluate_jam: no episodes");
    EvalResult res;
    res.episodes = opts.episodes;
    const double gamma = env.config().gamma;
    DecisionClock clock;
    for (int ep = 0; ep < opts.episodes; ++ep) {
        Rng rng = Rng::derive(opts.seed, static_cast<std::uint64_t>(ep));
        JamEnv::State st = env.initial_state();
        double ret = 0.0, w = 1.0;
        int steps = 0;
        for (int t = 0; t < env.config().horizon; ++t) {
            if (st.done || st.crashed) break;
            int a = 0;
            clock.time([&] { a = agent.act(t, st, rng); });
            const JamStep step = env.step(st, a, rng);
            ++steps;
            w *= gamma;
            ret += w * step.reward;
        }
        res.avg_return += ret;
        if (st.crashed) ++res.crashes;
        if (st.done) ++res.goals;
        if (opts.episode_log)
            opts.episode_log->push_back(
                {ep, ret, st.crashed ? 1.0 : 0.0, st.crashed, st.done, steps});
    }
    res.avg_return /= res.episodes;
    res.crash_rate = static_cast<double>(res.crashes) / res.episodes;
    res.avg_danger = res.crash_rate;
    res.crash_ci = wilson_interval(res.crashes, res.episodes);
    res.decisions = clock.count();
    res.decision_ns_median = clock.median_ns();
    return res;
}

std::vector<double> threat_heatmap(const JamEnv& env, const ThreatTable& sub, int t,
                                   int agent_state) {
    const auto& cfg = env.config();
    std::vector<double> heat(static_cast<std::size_t>(cfg.width) * cfg.height, 0.0);
    for (int y = 0; y < cfg.height; ++y)
        for (int x = 0; x < cfg.width; ++x) {
            const int s = env.subsystem_state(agent_state, env.obstacle_state_of(x, y));
            double least = 1.0;
            for (int a = 0; a < env.n_actions(); ++a)
                least = std::min(least, sub.at(t, s, a));
            heat[static_cast<std::size_t>(y) * cfg.width + x] = least;
        }
    return heat;
}

std::string render_heatmap(const JamEnv& env, const std::vector<double>& heat) {
    const auto& cfg = env.config();
    std::string out;
    char buf[16];
    for (int y = 0; y < cfg.height; ++y) {
        for (int x = 0; x < cfg.width; ++x) {
            std::snprintf(buf, sizeof buf, "%6.3f", heat[static_cast<std::size_t>(y) * cfg.width + x]);
            out += buf;
            out += x + 1 == cfg.width ? "" : " ";
        }
        out += '\n';
    }
    return out;
}

} // namespace rpmdp
