#pragma once

#include "rpmdp/baselines.hpp"
#include "rpmdp/cmdp.hpp"
#include "rpmdp/envs.hpp"
#include "rpmdp/threat.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace rpmdp {

// Wilson score interval for a binomial proportion at 95% confidence.
struct WilsonInterval {
    double lo = 0.0;
    double hi = 1.0;
};

WilsonInterval wilson_interval(long long successes, long long trials);

// ---------------------------------------------------------------------------
// Episode evaluation.  Agents pick actions one step at a time; the driver
// times each decision and reports the median in nanoseconds alongside the
// realized returns and accident statistics.

struct Agent {
    virtual ~Agent() = default;
    virtual int act(int t, int s, Rng& rng) = 0;
};

class PolicyAgent : public Agent {
  public:
    explicit PolicyAgent(const Policy& pi) : pi_(pi) {}
    int act(int t, int s, Rng& rng) override;

  private:
    const Policy& pi_;
};

class MpcAgent : public Agent {
  public:
    MpcAgent(const Cmdp& m, int lookahead, double danger_cap, ThreatMode mode)
        : m_(m), lookahead_(lookahead), danger_cap_(danger_cap), mode_(mode) {}
    int act(int t, int s, Rng& rng) override;
    const MpcStats& stats() const { return stats_; }

  private:
    const Cmdp& m_;
    int lookahead_;
    double danger_cap_;
    ThreatMode mode_;
    MpcStats stats_;
};

// One evaluated episode, for callers that export per-episode tables.
struct EpisodeRecord {
    int episode = 0;
    double ret = 0.0;    // discount-weighted reward sum
    double danger = 0.0; // discount-weighted danger sum
    bool crashed = false;
    bool goal = false;
    int steps = 0;
};

struct EvalOptions {
    int episodes = 100;
    std::uint64_t seed = 1;
    bool stop_on_accident = true;
    double accident_threshold = 0.5; // a step with danger >= this is an accident
    // When set, one record per episode is appended in episode order.
    std::vector<EpisodeRecord>* episode_log = nullptr;
};

struct EvalResult {
    int episodes = 0;
    double avg_return = 0.0;
    double avg_danger = 0.0; // realized danger-weight sum, averaged
    int crashes = 0;
    double crash_rate = 0.0;
    WilsonInterval crash_ci;
    int goals = 0; // episodes that reached an absorbing success state, where defined
    long long decisions = 0;
    double decision_ns_median = 0.0;
};

EvalResult evaluate(const Cmdp& m, Agent& agent, const EvalOptions& opts);

// ---------------------------------------------------------------------------
// Obstacle-field evaluation against the sampling simulator, which works for
// any obstacle count.

struct JamAgent {
    virtual ~JamAgent() = default;
    virtual int act(int t, const JamEnv::State& st, Rng& rng) = 0;
};

// Plays a policy defined on the joint state space.
class JamPolicyAgent : public JamAgent {
  public:
    JamPolicyAgent(const JamEnv& env, const Policy& joint_pi)
        : env_(env), pi_(joint_pi) {}
    int act(int t, const JamEnv::State& st, Rng& rng) override;

  private:
    const JamEnv& env_;
    const Policy& pi_;
};

// Filters actions whose summed per-obstacle threat exceeds the threshold,
// then maximizes obstacle-free reward-to-go among the survivors; with no
// survivor it takes the least-threatening action.  The per-obstacle tables
// are recon output and transfer unchanged across obstacle counts.
class JamComposedAgent : public JamAgent {
  public:
    JamComposedAgent(const JamEnv& env,
                     std::vector<const ThreatTable*> obstacle_tables, double threshold);
    int act(int t, const JamEnv::State& st, Rng& rng) override;

  private:
    double composed(int t, const JamEnv::State& st, int a) const;

    const JamEnv& env_;
    std::vector<const ThreatTable*> tables_;
    double threshold_;
    std::vector<double> value_; // obstacle-free reward-to-go, (t, agent state)
};

EvalResult evaluate_jam(const JamEnv& env, JamAgent& agent, const EvalOptions& opts);

// ---------------------------------------------------------------------------
// Collision-threat heatmap: for a fixed agent motion state and step, the
// least threat over actions as a function of the obstacle cell (obstacle at
// rest), laid out row-major over the field.
std::vector<double> threat_heatmap(const JamEnv& env, const ThreatTable& sub, int t,
                                   int agent_state);

std::string render_heatmap(const JamEnv& env, const std::vector<double>& heat);

} // namespace rpmdp
