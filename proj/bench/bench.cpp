// Times the threat kernels in both execution modes on a dense random model.
// The two modes must produce identical tables; the speedup column shows what
// the extra threads buy on this machine.

#include "rpmdp/envs.hpp"
#include "rpmdp/threat.hpp"

#include <chrono>
#include <cstdio>

using namespace rpmdp;

namespace {

template <class F> double time_ms(F&& fn, int reps) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

} // namespace

int main() {
    RandomCmdpConfig cfg;
    cfg.n_states = 300;
    cfg.n_actions = 6;
    cfg.horizon = 40;
    cfg.hazard_density = 0.3;
    cfg.seed = 17;
    const Cmdp m = random_cmdp(cfg);
    const Policy pi = random_policy(cfg.horizon, cfg.n_states, cfg.n_actions, 18);

    std::printf("%-28s %12s %12s %8s\n", "kernel", "serial ms", "parallel ms", "speedup");

    const double dp_serial =
        time_ms([&] { compute_threat(m, pi, ThreatMode::discounted, Exec::serial); }, 3);
    const double dp_parallel =
        time_ms([&] { compute_threat(m, pi, ThreatMode::discounted, Exec::parallel); }, 3);
    std::printf("%-28s %12.2f %12.2f %8.2f\n", "threat backward pass", dp_serial, dp_parallel,
                dp_serial / dp_parallel);

    const auto a = compute_threat(m, pi, ThreatMode::discounted, Exec::serial);
    const auto b = compute_threat(m, pi, ThreatMode::discounted, Exec::parallel);
    if (a.values != b.values) {
        std::printf("threat kernels disagree between execution modes\n");
        return 1;
    }

    RandomCmdpConfig small = cfg;
    small.n_states = 30;
    small.horizon = 12;
    const Cmdp ms = random_cmdp(small);
    const Policy ps = random_policy(small.horizon, small.n_states, small.n_actions, 19);
    const double mc_serial = time_ms(
        [&] { monte_carlo_threat(ms, ps, 200, 7, ThreatMode::accident, Exec::serial); }, 3);
    const double mc_parallel = time_ms(
        [&] { monte_carlo_threat(ms, ps, 200, 7, ThreatMode::accident, Exec::parallel); }, 3);
    std::printf("%-28s %12.2f %12.2f %8.2f\n", "rollout estimator", mc_serial, mc_parallel,
                mc_serial / mc_parallel);

    const auto es = monte_carlo_threat(ms, ps, 200, 7, ThreatMode::accident, Exec::serial);
    const auto ep = monte_carlo_threat(ms, ps, 200, 7, ThreatMode::accident, Exec::parallel);
    if (es.table.values != ep.table.values) {
        std::printf("rollout kernels disagree between execution modes\n");
        return 1;
    }
    return 0;
}
