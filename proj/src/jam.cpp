#include "rpmdp/envs.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace rpmdp {

namespace {

constexpr int kMoveDx[5] = {0, 0, 0, 1, -1};
constexpr int kMoveDy[5] = {0, -1, 1, 0, 0};

} // namespace

JamEnv::JamEnv(JamConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.width < 2 || cfg_.height < 2)
        throw std::invalid_argument("jam: field too small");
    if (cfg_.horizon < 1) throw std::invalid_argument("jam: horizon must be positive");
    auto in_field = [&](int x, int y) {
        return x >= 0 && x < cfg_.width && y >= 0 && y < cfg_.height;
    };
    if (!in_field(cfg_.exit_x, cfg_.exit_y)) throw std::invalid_argument("jam: exit off field");
    if (!in_field(cfg_.agent_x, cfg_.agent_y))
        throw std::invalid_argument("jam: agent start off field");
    const int dirs = cfg_.momentum ? 9 : 1;
    n_actions_ = cfg_.momentum ? 9 : 5;
    n_agent_ = cfg_.width * cfg_.height * dirs;
    n_obstacle_ = cfg_.width * cfg_.height * dirs + 1;
    exit_cell_ = cfg_.exit_y * cfg_.width + cfg_.exit_x;
    if (cfg_.agent_x == cfg_.exit_x && cfg_.agent_y == cfg_.exit_y)
        throw std::invalid_argument("jam: agent starts on the exit");

    if (cfg_.default_zones && cfg_.zones.empty()) {
        const std::array<std::array<int, 2>, 4> corners = {
            {{0, 0}, {cfg_.width - 1, 0}, {0, cfg_.height - 1}, {cfg_.width - 1, cfg_.height - 1}}};
        for (auto c : corners)
            if (c[0] != cfg_.exit_x || c[1] != cfg_.exit_y) cfg_.zones.push_back(c);
    }
    zone_mask_.assign(static_cast<std::size_t>(cfg_.width) * cfg_.height, 0);
    for (auto [x, y] : cfg_.zones) {
        if (!in_field(x, y)) throw std::invalid_argument("jam: zone off field");
        if (x == cfg_.exit_x && y == cfg_.exit_y)
            throw std::invalid_argument("jam: zone on the exit");
        zone_mask_[static_cast<std::size_t>(y) * cfg_.width + x] = 1;
    }
    if (!cfg_.obstacle_immobile.empty() &&
        cfg_.obstacle_immobile.size() != cfg_.obstacles.size())
        throw std::invalid_argument("jam: one immobility flag per obstacle expected");
    for (auto [x, y] : cfg_.obstacles) {
        if (!in_field(x, y)) throw std::invalid_argument("jam: obstacle off field");
        if (is_zone(y * cfg_.width + x))
            throw std::invalid_argument("jam: obstacle starts in a safety zone");
        if (x == cfg_.agent_x && y == cfg_.agent_y)
            throw std::invalid_argument("jam: obstacle starts on the agent");
    }
}

bool JamEnv::is_zone(int cell) const { return zone_mask_[static_cast<std::size_t>(cell)] != 0; }

int JamEnv::agent_state_of(int x, int y, int vx, int vy) const {
    const int cell = y * cfg_.width + x;
    if (!cfg_.momentum) return cell;
    return cell * 9 + (vx + 1) * 3 + (vy + 1);
}

int JamEnv::agent_cell_of(int agent_state) const {
    return cfg_.momentum ? agent_state / 9 : agent_state;
}

int JamEnv::obstacle_state_of(int x, int y, int vx, int vy) const {
    return agent_state_of(x, y, vx, vy);
}

bool JamEnv::agent_at_exit(int agent_state) const {
    return agent_cell_of(agent_state) == exit_cell_;
}

int JamEnv::manhattan_to_exit(int agent_state) const {
    const int cell = agent_cell_of(agent_state);
    return std::abs(cell % cfg_.width - cfg_.exit_x) + std::abs(cell / cfg_.width - cfg_.exit_y);
}

int JamEnv::agent_next_state(int agent_state, int action) const {
    int next_state, next_cell;
    agent_move(agent_state, action, next_state, next_cell);
    return next_state;
}

double JamEnv::agent_step_reward(int agent_state, int action) const {
    int next_state, next_cell;
    agent_move(agent_state, action, next_state, next_cell);
    return step_reward(agent_cell_of(agent_state), next_cell, 0.0);
}

void JamEnv::agent_move(int agent_state, int action, int& next_state, int& next_cell) const {
    const int cell = agent_cell_of(agent_state);
    const int x = cell % cfg_.width, y = cell / cfg_.width;
    if (!cfg_.momentum) {
        int nx = x + kMoveDx[action], ny = y + kMoveDy[action];
        if (nx < 0 || nx >= cfg_.width) nx = x;
        if (ny < 0 || ny >= cfg_.height) ny = y;
        next_cell = ny * cfg_.width + nx;
        next_state = next_cell;
        return;
    }
    const int vel = agent_state % 9;
    int vx = std::clamp(vel / 3 - 1 + action / 3 - 1, -1, 1);
    int vy = std::clamp(vel % 3 - 1 + action % 3 - 1, -1, 1);
    int nx = x + vx, ny = y + vy;
    if (nx < 0 || nx >= cfg_.width) { nx = x; vx = 0; }
    if (ny < 0 || ny >= cfg_.height) { ny = y; vy = 0; }
    next_cell = ny * cfg_.width + nx;
    next_state = next_cell * 9 + (vx + 1) * 3 + (vy + 1);
}

std::vector<JamEnv::ObstacleOutcome> JamEnv::obstacle_moves(int obstacle_state,
                                                            bool immobile) const {
    if (obstacle_state == obstacle_gone_state()) return {{obstacle_gone_state(), -1, 1.0}};
    std::vector<ObstacleOutcome> out;
    const int cell = agent_cell_of(obstacle_state);
    const int x = cell % cfg_.width, y = cell / cfg_.width;
    if (immobile) {
        out.push_back({obstacle_state, cell, 1.0});
        return out;
    }
    auto add = [&](int state, int landed_cell, double p) {
        if (is_zone(landed_cell)) state = obstacle_gone_state();
        for (auto& o : out)
            if (o.state == state && o.cell == landed_cell) {
                o.prob += p;
                return;
            }
        out.push_back({state, landed_cell, p});
    };
    if (!cfg_.momentum) {
        for (int mv = 0; mv < 5; ++mv) {
            int nx = x + kMoveDx[mv], ny = y + kMoveDy[mv];
            if (nx < 0 || nx >= cfg_.width) nx = x;
            if (ny < 0 || ny >= cfg_.height) ny = y;
            add(ny * cfg_.width + nx, ny * cfg_.width + nx, 0.2);
        }
        return out;
    }
    const int vel = obstacle_state % 9;
    for (int dv = 0; dv < 9; ++dv) {
        int vx = std::clamp(vel / 3 - 1 + dv / 3 - 1, -1, 1);
        int vy = std::clamp(vel % 3 - 1 + dv % 3 - 1, -1, 1);
        int nx = x + vx, ny = y + vy;
        if (nx < 0 || nx >= cfg_.width) { nx = x; vx = 0; }
        if (ny < 0 || ny >= cfg_.height) { ny = y; vy = 0; }
        const int ncell = ny * cfg_.width + nx;
        add(ncell * 9 + (vx + 1) * 3 + (vy + 1), ncell, 1.0 / 9.0);
    }
    return out;
}

bool JamEnv::collides(int a_old_cell, int a_new_cell, int o_old_cell,
                      const ObstacleOutcome& o) const {
    if (o.cell < 0) return false;
    if (o.cell == a_new_cell) return true;
    return o_old_cell == a_new_cell && o.cell == a_old_cell;
}

double JamEnv::step_reward(int a_old_cell, int a_new_cell, double collision_prob) const {
    auto dist = [&](int cell) {
        return std::abs(cell % cfg_.width - cfg_.exit_x) +
               std::abs(cell / cfg_.width - cfg_.exit_y);
    };
    double r = cfg_.shaping_weight * (dist(a_old_cell) - dist(a_new_cell));
    if (a_new_cell == a_old_cell) r += cfg_.stop_penalty;
    if (a_new_cell == exit_cell_) r += (1.0 - collision_prob) * cfg_.goal_reward;
    return r + collision_prob * cfg_.collision_penalty;
}

int JamEnv::subsystem_state(int agent_state, int obstacle_state) const {
    return agent_state * n_obstacle_ + obstacle_state;
}

Cmdp JamEnv::pair_cmdp(bool immobile_obstacle, int obstacle_start_state) const {
    Cmdp m;
    m.n_states = n_agent_ * n_obstacle_ + 1;
    m.n_actions = n_actions_;
    m.horizon = cfg_.horizon;
    m.gamma = cfg_.gamma;
    m.beta = cfg_.beta;
    const int terminal = m.n_states - 1;
    m.transition.assign(static_cast<std::size_t>(m.n_states) * m.n_actions * m.n_states, 0.0);
    m.reward.assign(static_cast<std::size_t>(m.n_states) * m.n_actions, 0.0);
    m.danger.assign(static_cast<std::size_t>(m.n_states) * m.n_actions, 0.0);
    m.initial.assign(m.n_states, 0.0);
    m.initial[subsystem_state(agent_state_of(cfg_.agent_x, cfg_.agent_y), obstacle_start_state)] = 1.0;

    for (int as = 0; as < n_agent_; ++as) {
        const int a_old_cell = agent_cell_of(as);
        for (int os = 0; os < n_obstacle_; ++os) {
            const int s = subsystem_state(as, os);
            if (a_old_cell == exit_cell_) {
                // Not reachable: entering the exit jumps straight to the
                // terminal state.  Keep the rows valid anyway.
                for (int a = 0; a < m.n_actions; ++a)
                    m.transition[m.sas(s, a, s)] = 1.0;
                continue;
            }
            const int o_old_cell = os == obstacle_gone_state() ? -1 : agent_cell_of(os);
            for (int a = 0; a < m.n_actions; ++a) {
                int a_next, a_new_cell;
                agent_move(as, a, a_next, a_new_cell);
                const auto outcomes = obstacle_moves(os, immobile_obstacle);
                double p_col = 0.0;
                for (const auto& o : outcomes)
                    if (collides(a_old_cell, a_new_cell, o_old_cell, o)) p_col += o.prob;
                m.danger[m.sa(s, a)] = p_col;
                const double survive = 1.0 - p_col;
                if (survive <= 0.0) {
                    m.transition[m.sas(s, a, terminal)] = 1.0;
                    continue;
                }
                if (a_new_cell == exit_cell_) {
                    m.transition[m.sas(s, a, terminal)] = 1.0;
                    continue;
                }
                for (const auto& o : outcomes) {
                    if (collides(a_old_cell, a_new_cell, o_old_cell, o)) continue;
                    m.transition[m.sas(s, a, subsystem_state(a_next, o.state))] += o.prob / survive;
                }
            }
        }
    }
    for (int a = 0; a < m.n_actions; ++a)
        m.transition[m.sas(terminal, a, terminal)] = 1.0;
    return m;
}

Cmdp JamEnv::subsystem_cmdp(int n) const {
    if (n < 0 || n >= static_cast<int>(cfg_.obstacles.size()))
        throw std::invalid_argument("jam: no such obstacle");
    const bool immobile = !cfg_.obstacle_immobile.empty() && cfg_.obstacle_immobile[n] != 0;
    return pair_cmdp(immobile, obstacle_state_of(cfg_.obstacles[n][0], cfg_.obstacles[n][1]));
}

int JamEnv::joint_state(int agent_state, std::span<const int> obstacle_states) const {
    long long id = agent_state;
    for (std::size_t n = obstacle_states.size(); n-- > 0;)
        id = id * n_obstacle_ + obstacle_states[n];
    return static_cast<int>(id);
}

void JamEnv::decode_joint(int s, int& agent_state, std::vector<int>& obstacle_states) const {
    const std::size_t count = cfg_.obstacles.size();
    obstacle_states.resize(count);
    long long id = s;
    for (std::size_t n = 0; n < count; ++n) {
        obstacle_states[n] = static_cast<int>(id % n_obstacle_);
        id /= n_obstacle_;
    }
    agent_state = static_cast<int>(id);
}

Cmdp JamEnv::joint_cmdp(std::size_t max_states) const {
    const std::size_t count = cfg_.obstacles.size();
    std::size_t n_joint = n_agent_;
    for (std::size_t n = 0; n < count; ++n) {
        n_joint *= static_cast<std::size_t>(n_obstacle_);
        if (n_joint > max_states)
            throw std::invalid_argument("jam: joint state space exceeds the cap");
    }
    n_joint += 1; // terminal
    Cmdp m;
    m.n_states = static_cast<int>(n_joint);
    m.n_actions = n_actions_;
    m.horizon = cfg_.horizon;
    m.gamma = cfg_.gamma;
    m.beta = cfg_.beta;
    const int terminal = m.n_states - 1;
    m.transition.assign(static_cast<std::size_t>(m.n_states) * m.n_actions * m.n_states, 0.0);
    m.reward.assign(static_cast<std::size_t>(m.n_states) * m.n_actions, 0.0);
    m.danger.assign(static_cast<std::size_t>(m.n_states) * m.n_actions, 0.0);
    m.initial.assign(m.n_states, 0.0);
    {
        std::vector<int> obs(count);
        for (std::size_t n = 0; n < count; ++n)
            obs[n] = obstacle_state_of(cfg_.obstacles[n][0], cfg_.obstacles[n][1]);
        m.initial[joint_state(agent_state_of(cfg_.agent_x, cfg_.agent_y), obs)] = 1.0;
    }

    std::vector<int> obs_states(count);
    std::vector<std::vector<ObstacleOutcome>> survivors(count);
    std::vector<int> combo(count);
    for (int s = 0; s + 1 < m.n_states; ++s) {
        int as;
        decode_joint(s, as, obs_states);
        const int a_old_cell = agent_cell_of(as);
        if (a_old_cell == exit_cell_) {
            for (int a = 0; a < m.n_actions; ++a) m.transition[m.sas(s, a, s)] = 1.0;
            continue;
        }
        for (int a = 0; a < m.n_actions; ++a) {
            int a_next, a_new_cell;
            agent_move(as, a, a_next, a_new_cell);
            double survive_all = 1.0;
            for (std::size_t n = 0; n < count; ++n) {
                const bool immobile =
                    !cfg_.obstacle_immobile.empty() && cfg_.obstacle_immobile[n] != 0;
                const int o_old_cell = obs_states[n] == obstacle_gone_state()
                                           ? -1
                                           : agent_cell_of(obs_states[n]);
                auto outcomes = obstacle_moves(obs_states[n], immobile);
                double p_n = 0.0;
                for (const auto& o : outcomes)
                    if (collides(a_old_cell, a_new_cell, o_old_cell, o)) p_n += o.prob;
                survive_all *= 1.0 - p_n;
                auto& keep = survivors[n];
                keep.clear();
                if (p_n < 1.0)
                    for (const auto& o : outcomes)
                        if (!collides(a_old_cell, a_new_cell, o_old_cell, o))
                            keep.push_back({o.state, o.cell, o.prob / (1.0 - p_n)});
            }
            const double p_c = 1.0 - survive_all;
            m.danger[m.sa(s, a)] = p_c;
            m.reward[m.sa(s, a)] = step_reward(a_old_cell, a_new_cell, p_c);
            if (survive_all <= 0.0 || a_new_cell == exit_cell_) {
                m.transition[m.sas(s, a, terminal)] = 1.0;
                continue;
            }
            // Conditioned on no collision, obstacle moves stay independent,
            // so the joint row is the product of the per-obstacle rows.
            std::fill(combo.begin(), combo.end(), 0);
            while (true) {
                double p = 1.0;
                for (std::size_t n = 0; n < count; ++n) {
                    obs_states[n] = survivors[n][combo[n]].state;
                    p *= survivors[n][combo[n]].prob;
                }
                m.transition[m.sas(s, a, joint_state(a_next, obs_states))] += p;
                std::size_t n = 0;
                for (; n < count; ++n) {
                    if (++combo[n] < static_cast<int>(survivors[n].size())) break;
                    combo[n] = 0;
                }
                if (n == count) break;
            }
            decode_joint(s, as, obs_states); // restore for the next action
        }
    }
    for (int a = 0; a < m.n_actions; ++a)
        m.transition[m.sas(terminal, a, terminal)] = 1.0;
    return m;
}

Policy JamEnv::lift_agent_policy(const Policy& agent_pi, int n_states_target) const {
    if (agent_pi.n_states != n_agent_)
        throw std::invalid_argument("jam: agent policy has the wrong state count");
    if ((n_states_target - 1) % n_agent_ != 0)
        throw std::invalid_argument("jam: target state count does not factor");
    const int per_agent = (n_states_target - 1) / n_agent_;
    Policy out = Policy::uniform(agent_pi.horizon, n_states_target, agent_pi.n_actions);
    for (int t = 0; t < out.horizon; ++t) {
        for (int s = 0; s + 1 < n_states_target; ++s) {
            const auto src = agent_pi.row(t, s / per_agent);
            auto dst = out.row_mut(t, s);
            std::copy(src.begin(), src.end(), dst.begin());
        }
        auto dst = out.row_mut(t, n_states_target - 1);
        std::fill(dst.begin(), dst.end(), 0.0);
        dst[0] = 1.0;
    }
    return out;
}

ThreatTable JamEnv::pair_threat(int n, const Policy& agent_pi, ThreatMode mode) const {
    if (n < 0 || n >= static_cast<int>(cfg_.obstacles.size()))
        throw std::invalid_argument("jam: no such obstacle");
    if (agent_pi.n_states != n_agent_ || agent_pi.n_actions != n_actions_ ||
        agent_pi.horizon < cfg_.horizon)
        throw std::invalid_argument("jam: agent policy shape mismatch");
    const bool immobile = !cfg_.obstacle_immobile.empty() && cfg_.obstacle_immobile[n] != 0;
    const int T = cfg_.horizon;

    ThreatTable tab;
    tab.mode = mode;
    tab.horizon = T;
    tab.n_states = n_agent_ * n_obstacle_ + 1;
    tab.n_actions = n_actions_;
    tab.values.assign(static_cast<std::size_t>(T) * tab.n_states * n_actions_, 0.0);
    tab.state_values.assign(static_cast<std::size_t>(T) * tab.n_states, 0.0);

    std::vector<std::vector<ObstacleOutcome>> moves(n_obstacle_);
    for (int os = 0; os < n_obstacle_; ++os) moves[os] = obstacle_moves(os, immobile);

    std::vector<double> next_v(tab.n_states, 0.0);
    for (int t = T - 1; t >= 0; --t) {
        for (int as = 0; as < n_agent_; ++as) {
            const int a_old_cell = agent_cell_of(as);
            const bool at_exit = a_old_cell == exit_cell_;
            const auto pi_row = agent_pi.row(t, as);
            for (int os = 0; os < n_obstacle_; ++os) {
                const int s = subsystem_state(as, os);
                const int o_old_cell =
                    os == obstacle_gone_state() ? -1 : agent_cell_of(os);
                double mix = 0.0;
                for (int a = 0; a < n_actions_; ++a) {
                    double v = 0.0;
                    if (!at_exit) {
                        int a_next, a_new_cell;
                        agent_move(as, a, a_next, a_new_cell);
                        double p_col = 0.0;
                        for (const auto& o : moves[os])
                            if (collides(a_old_cell, a_new_cell, o_old_cell, o))
                                p_col += o.prob;
                        const double survive = 1.0 - p_col;
                        double cont = 0.0;
                        if (t + 1 < T && survive > 0.0 && a_new_cell != exit_cell_)
                            for (const auto& o : moves[os]) {
                                if (collides(a_old_cell, a_new_cell, o_old_cell, o))
                                    continue;
                                cont += o.prob / survive *
                                        next_v[subsystem_state(a_next, o.state)];
                            }
                        v = mode == ThreatMode::accident
                                ? p_col + survive * cont
                                : cfg_.beta * (p_col + cont);
                    }
                    tab.values[tab.tsa(t, s, a)] = v;
                    mix += pi_row[a] * v;
                }
                tab.state_values[static_cast<std::size_t>(t) * tab.n_states + s] = mix;
            }
        }
        const auto row = tab.state_values.begin() + static_cast<std::size_t>(t) * tab.n_states;
        std::copy(row, row + tab.n_states, next_v.begin());
    }
    return tab;
}

ThreatTable JamEnv::joint_threat(const Policy& agent_pi, ThreatMode mode,
                                 std::size_t max_states) const {
    if (agent_pi.n_states != n_agent_ || agent_pi.n_actions != n_actions_ ||
        agent_pi.horizon < cfg_.horizon)
        throw std::invalid_argument("jam: agent policy shape mismatch");
    const std::size_t count = cfg_.obstacles.size();
    std::size_t n_joint = n_agent_;
    for (std::size_t n = 0; n < count; ++n) {
        n_joint *= static_cast<std::size_t>(n_obstacle_);
        if (n_joint > max_states)
            throw std::invalid_argument("jam: joint state space exceeds the cap");
    }
    const int T = cfg_.horizon;

    ThreatTable tab;
    tab.mode = mode;
    tab.horizon = T;
    tab.n_states = static_cast<int>(n_joint) + 1;
    tab.n_actions = n_actions_;
    tab.values.assign(static_cast<std::size_t>(T) * tab.n_states * n_actions_, 0.0);
    tab.state_values.assign(static_cast<std::size_t>(T) * tab.n_states, 0.0);

    std::vector<std::vector<ObstacleOutcome>> mobile_moves(n_obstacle_);
    std::vector<std::vector<ObstacleOutcome>> immobile_moves(n_obstacle_);
    for (int os = 0; os < n_obstacle_; ++os) {
        mobile_moves[os] = obstacle_moves(os, false);
        immobile_moves[os] = obstacle_moves(os, true);
    }
    auto moves_for = [&](std::size_t n, int os) -> const std::vector<ObstacleOutcome>& {
        const bool immobile =
            !cfg_.obstacle_immobile.empty() && cfg_.obstacle_immobile[n] != 0;
        return immobile ? immobile_moves[os] : mobile_moves[os];
    };

    std::vector<int> obs_states(count);
    std::vector<std::vector<ObstacleOutcome>> survivors(count);
    std::vector<int> combo(count);
    std::vector<int> next_obs(count);
    std::vector<double> next_v(tab.n_states, 0.0);
    for (int t = T - 1; t >= 0; --t) {
        for (int s = 0; s + 1 < tab.n_states; ++s) {
            int as;
            decode_joint(s, as, obs_states);
            const int a_old_cell = agent_cell_of(as);
            if (a_old_cell == exit_cell_) continue; // values stay zero
            const auto pi_row = agent_pi.row(t, as);
            double mix = 0.0;
            for (int a = 0; a < n_actions_; ++a) {
                int a_next, a_new_cell;
                agent_move(as, a, a_next, a_new_cell);
                double survive_all = 1.0;
                for (std::size_t n = 0; n < count; ++n) {
                    const int o_old_cell = obs_states[n] == obstacle_gone_state()
                                               ? -1
                                               : agent_cell_of(obs_states[n]);
                    const auto& outcomes = moves_for(n, obs_states[n]);
                    double p_n = 0.0;
                    for (const auto& o : outcomes)
                        if (collides(a_old_cell, a_new_cell, o_old_cell, o)) p_n += o.prob;
                    survive_all *= 1.0 - p_n;
                    auto& keep = survivors[n];
                    keep.clear();
                    if (p_n < 1.0)
                        for (const auto& o : outcomes)
                            if (!collides(a_old_cell, a_new_cell, o_old_cell, o))
                                keep.push_back({o.state, o.cell, o.prob / (1.0 - p_n)});
                }
                const double p_c = 1.0 - survive_all;
                double cont = 0.0;
                if (t + 1 < T && survive_all > 0.0 && a_new_cell != exit_cell_) {
                    std::fill(combo.begin(), combo.end(), 0);
                    while (true) {
                        double p = 1.0;
                        for (std::size_t n = 0; n < count; ++n) {
                            next_obs[n] = survivors[n][combo[n]].state;
                            p *= survivors[n][combo[n]].prob;
                        }
                        cont += p * next_v[joint_state(a_next, next_obs)];
                        std::size_t n = 0;
                        for (; n < count; ++n) {
                            if (++combo[n] < static_cast<int>(survivors[n].size())) break;
                            combo[n] = 0;
                        }
                        if (n == count) break;
                    }
                }
                const double v = mode == ThreatMode::accident
                                     ? p_c + survive_all * cont
                                     : cfg_.beta * (p_c + cont);
                tab.values[tab.tsa(t, s, a)] = v;
                mix += pi_row[a] * v;
            }
            tab.state_values[static_cast<std::size_t>(t) * tab.n_states + s] = mix;
        }
        const auto row = tab.state_values.begin() + static_cast<std::size_t>(t) * tab.n_states;
        std::copy(row, row + tab.n_states, next_v.begin());
    }
    return tab;
}

std::vector<std::vector<int>> JamEnv::reachable_joint(std::size_t max_states) const {
    const std::size_t count = cfg_.obstacles.size();
    std::size_t n_joint = n_agent_;
    for (std::size_t n = 0; n < count; ++n) {
        n_joint *= static_cast<std::size_t>(n_obstacle_);
        if (n_joint > max_states)
            throw std::invalid_argument("jam: joint state space exceeds the cap");
    }
    const int n_states = static_cast<int>(n_joint) + 1;
    const int terminal = n_states - 1;

    std::vector<std::vector<ObstacleOutcome>> mobile_moves(n_obstacle_);
    std::vector<std::vector<ObstacleOutcome>> immobile_moves(n_obstacle_);
    for (int os = 0; os < n_obstacle_; ++os) {
        mobile_moves[os] = obstacle_moves(os, false);
        immobile_moves[os] = obstacle_moves(os, true);
    }

    std::vector<std::vector<int>> reach(cfg_.horizon);
    std::vector<std::uint8_t> now(n_states, 0), next(n_states, 0);
    {
        std::vector<int> obs(count);
        for (std::size_t n = 0; n < count; ++n)
            obs[n] = obstacle_state_of(cfg_.obstacles[n][0], cfg_.obstacles[n][1]);
        now[joint_state(agent_state_of(cfg_.agent_x, cfg_.agent_y), obs)] = 1;
    }
    std::vector<int> obs_states(count);
    std::vector<std::vector<ObstacleOutcome>> survivors(count);
    std::vector<int> combo(count);
    std::vector<int> next_obs(count);
    for (int t = 0; t < cfg_.horizon; ++t) {
        for (int s = 0; s < n_states; ++s)
            if (now[s]) reach[t].push_back(s);
        if (t + 1 == cfg_.horizon) break;
        std::fill(next.begin(), next.end(), 0);
        for (const int s : reach[t]) {
            if (s == terminal) {
                next[terminal] = 1;
                continue;
            }
            int as;
            decode_joint(s, as, obs_states);
            const int a_old_cell = agent_cell_of(as);
            if (a_old_cell == exit_cell_) {
                next[s] = 1;
                continue;
            }
            for (int a = 0; a < n_actions_; ++a) {
                int a_next, a_new_cell;
                agent_move(as, a, a_next, a_new_cell);
                bool all_survive_possible = true;
                bool any_collision = false;
                for (std::size_t n = 0; n < count; ++n) {
                    const bool immobile =
                        !cfg_.obstacle_immobile.empty() && cfg_.obstacle_immobile[n] != 0;
                    const int o_old_cell = obs_states[n] == obstacle_gone_state()
                                               ? -1
                                               : agent_cell_of(obs_states[n]);
                    const auto& outcomes =
                        immobile ? immobile_moves[obs_states[n]] : mobile_moves[obs_states[n]];
                    auto& keep = survivors[n];
                    keep.clear();
                    for (const auto& o : outcomes) {
                        if (collides(a_old_cell, a_new_cell, o_old_cell, o))
                            any_collision = true;
                        else
                            keep.push_back(o);
                    }
                    if (keep.empty()) all_survive_possible = false;
                }
                if (any_collision) next[terminal] = 1;
                if (!all_survive_possible) continue;
                if (a_new_cell == exit_cell_) {
                    next[terminal] = 1;
                    continue;
                }
                std::fill(combo.begin(), combo.end(), 0);
                while (true) {
                    for (std::size_t n = 0; n < count; ++n)
                        next_obs[n] = survivors[n][combo[n]].state;
                    next[joint_state(a_next, next_obs)] = 1;
                    std::size_t n = 0;
                    for (; n < count; ++n) {
                        if (++combo[n] < static_cast<int>(survivors[n].size())) break;
                        combo[n] = 0;
                    }
                    if (n == count) break;
                }
            }
        }
        now.swap(next);
    }
    return reach;
}

JamEnv::State JamEnv::initial_state() const {
    State st;
    st.agent = agent_state_of(cfg_.agent_x, cfg_.agent_y);
    st.obstacles.reserve(cfg_.obstacles.size());
    for (auto [x, y] : cfg_.obstacles) st.obstacles.push_back(obstacle_state_of(x, y));
    return st;
}

JamStep JamEnv::step(State& st, int action, Rng& rng) const {
    JamStep res;
    if (st.done || st.crashed) return res;
    const int a_old_cell = agent_cell_of(st.agent);
    int a_next, a_new_cell;
    agent_move(st.agent, action, a_next, a_new_cell);
    bool collided = false;
    for (std::size_t n = 0; n < st.obstacles.size(); ++n) {
        const bool immobile = !cfg_.obstacle_immobile.empty() && cfg_.obstacle_immobile[n] != 0;
        const int o_old_cell =
            st.obstacles[n] == obstacle_gone_state() ? -1 : agent_cell_of(st.obstacles[n]);
        const auto outcomes = obstacle_moves(st.obstacles[n], immobile);
        double u = rng.next_double();
        std::size_t pick = outcomes.size() - 1;
        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            u -= outcomes[i].prob;
            if (u < 0.0) { pick = i; break; }
        }
        if (collides(a_old_cell, a_new_cell, o_old_cell, outcomes[pick])) collided = true;
        st.obstacles[n] = outcomes[pick].state;
    }
    res.collided = collided;
    res.reward = step_reward(a_old_cell, a_new_cell, collided ? 1.0 : 0.0);
    st.agent = a_next;
    if (collided) {
        st.crashed = true;
    } else if (a_new_cell == exit_cell_) {
        st.done = true;
        res.reached_exit = true;
    }
    return res;
}

} // namespace rpmdp
