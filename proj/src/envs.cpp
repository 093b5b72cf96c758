#include "rpmdp/envs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rpmdp {

Cmdp random_cmdp(const RandomCmdpConfig& cfg) {
    if (cfg.n_states < 1 || cfg.n_actions < 1 || cfg.horizon < 1)
        throw std::invalid_argument("random_cmdp: sizes must be positive");
    Cmdp m;
    m.n_states = cfg.n_states;
    m.n_actions = cfg.n_actions;
    m.horizon = cfg.horizon;
    m.gamma = cfg.gamma;
    m.beta = cfg.beta;
    m.transition.resize(static_cast<std::size_t>(m.n_states) * m.n_actions * m.n_states);
    m.reward.resize(static_cast<std::size_t>(m.n_states) * m.n_actions);
    m.danger.resize(static_cast<std::size_t>(m.n_states) * m.n_actions);
    m.initial.assign(m.n_states, 0.0);

    Rng rng = Rng::derive(cfg.seed, 0x72616e64);
    for (int s = 0; s < m.n_states; ++s) {
        for (int a = 0; a < m.n_actions; ++a) {
            double total = 0.0;
            for (int s2 = 0; s2 < m.n_states; ++s2) {
                m.transition[m.sas(s, a, s2)] = rng.next_gamma(cfg.dirichlet);
                total += m.transition[m.sas(s, a, s2)];
            }
            for (int s2 = 0; s2 < m.n_states; ++s2) m.transition[m.sas(s, a, s2)] /= total;
            m.reward[m.sa(s, a)] = rng.next_double();
            m.danger[m.sa(s, a)] = rng.next_double() < cfg.hazard_density ? 1.0 : 0.0;
        }
    }
    if (cfg.uniform_initial) {
        std::fill(m.initial.begin(), m.initial.end(), 1.0 / m.n_states);
    } else {
        m.initial[0] = 1.0;
    }
    return m;
}

Policy random_policy(int horizon, int n_states, int n_actions, std::uint64_t seed) {
    Policy pi = Policy::uniform(horizon, n_states, n_actions);
    Rng rng = Rng::derive(seed, 0x706f6c);
    for (int t = 0; t < horizon; ++t) {
        for (int s = 0; s < n_states; ++s) {
            auto row = pi.row_mut(t, s);
            double total = 0.0;
            for (int a = 0; a < n_actions; ++a) {
                row[a] = rng.next_gamma(1.0);
                total += row[a];
            }
            for (int a = 0; a < n_actions; ++a) row[a] /= total;
        }
    }
    return pi;
}

// ---------------------------------------------------------------------------
// Gathering field.

GatherConfig gather_from_layout(const std::vector<std::string>& rows) {
    if (rows.empty()) throw std::invalid_argument("gather layout: empty");
    GatherConfig cfg;
    cfg.height = static_cast<int>(rows.size());
    cfg.width = static_cast<int>(rows[0].size());
    bool have_start = false;
    for (int y = 0; y < cfg.height; ++y) {
        if (static_cast<int>(rows[y].size()) != cfg.width)
            throw std::invalid_argument("gather layout: ragged rows");
        for (int x = 0; x < cfg.width; ++x) {
            switch (rows[y][x]) {
            case '.': break;
            case 'S':
                if (have_start) throw std::invalid_argument("gather layout: two starts");
                have_start = true;
                cfg.start_x = x;
                cfg.start_y = y;
                break;
            case 'A': cfg.apples.push_back({x, y}); break;
            case 'B': cfg.bombs.push_back({x, y}); break;
            default: throw std::invalid_argument("gather layout: bad character");
            }
        }
    }
    if (!have_start) throw std::invalid_argument("gather layout: no start");
    return cfg;
}

namespace {

// Shared 5-move set: stay, N, S, E, W (N decreases y).
constexpr int kMoveDx[5] = {0, 0, 0, 1, -1};
constexpr int kMoveDy[5] = {0, -1, 1, 0, 0};

} // namespace

GatherEnv grid_gather(const GatherConfig& cfg) {
    if (cfg.width < 1 || cfg.height < 1 || cfg.horizon < 1)
        throw std::invalid_argument("grid_gather: sizes must be positive");
    if (cfg.apples.size() > 8)
        throw std::invalid_argument("grid_gather: more than 8 apples");

    GatherEnv env;
    env.config = cfg;
    env.n_cells = cfg.width * cfg.height;
    env.n_apples = static_cast<int>(cfg.apples.size());

    std::vector<int> apple_at(env.n_cells, -1);
    std::vector<std::uint8_t> bomb_at(env.n_cells, 0);
    auto in_field = [&](int x, int y) {
        return x >= 0 && x < cfg.width && y >= 0 && y < cfg.height;
    };
    for (int i = 0; i < env.n_apples; ++i) {
        auto [x, y] = cfg.apples[i];
        if (!in_field(x, y)) throw std::invalid_argument("grid_gather: apple off field");
        apple_at[env.cell(x, y)] = i;
    }
    for (auto [x, y] : cfg.bombs) {
        if (!in_field(x, y)) throw std::invalid_argument("grid_gather: bomb off field");
        if (apple_at[env.cell(x, y)] >= 0)
            throw std::invalid_argument("grid_gather: apple and bomb share a cell");
        bomb_at[env.cell(x, y)] = 1;
    }
    if (!in_field(cfg.start_x, cfg.start_y))
        throw std::invalid_argument("grid_gather: start off field");
    if (apple_at[env.cell(cfg.start_x, cfg.start_y)] >= 0)
        throw std::invalid_argument("grid_gather: start on an apple");

    const unsigned n_masks = 1u << env.n_apples;
    Cmdp& m = env.cmdp;
    m.n_states = static_cast<int>(env.n_cells * n_masks);
    m.n_actions = 5;
    m.horizon = cfg.horizon;
    m.gamma = cfg.gamma;
    m.beta = cfg.beta;
    m.transition.assign(static_cast<std::size_t>(m.n_states) * m.n_actions * m.n_states, 0.0);
    m.reward.assign(static_cast<std::size_t>(m.n_states) * m.n_actions, 0.0);
    m.danger.assign(static_cast<std::size_t>(m.n_states) * m.n_actions, 0.0);
    m.initial.assign(m.n_states, 0.0);
    m.initial[env.state_of(cfg.start_x, cfg.start_y, 0)] = 1.0;

    for (int c = 0; c < env.n_cells; ++c) {
        const int x = c % cfg.width, y = c / cfg.width;
        for (unsigned mask = 0; mask < n_masks; ++mask) {
            const int s = env.state_of(x, y, mask);
            for (int a = 0; a < 5; ++a) {
                int nx = x + kMoveDx[a], ny = y + kMoveDy[a];
                if (!in_field(nx, ny)) { nx = x; ny = y; }
                const int nc = env.cell(nx, ny);
                unsigned nmask = mask;
                const int apple = apple_at[nc];
                if (apple >= 0 && !(mask >> apple & 1u)) {
                    nmask |= 1u << apple;
                    m.reward[m.sa(s, a)] = cfg.apple_reward;
                }
                if (bomb_at[nc]) m.danger[m.sa(s, a)] = 1.0;
                m.transition[m.sas(s, a, env.state_of(nx, ny, nmask))] = 1.0;
            }
        }
    }
    return env;
}

// ---------------------------------------------------------------------------
// Circuit.

std::vector<std::string> ring_layout(int outer_w, int outer_h, int band, int narrow_len) {
    if (band < 1 || outer_w < 2 * band + 1 || outer_h < 2 * band + 1)
        throw std::invalid_argument("ring_layout: band does not fit");
    std::vector<std::string> rows(outer_h, std::string(outer_w, '#'));
    for (int y = 0; y < outer_h; ++y)
        for (int x = 0; x < outer_w; ++x) {
            const int edge = std::min({x, y, outer_w - 1 - x, outer_h - 1 - y});
            if (edge < band) rows[y][x] = '.';
        }
    // Start line: the full band on the left edge, mid-height.
    const int sy = outer_h / 2;
    for (int x = 0; x < band; ++x) rows[sy][x] = 'S';
    // Narrow section: pinch the bottom straight to the outermost lane.
    if (narrow_len > 0) {
        const int x0 = outer_w / 2 - narrow_len / 2;
        for (int x = x0; x < x0 + narrow_len && x < outer_w - band; ++x)
            for (int b = 1; b < band; ++b)
                if (x >= band) rows[outer_h - 1 - b][x] = '#';
    }
    return rows;
}

namespace {

// Headings in rotation order: 0 E, 1 S, 2 W, 3 N.  Left steering decreases
// the index, right increases.
constexpr int kHeadDx[4] = {1, 0, -1, 0};
constexpr int kHeadDy[4] = {0, 1, 0, -1};

} // namespace

CircuitEnv grid_circuit(const CircuitConfig& cfg) {
    const auto& rows = cfg.layout;
    if (rows.empty()) throw std::invalid_argument("grid_circuit: empty layout");
    const int h = static_cast<int>(rows.size());
    const int w = static_cast<int>(rows[0].size());
    CircuitEnv env;
    env.config = cfg;

    std::vector<int> cell_index(static_cast<std::size_t>(w) * h, -1);
    std::vector<int> start_cells;
    for (int y = 0; y < h; ++y) {
        if (static_cast<int>(rows[y].size()) != w)
            throw std::invalid_argument("grid_circuit: ragged layout rows");
        for (int x = 0; x < w; ++x) {
            const char ch = rows[y][x];
            if (ch == '#') continue;
            if (ch != '.' && ch != 'S')
                throw std::invalid_argument("grid_circuit: bad layout character");
            cell_index[static_cast<std::size_t>(y) * w + x] = env.n_track_cells;
            env.track_x.push_back(x);
            env.track_y.push_back(y);
            if (ch == 'S') start_cells.push_back(env.n_track_cells);
            ++env.n_track_cells;
        }
    }
    if (start_cells.empty()) throw std::invalid_argument("grid_circuit: no start line");

    auto track_at = [&](int x, int y) -> int {
        if (x < 0 || x >= w || y < 0 || y >= h) return -1;
        return cell_index[static_cast<std::size_t>(y) * w + x];
    };
    std::vector<std::uint8_t> on_line(env.n_track_cells, 0);
    for (int c : start_cells) on_line[c] = 1;

    // Forward direction: first heading that leads every start-line cell onto
    // track outside the line.
    int forward = -1;
    for (int dir = 0; dir < 4 && forward < 0; ++dir) {
        bool ok = true;
        for (int c : start_cells) {
            const int n = track_at(env.track_x[c] + kHeadDx[dir], env.track_y[c] + kHeadDy[dir]);
            if (n < 0 || on_line[n]) { ok = false; break; }
        }
        if (ok) forward = dir;
    }
    if (forward < 0)
        throw std::invalid_argument("grid_circuit: start line has no forward direction");

    // Geodesic progress: cut every start-line edge except the forward ones,
    // then breadth-first distance from the line.  The cells just behind the
    // line come out at distance loop_length - 1, which makes the wrapped
    // per-cell progress differences telescope around the loop.
    env.progress.assign(env.n_track_cells, -1);
    std::vector<int> frontier = start_cells;
    for (int c : start_cells) env.progress[c] = 0;
    int depth = 0;
    while (!frontier.empty()) {
        ++depth;
        std::vector<int> next;
        for (int c : frontier) {
            for (int dir = 0; dir < 4; ++dir) {
                if (on_line[c] && dir != forward) continue;
                const int n = track_at(env.track_x[c] + kHeadDx[dir], env.track_y[c] + kHeadDy[dir]);
                if (n < 0 || env.progress[n] >= 0) continue;
                env.progress[n] = depth;
                next.push_back(n);
            }
        }
        frontier.swap(next);
    }
    for (int c = 0; c < env.n_track_cells; ++c)
        if (env.progress[c] < 0)
            throw std::invalid_argument("grid_circuit: track not connected around the loop");
    env.loop_length = 1 + *std::max_element(env.progress.begin(), env.progress.end());
    const int L = env.loop_length;
    auto progress_delta = [L](int from, int to) {
        int d = (to - from) % L;
        if (d < 0) d += L;
        if (d >= L / 2 + L % 2) d -= L; // wrap to (-L/2, L/2]
        return d;
    };

    Cmdp& m = env.cmdp;
    m.n_states = env.n_track_cells * 12 + 1;
    m.n_actions = 9;
    m.horizon = cfg.horizon;
    m.gamma = cfg.gamma;
    m.beta = cfg.beta;
    env.crashed_state = m.n_states - 1;
    env.start_state = env.state_of(start_cells[0], forward, 0);
    m.transition.assign(static_cast<std::size_t>(m.n_states) * m.n_actions * m.n_states, 0.0);
    m.reward.assign(static_cast<std::size_t>(m.n_states) * m.n_actions, 0.0);
    m.danger.assign(static_cast<std::size_t>(m.n_states) * m.n_actions, 0.0);
    m.initial.assign(m.n_states, 0.0);
    m.initial[env.start_state] = 1.0;

    for (int c = 0; c < env.n_track_cells; ++c) {
        for (int heading = 0; heading < 4; ++heading) {
            for (int speed = 0; speed < 3; ++speed) {
                const int s = env.state_of(c, heading, speed);
                for (int a = 0; a < 9; ++a) {
                    const int steer = a / 3 - 1;  // -1 left, 0 straight, +1 right
                    const int accel = a % 3 - 1;
                    const int nh = ((heading + steer) % 4 + 4) % 4;
                    const int ns = std::clamp(speed + accel, 0, 2);
                    int cx = env.track_x[c], cy = env.track_y[c];
                    int cur = c;
                    bool crashed = false;
                    double gain = 0.0;
                    for (int step = 0; step < ns; ++step) {
                        cx += kHeadDx[nh];
                        cy += kHeadDy[nh];
                        const int n = track_at(cx, cy);
                        if (n < 0) { crashed = true; break; }
                        gain += progress_delta(env.progress[cur], env.progress[n]);
                        cur = n;
                    }
                    if (crashed) {
                        m.transition[m.sas(s, a, env.crashed_state)] = 1.0;
                        m.reward[m.sa(s, a)] = cfg.crash_penalty;
                        m.danger[m.sa(s, a)] = 1.0;
                    } else {
                        m.transition[m.sas(s, a, env.state_of(cur, nh, ns))] = 1.0;
                        m.reward[m.sa(s, a)] = gain + (ns == 0 ? cfg.stop_penalty : 0.0);
                    }
                }
            }
        }
    }
    for (int a = 0; a < 9; ++a)
        m.transition[m.sas(env.crashed_state, a, env.crashed_state)] = 1.0;
    return env;
}

// ---------------------------------------------------------------------------
// Deep trap corridor.

Cmdp deep_trap_cmdp(int lead, int horizon) {
    if (lead < 1) throw std::invalid_argument("deep_trap_cmdp: lead must be positive");
    if (horizon <= 0) horizon = lead + 3;
    Cmdp m;
    m.n_states = lead + 2; // gate, corridor cells 1..lead, trap
    m.n_actions = 2;
    m.horizon = horizon;
    m.gamma = 1.0;
    m.beta = 0.9;
    const int trap = m.n_states - 1;
    m.transition.assign(static_cast<std::size_t>(m.n_states) * m.n_actions * m.n_states, 0.0);
    m.reward.assign(static_cast<std::size_t>(m.n_states) * m.n_actions, 0.0);
    m.danger.assign(static_cast<std::size_t>(m.n_states) * m.n_actions, 0.0);
    m.initial.assign(m.n_states, 0.0);
    m.initial[0] = 1.0;

    m.transition[m.sas(0, 0, 0)] = 1.0; // wait at the gate
    m.transition[m.sas(0, 1, 1)] = 1.0; // commit
    m.reward[m.sa(0, 1)] = 1.0;
    for (int s = 1; s < trap; ++s) {
        for (int a = 0; a < 2; ++a) {
            m.transition[m.sas(s, a, s + 1)] = 1.0;
            m.reward[m.sa(s, a)] = s + 1 == trap ? 5.0 : 1.0;
            if (s + 1 == trap) m.danger[m.sa(s, a)] = 1.0;
        }
    }
    for (int a = 0; a < 2; ++a) m.transition[m.sas(trap, a, trap)] = 1.0;
    return m;
}

} // namespace rpmdp
