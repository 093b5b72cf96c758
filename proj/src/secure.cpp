#include "rpmdp/secure.hpp"

#include "rpmdp/rng.hpp"
#include "rpmdp/sim.hpp"

#include <cmath>
#include <sstream>

namespace rpmdp {

namespace {
constexpr double kTol = 1e-12;
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size())
        throw std::invalid_argument("tv_distance: supports differ in size");
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) total += std::abs(p[i] - q[i]);
    return 0.5 * total;
}

double secure_threshold(double c, double beta, int T) {
    if (c < 0.0) throw std::invalid_argument("secure_threshold: budget must be nonnegative");
    if (T < 1) throw std::invalid_argument("secure_threshold: horizon must be at least 1");
    if (beta < 0.0 || beta > 1.0)
        throw std::invalid_argument("secure_threshold: beta must lie in [0, 1]");
    double denom = 1.0;
    double w = 1.0;
    for (int t = 1; t < T; ++t) {
        w *= beta;
        denom += w;
    }
    return c / denom;
}

double accident_threshold(double c, int T, double z) {
    if (c < 0.0) throw std::invalid_argument("accident_threshold: budget must be nonnegative");
    if (T < 1) throw std::invalid_argument("accident_threshold: horizon must be at least 1");
    if (z < 0.0 || z > 1.0)
        throw std::invalid_argument("accident_threshold: deviation cap must lie in [0, 1]");
    return c / (1.0 + (T - 1) * z);
}

SecureSet build_secure_set(const ThreatTable& threat, std::span<const double> x) {
    if (x.size() != static_cast<std::size_t>(threat.horizon))
        throw std::invalid_argument("build_secure_set: need one threshold per step");

    SecureSet set;
    set.horizon = threat.horizon;
    set.n_states = threat.n_states;
    set.n_actions = threat.n_actions;
    set.thresholds.assign(x.begin(), x.end());
    set.action_ok.assign(static_cast<std::size_t>(set.n_states) * set.n_actions, 1);
    set.state_ok.assign(set.n_states, 0);
    set.fallback.assign(static_cast<std::size_t>(set.horizon) * set.n_states, 0);

    for (int s = 0; s < set.n_states; ++s)
        for (int a = 0; a < set.n_actions; ++a)
            for (int t = 0; t < set.horizon; ++t)
                if (threat.at(t, s, a) > x[t]) {
                    set.action_ok[static_cast<std::size_t>(s) * set.n_actions + a] = 0;
                    break;
                }

    for (int s = 0; s < set.n_states; ++s)
        for (int a = 0; a < set.n_actions; ++a)
            if (set.action_secure(s, a)) {
                set.state_ok[s] = 1;
                break;
            }

    for (int t = 0; t < set.horizon; ++t)
        for (int s = 0; s < set.n_states; ++s) {
            int best = 0;
            double best_v = threat.at(t, s, 0);
            for (int a = 1; a < set.n_actions; ++a)
                if (threat.at(t, s, a) < best_v) {
                    best_v = threat.at(t, s, a);
                    best = a;
                }
            set.fallback[static_cast<std::size_t>(t) * set.n_states + s] = best;
        }
    return set;
}

MembershipReport is_member(const Policy& pi, const SecureSet& secure,
                           const ThreatTable& threat) {
    if (pi.horizon != secure.horizon || pi.n_states != secure.n_states ||
        pi.n_actions != secure.n_actions)
        throw std::invalid_argument("is_member: policy shape does not match secure set");
    if (threat.horizon != secure.horizon || threat.n_states != secure.n_states ||
        threat.n_actions != secure.n_actions)
        throw std::invalid_argument("is_member: threat table shape does not match secure set");

    MembershipReport rep;
    for (int t = 0; t < pi.horizon; ++t)
        for (int s = 0; s < pi.n_states; ++s) {
            if (secure.is_secure(s)) {
                for (int a = 0; a < pi.n_actions; ++a)
                    if (pi.prob(t, s, a) > 0.0 && !secure.action_secure(s, a)) {
                        rep.member = false;
                        std::ostringstream os;
                        os << "positive mass on an action outside the pool (threat "
                           << threat.at(t, s, a) << ")";
                        rep.violations.push_back({t, s, a, os.str()});
                    }
            } else {
                const int fb = secure.fallback_at(t, s);
                for (int a = 0; a < pi.n_actions; ++a) {
                    const double p = pi.prob(t, s, a);
                    const double want = (a == fb) ? 1.0 : 0.0;
                    if (std::abs(p - want) > kTol) {
                        rep.member = false;
                        rep.violations.push_back(
                            {t, s, a, "state outside the pool must play the fallback action"});
                        break;
                    }
                }
            }
        }
    return rep;
}

BoundCertificate certify_bound(const Cmdp& m, const Policy& eta, const Policy& pi,
                               const SecureSet& secure, const ThreatTable& threat_eta,
                               int s0) {
    require_compatible(m, eta, "certify_bound");
    require_compatible(m, pi, "certify_bound");
    if (!threat_eta.compatible_with(m))
        throw std::invalid_argument("certify_bound: threat table shape mismatch");
    if (secure.horizon != m.horizon || secure.n_states != m.n_states ||
        secure.n_actions != m.n_actions)
        throw std::invalid_argument("certify_bound: secure set shape mismatch");
    if (s0 < 0 || s0 >= m.n_states)
        throw std::invalid_argument("certify_bound: s0 out of range");

    std::vector<std::string> broken;

    // The kept-action sets must be exactly what the thresholds carve out of
    // threat_eta; a mismatched pair would certify nothing.
    for (int s = 0; s < m.n_states && broken.size() < 8; ++s)
        for (int a = 0; a < m.n_actions; ++a) {
            bool within = true;
            for (int t = 0; t < m.horizon; ++t)
                if (threat_eta.at(t, s, a) > secure.thresholds[t]) {
                    within = false;
                    break;
                }
            if (within != (secure.action_secure(s, a) != 0)) {
                std::ostringstream os;
                os << "secure set disagrees with threat table at (s=" << s << ", a=" << a
                   << ")";
                broken.push_back(os.str());
                break;
            }
        }

    // Pool condition: support inside the kept set on kept states; on other
    // states pi may not raise the expected threat above eta's, at any step.
    for (int t = 0; t < m.horizon; ++t)
        for (int s = 0; s < m.n_states; ++s) {
            if (secure.is_secure(s)) {
                for (int a = 0; a < m.n_actions; ++a)
                    if (pi.prob(t, s, a) > 0.0 && !secure.action_secure(s, a)) {
                        std::ostringstream os;
                        os << "pi puts mass on an action outside the pool at (t=" << t
                           << ", s=" << s << ", a=" << a << ")";
                        broken.push_back(os.str());
                    }
            } else {
                double e_pi = 0.0, e_eta = 0.0;
                for (int a = 0; a < m.n_actions; ++a) {
                    e_pi += pi.prob(t, s, a) * threat_eta.at(t, s, a);
                    e_eta += eta.prob(t, s, a) * threat_eta.at(t, s, a);
                }
                if (e_pi > e_eta + kTol) {
                    std::ostringstream os;
                    os << "outside the pool pi's expected threat exceeds eta's at (t=" << t
                       << ", s=" << s << ")";
                    broken.push_back(os.str());
                }
            }
            if (broken.size() >= 32) break;
        }

    // Start condition: everything pi can do at (0, s0) must sit within x_0.
    for (int a = 0; a < m.n_actions; ++a)
        if (pi.prob(0, s0, a) > 0.0 &&
            threat_eta.at(0, s0, a) > secure.thresholds[0] + kTol) {
            std::ostringstream os;
            os << "threat of initial action " << a << " exceeds x_0";
            broken.push_back(os.str());
        }

    if (!broken.empty()) {
        std::string msg = "certificate preconditions violated:";
        for (const auto& b : broken) {
            msg += "\n  ";
            msg += b;
        }
        throw PreconditionViolation(msg);
    }

    BoundCertificate cert;
    cert.z_terms.assign(m.horizon, 0.0);

    const ThreatTable threat_pi = (threat_eta.mode == ThreatMode::discounted)
                                      ? compute_threat(m, pi)
                                      : compute_accident_threat(m, pi);
    cert.lhs = threat_pi.state_value(0, s0);

    // Pre-tabulate tv(pi_t, eta_t) on kept states.
    std::vector<double> tv(static_cast<std::size_t>(m.horizon) * m.n_states, 0.0);
    for (int t = 0; t < m.horizon; ++t)
        for (int s = 0; s < m.n_states; ++s)
            if (secure.is_secure(s))
                tv[static_cast<std::size_t>(t) * m.n_states + s] =
                    tv_distance(pi.row(t, s), eta.row(t, s));

    const std::vector<double> occ = occupancy(m, pi, s0);
    const std::size_t n_sa = static_cast<std::size_t>(m.n_states) * m.n_actions;

    cert.rhs = secure.thresholds[0];
    double w = 1.0;
    for (int t = 1; t < m.horizon; ++t) {
        if (threat_eta.mode == ThreatMode::discounted) w *= m.beta;
        const double* occ_prev = occ.data() + static_cast<std::size_t>(t - 1) * n_sa;
        const double* tv_t = tv.data() + static_cast<std::size_t>(t) * m.n_states;
        double z = 0.0;
        for (int s = 0; s < m.n_states; ++s)
            for (int a = 0; a < m.n_actions; ++a) {
                const double mass = occ_prev[m.sa(s, a)];
                if (mass == 0.0) continue;
                const auto row = m.row(s, a);
                double inner = 0.0;
                for (int s2 = 0; s2 < m.n_states; ++s2)
                    if (secure.is_secure(s2)) inner += row[s2] * tv_t[s2];
                z += mass * inner;
            }
        cert.z_terms[t] = z;
        cert.rhs += w * secure.thresholds[t] * z;
    }

    cert.holds = cert.lhs <= cert.rhs + kTol;
    return cert;
}

double compose_threats(std::span<const double> subsystem_values) {
    double total = 0.0;
    for (double v : subsystem_values) {
        if (v < 0.0) throw std::invalid_argument("compose_threats: negative threat value");
        total += v;
    }
    return std::min(1.0, total);
}

double compose_threats(std::span<const ThreatTable* const> tables,
                       std::span<const int> sub_states, int t, int a) {
    if (tables.size() != sub_states.size())
        throw std::invalid_argument("compose_threats: one state per table required");
    double total = 0.0;
    for (std::size_t i = 0; i < tables.size(); ++i) {
        const ThreatTable& tab = *tables[i];
        if (tab.mode != ThreatMode::accident)
            throw std::invalid_argument(
                "compose_threats: composition is only valid for accident-mode tables");
        total += tab.at(t, sub_states[i], a);
    }
    return std::min(1.0, total);
}

Policy sample_pool_policy(const SecureSet& secure, std::uint64_t seed) {
    Rng rng = Rng::derive(seed, 0x706f6f6c);
    Policy pi = Policy::uniform(secure.horizon, secure.n_states, secure.n_actions);
    for (int t = 0; t < secure.horizon; ++t)
        for (int s = 0; s < secure.n_states; ++s) {
            auto row = pi.row_mut(t, s);
            std::fill(row.begin(), row.end(), 0.0);
            if (secure.is_secure(s)) {
                double total = 0.0;
                for (int a = 0; a < secure.n_actions; ++a)
                    if (secure.action_secure(s, a)) {
                        row[a] = rng.next_gamma(1.0);
                        total += row[a];
                    }
                for (int a = 0; a < secure.n_actions; ++a) row[a] /= total;
            } else {
                row[secure.fallback_at(t, s)] = 1.0;
            }
        }
    return pi;
}

} // namespace rpmdp
