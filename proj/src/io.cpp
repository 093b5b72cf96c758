#include "rpmdp/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rpmdp::io {

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

nlohmann::json cmdp_to_json(const Cmdp& m) {
    nlohmann::json j;
    j["n_states"] = m.n_states;
    j["n_actions"] = m.n_actions;
    j["horizon"] = m.horizon;
    j["gamma"] = m.gamma;
    j["beta"] = m.beta;
    auto transition = nlohmann::json::array();
    auto reward = nlohmann::json::array();
    auto danger = nlohmann::json::array();
    for (int s = 0; s < m.n_states; ++s) {
        auto ts = nlohmann::json::array();
        auto rs = nlohmann::json::array();
        auto ds = nlohmann::json::array();
        for (int a = 0; a < m.n_actions; ++a) {
            auto row = m.row(s, a);
            ts.push_back(std::vector<double>(row.begin(), row.end()));
            rs.push_back(m.reward[m.sa(s, a)]);
            ds.push_back(m.danger[m.sa(s, a)]);
        }
        transition.push_back(std::move(ts));
        reward.push_back(std::move(rs));
        danger.push_back(std::move(ds));
    }
    j["transition"] = std::move(transition);
    j["reward"] = std::move(reward);
    j["danger"] = std::move(danger);
    j["initial"] = m.initial;
    return j;
}

Cmdp cmdp_from_json(const nlohmann::json& j) {
    Cmdp m;
    m.n_states = j.at("n_states").get<int>();
    m.n_actions = j.at("n_actions").get<int>();
    m.horizon = j.at("horizon").get<int>();
    m.gamma = j.at("gamma").get<double>();
    m.beta = j.at("beta").get<double>();
    if (m.n_states < 1 || m.n_actions < 1)
        throw std::invalid_argument("cmdp json: sizes must be positive");
    m.transition.assign(static_cast<std::size_t>(m.n_states) * m.n_actions * m.n_states, 0.0);
    m.reward.assign(static_cast<std::size_t>(m.n_states) * m.n_actions, 0.0);
    m.danger.assign(static_cast<std::size_t>(m.n_states) * m.n_actions, 0.0);
    const auto& transition = j.at("transition");
    const auto& reward = j.at("reward");
    const auto& danger = j.at("danger");
    if (static_cast<int>(transition.size()) != m.n_states)
        throw std::invalid_argument("cmdp json: transition shape mismatch");
    for (int s = 0; s < m.n_states; ++s) {
        if (static_cast<int>(transition[s].size()) != m.n_actions ||
            static_cast<int>(reward[s].size()) != m.n_actions ||
            static_cast<int>(danger[s].size()) != m.n_actions)
            throw std::invalid_argument("cmdp json: action dimension mismatch");
        for (int a = 0; a < m.n_actions; ++a) {
            const auto& row = transition[s][a];
            if (static_cast<int>(row.size()) != m.n_states)
                throw std::invalid_argument("cmdp json: successor dimension mismatch");
            for (int s2 = 0; s2 < m.n_states; ++s2)
                m.transition[m.sas(s, a, s2)] = row[s2].get<double>();
            m.reward[m.sa(s, a)] = reward[s][a].get<double>();
            m.danger[m.sa(s, a)] = danger[s][a].get<double>();
        }
    }
    m.initial = j.at("initial").get<std::vector<double>>();
    if (static_cast<int>(m.initial.size()) != m.n_states)
        throw std::invalid_argument("cmdp json: initial dimension mismatch");
    return m;
}

nlohmann::json policy_to_json(const Policy& pi) {
    nlohmann::json j;
    j["horizon"] = pi.horizon;
    j["n_states"] = pi.n_states;
    j["n_actions"] = pi.n_actions;
    auto rows = nlohmann::json::array();
    for (int t = 0; t < pi.horizon; ++t) {
        auto slice = nlohmann::json::array();
        for (int s = 0; s < pi.n_states; ++s) {
            auto row = pi.row(t, s);
            slice.push_back(std::vector<double>(row.begin(), row.end()));
        }
        rows.push_back(std::move(slice));
    }
    j["rows"] = std::move(rows);
    return j;
}

Policy policy_from_json(const nlohmann::json& j) {
    const int horizon = j.at("horizon").get<int>();
    const int n_states = j.at("n_states").get<int>();
    const int n_actions = j.at("n_actions").get<int>();
    Policy pi = Policy::uniform(horizon, n_states, n_actions);
    const auto& rows = j.at("rows");
    if (static_cast<int>(rows.size()) != horizon)
        throw std::invalid_argument("policy json: horizon mismatch");
    for (int t = 0; t < horizon; ++t) {
        if (static_cast<int>(rows[t].size()) != n_states)
            throw std::invalid_argument("policy json: state dimension mismatch");
        for (int s = 0; s < n_states; ++s) {
            const auto& row = rows[t][s];
            if (static_cast<int>(row.size()) != n_actions)
                throw std::invalid_argument("policy json: action dimension mismatch");
            auto dst = pi.row_mut(t, s);
            for (int a = 0; a < n_actions; ++a) dst[a] = row[a].get<double>();
        }
    }
    return pi;
}

nlohmann::json certificate_to_json(const BoundCertificate& cert) {
    nlohmann::json j;
    j["lhs"] = cert.lhs;
    j["rhs"] = cert.rhs;
    j["z_terms"] = cert.z_terms;
    j["holds"] = cert.holds;
    return j;
}

std::string threat_to_csv(const ThreatTable& table) {
    std::string out = "t,s,a,value\n";
    for (int t = 0; t < table.horizon; ++t)
        for (int s = 0; s < table.n_states; ++s)
            for (int a = 0; a < table.n_actions; ++a) {
                out += std::to_string(t);
                out += ',';
                out += std::to_string(s);
                out += ',';
                out += std::to_string(a);
                out += ',';
                out += fmt_double(table.at(t, s, a));
                out += '\n';
            }
    return out;
}

ThreatTable threat_from_csv(const std::string& text, ThreatMode mode) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "t,s,a,value")
        throw std::invalid_argument("threat csv: bad header");
    struct Row {
        int t, s, a;
        double value;
    };
    std::vector<Row> rows;
    int max_t = -1, max_s = -1, max_a = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Row r;
        if (std::sscanf(line.c_str(), "%d,%d,%d,%lf", &r.t, &r.s, &r.a, &r.value) != 4)
            throw std::invalid_argument("threat csv: bad row: " + line);
        max_t = std::max(max_t, r.t);
        max_s = std::max(max_s, r.s);
        max_a = std::max(max_a, r.a);
        rows.push_back(r);
    }
    if (rows.empty()) throw std::invalid_argument("threat csv: no rows");
    ThreatTable table;
    table.mode = mode;
    table.horizon = max_t + 1;
    table.n_states = max_s + 1;
    table.n_actions = max_a + 1;
    table.values.assign(
        static_cast<std::size_t>(table.horizon) * table.n_states * table.n_actions, 0.0);
    table.state_values.assign(static_cast<std::size_t>(table.horizon) * table.n_states, 0.0);
    for (const auto& r : rows) table.values[table.tsa(r.t, r.s, r.a)] = r.value;
    return table;
}

std::string trajectory_to_csv(const Trajectory& tr) {
    std::string out = "t,s,a,r,d\n";
    for (std::size_t k = 0; k < tr.actions.size(); ++k) {
        out += std::to_string(k);
        out += ',';
        out += std::to_string(tr.states[k]);
        out += ',';
        out += std::to_string(tr.actions[k]);
        out += ',';
        out += fmt_double(tr.rewards[k]);
        out += ',';
        out += fmt_double(tr.dangers[k]);
        out += '\n';
    }
    return out;
}

std::string secure_to_csv(const SecureSet& secure) {
    std::string out = "s,kept_mask,is_secure,fallback_by_t\n";
    for (int s = 0; s < secure.n_states; ++s) {
        unsigned long long mask = 0;
        for (int a = 0; a < secure.n_actions && a < 64; ++a)
            if (secure.action_secure(s, a)) mask |= 1ull << a;
        out += std::to_string(s);
        out += ',';
        out += std::to_string(mask);
        out += ',';
        out += secure.is_secure(s) ? '1' : '0';
        out += ',';
        for (int t = 0; t < secure.horizon; ++t) {
            if (t > 0) out += ';';
            out += std::to_string(secure.fallback_at(t, s));
        }
        out += '\n';
    }
    return out;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<std::string> load_layout(const std::string& path) {
    const std::string text = read_text(path);
    std::vector<std::string> rows;
    std::string line;
    for (char ch : text) {
        if (ch == '\n') {
            if (!line.empty()) rows.push_back(line);
            line.clear();
        } else if (ch != '\r') {
            line += ch;
        }
    }
    if (!line.empty()) rows.push_back(line);
    return rows;
}

} // namespace rpmdp::io
