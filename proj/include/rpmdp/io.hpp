#pragma once

#include "rpmdp/cmdp.hpp"
#include "rpmdp/secure.hpp"
#include "rpmdp/threat.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace rpmdp::io {

// JSON layouts are plain nested arrays: transition[s][a][s2], reward[s][a],
// danger[s][a], initial[s], policy rows[t][s][a].  Doubles round-trip
// exactly in both JSON and CSV.

nlohmann::json cmdp_to_json(const Cmdp& m);
Cmdp cmdp_from_json(const nlohmann::json& j);

nlohmann::json policy_to_json(const Policy& pi);
Policy policy_from_json(const nlohmann::json& j);

nlohmann::json certificate_to_json(const BoundCertificate& cert);

std::string threat_to_csv(const ThreatTable& table);   // t,s,a,value
ThreatTable threat_from_csv(const std::string& text, ThreatMode mode);

std::string trajectory_to_csv(const Trajectory& tr);   // t,s,a,r,d

// s,kept_mask,is_secure,fallback_by_t with the fallback list ';'-joined.
std::string secure_to_csv(const SecureSet& secure);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& content);
std::vector<std::string> load_layout(const std::string& path);

} // namespace rpmdp::io
