#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "sspmc/errors.hpp"
#include "sspmc/mdp.hpp"

namespace sspmc {

using json = nlohmann::json;

/// JSON layout:
/// {
///   "states": ["s0", ...],
///   "actions": ["a0", ...],
///   "discount": 1.0,
///   "transitions": [S][A][S+1],   // last entry of each row = terminal mass
///   "rewards": [S][A]
/// }
inline json mdp_to_json(const MdpSpec& spec) {
    return json{{"states", spec.state_names},
                {"actions", spec.action_names},
                {"discount", spec.discount},
                {"transitions", spec.transition},
                {"rewards", spec.reward}};
}

inline MdpSpec mdp_from_json(const json& j) {
    MdpSpec spec;
    try {
        if (!j.is_object()) throw SpecError("MDP document must be a JSON object");
        for (const char* field : {"states", "actions", "transitions", "rewards"}) {
            if (!j.contains(field))
                throw SpecError(std::string("MDP document missing field '") + field + "'");
        }
        j.at("states").get_to(spec.state_names);
        j.at("actions").get_to(spec.action_names);
        j.at("transitions").get_to(spec.transition);
        j.at("rewards").get_to(spec.reward);
        spec.discount = j.value("discount", 1.0);
    } catch (const json::exception& e) {
        throw SpecError(std::string("malformed MDP document: ") + e.what());
    }
    return spec;
}

/// Parse and fully validate. Throws SpecError on parse failure, malformed
/// dimensions, or any failed validation flag.
inline MdpSpec load_mdp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SpecError("cannot open MDP file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw SpecError("cannot parse '" + path + "': " + e.what());
    }
    MdpSpec spec = mdp_from_json(j);
    ValidationReport report = validate(spec);
    if (!report.stochastic_ok || !report.reward_range_ok || !report.all_policies_proper) {
        std::ostringstream msg;
        msg << "MDP file '" << path << "' failed validation";
        for (const auto& m : report.messages) msg << "; " << m;
        throw SpecError(msg.str());
    }
    return spec;
}

inline void save_mdp(const MdpSpec& spec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw SpecError("cannot write MDP file '" + path + "'");
    out << mdp_to_json(spec).dump(2) << '\n';
}

}  // namespace sspmc
