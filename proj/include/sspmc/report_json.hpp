#pragma once

#include <nlohmann/json.hpp>

#include "sspmc/mces.hpp"
#include "sspmc/mdp.hpp"
#include "sspmc/mdp_io.hpp"
#include "sspmc/schedule.hpp"
#include "sspmc/verify.hpp"

namespace sspmc {

inline json qtable_to_json(const QTable& q) {
    json rows = json::array();
    for (std::size_t s = 0; s < q.states; ++s) {
        json row = json::array();
        for (std::size_t a = 0; a < q.actions; ++a) row.push_back(q(s, a));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void to_json(json& j, const ValidationReport& r) {
    j = json{{"stochastic_ok", r.stochastic_ok},
             {"reward_range_ok", r.reward_range_ok},
             {"all_policies_proper", r.all_policies_proper},
             {"survival_profile", r.survival_profile},
             {"messages", r.messages}};
}

inline void to_json(json& j, const ScheduleReport& r) {
    j = json{{"eta", r.eta},
             {"delta_confidence", r.delta_confidence},
             {"w", r.w},
             {"w_inf", r.w_inf},
             {"rho", r.rho},
             {"k_eta", r.k_eta},
             {"k_star", r.k_star},
             {"delta_star", r.delta_star},
             {"L_eta", r.L_eta},
             {"L_star", r.L_star},
             {"L0", r.L0},
             {"zeta", r.zeta},
             {"N_delta", r.N_delta},
             {"T0", r.T0}};
    if (r.delta_min) j["delta_min"] = *r.delta_min;
}

inline void to_json(json& j, const CheckResult& r) {
    j = json{{"name", r.name},       {"kind", r.kind},   {"passed", r.passed},
             {"observed", r.observed}, {"bound", r.bound}, {"notes", r.notes}};
    if (r.kind == "statistical") {
        j["trials"] = r.trials;
        j["seed"] = r.seed;
    }
}

inline void to_json(json& j, const MCESIteration& it) {
    j = json{{"policy", it.policy},
             {"episodes", it.episodes},
             {"max_length", it.max_length}};
    if (!it.q.value.empty()) j["q"] = qtable_to_json(it.q);
}

inline void to_json(json& j, const MCESRunReport& r) {
    j = json{{"final_policy", r.final_policy},
             {"per_iteration", r.per_iteration},
             {"total_episodes", r.total_episodes},
             {"total_steps", r.total_steps}};
}

// The thread count is deliberately not serialized: results are independent of
// it by the sampler contract, and reports must stay byte-identical across
// machines with different core counts.
inline json mces_config_to_json(const MCESConfig& c) {
    json j{{"L", c.L},
           {"N", c.N},
           {"first_visit", c.first_visit},
           {"seed", c.seed},
           {"keep_history", c.keep_history},
           {"episode_cap", c.episode_cap},
           {"step_budget", c.step_budget},
           {"initial_policy", c.initial_policy}};
    if (!c.initial_q.value.empty()) j["initial_q"] = qtable_to_json(c.initial_q);
    return j;
}

}  // namespace sspmc
