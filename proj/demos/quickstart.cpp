// Minimal end-to-end tour: build a small instance, validate it, inspect its
// structural constants, run the exploring-starts loop with schedule-derived
// parameters and compare the learned policy with the exact optimum.

#include <cstdio>

#include "sspmc/sspmc.hpp"

int main() {
    const sspmc::MdpSpec spec = sspmc::fixture_chain2();

    const sspmc::ValidationReport validation = sspmc::validate(spec);
    std::printf("all policies proper: %s\n",
                validation.all_policies_proper ? "yes" : "no");

    const sspmc::ScheduleReport schedule = sspmc::derive_schedule(spec, sspmc::kEtaStar, 0.2);
    std::printf("w_inf=%g rho=%g K=%zu delta*=%g L*=%llu N=%llu\n", schedule.w_inf,
                schedule.rho, schedule.k_star, schedule.delta_star,
                static_cast<unsigned long long>(schedule.L_star),
                static_cast<unsigned long long>(schedule.N_delta));

    // Exact solution for reference.
    const auto exact =
        sspmc::exact_policy_iteration(spec, sspmc::Policy(spec.num_states(), 0));
    std::printf("exact optimum: v=(%g, %g), %zu improvement steps\n",
                exact.final_value()[0], exact.final_value()[1], exact.improvement_steps());

    // A deliberately small run: enough to find the optimum on this instance.
    sspmc::MCESConfig config;
    config.L = 5;
    config.N = 2000;
    config.seed = 7;
    const sspmc::MCESRunReport run = sspmc::run_mces(spec, config);
    std::printf("learned policy: (%d, %d) after %llu episodes\n", run.final_policy[0],
                run.final_policy[1], static_cast<unsigned long long>(run.total_episodes));

    const bool matches = run.final_policy == exact.final_policy();
    std::printf("matches the exact optimum: %s\n", matches ? "yes" : "no");
    return matches ? 0 : 1;
}
