#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "sspmc/errors.hpp"
#include "sspmc/exact.hpp"
#include "sspmc/mdp.hpp"
#include "sspmc/sampler.hpp"
#include "sspmc/schedule.hpp"

namespace sspmc {

/// Default ceiling on the expected number of simulated steps per run.
inline constexpr std::uint64_t kDefaultStepBudget = 1000000000;

struct MCESConfig {
    std::uint64_t L = 1;  // improvement iterations
    std::uint64_t N = 1;  // episodes per (state, action) pair per iteration
    bool first_visit = false;
    std::uint64_t seed = 0;
    Policy initial_policy;  // empty -> action 0 everywhere
    // Initial action values, kept for completeness: the synchronous sweep
    // re-estimates every pair in iteration 0, so these never influence the
    // run. They are echoed into provenance output untouched.
    QTable initial_q;
    bool keep_history = false;  // retain per-iteration q snapshots
    unsigned threads = 1;
    std::uint64_t episode_cap = kDefaultEpisodeCap;
    std::uint64_t step_budget = kDefaultStepBudget;  // 0 disables the guard
    std::function<void(const Trajectory&)> sink;     // optional episode dump
};

struct MCESIteration {
    Policy policy;              // policy sampled under during this iteration
    QTable q;                   // estimate snapshot (empty unless keep_history)
    std::uint64_t episodes = 0;
    std::uint64_t max_length = 0;
};

struct MCESRunReport {
    Policy final_policy;
    std::vector<MCESIteration> per_iteration;
    std::uint64_t total_episodes = 0;
    std::uint64_t total_steps = 0;
};

struct DerivedConfig {
    MCESConfig config;
    ScheduleReport schedule;  // full provenance for the chosen (L, N)
};

/// Configuration mandated by the schedules: L* improvement iterations and
/// N(delta) episodes per pair per iteration.
inline DerivedConfig derive_config(const MdpSpec& spec, double delta_confidence,
                                   const ScheduleOverrides& overrides = {}) {
    DerivedConfig out;
    out.schedule = derive_schedule(spec, kEtaStar, delta_confidence, overrides);
    out.config.L = out.schedule.L_star;
    out.config.N = out.schedule.N_delta;
    return out;
}

/// Upper bound on the expected steps of one full exploring-starts sweep with
/// one episode per pair: sum over (s,a) of 1 + sum_{s'} p(s'|s,a) w(s').
/// Uses w, so it holds for every policy the run can visit.
inline double estimated_sweep_steps(const MdpSpec& spec, const VTable& w) {
    double total = 0.0;
    for (std::size_t s = 0; s < spec.num_states(); ++s) {
        for (std::size_t a = 0; a < spec.num_actions(); ++a) {
            const auto& row = spec.transition[s][a];
            double acc = 1.0;
            for (std::size_t j = 0; j < spec.num_states(); ++j) acc += row[j] * w[j];
            total += acc;
        }
    }
    return total;
}

namespace detail {

inline void guard_step_budget(const MdpSpec& spec, const MCESConfig& config) {
    if (config.step_budget == 0) return;
    const LengthProfile lengths = max_expected_lengths(spec);
    const double estimate = static_cast<double>(config.L) * static_cast<double>(config.N) *
                            estimated_sweep_steps(spec, lengths.w);
    if (estimate > static_cast<double>(config.step_budget))
        throw BudgetError("estimated cost " + std::to_string(estimate) +
                          " expected steps exceeds the step budget of " +
                          std::to_string(config.step_budget) +
                          "; use a smaller instance, a larger delta, or raise --step-budget");
}

}  // namespace detail

/// Monte Carlo Exploring Starts with synchronous evaluation: L iterations of
/// (estimate q for the current policy from N fresh episodes per start pair,
/// then switch to the greedy policy with lowest-index ties). Episodes are
/// never reused across iterations.
inline MCESRunReport run_mces(const MdpSpec& spec, const MCESConfig& config) {
    require_undiscounted(spec);
    if (config.L < 1 || config.N < 1) throw SpecError("MCES needs L >= 1 and N >= 1");
    Policy pi = config.initial_policy.empty() ? Policy(spec.num_states(), 0)
                                              : config.initial_policy;
    require_policy(spec, pi);
    detail::guard_step_budget(spec, config);

    MCESRunReport report;
    report.per_iteration.reserve(static_cast<std::size_t>(config.L));
    for (std::uint64_t iter = 0; iter < config.L; ++iter) {
        MonteCarloOptions opt;
        opt.first_visit = config.first_visit;
        opt.threads = config.threads;
        opt.episode_cap = config.episode_cap;
        opt.iteration = iter;
        opt.sink = config.sink;
        MonteCarloResult mc = monte_carlo_q(spec, pi, config.N, config.seed, opt);

        MCESIteration record;
        record.policy = pi;
        if (config.keep_history) record.q = mc.q;
        record.episodes = mc.episodes;
        record.max_length = mc.max_length;
        report.per_iteration.push_back(std::move(record));
        report.total_episodes += mc.episodes;
        report.total_steps += mc.steps;

        pi = greedy_policy(mc.q, TieRule::lowest_index);
    }
    report.final_policy = std::move(pi);
    return report;
}

/// The same improvement loop with the estimate replaced by the exact q of the
/// current policy. Isolates improvement dynamics from statistical error; q
/// snapshots are always retained (they are small and exact).
inline MCESRunReport run_mces_exact_eval(const MdpSpec& spec, std::uint64_t L, Policy pi0 = {}) {
    require_undiscounted(spec);
    if (L < 1) throw SpecError("MCES needs L >= 1");
    Policy pi = pi0.empty() ? Policy(spec.num_states(), 0) : std::move(pi0);
    require_policy(spec, pi);

    MCESRunReport report;
    report.per_iteration.reserve(static_cast<std::size_t>(L));
    for (std::uint64_t iter = 0; iter < L; ++iter) {
        const PolicyEvaluation eval = evaluate_policy(spec, pi);
        MCESIteration record;
        record.policy = pi;
        record.q = eval.q;
        report.per_iteration.push_back(std::move(record));
        pi = greedy_policy(eval.q, TieRule::lowest_index);
    }
    report.final_policy = std::move(pi);
    return report;
}

}  // namespace sspmc
