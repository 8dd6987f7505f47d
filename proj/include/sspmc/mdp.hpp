#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "sspmc/errors.hpp"

namespace sspmc {

/// Row-sum tolerance for transition distributions.
inline constexpr double kRowSumTolerance = 1e-9;

/// Absolute tolerance for declaring action values tied.
inline constexpr double kTieTolerance = 1e-12;

/// Tabular episodic MDP. The terminal state is implicit: every transition row
/// has num_states()+1 entries and the last one is the terminal mass. Rewards
/// are deterministic per (state, action) and live in [0, 1].
struct MdpSpec {
    std::vector<std::string> state_names;   // non-terminal states only
    std::vector<std::string> action_names;
    // transition[s][a][j]: probability of moving to state j; j == num_states()
    // is the terminal state.
    std::vector<std::vector<std::vector<double>>> transition;
    std::vector<std::vector<double>> reward;  // reward[s][a]
    double discount = 1.0;

    std::size_t num_states() const { return state_names.size(); }
    std::size_t num_actions() const { return action_names.size(); }
    std::size_t terminal_index() const { return state_names.size(); }

    bool operator==(const MdpSpec&) const = default;
};

/// Deterministic stationary policy: one action index per non-terminal state.
using Policy = std::vector<int>;

/// Value estimate per non-terminal state.
using VTable = std::vector<double>;

/// Action-value table over (state, action) pairs, row-major by state.
struct QTable {
    std::size_t states = 0;
    std::size_t actions = 0;
    std::vector<double> value;

    QTable() = default;
    QTable(std::size_t states, std::size_t actions, double fill = 0.0)
        : states(states), actions(actions), value(states * actions, fill) {}

    double operator()(std::size_t s, std::size_t a) const { return value[s * actions + a]; }
    double& operator()(std::size_t s, std::size_t a) { return value[s * actions + a]; }

    bool operator==(const QTable&) const = default;
};

struct ValidationReport {
    bool stochastic_ok = false;
    bool reward_range_ok = false;
    bool all_policies_proper = false;
    // ||u_k||_inf of the max-survival DP for k = 0..S; empty when the instance
    // is not stochastic enough to make the DP meaningful.
    std::vector<double> survival_profile;
    std::vector<std::string> messages;
};

namespace detail {

inline void check_dimensions(const MdpSpec& spec) {
    const std::size_t S = spec.num_states();
    const std::size_t A = spec.num_actions();
    if (S < 1) throw SpecError("MDP must have at least one non-terminal state");
    if (A < 1) throw SpecError("MDP must have at least one action");
    if (spec.transition.size() != S)
        throw SpecError("transition table has " + std::to_string(spec.transition.size()) +
                        " state rows, expected " + std::to_string(S));
    if (spec.reward.size() != S)
        throw SpecError("reward table has " + std::to_string(spec.reward.size()) +
                        " state rows, expected " + std::to_string(S));
    for (std::size_t s = 0; s < S; ++s) {
        if (spec.transition[s].size() != A)
            throw SpecError("transition row for state '" + spec.state_names[s] + "' has " +
                            std::to_string(spec.transition[s].size()) + " actions, expected " +
                            std::to_string(A));
        if (spec.reward[s].size() != A)
            throw SpecError("reward row for state '" + spec.state_names[s] + "' has " +
                            std::to_string(spec.reward[s].size()) + " actions, expected " +
                            std::to_string(A));
        for (std::size_t a = 0; a < A; ++a) {
            if (spec.transition[s][a].size() != S + 1)
                throw SpecError("transition row (" + spec.state_names[s] + ", " +
                                spec.action_names[a] + ") has " +
                                std::to_string(spec.transition[s][a].size()) +
                                " entries, expected " + std::to_string(S + 1));
        }
    }
}

/// One step of the max-survival DP:
///   u'(s) = max_a sum_{s' non-terminal} p(s'|s,a) u(s').
inline std::vector<double> survival_step(const MdpSpec& spec, const std::vector<double>& u) {
    const std::size_t S = spec.num_states();
    const std::size_t A = spec.num_actions();
    std::vector<double> next(S, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
        double best = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
            const auto& row = spec.transition[s][a];
            double acc = 0.0;
            for (std::size_t j = 0; j < S; ++j) acc += row[j] * u[j];
            best = std::max(best, acc);
        }
        next[s] = best;
    }
    return next;
}

inline double sup_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace detail

/// Structural validation plus the all-policies-proper test.
///
/// Properness is decided by the max-survival DP with u_0 = 1: ||u_S||_inf < 1
/// iff no policy can stay inside the non-terminal states with probability 1
/// (a survival probability of exactly 1 after S steps pins a probability-1
/// cycle, which an improper stationary policy can follow).
///
/// Throws SpecError on malformed dimensions; stochasticity and reward-range
/// problems are reported through the flags and messages instead.
inline ValidationReport validate(const MdpSpec& spec) {
    detail::check_dimensions(spec);
    const std::size_t S = spec.num_states();
    const std::size_t A = spec.num_actions();

    ValidationReport report;
    report.stochastic_ok = true;
    report.reward_range_ok = true;

    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
            const auto& row = spec.transition[s][a];
            double sum = 0.0;
            for (std::size_t j = 0; j <= S; ++j) {
                if (!(row[j] >= 0.0) || row[j] > 1.0 || !std::isfinite(row[j])) {
                    report.stochastic_ok = false;
                    report.messages.push_back("transition (" + spec.state_names[s] + ", " +
                                              spec.action_names[a] + ") entry " +
                                              std::to_string(j) + " is not a probability");
                }
                sum += row[j];
            }
            if (std::abs(sum - 1.0) > kRowSumTolerance) {
                report.stochastic_ok = false;
                report.messages.push_back("transition row (" + spec.state_names[s] + ", " +
                                          spec.action_names[a] + ") sums to " +
                                          std::to_string(sum));
            }
            const double r = spec.reward[s][a];
            if (!(r >= 0.0 && r <= 1.0)) {
                report.reward_range_ok = false;
                report.messages.push_back("reward (" + spec.state_names[s] + ", " +
                                          spec.action_names[a] + ") = " + std::to_string(r) +
                                          " outside [0, 1]");
            }
        }
    }

    if (!(spec.discount > 0.0 && spec.discount <= 1.0)) {
        report.messages.push_back("discount " + std::to_string(spec.discount) +
                                  " outside (0, 1]");
    }

    if (report.stochastic_ok) {
        std::vector<double> u(S, 1.0);
        report.survival_profile.push_back(detail::sup_norm(u));
        for (std::size_t k = 0; k < S; ++k) {
            u = detail::survival_step(spec, u);
            report.survival_profile.push_back(detail::sup_norm(u));
        }
        report.all_policies_proper = report.survival_profile.back() < 1.0;
        if (!report.all_policies_proper) {
            report.messages.push_back(
                "survival probability still 1 after " + std::to_string(S) +
                " steps: some policy never reaches the terminal state");
        }
    } else {
        report.all_policies_proper = false;
    }
    return report;
}

/// Analysis entry points require the undiscounted case; the discount field is
/// stored for completeness only.
inline void require_undiscounted(const MdpSpec& spec) {
    if (spec.discount != 1.0)
        throw SpecError("analysis requires discount == 1 (got " +
                        std::to_string(spec.discount) + ")");
}

inline void require_policy(const MdpSpec& spec, const Policy& pi) {
    if (pi.size() != spec.num_states())
        throw SpecError("policy covers " + std::to_string(pi.size()) + " states, expected " +
                        std::to_string(spec.num_states()));
    for (std::size_t s = 0; s < pi.size(); ++s) {
        if (pi[s] < 0 || static_cast<std::size_t>(pi[s]) >= spec.num_actions())
            throw SpecError("policy action out of range at state '" + spec.state_names[s] + "'");
    }
}

}  // namespace sspmc
