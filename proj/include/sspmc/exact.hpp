#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sspmc/errors.hpp"
#include "sspmc/mdp.hpp"

namespace sspmc {

/// Residual threshold for the exact linear solves.
inline constexpr double kEvalResidualTolerance = 1e-10;

/// Default stopping tolerance for value iteration.
inline constexpr double kValueIterationTolerance = 1e-10;

struct PolicyMatrices {
    Eigen::MatrixXd Q;  // S x S substochastic matrix restricted to non-terminal states
    Eigen::VectorXd r;  // per-state one-step reward under the policy
};

inline PolicyMatrices policy_matrices(const MdpSpec& spec, const Policy& pi) {
    require_policy(spec, pi);
    const std::size_t S = spec.num_states();
    PolicyMatrices m{Eigen::MatrixXd::Zero(S, S), Eigen::VectorXd::Zero(S)};
    for (std::size_t s = 0; s < S; ++s) {
        const auto& row = spec.transition[s][static_cast<std::size_t>(pi[s])];
        for (std::size_t j = 0; j < S; ++j) m.Q(s, j) = row[j];
        m.r(s) = spec.reward[s][static_cast<std::size_t>(pi[s])];
    }
    return m;
}

/// Solve (I - Q_pi) v = r_pi by LU with partial pivoting, with one iterative
/// refinement pass if the first solve leaves a residual above tolerance.
/// A policy that never terminates makes I - Q_pi singular; that surfaces as a
/// non-finite solution or a stubborn residual and throws ImproperPolicyError.
inline VTable exact_policy_evaluation(const MdpSpec& spec, const Policy& pi) {
    require_undiscounted(spec);
    const auto m = policy_matrices(spec, pi);
    const auto S = static_cast<Eigen::Index>(spec.num_states());
    const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(S, S) - m.Q;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    Eigen::VectorXd v = lu.solve(m.r);
    double residual = (A * v - m.r).lpNorm<Eigen::Infinity>();
    if (!v.allFinite() || residual > kEvalResidualTolerance) {
        v += lu.solve(m.r - A * v);
        residual = (A * v - m.r).lpNorm<Eigen::Infinity>();
    }
    if (!v.allFinite() || residual > kEvalResidualTolerance)
        throw ImproperPolicyError("policy evaluation residual " + std::to_string(residual) +
                                  " exceeds tolerance: policy is likely improper");
    return VTable(v.data(), v.data() + v.size());
}

struct PolicyEvaluation {
    VTable v;
    QTable q;
};

inline QTable q_from_v(const MdpSpec& spec, const VTable& v) {
    const std::size_t S = spec.num_states();
    const std::size_t A = spec.num_actions();
    QTable q(S, A);
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
            const auto& row = spec.transition[s][a];
            double acc = spec.reward[s][a];
            for (std::size_t j = 0; j < S; ++j) acc += row[j] * v[j];
            q(s, a) = acc;
        }
    }
    return q;
}

/// Exact state values and the one-backup action values of a policy.
inline PolicyEvaluation evaluate_policy(const MdpSpec& spec, const Policy& pi) {
    PolicyEvaluation out;
    out.v = exact_policy_evaluation(spec, pi);
    out.q = q_from_v(spec, out.v);
    return out;
}

/// One Bellman optimality backup: (Tv)(s) = max_a [r(s,a) + sum p(.|s,a) v].
inline VTable bellman_apply(const MdpSpec& spec, const VTable& v) {
    const QTable q = q_from_v(spec, v);
    VTable out(q.states, 0.0);
    for (std::size_t s = 0; s < q.states; ++s) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < q.actions; ++a) best = std::max(best, q(s, a));
        out[s] = best;
    }
    return out;
}

struct ValueIterationResult {
    VTable v;
    std::size_t iterations = 0;
};

/// Repeated Bellman backups from v0 (zero by default) until successive
/// iterates differ by at most tol in sup norm. The returned iterate is one
/// backup past the stopping test, so ||v - Tv|| has already shrunk by another
/// contraction factor.
inline ValueIterationResult value_iteration(const MdpSpec& spec,
                                            double tol = kValueIterationTolerance,
                                            std::size_t max_iters = 1000000, VTable v0 = {}) {
    require_undiscounted(spec);
    if (!(tol > 0.0)) throw SpecError("value iteration needs tol > 0");
    VTable v = v0.empty() ? VTable(spec.num_states(), 0.0) : std::move(v0);
    if (v.size() != spec.num_states()) throw SpecError("value iteration start has wrong size");
    double diff = 0.0;
    for (std::size_t k = 0; k < max_iters; ++k) {
        VTable next = bellman_apply(spec, v);
        diff = 0.0;
        for (std::size_t s = 0; s < v.size(); ++s) diff = std::max(diff, std::abs(next[s] - v[s]));
        v = std::move(next);
        if (diff <= tol) return {std::move(v), k + 1};
    }
    throw NonConvergenceError("value iteration did not reach tolerance " + std::to_string(tol) +
                                  " in " + std::to_string(max_iters) + " sweeps",
                              diff);
}

enum class TieRule {
    lowest_index,    // break ties toward the smallest action index
    prefer_current,  // keep the incumbent action when it is within tolerance of the max
};

inline std::vector<int> argmax_set(const QTable& q, std::size_t s, double tol = kTieTolerance) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < q.actions; ++a) best = std::max(best, q(s, a));
    std::vector<int> out;
    for (std::size_t a = 0; a < q.actions; ++a)
        if (q(s, a) >= best - tol) out.push_back(static_cast<int>(a));
    return out;
}

/// Greedy policy extraction. `current` is required for prefer_current and
/// ignored otherwise.
inline Policy greedy_policy(const QTable& q, TieRule rule, const Policy* current = nullptr,
                            double tol = kTieTolerance) {
    if (rule == TieRule::prefer_current && current == nullptr)
        throw SpecError("prefer_current tie rule needs the incumbent policy");
    Policy pi(q.states, 0);
    for (std::size_t s = 0; s < q.states; ++s) {
        const std::vector<int> ties = argmax_set(q, s, tol);
        if (rule == TieRule::prefer_current &&
            std::find(ties.begin(), ties.end(), (*current)[s]) != ties.end()) {
            pi[s] = (*current)[s];
        } else {
            pi[s] = ties.front();
        }
    }
    return pi;
}

struct PolicyIterationResult {
    std::vector<Policy> policies;  // trace from the start to the fixed point
    std::vector<VTable> values;    // exact value of each traced policy

    const Policy& final_policy() const { return policies.back(); }
    const VTable& final_value() const { return values.back(); }
    std::size_t improvement_steps() const { return policies.size() - 1; }
};

/// Exact policy iteration with the prefer-current tie rule. Terminates at the
/// first k with pi_{k+1} == pi_k; keeping incumbent actions on ties makes
/// that test sound.
inline PolicyIterationResult exact_policy_iteration(const MdpSpec& spec, Policy pi) {
    require_policy(spec, pi);
    PolicyIterationResult result;
    while (true) {
        VTable v = exact_policy_evaluation(spec, pi);
        result.policies.push_back(pi);
        result.values.push_back(std::move(v));
        const QTable q = q_from_v(spec, result.values.back());
        Policy next = greedy_policy(q, TieRule::prefer_current, &pi);
        if (next == pi) break;
        pi = std::move(next);
    }
    return result;
}

/// Copy of the MDP with every reward set to 1, so that policy values become
/// expected episode lengths.
inline MdpSpec ones_reward_copy(const MdpSpec& spec) {
    MdpSpec copy = spec;
    for (auto& row : copy.reward) std::fill(row.begin(), row.end(), 1.0);
    return copy;
}

struct LengthProfile {
    VTable w;            // w(s) = max over policies of expected steps to termination
    double w_inf = 0.0;  // ||w||_inf
    double rho = 0.0;    // 1 - 1/||w||_inf, the weighted-sup-norm contraction modulus
};

/// Maximum expected episode lengths, obtained by exact policy iteration on the
/// all-ones-reward copy (every step then pays 1, so values count steps).
inline LengthProfile max_expected_lengths(const MdpSpec& spec) {
    require_undiscounted(spec);
    const MdpSpec ones = ones_reward_copy(spec);
    const auto pi_result = exact_policy_iteration(ones, Policy(spec.num_states(), 0));
    LengthProfile profile;
    profile.w = pi_result.final_value();
    for (double x : profile.w) profile.w_inf = std::max(profile.w_inf, x);
    profile.rho = 1.0 - 1.0 / profile.w_inf;
    return profile;
}

inline double weighted_sup_norm(const VTable& v, const VTable& w) {
    if (v.size() != w.size()) throw SpecError("weighted norm: size mismatch");
    double m = 0.0;
    for (std::size_t s = 0; s < v.size(); ++s) m = std::max(m, std::abs(v[s]) / w[s]);
    return m;
}

/// Smallest k with ||u_k||_inf <= 1 - eta for the max-survival DP (u_0 = 1).
/// The iteration count is capped at 10 * S * ceil(1/(1-eta)); an all-policies-
/// proper MDP decays geometrically well inside that cap, so exceeding it is
/// treated as evidence of an improper policy.
inline std::size_t termination_horizon(const MdpSpec& spec, double eta) {
    require_undiscounted(spec);
    if (!(eta > 0.0 && eta < 1.0))
        throw ScheduleError("termination horizon needs eta in (0, 1), got " +
                            std::to_string(eta));
    const std::size_t S = spec.num_states();
    const auto cap = static_cast<std::size_t>(10.0 * static_cast<double>(S) *
                                              std::ceil(1.0 / (1.0 - eta)));
    std::vector<double> u(S, 1.0);
    for (std::size_t k = 1; k <= cap; ++k) {
        u = detail::survival_step(spec, u);
        if (detail::sup_norm(u) <= 1.0 - eta) return k;
    }
    throw ImproperPolicyError("survival probability stayed above " + std::to_string(1.0 - eta) +
                              " for " + std::to_string(cap) +
                              " steps: some policy looks improper");
}

/// Suboptimality gap of a q-table:
///   min over states of [max_a q(s,a) - best q(s,a) among non-maximizers],
/// where a state whose actions are all maximizers contributes nothing. When
/// every state is like that the gap is +infinity.
inline double suboptimality_gap(const QTable& q, double tol = kTieTolerance) {
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < q.states; ++s) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < q.actions; ++a) best = std::max(best, q(s, a));
        double runner_up = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < q.actions; ++a)
            if (q(s, a) < best - tol) runner_up = std::max(runner_up, q(s, a));
        if (std::isfinite(runner_up)) gap = std::min(gap, best - runner_up);
    }
    return gap;
}

/// Gap of the optimal q-table.
inline double gap_star(const MdpSpec& spec) {
    const auto pi_result = exact_policy_iteration(spec, Policy(spec.num_states(), 0));
    return suboptimality_gap(q_from_v(spec, pi_result.final_value()));
}

/// Number of deterministic stationary policies, saturating at SIZE_MAX on
/// overflow.
inline std::size_t policy_count(const MdpSpec& spec) {
    std::size_t count = 1;
    for (std::size_t s = 0; s < spec.num_states(); ++s) {
        if (count > std::numeric_limits<std::size_t>::max() / spec.num_actions())
            return std::numeric_limits<std::size_t>::max();
        count *= spec.num_actions();
    }
    return count;
}

/// Visit every deterministic stationary policy in lexicographic order (state 0
/// is the fastest-varying digit). Throws BudgetError when A^S exceeds the
/// budget. Returns the number of policies visited.
template <typename Fn>
std::size_t for_each_policy(const MdpSpec& spec, std::size_t policy_budget, Fn&& fn) {
    const std::size_t count = policy_count(spec);
    if (count > policy_budget)
        throw BudgetError("policy enumeration needs " + std::to_string(count) +
                          " policies, above the budget of " + std::to_string(policy_budget) +
                          "; raise --policy-budget to allow it");
    Policy pi(spec.num_states(), 0);
    const int A = static_cast<int>(spec.num_actions());
    for (std::size_t rank = 0; rank < count; ++rank) {
        fn(static_cast<const Policy&>(pi));
        for (std::size_t s = 0; s < pi.size(); ++s) {
            if (++pi[s] < A) break;
            pi[s] = 0;
        }
    }
    return count;
}

/// Minimum suboptimality gap over all deterministic stationary policies.
inline double gap_min(const MdpSpec& spec, std::size_t policy_budget = 1000000) {
    double gap = std::numeric_limits<double>::infinity();
    for_each_policy(spec, policy_budget, [&](const Policy& pi) {
        const VTable v = exact_policy_evaluation(spec, pi);
        gap = std::min(gap, suboptimality_gap(q_from_v(spec, v)));
    });
    return gap;
}

}  // namespace sspmc
