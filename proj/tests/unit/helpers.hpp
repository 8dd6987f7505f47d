// Shared helpers for the unit test suite.
#pragma once

#include <catch2/catch_amalgamated.hpp>

#include <sspmc/sspmc.hpp>

#include <cmath>
#include <vector>

namespace sspmc::testing {

// Two-state reference instance used throughout the suite.  Known quantities:
//   v* = (1.1, 1.0), unique optimal policy (a1, a1),
//   w = (3, 2), rho = 2/3, termination horizon 3 at eta = 1 - 1/e,
//   gap at the optimum = 0.1 (also the minimum over all four policies).
inline MdpSpec chain2() { return fixture_chain2(); }

// One-state bandit: action 0 pays 1.0, action 1 pays 0.25, both terminate.
inline MdpSpec bandit1() { return fixture_bandit1(); }

// One-state, one-action MDP that never terminates (self loop with
// probability one).  Deliberately violates the all-policies-proper
// assumption; used to exercise the improper-policy error paths.
inline MdpSpec self_loop() {
    MdpSpec spec;
    spec.state_names = {"s0"};
    spec.action_names = {"a0"};
    spec.transition = {{{1.0, 0.0}}};
    spec.reward = {{0.5}};
    return spec;
}

// One-state, one-action MDP that terminates immediately.
inline MdpSpec one_shot(double reward = 1.0) {
    MdpSpec spec;
    spec.state_names = {"s0"};
    spec.action_names = {"a0"};
    spec.transition = {{{0.0, 1.0}}};
    spec.reward = {{reward}};
    return spec;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace sspmc::testing
