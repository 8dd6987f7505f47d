#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sspmc/errors.hpp"
#include "sspmc/exact.hpp"
#include "sspmc/mdp.hpp"
#include "sspmc/rng.hpp"

namespace sspmc {

enum class Family {
    bandit1,      // fixed one-state two-action fixture
    chain2,       // fixed two-state two-action fixture
    alpha_family, // every row keeps terminal mass >= alpha
    layered_dag,  // transitions only move to later layers or terminate
};

struct GeneratorParams {
    Family family = Family::alpha_family;
    std::size_t S = 2;
    std::size_t A = 2;
    double alpha = 0.3;      // alpha_family only
    std::size_t layers = 3;  // layered_dag only
    std::uint64_t seed = 0;
};

inline MdpSpec fixture_bandit1() {
    MdpSpec spec;
    spec.state_names = {"s0"};
    spec.action_names = {"a0", "a1"};
    spec.transition = {{{0.0, 1.0}, {0.0, 1.0}}};
    spec.reward = {{1.0, 0.25}};
    return spec;
}

inline MdpSpec fixture_chain2() {
    MdpSpec spec;
    spec.state_names = {"s0", "s1"};
    spec.action_names = {"a0", "a1"};
    spec.transition = {
        {{0.0, 0.0, 1.0}, {0.0, 1.0, 0.0}},
        {{0.0, 0.0, 1.0}, {0.0, 0.5, 0.5}},
    };
    spec.reward = {{1.0, 0.1}, {0.25, 0.5}};
    return spec;
}

namespace detail {

inline std::vector<std::string> indexed_names(const char* prefix, std::size_t n) {
    std::vector<std::string> names;
    names.reserve(n);
    for (std::size_t i = 0; i < n; ++i) names.push_back(prefix + std::to_string(i));
    return names;
}

/// Reward from the grid {0, 0.05, ..., 1.0}; the grid keeps gaps away from 0
/// with high probability.
inline double grid_reward(SplitMix64& rng) {
    return static_cast<double>(rng.next() % 21) / 20.0;
}

inline MdpSpec build_alpha_family(const GeneratorParams& p, SplitMix64& rng) {
    if (!(p.alpha > 0.0 && p.alpha <= 1.0))
        throw SpecError("alpha_family needs alpha in (0, 1]");
    MdpSpec spec;
    spec.state_names = detail::indexed_names("s", p.S);
    spec.action_names = detail::indexed_names("a", p.A);
    spec.transition.assign(p.S, std::vector<std::vector<double>>(p.A));
    spec.reward.assign(p.S, std::vector<double>(p.A, 0.0));
    for (std::size_t s = 0; s < p.S; ++s) {
        for (std::size_t a = 0; a < p.A; ++a) {
            std::vector<double> weights(p.S + 1);
            double total = 0.0;
            for (auto& x : weights) {
                x = rng.next_double() + 1e-3;
                total += x;
            }
            auto& row = spec.transition[s][a];
            row.assign(p.S + 1, 0.0);
            for (std::size_t j = 0; j <= p.S; ++j) row[j] = (1.0 - p.alpha) * weights[j] / total;
            row[p.S] += p.alpha;  // reserved terminal mass
            spec.reward[s][a] = grid_reward(rng);
        }
    }
    return spec;
}

inline MdpSpec build_layered_dag(const GeneratorParams& p, SplitMix64& rng) {
    if (p.layers < 1) throw SpecError("layered_dag needs layers >= 1");
    MdpSpec spec;
    spec.state_names = detail::indexed_names("s", p.S);
    spec.action_names = detail::indexed_names("a", p.A);
    spec.transition.assign(p.S, std::vector<std::vector<double>>(p.A));
    spec.reward.assign(p.S, std::vector<double>(p.A, 0.0));
    // Contiguous layer blocks; every transition strictly increases the layer,
    // so no episode outlives `layers` steps.
    auto layer_of = [&](std::size_t i) { return i * p.layers / p.S; };
    for (std::size_t s = 0; s < p.S; ++s) {
        for (std::size_t a = 0; a < p.A; ++a) {
            auto& row = spec.transition[s][a];
            row.assign(p.S + 1, 0.0);
            std::vector<std::size_t> targets;
            for (std::size_t j = 0; j < p.S; ++j)
                if (layer_of(j) > layer_of(s)) targets.push_back(j);
            targets.push_back(p.S);  // terminal is always reachable
            double total = 0.0;
            std::vector<double> weights(targets.size());
            for (auto& x : weights) {
                x = rng.next_double() + 1e-3;
                total += x;
            }
            for (std::size_t i = 0; i < targets.size(); ++i) row[targets[i]] = weights[i] / total;
            spec.reward[s][a] = grid_reward(rng);
        }
    }
    return spec;
}

}  // namespace detail

/// Seeded instance generation. Instances whose suboptimality gap is 0 (or not
/// finite while more than one action exists) are rebuilt with an incremented
/// sub-seed, each attempt appended to *log when a log is supplied. Every
/// returned instance passes validate with all_policies_proper = true.
inline MdpSpec generate(const GeneratorParams& params, std::vector<std::string>* log = nullptr) {
    if (params.family == Family::bandit1) return fixture_bandit1();
    if (params.family == Family::chain2) return fixture_chain2();
    if (params.S < 1 || params.A < 1) throw SpecError("generator needs S >= 1 and A >= 1");

    constexpr std::size_t kMaxAttempts = 64;
    for (std::size_t attempt = 0; attempt < kMaxAttempts; ++attempt) {
        SplitMix64 rng(mix64(mix64(params.seed) ^ attempt));
        MdpSpec spec = params.family == Family::alpha_family
                           ? detail::build_alpha_family(params, rng)
                           : detail::build_layered_dag(params, rng);
        const ValidationReport report = validate(spec);
        if (!report.stochastic_ok || !report.reward_range_ok || !report.all_policies_proper)
            throw SpecError("generator produced an invalid instance (internal bug)");

        // Gap screening: enumerate when cheap, otherwise settle for the
        // optimal policy's gap.
        const double gap =
            policy_count(spec) <= 10000 ? gap_min(spec, 10000) : gap_star(spec);
        const bool degenerate =
            params.A >= 2 ? !(std::isfinite(gap) && gap > 0.0) : false;
        if (!degenerate) return spec;
        if (log)
            log->push_back("seed " + std::to_string(params.seed) + " attempt " +
                           std::to_string(attempt) + ": degenerate gap, regenerating");
    }
    throw SpecError("generator failed to produce a non-degenerate instance after " +
                    std::to_string(kMaxAttempts) + " attempts");
}

}  // namespace sspmc
