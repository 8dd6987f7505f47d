#include "helpers.hpp"

using namespace sspmc;
using namespace sspmc::testing;

TEST_CASE("episode accounting is S*A*L*N", "[mces]") {
    MCESConfig config;
    config.L = 37;
    config.N = 10;
    config.seed = 4;
    const MCESRunReport report = run_mces(chain2(), config);
    CHECK(report.total_episodes == 2 * 2 * 37 * 10);
    REQUIRE(report.per_iteration.size() == 37);
    for (const MCESIteration& it : report.per_iteration) CHECK(it.episodes == 40);
    CHECK(report.total_steps >= report.total_episodes);
}

TEST_CASE("derived configuration follows the schedules", "[mces]") {
    const DerivedConfig derived = derive_config(bandit1(), 0.2);
    CHECK(derived.config.L == 3);
    CHECK(derived.config.N == 926);
    CHECK(derived.schedule.L_star == 3);
    CHECK(derived.schedule.N_delta == 926);

    // Schedule failures propagate unchanged.
    CHECK_THROWS_AS(derive_config(one_shot(), 0.2), ScheduleError);
    CHECK_THROWS_AS(derive_config(bandit1(), 0.0), ScheduleError);
}

TEST_CASE("the bandit is solved in one derived run", "[mces]") {
    const DerivedConfig derived = derive_config(bandit1(), 0.2);
    MCESConfig config = derived.config;
    config.seed = 42;
    const MCESRunReport report = run_mces(bandit1(), config);
    CHECK(report.final_policy == Policy{0});
}

TEST_CASE("exact-evaluation surrogate reproduces policy iteration", "[mces]") {
    const MdpSpec spec = chain2();
    // With exact q inside the loop and no ties anywhere along the trace, the
    // improvement path must match exact policy iteration step for step.
    for (int a0 = 0; a0 < 2; ++a0) {
        for (int a1 = 0; a1 < 2; ++a1) {
            const Policy start{a0, a1};
            const MCESRunReport surrogate = run_mces_exact_eval(spec, 6, start);
            const PolicyIterationResult pi_trace = exact_policy_iteration(spec, start);
            for (std::size_t k = 0; k < surrogate.per_iteration.size(); ++k) {
                const Policy& expected = k < pi_trace.policies.size()
                                             ? pi_trace.policies[k]
                                             : pi_trace.final_policy();
                CHECK(surrogate.per_iteration[k].policy == expected);
            }
            CHECK(surrogate.final_policy == Policy{1, 1});
        }
    }
}

TEST_CASE("exact surrogate reaches the optimum within the improvement bound", "[mces]") {
    const MdpSpec spec = chain2();
    const ScheduleReport schedule = derive_schedule(spec, kEtaStar, 0.2);
    REQUIRE(schedule.L0 == 21);
    for (int a0 = 0; a0 < 2; ++a0) {
        for (int a1 = 0; a1 < 2; ++a1) {
            const MCESRunReport report =
                run_mces_exact_eval(spec, schedule.L0, Policy{a0, a1});
            CHECK(report.final_policy == Policy{1, 1});
        }
    }
}

TEST_CASE("a well-sampled run finds and keeps the optimal policy", "[mces]") {
    MCESConfig config;
    config.L = 21;
    config.N = 4000;
    config.seed = 7;
    config.keep_history = true;
    const MCESRunReport report = run_mces(chain2(), config);
    CHECK(report.final_policy == Policy{1, 1});
    // Once reached, the optimum is stable for the rest of the run.
    bool seen = false;
    for (const MCESIteration& it : report.per_iteration) {
        if (it.policy == Policy{1, 1}) seen = true;
        if (seen) CHECK(it.policy == Policy{1, 1});
    }
    CHECK(seen);
}

TEST_CASE("history retention is opt-in", "[mces]") {
    MCESConfig config;
    config.L = 2;
    config.N = 50;
    config.seed = 9;
    const MCESRunReport bare = run_mces(chain2(), config);
    for (const MCESIteration& it : bare.per_iteration) CHECK(it.q.value.empty());

    config.keep_history = true;
    const MCESRunReport full = run_mces(chain2(), config);
    for (const MCESIteration& it : full.per_iteration) {
        REQUIRE(it.q.value.size() == 4);
    }

    // The snapshot of iteration 0 is reproducible directly from the sampler.
    MonteCarloOptions opt;
    opt.iteration = 0;
    const MonteCarloResult mc = monte_carlo_q(chain2(), Policy{0, 0}, 50, 9, opt);
    CHECK(full.per_iteration[0].q.value == mc.q.value);
}

TEST_CASE("runs are deterministic in (config, seed)", "[mces]") {
    MCESConfig config;
    config.L = 5;
    config.N = 200;
    config.seed = 123;
    config.keep_history = true;
    const MCESRunReport a = run_mces(chain2(), config);
    const MCESRunReport b = run_mces(chain2(), config);
    REQUIRE(a.per_iteration.size() == b.per_iteration.size());
    CHECK(a.final_policy == b.final_policy);
    CHECK(a.total_steps == b.total_steps);
    for (std::size_t k = 0; k < a.per_iteration.size(); ++k) {
        CHECK(a.per_iteration[k].policy == b.per_iteration[k].policy);
        CHECK(a.per_iteration[k].q.value == b.per_iteration[k].q.value);
    }

    config.threads = 3;
    const MCESRunReport c = run_mces(chain2(), config);
    CHECK(c.final_policy == a.final_policy);
    CHECK(c.total_steps == a.total_steps);
    for (std::size_t k = 0; k < a.per_iteration.size(); ++k)
        CHECK(c.per_iteration[k].q.value == a.per_iteration[k].q.value);
}

TEST_CASE("initial policy default is action 0 everywhere", "[mces]") {
    MCESConfig config;
    config.L = 1;
    config.N = 10;
    const MCESRunReport a = run_mces(chain2(), config);
    config.initial_policy = Policy{0, 0};
    const MCESRunReport b = run_mces(chain2(), config);
    CHECK(a.per_iteration[0].policy == Policy{0, 0});
    CHECK(a.final_policy == b.final_policy);

    config.initial_policy = Policy{0, 1, 0};
    CHECK_THROWS_AS(run_mces(chain2(), config), SpecError);
}

TEST_CASE("parameter validation", "[mces]") {
    MCESConfig config;
    config.L = 0;
    CHECK_THROWS_AS(run_mces(chain2(), config), SpecError);
    config.L = 1;
    config.N = 0;
    CHECK_THROWS_AS(run_mces(chain2(), config), SpecError);
    CHECK_THROWS_AS(run_mces_exact_eval(chain2(), 0), SpecError);

    MdpSpec discounted = chain2();
    discounted.discount = 0.9;
    config.N = 1;
    CHECK_THROWS_AS(run_mces(discounted, config), SpecError);
}

TEST_CASE("step budget refuses oversized runs up front", "[mces]") {
    MCESConfig config;
    config.L = 37;
    config.N = 2000000000;  // far beyond the default budget
    try {
        run_mces(chain2(), config);
        FAIL("expected BudgetError");
    } catch (const BudgetError& err) {
        const std::string what = err.what();
        CHECK(what.find("step budget") != std::string::npos);
        CHECK(what.find("--step-budget") != std::string::npos);
    }

    // Budget 0 disables the guard; a tiny run still executes.
    config.N = 5;
    config.step_budget = 0;
    CHECK_NOTHROW(run_mces(chain2(), config));

    // A tight explicit budget also refuses cheap runs.
    config.step_budget = 10;
    CHECK_THROWS_AS(run_mces(chain2(), config), BudgetError);
}

TEST_CASE("sweep cost estimate dominates per-policy episode lengths", "[mces]") {
    // One sweep with one episode per pair costs at most the estimate in
    // expectation: check sum of exact expected lengths over start pairs for
    // every policy against the w-based bound.
    for (const MdpSpec& spec : {chain2(), bandit1()}) {
        const LengthProfile lengths = max_expected_lengths(spec);
        const double bound = estimated_sweep_steps(spec, lengths.w);
        const MdpSpec ones = ones_reward_copy(spec);
        for_each_policy(spec, 100, [&](const Policy& pi) {
            const PolicyEvaluation eval = evaluate_policy(ones, pi);
            double total = 0.0;
            for (double q : eval.q.value) total += q;
            CHECK(total <= bound + 1e-9);
        });
    }
}
