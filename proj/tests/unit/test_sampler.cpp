#include "helpers.hpp"

#include <set>

using namespace sspmc;
using namespace sspmc::testing;

TEST_CASE("deterministic one-step episode", "[sampler]") {
    const MdpSpec spec = chain2();
    SplitMix64 rng(1);
    const Trajectory traj = sample_episode(spec, Policy{1, 1}, 0, 0, rng);
    CHECK(traj.start_state == 0);
    CHECK(traj.start_action == 0);
    CHECK(traj.length() == 1);
    CHECK(traj.total_return == 1.0);
    REQUIRE(traj.steps.size() == 1);
    CHECK(traj.steps[0].state == 0);
    CHECK(traj.steps[0].action == 0);
    CHECK(traj.steps[0].reward == 1.0);
}

TEST_CASE("episodes follow the policy and account returns exactly", "[sampler]") {
    // Start (s0, a1) under pi = (a1, a1): one 0.1 step into s1, then a
    // geometric number of 0.5 self-loop steps.
    const MdpSpec spec = chain2();
    for (std::uint64_t key = 0; key < 200; ++key) {
        SplitMix64 rng(key);
        const Trajectory traj = sample_episode(spec, Policy{1, 1}, 0, 1, rng);
        REQUIRE(traj.length() >= 2);
        CHECK(traj.steps[0].state == 0);
        CHECK(traj.steps[0].action == 1);
        for (std::size_t i = 1; i < traj.steps.size(); ++i) {
            CHECK(traj.steps[i].state == 1);
            CHECK(traj.steps[i].action == 1);
        }
        const double expected = 0.1 + 0.5 * static_cast<double>(traj.length() - 1);
        CHECK_THAT(traj.total_return, Catch::Matchers::WithinAbs(expected, 1e-12));
    }
}

TEST_CASE("identical stream keys reproduce the trajectory", "[sampler]") {
    const MdpSpec spec = chain2();
    SplitMix64 a(12345);
    SplitMix64 b(12345);
    const Trajectory ta = sample_episode(spec, Policy{1, 1}, 1, 1, a);
    const Trajectory tb = sample_episode(spec, Policy{1, 1}, 1, 1, b);
    CHECK(ta.length() == tb.length());
    CHECK(ta.total_return == tb.total_return);
}

TEST_CASE("episode sampling validates its inputs", "[sampler]") {
    const MdpSpec spec = chain2();
    SplitMix64 rng(1);
    CHECK_THROWS_AS(sample_episode(spec, Policy{1}, 0, 0, rng), SpecError);
    CHECK_THROWS_AS(sample_episode(spec, Policy{1, 1}, 2, 0, rng), SpecError);
    CHECK_THROWS_AS(sample_episode(spec, Policy{1, 1}, 0, 2, rng), SpecError);
}

TEST_CASE("safety cap raises instead of truncating", "[sampler]") {
    const MdpSpec spec = chain2();
    SplitMix64 rng(7);
    // Start (s0, a1) always needs at least two steps, so a cap of 1 must trip.
    CHECK_THROWS_AS(sample_episode(spec, Policy{1, 1}, 0, 1, rng, 1), EpisodeCapError);

    // An improper instance trips the default-sized cap too (small cap here to
    // keep the test fast).
    SplitMix64 rng2(8);
    CHECK_THROWS_AS(sample_episode(self_loop(), Policy{0}, 0, 0, rng2, 1000), EpisodeCapError);
}

TEST_CASE("single-episode estimate on the bandit is the reward table", "[sampler]") {
    const MonteCarloResult res = monte_carlo_q(bandit1(), Policy{0}, 1, 99);
    CHECK(res.q(0, 0) == 1.0);
    CHECK(res.q(0, 1) == 0.25);
    CHECK(res.episodes == 2);
    CHECK(res.steps == 2);
    CHECK(res.max_length == 1);
    CHECK(res.counts == std::vector<std::uint64_t>{1, 1});
}

TEST_CASE("estimates approach exact q at ten-thousand episodes", "[sampler]") {
    const MdpSpec spec = chain2();
    const Policy pi{1, 1};
    const MonteCarloResult res = monte_carlo_q(spec, pi, 100000, 2024);
    const PolicyEvaluation exact = evaluate_policy(spec, pi);
    CHECK(std::abs(res.q(0, 0) - exact.q(0, 0)) < 0.02);
    CHECK(std::abs(res.q(0, 1) - exact.q(0, 1)) < 0.02);
    CHECK(std::abs(res.q(1, 0) - exact.q(1, 0)) < 0.02);
    CHECK(std::abs(res.q(1, 1) - 1.0) < 0.02);
    CHECK(res.episodes == 400000);
}

TEST_CASE("estimates are unbiased across independent seeds", "[sampler]") {
    const MdpSpec spec = chain2();
    const Policy pi{1, 1};
    const PolicyEvaluation exact = evaluate_policy(spec, pi);
    QTable grand(2, 2, 0.0);
    const int runs = 50;
    for (int r = 0; r < runs; ++r) {
        const MonteCarloResult res = monte_carlo_q(spec, pi, 10000, 5000 + r);
        for (std::size_t p = 0; p < 4; ++p) grand.value[p] += res.q.value[p];
    }
    for (std::size_t p = 0; p < 4; ++p) {
        const double mean = grand.value[p] / runs;
        CHECK(std::abs(mean - exact.q.value[p]) < 0.01);
    }
}

TEST_CASE("thread count does not change a single bit", "[sampler]") {
    const MdpSpec spec = chain2();
    const Policy pi{1, 1};
    // 9000 episodes split into three chunks per start pair.
    MonteCarloOptions opt1;
    opt1.threads = 1;
    MonteCarloOptions opt3;
    opt3.threads = 3;
    for (bool first_visit : {false, true}) {
        opt1.first_visit = first_visit;
        opt3.first_visit = first_visit;
        const MonteCarloResult a = monte_carlo_q(spec, pi, 9000, 31, opt1);
        const MonteCarloResult b = monte_carlo_q(spec, pi, 9000, 31, opt3);
        CHECK(a.q.value == b.q.value);  // bitwise equality
        CHECK(a.counts == b.counts);
        CHECK(a.steps == b.steps);
        CHECK(a.max_length == b.max_length);
    }
}

TEST_CASE("repeated invocations are bitwise identical", "[sampler]") {
    const MonteCarloResult a = monte_carlo_q(chain2(), Policy{1, 1}, 5000, 77);
    const MonteCarloResult b = monte_carlo_q(chain2(), Policy{1, 1}, 5000, 77);
    CHECK(a.q.value == b.q.value);
    const MonteCarloResult c = monte_carlo_q(chain2(), Policy{1, 1}, 5000, 78);
    CHECK(a.q.value != c.q.value);
}

TEST_CASE("iteration index separates sampling streams", "[sampler]") {
    MonteCarloOptions opt;
    opt.iteration = 1;
    const MonteCarloResult a = monte_carlo_q(chain2(), Policy{1, 1}, 5000, 77);
    const MonteCarloResult b = monte_carlo_q(chain2(), Policy{1, 1}, 5000, 77, opt);
    CHECK(a.q.value != b.q.value);
}

TEST_CASE("first-visit estimates are exact on a deterministic instance", "[sampler]") {
    // Under pi = (a0, a0) every return contribution is deterministic except
    // at (s1, a1): q-hat(s0,a0) = 1.0, q-hat(s0,a1) = 0.35, and every
    // first-visit return recorded at (s1, a0) equals 0.25 regardless of the
    // route into it.
    const MdpSpec spec = chain2();
    MonteCarloOptions opt;
    opt.first_visit = true;
    const std::uint64_t n = 2000;
    const MonteCarloResult res = monte_carlo_q(spec, Policy{0, 0}, n, 13, opt);

    CHECK(res.q(0, 0) == 1.0);   // sums of exact 1.0 returns stay exact
    CHECK(res.q(1, 0) == 0.25);  // quarters are exactly representable
    CHECK_THAT(res.q(0, 1), Catch::Matchers::WithinAbs(0.35, 1e-12));
    // (s1, a1) averages 0.5 / 0.75 coin flips around its exact value 0.625.
    CHECK(std::abs(res.q(1, 1) - 0.625) < 0.02);

    // Start-only pairs keep count n; (s1, a0) also absorbs every (s0, a1)
    // episode plus the looping half of the (s1, a1) episodes.
    CHECK(res.counts[0] == n);
    CHECK(res.counts[1] == n);
    CHECK(res.counts[2] >= 2 * n);
    CHECK(res.counts[2] <= 3 * n);
    CHECK(res.counts[3] == n);
}

TEST_CASE("first-visit and start-only agree where trajectories never revisit", "[sampler]") {
    // On the bandit every episode is one step, so the two modes coincide.
    MonteCarloOptions fv;
    fv.first_visit = true;
    const MonteCarloResult a = monte_carlo_q(bandit1(), Policy{0}, 500, 3);
    const MonteCarloResult b = monte_carlo_q(bandit1(), Policy{0}, 500, 3, fv);
    CHECK(a.q.value == b.q.value);
    CHECK(a.counts == b.counts);
}

TEST_CASE("trajectory sink sees every episode in canonical order", "[sampler]") {
    const MdpSpec spec = chain2();
    const Policy pi{1, 1};
    const std::uint64_t n = 50;

    std::vector<Trajectory> seen;
    MonteCarloOptions opt;
    opt.sink = [&](const Trajectory& t) { seen.push_back(t); };
    const MonteCarloResult with_sink = monte_carlo_q(spec, pi, n, 11, opt);
    const MonteCarloResult without = monte_carlo_q(spec, pi, n, 11);

    // Estimates are unchanged by dumping.
    CHECK(with_sink.q.value == without.q.value);
    CHECK(with_sink.steps == without.steps);

    // Canonical order: start pairs in row-major order, n episodes each.
    REQUIRE(seen.size() == 4 * n);
    for (std::size_t i = 0; i < seen.size(); ++i) {
        const std::size_t pair = i / n;
        CHECK(seen[i].start_state == pair / 2);
        CHECK(seen[i].start_action == pair % 2);
    }
}

TEST_CASE("empirical tails match the exact tail probabilities", "[sampler]") {
    // Frequency of episodes longer than t+1 from (s1, a1) under pi=(a1,a1)
    // versus the exact tail 0.5^(t+1), within a 3-sigma binomial band.
    const MdpSpec spec = chain2();
    const Policy pi{1, 1};
    const std::uint64_t n = 100000;
    std::vector<std::uint64_t> longer(22, 0);
    const SamplingTables tables(spec);
    const std::uint64_t base = stream_base_key(555, 1, 1, 0);
    for (std::uint64_t e = 0; e < n; ++e) {
        SplitMix64 rng(mix64(base ^ e));
        const EpisodeStats stats = walk_episode(tables, pi, 1, 1, rng, kDefaultEpisodeCap,
                                                [](std::size_t, std::size_t, double, double) {});
        for (std::size_t t = 0; t < longer.size(); ++t)
            if (stats.length > t + 1) ++longer[t];
    }
    const std::vector<double> exact = episode_tail_probabilities(spec, pi, 1, 1, 21);
    const double eta = kEtaStar;
    const double c1 = 1.0 / (1.0 - eta);
    const double c2 = std::log(1.0 / (1.0 - eta)) / 3.0;  // K = 3 on this instance
    for (std::size_t t = 0; t <= 20; ++t) {
        const double p = exact[t];
        const double freq = static_cast<double>(longer[t]) / static_cast<double>(n);
        const double sigma = std::sqrt(std::max(p * (1.0 - p), 1e-12) / static_cast<double>(n));
        CHECK(std::abs(freq - p) <= 3.0 * sigma + 1e-9);
        // The observed frequency never contradicts the subexponential
        // envelope beyond the same slack.
        const double envelope = c1 * std::exp(-c2 * static_cast<double>(t));
        CHECK(freq <= envelope + 3.0 * sigma + 1e-9);
    }
}

TEST_CASE("estimation rejects zero episodes", "[sampler]") {
    CHECK_THROWS_AS(monte_carlo_q(chain2(), Policy{1, 1}, 0, 1), SpecError);
}
