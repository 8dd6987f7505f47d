#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "sspmc/errors.hpp"
#include "sspmc/mdp.hpp"
#include "sspmc/rng.hpp"

namespace sspmc {

/// Hard per-episode safety valve. Hitting it is always an error (an episode
/// this long on an all-proper instance is evidence the instance is not one).
inline constexpr std::uint64_t kDefaultEpisodeCap = 10000000;

/// Episodes per work unit. Estimates are accumulated per (start pair, chunk)
/// and merged in a fixed order, so results are bit-identical for every thread
/// count. The constant participates in that merge order: changing it changes
/// low-order bits of the estimates (never their distribution).
inline constexpr std::uint64_t kEpisodeChunk = 4096;

struct Trajectory {
    std::size_t start_state = 0;
    std::size_t start_action = 0;

    struct Step {
        std::size_t state = 0;
        std::size_t action = 0;
        double reward = 0.0;
    };
    std::vector<Step> steps;
    double total_return = 0.0;

    std::size_t length() const { return steps.size(); }
};

/// Flattened cumulative transition rows for fast episode stepping. Built once
/// per estimation call and shared read-only across worker threads.
class SamplingTables {
public:
    explicit SamplingTables(const MdpSpec& spec)
        : states_(spec.num_states()), actions_(spec.num_actions()) {
        const std::size_t pairs = states_ * actions_;
        const std::size_t width = states_ + 1;
        cum_.resize(pairs * width);
        fallback_.resize(pairs);
        reward_.resize(pairs);
        for (std::size_t s = 0; s < states_; ++s) {
            for (std::size_t a = 0; a < actions_; ++a) {
                const std::size_t pair = s * actions_ + a;
                const auto& row = spec.transition[s][a];
                double acc = 0.0;
                std::size_t last_positive = states_;
                for (std::size_t j = 0; j < width; ++j) {
                    acc += row[j];
                    cum_[pair * width + j] = acc;
                    if (row[j] > 0.0) last_positive = j;
                }
                fallback_[pair] = last_positive;
                reward_[pair] = spec.reward[s][a];
            }
        }
    }

    std::size_t num_states() const { return states_; }
    std::size_t num_actions() const { return actions_; }
    std::size_t terminal_index() const { return states_; }
    double reward(std::size_t s, std::size_t a) const { return reward_[s * actions_ + a]; }

    /// Sample the successor of (s, a), consuming exactly one uniform draw.
    /// Returns terminal_index() for termination. The fallback guards the
    /// rounding sliver where the row's cumulative sum lands just below 1.
    std::size_t next_state(std::size_t s, std::size_t a, SplitMix64& rng) const {
        const std::size_t width = states_ + 1;
        const double* row = cum_.data() + (s * actions_ + a) * width;
        const double u = rng.next_double();
        if (width <= 32) {
            for (std::size_t j = 0; j < width; ++j)
                if (u < row[j]) return j;
        } else {
            const double* it = std::upper_bound(row, row + width, u);
            if (it != row + width) return static_cast<std::size_t>(it - row);
        }
        return fallback_[s * actions_ + a];
    }

private:
    std::size_t states_;
    std::size_t actions_;
    std::vector<double> cum_;
    std::vector<std::size_t> fallback_;
    std::vector<double> reward_;
};

struct EpisodeStats {
    double total_return = 0.0;
    std::uint64_t length = 0;
};

/// Core episode walk: start at (s, a), then follow pi until the terminal
/// state. on_step(state, action, reward, return_before_step) fires once per
/// step in order. Exactly one uniform draw is consumed per step, so every
/// caller sees identical trajectories for identical rng streams.
template <typename OnStep>
EpisodeStats walk_episode(const SamplingTables& tables, const Policy& pi, std::size_t s,
                          std::size_t a, SplitMix64& rng, std::uint64_t cap, OnStep&& on_step) {
    EpisodeStats stats;
    const std::size_t terminal = tables.terminal_index();
    while (true) {
        if (stats.length == cap)
            throw EpisodeCapError("episode exceeded the safety cap of " + std::to_string(cap) +
                                  " steps; check properness of the instance");
        const double r = tables.reward(s, a);
        on_step(s, a, r, stats.total_return);
        stats.total_return += r;
        ++stats.length;
        const std::size_t next = tables.next_state(s, a, rng);
        if (next == terminal) break;
        s = next;
        a = static_cast<std::size_t>(pi[s]);
    }
    return stats;
}

inline Trajectory sample_episode(const SamplingTables& tables, const Policy& pi, std::size_t s,
                                 std::size_t a, SplitMix64& rng,
                                 std::uint64_t cap = kDefaultEpisodeCap) {
    Trajectory traj;
    traj.start_state = s;
    traj.start_action = a;
    const EpisodeStats stats =
        walk_episode(tables, pi, s, a, rng,
                     cap, [&](std::size_t cs, std::size_t ca, double r, double) {
                         traj.steps.push_back({cs, ca, r});
                     });
    traj.total_return = stats.total_return;
    return traj;
}

/// One-off convenience overload; estimation loops build the tables once.
inline Trajectory sample_episode(const MdpSpec& spec, const Policy& pi, std::size_t s,
                                 std::size_t a, SplitMix64& rng,
                                 std::uint64_t cap = kDefaultEpisodeCap) {
    require_policy(spec, pi);
    if (s >= spec.num_states() || a >= spec.num_actions())
        throw SpecError("episode start pair out of range");
    return sample_episode(SamplingTables(spec), pi, s, a, rng, cap);
}

struct MonteCarloOptions {
    bool first_visit = false;
    unsigned threads = 1;
    std::uint64_t episode_cap = kDefaultEpisodeCap;
    std::uint64_t iteration = 0;  // folded into every episode's stream id
    // Receives every sampled episode in canonical (start pair, episode) order.
    // Setting it forces single-threaded execution; the estimates are
    // unchanged because the episode streams do not depend on scheduling.
    std::function<void(const Trajectory&)> sink;
};

struct MonteCarloResult {
    QTable q;
    std::vector<std::uint64_t> counts;  // samples averaged per pair, row-major
    std::uint64_t episodes = 0;
    std::uint64_t steps = 0;
    std::uint64_t max_length = 0;
};

namespace detail {

struct PairAccum {
    double sum = 0.0;
    std::uint64_t count = 0;
};

/// Run fn(0..task_count-1), possibly across threads. Callers must make tasks
/// write to disjoint slots; any ordering requirements are theirs to enforce
/// after the join. The first exception thrown by a task is rethrown.
template <typename Fn>
void run_tasks(std::size_t task_count, unsigned threads, Fn&& fn) {
    if (threads <= 1 || task_count <= 1) {
        for (std::size_t i = 0; i < task_count; ++i) fn(i);
        return;
    }
    const unsigned workers =
        static_cast<unsigned>(std::min<std::size_t>(threads, task_count));
    std::atomic<std::size_t> cursor{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = cursor.fetch_add(1);
                if (i >= task_count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// Synchronous Monte Carlo estimate of q_pi: n_episodes independent episodes
/// from every (state, action) start pair. In first-visit mode each episode
/// additionally contributes its first-visit return to every pair it passes
/// through, and the per-pair sample counts in the result then differ.
///
/// Determinism: episode e of start pair (s, a) always uses the stream keyed
/// by (seed, s, a, iteration, e). Work is split into fixed chunks of
/// kEpisodeChunk episodes and partial sums are merged in (pair, chunk) order,
/// which makes the result bit-identical for every thread count.
inline MonteCarloResult monte_carlo_q(const MdpSpec& spec, const Policy& pi,
                                      std::uint64_t n_episodes, std::uint64_t seed,
                                      const MonteCarloOptions& opt = {}) {
    require_policy(spec, pi);
    if (n_episodes < 1) throw SpecError("monte_carlo_q needs n_episodes >= 1");
    const std::size_t S = spec.num_states();
    const std::size_t A = spec.num_actions();
    const std::size_t P = S * A;
    const SamplingTables tables(spec);

    const std::uint64_t chunks = (n_episodes + kEpisodeChunk - 1) / kEpisodeChunk;
    const std::size_t task_count = P * static_cast<std::size_t>(chunks);
    const bool first_visit = opt.first_visit;

    struct TaskResult {
        std::vector<detail::PairAccum> contrib;  // [P] first-visit, [1] start-only
        std::uint64_t steps = 0;
        std::uint64_t max_length = 0;
    };
    std::vector<TaskResult> results(task_count);

    auto run_task = [&](std::size_t task_idx) {
        const std::size_t pair = task_idx / chunks;
        const std::uint64_t chunk = task_idx % chunks;
        const std::size_t s = pair / A;
        const std::size_t a = pair % A;
        const std::uint64_t e_begin = chunk * kEpisodeChunk;
        const std::uint64_t e_end = std::min<std::uint64_t>(n_episodes, e_begin + kEpisodeChunk);
        const std::uint64_t base = stream_base_key(seed, s, a, opt.iteration);

        TaskResult& out = results[task_idx];
        out.contrib.assign(first_visit ? P : 1, detail::PairAccum{});

        if (!first_visit) {
            detail::PairAccum& acc = out.contrib[0];
            for (std::uint64_t e = e_begin; e < e_end; ++e) {
                SplitMix64 rng(mix64(base ^ e));
                const EpisodeStats stats =
                    walk_episode(tables, pi, s, a, rng, opt.episode_cap,
                                 [](std::size_t, std::size_t, double, double) {});
                acc.sum += stats.total_return;
                ++acc.count;
                out.steps += stats.length;
                out.max_length = std::max(out.max_length, stats.length);
            }
        } else {
            std::vector<std::uint64_t> stamp(P, 0);
            std::vector<std::uint32_t> fv_pairs;
            std::vector<double> fv_prefix;
            for (std::uint64_t e = e_begin; e < e_end; ++e) {
                SplitMix64 rng(mix64(base ^ e));
                fv_pairs.clear();
                fv_prefix.clear();
                const EpisodeStats stats = walk_episode(
                    tables, pi, s, a, rng, opt.episode_cap,
                    [&](std::size_t cs, std::size_t ca, double, double before) {
                        const std::size_t p = cs * A + ca;
                        if (stamp[p] != e + 1) {
                            stamp[p] = e + 1;
                            fv_pairs.push_back(static_cast<std::uint32_t>(p));
                            fv_prefix.push_back(before);
                        }
                    });
                for (std::size_t i = 0; i < fv_pairs.size(); ++i) {
                    detail::PairAccum& acc = out.contrib[fv_pairs[i]];
                    acc.sum += stats.total_return - fv_prefix[i];
                    ++acc.count;
                }
                out.steps += stats.length;
                out.max_length = std::max(out.max_length, stats.length);
            }
        }
    };

    if (opt.sink) {
        // Dump mode: walk tasks strictly in canonical order, replaying each
        // episode into a full trajectory before accumulating it.
        for (std::size_t task_idx = 0; task_idx < task_count; ++task_idx) {
            const std::size_t pair = task_idx / chunks;
            const std::uint64_t chunk = task_idx % chunks;
            const std::size_t s = pair / A;
            const std::size_t a = pair % A;
            const std::uint64_t e_begin = chunk * kEpisodeChunk;
            const std::uint64_t e_end =
                std::min<std::uint64_t>(n_episodes, e_begin + kEpisodeChunk);
            const std::uint64_t base = stream_base_key(seed, s, a, opt.iteration);

            TaskResult& out = results[task_idx];
            out.contrib.assign(first_visit ? P : 1, detail::PairAccum{});
            std::vector<std::uint64_t> stamp(first_visit ? P : 0, 0);
            for (std::uint64_t e = e_begin; e < e_end; ++e) {
                SplitMix64 rng(mix64(base ^ e));
                const Trajectory traj = sample_episode(tables, pi, s, a, rng, opt.episode_cap);
                opt.sink(traj);
                if (!first_visit) {
                    out.contrib[0].sum += traj.total_return;
                    ++out.contrib[0].count;
                } else {
                    double before = 0.0;
                    for (const auto& step : traj.steps) {
                        const std::size_t p = step.state * A + step.action;
                        if (stamp[p] != e + 1) {
                            stamp[p] = e + 1;
                            out.contrib[p].sum += traj.total_return - before;
                            ++out.contrib[p].count;
                        }
                        before += step.reward;
                    }
                }
                out.steps += traj.length();
                out.max_length = std::max<std::uint64_t>(out.max_length, traj.length());
            }
        }
    } else {
        detail::run_tasks(task_count, std::max(1u, opt.threads), run_task);
    }

    // Canonical merge: task index order defines the floating-point sums.
    MonteCarloResult res;
    res.counts.assign(P, 0);
    std::vector<double> sums(P, 0.0);
    for (std::size_t task_idx = 0; task_idx < task_count; ++task_idx) {
        const TaskResult& t = results[task_idx];
        if (first_visit) {
            for (std::size_t p = 0; p < P; ++p) {
                sums[p] += t.contrib[p].sum;
                res.counts[p] += t.contrib[p].count;
            }
        } else {
            const std::size_t pair = task_idx / chunks;
            sums[pair] += t.contrib[0].sum;
            res.counts[pair] += t.contrib[0].count;
        }
        res.steps += t.steps;
        res.max_length = std::max(res.max_length, t.max_length);
    }
    res.episodes = static_cast<std::uint64_t>(P) * n_episodes;
    res.q = QTable(S, A, 0.0);
    for (std::size_t p = 0; p < P; ++p)
        res.q.value[p] = sums[p] / static_cast<double>(res.counts[p]);
    return res;
}

}  // namespace sspmc
