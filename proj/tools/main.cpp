// sspmc: command-line front end for the episodic-MDP toolkit.
//
// Subcommands: validate / analyze / solve / mces / verify / gen. Every run
// prints one JSON report carrying the fully resolved configuration; identical
// invocations with identical seeds produce byte-identical reports when
// --no-timestamp is given, regardless of --threads.
//
// Exit codes: 0 success, 1 a check evaluated false, 2 usage or input errors.

#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sspmc/sspmc.hpp"

namespace {

using sspmc::json;

constexpr int kExitSuccess = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

std::string iso_timestamp() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%FT%TZ", std::gmtime(&now));
    return buf;
}

struct CommonOptions {
    std::string mdp_path;
    std::string out_path;
    bool no_timestamp = false;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    bool seed_given = false;
    bool threads_given = false;

    void apply_env(const CLI::Option* seed_opt, const CLI::Option* threads_opt) {
        if (seed_opt->count() == 0) {
            if (const char* s = std::getenv("SSPMC_SEED")) seed = std::strtoull(s, nullptr, 10);
        }
        if (threads_opt->count() == 0) {
            if (const char* s = std::getenv("SSPMC_THREADS"))
                threads = static_cast<unsigned>(std::strtoul(s, nullptr, 10));
        }
        if (threads == 0) threads = 1;
    }
};

struct OverrideOptions {
    double delta_min = 0.0;
    double delta_star = 0.0;
    std::uint64_t k_eta = 0;
    std::uint64_t policy_budget = 1000000;
    bool has_delta_min = false;
    bool has_delta_star = false;
    bool has_k_eta = false;

    sspmc::ScheduleOverrides to_overrides() const {
        sspmc::ScheduleOverrides ov;
        if (has_delta_min) ov.delta_min = delta_min;
        if (has_delta_star) ov.delta_star = delta_star;
        if (has_k_eta) ov.k_eta = static_cast<std::size_t>(k_eta);
        ov.policy_budget = static_cast<std::size_t>(policy_budget);
        return ov;
    }

    json to_json() const {
        json j{{"policy_budget", policy_budget}};
        if (has_delta_min) j["delta_min"] = delta_min;
        if (has_delta_star) j["delta_star"] = delta_star;
        if (has_k_eta) j["k_eta"] = k_eta;
        return j;
    }
};

void add_override_flags(CLI::App* sub, OverrideOptions& ov) {
    sub->add_option("--delta-min", ov.delta_min,
                    "Externally known minimum suboptimality gap (skips enumeration)")
        ->check(CLI::PositiveNumber)
        ->each([&](const std::string&) { ov.has_delta_min = true; });
    sub->add_option("--delta-star", ov.delta_star,
                    "Externally known optimal-policy suboptimality gap")
        ->check(CLI::PositiveNumber)
        ->each([&](const std::string&) { ov.has_delta_star = true; });
    sub->add_option("--k-eta", ov.k_eta,
                    "Externally known reference termination horizon K")
        ->check(CLI::PositiveNumber)
        ->each([&](const std::string&) { ov.has_k_eta = true; });
    sub->add_option("--policy-budget", ov.policy_budget,
                    "Max policies to enumerate for gaps and oracles");
}

void emit_report(const CommonOptions& common, json report) {
    if (!common.no_timestamp) report["timestamp"] = iso_timestamp();
    const std::string text = report.dump(2) + "\n";
    if (common.out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(common.out_path);
        if (!out) throw sspmc::SpecError("cannot write report to '" + common.out_path + "'");
        out << text;
    }
}

json envelope(const std::string& command, const CommonOptions& common, json config,
              json result) {
    return json{{"command", command},
                {"input", common.mdp_path},
                {"config", std::move(config)},
                {"result", std::move(result)}};
}

int cmd_validate(const CommonOptions& common) {
    // Parse and check dimensions strictly, but report soft findings instead
    // of throwing so the flags are visible in the output.
    std::ifstream in(common.mdp_path);
    if (!in) throw sspmc::SpecError("cannot open MDP file '" + common.mdp_path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw sspmc::SpecError("cannot parse '" + common.mdp_path + "': " + e.what());
    }
    const sspmc::MdpSpec spec = sspmc::mdp_from_json(doc);
    const sspmc::ValidationReport report = sspmc::validate(spec);
    emit_report(common, envelope("validate", common, json::object(), report));
    const bool ok =
        report.stochastic_ok && report.reward_range_ok && report.all_policies_proper;
    return ok ? kExitSuccess : kExitCheckFailed;
}

int cmd_analyze(const CommonOptions& common, const OverrideOptions& ov, double eta,
                double delta) {
    const sspmc::MdpSpec spec = sspmc::load_mdp(common.mdp_path);
    const sspmc::ScheduleReport schedule =
        sspmc::derive_schedule(spec, eta, delta, ov.to_overrides());
    json config{{"eta", eta}, {"delta", delta}, {"overrides", ov.to_json()}};
    emit_report(common, envelope("analyze", common, std::move(config), schedule));
    return kExitSuccess;
}

int cmd_solve(const CommonOptions& common) {
    const sspmc::MdpSpec spec = sspmc::load_mdp(common.mdp_path);
    const auto pi = sspmc::exact_policy_iteration(spec, sspmc::Policy(spec.num_states(), 0));
    const auto vi = sspmc::value_iteration(spec, 1e-10);
    double max_diff = 0.0;
    for (std::size_t s = 0; s < spec.num_states(); ++s)
        max_diff = std::max(max_diff, std::abs(vi.v[s] - pi.final_value()[s]));

    json result{{"policy", pi.final_policy()},
                {"v_star", pi.final_value()},
                {"improvement_steps", pi.improvement_steps()},
                {"vi_iterations", vi.iterations},
                {"vi_max_diff", max_diff},
                {"solvers_agree", max_diff <= sspmc::kOracleTolerance}};
    emit_report(common, envelope("solve", common, json::object(), std::move(result)));
    return max_diff <= sspmc::kOracleTolerance ? kExitSuccess : kExitCheckFailed;
}

struct McesFlags {
    double delta = 0.1;
    std::uint64_t L = 0;  // 0 = derive from the schedule
    std::uint64_t N = 0;
    bool first_visit = false;
    bool keep_history = false;
    std::uint64_t episode_cap = sspmc::kDefaultEpisodeCap;
    std::uint64_t step_budget = sspmc::kDefaultStepBudget;
    std::string trajectory_dump;
    std::vector<int> initial_policy;
};

int cmd_mces(const CommonOptions& common, const OverrideOptions& ov, const McesFlags& flags) {
    const sspmc::MdpSpec spec = sspmc::load_mdp(common.mdp_path);

    sspmc::MCESConfig config;
    std::optional<sspmc::ScheduleReport> schedule;
    if (flags.L > 0 && flags.N > 0) {
        config.L = flags.L;
        config.N = flags.N;
    } else if (flags.L > 0 || flags.N > 0) {
        throw sspmc::SpecError("--L and --N must be given together (or neither)");
    } else {
        sspmc::DerivedConfig derived =
            sspmc::derive_config(spec, flags.delta, ov.to_overrides());
        config = derived.config;
        schedule = derived.schedule;
    }
    config.first_visit = flags.first_visit;
    config.keep_history = flags.keep_history;
    config.seed = common.seed;
    config.threads = common.threads;
    config.episode_cap = flags.episode_cap;
    config.step_budget = flags.step_budget;
    config.initial_policy = sspmc::Policy(flags.initial_policy.begin(),
                                          flags.initial_policy.end());

    std::ofstream dump;
    if (!flags.trajectory_dump.empty()) {
        dump.open(flags.trajectory_dump);
        if (!dump)
            throw sspmc::SpecError("cannot write trajectory dump to '" +
                                   flags.trajectory_dump + "'");
        config.sink = [&dump, &spec](const sspmc::Trajectory& traj) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", traj.total_return);
            dump << spec.state_names[traj.start_state] << ':'
                 << spec.action_names[traj.start_action] << '\t' << traj.length() << '\t'
                 << buf << '\n';
        };
    }

    const sspmc::MCESRunReport run = sspmc::run_mces(spec, config);
    const sspmc::VTable final_value = sspmc::exact_policy_evaluation(spec, run.final_policy);
    const auto optimal_pi =
        sspmc::exact_policy_iteration(spec, sspmc::Policy(spec.num_states(), 0));
    bool optimal = true;
    for (std::size_t s = 0; s < spec.num_states(); ++s)
        if (std::abs(final_value[s] - optimal_pi.final_value()[s]) > 1e-9) optimal = false;

    json result{{"run", run}, {"final_value", final_value}, {"final_policy_optimal", optimal}};
    if (schedule) result["schedule"] = *schedule;
    json config_json{{"mces", sspmc::mces_config_to_json(config)},
                     {"delta", flags.delta},
                     {"overrides", ov.to_json()},
                     {"trajectory_dump", flags.trajectory_dump}};
    emit_report(common, envelope("mces", common, std::move(config_json), std::move(result)));
    return kExitSuccess;
}

struct VerifyFlags {
    std::vector<std::string> checks;
    double eta = sspmc::kEtaStar;
    double delta = 0.1;
    std::uint64_t trials = 200;
    std::uint64_t n_episodes = 1000;
    double t0 = 0.0;  // 0 = derive from the schedule
    std::vector<int> policy;
    std::uint64_t horizon = 50;
    std::uint64_t starts = 50;
    std::uint64_t step_budget = sspmc::kDefaultStepBudget;
};

int cmd_verify(const CommonOptions& common, const OverrideOptions& ov,
               const VerifyFlags& flags) {
    const sspmc::MdpSpec spec = sspmc::load_mdp(common.mdp_path);
    const auto budget = static_cast<std::size_t>(ov.policy_budget);

    std::vector<sspmc::CheckResult> results;
    for (const std::string& name : flags.checks) {
        if (name == "oracle") {
            results.push_back(sspmc::check_oracle(spec, budget));
        } else if (name == "lemma1") {
            results.push_back(sspmc::check_lemma1(spec, flags.eta, budget));
        } else if (name == "lemma2") {
            results.push_back(sspmc::check_lemma2(spec, flags.eta, budget,
                                                  static_cast<std::size_t>(flags.horizon)));
        } else if (name == "lemma3") {
            sspmc::Policy pi(flags.policy.begin(), flags.policy.end());
            if (pi.empty())
                pi = sspmc::exact_policy_iteration(spec, sspmc::Policy(spec.num_states(), 0))
                         .final_policy();
            double t0 = flags.t0;
            if (t0 <= 0.0)
                t0 = sspmc::derive_schedule(spec, sspmc::kEtaStar, flags.delta,
                                            ov.to_overrides())
                         .T0;
            results.push_back(sspmc::check_lemma3(spec, pi, flags.n_episodes, t0, flags.trials,
                                                  common.seed, common.threads));
        } else if (name == "theorem1") {
            sspmc::Theorem1Options options;
            options.step_budget = flags.step_budget;
            options.threads = common.threads;
            options.overrides = ov.to_overrides();
            results.push_back(sspmc::check_theorem1(spec, flags.delta, flags.trials,
                                                    common.seed, options));
        } else if (name == "theorem2") {
            results.push_back(sspmc::check_theorem2(
                spec, budget, static_cast<std::size_t>(flags.starts), common.seed));
        } else if (name == "w_bound") {
            results.push_back(sspmc::check_w_bound(spec));
        } else {
            throw CLI::ValidationError("--check", "unknown check '" + name + "'");
        }
    }

    bool all_passed = true;
    for (const auto& r : results) all_passed = all_passed && r.passed;

    // The thread count is omitted: results do not depend on it, and reports
    // must stay byte-identical across machines with different core counts.
    json config{{"checks", flags.checks},
                {"eta", flags.eta},
                {"delta", flags.delta},
                {"trials", flags.trials},
                {"n_episodes", flags.n_episodes},
                {"t0", flags.t0},
                {"horizon", flags.horizon},
                {"starts", flags.starts},
                {"seed", common.seed},
                {"step_budget", flags.step_budget},
                {"overrides", ov.to_json()}};
    emit_report(common, envelope("verify", common, std::move(config), results));
    return all_passed ? kExitSuccess : kExitCheckFailed;
}

struct GenFlags {
    std::string family = "alpha";
    std::uint64_t S = 2;
    std::uint64_t A = 2;
    double alpha = 0.3;
    std::uint64_t layers = 3;
    std::string out_mdp;
};

int cmd_gen(const CommonOptions& common, const GenFlags& flags) {
    sspmc::GeneratorParams params;
    if (flags.family == "bandit1") {
        params.family = sspmc::Family::bandit1;
    } else if (flags.family == "chain2") {
        params.family = sspmc::Family::chain2;
    } else if (flags.family == "alpha") {
        params.family = sspmc::Family::alpha_family;
    } else if (flags.family == "layered") {
        params.family = sspmc::Family::layered_dag;
    } else {
        throw CLI::ValidationError("--family", "unknown family '" + flags.family + "'");
    }
    params.S = static_cast<std::size_t>(flags.S);
    params.A = static_cast<std::size_t>(flags.A);
    params.alpha = flags.alpha;
    params.layers = static_cast<std::size_t>(flags.layers);
    params.seed = common.seed;

    std::vector<std::string> log;
    const sspmc::MdpSpec spec = sspmc::generate(params, &log);
    if (flags.out_mdp.empty()) {
        std::cout << sspmc::mdp_to_json(spec).dump(2) << "\n";
        return kExitSuccess;
    }
    sspmc::save_mdp(spec, flags.out_mdp);
    json config{{"family", flags.family}, {"S", flags.S},           {"A", flags.A},
                {"alpha", flags.alpha},   {"layers", flags.layers}, {"seed", common.seed}};
    json result{{"path", flags.out_mdp},
                {"states", spec.num_states()},
                {"actions", spec.num_actions()},
                {"regeneration_log", log}};
    emit_report(common, envelope("gen", common, std::move(config), std::move(result)));
    return kExitSuccess;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tabular episodic MDP toolkit: exact solvers, parameter schedules,\n"
                 "seeded Monte Carlo control and property checks"};
    app.require_subcommand(1);

    CommonOptions common;
    OverrideOptions overrides;

    auto add_common = [&](CLI::App* sub, bool needs_mdp = true) {
        if (needs_mdp)
            sub->add_option("mdp", common.mdp_path, "Path to the MDP JSON file")->required();
        sub->add_option("--out", common.out_path, "Write the JSON report here (default stdout)");
        sub->add_flag("--no-timestamp", common.no_timestamp,
                      "Omit the timestamp for byte-identical reports");
        const auto* seed_opt =
            sub->add_option("--seed", common.seed, "RNG seed (env SSPMC_SEED)");
        const auto* threads_opt =
            sub->add_option("--threads", common.threads, "Worker threads (env SSPMC_THREADS)");
        sub->parse_complete_callback(
            [&common, seed_opt, threads_opt] { common.apply_env(seed_opt, threads_opt); });
    };

    CLI::App* validate = app.add_subcommand(
        "validate", "Check stochasticity, reward range and guaranteed termination");
    add_common(validate);

    double analyze_eta = sspmc::kEtaStar;
    double analyze_delta = 0.1;
    CLI::App* analyze =
        app.add_subcommand("analyze", "Derive structural constants and parameter schedules");
    add_common(analyze);
    analyze->add_option("--eta", analyze_eta, "Termination probability level in (0,1)");
    analyze->add_option("--delta", analyze_delta, "Target failure probability in (0,1)");
    add_override_flags(analyze, overrides);

    CLI::App* solve =
        app.add_subcommand("solve", "Exact optimal policy via policy iteration (cross-checked)");
    add_common(solve);

    McesFlags mces_flags;
    CLI::App* mces = app.add_subcommand(
        "mces", "Monte Carlo exploring-starts control with schedule-derived parameters");
    add_common(mces);
    mces->add_option("--delta", mces_flags.delta, "Target failure probability in (0,1)");
    mces->add_option("--L", mces_flags.L, "Manual improvement-iteration count (with --N)");
    mces->add_option("--N", mces_flags.N, "Manual episodes per pair per iteration (with --L)");
    mces->add_flag("--first-visit", mces_flags.first_visit, "First-visit estimation updates");
    mces->add_flag("--keep-history", mces_flags.keep_history,
                   "Retain per-iteration estimate snapshots in the report");
    mces->add_option("--episode-cap", mces_flags.episode_cap, "Per-episode step safety cap");
    mces->add_option("--step-budget", mces_flags.step_budget,
                     "Refuse runs whose expected step count exceeds this (0 disables)");
    mces->add_option("--trajectory-dump", mces_flags.trajectory_dump,
                     "Write every episode as start/length/return TSV (single-threaded)");
    mces->add_option("--initial-policy", mces_flags.initial_policy,
                     "Initial action index per state (default all 0)");
    add_override_flags(mces, overrides);

    VerifyFlags verify_flags;
    CLI::App* verify = app.add_subcommand("verify", "Run named property checks");
    add_common(verify);
    verify
        ->add_option("--check", verify_flags.checks,
                     "oracle | lemma1 | lemma2 | lemma3 | theorem1 | theorem2 | w_bound")
        ->required();
    verify->add_option("--eta", verify_flags.eta, "Termination probability level in (0,1)");
    verify->add_option("--delta", verify_flags.delta, "Target failure probability in (0,1)");
    verify->add_option("--trials", verify_flags.trials, "Trials for statistical checks");
    verify->add_option("--n-episodes", verify_flags.n_episodes,
                       "Episodes per pair per trial (lemma3)");
    verify->add_option("--t0", verify_flags.t0,
                       "Deviation-bound horizon (lemma3; 0 derives it from the schedule)");
    verify->add_option("--policy", verify_flags.policy,
                       "Action index per state for lemma3 (default: exact optimum)");
    verify->add_option("--horizon", verify_flags.horizon, "Tail horizon (lemma2)");
    verify->add_option("--starts", verify_flags.starts,
                       "Random initial policies when enumeration is over budget (theorem2)");
    verify->add_option("--step-budget", verify_flags.step_budget,
                       "Per-run expected-step refusal threshold (theorem1)");
    add_override_flags(verify, overrides);

    GenFlags gen_flags;
    CLI::App* gen = app.add_subcommand("gen", "Generate a seeded MDP instance");
    add_common(gen, /*needs_mdp=*/false);
    gen->add_option("--family", gen_flags.family, "bandit1 | chain2 | alpha | layered");
    gen->add_option("--S", gen_flags.S, "Number of non-terminal states");
    gen->add_option("--A", gen_flags.A, "Number of actions");
    gen->add_option("--alpha", gen_flags.alpha, "Minimum terminal mass per row (alpha family)");
    gen->add_option("--layers", gen_flags.layers, "Layer count (layered family)");
    gen->add_option("--out-mdp", gen_flags.out_mdp,
                    "Write the instance here (default: print to stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (validate->parsed()) return cmd_validate(common);
        if (analyze->parsed()) return cmd_analyze(common, overrides, analyze_eta, analyze_delta);
        if (solve->parsed()) return cmd_solve(common);
        if (mces->parsed()) return cmd_mces(common, overrides, mces_flags);
        if (verify->parsed()) return cmd_verify(common, overrides, verify_flags);
        if (gen->parsed()) return cmd_gen(common, gen_flags);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
