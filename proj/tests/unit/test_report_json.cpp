#include "helpers.hpp"

#include <sspmc/report_json.hpp>

using namespace sspmc;
using namespace sspmc::testing;

TEST_CASE("validation report serializes all fields", "[report]") {
    const json j = validate(chain2());
    CHECK(j.at("stochastic_ok") == true);
    CHECK(j.at("reward_range_ok") == true);
    CHECK(j.at("all_policies_proper") == true);
    CHECK(j.at("survival_profile").size() == 3);
    CHECK(j.at("messages").empty());
}

TEST_CASE("schedule report serializes every derived constant", "[report]") {
    const json j = derive_schedule(chain2(), kEtaStar, 0.2);
    CHECK_THAT(j.at("w")[0].get<double>(), Catch::Matchers::WithinAbs(3.0, 1e-12));
    CHECK_THAT(j.at("w")[1].get<double>(), Catch::Matchers::WithinAbs(2.0, 1e-12));
    CHECK_THAT(j.at("w_inf").get<double>(), Catch::Matchers::WithinAbs(3.0, 1e-12));
    CHECK(j.at("k_eta") == 3);
    CHECK(j.at("k_star") == 3);
    CHECK_THAT(j.at("delta_star").get<double>(), Catch::Matchers::WithinAbs(0.1, 1e-9));
    CHECK_THAT(j.at("delta_min").get<double>(), Catch::Matchers::WithinAbs(0.1, 1e-9));
    CHECK(j.at("L0") == 21);
    CHECK(j.at("L_star") == 37);
    CHECK(j.at("N_delta") == 2679906);
    CHECK(j.contains("L_eta"));
    CHECK(j.contains("zeta"));
    CHECK(j.contains("T0"));
    CHECK(j.at("eta") == kEtaStar);
    CHECK(j.at("delta_confidence") == 0.2);
}

TEST_CASE("overridden minimum gap is echoed in the report", "[report]") {
    ScheduleOverrides overrides;
    overrides.delta_min = 0.07;
    const json j = derive_schedule(chain2(), kEtaStar, 0.2, overrides);
    CHECK(j.at("delta_min") == 0.07);
}

TEST_CASE("check results expose trial metadata only when statistical", "[report]") {
    const json det = check_oracle(chain2());
    CHECK(det.at("kind") == "deterministic");
    CHECK_FALSE(det.contains("trials"));
    CHECK_FALSE(det.contains("seed"));
    CHECK(det.at("passed") == true);
    CHECK(det.at("observed").contains("max_pairwise_diff"));
    CHECK(det.at("bound").contains("tolerance"));

    const json stat = check_theorem1(bandit1(), 0.2, 100, 8);
    CHECK(stat.at("kind") == "statistical");
    CHECK(stat.at("trials") == 100);
    CHECK(stat.at("seed") == 8);
}

TEST_CASE("run reports serialize per-iteration history", "[report]") {
    MCESConfig config;
    config.L = 2;
    config.N = 20;
    config.seed = 12;
    const json bare = run_mces(chain2(), config);
    CHECK(bare.at("final_policy").is_array());
    CHECK(bare.at("total_episodes") == 160);
    REQUIRE(bare.at("per_iteration").size() == 2);
    CHECK_FALSE(bare.at("per_iteration")[0].contains("q"));

    config.keep_history = true;
    const json full = run_mces(chain2(), config);
    REQUIRE(full.at("per_iteration")[0].contains("q"));
    CHECK(full.at("per_iteration")[0]["q"].size() == 2);  // one row per state

    const json cfg = mces_config_to_json(config);
    CHECK(cfg.at("L") == 2);
    CHECK(cfg.at("N") == 20);
    CHECK(cfg.at("keep_history") == true);
    CHECK_FALSE(cfg.contains("initial_q"));
}

TEST_CASE("qtable serialization is row major", "[report]") {
    QTable q(2, 2, 0.0);
    q(0, 1) = 1.5;
    q(1, 0) = -2.0;
    const json j = qtable_to_json(q);
    CHECK(j == json::array({{0.0, 1.5}, {-2.0, 0.0}}));
}
