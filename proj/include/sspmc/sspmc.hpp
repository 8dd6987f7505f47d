#pragma once

// Umbrella header: tabular episodic MDP model, exact analysis, schedules,
// seeded Monte Carlo sampling, the exploring-starts control loop, instance
// generators and the lemma/theorem check suite.

#include "sspmc/errors.hpp"
#include "sspmc/exact.hpp"
#include "sspmc/generators.hpp"
#include "sspmc/mces.hpp"
#include "sspmc/mdp.hpp"
#include "sspmc/mdp_io.hpp"
#include "sspmc/report_json.hpp"
#include "sspmc/rng.hpp"
#include "sspmc/sampler.hpp"
#include "sspmc/schedule.hpp"
#include "sspmc/verify.hpp"
