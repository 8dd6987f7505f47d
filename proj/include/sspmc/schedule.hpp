#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>

#include "sspmc/errors.hpp"
#include "sspmc/exact.hpp"
#include "sspmc/mdp.hpp"

namespace sspmc {

/// Canonical survival level eta* = 1 - 1/e used by the reference horizon.
inline const double kEtaStar = 1.0 - std::exp(-1.0);

struct ScheduleOverrides {
    std::optional<double> delta_star;   // replaces the computed optimal-policy gap
    std::optional<double> delta_min;    // replaces the enumerated minimum gap
    std::optional<std::size_t> k_eta;   // replaces the reference horizon K
    std::size_t policy_budget = 1000000;  // cap for the delta_min enumeration
};

/// Every derived quantity the algorithm's parameter schedules need.
struct ScheduleReport {
    double eta = 0.0;               // survival level the caller asked about
    double delta_confidence = 0.0;  // target failure probability delta

    VTable w;            // max expected episode lengths per state
    double w_inf = 0.0;  // ||w||_inf
    double rho = 0.0;    // 1 - 1/||w||_inf

    std::size_t k_eta = 0;   // termination horizon at the requested eta
    std::size_t k_star = 0;  // reference horizon K at eta* (or the override)

    double delta_star = 0.0;  // gap of the optimal q-table
    // Minimum gap over all deterministic policies.  Filled by enumeration
    // when the policy budget allows, or by an explicit override; a report
    // constructed by other means may leave it empty.
    std::optional<double> delta_min;

    std::uint64_t L_eta = 0;   // evaluation length for the requested eta
    std::uint64_t L_star = 0;  // evaluation length at eta*
    std::uint64_t L0 = 0;      // exhaustive-start improvement-step bound

    double zeta = 0.0;         // per-iteration failure share: 1 - (1-delta)^(1/L*)
    std::uint64_t N_delta = 0; // episodes per (state, action) pair per iteration
    double T0 = 0.0;           // truncation horizon entering the deviation bound
};

namespace detail {

inline std::uint64_t ceil_to_count(double x, const char* what) {
    if (!std::isfinite(x) || x < 0.0 || x >= 9.2e18)
        throw ScheduleError(std::string(what) + " is not a representable count: " +
                            std::to_string(x));
    return static_cast<std::uint64_t>(std::ceil(x));
}

inline void require_positive_gap(double gap, const char* what) {
    if (gap == std::numeric_limits<double>::infinity())
        throw ScheduleError(std::string(what) +
                            " is infinite: environment has constant returns; any policy "
                            "optimal, no schedule needed");
    if (!std::isfinite(gap) || gap <= 0.0)
        throw ScheduleError(std::string(what) + " = " + std::to_string(gap) +
                            "; schedules need a finite positive gap (supply an override)");
}

/// L(eta) = ceil((2 K_eta / eta) * log(K_eta / (eta * delta_star))).
inline std::uint64_t evaluation_length(std::size_t k_eta, double eta, double delta_star) {
    const double k = static_cast<double>(k_eta);
    return ceil_to_count((2.0 * k / eta) * std::log(k / (eta * delta_star)),
                         "evaluation length");
}

}  // namespace detail

/// Derive the full parameter schedule for one (eta, delta) request.
///
/// The reference horizon K is the termination horizon at eta* unless
/// overridden; it drives L*, zeta, N(delta) and T0. The gaps come from exact
/// analysis unless overridden. Internal sanity invariants (w_inf <= K_eta/eta
/// and L(eta) >= L0) are checked only when K is computed, since an arbitrary
/// override can break them without being wrong for the caller's purpose.
inline ScheduleReport derive_schedule(const MdpSpec& spec, double eta, double delta,
                                      const ScheduleOverrides& overrides = {}) {
    require_undiscounted(spec);
    if (!(eta > 0.0 && eta < 1.0))
        throw ScheduleError("eta must lie in (0, 1), got " + std::to_string(eta));
    if (!(delta > 0.0 && delta < 1.0))
        throw ScheduleError("delta must lie in (0, 1), got " + std::to_string(delta));

    ScheduleReport rep;
    rep.eta = eta;
    rep.delta_confidence = delta;

    const LengthProfile lengths = max_expected_lengths(spec);
    rep.w = lengths.w;
    rep.w_inf = lengths.w_inf;
    rep.rho = lengths.rho;

    const bool k_overridden = overrides.k_eta.has_value();
    if (k_overridden) {
        rep.k_star = *overrides.k_eta;
        rep.k_eta = (eta == kEtaStar) ? rep.k_star : termination_horizon(spec, eta);
    } else {
        rep.k_eta = termination_horizon(spec, eta);
        rep.k_star = (eta == kEtaStar) ? rep.k_eta : termination_horizon(spec, kEtaStar);
    }
    if (rep.k_star == 0) throw ScheduleError("reference horizon K must be positive");

    rep.delta_star = overrides.delta_star ? *overrides.delta_star : gap_star(spec);
    detail::require_positive_gap(rep.delta_star, "delta_star");
    rep.delta_min = overrides.delta_min ? *overrides.delta_min
                                        : gap_min(spec, overrides.policy_budget);
    detail::require_positive_gap(*rep.delta_min, "delta_min");

    rep.L_eta = detail::evaluation_length(rep.k_eta, eta, rep.delta_star);
    rep.L_star = detail::evaluation_length(rep.k_star, kEtaStar, rep.delta_star);
    rep.L0 = detail::ceil_to_count(2.0 * rep.w_inf * std::log(rep.w_inf / rep.delta_star),
                                   "improvement-step bound L0");
    if (rep.L_star < 1)
        throw ScheduleError("degenerate schedule: L* = 0 (delta_star too close to K/eta*)");

    rep.zeta = 1.0 - std::pow(1.0 - delta, 1.0 / static_cast<double>(rep.L_star));

    const double K = static_cast<double>(rep.k_star);
    const double SA = static_cast<double>(spec.num_states() * spec.num_actions());
    const double log_term = std::log(2.0 * SA / rep.zeta);
    rep.N_delta = detail::ceil_to_count(
        (8.0 * K * K / (*rep.delta_min * *rep.delta_min)) * log_term * log_term * log_term,
        "episode count N");
    rep.T0 = 2.0 * K * std::log(4.0 * SA / rep.zeta);

    if (!k_overridden) {
        if (rep.w_inf > static_cast<double>(rep.k_eta) / eta + 1e-9)
            throw ScheduleError("internal invariant failed: ||w||_inf exceeds K_eta/eta");
        if (rep.L_eta < rep.L0)
            throw ScheduleError("internal invariant failed: L(eta) < L0");
    }
    return rep;
}

}  // namespace sspmc
