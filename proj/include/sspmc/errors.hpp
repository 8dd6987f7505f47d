#pragma once

#include <stdexcept>
#include <string>

namespace sspmc {

/// Structural or stochasticity problem in an MDP description (bad dimensions,
/// rows not summing to one, rewards out of range, file parse failures).
class SpecError : public std::runtime_error {
public:
    explicit SpecError(const std::string& what) : std::runtime_error(what) {}
};

/// A parameter schedule could not be derived (constant returns, bad inputs,
/// or a quantity overflowing its integer range).
class ScheduleError : public std::runtime_error {
public:
    explicit ScheduleError(const std::string& what) : std::runtime_error(what) {}
};

/// A linear solve failed in a way that indicates an improper policy
/// (singular or near-singular evaluation system).
class ImproperPolicyError : public std::runtime_error {
public:
    explicit ImproperPolicyError(const std::string& what) : std::runtime_error(what) {}
};

/// An operation refused to run because its cost estimate exceeds a budget.
/// The message carries the estimate and how to proceed.
class BudgetError : public std::runtime_error {
public:
    explicit BudgetError(const std::string& what) : std::runtime_error(what) {}
};

/// A sampled episode exceeded the hard safety cap. Episodes are never
/// truncated silently; hitting the cap is always a fault.
class EpisodeCapError : public std::runtime_error {
public:
    explicit EpisodeCapError(const std::string& what) : std::runtime_error(what) {}
};

/// Iterative solver did not reach its tolerance within the iteration limit.
class NonConvergenceError : public std::runtime_error {
public:
    NonConvergenceError(const std::string& what, double last_residual)
        : std::runtime_error(what), last_residual(last_residual) {}
    double last_residual;
};

}  // namespace sspmc
