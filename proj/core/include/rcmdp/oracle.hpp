#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "rcmdp/problem.hpp"
#include "rcmdp/risk_measure.hpp"

namespace rcmdp {

/// Thrown when the policy space exceeds the enumeration cap. The oracle
/// refuses rather than sampling: it must never be silently approximate.
class size_cap_error : public std::runtime_error {
  public:
    size_cap_error(const std::string& what, double count)
        : std::runtime_error(what), policy_count(count) {}
    double policy_count;
};

struct BruteForceOptions {
    /// Maximum number of distinct policies (restricted to the reachable
    /// tree) the oracle will enumerate.
    double policy_cap = 1e6;
};

struct BruteForceResult {
    /// Minimum expected cost among feasible policies; the spec's sentinel
    /// when none is feasible.
    double value = 0.0;
    /// One optimal policy (first in enumeration order: controls ascending,
    /// successor continuations in ascending state order). Absent when
    /// infeasible.
    std::optional<HistoryPolicy> witness;
    /// Number of policies enumerated (distinct restrictions to the
    /// reachable tree).
    double policy_count = 0.0;
};

/// Number of deterministic policies on the positive-probability reachable
/// tree from (stage k, state x). Policies differing only on nodes their own
/// choices never reach are counted once.
double policy_count(const ProblemSpec& spec, int k, int x);

/// Ground-truth solver by exhaustive enumeration of deterministic
/// history-dependent policies on the reachable tree from (0, x0). Every
/// policy is evaluated exactly (expected cost and nested risk); feasibility
/// accepts risk <= r0 + kFeasibilityTol, matching the solver's filter.
///
/// Throws size_cap_error (with the computed count) when the policy space
/// exceeds options.policy_cap.
BruteForceResult brute_force_solve(const ProblemSpec& spec, int x0, double r0,
                                   const BruteForceOptions& options = {});

/// Worst observed violation of each coherence axiom over randomized trials.
struct CoherenceReport {
    double convexity = 0.0;
    double monotonicity = 0.0;
    double translation_invariance = 0.0;
    double positive_homogeneity = 0.0;
    int trials = 0;

    double worst() const;
    bool pass(double tol = 1e-9) const { return worst() <= tol; }
};

/// Hammers a risk functional with random finite distributions on common
/// supports and measures by how much each coherence axiom fails:
///
///   convexity       rho(mix) - (w rho(Z) + (1-w) rho(W)),   mix pointwise
///   monotonicity    rho(Z) - rho(W) for Z <= W pointwise
///   translation     |rho(a + W) - (a + rho(W))|
///   homogeneity     |rho(w Z) - w rho(Z)|, w >= 0
///
/// The functional form exists so tests can plant non-coherent measures and
/// confirm the harness catches them.
CoherenceReport check_coherence(const std::function<double(const FiniteDistribution&)>& rho,
                                int trials, std::uint64_t seed);

CoherenceReport check_coherence(const RiskMeasure& measure, int trials, std::uint64_t seed);

}  // namespace rcmdp
