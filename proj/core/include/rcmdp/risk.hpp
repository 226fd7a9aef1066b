#pragma once

#include <span>

#include "rcmdp/problem.hpp"
#include "rcmdp/risk_measure.hpp"

namespace rcmdp {

/// Risk of the next-state value function under the transition row of (x, u):
/// evaluates `measure` on the distribution {(next_values[y], Q(y|x,u))},
/// skipping zero-probability successors. This is the single place where the
/// Markov structure of the dynamic risk measure is realized: the one-step
/// risk depends on the future only through the value function and the
/// current transition row.
///
/// Every caller in the library (feasibility recursion, grid construction,
/// Bellman operator, nested policy risk) goes through this function, so the
/// same (x, u, next_values) always produces bit-identical results.
///
/// Throws std::invalid_argument if u is inadmissible in x.
double one_step_risk(const ProblemSpec& spec, const RiskMeasure& measure, int x, int u,
                     std::span<const double> next_values);

/// Nested multi-period risk of the constraint-cost stream under `policy`
/// from state x_k at stage k:
///
///   R(h at stage N) = 0
///   R(h at stage j) = d(x_j, u) + rho( y -> R(h + (u, y)) ),  u = policy(h)
///
/// evaluated exactly over the positive-probability history tree. The measure
/// is taken from spec.risk. Exponential in the horizon; intended for
/// verification and small instances, not for the solver's inner loops.
///
/// Throws std::runtime_error naming the sub-history if the policy is
/// undefined or inadmissible on a reachable node.
double policy_risk(const ProblemSpec& spec, const HistoryPolicy& policy, int k, int x_k);

}  // namespace rcmdp
