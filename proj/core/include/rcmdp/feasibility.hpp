#pragma once

#include <vector>

#include "rcmdp/problem.hpp"

namespace rcmdp {

/// Membership tolerance for threshold intervals. A threshold within this
/// distance of the lower endpoint is feasible: the endpoint itself is
/// attainable and grid arithmetic must not exclude it.
inline constexpr double kIntervalTol = 1e-9;

/// Closed interval [lo, hi] of feasible constraint thresholds.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double r, double tol = kIntervalTol) const {
        return r >= lo - tol && r <= hi + tol;
    }
    bool degenerate(double tol = 0.0) const { return hi - lo <= tol; }
};

/// Stage-indexed feasibility data for the risk constraint:
///
///   min_risk[k][x]   lowest nested risk any policy can achieve from x at
///                    stage k (0 at stage N)
///   rho_max          max d(x,u) over admissible pairs; since d is
///                    deterministic given (x,u), this equals the one-step
///                    risk of d for every coherent measure
///   upper_bound[k]   (N - k) * rho_max, a policy-independent upper bound on
///                    the nested risk of any tail
///
/// The feasible threshold interval at (k, x) is [min_risk, upper_bound];
/// at stage N it collapses to {0}. Thresholds above the upper bound are
/// feasible but redundant, so queries clamp down to it.
struct FeasibilityTables {
    int horizon = 0;
    std::vector<std::vector<double>> min_risk;  // [k][x], k = 0..N
    double rho_max = 0.0;
    std::vector<double> upper_bound;  // [k], k = 0..N
};

/// Exact backward recursion for the minimum risk-to-go:
///
///   min_risk[N][x] = 0
///   min_risk[k][x] = min_u { d(x,u) + one_step_risk(x, u, min_risk[k+1]) }
///
/// No discretization is involved.
std::vector<std::vector<double>> min_risk_to_go(const ProblemSpec& spec);

/// max d(x,u) over admissible pairs.
double rho_max(const ProblemSpec& spec);

/// Builds all tables in one sweep.
FeasibilityTables build_feasibility(const ProblemSpec& spec);

/// Feasible threshold interval at (k, x); {0} at k == horizon.
/// Throws std::out_of_range for k outside [0, horizon] or x outside S.
Interval feasible_interval(const FeasibilityTables& tables, int k, int x);

}  // namespace rcmdp
