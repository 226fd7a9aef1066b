#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rcmdp/feasibility.hpp"
#include "rcmdp/policy.hpp"
#include "rcmdp/problem.hpp"

namespace rcmdp {

/// Slack accepted on the feasibility filter d(x,u) + rho(r') <= r.
inline constexpr double kFeasibilityTol = 1e-9;

/// Two grid nodes (or a query and a node) closer than this are the same
/// node. Injected breakpoints are deduplicated at this resolution.
inline constexpr double kNodeTol = 1e-12;

/// Per-stage, per-state discretization of the feasible threshold intervals.
/// Node lists are strictly ascending with both interval endpoints exact;
/// stage N holds the single node {0}. Degenerate intervals collapse to one
/// node.
struct ThresholdGrid {
    std::vector<std::vector<std::vector<double>>> nodes;  // [k][x][i], k = 0..N

    int horizon() const { return static_cast<int>(nodes.size()) - 1; }
    const std::vector<double>& at(int k, int x) const { return nodes.at(k).at(x); }

    /// Index of the node equal to r within kNodeTol, if any.
    std::optional<int> exact_index(int k, int x, double r) const;

    /// Index of the largest node <= r + kIntervalTol (snap-down), if any.
    std::optional<int> floor_index(int k, int x, double r) const;
};

struct SolverOptions {
    /// Nodes per non-degenerate threshold interval (>= 2 enforced).
    int grid_nodes = 101;

    /// Replace the exhaustive product enumeration of threshold functions by
    /// a frontier search that exploits monotonicity of the value table in
    /// each threshold coordinate. Exact for the optimal value; among
    /// equal-value minimizers it may store a different (Pareto-maximal)
    /// argmin than the exhaustive lexicographic tie-break.
    bool prune = false;
};

/// Uniform grids over [min_risk[k][x], upper_bound[k]] with exact endpoints,
/// sharpened by two kinds of injected nodes:
///   - the stage-k minimum risk-to-go of every state (states sharing a stage
///     often share value breakpoints), and
///   - one-lookahead images d(x,u) + rho(r') for every admissible u and every
///     combination of successor-interval endpoints, which are exactly the
///     budgets at which the feasibility filter gains or loses a pair.
/// stage0_extra values (e.g. a caller's exact initial threshold) are injected
/// into every stage-0 grid that contains them.
///
/// Throws std::invalid_argument for nodes_per_interval < 1.
ThresholdGrid build_grid(const ProblemSpec& spec, const FeasibilityTables& tables,
                         int nodes_per_interval, std::span<const double> stage0_extra = {});

/// V[k][x][node] for k = 0..N; entries equal to `sentinel` mark grid nodes
/// with no feasible control/threshold pair. Finite entries always lie in
/// [-N max|c|, N max|c|], strictly below the sentinel.
struct ValueTable {
    double sentinel = 0.0;
    std::vector<std::vector<std::vector<double>>> v;  // [k][x][node]

    double at(int k, int x, int node) const { return v.at(k).at(x).at(node); }
    bool is_feasible(int k, int x, int node) const { return at(k, x, node) != sentinel; }
};

struct BellmanResult {
    double value = 0.0;
    std::optional<FeasiblePair> argmin;
};

/// One application of the dynamic programming operator at grid node r of
/// (k, x), given the complete stage-(k+1) value slice v_next[x'][node']:
///
///   T[V](x, r) = min over feasible (u, r') of
///                c(x,u) + sum_y Q(y|x,u) V(y, r'(y))
///
/// where (u, r') is feasible iff u is admissible, every r'(y) is a
/// stage-(k+1) grid node with finite continuation value, and
/// d(x,u) + rho(r') <= r + kFeasibilityTol. Returns (sentinel, nullopt)
/// when no pair is feasible.
///
/// Minimization is exhaustive over the product of successor grids (or the
/// pruned frontier, see SolverOptions). Ties break toward the smallest
/// control index, then the lexicographically smallest r' vector.
///
/// Throws grid_lookup_error if r is not an exact grid node.
BellmanResult bellman(const ProblemSpec& spec, const ThresholdGrid& grid,
                      const std::vector<std::vector<double>>& v_next, int k, int x, double r,
                      const SolverOptions& options = {});

/// Solved instance: the grid, the value table, the argmin table, and the
/// headline query V_0(x0, r0) with its snapping/clamping outcome.
struct Solution {
    ThresholdGrid grid;
    ValueTable values;
    PolicyTable policy;

    int initial_state = 0;
    double requested_threshold = 0.0;
    /// requested_threshold clamped down to the stage-0 upper bound when it
    /// exceeds it (such thresholds are feasible but redundant).
    double used_threshold = 0.0;
    bool clamped = false;
    /// Stage-0 node the headline query snapped down to; -1 when the request
    /// lies below the feasible interval.
    int headline_node = -1;
    /// V_0(x0, snapped r0); the sentinel when headline_node is -1.
    double value = 0.0;
    bool feasible = false;
};

/// Backward value iteration from V_N = 0 through every grid node, recording
/// every argmin. Value slices are checked to be non-increasing along each
/// node list after every stage sweep (std::logic_error on violation; the
/// feasible sets are nested in r, so a violation indicates a solver bug).
Solution solve(const ProblemSpec& spec, const ThresholdGrid& grid,
               const SolverOptions& options = {});

/// build_feasibility + build_grid + solve with the spec's own threshold.
Solution solve(const ProblemSpec& spec, const SolverOptions& options = {});

}  // namespace rcmdp
