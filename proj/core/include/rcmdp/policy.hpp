#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "rcmdp/problem.hpp"

namespace rcmdp {

struct Solution;  // solver.hpp

/// Query for a threshold that is not a grid node. Lookups are exact-node
/// only; interpolation in the threshold coordinate is never performed.
class grid_lookup_error : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Query for a grid node whose value is the infeasibility sentinel, or a
/// threshold below the feasible interval. Distinct from grid_lookup_error:
/// the node may exist but carry no policy.
class infeasible_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A control together with a threshold assignment for every successor
/// state: next_node[y] indexes a node of the successor's stage-(k+1) grid.
/// Stored pairs satisfy d(x,u) + rho(r') <= r + kFeasibilityTol and have a
/// finite continuation value at every positive-probability successor.
/// Zero-probability successors are pinned to node 0 (the minimum risk-to-go),
/// which never affects the risk or the cost.
struct FeasiblePair {
    int control = -1;
    std::vector<int> next_node;

    friend bool operator==(const FeasiblePair&, const FeasiblePair&) = default;
};

/// Argmin table of the backward recursion: one optional FeasiblePair per
/// (stage, state, grid node), absent exactly where the value table holds the
/// sentinel.
struct PolicyTable {
    std::vector<std::vector<std::vector<std::optional<FeasiblePair>>>> entries;  // [k][x][node]

    const std::optional<FeasiblePair>& at(int k, int x, int node) const {
        return entries.at(k).at(x).at(node);
    }
};

struct RolloutStep {
    int stage = 0;
    int state = 0;
    double threshold = 0.0;
    int control = 0;
    double stage_cost = 0.0;
    double constraint_cost = 0.0;
};

/// One simulated closed-loop trajectory. The threshold column follows the
/// stored transition functions exactly: r_{k+1} = r'(x_k, r_k)(x_{k+1}),
/// starting from the (possibly snapped) initial threshold.
struct RolloutRecord {
    std::vector<RolloutStep> steps;
    int final_state = 0;
    double total_stage_cost = 0.0;
    double total_constraint_cost = 0.0;
    std::uint64_t seed = 0;

    /// Generator contract, recorded alongside exported trajectories:
    /// mt19937_64 seeded with (seed + episode); successors drawn by mapping
    /// the top 53 bits of one output word to [0,1) and inverting the
    /// cumulative kernel row.
    static constexpr const char* kGenerator = "mt19937_64";
};

struct VerifyReport {
    bool start_feasible = false;
    std::optional<double> expected_cost;
    std::optional<double> nested_risk;
    double dp_value = 0.0;  // sentinel when start is infeasible
    bool feasible = false;      // nested_risk <= r0 + kFeasibilityTol
    bool matches_value = false; // |expected_cost - dp_value| <= 1e-9
};

/// Stored minimizer at (k, x, r). r must be an exact grid node
/// (grid_lookup_error otherwise) with a feasible entry (infeasible_error
/// otherwise).
const FeasiblePair& act(const Solution& solution, int k, int x, double r);

/// Simulates one trajectory from the solved instance's initial state and
/// snapped initial threshold. Deterministic given the seed; see
/// RolloutRecord::kGenerator for the stream contract.
/// Throws infeasible_error if the start is infeasible. Reaching an
/// infeasible node mid-rollout is impossible for a solution produced by
/// solve() and raises std::logic_error.
RolloutRecord rollout(const ProblemSpec& spec, const Solution& solution, std::uint64_t seed);

/// Expands the augmented-state policy into an explicit history-dependent
/// policy over the full tree and re-evaluates it exactly: expected cost via
/// expected_cost(), nested risk via policy_risk(). No sampling.
VerifyReport verify_policy(const ProblemSpec& spec, const Solution& solution, int x0, double r0);

/// The expansion used by verify_policy, exposed for tests: the closed-loop
/// policy as a HistoryPolicy defined on the reachable tree from (0, x0) with
/// start node `node0` of the stage-0 grid.
HistoryPolicy expand_policy(const ProblemSpec& spec, const Solution& solution, int x0, int node0);

}  // namespace rcmdp
