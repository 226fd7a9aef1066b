#pragma once

#include <compare>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rcmdp/risk_measure.hpp"

namespace rcmdp {

/// Row-stochasticity tolerance for kernel validation. Rows further from 1
/// than this are rejected; rows within it are accepted and renormalized at
/// load time (see io.hpp).
inline constexpr double kStochasticTol = 1e-12;

/// A finite Markov decision process with two cost layers: a stage cost c(x,u)
/// to be minimized in expectation, and a constraint cost d(x,u) whose nested
/// risk is capped by a threshold.
///
/// States and controls are dense integer indices. Kernel rows, stage costs
/// and constraint costs are stored per admissible slot only: slot s of state
/// x corresponds to control admissible[x][s], and inadmissible (x,u) pairs
/// have no storage.
struct ProblemSpec {
    int num_states = 0;
    int num_controls = 0;

    /// admissible[x] = ascending list of controls available in state x.
    std::vector<std::vector<int>> admissible;

    /// kernel[x][s][y] = Q(y | x, admissible[x][s]); each row sums to 1.
    std::vector<std::vector<std::vector<double>>> kernel;

    /// stage_cost[x][s] = c(x, admissible[x][s]).
    std::vector<std::vector<double>> stage_cost;

    /// constraint_cost[x][s] = d(x, admissible[x][s]).
    std::vector<std::vector<double>> constraint_cost;

    int horizon = 1;
    int initial_state = 0;
    double initial_threshold = 0.0;
    RiskMeasure risk = RiskMeasure::expectation();

    /// Infeasibility sentinel; must exceed horizon * max|c|.
    /// Use default_sentinel() unless a specific value is required.
    double sentinel = 1.0;

    /// Slot of control u in state x, or -1 if u is inadmissible there.
    int slot_of(int x, int u) const;

    bool is_admissible(int x, int u) const { return slot_of(x, u) >= 0; }

    double c(int x, int u) const;
    double d(int x, int u) const;
    const std::vector<double>& kernel_row(int x, int u) const;

    /// max |c(x,u)| over admissible pairs; 0 for an empty cost table.
    double max_abs_stage_cost() const;

    /// horizon * max|c| + 1, the smallest round value strictly above any
    /// achievable |total cost|.
    double default_sentinel() const { return horizon * max_abs_stage_cost() + 1.0; }
};

/// Checks every structural invariant of a ProblemSpec and returns one
/// human-readable message per violation, each naming the offending state,
/// control or row. An empty result means the spec is valid. Violations are
/// data, not exceptions: callers decide how to react.
std::vector<std::string> validate(const ProblemSpec& spec);

/// A partial trajectory (x_k, u_k, ..., x_j): the state/control history a
/// policy may condition on. states.size() == controls.size() + 1.
struct History {
    int start_stage = 0;
    std::vector<int> states;
    std::vector<int> controls;

    History() = default;
    History(int k, int x) : start_stage(k), states{x} {}

    int current_stage() const { return start_stage + static_cast<int>(controls.size()); }
    int current_state() const { return states.back(); }

    History extended(int control, int next_state) const;
    std::string to_string() const;

    friend auto operator<=>(const History&, const History&) = default;
};

/// A deterministic history-dependent policy: maps each sub-history to a
/// control, or to nothing where it is undefined. Exact tree evaluation
/// (expected_cost, policy_risk) fails loudly on reachable undefined
/// histories.
class HistoryPolicy {
  public:
    using Fn = std::function<std::optional<int>(const History&)>;

    HistoryPolicy() = default;
    explicit HistoryPolicy(Fn fn) : fn_(std::move(fn)) {}

    /// Policy playing the same control everywhere.
    static HistoryPolicy constant(int control);

    /// Markov policy: control depends on (stage, state) only.
    static HistoryPolicy stage_state(std::function<int(int stage, int state)> fn);

    /// Partial policy backed by an explicit table, e.g. an enumeration
    /// witness. Histories absent from the table are undefined.
    static HistoryPolicy from_map(std::vector<std::pair<History, int>> table);

    std::optional<int> control(const History& h) const;

  private:
    Fn fn_;
};

/// Exact expected total stage cost of `policy` from state x_k at stage k,
/// by full enumeration of the positive-probability history tree (no
/// sampling). Stage `horizon` returns 0.
///
/// Throws std::runtime_error naming the sub-history if the policy is
/// undefined or inadmissible on a reachable node.
double expected_cost(const ProblemSpec& spec, const HistoryPolicy& policy, int k, int x_k);

}  // namespace rcmdp
