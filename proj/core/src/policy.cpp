#include "rcmdp/policy.hpp"

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <utility>

#include "rcmdp/risk.hpp"
#include "rcmdp/solver.hpp"

namespace rcmdp {

namespace {

std::string fmt(const char* format, ...) {
    char buf[192];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

// Top 53 bits of one generator word mapped to [0, 1). Unlike the standard
// distributions this mapping is pinned by the standard, so seeded rollouts
// are bit-stable across platforms.
double draw_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int sample_row(const std::vector<double>& row, double z) {
    double cum = 0.0;
    int last_positive = -1;
    for (int y = 0; y < static_cast<int>(row.size()); ++y) {
        if (row[y] <= 0.0) continue;
        last_positive = y;
        cum += row[y];
        if (z < cum) return y;
    }
    return last_positive;  // z landed in rounding dust past the last atom
}

}  // namespace

const FeasiblePair& act(const Solution& solution, int k, int x, double r) {
    if (k < 0 || k >= solution.grid.horizon()) throw std::out_of_range("stage outside [0, horizon)");
    const auto& nodes = solution.grid.at(k, x);
    auto node = solution.grid.exact_index(k, x, r);
    if (!node) {
        if (r < nodes.front() - kIntervalTol)
            throw infeasible_error(
                fmt("threshold %.17g at stage %d, state %d is below the feasible interval", r, k,
                    x));
        throw grid_lookup_error(
            fmt("threshold %.17g is not a grid node at stage %d, state %d", r, k, x));
    }
    const auto& entry = solution.policy.at(k, x, *node);
    if (!entry)
        throw infeasible_error(
            fmt("no feasible control/threshold pair at stage %d, state %d, threshold %.17g", k, x,
                r));
    return *entry;
}

RolloutRecord rollout(const ProblemSpec& spec, const Solution& solution, std::uint64_t seed) {
    if (solution.headline_node < 0 || !solution.feasible)
        throw infeasible_error("initial threshold is infeasible; nothing to roll out");

    std::mt19937_64 rng(seed);
    RolloutRecord rec;
    rec.seed = seed;

    int x = solution.initial_state;
    int node = solution.headline_node;
    for (int k = 0; k < spec.horizon; ++k) {
        const auto& entry = solution.policy.at(k, x, node);
        if (!entry)
            throw std::logic_error(
                fmt("rollout reached an infeasible node at stage %d, state %d; "
                    "solution tables are inconsistent",
                    k, x));
        int u = entry->control;
        double r = solution.grid.at(k, x)[node];
        rec.steps.push_back({k, x, r, u, spec.c(x, u), spec.d(x, u)});
        rec.total_stage_cost += spec.c(x, u);
        rec.total_constraint_cost += spec.d(x, u);

        int y = sample_row(spec.kernel_row(x, u), draw_unit(rng));
        node = entry->next_node[y];
        x = y;
    }
    rec.final_state = x;
    return rec;
}

namespace {

void expand_rec(const ProblemSpec& spec, const Solution& solution, const History& h, int node,
                std::vector<std::pair<History, int>>& table) {
    int k = h.current_stage();
    if (k >= spec.horizon) return;
    int x = h.current_state();
    const auto& entry = solution.policy.at(k, x, node);
    if (!entry)
        throw std::logic_error(
            fmt("policy expansion reached an infeasible node at stage %d, state %d", k, x));
    int u = entry->control;
    table.emplace_back(h, u);
    const auto& row = spec.kernel_row(x, u);
    for (int y = 0; y < spec.num_states; ++y) {
        if (row[y] <= 0.0) continue;
        expand_rec(spec, solution, h.extended(u, y), entry->next_node[y], table);
    }
}

}  // namespace

HistoryPolicy expand_policy(const ProblemSpec& spec, const Solution& solution, int x0,
                            int node0) {
    std::vector<std::pair<History, int>> table;
    expand_rec(spec, solution, History(0, x0), node0, table);
    return HistoryPolicy::from_map(std::move(table));
}

VerifyReport verify_policy(const ProblemSpec& spec, const Solution& solution, int x0, double r0) {
    VerifyReport rep;
    rep.dp_value = spec.sentinel;

    double upper = solution.grid.at(0, x0).back();
    auto node = solution.grid.floor_index(0, x0, std::min(r0, upper));
    if (!node || !solution.values.is_feasible(0, x0, *node)) return rep;

    rep.start_feasible = true;
    rep.dp_value = solution.values.at(0, x0, *node);
    HistoryPolicy expanded = expand_policy(spec, solution, x0, *node);
    rep.expected_cost = expected_cost(spec, expanded, 0, x0);
    rep.nested_risk = policy_risk(spec, expanded, 0, x0);
    rep.feasible = *rep.nested_risk <= r0 + kFeasibilityTol;
    rep.matches_value = std::abs(*rep.expected_cost - rep.dp_value) <= 1e-9;
    return rep;
}

}  // namespace rcmdp
