#include "rcmdp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

#include "rcmdp/risk.hpp"

namespace rcmdp {

std::optional<int> ThresholdGrid::exact_index(int k, int x, double r) const {
    const auto& ns = at(k, x);
    auto it = std::lower_bound(ns.begin(), ns.end(), r - kNodeTol);
    if (it == ns.end() || std::abs(*it - r) > kNodeTol) return std::nullopt;
    return static_cast<int>(it - ns.begin());
}

std::optional<int> ThresholdGrid::floor_index(int k, int x, double r) const {
    const auto& ns = at(k, x);
    auto it = std::upper_bound(ns.begin(), ns.end(), r + kIntervalTol);
    if (it == ns.begin()) return std::nullopt;
    return static_cast<int>(it - ns.begin()) - 1;
}

namespace {

// Breakpoint injection caps. Breakpoints are the one-lookahead images
// d(x,u) + rho(r') over combinations of the successor stage's own breakpoint
// nodes, so exact feasibility budgets propagate backward (for deterministic
// rows and the expectation measure these are exactly the d-sums). The sets
// are capped to keep grids bounded on large instances; past the caps the
// grid falls back to interval-endpoint combinations.
constexpr size_t kMaxBreakpointSet = 512;
constexpr size_t kMaxBreakpointCombos = 1 << 14;

struct StageNodes {
    std::vector<double> nodes;
    std::vector<double> breakpoints;  // endpoints plus surviving injections
};

StageNodes stage_nodes(const ProblemSpec& spec, const FeasibilityTables& tables,
                       const std::vector<std::vector<double>>& next_breakpoints, int k, int x,
                       int count, std::span<const double> extra) {
    const double lo = tables.min_risk[k][x];
    const double hi = tables.upper_bound[k];
    if (hi - lo <= kNodeTol) return {{lo}, {lo}};

    std::vector<double> pts;
    pts.reserve(count + 8);
    for (int i = 0; i < count; ++i) pts.push_back(lo + (hi - lo) * i / (count - 1));
    pts.front() = lo;
    pts.back() = hi;

    std::vector<double> injected;
    auto inject = [&](double v) {
        if (v > lo + kNodeTol && v < hi - kNodeTol) injected.push_back(v);
    };

    for (int y = 0; y < spec.num_states; ++y) inject(tables.min_risk[k][y]);

    std::vector<double> nv(spec.num_states, 0.0);
    for (size_t s = 0; s < spec.admissible[x].size(); ++s) {
        int u = spec.admissible[x][s];
        const auto& row = spec.kernel[x][s];
        std::vector<int> succ;
        for (int y = 0; y < spec.num_states; ++y)
            if (row[y] > 0.0) succ.push_back(y);

        // Candidate continuation values per successor: its breakpoint set,
        // or just the interval endpoints when the product would blow up.
        std::vector<const std::vector<double>*> source(succ.size());
        std::vector<std::vector<double>> endpoints(succ.size());
        double combos = 1.0;
        for (size_t j = 0; j < succ.size(); ++j)
            combos *= static_cast<double>(next_breakpoints[succ[j]].size());
        for (size_t j = 0; j < succ.size(); ++j) {
            if (combos <= static_cast<double>(kMaxBreakpointCombos)) {
                source[j] = &next_breakpoints[succ[j]];
            } else {
                endpoints[j] = {tables.min_risk[k + 1][succ[j]], tables.upper_bound[k + 1]};
                source[j] = &endpoints[j];
            }
        }

        std::vector<size_t> idx(succ.size(), 0);
        while (true) {
            for (size_t j = 0; j < succ.size(); ++j) nv[succ[j]] = (*source[j])[idx[j]];
            inject(spec.constraint_cost[x][s] + one_step_risk(spec, spec.risk, x, u, nv));
            int pos = static_cast<int>(succ.size()) - 1;
            while (pos >= 0) {
                if (++idx[pos] < source[pos]->size()) break;
                idx[pos] = 0;
                --pos;
            }
            if (pos < 0) break;
        }
    }

    for (double v : extra) inject(v);

    std::sort(injected.begin(), injected.end());
    if (injected.size() > kMaxBreakpointSet) injected.resize(kMaxBreakpointSet);

    pts.insert(pts.end(), injected.begin(), injected.end());
    std::sort(pts.begin(), pts.end());
    StageNodes out;
    out.nodes.reserve(pts.size());
    for (double v : pts)
        if (out.nodes.empty() || v > out.nodes.back() + kNodeTol) out.nodes.push_back(v);
    if (out.nodes.back() != hi) {
        if (hi - out.nodes.back() <= kNodeTol)
            out.nodes.back() = hi;
        else
            out.nodes.push_back(hi);
    }

    out.breakpoints.push_back(lo);
    for (double v : injected)
        if (v > out.breakpoints.back() + kNodeTol) out.breakpoints.push_back(v);
    out.breakpoints.push_back(hi);
    return out;
}

}  // namespace

ThresholdGrid build_grid(const ProblemSpec& spec, const FeasibilityTables& tables,
                         int nodes_per_interval, std::span<const double> stage0_extra) {
    if (nodes_per_interval < 1)
        throw std::invalid_argument("nodes_per_interval must be at least 1");
    int count = std::max(nodes_per_interval, 2);

    ThresholdGrid grid;
    int N = spec.horizon;
    grid.nodes.resize(N + 1);
    grid.nodes[N].assign(spec.num_states, {0.0});
    std::vector<std::vector<double>> next_breakpoints(spec.num_states, {0.0});
    for (int k = N - 1; k >= 0; --k) {
        grid.nodes[k].resize(spec.num_states);
        std::vector<std::vector<double>> breakpoints(spec.num_states);
        for (int x = 0; x < spec.num_states; ++x) {
            StageNodes built =
                stage_nodes(spec, tables, next_breakpoints, k, x, count,
                            k == 0 ? stage0_extra : std::span<const double>{});
            grid.nodes[k][x] = std::move(built.nodes);
            breakpoints[x] = std::move(built.breakpoints);
        }
        next_breakpoints = std::move(breakpoints);
    }
    return grid;
}

namespace {

struct BellmanScratch {
    std::vector<double> next_values;
    std::vector<int> succ;
    std::vector<int> idx;
    // Pruned search only: per successor position, the ascending node indices
    // that start a new value plateau (the value table is a step function in
    // the threshold, and within a plateau the smallest node dominates).
    std::vector<std::vector<int>> candidates;
    std::vector<int> pos;
};

struct ControlContext {
    const ProblemSpec* spec;
    const ThresholdGrid* grid;
    const std::vector<std::vector<double>>* v_next;
    int k = 0;
    int x = 0;
    int u = 0;
    const std::vector<double>* row = nullptr;
    double stage_c = 0.0;
    double budget = 0.0;  // r - d(x,u)
    double sentinel = 0.0;
};

// Objective of the assignment currently in scratch.idx; infinity stands in
// for a sentinel continuation.
double assignment_cost(const ControlContext& ctx, const BellmanScratch& scratch) {
    double obj = ctx.stage_c;
    for (size_t j = 0; j < scratch.succ.size(); ++j) {
        int y = scratch.succ[j];
        double v = (*ctx.v_next)[y][scratch.idx[j]];
        if (v == ctx.sentinel) return std::numeric_limits<double>::infinity();
        obj += (*ctx.row)[y] * v;
    }
    return obj;
}

void record_candidate(const ControlContext& ctx, const BellmanScratch& scratch, double obj,
                      double& best, std::optional<FeasiblePair>& argmin) {
    if (obj >= best) return;
    best = obj;
    if (!argmin) argmin.emplace();
    argmin->control = ctx.u;
    argmin->next_node.assign(ctx.spec->num_states, 0);
    for (size_t j = 0; j < scratch.succ.size(); ++j)
        argmin->next_node[scratch.succ[j]] = scratch.idx[j];
}

// Exhaustive product enumeration in lexicographic order over the successor
// node indices (state-ascending, index-ascending), so the first strict
// improvement realizes the smallest-control, lexicographically-smallest-r'
// tie-break.
void enumerate_exhaustive(const ControlContext& ctx, BellmanScratch& scratch, double& best,
                          std::optional<FeasiblePair>& argmin) {
    const auto& grids = ctx.grid->nodes[ctx.k + 1];
    scratch.idx.assign(scratch.succ.size(), 0);
    while (true) {
        double obj = assignment_cost(ctx, scratch);
        if (obj < best) {
            for (size_t j = 0; j < scratch.succ.size(); ++j) {
                int y = scratch.succ[j];
                scratch.next_values[y] = grids[y][scratch.idx[j]];
            }
            double rho =
                one_step_risk(*ctx.spec, ctx.spec->risk, ctx.x, ctx.u, scratch.next_values);
            if (rho <= ctx.budget + kFeasibilityTol)
                record_candidate(ctx, scratch, obj, best, argmin);
        }
        int pos = static_cast<int>(scratch.succ.size()) - 1;
        while (pos >= 0) {
            int y = scratch.succ[pos];
            if (++scratch.idx[pos] < static_cast<int>(grids[y].size())) break;
            scratch.idx[pos] = 0;
            --pos;
        }
        if (pos < 0) break;
    }
}

enum class SearchStatus { pruned, collapsed, explored };

// Risk of the assignment "components < depth as fixed by ancestors,
// component depth at candidate position p (skipped when p < 0), components
// above depth all at their lowest or highest candidate".
double rho_filled(const ControlContext& ctx, BellmanScratch& scratch, size_t depth, int p,
                  bool rest_max) {
    const auto& grids = ctx.grid->nodes[ctx.k + 1];
    size_t from = depth;
    if (p >= 0) {
        int y = scratch.succ[depth];
        scratch.next_values[y] = grids[y][scratch.candidates[depth][p]];
        from = depth + 1;
    }
    for (size_t t = from; t < scratch.succ.size(); ++t) {
        int y = scratch.succ[t];
        const auto& cand = scratch.candidates[t];
        scratch.next_values[y] = grids[y][rest_max ? cand.back() : cand.front()];
    }
    return one_step_risk(*ctx.spec, ctx.spec->risk, ctx.x, ctx.u, scratch.next_values);
}

// Frontier search over the candidate product. Per successor only the first
// node of each value plateau is a candidate: within a plateau the objective
// is constant and the smallest threshold is easiest to afford. The value
// table is non-increasing in every threshold coordinate and the risk is
// non-decreasing in each, so at every level only a contiguous band of
// candidates can lie on the feasibility frontier: below it the all-max
// completion is feasible (and dominates everything smaller), above it even
// the all-min completion is infeasible. Both band edges are found by
// bisection.
SearchStatus prune_rec(const ControlContext& ctx, BellmanScratch& scratch, size_t depth,
                       double& best, std::optional<FeasiblePair>& argmin) {
    const auto& grids = ctx.grid->nodes[ctx.k + 1];
    const double budget = ctx.budget + kFeasibilityTol;

    auto commit = [&](size_t t, int p) {
        scratch.pos[t] = p;
        scratch.idx[t] = scratch.candidates[t][p];
    };

    if (rho_filled(ctx, scratch, depth, -1, false) > budget) return SearchStatus::pruned;
    if (rho_filled(ctx, scratch, depth, -1, true) <= budget) {
        for (size_t t = depth; t < scratch.succ.size(); ++t)
            commit(t, static_cast<int>(scratch.candidates[t].size()) - 1);
        double obj = assignment_cost(ctx, scratch);
        if (std::isfinite(obj)) record_candidate(ctx, scratch, obj, best, argmin);
        return SearchStatus::collapsed;
    }
    if (depth == scratch.succ.size()) return SearchStatus::pruned;

    int y = scratch.succ[depth];
    const auto& cand = scratch.candidates[depth];
    int n = static_cast<int>(cand.size());

    // Highest candidate whose all-max completion stays feasible (none: -1).
    // The top candidate is known infeasible from the check above.
    int collapse_p = -1;
    if (n >= 2 && rho_filled(ctx, scratch, depth, 0, true) <= budget) {
        int lo = 0, hi = n - 2;
        while (lo < hi) {
            int mid = lo + (hi - lo + 1) / 2;
            if (rho_filled(ctx, scratch, depth, mid, true) <= budget)
                lo = mid;
            else
                hi = mid - 1;
        }
        collapse_p = lo;
    }

    // Highest candidate whose all-min completion is still feasible; position
    // 0 qualifies from the check above.
    int prune_p = 0;
    {
        int lo = 0, hi = n - 1;
        while (lo < hi) {
            int mid = lo + (hi - lo + 1) / 2;
            if (rho_filled(ctx, scratch, depth, mid, false) <= budget)
                lo = mid;
            else
                hi = mid - 1;
        }
        prune_p = lo;
    }

    // The dominating candidate below the band, unless its continuation is a
    // sentinel (then so are all smaller candidates).
    if (collapse_p >= 0 && (*ctx.v_next)[y][cand[collapse_p]] != ctx.sentinel) {
        commit(depth, collapse_p);
        for (size_t t = depth + 1; t < scratch.succ.size(); ++t)
            commit(t, static_cast<int>(scratch.candidates[t].size()) - 1);
        double obj = assignment_cost(ctx, scratch);
        if (std::isfinite(obj)) record_candidate(ctx, scratch, obj, best, argmin);
    }

    // Inside the band the child can neither immediately collapse nor prune;
    // it runs its own bisections one level down.
    for (int p = prune_p; p > collapse_p; --p) {
        if ((*ctx.v_next)[y][cand[p]] == ctx.sentinel) break;
        commit(depth, p);
        scratch.next_values[y] = grids[y][cand[p]];
        prune_rec(ctx, scratch, depth + 1, best, argmin);
    }
    scratch.next_values[y] = grids[y][cand.front()];
    return SearchStatus::explored;
}

BellmanResult bellman_node(const ProblemSpec& spec, const ThresholdGrid& grid,
                           const std::vector<std::vector<double>>& v_next, int k, int x, int node,
                           const SolverOptions& options, BellmanScratch& scratch) {
    const double r = grid.nodes[k][x][node];
    const auto& grids = grid.nodes[k + 1];

    double best = spec.sentinel;
    std::optional<FeasiblePair> argmin;

    ControlContext ctx;
    ctx.spec = &spec;
    ctx.grid = &grid;
    ctx.v_next = &v_next;
    ctx.k = k;
    ctx.x = x;
    ctx.sentinel = spec.sentinel;

    for (size_t s = 0; s < spec.admissible[x].size(); ++s) {
        ctx.u = spec.admissible[x][s];
        ctx.row = &spec.kernel[x][s];
        ctx.stage_c = spec.stage_cost[x][s];
        ctx.budget = r - spec.constraint_cost[x][s];

        scratch.succ.clear();
        for (int y = 0; y < spec.num_states; ++y)
            if ((*ctx.row)[y] > 0.0) scratch.succ.push_back(y);

        scratch.next_values.assign(spec.num_states, 0.0);
        for (int y = 0; y < spec.num_states; ++y) scratch.next_values[y] = grids[y].front();
        scratch.idx.assign(scratch.succ.size(), 0);

        if (!options.prune) {
            enumerate_exhaustive(ctx, scratch, best, argmin);
        } else {
            bool any_finite_continuation = true;
            for (int y : scratch.succ)
                if (v_next[y].back() == spec.sentinel) {
                    any_finite_continuation = false;
                    break;
                }
            if (any_finite_continuation) {
                scratch.candidates.resize(scratch.succ.size());
                scratch.pos.assign(scratch.succ.size(), 0);
                for (size_t j = 0; j < scratch.succ.size(); ++j) {
                    int y = scratch.succ[j];
                    auto& cand = scratch.candidates[j];
                    cand.clear();
                    cand.push_back(0);
                    for (size_t i = 1; i < v_next[y].size(); ++i)
                        if (v_next[y][i] != v_next[y][i - 1]) cand.push_back(static_cast<int>(i));
                }
                prune_rec(ctx, scratch, 0, best, argmin);
            }
        }
    }

    if (!argmin) return BellmanResult{spec.sentinel, std::nullopt};
    return BellmanResult{best, std::move(argmin)};
}

}  // namespace

BellmanResult bellman(const ProblemSpec& spec, const ThresholdGrid& grid,
                      const std::vector<std::vector<double>>& v_next, int k, int x, double r,
                      const SolverOptions& options) {
    if (k < 0 || k >= grid.horizon()) throw std::out_of_range("stage outside [0, horizon)");
    if (x < 0 || x >= spec.num_states) throw std::out_of_range("state outside S");
    // Below the feasible interval no pair can satisfy the filter; that is an
    // answer, not a lookup failure.
    if (r < grid.at(k, x).front() - kIntervalTol)
        return BellmanResult{spec.sentinel, std::nullopt};
    auto node = grid.exact_index(k, x, r);
    if (!node) {
        char buf[128];
        std::snprintf(buf, sizeof(buf),
                      "threshold %.17g is not a grid node at stage %d, state %d", r, k, x);
        throw grid_lookup_error(buf);
    }
    BellmanScratch scratch;
    return bellman_node(spec, grid, v_next, k, x, *node, options, scratch);
}

Solution solve(const ProblemSpec& spec, const ThresholdGrid& grid, const SolverOptions& options) {
    int N = spec.horizon;
    Solution sol;
    sol.grid = grid;
    sol.values.sentinel = spec.sentinel;
    sol.values.v.resize(N + 1);
    sol.policy.entries.resize(N);

    sol.values.v[N].resize(spec.num_states);
    for (int x = 0; x < spec.num_states; ++x)
        sol.values.v[N][x].assign(grid.nodes[N][x].size(), 0.0);

    BellmanScratch scratch;
    for (int k = N - 1; k >= 0; --k) {
        sol.values.v[k].resize(spec.num_states);
        sol.policy.entries[k].resize(spec.num_states);
        for (int x = 0; x < spec.num_states; ++x) {
            int nodes = static_cast<int>(grid.nodes[k][x].size());
            sol.values.v[k][x].resize(nodes);
            sol.policy.entries[k][x].resize(nodes);
            for (int i = 0; i < nodes; ++i) {
                BellmanResult res =
                    bellman_node(spec, grid, sol.values.v[k + 1], k, x, i, options, scratch);
                sol.values.v[k][x][i] = res.value;
                sol.policy.entries[k][x][i] = std::move(res.argmin);
            }
            for (int i = 0; i + 1 < nodes; ++i)
                if (sol.values.v[k][x][i + 1] > sol.values.v[k][x][i])
                    throw std::logic_error(
                        "value table increased along the threshold grid; solver invariant broken");
        }
    }

    sol.initial_state = spec.initial_state;
    sol.requested_threshold = spec.initial_threshold;
    double upper = grid.nodes[0][spec.initial_state].back();
    sol.used_threshold = sol.requested_threshold;
    if (sol.requested_threshold > upper) {
        sol.used_threshold = upper;
        sol.clamped = true;
    }
    auto node = grid.floor_index(0, spec.initial_state, sol.used_threshold);
    sol.headline_node = node ? *node : -1;
    sol.value = node ? sol.values.at(0, spec.initial_state, *node) : spec.sentinel;
    sol.feasible = node.has_value() && sol.value != spec.sentinel;
    return sol;
}

Solution solve(const ProblemSpec& spec, const SolverOptions& options) {
    FeasibilityTables tables = build_feasibility(spec);
    ThresholdGrid grid = build_grid(spec, tables, options.grid_nodes);
    return solve(spec, grid, options);
}

}  // namespace rcmdp
