#include "rcmdp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "rcmdp/risk.hpp"
#include "rcmdp/solver.hpp"

namespace rcmdp {

namespace {

std::vector<int> successors(const ProblemSpec& spec, int x, int slot) {
    std::vector<int> succ;
    const auto& row = spec.kernel[x][slot];
    for (int y = 0; y < spec.num_states; ++y)
        if (row[y] > 0.0) succ.push_back(y);
    return succ;
}

}  // namespace

double policy_count(const ProblemSpec& spec, int k, int x) {
    int N = spec.horizon;
    std::vector<std::vector<double>> count(N + 1, std::vector<double>(spec.num_states, 1.0));
    for (int j = N - 1; j >= k; --j) {
        for (int y = 0; y < spec.num_states; ++y) {
            double total = 0.0;
            for (size_t s = 0; s < spec.admissible[y].size(); ++s) {
                double prod = 1.0;
                for (int z : successors(spec, y, s)) prod *= count[j + 1][z];
                total += prod;
            }
            count[j][y] = total;
        }
    }
    return count[k][x];
}

namespace {

// One policy restricted to the reachable subtree of (k, x): the control
// slot chosen there plus, per positive-probability successor, an index into
// the successor's own pair list.
struct Choice {
    int slot = 0;
    std::vector<int> child;
};

// Exact (cost, risk) of every policy on the subtree rooted at (k, x).
// Distinct histories with the same (k, x) have identical pair sets but
// combine independently at their parent, so memoizing per (k, x) loses
// nothing.
struct NodePairs {
    std::vector<double> cost;
    std::vector<double> risk;
    std::vector<Choice> choice;
};

// Per-stage reachability from (0, x0) under any admissible control sequence.
// Only reachable (k, x) cells are enumerated: their pair counts are bounded
// by the root count checked against the cap, unreachable ones are not.
std::vector<std::vector<bool>> reachable_states(const ProblemSpec& spec, int x0) {
    std::vector<std::vector<bool>> reach(spec.horizon + 1,
                                         std::vector<bool>(spec.num_states, false));
    reach[0][x0] = true;
    for (int k = 0; k < spec.horizon; ++k)
        for (int x = 0; x < spec.num_states; ++x) {
            if (!reach[k][x]) continue;
            for (size_t s = 0; s < spec.admissible[x].size(); ++s)
                for (int y : successors(spec, x, s)) reach[k + 1][y] = true;
        }
    return reach;
}

std::vector<std::vector<NodePairs>> enumerate_pairs(const ProblemSpec& spec, int x0) {
    int N = spec.horizon;
    auto reach = reachable_states(spec, x0);
    std::vector<std::vector<NodePairs>> table(N + 1, std::vector<NodePairs>(spec.num_states));
    for (int x = 0; x < spec.num_states; ++x) {
        table[N][x].cost = {0.0};
        table[N][x].risk = {0.0};
        table[N][x].choice = {Choice{-1, {}}};
    }

    std::vector<double> tail(spec.num_states, 0.0);
    for (int k = N - 1; k >= 0; --k) {
        for (int x = 0; x < spec.num_states; ++x) {
            if (!reach[k][x]) continue;
            NodePairs& out = table[k][x];
            for (size_t s = 0; s < spec.admissible[x].size(); ++s) {
                int u = spec.admissible[x][s];
                const auto& row = spec.kernel[x][s];
                std::vector<int> succ = successors(spec, x, s);

                std::vector<int> idx(succ.size(), 0);
                while (true) {
                    double cost = spec.stage_cost[x][s];
                    std::fill(tail.begin(), tail.end(), 0.0);
                    for (size_t j = 0; j < succ.size(); ++j) {
                        const NodePairs& child = table[k + 1][succ[j]];
                        cost += row[succ[j]] * child.cost[idx[j]];
                        tail[succ[j]] = child.risk[idx[j]];
                    }
                    out.cost.push_back(cost);
                    out.risk.push_back(spec.constraint_cost[x][s] +
                                       one_step_risk(spec, spec.risk, x, u, tail));
                    out.choice.push_back(Choice{static_cast<int>(s), idx});

                    int pos = static_cast<int>(succ.size()) - 1;
                    while (pos >= 0) {
                        if (++idx[pos] <
                            static_cast<int>(table[k + 1][succ[pos]].cost.size()))
                            break;
                        idx[pos] = 0;
                        --pos;
                    }
                    if (pos < 0) break;
                }
            }
        }
    }
    return table;
}

void witness_rec(const ProblemSpec& spec, const std::vector<std::vector<NodePairs>>& table,
                 const History& h, int pair_index,
                 std::vector<std::pair<History, int>>& out) {
    int k = h.current_stage();
    if (k >= spec.horizon) return;
    int x = h.current_state();
    const Choice& ch = table[k][x].choice[pair_index];
    int u = spec.admissible[x][ch.slot];
    out.emplace_back(h, u);
    std::vector<int> succ = successors(spec, x, ch.slot);
    for (size_t j = 0; j < succ.size(); ++j)
        witness_rec(spec, table, h.extended(u, succ[j]), ch.child[j], out);
}

}  // namespace

BruteForceResult brute_force_solve(const ProblemSpec& spec, int x0, double r0,
                                   const BruteForceOptions& options) {
    if (x0 < 0 || x0 >= spec.num_states) throw std::out_of_range("state outside S");
    double total = policy_count(spec, 0, x0);
    if (!(total <= options.policy_cap)) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "%.0f policies on the reachable tree exceed the enumeration cap %.0f",
                      total, options.policy_cap);
        throw size_cap_error(buf, total);
    }

    auto table = enumerate_pairs(spec, x0);
    const NodePairs& root = table[0][x0];

    BruteForceResult result;
    result.policy_count = total;
    int best = -1;
    for (size_t i = 0; i < root.cost.size(); ++i) {
        if (root.risk[i] > r0 + kFeasibilityTol) continue;
        if (best < 0 || root.cost[i] < root.cost[best]) best = static_cast<int>(i);
    }
    if (best < 0) {
        result.value = spec.sentinel;
        return result;
    }
    result.value = root.cost[best];
    std::vector<std::pair<History, int>> moves;
    witness_rec(spec, table, History(0, x0), best, moves);
    result.witness = HistoryPolicy::from_map(std::move(moves));
    return result;
}

double CoherenceReport::worst() const {
    return std::max(std::max(convexity, monotonicity),
                    std::max(translation_invariance, positive_homogeneity));
}

CoherenceReport check_coherence(const std::function<double(const FiniteDistribution&)>& rho,
                                int trials, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto unit = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(); };

    CoherenceReport report;
    report.trials = trials;
    for (int t = 0; t < trials; ++t) {
        int n = 1 + static_cast<int>(rng() % 8);
        FiniteDistribution z, w;
        z.values.resize(n);
        w.values.resize(n);
        z.probs.resize(n);
        double mass = 0.0;
        for (int i = 0; i < n; ++i) {
            z.values[i] = uniform(-5.0, 5.0);
            w.values[i] = uniform(-5.0, 5.0);
            double e = -std::log(std::max(unit(), 1e-300));
            z.probs[i] = e;
            mass += e;
        }
        for (int i = 0; i < n; ++i) z.probs[i] /= mass;
        w.probs = z.probs;

        double rho_z = rho(z);
        double rho_w = rho(w);

        // Convexity on the common probability space.
        double mix_weight = unit();
        FiniteDistribution mix = z;
        for (int i = 0; i < n; ++i)
            mix.values[i] = mix_weight * z.values[i] + (1.0 - mix_weight) * w.values[i];
        report.convexity = std::max(
            report.convexity, rho(mix) - (mix_weight * rho_z + (1.0 - mix_weight) * rho_w));

        // Monotonicity: dominate z pointwise.
        FiniteDistribution dom = z;
        for (int i = 0; i < n; ++i) dom.values[i] = z.values[i] + uniform(0.0, 3.0);
        report.monotonicity = std::max(report.monotonicity, rho_z - rho(dom));

        // Translation invariance: shift by a deterministic amount.
        double shift = uniform(-5.0, 5.0);
        FiniteDistribution shifted = w;
        for (int i = 0; i < n; ++i) shifted.values[i] = w.values[i] + shift;
        report.translation_invariance =
            std::max(report.translation_invariance, std::abs(rho(shifted) - (shift + rho_w)));

        // Positive homogeneity.
        double scale = uniform(0.0, 4.0);
        FiniteDistribution scaled = z;
        for (int i = 0; i < n; ++i) scaled.values[i] = scale * z.values[i];
        report.positive_homogeneity =
            std::max(report.positive_homogeneity, std::abs(rho(scaled) - scale * rho_z));
    }
    return report;
}

CoherenceReport check_coherence(const RiskMeasure& measure, int trials, std::uint64_t seed) {
    return check_coherence(
        [&measure](const FiniteDistribution& dist) { return evaluate(measure, dist); }, trials,
        seed);
}

}  // namespace rcmdp
