#include "rcmdp/feasibility.hpp"

#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rcmdp/risk.hpp"

namespace rcmdp {

std::vector<std::vector<double>> min_risk_to_go(const ProblemSpec& spec) {
    int N = spec.horizon;
    std::vector<std::vector<double>> table(N + 1, std::vector<double>(spec.num_states, 0.0));
    for (int k = N - 1; k >= 0; --k) {
        for (int x = 0; x < spec.num_states; ++x) {
            double best = std::numeric_limits<double>::infinity();
            for (size_t s = 0; s < spec.admissible[x].size(); ++s) {
                int u = spec.admissible[x][s];
                double r = spec.constraint_cost[x][s] +
                           one_step_risk(spec, spec.risk, x, u, table[k + 1]);
                best = std::min(best, r);
            }
            table[k][x] = best;
        }
    }
    return table;
}

double rho_max(const ProblemSpec& spec) {
    double m = -std::numeric_limits<double>::infinity();
    for (int x = 0; x < spec.num_states; ++x) {
        for (size_t s = 0; s < spec.admissible[x].size(); ++s) {
            double d = spec.constraint_cost[x][s];
            m = std::max(m, d);
            // d(x,u) is deterministic given (x,u), so applying the measure to
            // the degenerate distribution must give d back.
            assert(std::abs(evaluate(spec.risk, std::vector<double>{d},
                                     std::vector<double>{1.0}) -
                            d) <= 1e-12 * std::max(1.0, std::abs(d)));
        }
    }
    if (!std::isfinite(m)) throw std::invalid_argument("spec has no admissible pairs");
    return m;
}

FeasibilityTables build_feasibility(const ProblemSpec& spec) {
    FeasibilityTables t;
    t.horizon = spec.horizon;
    t.min_risk = min_risk_to_go(spec);
    t.rho_max = rho_max(spec);
    t.upper_bound.resize(spec.horizon + 1);
    for (int k = 0; k <= spec.horizon; ++k) t.upper_bound[k] = (spec.horizon - k) * t.rho_max;

    // Mathematically min_risk <= upper_bound at every (k, x); floating-point
    // accumulation can cross by ulps on degenerate instances, which we fold
    // back into a singleton interval.
    for (int k = 0; k < spec.horizon; ++k) {
        for (int x = 0; x < spec.num_states; ++x) {
            if (t.min_risk[k][x] > t.upper_bound[k]) {
                if (t.min_risk[k][x] - t.upper_bound[k] > kIntervalTol)
                    throw std::logic_error("minimum risk-to-go exceeds the stage upper bound");
                t.min_risk[k][x] = t.upper_bound[k];
            }
        }
    }
    return t;
}

Interval feasible_interval(const FeasibilityTables& tables, int k, int x) {
    if (k < 0 || k > tables.horizon) throw std::out_of_range("stage outside [0, horizon]");
    if (x < 0 || x >= static_cast<int>(tables.min_risk.at(0).size()))
        throw std::out_of_range("state outside S");
    if (k == tables.horizon) return Interval{0.0, 0.0};
    return Interval{tables.min_risk[k][x], tables.upper_bound[k]};
}

}  // namespace rcmdp
