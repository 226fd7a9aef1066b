#include "rcmdp/risk.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace rcmdp {

double one_step_risk(const ProblemSpec& spec, const RiskMeasure& measure, int x, int u,
                     std::span<const double> next_values) {
    int s = spec.slot_of(x, u);
    if (s < 0)
        throw std::invalid_argument("control " + std::to_string(u) + " inadmissible in state " +
                                    std::to_string(x));
    if (static_cast<int>(next_values.size()) != spec.num_states)
        throw std::invalid_argument("next_values must cover every state");

    const auto& row = spec.kernel[x][s];
    thread_local std::vector<double> values, probs;
    values.clear();
    probs.clear();
    for (int y = 0; y < spec.num_states; ++y) {
        if (row[y] <= 0.0) continue;
        values.push_back(next_values[y]);
        probs.push_back(row[y]);
    }
    return evaluate(measure, values, probs);
}

namespace {

int checked_control(const ProblemSpec& spec, const HistoryPolicy& policy, const History& h) {
    auto u = policy.control(h);
    if (!u)
        throw std::runtime_error("policy undefined at history [" + h.to_string() + "]");
    if (!spec.is_admissible(h.current_state(), *u))
        throw std::runtime_error("policy plays inadmissible control " + std::to_string(*u) +
                                 " at history [" + h.to_string() + "]");
    return *u;
}

double policy_risk_rec(const ProblemSpec& spec, const HistoryPolicy& policy, const History& h) {
    if (h.current_stage() >= spec.horizon) return 0.0;
    int x = h.current_state();
    int u = checked_control(spec, policy, h);
    const auto& row = spec.kernel_row(x, u);
    std::vector<double> tail(spec.num_states, 0.0);
    for (int y = 0; y < spec.num_states; ++y) {
        if (row[y] <= 0.0) continue;
        tail[y] = policy_risk_rec(spec, policy, h.extended(u, y));
    }
    return spec.d(x, u) + one_step_risk(spec, spec.risk, x, u, tail);
}

}  // namespace

double policy_risk(const ProblemSpec& spec, const HistoryPolicy& policy, int k, int x_k) {
    if (k < 0 || k > spec.horizon) throw std::out_of_range("stage outside [0, horizon]");
    if (x_k < 0 || x_k >= spec.num_states) throw std::out_of_range("state outside S");
    return policy_risk_rec(spec, policy, History(k, x_k));
}

}  // namespace rcmdp
