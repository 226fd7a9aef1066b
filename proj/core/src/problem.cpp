#include "rcmdp/problem.hpp"

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace rcmdp {

namespace {

std::string fmt(const char* format, ...) {
    char buf[256];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

}  // namespace

int ProblemSpec::slot_of(int x, int u) const {
    if (x < 0 || x >= num_states) return -1;
    const auto& us = admissible[x];
    for (int s = 0; s < static_cast<int>(us.size()); ++s)
        if (us[s] == u) return s;
    return -1;
}

double ProblemSpec::c(int x, int u) const {
    int s = slot_of(x, u);
    if (s < 0) throw std::invalid_argument(fmt("control %d inadmissible in state %d", u, x));
    return stage_cost[x][s];
}

double ProblemSpec::d(int x, int u) const {
    int s = slot_of(x, u);
    if (s < 0) throw std::invalid_argument(fmt("control %d inadmissible in state %d", u, x));
    return constraint_cost[x][s];
}

const std::vector<double>& ProblemSpec::kernel_row(int x, int u) const {
    int s = slot_of(x, u);
    if (s < 0) throw std::invalid_argument(fmt("control %d inadmissible in state %d", u, x));
    return kernel[x][s];
}

double ProblemSpec::max_abs_stage_cost() const {
    double m = 0.0;
    for (const auto& row : stage_cost)
        for (double c : row) m = std::max(m, std::abs(c));
    return m;
}

std::vector<std::string> validate(const ProblemSpec& spec) {
    std::vector<std::string> out;
    auto bad = [&out](std::string msg) { out.push_back(std::move(msg)); };

    if (spec.num_states < 1) bad("state set is empty");
    if (spec.num_controls < 1) bad("control set is empty");
    if (spec.horizon < 1) bad(fmt("horizon %d is not >= 1", spec.horizon));
    if (spec.initial_state < 0 || spec.initial_state >= spec.num_states)
        bad(fmt("initial state %d outside [0, %d)", spec.initial_state, spec.num_states));
    if (!std::isfinite(spec.initial_threshold)) bad("initial threshold is not finite");

    if (static_cast<int>(spec.admissible.size()) != spec.num_states)
        bad(fmt("admissible map covers %zu states, expected %d", spec.admissible.size(),
                spec.num_states));
    if (spec.kernel.size() != spec.admissible.size())
        bad("kernel and admissible map disagree on the number of states");
    if (spec.stage_cost.size() != spec.admissible.size() ||
        spec.constraint_cost.size() != spec.admissible.size())
        bad("cost tables and admissible map disagree on the number of states");

    int states = std::min<int>(spec.num_states, static_cast<int>(spec.admissible.size()));
    for (int x = 0; x < states; ++x) {
        const auto& us = spec.admissible[x];
        if (us.empty()) bad(fmt("state %d has no admissible controls", x));
        for (size_t s = 0; s < us.size(); ++s) {
            if (us[s] < 0 || us[s] >= spec.num_controls)
                bad(fmt("state %d admits unknown control %d", x, us[s]));
            if (s > 0 && us[s] <= us[s - 1])
                bad(fmt("state %d admissible controls not strictly ascending", x));
        }
        if (x < static_cast<int>(spec.kernel.size()) &&
            spec.kernel[x].size() != us.size())
            bad(fmt("state %d has %zu kernel rows for %zu admissible controls", x,
                    spec.kernel[x].size(), us.size()));
        if (x < static_cast<int>(spec.stage_cost.size()) &&
            spec.stage_cost[x].size() != us.size())
            bad(fmt("state %d has %zu stage costs for %zu admissible controls", x,
                    spec.stage_cost[x].size(), us.size()));
        if (x < static_cast<int>(spec.constraint_cost.size()) &&
            spec.constraint_cost[x].size() != us.size())
            bad(fmt("state %d has %zu constraint costs for %zu admissible controls", x,
                    spec.constraint_cost[x].size(), us.size()));
    }

    for (int x = 0; x < static_cast<int>(spec.kernel.size()) && x < states; ++x) {
        for (size_t s = 0; s < spec.kernel[x].size() && s < spec.admissible[x].size(); ++s) {
            int u = spec.admissible[x][s];
            const auto& row = spec.kernel[x][s];
            if (static_cast<int>(row.size()) != spec.num_states) {
                bad(fmt("row (x=%d,u=%d) has %zu entries, expected %d", x, u, row.size(),
                        spec.num_states));
                continue;
            }
            double sum = 0.0;
            for (int y = 0; y < spec.num_states; ++y) {
                if (row[y] < 0.0)
                    bad(fmt("row (x=%d,u=%d) has negative entry %g at state %d", x, u, row[y], y));
                if (!std::isfinite(row[y]))
                    bad(fmt("row (x=%d,u=%d) has non-finite entry at state %d", x, u, y));
                sum += row[y];
            }
            if (std::abs(sum - 1.0) > kStochasticTol)
                bad(fmt("row (x=%d,u=%d) sums to %g", x, u, sum));
        }
    }

    for (int x = 0; x < static_cast<int>(spec.stage_cost.size()) && x < states; ++x)
        for (size_t s = 0; s < spec.stage_cost[x].size(); ++s)
            if (!std::isfinite(spec.stage_cost[x][s]))
                bad(fmt("stage cost (x=%d,slot=%zu) is not finite", x, s));
    for (int x = 0; x < static_cast<int>(spec.constraint_cost.size()) && x < states; ++x)
        for (size_t s = 0; s < spec.constraint_cost[x].size(); ++s)
            if (!std::isfinite(spec.constraint_cost[x][s]))
                bad(fmt("constraint cost (x=%d,slot=%zu) is not finite", x, s));

    for (const auto& msg : spec.risk.parameter_violations()) out.push_back(msg);

    double bound = spec.horizon * spec.max_abs_stage_cost();
    if (!(spec.sentinel > bound))
        bad(fmt("sentinel %g is not strictly above horizon * max|c| = %g", spec.sentinel, bound));

    return out;
}

History History::extended(int control, int next_state) const {
    History h = *this;
    h.controls.push_back(control);
    h.states.push_back(next_state);
    return h;
}

std::string History::to_string() const {
    std::ostringstream os;
    os << "stage " << start_stage << ": x" << states[0];
    for (size_t i = 0; i < controls.size(); ++i)
        os << " -u" << controls[i] << "-> x" << states[i + 1];
    return os.str();
}

HistoryPolicy HistoryPolicy::constant(int control) {
    return HistoryPolicy([control](const History&) { return std::optional<int>(control); });
}

HistoryPolicy HistoryPolicy::stage_state(std::function<int(int, int)> fn) {
    return HistoryPolicy([fn = std::move(fn)](const History& h) {
        return std::optional<int>(fn(h.current_stage(), h.current_state()));
    });
}

HistoryPolicy HistoryPolicy::from_map(std::vector<std::pair<History, int>> table) {
    auto map = std::make_shared<std::map<History, int>>(table.begin(), table.end());
    return HistoryPolicy([map](const History& h) -> std::optional<int> {
        auto it = map->find(h);
        if (it == map->end()) return std::nullopt;
        return it->second;
    });
}

std::optional<int> HistoryPolicy::control(const History& h) const {
    if (!fn_) return std::nullopt;
    return fn_(h);
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

double expected_cost_rec(const ProblemSpec& spec, const HistoryPolicy& policy, const History& h) {
    if (h.current_stage() >= spec.horizon) return 0.0;
    int x = h.current_state();
    int u = checked_control(spec, policy, h);
    const auto& row = spec.kernel_row(x, u);
    double total = spec.c(x, u);
    for (int y = 0; y < spec.num_states; ++y) {
        if (row[y] <= 0.0) continue;
        total += row[y] * expected_cost_rec(spec, policy, h.extended(u, y));
    }
    return total;
}

}  // namespace

double expected_cost(const ProblemSpec& spec, const HistoryPolicy& policy, int k, int x_k) {
    if (k < 0 || k > spec.horizon) throw std::out_of_range("stage outside [0, horizon]");
    if (x_k < 0 || x_k >= spec.num_states) throw std::out_of_range("state outside S");
    return expected_cost_rec(spec, policy, History(k, x_k));
}

}  // namespace rcmdp
