#include "rcmdp/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace rcmdp {

namespace {

using nlohmann::ordered_json;

// Rows already this close to 1 stay bit-identical, so reloading a saved
// document does not perturb the kernel a second time.
constexpr double kRenormalizeSkip = 1e-13;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
    throw parse_error(path + ": " + message);
}

void reject_unknown_keys(const ordered_json& obj, const std::string& path,
                         std::initializer_list<const char*> known) {
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* k : known)
            if (key == k) {
                ok = true;
                break;
            }
        if (!ok) fail(path + "." + key, "unknown key");
    }
}

const ordered_json& require(const ordered_json& obj, const char* key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) fail(path, std::string("missing required key '") + key + "'");
    return *it;
}

int require_int(const ordered_json& obj, const char* key, const std::string& path) {
    const auto& v = require(obj, key, path);
    if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
    return v.get<int>();
}

double require_real(const ordered_json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
}

RiskMeasure parse_measure(const ordered_json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    const auto& kind = require(j, "kind", path);
    if (!kind.is_string()) fail(path + ".kind", "expected a string");
    std::string name = kind.get<std::string>();
    RiskMeasure m;
    if (name == "expectation") {
        reject_unknown_keys(j, path, {"kind"});
        m = RiskMeasure::expectation();
    } else if (name == "mean_semideviation") {
        reject_unknown_keys(j, path, {"kind", "lambda", "p"});
        m.kind = RiskMeasure::Kind::mean_semideviation;
        m.lambda = require_real(require(j, "lambda", path), path + ".lambda");
        m.p = require_real(require(j, "p", path), path + ".p");
    } else if (name == "cvar") {
        reject_unknown_keys(j, path, {"kind", "alpha"});
        m.kind = RiskMeasure::Kind::cvar;
        m.alpha = require_real(require(j, "alpha", path), path + ".alpha");
    } else {
        fail(path + ".kind", "unknown risk measure '" + name + "'");
    }
    return m;
}

ordered_json measure_to_json(const RiskMeasure& m) {
    ordered_json j;
    switch (m.kind) {
        case RiskMeasure::Kind::expectation:
            j["kind"] = "expectation";
            break;
        case RiskMeasure::Kind::mean_semideviation:
            j["kind"] = "mean_semideviation";
            j["lambda"] = m.lambda;
            j["p"] = m.p;
            break;
        case RiskMeasure::Kind::cvar:
            j["kind"] = "cvar";
            j["alpha"] = m.alpha;
            break;
    }
    return j;
}

}  // namespace

LoadedProblem parse_problem(const std::string& text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw parse_error(e.what());
    }
    if (!doc.is_object()) throw parse_error("$: document must be a JSON object");

    reject_unknown_keys(doc, "$",
                        {"states", "controls", "admissible", "kernel", "stage_cost",
                         "constraint_cost", "terminal_cost", "horizon", "initial_state",
                         "initial_threshold", "risk_measure", "solver"});

    LoadedProblem out;
    ProblemSpec& spec = out.spec;

    auto parse_entity = [](const ordered_json& v, const std::string& path, int& count,
                           std::vector<std::string>& labels) {
        if (v.is_number_integer()) {
            count = v.get<int>();
        } else if (v.is_array()) {
            count = static_cast<int>(v.size());
            for (const auto& item : v) {
                if (!item.is_string()) fail(path, "labels must be strings");
                labels.push_back(item.get<std::string>());
            }
        } else {
            fail(path, "expected a count or an array of labels");
        }
    };
    parse_entity(require(doc, "states", "$"), "$.states", spec.num_states, out.state_labels);
    parse_entity(require(doc, "controls", "$"), "$.controls", spec.num_controls,
                 out.control_labels);

    const auto& adm = require(doc, "admissible", "$");
    if (!adm.is_array()) fail("$.admissible", "expected an array per state");
    for (size_t x = 0; x < adm.size(); ++x) {
        const auto& lst = adm[x];
        std::string path = "$.admissible[" + std::to_string(x) + "]";
        if (!lst.is_array()) fail(path, "expected an array of control indices");
        std::vector<int> us;
        for (const auto& v : lst) {
            if (!v.is_number_integer()) fail(path, "expected integer control indices");
            us.push_back(v.get<int>());
        }
        spec.admissible.push_back(std::move(us));
    }

    // kernel[x][u]: a probability row at admissible pairs, null elsewhere.
    auto parse_matrix = [&spec](const ordered_json& m, const std::string& path, bool is_kernel,
                                auto&& on_row) {
        if (!m.is_array() || m.size() != spec.admissible.size())
            fail(path, "expected one entry per state");
        for (size_t x = 0; x < m.size(); ++x) {
            const auto& per_control = m[x];
            std::string xpath = path + "[" + std::to_string(x) + "]";
            if (!per_control.is_array() ||
                static_cast<int>(per_control.size()) != spec.num_controls)
                fail(xpath, "expected one entry per control");
            for (int u = 0; u < spec.num_controls; ++u) {
                bool admissible = false;
                for (int a : spec.admissible[x])
                    if (a == u) admissible = true;
                const auto& cell = per_control[u];
                std::string upath = xpath + "[" + std::to_string(u) + "]";
                if (!admissible) {
                    if (!cell.is_null())
                        fail(upath, "inadmissible (state, control) pair must be null");
                    continue;
                }
                if (cell.is_null()) fail(upath, "admissible (state, control) pair must not be null");
                on_row(static_cast<int>(x), u, cell, upath, is_kernel);
            }
        }
    };

    spec.kernel.resize(spec.admissible.size());
    spec.stage_cost.resize(spec.admissible.size());
    spec.constraint_cost.resize(spec.admissible.size());

    parse_matrix(require(doc, "kernel", "$"), "$.kernel", true,
                 [&spec](int x, int, const ordered_json& cell, const std::string& path, bool) {
                     if (!cell.is_array()) fail(path, "expected a probability row");
                     std::vector<double> row;
                     for (const auto& v : cell) row.push_back(require_real(v, path));
                     spec.kernel[x].push_back(std::move(row));
                 });
    parse_matrix(require(doc, "stage_cost", "$"), "$.stage_cost", false,
                 [&spec](int x, int, const ordered_json& cell, const std::string& path, bool) {
                     spec.stage_cost[x].push_back(require_real(cell, path));
                 });
    parse_matrix(require(doc, "constraint_cost", "$"), "$.constraint_cost", false,
                 [&spec](int x, int, const ordered_json& cell, const std::string& path, bool) {
                     spec.constraint_cost[x].push_back(require_real(cell, path));
                 });

    spec.horizon = require_int(doc, "horizon", "$");
    spec.initial_state = require_int(doc, "initial_state", "$");
    spec.initial_threshold =
        require_real(require(doc, "initial_threshold", "$"), "$.initial_threshold");
    spec.risk = parse_measure(require(doc, "risk_measure", "$"), "$.risk_measure");

    // Terminal costs are a format hook only: they must be identically zero.
    if (auto it = doc.find("terminal_cost"); it != doc.end()) {
        if (!it->is_array() || static_cast<int>(it->size()) != spec.num_states)
            fail("$.terminal_cost", "expected one entry per state");
        for (size_t x = 0; x < it->size(); ++x)
            if (require_real((*it)[x], "$.terminal_cost") != 0.0)
                fail("$.terminal_cost[" + std::to_string(x) + "]",
                     "terminal costs must be zero");
    }

    spec.sentinel = spec.default_sentinel();
    if (auto it = doc.find("solver"); it != doc.end()) {
        reject_unknown_keys(*it, "$.solver", {"grid_nodes", "prune", "sentinel"});
        if (auto g = it->find("grid_nodes"); g != it->end()) {
            if (!g->is_number_integer()) fail("$.solver.grid_nodes", "expected an integer");
            out.options.grid_nodes = g->get<int>();
            if (out.options.grid_nodes < 1) fail("$.solver.grid_nodes", "must be >= 1");
        }
        if (auto p = it->find("prune"); p != it->end()) {
            if (!p->is_boolean()) fail("$.solver.prune", "expected a boolean");
            out.options.prune = p->get<bool>();
        }
        if (auto c = it->find("sentinel"); c != it->end() && !c->is_null())
            spec.sentinel = require_real(*c, "$.solver.sentinel");
    }

    auto violations = validate(spec);
    if (!violations.empty()) {
        std::string msg = "problem document failed validation:";
        for (const auto& v : violations) msg += "\n  - " + v;
        throw parse_error(msg);
    }

    // Renormalize rows exactly once: text-format round-off must not leak
    // into exact tree evaluations.
    for (auto& per_state : spec.kernel)
        for (auto& row : per_state) {
            double sum = 0.0;
            for (double p : row) sum += p;
            if (std::abs(sum - 1.0) > kRenormalizeSkip)
                for (double& p : row) p /= sum;
        }

    return out;
}

LoadedProblem load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error(path + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_problem(buf.str());
    } catch (const parse_error& e) {
        throw parse_error(path + ": " + e.what());
    }
}

std::string serialize_problem(const LoadedProblem& problem) {
    const ProblemSpec& spec = problem.spec;
    ordered_json doc;
    if (!problem.state_labels.empty())
        doc["states"] = problem.state_labels;
    else
        doc["states"] = spec.num_states;
    if (!problem.control_labels.empty())
        doc["controls"] = problem.control_labels;
    else
        doc["controls"] = spec.num_controls;
    doc["admissible"] = spec.admissible;

    auto emit_matrix = [&spec](auto&& cell_of) {
        ordered_json m = ordered_json::array();
        for (int x = 0; x < spec.num_states; ++x) {
            ordered_json per_control = ordered_json::array();
            for (int u = 0; u < spec.num_controls; ++u) {
                int s = spec.slot_of(x, u);
                if (s < 0)
                    per_control.push_back(nullptr);
                else
                    per_control.push_back(cell_of(x, s));
            }
            m.push_back(std::move(per_control));
        }
        return m;
    };
    doc["kernel"] = emit_matrix([&spec](int x, int s) { return ordered_json(spec.kernel[x][s]); });
    doc["stage_cost"] =
        emit_matrix([&spec](int x, int s) { return ordered_json(spec.stage_cost[x][s]); });
    doc["constraint_cost"] =
        emit_matrix([&spec](int x, int s) { return ordered_json(spec.constraint_cost[x][s]); });

    doc["horizon"] = spec.horizon;
    doc["initial_state"] = spec.initial_state;
    doc["initial_threshold"] = spec.initial_threshold;
    doc["risk_measure"] = measure_to_json(spec.risk);
    doc["solver"] = {{"grid_nodes", problem.options.grid_nodes},
                     {"prune", problem.options.prune},
                     {"sentinel", spec.sentinel}};
    return doc.dump(2) + "\n";
}

void save_problem(const LoadedProblem& problem, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw parse_error(path + ": cannot open file for writing");
    out << serialize_problem(problem);
}

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_value_table_csv(std::ostream& os, const Solution& solution) {
    os << "stage,state,threshold,value,is_feasible\n";
    int N = solution.grid.horizon();
    for (int k = 0; k <= N; ++k)
        for (int x = 0; x < static_cast<int>(solution.grid.nodes[k].size()); ++x) {
            const auto& nodes = solution.grid.at(k, x);
            for (int i = 0; i < static_cast<int>(nodes.size()); ++i)
                os << k << ',' << x << ',' << format_real(nodes[i]) << ','
                   << format_real(solution.values.at(k, x, i)) << ','
                   << (solution.values.is_feasible(k, x, i) ? 1 : 0) << '\n';
        }
}

void write_policy_table_csv(std::ostream& os, const Solution& solution) {
    int num_states = static_cast<int>(solution.grid.nodes[0].size());
    os << "stage,state,threshold,control";
    for (int y = 0; y < num_states; ++y) os << ",r_prime_" << y;
    os << '\n';
    int N = solution.grid.horizon();
    for (int k = 0; k < N; ++k)
        for (int x = 0; x < num_states; ++x) {
            const auto& nodes = solution.grid.at(k, x);
            for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
                const auto& entry = solution.policy.at(k, x, i);
                if (!entry) continue;  // infeasible nodes carry no policy
                os << k << ',' << x << ',' << format_real(nodes[i]) << ',' << entry->control;
                for (int y = 0; y < num_states; ++y)
                    os << ',' << format_real(solution.grid.at(k + 1, y)[entry->next_node[y]]);
                os << '\n';
            }
        }
}

void write_feasibility_csv(std::ostream& os, const FeasibilityTables& tables) {
    os << "stage,state,min_risk,upper_bound\n";
    for (int k = 0; k <= tables.horizon; ++k)
        for (int x = 0; x < static_cast<int>(tables.min_risk[k].size()); ++x)
            os << k << ',' << x << ',' << format_real(tables.min_risk[k][x]) << ','
               << format_real(tables.upper_bound[k]) << '\n';
}

std::vector<SweepPoint> sweep(const Solution& solution, double r_lo, double r_hi, int steps) {
    if (steps < 1) throw std::invalid_argument("sweep needs at least one step");
    if (r_hi < r_lo) std::swap(r_lo, r_hi);
    int x0 = solution.initial_state;
    double upper = solution.grid.at(0, x0).back();

    std::vector<SweepPoint> points;
    points.reserve(steps);
    for (int i = 0; i < steps; ++i) {
        double r = steps == 1 ? r_lo : r_lo + (r_hi - r_lo) * i / (steps - 1);
        SweepPoint p;
        p.threshold = r;
        auto node = solution.grid.floor_index(0, x0, std::min(r, upper));
        if (node && solution.values.is_feasible(0, x0, *node)) {
            p.value = solution.values.at(0, x0, *node);
            p.feasible = true;
        } else {
            p.value = solution.values.sentinel;
            p.feasible = false;
        }
        points.push_back(p);
    }
    return points;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& points) {
    os << "threshold,value,is_feasible\n";
    for (const auto& p : points)
        os << format_real(p.threshold) << ',' << format_real(p.value) << ','
           << (p.feasible ? 1 : 0) << '\n';
}

void write_rollout_csv(std::ostream& os, const std::vector<RolloutRecord>& episodes) {
    os << "# rng: " << RolloutRecord::kGenerator
       << "; episode e is seeded with seed + e; successors drawn by 53-bit uniform and "
          "cumulative-row inversion\n";
    os << "episode,step,state,threshold,control,stage_cost,constraint_cost\n";
    for (size_t e = 0; e < episodes.size(); ++e)
        for (const auto& step : episodes[e].steps)
            os << e << ',' << step.stage << ',' << step.state << ','
               << format_real(step.threshold) << ',' << step.control << ','
               << format_real(step.stage_cost) << ',' << format_real(step.constraint_cost)
               << '\n';
}

}  // namespace rcmdp
