#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "rcmdp/rcmdp.hpp"
#include "support/instances.hpp"

using namespace rcmdp;
using namespace testsupport;

namespace {

std::string maintenance_document() {
    return R"({
  "states": ["normal", "failed"],
  "controls": ["wait", "repair"],
  "admissible": [[0, 1], [0, 1]],
  "kernel": [
    [[0.3, 0.7], [0.8, 0.2]],
    [[0.0, 1.0], [0.8, 0.2]]
  ],
  "stage_cost": [[0.0, 1.0], [0.0, 1.0]],
  "constraint_cost": [[0.0, 0.0], [0.5, 0.5]],
  "horizon": 2,
  "initial_state": 1,
  "initial_threshold": 0.7,
  "risk_measure": {"kind": "mean_semideviation", "lambda": 0.5, "p": 2},
  "solver": {"grid_nodes": 101, "prune": false}
})";
}

bool specs_equal(const ProblemSpec& a, const ProblemSpec& b) {
    return a.num_states == b.num_states && a.num_controls == b.num_controls &&
           a.admissible == b.admissible && a.kernel == b.kernel &&
           a.stage_cost == b.stage_cost && a.constraint_cost == b.constraint_cost &&
           a.horizon == b.horizon && a.initial_state == b.initial_state &&
           a.initial_threshold == b.initial_threshold && a.risk == b.risk &&
           a.sentinel == b.sentinel;
}

// The in-code fixture computes 1-q while the document spells the decimal, so
// kernel entries may differ in the last ulp; everything else is exact.
bool specs_close(const ProblemSpec& a, const ProblemSpec& b) {
    ProblemSpec rounded = a;
    bool kernel_close = true;
    for (int x = 0; x < a.num_states; ++x)
        for (size_t s = 0; s < a.kernel[x].size(); ++s)
            for (int y = 0; y < a.num_states; ++y)
                kernel_close = kernel_close &&
                               std::abs(a.kernel[x][s][y] - b.kernel[x][s][y]) <= 1e-15;
    rounded.kernel = b.kernel;
    return kernel_close && specs_equal(rounded, b);
}

}  // namespace

TEST_CASE("parse_problem: the maintenance document matches the in-code spec") {
    LoadedProblem loaded = parse_problem(maintenance_document());
    CHECK(specs_close(loaded.spec, maintenance_spec()));
    CHECK(loaded.state_labels == std::vector<std::string>{"normal", "failed"});
    CHECK(loaded.control_labels == std::vector<std::string>{"wait", "repair"});
    CHECK(loaded.options.grid_nodes == 101);
    CHECK(!loaded.options.prune);
}

TEST_CASE("round trip: parse, serialize, parse is field-wise identical") {
    LoadedProblem first = parse_problem(maintenance_document());
    std::string text = serialize_problem(first);
    LoadedProblem second = parse_problem(text);
    CHECK(specs_equal(first.spec, second.spec));
    CHECK(first.state_labels == second.state_labels);
    CHECK(first.control_labels == second.control_labels);
    CHECK(serialize_problem(second) == text);
}

TEST_CASE("round trip: renormalization happens once and is then idempotent") {
    // Past the 1e-12 stochasticity tolerance: rejected outright.
    std::string text = maintenance_document();
    auto pos = text.find("[0.3, 0.7]");
    REQUIRE(pos != std::string::npos);
    std::string broken = text;
    broken.replace(pos, 10, "[0.3, 0.70000000001]");
    CHECK_THROWS_WITH_AS(parse_problem(broken), doctest::Contains("sums to"), parse_error);

    // Valid (within 1e-12) but not bit-perfect: normalized at load, and the
    // saved document reloads with the kernel bit-identical.
    std::string offset = text;
    offset.replace(pos, 10, "[0.30000000000022, 0.7]");
    LoadedProblem once = parse_problem(offset);
    double sum = once.spec.kernel[0][0][0] + once.spec.kernel[0][0][1];
    CHECK(std::abs(sum - 1.0) <= 1e-15);
    LoadedProblem twice = parse_problem(serialize_problem(once));
    CHECK(once.spec.kernel == twice.spec.kernel);
}

TEST_CASE("parse_problem: unknown keys are rejected with their path") {
    std::string text = maintenance_document();
    text.insert(text.rfind('}'), ", \"extra_key\": 1\n");
    CHECK_THROWS_WITH_AS(parse_problem(text), doctest::Contains("extra_key"), parse_error);

    text = maintenance_document();
    auto pos = text.find("\"kind\": \"mean_semideviation\"");
    REQUIRE(pos != std::string::npos);
    std::string with_alpha = text;
    with_alpha.insert(pos, "\"alpha\": 0.5, ");
    CHECK_THROWS_WITH_AS(parse_problem(with_alpha), doctest::Contains("alpha"), parse_error);
}

TEST_CASE("parse_problem: malformed kernels carry locators") {
    std::string text = maintenance_document();
    auto pos = text.find("[0.3, 0.7]");
    text.replace(pos, 10, "[0.5, 0.4]");
    CHECK_THROWS_WITH_AS(parse_problem(text), doctest::Contains("row (x=0,u=0) sums to 0.9"),
                         parse_error);

    // JSON syntax errors surface the parser's line/column diagnostics.
    CHECK_THROWS_WITH_AS(parse_problem("{ \"states\": 2,, }"), doctest::Contains("line"),
                         parse_error);
}

TEST_CASE("parse_problem: admissibility shape is enforced") {
    // Null where a row is required.
    std::string text = maintenance_document();
    auto pos = text.find("[[0.3, 0.7], [0.8, 0.2]]");
    text.replace(pos, 24, "[[0.3, 0.7], null]");
    CHECK_THROWS_WITH_AS(parse_problem(text), doctest::Contains("must not be null"), parse_error);
}

TEST_CASE("parse_problem: terminal costs must be zero when present") {
    std::string text = maintenance_document();
    text.insert(text.rfind('}'), ", \"terminal_cost\": [0.0, 0.0]\n");
    CHECK_NOTHROW(parse_problem(text));

    text = maintenance_document();
    text.insert(text.rfind('}'), ", \"terminal_cost\": [0.0, 0.5]\n");
    CHECK_THROWS_WITH_AS(parse_problem(text), doctest::Contains("terminal"), parse_error);
}

TEST_CASE("parse_problem: counts instead of labels and sentinel overrides") {
    std::string text = maintenance_document();
    auto pos = text.find("[\"normal\", \"failed\"]");
    text.replace(pos, 20, "2");
    pos = text.find("\"grid_nodes\": 101");
    text.insert(pos, "\"sentinel\": 9.5, ");
    LoadedProblem loaded = parse_problem(text);
    CHECK(loaded.state_labels.empty());
    CHECK(loaded.spec.sentinel == 9.5);
}

TEST_CASE("format_real round trips doubles exactly") {
    std::mt19937_64 rng(61);
    for (int t = 0; t < 200; ++t) {
        double v = (unit_draw(rng) - 0.5) * std::pow(10.0, static_cast<int>(rng() % 7) - 3);
        std::string s = format_real(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
        CHECK(s.find(',') == std::string::npos);
    }
}

TEST_CASE("CSV emitters: headers and shape") {
    MaintenanceParams mp;
    ProblemSpec spec = maintenance_spec(mp);
    auto tables = build_feasibility(spec);
    Solution sol = solve(spec);

    std::ostringstream values;
    write_value_table_csv(values, sol);
    CHECK(values.str().rfind("stage,state,threshold,value,is_feasible\n", 0) == 0);

    std::ostringstream policy;
    write_policy_table_csv(policy, sol);
    CHECK(policy.str().rfind("stage,state,threshold,control,r_prime_0,r_prime_1\n", 0) == 0);

    std::ostringstream feas;
    write_feasibility_csv(feas, tables);
    std::istringstream lines(feas.str());
    std::string line;
    std::getline(lines, line);
    CHECK(line == "stage,state,min_risk,upper_bound");
    int rows = 0;
    while (std::getline(lines, line)) ++rows;
    CHECK(rows == (spec.horizon + 1) * spec.num_states);
}

TEST_CASE("sweep: maintenance staircase is monotone with the advertised plateaus") {
    MaintenanceParams mp;
    ProblemSpec spec = maintenance_spec(mp);
    Solution sol = solve(spec);
    auto points = sweep(sol, 0.0, 1.1, 223);
    double previous = std::numeric_limits<double>::infinity();
    std::set<double> plateau_values;
    for (const auto& p : points) {
        CHECK(p.value <= previous + 1e-12);
        previous = p.value;
        plateau_values.insert(p.value);
    }
    CHECK(plateau_values == std::set<double>{0.0, mp.c2, spec.sentinel});
}

TEST_CASE("sweep: zero constraint costs give a constant column") {
    std::mt19937_64 rng(62);
    ProblemSpec spec = random_instance(rng);
    for (auto& row : spec.constraint_cost) std::fill(row.begin(), row.end(), 0.0);
    spec.initial_threshold = 0.0;
    Solution sol = solve(spec);
    auto points = sweep(sol, 0.0, 1.0, 17);
    for (const auto& p : points) CHECK(p.value == points.front().value);
}
