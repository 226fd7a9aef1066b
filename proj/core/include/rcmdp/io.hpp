#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "rcmdp/feasibility.hpp"
#include "rcmdp/problem.hpp"
#include "rcmdp/solver.hpp"

namespace rcmdp {

/// Problem file parse or validation failure; message carries line/column or
/// a field path plus every validation violation found.
class parse_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A problem document: the spec, its solver options, and the optional
/// state/control labels (labels appear in files only, never in the solver).
struct LoadedProblem {
    ProblemSpec spec;
    SolverOptions options;
    std::vector<std::string> state_labels;
    std::vector<std::string> control_labels;
};

/// Parses a JSON problem document. Unknown keys are rejected with their
/// path. The parsed spec is validated (all violations reported at once) and
/// kernel rows are renormalized exactly once: rows already within 1e-13 of 1
/// are left bit-identical so that load(save(load(f))) == load(f).
LoadedProblem parse_problem(const std::string& text);
LoadedProblem load_problem(const std::string& path);

/// Serializes back to the document format; reals keep full precision so the
/// round trip is bit-exact.
std::string serialize_problem(const LoadedProblem& problem);
void save_problem(const LoadedProblem& problem, const std::string& path);

// CSV emitters. All use '.' decimals, no locale, mandatory header row,
// %.17g reals.

void write_value_table_csv(std::ostream& os, const Solution& solution);
void write_policy_table_csv(std::ostream& os, const Solution& solution);
void write_feasibility_csv(std::ostream& os, const FeasibilityTables& tables);

struct SweepPoint {
    double threshold = 0.0;
    double value = 0.0;
    bool feasible = false;
};

/// Headline values over a threshold range, from one solved instance (the
/// value table covers every threshold; no re-solve per point).
std::vector<SweepPoint> sweep(const Solution& solution, double r_lo, double r_hi, int steps);
void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& points);

void write_rollout_csv(std::ostream& os, const std::vector<RolloutRecord>& episodes);

/// Formats a double with 17 significant digits, '.' decimal.
std::string format_real(double v);

}  // namespace rcmdp
