#pragma once

#include <span>
#include <string>
#include <vector>

namespace rcmdp {

/// A coherent one-step risk measure applied to a finite distribution of
/// next-stage values. Supported kinds:
///
///   expectation          rho(V) = E[V]
///   mean_semideviation   rho(V) = E[V] + lambda * (E[(V - E[V])_+^p])^(1/p),
///                        lambda in [0,1], p in [1, inf)
///   cvar                 rho(V) = min_t { t + E[(V - t)_+] / alpha },
///                        alpha in (0,1]; the mean of the worst alpha-tail
///
/// All three are coherent: convex, monotone, translation invariant and
/// positively homogeneous.
struct RiskMeasure {
    enum class Kind { expectation, mean_semideviation, cvar };

    Kind kind = Kind::expectation;
    double lambda = 0.0;  // mean_semideviation
    double p = 1.0;       // mean_semideviation
    double alpha = 1.0;   // cvar

    static RiskMeasure expectation();
    static RiskMeasure mean_semideviation(double lambda, double p);
    static RiskMeasure cvar(double alpha);

    /// Empty when parameters are in range, else one message per violation.
    std::vector<std::string> parameter_violations() const;

    std::string to_string() const;

    friend bool operator==(const RiskMeasure&, const RiskMeasure&) = default;
};

/// A finite probability distribution given as (value, probability) pairs.
/// Probabilities are nonnegative and sum to 1 within kStochasticTol.
struct FiniteDistribution {
    std::vector<double> values;
    std::vector<double> probs;

    FiniteDistribution() = default;
    FiniteDistribution(std::vector<double> v, std::vector<double> q)
        : values(std::move(v)), probs(std::move(q)) {}

    std::vector<std::string> violations() const;
};

/// Evaluates the measure on a finite distribution. CVaR is computed exactly
/// from the sorted support, splitting the boundary atom at the alpha
/// quantile. Throws std::invalid_argument on out-of-range parameters.
double evaluate(const RiskMeasure& measure, const FiniteDistribution& dist);

/// Allocation-free variant for hot loops; spans must have equal length.
double evaluate(const RiskMeasure& measure, std::span<const double> values,
                std::span<const double> probs);

}  // namespace rcmdp
