#include "rcmdp/risk_measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace rcmdp {

RiskMeasure RiskMeasure::expectation() {
    return RiskMeasure{Kind::expectation, 0.0, 1.0, 1.0};
}

RiskMeasure RiskMeasure::mean_semideviation(double lambda, double p) {
    RiskMeasure m{Kind::mean_semideviation, lambda, p, 1.0};
    auto bad = m.parameter_violations();
    if (!bad.empty()) throw std::invalid_argument(bad.front());
    return m;
}

RiskMeasure RiskMeasure::cvar(double alpha) {
    RiskMeasure m{Kind::cvar, 0.0, 1.0, alpha};
    auto bad = m.parameter_violations();
    if (!bad.empty()) throw std::invalid_argument(bad.front());
    return m;
}

std::vector<std::string> RiskMeasure::parameter_violations() const {
    std::vector<std::string> out;
    char buf[128];
    switch (kind) {
        case Kind::expectation:
            break;
        case Kind::mean_semideviation:
            if (!(lambda >= 0.0 && lambda <= 1.0)) {
                std::snprintf(buf, sizeof(buf), "mean-semideviation lambda %g outside [0, 1]",
                              lambda);
                out.emplace_back(buf);
            }
            if (!(p >= 1.0) || !std::isfinite(p)) {
                std::snprintf(buf, sizeof(buf), "mean-semideviation p %g outside [1, inf)", p);
                out.emplace_back(buf);
            }
            break;
        case Kind::cvar:
            if (!(alpha > 0.0 && alpha <= 1.0)) {
                std::snprintf(buf, sizeof(buf), "cvar alpha %g outside (0, 1]", alpha);
                out.emplace_back(buf);
            }
            break;
    }
    return out;
}

std::string RiskMeasure::to_string() const {
    char buf[128];
    switch (kind) {
        case Kind::expectation:
            return "expectation";
        case Kind::mean_semideviation:
            std::snprintf(buf, sizeof(buf), "mean_semideviation(lambda=%g, p=%g)", lambda, p);
            return buf;
        case Kind::cvar:
            std::snprintf(buf, sizeof(buf), "cvar(alpha=%g)", alpha);
            return buf;
    }
    return "unknown";
}

std::vector<std::string> FiniteDistribution::violations() const {
    std::vector<std::string> out;
    if (values.size() != probs.size()) {
        out.push_back("values and probs have different lengths");
        return out;
    }
    double sum = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] < 0.0) out.push_back("negative probability at atom " + std::to_string(i));
        sum += probs[i];
    }
    if (std::abs(sum - 1.0) > 1e-12)
        out.push_back("probabilities sum to " + std::to_string(sum));
    return out;
}

namespace {

double mean(std::span<const double> values, std::span<const double> probs) {
    double m = 0.0;
    for (size_t i = 0; i < values.size(); ++i)
        if (probs[i] > 0.0) m += probs[i] * values[i];
    return m;
}

double semideviation(std::span<const double> values, std::span<const double> probs, double m,
                     double p) {
    double acc = 0.0;
    for (size_t i = 0; i < values.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        double dev = values[i] - m;
        if (dev > 0.0) acc += probs[i] * std::pow(dev, p);
    }
    return acc > 0.0 ? std::pow(acc, 1.0 / p) : 0.0;
}

// Mean of the upper alpha-tail, splitting the atom that straddles the
// quantile. Equals min_t { t + E[(V - t)_+] / alpha }.
double cvar_sorted(std::span<const double> values, std::span<const double> probs, double alpha) {
    thread_local std::vector<int> order;
    order.resize(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return values[a] > values[b]; });

    double remaining = alpha;
    double acc = 0.0;
    for (int i : order) {
        double q = probs[i];
        if (q <= 0.0) continue;
        double take = std::min(q, remaining);
        acc += take * values[i];
        remaining -= take;
        if (remaining <= 0.0) break;
    }
    if (remaining > 0.0 && !order.empty()) {
        // Probability dust from rounding: extend the final atom.
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            if (probs[*it] > 0.0) {
                acc += remaining * values[*it];
                break;
            }
        }
    }
    return acc / alpha;
}

}  // namespace

double evaluate(const RiskMeasure& measure, std::span<const double> values,
                std::span<const double> probs) {
    if (values.size() != probs.size())
        throw std::invalid_argument("distribution values and probs have different lengths");
    if (values.empty()) throw std::invalid_argument("distribution is empty");
    auto bad = measure.parameter_violations();
    if (!bad.empty()) throw std::invalid_argument(bad.front());

    switch (measure.kind) {
        case RiskMeasure::Kind::expectation:
            return mean(values, probs);
        case RiskMeasure::Kind::mean_semideviation: {
            double m = mean(values, probs);
            if (measure.lambda == 0.0) return m;
            return m + measure.lambda * semideviation(values, probs, m, measure.p);
        }
        case RiskMeasure::Kind::cvar:
            return cvar_sorted(values, probs, measure.alpha);
    }
    throw std::logic_error("unhandled risk measure kind");
}

double evaluate(const RiskMeasure& measure, const FiniteDistribution& dist) {
    return evaluate(measure, std::span<const double>(dist.values),
                    std::span<const double>(dist.probs));
}

}  // namespace rcmdp
