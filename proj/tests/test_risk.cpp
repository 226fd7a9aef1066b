#include <doctest.h>

#include <cmath>
#include <random>

#include "rcmdp/rcmdp.hpp"
#include "support/instances.hpp"

using namespace rcmdp;
using namespace testsupport;

TEST_CASE("evaluate: deterministic distributions are fixed points of every measure") {
    FiniteDistribution point({5.0}, {1.0});
    CHECK(evaluate(RiskMeasure::expectation(), point) == 5.0);
    CHECK(evaluate(RiskMeasure::mean_semideviation(0.7, 2.0), point) == 5.0);
    CHECK(evaluate(RiskMeasure::cvar(0.3), point) == 5.0);
}

TEST_CASE("evaluate: mean-semideviation with lambda 0 is the mean") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 50; ++t) {
        int n = 1 + static_cast<int>(rng() % 6);
        FiniteDistribution dist;
        double mass = 0.0;
        for (int i = 0; i < n; ++i) {
            dist.values.push_back(-3.0 + 6.0 * unit_draw(rng));
            dist.probs.push_back(-std::log(std::max(unit_draw(rng), 1e-12)));
            mass += dist.probs.back();
        }
        for (double& p : dist.probs) p /= mass;
        double mean = evaluate(RiskMeasure::expectation(), dist);
        CHECK(evaluate(RiskMeasure::mean_semideviation(0.0, 3.0), dist) ==
              doctest::Approx(mean).epsilon(1e-12));
    }
}

TEST_CASE("evaluate: worked mean-semideviation value") {
    // Two-point distribution: 0 with probability 0.2, 0.5 with probability
    // 0.8; mean 0.4, upside second moment 0.8*(0.1)^2 = 0.008.
    FiniteDistribution dist({0.0, 0.5}, {0.2, 0.8});
    double expected = 0.4 + 0.5 * std::sqrt(0.008);
    CHECK(evaluate(RiskMeasure::mean_semideviation(0.5, 2.0), dist) ==
          doctest::Approx(expected).epsilon(1e-15));
    CHECK(naive_mean_semideviation(0.5, 2.0, dist.values, dist.probs) ==
          doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("evaluate: the maintenance constant K(x) fixes the distribution orientation") {
    // K(x) is the risk of carrying constraint cost c1 with probability 1-x
    // and 0 with probability x. The orientation matters: the mirrored
    // distribution gives a different value for x != 1/2.
    MaintenanceParams mp;
    FiniteDistribution oriented({mp.c1, 0.0}, {1.0 - mp.q, mp.q});
    RiskMeasure semidev = RiskMeasure::mean_semideviation(mp.lambda, mp.p);
    CHECK(evaluate(semidev, oriented) == doctest::Approx(maintenance_K(mp.q, mp)).epsilon(1e-14));
    CHECK(naive_mean_semideviation(mp.lambda, mp.p, oriented.values, oriented.probs) ==
          doctest::Approx(maintenance_K(mp.q, mp)).epsilon(1e-14));

    FiniteDistribution mirrored({mp.c1, 0.0}, {mp.q, 1.0 - mp.q});
    CHECK(evaluate(semidev, mirrored) != doctest::Approx(maintenance_K(mp.q, mp)).epsilon(1e-6));
}

TEST_CASE("evaluate: cvar at level 1 is the mean; otherwise matches the minimization form") {
    std::mt19937_64 rng(12);
    for (int t = 0; t < 60; ++t) {
        int n = 1 + static_cast<int>(rng() % 6);
        FiniteDistribution dist;
        double mass = 0.0;
        for (int i = 0; i < n; ++i) {
            dist.values.push_back(-4.0 + 8.0 * unit_draw(rng));
            dist.probs.push_back(-std::log(std::max(unit_draw(rng), 1e-12)));
            mass += dist.probs.back();
        }
        for (double& p : dist.probs) p /= mass;

        double mean = evaluate(RiskMeasure::expectation(), dist);
        CHECK(evaluate(RiskMeasure::cvar(1.0), dist) == doctest::Approx(mean).epsilon(1e-12));

        for (double alpha : {0.1, 0.35, 0.5, 0.9}) {
            double reference = naive_cvar(alpha, dist.values, dist.probs);
            CHECK(evaluate(RiskMeasure::cvar(alpha), dist) ==
                  doctest::Approx(reference).epsilon(1e-12));
        }
    }
}

TEST_CASE("evaluate rejects out-of-range parameters") {
    FiniteDistribution dist({1.0, 2.0}, {0.5, 0.5});
    RiskMeasure bad{RiskMeasure::Kind::mean_semideviation, 1.5, 2.0, 1.0};
    CHECK_THROWS_AS(evaluate(bad, dist), std::invalid_argument);
    RiskMeasure bad_p{RiskMeasure::Kind::mean_semideviation, 0.5, 0.5, 1.0};
    CHECK_THROWS_AS(evaluate(bad_p, dist), std::invalid_argument);
    RiskMeasure bad_alpha{RiskMeasure::Kind::cvar, 0.0, 1.0, 0.0};
    CHECK_THROWS_AS(evaluate(bad_alpha, dist), std::invalid_argument);
    CHECK_THROWS_AS(RiskMeasure::cvar(1.5), std::invalid_argument);
    CHECK_THROWS_AS(RiskMeasure::mean_semideviation(-0.1, 1.0), std::invalid_argument);
}

TEST_CASE("one_step_risk: constant continuations come back unchanged") {
    ProblemSpec spec = maintenance_spec();
    std::vector<double> constant{0.7, 0.7};
    for (const auto& measure :
         {RiskMeasure::expectation(), RiskMeasure::mean_semideviation(1.0, 2.0),
          RiskMeasure::cvar(0.25)}) {
        CHECK(one_step_risk(spec, measure, 0, 0, constant) == doctest::Approx(0.7).epsilon(1e-15));
        CHECK(one_step_risk(spec, measure, 1, 1, constant) == doctest::Approx(0.7).epsilon(1e-15));
    }
}

TEST_CASE("one_step_risk: expectation measure is the kernel dot product") {
    std::mt19937_64 rng(13);
    for (int t = 0; t < 20; ++t) {
        ProblemSpec spec = random_instance(rng);
        std::vector<double> values(spec.num_states);
        for (double& v : values) v = -2.0 + 4.0 * unit_draw(rng);
        for (int x = 0; x < spec.num_states; ++x)
            for (size_t s = 0; s < spec.admissible[x].size(); ++s) {
                int u = spec.admissible[x][s];
                double dot = 0.0;
                for (int y = 0; y < spec.num_states; ++y) dot += spec.kernel[x][s][y] * values[y];
                CHECK(one_step_risk(spec, RiskMeasure::expectation(), x, u, values) ==
                      doctest::Approx(dot).epsilon(1e-12));
            }
    }
}

TEST_CASE("one_step_risk: maintenance wait control reproduces K(h)") {
    MaintenanceParams mp;
    ProblemSpec spec = maintenance_spec(mp);
    // Waiting in the healthy state leads to the failed state with
    // probability 1-h; the minimum-risk continuation carries c1 there.
    std::vector<double> next{0.0, mp.c1};
    CHECK(one_step_risk(spec, spec.risk, 0, 0, next) ==
          doctest::Approx(maintenance_K(mp.h, mp)).epsilon(1e-14));
    CHECK(one_step_risk(spec, spec.risk, 0, 1, next) ==
          doctest::Approx(maintenance_K(mp.q, mp)).epsilon(1e-14));
}

TEST_CASE("one_step_risk rejects inadmissible controls") {
    ProblemSpec spec = maintenance_spec();
    spec.admissible[0] = {1};
    spec.kernel[0] = {spec.kernel[0][1]};
    spec.stage_cost[0] = {spec.stage_cost[0][1]};
    spec.constraint_cost[0] = {spec.constraint_cost[0][1]};
    std::vector<double> values{0.0, 0.0};
    CHECK_THROWS_AS(one_step_risk(spec, spec.risk, 0, 0, values), std::invalid_argument);
}

TEST_CASE("policy_risk: zero constraint costs have zero risk under every measure") {
    std::mt19937_64 rng(14);
    for (const auto& measure :
         {RiskMeasure::expectation(), RiskMeasure::mean_semideviation(0.8, 2.0),
          RiskMeasure::cvar(0.4)}) {
        ProblemSpec spec = random_instance(rng);
        for (auto& row : spec.constraint_cost) std::fill(row.begin(), row.end(), 0.0);
        spec.risk = measure;
        HistoryPolicy policy = random_tree_policy(spec, rng, 0, spec.initial_state);
        CHECK(policy_risk(spec, policy, 0, spec.initial_state) ==
              doctest::Approx(0.0).epsilon(1e-15));
    }
}

TEST_CASE("policy_risk: nested expectations collapse to the expected d-sum") {
    std::mt19937_64 rng(15);
    InstanceConfig cfg;
    cfg.max_states = 4;
    cfg.max_horizon = 4;
    for (int t = 0; t < 30; ++t) {
        ProblemSpec spec = random_instance(rng, cfg);
        spec.risk = RiskMeasure::expectation();
        HistoryPolicy policy = random_tree_policy(spec, rng, 0, spec.initial_state);

        ProblemSpec d_as_c = spec;
        d_as_c.stage_cost = spec.constraint_cost;
        d_as_c.sentinel = d_as_c.default_sentinel();

        CHECK(policy_risk(spec, policy, 0, spec.initial_state) ==
              doctest::Approx(expected_cost(d_as_c, policy, 0, spec.initial_state))
                  .epsilon(1e-9));
    }
}

TEST_CASE("policy_risk: repairing a failed machine has risk c1 + K(q) at best") {
    MaintenanceParams mp;
    ProblemSpec spec = maintenance_spec(mp);
    // Stage 0 control is fixed to repair; enumerate the four stage-1 Markov
    // continuations and take the smallest nested risk.
    double best = std::numeric_limits<double>::infinity();
    for (int u_healthy : {0, 1}) {
        for (int u_failed : {0, 1}) {
            HistoryPolicy policy = HistoryPolicy::stage_state([=](int k, int x) {
                if (k == 0) return 1;
                return x == 0 ? u_healthy : u_failed;
            });
            best = std::min(best, policy_risk(spec, policy, 0, 1));
        }
    }
    CHECK(best == doctest::Approx(mp.c1 + maintenance_K(mp.q, mp)).epsilon(1e-14));
}

TEST_CASE("coherence axioms hold on random distributions for every implemented measure") {
    std::vector<RiskMeasure> measures{
        RiskMeasure::expectation(),
        RiskMeasure::mean_semideviation(0.5, 1.0),
        RiskMeasure::mean_semideviation(1.0, 2.0),
        RiskMeasure::cvar(0.2),
        RiskMeasure::cvar(1.0),
    };
    std::uint64_t seed = 991;
    for (const auto& m : measures) {
        auto report = check_coherence(m, 2000, seed++);
        INFO(m.to_string());
        CHECK(report.pass(1e-9));
    }
}

TEST_CASE("mean-semideviation dominates the mean") {
    std::mt19937_64 rng(16);
    RiskMeasure semidev = RiskMeasure::mean_semideviation(0.6, 2.0);
    for (int t = 0; t < 100; ++t) {
        int n = 1 + static_cast<int>(rng() % 6);
        FiniteDistribution dist;
        double mass = 0.0;
        for (int i = 0; i < n; ++i) {
            dist.values.push_back(-3.0 + 6.0 * unit_draw(rng));
            dist.probs.push_back(-std::log(std::max(unit_draw(rng), 1e-12)));
            mass += dist.probs.back();
        }
        for (double& p : dist.probs) p /= mass;
        CHECK(evaluate(semidev, dist) >= evaluate(RiskMeasure::expectation(), dist) - 1e-12);
    }
}

TEST_CASE("time consistency: stage-wise tail dominance propagates backward") {
    // Two policies that agree on every stage except the last, where one
    // plays the cheapest constraint control and the other the dearest. They
    // share every transition up to the final stage, so the cheap variant's
    // tail risk dominates node-wise at stage 1; monotonicity of the nested
    // composition forces dominance at stage 0 as well.
    std::mt19937_64 rng(17);
    for (int t = 0; t < 30; ++t) {
        ProblemSpec spec = random_instance(rng);
        if (spec.horizon < 2) continue;
        spec.risk = RiskMeasure::mean_semideviation(unit_draw(rng), 1.0 + 2.0 * unit_draw(rng));

        auto control_by_d = [&spec](int x, bool largest) {
            size_t best = 0;
            for (size_t s = 1; s < spec.admissible[x].size(); ++s) {
                bool better = largest
                                  ? spec.constraint_cost[x][s] > spec.constraint_cost[x][best]
                                  : spec.constraint_cost[x][s] < spec.constraint_cost[x][best];
                if (better) best = s;
            }
            return spec.admissible[x][best];
        };

        // Shared prefix controls, fixed per (stage, state).
        std::vector<std::vector<int>> prefix(spec.horizon,
                                             std::vector<int>(spec.num_states, 0));
        for (auto& stage : prefix)
            for (int x = 0; x < spec.num_states; ++x)
                stage[x] = spec.admissible[x][rng() % spec.admissible[x].size()];

        int last = spec.horizon - 1;
        HistoryPolicy cheap = HistoryPolicy::stage_state([&, last](int k, int x) {
            return k == last ? control_by_d(x, false) : prefix[k][x];
        });
        HistoryPolicy dear = HistoryPolicy::stage_state([&, last](int k, int x) {
            return k == last ? control_by_d(x, true) : prefix[k][x];
        });

        int x0 = spec.initial_state;
        bool premise = true;
        for (int y = 0; y < spec.num_states && premise; ++y) {
            if (spec.kernel_row(x0, prefix[0][x0])[y] <= 0.0) continue;
            premise = policy_risk(spec, cheap, 1, y) <= policy_risk(spec, dear, 1, y) + 1e-12;
        }
        REQUIRE(premise);
        CHECK(policy_risk(spec, cheap, 0, x0) <= policy_risk(spec, dear, 0, x0) + 1e-12);
    }
}
