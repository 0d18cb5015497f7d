#include <random>

#include "doctest.h"
#include "revpomdp/errors.hpp"
#include "revpomdp/oracle.hpp"
#include "revpomdp/qualitative.hpp"
#include "revpomdp/quantitative.hpp"
#include "support.hpp"

using namespace revpomdp;

namespace {

ExactBelief half() { return ExactBelief(std::vector<Rational>{Rational(1, 2), Rational(1, 2)}); }

Rational abs(const Rational& x) { return x < 0 ? Rational(-x) : x; }

}  // namespace

TEST_CASE("exact T-step values") {
    const Pomdp chain = support::fixture("chain.json");
    CHECK(exact_tstep_value(chain, {1}, 3, ExactBelief::dirac(2, 0)) == Rational(7, 8));
    CHECK(exact_tstep_value(chain, {1}, 0, ExactBelief::dirac(2, 0)) == 0);
    CHECK(exact_tstep_value(chain, {1}, 0, ExactBelief::dirac(2, 1)) == 1);
    const Pomdp r2 = support::fixture("r2.json");
    CHECK(exact_tstep_value(r2, {1}, 1, half()) == Rational(3, 8));
    // step 2: 3/8 + P(noise)·P(s2 | (¼,¾)) + P(s1)·¼
    CHECK(exact_tstep_value(r2, {1}, 2, half()) == Rational(3, 8) + Rational(1, 2) * Rational(7, 16) +
                                                       Rational(1, 8) * Rational(1, 4));
    CHECK_THROWS_AS(exact_tstep_value(r2, {1}, 40, half(), 5), ResourceLimitError);
}

TEST_CASE("exact values are monotone in T and 1-Lipschitz on a support") {
    std::mt19937_64 rng(61);
    for (int trial = 0; trial < 40; ++trial) {
        support::ModelShape shape;
        shape.max_states = 3;
        const Pomdp m = support::random_revealing_model(rng, shape);
        const auto& targets = m.require_targets();
        std::vector<StateId> on;
        for (StateId s = 0; s < m.num_states(); ++s)
            if (support::coin(rng, 0.6)) on.push_back(s);
        if (on.empty()) on.push_back(0);
        const ExactBelief b = support::random_belief(rng, m.num_states(), on);
        const ExactBelief c = support::random_belief(rng, m.num_states(), on);
        Rational previous = -1;
        for (std::uint64_t T = 0; T <= 4; ++T) {
            const Rational vb = exact_tstep_value(m, targets, T, b);
            CHECK(vb >= previous);
            CHECK(vb <= 1);
            previous = vb;
            CHECK(abs(vb - exact_tstep_value(m, targets, T, c)) <= l1_distance(b, c));
        }
    }
}

TEST_CASE("exact value handle on the gamble fixture") {
    const Pomdp m = support::fixture("gamble.json");
    const auto goal = *m.find_state("goal"), fail = *m.find_state("fail");
    const auto t0 = *m.find_state("t0"), t1 = *m.find_state("t1");
    const auto handle = ExactValueHandle::build(
        m, {goal}, {initial_belief(m), ExactBelief::dirac(4, t0), ExactBelief::dirac(4, t1)});
    auto value = [&](const ExactBelief& b) { return handle.value(*handle.find(b)); };
    CHECK(value(ExactBelief::dirac(4, goal)) == 1);
    CHECK(value(ExactBelief::dirac(4, fail)) == 0);
    CHECK(value(ExactBelief::dirac(4, t1)) == Rational(3, 4));
    CHECK(value(ExactBelief::dirac(4, t0)) == Rational(5, 8));
    CHECK(reliable_actions(handle, ExactBelief::dirac(4, t1)) == std::vector<ActionId>{*m.find_action("risky")});
    CHECK(reliable_actions(handle, ExactBelief::dirac(4, t0)) == std::vector<ActionId>{*m.find_action("safe")});
    // long finite horizons approach the infinite-horizon value from below
    const Rational v = value(initial_belief(m));
    const Rational vT = exact_tstep_value(m, {goal}, 60, initial_belief(m));
    CHECK(vT <= v);
    CHECK(to_double(v - vT) < 1e-9);
    CHECK_THROWS_AS(reliable_actions(handle, ExactBelief(std::vector<Rational>{Rational(1, 3), Rational(2, 3), 0, 0})),
                    std::out_of_range);
    CHECK_THROWS_AS(ExactValueHandle::build(support::fixture("r2.json"), {1}, {half()}, 50), ResourceLimitError);
}

TEST_CASE("reliable actions") {
    SUBCASE("identical actions are all reliable") {
        RawPomdp raw = support::fixture("chain.json").to_raw();
        raw.actions.push_back("b");
        auto copy = raw.transitions;
        for (auto t : copy) {
            t.action = "b";
            raw.transitions.push_back(t);
        }
        const Pomdp m = validate(raw);
        const auto handle = ExactValueHandle::build(m, {1}, {ExactBelief::dirac(2, 0)});
        CHECK(reliable_actions(handle, ExactBelief::dirac(2, 0)) == std::vector<ActionId>{0, 1});
    }
    SUBCASE("nonempty and value preserving on random finite-belief models") {
        std::mt19937_64 rng(62);
        for (int trial = 0; trial < 100; ++trial) {
            const Pomdp m = support::random_finite_belief_model(rng);
            const auto handle = ExactValueHandle::build(m, m.require_targets(), {initial_belief(m)});
            for (std::size_t node = 0; node < handle.size(); ++node) {
                const auto reliable = reliable_actions(handle, handle.belief(node));
                REQUIRE_FALSE(reliable.empty());
                for (ActionId a : reliable) CHECK(handle.expected_value(node, a) == handle.value(node));
            }
        }
    }
    SUBCASE("approximate handle") {
        const Pomdp m = support::fixture("progress.json");
        auto values = [](const Belief& b) { return b[1] > 1 - 1e-12 ? 1.0 : 0.9; };
        CHECK(reliable_actions(m, to_float(half()), values, 1e-9) == std::vector<ActionId>{*m.find_action("a")});
        CHECK(reliable_actions(m, to_float(half()), values, 1.0).size() == 2);
    }
}

TEST_CASE("simulation basics") {
    const Pomdp chain = support::fixture("chain.json");
    const auto policy = scripted_policy({0, 0, 0});
    SimulationConfig cfg;
    cfg.objective.targets = {1};
    cfg.cutoff = 3;
    cfg.runs = 10'000;
    cfg.seed = 7;
    const SimStats s = simulate(chain, *policy, cfg);
    CHECK(std::abs(s.success_rate() - 0.875) <= 3 * std::sqrt(0.875 * 0.125 / 10'000.0));
    CHECK(s == simulate(chain, *policy, cfg));
    auto threaded = cfg;
    threaded.threads = 4;
    CHECK(s == simulate(chain, *policy, threaded));
    std::uint64_t mass = 0;
    for (auto c : s.hitting_histogram) mass += c;
    CHECK(mass == s.runs);
    CHECK(s.hitting_histogram.size() == 5);
    CHECK(s.hitting_histogram[0] == 0);
    CHECK(s.hits_within(3) == s.successes);
    const std::string csv = histogram_csv(s);
    CHECK(csv.rfind("step,count\n0,0\n", 0) == 0);
    CHECK(csv.find("never,") != std::string::npos);

    auto other = cfg;
    other.seed = 8;
    CHECK_FALSE(s == simulate(chain, *policy, other));

    auto bad = cfg;
    bad.cutoff = 0;
    CHECK_THROWS_AS(simulate(chain, *policy, bad), std::invalid_argument);
    bad = cfg;
    bad.objective.predicate = Predicate::ParityProxy;
    CHECK_THROWS_AS(simulate(chain, *policy, bad), std::invalid_argument);
}

TEST_CASE("deterministic reveal-and-absorb model always succeeds") {
    RawPomdp raw;
    raw.revealing = true;
    raw.states = raw.signals = {"x", "y"};
    raw.actions = {"go"};
    raw.transitions = {{"x", "go", "y", "y", Rational(1)}, {"y", "go", "y", "y", Rational(1)}};
    raw.initial = {{"x", Rational(1)}};
    const Pomdp m = validate(raw);
    SimulationConfig cfg;
    cfg.objective.targets = {1};
    cfg.cutoff = 2;
    cfg.runs = 500;
    const SimStats s = simulate(m, *uniform_random_policy(m), cfg);
    CHECK(s.successes == s.runs);
    CHECK(s.hitting_histogram[1] == s.runs);
}

TEST_CASE("halting and the parity proxy") {
    const Pomdp even = support::fixture("r2_even.json");
    SimulationConfig cfg;
    cfg.objective.predicate = Predicate::ParityProxy;
    cfg.objective.priorities = even.require_priorities();
    cfg.cutoff = 10;
    cfg.runs = 100;
    CHECK(simulate(even, *uniform_random_policy(even), cfg).successes == 100);
    // a script shorter than the window halts the run, which fails the proxy
    CHECK(simulate(even, *scripted_policy({0}), cfg).successes == 0);
    const Pomdp odd = support::fixture("r2_odd.json");
    cfg.objective.priorities = odd.require_priorities();
    CHECK(simulate(odd, *uniform_random_policy(odd), cfg).successes == 0);
}

TEST_CASE("uniform reliable policy") {
    const Pomdp m = support::fixture("gamble.json");
    const auto goal = *m.find_state("goal");
    auto handle = std::make_shared<const ExactValueHandle>(ExactValueHandle::build(m, {goal}, {initial_belief(m)}));
    const auto policy = uniform_reliable_policy(handle);
    CHECK(policy->kind() == PolicyKind::UniformReliable);
    SimulationConfig cfg;
    cfg.objective.targets = {goal};
    cfg.hitting_set = terminal_states(m, {goal}).states;
    cfg.cutoff = 200;
    cfg.runs = 20'000;
    cfg.seed = 11;
    const SimStats s = simulate(m, *policy, cfg);
    const double v = to_double(handle->value(*handle->find(initial_belief(m))));
    CHECK(std::abs(s.success_rate() - v) <= 3 * std::sqrt(v * (1 - v) / 20'000.0) + 1e-12);

    // hitting time tail
    const StoppingParams p = stopping_parameters(m);
    const double q = to_double(p.q);
    const double runs = static_cast<double>(s.runs);
    for (std::uint64_t k = 1; k <= 5; ++k) {
        const double tail = (runs - static_cast<double>(s.hits_within(k * static_cast<std::uint64_t>(p.n)))) / runs;
        const double bound = std::pow(1 - q, static_cast<double>(k));
        CHECK(tail <= bound + 3 * std::sqrt(bound * (1 - bound) / runs) + 1e-12);
    }
}

TEST_CASE("fully revealing model hits terminal Diracs at the first step") {
    const Pomdp fig = support::fixture("guess_revealing.json");
    const StateId top = *fig.find_state("⊤");
    const auto handle = std::make_shared<const ExactValueHandle>(
        ExactValueHandle::build(fig, {top}, {ExactBelief::dirac(4, 0)}));
    SimulationConfig cfg;
    cfg.objective.targets = {top};
    cfg.hitting_set = terminal_states(fig, {top}).states;
    cfg.cutoff = 20;
    cfg.runs = 1000;
    const SimStats s = simulate(fig, *uniform_reliable_policy(handle), cfg);
    // initial state s0 is not terminal; every later state is revealed
    CHECK(s.hitting_histogram[0] == 0);
    CHECK(s.successes == s.runs);
}

TEST_CASE("policy kinds") {
    CHECK(to_string(PolicyKind::GridGreedy) == "grid-greedy");
    CHECK(to_string(PolicyKind::UniformReliable) == "uniform-reliable");
    const auto script = scripted_policy({1, 0});
    std::mt19937_64 rng(1);
    script->reset(ExactBelief::dirac(1, 0));
    CHECK(script->choose(rng) == ActionId{1});
    script->observe(1, 0);
    CHECK(script->choose(rng) == ActionId{0});
    script->observe(0, 0);
    CHECK_FALSE(script->choose(rng));
}
