// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "revpomdp/errors.hpp"
#include "revpomdp/modelio.hpp"
#include "revpomdp/oracle.hpp"
#include "revpomdp/qualitative.hpp"
#include "revpomdp/quantitative.hpp"
#include "support.hpp"

using namespace revpomdp;

namespace {

// Pinned tolerances and sample sizes.
const Rational kOracleEpsilon(1, 10);
constexpr int kOracleModels = 60;
constexpr std::uint64_t kOracleMaxHorizon = 6;
const Rational kReductionEpsilon(1, 20);
constexpr int kReductionModels = 24;
const Rational kCoincidenceEpsilon(1, 20);
constexpr double kCoincidenceFloor = 0.95;
constexpr int kStoppingFixtures = 12;
constexpr std::uint64_t kStoppingRuns = 100'000;
constexpr double kSigmas = 3.0;
constexpr std::uint64_t kLipschitzHorizon = 6;
constexpr int kLipschitzPairs = 8;
constexpr std::int64_t kProjectionMaxK = 12;
constexpr int kProjectionExhaustive = 3000;
constexpr int kProjectionBound = 10'000;
constexpr int kMecInstances = 200;
const Rational kPolicyEpsilon(1, 20);
constexpr std::uint64_t kPolicyRuns = 10'000;
constexpr std::uint64_t kPolicyCutoff = 200;
constexpr int kFuzzDocuments = 100'000;

struct Verdict {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

std::string fmt(double x, int digits = 4) {
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.*g", digits, x);
    return buffer;
}

std::vector<std::string> all_fixture_files() {
    std::vector<std::string> out;
    for (const auto& entry : std::filesystem::directory_iterator(REVPOMDP_FIXTURES))
        if (entry.path().extension() == ".json") out.push_back(entry.path().filename().string());
    std::sort(out.begin(), out.end());
    return out;
}

/// Oracle-scale fixtures: finite exact belief sets.
std::vector<Pomdp> finite_belief_fixtures() {
    std::vector<Pomdp> out{support::fixture("gamble.json")};
    std::mt19937_64 rng(404);
    while (out.size() < kStoppingFixtures) out.push_back(support::random_finite_belief_model(rng));
    return out;
}

Verdict oracle_equivalence() {
    std::mt19937_64 rng(101);
    int agree = 0;
    double worst = 0;
    for (int i = 0; i < kOracleModels; ++i) {
        const Pomdp m = support::random_revealing_model(rng);
        const std::uint64_t T = support::uniform(rng, 1, kOracleMaxHorizon);
        const ExactBelief b = initial_belief(m);
        const auto& X = m.require_targets();
        const Rational exact = exact_tstep_value(m, X, T, b);
        const double grid = tstep_value(m, X, T, kOracleEpsilon, b).value;
        const double err = std::abs(grid - to_double(exact));
        worst = std::max(worst, err);
        agree += err <= to_double(kOracleEpsilon);
    }
    return {agree == kOracleModels, std::to_string(agree) + "/" + std::to_string(kOracleModels) +
                                        " models within eps=0.1, max error " + fmt(worst)};
}

Verdict fully_observable_reduction() {
    std::mt19937_64 rng(102);
    support::ModelShape shape;
    shape.fully_revealing = true;
    int queries = 0, agree = 0;
    double worst = 0;
    for (int i = 0; i < kReductionModels; ++i) {
        const Pomdp m = support::random_revealing_model(rng, shape);
        const FiniteMdp mdp = support::state_mdp(m);
        const auto& pr = m.require_priorities();
        const auto mdp_values = quantitative_reach(mdp, almost_sure_parity(mdp, pr).winning);
        for (StateId s = 0; s < m.num_states(); ++s) {
            const double v = parity_value(m, pr, kReductionEpsilon, ExactBelief::dirac(m.num_states(), s)).value;
            const double err = std::abs(v - mdp_values.values[s]);
            worst = std::max(worst, err);
            ++queries;
            agree += err <= to_double(kReductionEpsilon);
        }
    }
    return {agree == queries, std::to_string(kReductionModels) + " models, " + std::to_string(agree) + "/" +
                                  std::to_string(queries) + " Dirac queries within 0.05, max error " + fmt(worst)};
}

Verdict qualitative_coincidence() {
    int verdicts = 0, coincide = 0, dirac = 0, high = 0;
    double lowest = 1;
    for (const auto& name : support::fixture_names()) {
        const Pomdp m = support::fixture(name);
        const auto& pr = m.require_priorities();
        ++verdicts;
        coincide += limit_sure_winning(m, pr).winning == almost_sure_winning(m, pr);
        for (StateId s : almost_sure_parity_states(m, pr)) {
            const double v = parity_value(m, pr, kCoincidenceEpsilon, ExactBelief::dirac(m.num_states(), s)).value;
            ++dirac;
            high += v >= kCoincidenceFloor;
            lowest = std::min(lowest, v);
        }
    }
    return {coincide == verdicts && high == dirac,
            std::to_string(coincide) + "/" + std::to_string(verdicts) + " fixtures coincide; " + std::to_string(high) +
                "/" + std::to_string(dirac) + " Diracs on X with value >= 0.95 (min " + fmt(lowest) + ")"};
}

Verdict stopping_bound() {
    int ok = 0, count = 0;
    double worst_margin = 1e9;
    for (const Pomdp& m : finite_belief_fixtures()) {
        const auto& X = m.require_targets();
        auto handle = std::make_shared<const ExactValueHandle>(ExactValueHandle::build(m, X, {initial_belief(m)}));
        const StoppingParams p = stopping_parameters(m);
        SimulationConfig cfg;
        cfg.objective.targets = X;
        cfg.hitting_set = terminal_states(m, X).states;
        cfg.cutoff = static_cast<std::uint64_t>(p.n);
        cfg.runs = kStoppingRuns;
        cfg.seed = 7000 + static_cast<std::uint64_t>(count);
        const SimStats s = simulate(m, *uniform_reliable_policy(handle), cfg);
        const double rate = static_cast<double>(s.hits_within(cfg.cutoff)) / static_cast<double>(s.runs);
        const double q = to_double(p.q);
        const double sigma = std::sqrt(q * (1 - q) / static_cast<double>(s.runs));
        worst_margin = std::min(worst_margin, rate - (q - kSigmas * sigma));
        ok += rate >= q - kSigmas * sigma;
        ++count;
    }
    return {ok == count, std::to_string(ok) + "/" + std::to_string(count) +
                             " fixtures hit D_T within n steps at rate >= q - 3 sigma (min margin " +
                             fmt(worst_margin) + ", 1e5 runs each)"};
}

Verdict martingale() {
    std::size_t checked = 0, equal = 0;
    int fixtures = 0;
    for (const Pomdp& m : finite_belief_fixtures()) {
        const auto handle = ExactValueHandle::build(m, m.require_targets(), {initial_belief(m)});
        for (std::size_t node = 0; node < handle.size(); ++node)
            for (ActionId a : reliable_actions(handle, handle.belief(node))) {
                ++checked;
                equal += handle.expected_value(node, a) == handle.value(node);
            }
        ++fixtures;
    }
    return {equal == checked && checked > 0, std::to_string(equal) + "/" + std::to_string(checked) +
                                                 " (belief, reliable action) pairs exact on " +
                                                 std::to_string(fixtures) + " fixtures"};
}

Verdict lipschitz_monotone() {
    std::vector<Pomdp> models;
    for (const auto& name : support::fixture_names()) models.push_back(support::fixture(name));
    for (auto& m : finite_belief_fixtures()) models.push_back(std::move(m));
    std::mt19937_64 rng(106);
    std::size_t lipschitz = 0, lipschitz_ok = 0, monotone = 0, monotone_ok = 0;
    for (const Pomdp& m : models) {
        const auto& X = m.require_targets();
        for (int pair = 0; pair < kLipschitzPairs; ++pair) {
            std::vector<StateId> on;
            for (StateId s = 0; s < m.num_states(); ++s)
                if (support::coin(rng, 0.6)) on.push_back(s);
            if (on.empty()) on.push_back(static_cast<StateId>(support::uniform(rng, 0, m.num_states() - 1)));
            const ExactBelief b = support::random_belief(rng, m.num_states(), on);
            const ExactBelief c = support::random_belief(rng, m.num_states(), on);
            Rational previous = 0;
            for (std::uint64_t T = 0; T <= kLipschitzHorizon; ++T) {
                const Rational vb = exact_tstep_value(m, X, T, b), vc = exact_tstep_value(m, X, T, c);
                ++lipschitz;
                lipschitz_ok += abs(vb - vc) <= l1_distance(b, c);
                if (T > 0) {
                    ++monotone;
                    monotone_ok += vb >= previous;
                }
                previous = vb;
            }
        }
    }
    return {lipschitz_ok == lipschitz && monotone_ok == monotone,
            "Lipschitz " + std::to_string(lipschitz_ok) + "/" + std::to_string(lipschitz) + ", monotone " +
                std::to_string(monotone_ok) + "/" + std::to_string(monotone) + " on " + std::to_string(models.size()) +
                " fixtures, T <= 6, exact"};
}

Verdict projection_contract() {
    std::mt19937_64 rng(107);
    int optimal = 0;
    for (int i = 0; i < kProjectionExhaustive; ++i) {
        const std::size_t n = support::uniform(rng, 1, 4);
        std::vector<StateId> on;
        for (StateId s = 0; s < n; ++s)
            if (support::coin(rng, 0.7)) on.push_back(s);
        if (on.empty()) on.push_back(0);
        const auto k = static_cast<std::int64_t>(support::uniform(rng, on.size(), kProjectionMaxK));
        const ExactBelief b = support::random_belief(rng, n, on, 97);
        const Grid g(k, n);
        const Rational d = l1_distance(g.belief<Rational>(project(b, g)), b);
        Rational best = 3;
        for (const auto& p : g.points()) {
            bool same = true;
            for (StateId s = 0; s < n; ++s) same = same && ((p[s] > 0) == (b[s] > 0));
            if (same) best = std::min(best, l1_distance(g.belief<Rational>(p), b));
        }
        optimal += d == best;
    }
    int bounded = 0;
    for (int i = 0; i < kProjectionBound; ++i) {
        const std::size_t n = support::uniform(rng, 1, 6);
        std::vector<StateId> on;
        for (StateId s = 0; s < n; ++s)
            if (support::coin(rng, 0.7)) on.push_back(s);
        if (on.empty()) on.push_back(0);
        const auto k = static_cast<std::int64_t>(support::uniform(rng, on.size(), 200));
        const ExactBelief b = support::random_belief(rng, n, on, 1000);
        const Grid g(k, n);
        bounded += l1_distance(g.belief<Rational>(project(b, g)), b) <= Rational(static_cast<long>(n), k);
    }
    return {optimal == kProjectionExhaustive && bounded == kProjectionBound,
            std::to_string(optimal) + "/" + std::to_string(kProjectionExhaustive) +
                " L1-minimal (exhaustive, |S| <= 4, k <= 12); " + std::to_string(bounded) + "/" +
                std::to_string(kProjectionBound) + " within |S|/k"};
}

Verdict end_components() {
    std::mt19937_64 rng(108);
    int agree = 0;
    for (int i = 0; i < kMecInstances; ++i) {
        const FiniteMdp mdp = support::random_mdp(rng, support::uniform(rng, 1, 5), support::uniform(rng, 1, 3));
        agree += oracles::sorted(mec_decomposition(mdp)) == oracles::maximal_end_components(mdp);
    }
    const Pomdp fig = support::fixture("guess_revealing.json");
    auto id = [&](const char* name) { return *fig.find_state(name); };
    const std::size_t w = *fig.find_action("w"), c = *fig.find_action("c");
    const auto expected = oracles::sorted({EndComponent{{{id("⊥"), {w, c}}}},
                                           EndComponent{{{id("s0"), {w}}, {id("s1"), {w, c}}, {id("⊤"), {w, c}}}}});
    const bool guess = oracles::sorted(mec_decomposition(support::state_mdp(fig))) == expected;
    return {agree == kMecInstances && guess, std::to_string(agree) + "/" + std::to_string(kMecInstances) +
                                                  " random MDPs match brute force; guess-model MECs " +
                                                  (guess ? "exact" : "WRONG")};
}

Verdict policy_realization() {
    int ok = 0, count = 0;
    double worst = 1e9;
    for (const auto& name : support::fixture_names()) {
        const Pomdp m = support::fixture(name);
        const auto& pr = m.require_priorities();
        ValueOptions o;
        o.record_tables = true;
        const ValueReport r = parity_value(m, pr, kPolicyEpsilon, initial_belief(m), o);
        const auto policy = extract_policy(m, r.engine, parity_analysis(m, pr));
        SimulationConfig cfg;
        cfg.objective.predicate = Predicate::ParityProxy;
        cfg.objective.priorities = pr;
        cfg.hitting_set = r.targets;
        cfg.cutoff = kPolicyCutoff;
        cfg.runs = kPolicyRuns;
        cfg.seed = 9000 + static_cast<std::uint64_t>(count);
        const SimStats s = simulate(m, *policy, cfg);
        const double margin = s.success_rate() - (r.value - to_double(kPolicyEpsilon) - kSigmas * s.standard_error());
        worst = std::min(worst, margin);
        ok += margin >= 0;
        ++count;
    }
    return {ok == count, std::to_string(ok) + "/" + std::to_string(count) +
                             " fixtures with proxy success >= value - eps - 3 sigma (min margin " + fmt(worst) +
                             ", 1e4 runs, cutoff 200)"};
}

Verdict horizon_formula() {
    const StoppingParams p{4, Rational(1, 64)};
    const HorizonPlan plan = horizon_for_accuracy(p, Rational(1));
    Rational power = 1;
    for (int i = 0; i < 44; ++i) power *= Rational(63, 64);
    const bool bracket = power > Rational(1, 2) && power * Rational(63, 64) <= Rational(1, 2);
    bool monotone = true;
    int points = 0;
    for (const Rational& q : {Rational(1, 64), Rational(1, 7), Rational(1, 8192)}) {
        std::uint64_t previous = 0;
        for (long i = 1000; i >= 1; --i) {
            const std::uint64_t T = horizon_for_accuracy(StoppingParams{4, q}, Rational(i, 1000)).theoretical_horizon;
            monotone = monotone && T >= previous;
            previous = T;
            ++points;
        }
    }
    const bool ok = plan.theoretical_horizon == 180 && plan.blocks == 45 && plan.exactly_verified && bracket && monotone;
    return {ok, "T = " + std::to_string(plan.theoretical_horizon) + " (m = " + std::to_string(plan.blocks) +
                    ", exact check " + (bracket ? "(63/64)^44 > 1/2 >= (63/64)^45" : "FAILED") + "); " +
                    (monotone ? "nonincreasing in eps" : "NOT monotone") + " over " + std::to_string(points) +
                    " points"};
}

Verdict parser_robustness() {
    int round_trips = 0, files = 0;
    for (const auto& name : all_fixture_files()) {
        ++files;
        const Pomdp m = support::fixture(name);
        const std::string text = serialize_model(m);
        round_trips += parse_model(text) == m && serialize_model(parse_model(text)) == text;
    }
    std::mt19937_64 rng(111);
    const auto bases = all_fixture_files();
    std::vector<std::string> texts;
    for (const auto& name : bases) {
        std::ifstream in(support::fixture_path(name));
        std::stringstream ss;
        ss << in.rdbuf();
        texts.push_back(ss.str());
    }
    int accepted = 0, positioned = 0, invalid = 0, other = 0;
    for (int i = 0; i < kFuzzDocuments; ++i) {
        const std::string doc = support::mutate(texts[i % texts.size()], rng);
        try {
            parse_model(doc);
            ++accepted;
        } catch (const ParseError& e) {
            (e.line() >= 1 && e.column() >= 1 ? positioned : other)++;
        } catch (const ValidationError&) {
            ++invalid;
        } catch (...) {
            ++other;
        }
    }
    return {round_trips == files && other == 0,
            std::to_string(round_trips) + "/" + std::to_string(files) + " fixtures round-trip; " +
                std::to_string(kFuzzDocuments) + " mutants: " + std::to_string(positioned) + " positioned parse errors, " +
                std::to_string(invalid) + " validation errors, " + std::to_string(accepted) + " accepted, " +
                std::to_string(other) + " other"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"oracle equivalence", oracle_equivalence},
        {"fully observable reduction", fully_observable_reduction},
        {"qualitative coincidence", qualitative_coincidence},
        {"stopping bound", stopping_bound},
        {"martingale property", martingale},
        {"Lipschitz and monotonicity", lipschitz_monotone},
        {"projection contract", projection_contract},
        {"end components", end_components},
        {"policy realization", policy_realization},
        {"horizon formula", horizon_formula},
        {"parser robustness", parser_robustness},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = Clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
        std::printf("[%s] %2zu %s: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    v.detail.c_str(), seconds);
        std::fflush(stdout);
        failed += !v.pass;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
