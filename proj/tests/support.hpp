#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "revpomdp/belief.hpp"
#include "revpomdp/mdp.hpp"
#include "revpomdp/model.hpp"
#include "revpomdp/modelio.hpp"

namespace support {

using namespace revpomdp;

inline std::string fixture_path(const std::string& name) { return std::string(REVPOMDP_FIXTURES) + "/" + name; }

inline Pomdp fixture(const std::string& name) { return load_model(fixture_path(name)); }

inline const std::vector<std::string>& fixture_names() {
    static const std::vector<std::string> names{"r2.json",       "r2_even.json",  "r2_odd.json",
                                                "chain.json",    "progress.json", "guess_revealing.json",
                                                "gamble.json"};
    return names;
}

inline std::size_t uniform(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline bool coin(std::mt19937_64& rng, double p) { return std::bernoulli_distribution(p)(rng); }

/// Random positive integer weights normalized to a distribution.
inline std::vector<Rational> normalize(const std::vector<long>& weights) {
    long total = 0;
    for (long w : weights) total += w;
    std::vector<Rational> out;
    for (long w : weights) out.emplace_back(w, total);
    return out;
}

inline std::vector<std::pair<std::string, Rational>> random_initial(std::mt19937_64& rng,
                                                                    const std::vector<std::string>& states,
                                                                    std::size_t max_weight = 4) {
    std::vector<std::string> chosen;
    for (const auto& s : states)
        if (coin(rng, 0.5)) chosen.push_back(s);
    if (chosen.empty()) chosen.push_back(states[uniform(rng, 0, states.size() - 1)]);
    std::vector<long> weights;
    for (std::size_t i = 0; i < chosen.size(); ++i) weights.push_back(static_cast<long>(uniform(rng, 1, max_weight)));
    const auto probs = normalize(weights);
    std::vector<std::pair<std::string, Rational>> out;
    for (std::size_t i = 0; i < chosen.size(); ++i) out.emplace_back(chosen[i], probs[i]);
    return out;
}

struct ModelShape {
    std::size_t max_states = 4;
    std::size_t max_actions = 3;
    std::size_t max_signals = 6;
    std::size_t max_weight = 4;
    /// Every transition signals exactly its successor.
    bool fully_revealing = false;
};

inline std::vector<std::string> names(const std::string& prefix, std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

/// Random revealing POMDP. Every successor s′ is announced as s′ with
/// positive probability; other outcomes carry noise signals.
inline Pomdp random_revealing_model(std::mt19937_64& rng, const ModelShape& shape = {}) {
    RawPomdp raw;
    raw.revealing = true;
    const std::size_t n = uniform(rng, 2, shape.max_states);
    raw.states = names("s", n);
    raw.actions = names("a", uniform(rng, 1, shape.max_actions));
    raw.signals = raw.states;
    if (!shape.fully_revealing) {
        const std::size_t noise = shape.max_signals > n ? uniform(rng, 0, shape.max_signals - n) : 0;
        for (std::size_t i = 0; i < noise; ++i) raw.signals.push_back("z" + std::to_string(i));
    }
    for (const auto& s : raw.states)
        for (const auto& a : raw.actions) {
            std::vector<std::string> successors;
            for (const auto& t : raw.states)
                if (coin(rng, 0.5)) successors.push_back(t);
            if (successors.empty()) successors.push_back(raw.states[uniform(rng, 0, n - 1)]);
            std::vector<std::pair<std::string, std::string>> outcomes;
            std::vector<long> weights;
            for (const auto& t : successors) {
                outcomes.emplace_back(t, t);
                weights.push_back(static_cast<long>(uniform(rng, 1, shape.max_weight)));
                if (shape.fully_revealing) continue;
                for (std::size_t zi = n; zi < raw.signals.size(); ++zi) {
                    const auto& z = raw.signals[zi];
                    if (!coin(rng, 0.3)) continue;
                    outcomes.emplace_back(t, z);
                    weights.push_back(static_cast<long>(uniform(rng, 1, shape.max_weight)));
                }
            }
            const auto probs = normalize(weights);
            for (std::size_t i = 0; i < outcomes.size(); ++i)
                raw.transitions.push_back({s, a, outcomes[i].first, outcomes[i].second, probs[i]});
        }
    raw.initial = random_initial(rng, raw.states);
    std::vector<std::pair<std::string, long long>> priorities;
    for (const auto& s : raw.states) priorities.emplace_back(s, static_cast<long long>(uniform(rng, 0, 3)));
    raw.priorities = priorities;
    std::vector<std::string> targets;
    for (const auto& s : raw.states)
        if (coin(rng, 0.4)) targets.push_back(s);
    if (targets.empty()) targets.push_back(raw.states.back());
    raw.targets = targets;
    return validate(raw);
}

/// Revealing POMDP whose exact belief set is finite: transient states form
/// a DAG into absorbing states `goal` and `fail`, and every transition is
/// revealed with the same probability ½ (otherwise it emits `noise`), so a
/// noise posterior is just b·P_a.
inline Pomdp random_finite_belief_model(std::mt19937_64& rng, std::size_t max_transient = 3,
                                        std::size_t max_actions = 3) {
    RawPomdp raw;
    raw.revealing = true;
    const std::size_t m = uniform(rng, 1, max_transient);
    raw.states = names("t", m);
    raw.states.push_back("goal");
    raw.states.push_back("fail");
    raw.actions = names("a", uniform(rng, 1, max_actions));
    raw.signals = raw.states;
    raw.signals.push_back("noise");
    const Rational half(1, 2);
    for (std::size_t i = 0; i < m; ++i)
        for (const auto& a : raw.actions) {
            std::vector<std::string> successors;
            for (std::size_t j = i + 1; j < raw.states.size(); ++j)
                if (coin(rng, 0.5)) successors.push_back(raw.states[j]);
            if (successors.empty()) successors.push_back(raw.states[uniform(rng, m, m + 1)]);
            std::vector<long> weights;
            for (std::size_t j = 0; j < successors.size(); ++j) weights.push_back(static_cast<long>(uniform(rng, 1, 3)));
            const auto probs = normalize(weights);
            for (std::size_t j = 0; j < successors.size(); ++j) {
                raw.transitions.push_back({raw.states[i], a, successors[j], successors[j], probs[j] * half});
                raw.transitions.push_back({raw.states[i], a, successors[j], "noise", probs[j] * half});
            }
        }
    for (const std::string s : {"goal", "fail"})
        for (const auto& a : raw.actions) {
            raw.transitions.push_back({s, a, s, s, half});
            raw.transitions.push_back({s, a, s, "noise", half});
        }
    raw.initial = random_initial(rng, std::vector<std::string>(raw.states.begin(), raw.states.begin() + m));
    std::vector<std::pair<std::string, long long>> priorities;
    for (std::size_t i = 0; i < m; ++i) priorities.emplace_back(raw.states[i], static_cast<long long>(uniform(rng, 1, 2)));
    priorities.emplace_back("goal", 0);
    priorities.emplace_back("fail", 1);
    raw.priorities = priorities;
    raw.targets = std::vector<std::string>{"goal"};
    return validate(raw);
}

/// Random MDP; each state has at least one enabled action.
inline FiniteMdp random_mdp(std::mt19937_64& rng, std::size_t states, std::size_t actions) {
    FiniteMdp mdp(states, actions);
    for (std::size_t q = 0; q < states; ++q) {
        const std::size_t forced = uniform(rng, 0, actions - 1);
        for (std::size_t a = 0; a < actions; ++a) {
            if (a != forced && coin(rng, 0.3)) continue;
            std::vector<std::size_t> successors;
            for (std::size_t t = 0; t < states; ++t)
                if (coin(rng, 0.35)) successors.push_back(t);
            if (successors.empty()) successors.push_back(uniform(rng, 0, states - 1));
            std::vector<long> weights;
            for (std::size_t i = 0; i < successors.size(); ++i) weights.push_back(static_cast<long>(uniform(rng, 1, 3)));
            const auto probs = normalize(weights);
            std::vector<Successor> row;
            for (std::size_t i = 0; i < successors.size(); ++i) row.push_back({successors[i], probs[i]});
            mdp.set_transition(q, a, std::move(row));
        }
    }
    return mdp;
}

/// The MDP a fully revealing POMDP is equivalent to: states S, same kernel.
inline FiniteMdp state_mdp(const Pomdp& model) {
    FiniteMdp mdp(model.num_states(), model.num_actions());
    for (StateId s = 0; s < model.num_states(); ++s)
        for (ActionId a = 0; a < model.num_actions(); ++a) {
            std::vector<Successor> row;
            for (const auto& e : model.kernel(s, a)) row.push_back({e.next, e.prob});
            mdp.set_transition(s, a, std::move(row));
        }
    return mdp;
}

/// Random exact belief supported exactly on `on`.
inline ExactBelief random_belief(std::mt19937_64& rng, std::size_t dimension, const std::vector<StateId>& on,
                                 std::size_t max_weight = 9) {
    std::vector<long> weights;
    for (std::size_t i = 0; i < on.size(); ++i) weights.push_back(static_cast<long>(uniform(rng, 1, max_weight)));
    const auto probs = normalize(weights);
    std::vector<Rational> p(dimension, Rational(0));
    for (std::size_t i = 0; i < on.size(); ++i) p[on[i]] = probs[i];
    return ExactBelief(std::move(p));
}

/// One to four random byte edits (delete, insert, replace, truncate).
inline std::string mutate(std::string doc, std::mt19937_64& rng) {
    static const std::string alphabet = "{}[]\":,/0123456789.-eE abs\n\\tfnul";
    const std::size_t edits = uniform(rng, 1, 4);
    for (std::size_t e = 0; e < edits && !doc.empty(); ++e) {
        const std::size_t pos = uniform(rng, 0, doc.size() - 1);
        switch (uniform(rng, 0, 3)) {
            case 0: doc.erase(pos, 1); break;
            case 1: doc.insert(pos, 1, alphabet[uniform(rng, 0, alphabet.size() - 1)]); break;
            case 2: doc[pos] = alphabet[uniform(rng, 0, alphabet.size() - 1)]; break;
            default: doc = doc.substr(0, pos); break;
        }
    }
    return doc;
}

}  // namespace support
