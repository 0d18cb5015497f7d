#include "revpomdp/model.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "revpomdp/errors.hpp"

namespace revpomdp {

namespace {

/// Terminating decimals print as decimals ("0.9"), anything else as p/q.
std::string display(const Rational& value) {
    BigInt den = boost::multiprecision::denominator(value);
    std::size_t twos = 0, fives = 0;
    while (den % 2 == 0) den /= 2, ++twos;
    while (den % 5 == 0) den /= 5, ++fives;
    if (den != 1 || std::max(twos, fives) > 30) return to_string(value);
    const std::size_t places = std::max(twos, fives);
    BigInt scale = 1;
    for (std::size_t i = 0; i < places; ++i) scale *= 10;
    BigInt scaled = boost::multiprecision::numerator(value) * scale / boost::multiprecision::denominator(value);
    const bool negative = scaled < 0;
    if (negative) scaled = -scaled;
    std::string digits = scaled.str();
    if (places > 0) {
        if (digits.size() <= places) digits.insert(0, places - digits.size() + 1, '0');
        digits.insert(digits.size() - places, ".");
    }
    return negative ? "-" + digits : digits;
}

void index_names(const std::vector<std::string>& names, const char* kind,
                 std::unordered_map<std::string, std::size_t>& index, std::vector<Violation>& violations) {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i].empty()) violations.push_back({std::string("empty ") + kind + " identifier", {}, {}});
        if (!index.emplace(names[i], i).second)
            violations.push_back({std::string("duplicate ") + kind + " identifier \"" + names[i] + "\"", {}, {}});
    }
}

}  // namespace

std::optional<StateId> Pomdp::find_state(const std::string& name) const {
    auto it = state_index_.find(name);
    if (it == state_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<ActionId> Pomdp::find_action(const std::string& name) const {
    auto it = action_index_.find(name);
    if (it == action_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<SignalId> Pomdp::find_signal(const std::string& name) const {
    auto it = signal_index_.find(name);
    if (it == signal_index_.end()) return std::nullopt;
    return it->second;
}

const PriorityFn& Pomdp::require_priorities() const {
    if (!priorities_) throw MissingSectionError("model has no \"priorities\" section");
    return *priorities_;
}

const std::vector<StateId>& Pomdp::require_targets() const {
    if (!targets_) throw MissingSectionError("model has no \"targets\" section");
    return *targets_;
}

RawPomdp Pomdp::to_raw() const {
    RawPomdp raw;
    raw.revealing = claims_revealing_;
    raw.states = states_;
    raw.actions = actions_;
    raw.signals = signals_;
    for (StateId s = 0; s < num_states(); ++s)
        for (ActionId a = 0; a < num_actions(); ++a)
            for (const auto& e : kernel(s, a))
                raw.transitions.push_back({states_[s], actions_[a], states_[e.next], signals_[e.signal], e.prob});
    for (StateId s = 0; s < num_states(); ++s)
        if (initial_[s] != 0) raw.initial.emplace_back(states_[s], initial_[s]);
    if (priorities_) {
        raw.priorities.emplace();
        for (StateId s = 0; s < num_states(); ++s) raw.priorities->emplace_back(states_[s], (*priorities_)(s));
    }
    if (targets_) {
        raw.targets.emplace();
        for (StateId s : *targets_) raw.targets->push_back(states_[s]);
    }
    return raw;
}

bool Pomdp::operator==(const Pomdp& other) const {
    if (claims_revealing_ != other.claims_revealing_ || states_ != other.states_ || actions_ != other.actions_ ||
        signals_ != other.signals_ || initial_ != other.initial_ || priorities_ != other.priorities_ ||
        targets_ != other.targets_)
        return false;
    for (std::size_t i = 0; i < kernel_.size(); ++i) {
        const auto& x = kernel_[i];
        const auto& y = other.kernel_[i];
        if (x.size() != y.size()) return false;
        for (std::size_t j = 0; j < x.size(); ++j)
            if (x[j].next != y[j].next || x[j].signal != y[j].signal || x[j].prob != y[j].prob) return false;
    }
    return true;
}

Pomdp validate(const RawPomdp& raw) {
    std::vector<Violation> violations;
    Pomdp m;
    m.claims_revealing_ = raw.revealing;
    m.states_ = raw.states;
    m.actions_ = raw.actions;
    m.signals_ = raw.signals;
    if (raw.states.empty()) violations.push_back({"no states declared", {}, {}});
    if (raw.actions.empty()) violations.push_back({"no actions declared", {}, {}});
    if (raw.signals.empty()) violations.push_back({"no signals declared", {}, {}});
    index_names(raw.states, "state", m.state_index_, violations);
    index_names(raw.actions, "action", m.action_index_, violations);
    index_names(raw.signals, "signal", m.signal_index_, violations);

    m.state_signal_.resize(raw.states.size());
    for (StateId s = 0; s < raw.states.size(); ++s) {
        m.state_signal_[s] = m.find_signal(raw.states[s]);
        if (raw.revealing && !m.state_signal_[s])
            violations.push_back({"revealing model must declare state \"" + raw.states[s] + "\" as a signal",
                                  raw.states[s], std::nullopt});
    }

    const std::size_t num_a = raw.actions.size();
    m.kernel_.assign(raw.states.size() * num_a, {});
    std::set<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>> seen;
    for (const auto& t : raw.transitions) {
        auto from = m.find_state(t.from);
        auto action = m.find_action(t.action);
        auto to = m.find_state(t.to);
        auto signal = m.find_signal(t.signal);
        bool ok = true;
        auto undeclared = [&](const char* kind, const std::string& name) {
            violations.push_back({std::string("transition references undeclared ") + kind + " \"" + name + "\"",
                                  t.from, t.action});
            ok = false;
        };
        if (!from) undeclared("state", t.from);
        if (!action) undeclared("action", t.action);
        if (!to) undeclared("state", t.to);
        if (!signal) undeclared("signal", t.signal);
        if (t.prob <= 0 || t.prob > 1) {
            violations.push_back({"probability " + display(t.prob) + " outside (0,1] at (" + t.from + "," + t.action +
                                      ") -> (" + t.to + "," + t.signal + ")",
                                  t.from, t.action});
            ok = false;
        }
        if (!ok) continue;
        if (!seen.emplace(*from, *action, *to, *signal).second) {
            violations.push_back({"duplicate transition entry (" + t.from + "," + t.action + "," + t.to + "," +
                                      t.signal + ")",
                                  t.from, t.action});
            continue;
        }
        m.kernel_[*from * num_a + *action].push_back({*to, *signal, t.prob, to_double(t.prob)});
    }
    for (StateId s = 0; s < raw.states.size(); ++s) {
        for (ActionId a = 0; a < num_a; ++a) {
            auto& row = m.kernel_[s * num_a + a];
            std::sort(row.begin(), row.end(), [](const KernelEntry& x, const KernelEntry& y) {
                return std::tie(x.next, x.signal) < std::tie(y.next, y.signal);
            });
            Rational sum = 0;
            for (const auto& e : row) sum += e.prob;
            if (sum != 1)
                violations.push_back({"row sum " + display(sum) + " ≠ 1 at (" + raw.states[s] + "," + raw.actions[a] +
                                          ")",
                                      raw.states[s], raw.actions[a]});
        }
    }

    m.initial_.assign(raw.states.size(), Rational(0));
    std::set<std::string> initial_seen;
    Rational initial_sum = 0;
    for (const auto& [name, p] : raw.initial) {
        auto s = m.find_state(name);
        if (!s) {
            violations.push_back({"initial belief references undeclared state \"" + name + "\"", name, std::nullopt});
            continue;
        }
        if (!initial_seen.insert(name).second) {
            violations.push_back({"duplicate initial entry for state \"" + name + "\"", name, std::nullopt});
            continue;
        }
        if (p < 0 || p > 1)
            violations.push_back({"initial probability " + display(p) + " outside [0,1] at " + name, name, std::nullopt});
        m.initial_[*s] = p;
        initial_sum += p;
    }
    if (initial_sum != 1)
        violations.push_back({"initial belief sums to " + display(initial_sum) + " ≠ 1", std::nullopt, std::nullopt});

    if (raw.priorities) {
        std::vector<unsigned> values(raw.states.size(), 0);
        std::vector<bool> assigned(raw.states.size(), false);
        for (const auto& [name, p] : *raw.priorities) {
            auto s = m.find_state(name);
            if (!s) {
                violations.push_back({"priority for undeclared state \"" + name + "\"", name, std::nullopt});
                continue;
            }
            if (assigned[*s]) {
                violations.push_back({"duplicate priority for state \"" + name + "\"", name, std::nullopt});
                continue;
            }
            if (p < 0 || p > 1'000'000) {
                violations.push_back({"priority " + std::to_string(p) + " out of range at " + name, name, std::nullopt});
                continue;
            }
            assigned[*s] = true;
            values[*s] = static_cast<unsigned>(p);
        }
        for (StateId s = 0; s < raw.states.size(); ++s)
            if (!assigned[s]) violations.push_back({"missing priority for state \"" + raw.states[s] + "\"", raw.states[s], std::nullopt});
        m.priorities_ = PriorityFn(std::move(values));
    }
    if (raw.targets) {
        std::vector<StateId> targets;
        for (const auto& name : *raw.targets) {
            auto s = m.find_state(name);
            if (!s) {
                violations.push_back({"target references undeclared state \"" + name + "\"", name, std::nullopt});
                continue;
            }
            if (std::find(targets.begin(), targets.end(), *s) != targets.end()) {
                violations.push_back({"duplicate target \"" + name + "\"", name, std::nullopt});
                continue;
            }
            targets.push_back(*s);
        }
        std::sort(targets.begin(), targets.end());
        m.targets_ = std::move(targets);
    }
    if (!violations.empty()) throw ValidationError(std::move(violations));
    return m;
}

RevealingReport check_revealing(const Pomdp& model) {
    RevealingReport report;
    for (StateId s = 0; s < model.num_states(); ++s) {
        for (ActionId a = 0; a < model.num_actions(); ++a) {
            for (StateId next : successor_states(model, s, a)) {
                const auto own = model.state_signal(next);
                const auto row = model.kernel(s, a);
                const bool announced = own && std::any_of(row.begin(), row.end(), [&](const KernelEntry& e) {
                                           return e.next == next && e.signal == *own;
                                       });
                if (!announced) report.violations.push_back({s, a, next, RevealingViolation::Kind::Unannounced, std::nullopt});
            }
            for (const auto& e : model.kernel(s, a)) {
                const auto named = model.find_state(model.signal_name(e.signal));
                if (named && *named != e.next)
                    report.violations.push_back(
                        {s, a, e.next, RevealingViolation::Kind::Misleading, e.signal});
            }
        }
    }
    report.revealing = report.violations.empty();
    return report;
}

void require_revealing(const Pomdp& model) {
    const auto report = check_revealing(model);
    if (report.revealing) return;
    const auto& v = report.violations.front();
    const std::string where = "(" + model.state_name(v.state) + "," + model.action_name(v.action) + ")";
    const std::string count = " (" + std::to_string(report.violations.size()) + " violation(s))";
    if (v.kind == RevealingViolation::Kind::Misleading)
        throw NotRevealingError("model is not revealing: " + where + " emits signal " +
                                model.signal_name(*v.signal) + " on a transition to " +
                                model.state_name(v.successor) + count);
    throw NotRevealingError("model is not revealing: successor " + model.state_name(v.successor) + " of " + where +
                            " is never announced" + count);
}

DeltaMin delta_min(const Pomdp& model) {
    std::optional<Rational> best;
    for (StateId s = 0; s < model.num_states(); ++s)
        for (ActionId a = 0; a < model.num_actions(); ++a)
            for (const auto& e : model.kernel(s, a))
                if (!best || e.prob < *best) best = e.prob;
    return {best.value_or(Rational(1))};
}

std::vector<StateId> successor_states(const Pomdp& model, StateId s, ActionId a) {
    std::vector<StateId> out;
    for (const auto& e : model.kernel(s, a))
        if (out.empty() || out.back() != e.next) out.push_back(e.next);
    return out;
}

UnderlyingMdp build_underlying_mdp(const Pomdp& model) {
    UnderlyingMdp u;
    u.num_signals = model.num_signals();
    const std::size_t width = u.num_signals + 1;
    u.mdp = FiniteMdp(model.num_states() * width, model.num_actions());
    for (ActionId a = 0; a < model.num_actions(); ++a) u.mdp.set_action_name(a, model.action_name(a));
    for (StateId s = 0; s < model.num_states(); ++s) {
        for (std::size_t z = 0; z < width; ++z) {
            const std::size_t q = u.index(s, z);
            u.mdp.set_state_name(q, "(" + model.state_name(s) + "," +
                                        (z == u.placeholder() ? std::string("□") : model.signal_name(z)) + ")");
            for (ActionId a = 0; a < model.num_actions(); ++a) {
                std::vector<Successor> row;
                for (const auto& e : model.kernel(s, a)) row.push_back({u.index(e.next, e.signal), e.prob});
                u.mdp.set_transition(q, a, std::move(row));
            }
        }
    }
    u.initial.assign(u.mdp.num_states(), Rational(0));
    u.reachable.assign(u.mdp.num_states(), false);
    std::vector<std::size_t> frontier;
    for (StateId s = 0; s < model.num_states(); ++s) {
        const std::size_t q = u.index(s, u.placeholder());
        u.initial[q] = model.initial()[s];
        if (model.initial()[s] > 0) {
            u.reachable[q] = true;
            frontier.push_back(q);
        }
    }
    while (!frontier.empty()) {
        const std::size_t q = frontier.back();
        frontier.pop_back();
        for (ActionId a = 0; a < model.num_actions(); ++a)
            for (const auto& next : u.mdp.successors(q, a))
                if (!u.reachable[next.state]) {
                    u.reachable[next.state] = true;
                    frontier.push_back(next.state);
                }
    }
    return u;
}

Pomdp with_priorities(const Pomdp& model, const std::vector<unsigned>& priorities) {
    RawPomdp raw = model.to_raw();
    raw.priorities.emplace();
    for (StateId s = 0; s < model.num_states(); ++s) raw.priorities->emplace_back(model.state_name(s), priorities.at(s));
    return validate(raw);
}

Pomdp with_targets(const Pomdp& model, const std::vector<StateId>& targets) {
    RawPomdp raw = model.to_raw();
    raw.targets.emplace();
    for (StateId s : targets) raw.targets->push_back(model.state_name(s));
    return validate(raw);
}

Pomdp with_initial(const Pomdp& model, const std::vector<Rational>& initial) {
    RawPomdp raw = model.to_raw();
    raw.initial.clear();
    for (StateId s = 0; s < model.num_states(); ++s)
        if (initial.at(s) != 0) raw.initial.emplace_back(model.state_name(s), initial[s]);
    return validate(raw);
}

}  // namespace revpomdp
