#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "revpomdp/mdp.hpp"
#include "revpomdp/priority.hpp"
#include "revpomdp/rational.hpp"

namespace revpomdp {

using StateId = std::size_t;
using ActionId = std::size_t;
using SignalId = std::size_t;

/// One (next state, signal) outcome of δ(s, a). `weight` is the float view.
struct KernelEntry {
    StateId next;
    SignalId signal;
    Rational prob;
    double weight;
};

struct RawTransition {
    std::string from;
    std::string action;
    std::string to;
    std::string signal;
    Rational prob;
};

/// Unchecked model description, as read from a document or built by hand.
struct RawPomdp {
    bool revealing = false;
    std::vector<std::string> states;
    std::vector<std::string> actions;
    std::vector<std::string> signals;
    std::vector<RawTransition> transitions;
    std::vector<std::pair<std::string, Rational>> initial;
    std::optional<std::vector<std::pair<std::string, long long>>> priorities;
    std::optional<std::vector<std::string>> targets;
};

/// A validated POMDP (S, A, Z, δ, b₀) with optional priorities and targets.
/// Immutable; construct through validate().
class Pomdp {
public:
    std::size_t num_states() const noexcept { return states_.size(); }
    std::size_t num_actions() const noexcept { return actions_.size(); }
    std::size_t num_signals() const noexcept { return signals_.size(); }

    const std::string& state_name(StateId s) const { return states_.at(s); }
    const std::string& action_name(ActionId a) const { return actions_.at(a); }
    const std::string& signal_name(SignalId z) const { return signals_.at(z); }
    const std::vector<std::string>& state_names() const noexcept { return states_; }
    const std::vector<std::string>& action_names() const noexcept { return actions_; }
    const std::vector<std::string>& signal_names() const noexcept { return signals_; }

    std::optional<StateId> find_state(const std::string& name) const;
    std::optional<ActionId> find_action(const std::string& name) const;
    std::optional<SignalId> find_signal(const std::string& name) const;

    /// The signal carrying the state's own name, if declared.
    std::optional<SignalId> state_signal(StateId s) const { return state_signal_.at(s); }

    /// Entries of δ(s, a), sorted by (next, signal).
    std::span<const KernelEntry> kernel(StateId s, ActionId a) const {
        return kernel_[s * actions_.size() + a];
    }

    const std::vector<Rational>& initial() const noexcept { return initial_; }
    bool claims_revealing() const noexcept { return claims_revealing_; }

    const std::optional<PriorityFn>& priorities() const noexcept { return priorities_; }
    const std::optional<std::vector<StateId>>& targets() const noexcept { return targets_; }
    /// Throw MissingSectionError when the section is absent.
    const PriorityFn& require_priorities() const;
    const std::vector<StateId>& require_targets() const;

    /// Back to a raw description in canonical order (declaration order for
    /// names, transitions sorted by (from, action, to, signal)).
    RawPomdp to_raw() const;

    bool operator==(const Pomdp& other) const;

private:
    friend Pomdp validate(const RawPomdp& raw);

    bool claims_revealing_ = false;
    std::vector<std::string> states_, actions_, signals_;
    std::unordered_map<std::string, std::size_t> state_index_, action_index_, signal_index_;
    std::vector<std::optional<SignalId>> state_signal_;
    std::vector<std::vector<KernelEntry>> kernel_;
    std::vector<Rational> initial_;
    std::optional<PriorityFn> priorities_;
    std::optional<std::vector<StateId>> targets_;
};

/// Checks names, distributions, the initial belief and optional sections.
/// Throws ValidationError listing every violation.
Pomdp validate(const RawPomdp& raw);

struct RevealingViolation {
    enum class Kind {
        /// The successor is never announced by its own signal.
        Unannounced,
        /// The successor's transition emits another state's signal.
        Misleading
    };
    StateId state;
    ActionId action;
    StateId successor;
    Kind kind = Kind::Unannounced;
    /// The offending signal for Misleading violations.
    std::optional<SignalId> signal;
    bool operator==(const RevealingViolation&) const = default;
};

struct RevealingReport {
    bool revealing = true;
    std::vector<RevealingViolation> violations;
};

/// For every positive-probability successor s′ of (s, a), δ(s,a)(s′, s′) > 0,
/// and a state's signal is only emitted on transitions into that state.
RevealingReport check_revealing(const Pomdp& model);

/// Throws NotRevealingError naming the first violating triple.
void require_revealing(const Pomdp& model);

/// Minimum positive kernel entry.
struct DeltaMin {
    Rational value;
};

DeltaMin delta_min(const Pomdp& model);

/// MDP on S × (Z ∪ {□}); state (s, z) has index s * (|Z| + 1) + z and the
/// placeholder signal □ has index |Z|.
struct UnderlyingMdp {
    FiniteMdp mdp;
    std::size_t num_signals = 0;
    std::vector<Rational> initial;
    /// States reachable from the initial distribution.
    StateSet reachable;

    std::size_t index(StateId s, std::size_t z) const { return s * (num_signals + 1) + z; }
    StateId state_of(std::size_t q) const { return q / (num_signals + 1); }
    std::size_t signal_of(std::size_t q) const { return q % (num_signals + 1); }
    std::size_t placeholder() const { return num_signals; }
};

UnderlyingMdp build_underlying_mdp(const Pomdp& model);

/// Successor states of (s, a) with positive probability, ascending.
std::vector<StateId> successor_states(const Pomdp& model, StateId s, ActionId a);

/// Copy of `model` with priorities or targets replaced.
Pomdp with_priorities(const Pomdp& model, const std::vector<unsigned>& priorities);
Pomdp with_targets(const Pomdp& model, const std::vector<StateId>& targets);
Pomdp with_initial(const Pomdp& model, const std::vector<Rational>& initial);

}  // namespace revpomdp
