#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "revpomdp/priority.hpp"
#include "revpomdp/rational.hpp"

namespace revpomdp {

/// Membership mask over MDP states.
using StateSet = std::vector<bool>;

struct Successor {
    std::size_t state;
    Rational prob;
    bool operator==(const Successor&) const = default;
};

/// Fully observable MDP with exact transition probabilities. An action is
/// enabled at a state iff a distribution has been set for the pair.
class FiniteMdp {
public:
    FiniteMdp() = default;
    FiniteMdp(std::size_t num_states, std::size_t num_actions);

    /// Sets the distribution of (q, a); entries with equal targets are merged.
    void set_transition(std::size_t q, std::size_t a, std::vector<Successor> distribution);

    std::size_t num_states() const noexcept { return num_states_; }
    std::size_t num_actions() const noexcept { return num_actions_; }
    bool enabled(std::size_t q, std::size_t a) const;
    std::span<const Successor> successors(std::size_t q, std::size_t a) const;
    std::vector<std::size_t> enabled_actions(std::size_t q) const;

    void set_state_name(std::size_t q, std::string name);
    void set_action_name(std::size_t a, std::string name);
    std::string state_name(std::size_t q) const;
    std::string action_name(std::size_t a) const;

    /// Throws ValidationError unless every row sums to 1 and every state has
    /// an enabled action.
    void validate() const;

private:
    std::size_t num_states_ = 0;
    std::size_t num_actions_ = 0;
    std::vector<std::optional<std::vector<Successor>>> rows_;
    std::vector<std::string> state_names_;
    std::vector<std::string> action_names_;
};

/// Pair (Q, E): `choices` maps every q in Q to its nonempty action set E(q).
struct EndComponent {
    std::map<std::size_t, std::vector<std::size_t>> choices;

    std::vector<std::size_t> states() const;
    bool contains(std::size_t q) const { return choices.count(q) != 0; }
    bool operator==(const EndComponent&) const = default;
};

/// Per-state action set played uniformly at random; a singleton set is a
/// deterministic choice. An empty set means the state is outside the
/// strategy's domain.
struct MemorylessStrategy {
    std::vector<std::vector<std::size_t>> choices;

    bool defined(std::size_t q) const { return q < choices.size() && !choices[q].empty(); }
};

struct QualitativeSolution {
    StateSet winning;
    MemorylessStrategy strategy;
};

/// Closedness and strong connectivity of `candidate` in `mdp`.
bool is_end_component(const FiniteMdp& mdp, const EndComponent& candidate);

/// Maximal end components of the sub-MDP induced by `within` (all states
/// when empty), by iterated SCC refinement.
std::vector<EndComponent> mec_decomposition(const FiniteMdp& mdp, const StateSet& within = {});

/// Largest set from which `target` is reached with probability 1, with a
/// deterministic memoryless witness.
QualitativeSolution almost_sure_reach(const FiniteMdp& mdp, const StateSet& target);

/// Almost-sure parity winning region: almost-sure reachability of the union
/// of even end components. The witness plays every action of the owning
/// end component uniformly inside it and the reachability witness outside.
QualitativeSolution almost_sure_parity(const FiniteMdp& mdp, const PriorityFn& priorities);

/// States lying in some end component whose least priority is even
/// (the target set of the parity-to-reachability reduction).
StateSet even_end_component_states(const FiniteMdp& mdp, const PriorityFn& priorities);

struct ReachValues {
    std::vector<double> values;
    /// Present when the exact solver ran.
    std::optional<std::vector<Rational>> exact;
};

struct ReachOptions {
    std::size_t exact_state_limit = 200;
    double tolerance = 1e-10;
};

/// Maximal reachability probabilities. Exact policy iteration on the MEC
/// quotient up to `exact_state_limit` states, value iteration otherwise.
ReachValues quantitative_reach(const FiniteMdp& mdp, const StateSet& target, const ReachOptions& options = {});

/// Tarjan SCCs of a directed graph given by adjacency lists restricted to
/// `active` vertices. Components are returned in reverse topological order.
std::vector<std::vector<std::size_t>> strongly_connected_components(
    const std::vector<std::vector<std::size_t>>& adjacency, const StateSet& active);

}  // namespace revpomdp
