#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "revpomdp/mdp.hpp"
#include "revpomdp/model.hpp"

namespace revpomdp {

/// Finite MDP over belief supports. State i stands for the support
/// `supports[i]` (bit s set iff s is in it). Transitions of (u, a) are
/// uniform over the distinct supports supp(τ(b, a, z)) for the signals z
/// possible from u.
struct SupportMdp {
    FiniteMdp mdp;
    std::vector<std::uint64_t> supports;
    std::unordered_map<std::uint64_t, std::size_t> index;
    std::size_t initial = 0;
    std::size_t num_model_states = 0;

    std::optional<std::size_t> find(std::uint64_t support) const;
    std::size_t singleton(StateId s) const { return index.at(std::uint64_t{1} << s); }
    bool is_singleton(std::size_t i) const { return (supports[i] & (supports[i] - 1)) == 0; }
    std::string label(const Pomdp& model, std::size_t i) const;
};

/// Explores supports reachable from supp(b₀) and from every singleton.
/// Throws NotRevealingError for non-revealing models.
SupportMdp build_support_mdp(const Pomdp& model);

/// Singletons keep the state's priority; larger supports get the least odd
/// priority above d.
PriorityFn extend_priorities(const SupportMdp& support, const PriorityFn& priorities);

struct ParityAnalysis {
    SupportMdp support;
    PriorityFn support_priorities;
    /// Almost-sure parity region of the support MDP and its witness.
    QualitativeSolution solution;
    /// X: states whose singleton support is winning, ascending.
    std::vector<StateId> winning_states;

    bool winning_support(std::uint64_t support_mask) const;
};

/// Cached per (model, priorities) content; safe to call concurrently.
std::shared_ptr<const ParityAnalysis> parity_analysis(const Pomdp& model, const PriorityFn& priorities);

std::vector<StateId> almost_sure_parity_states(const Pomdp& model, const PriorityFn& priorities);

/// Whether supp(b₀) is almost-sure winning for parity.
bool almost_sure_winning(const Pomdp& model, const PriorityFn& priorities);

struct LimitSureVerdict {
    bool winning = false;
    /// The verdict is the almost-sure verdict, by coincidence of the two
    /// notions on revealing models.
    bool via_coincidence = true;
};

LimitSureVerdict limit_sure_winning(const Pomdp& model, const PriorityFn& priorities);

/// Almost-sure belief-reachability of a Dirac on `targets`, decided on the
/// support MDP (reach the singleton supports of the targets).
bool almost_sure_belief_reach(const Pomdp& model, const std::vector<StateId>& targets);

struct TerminalSet {
    std::vector<StateId> states;
    StateSet mask;
    bool contains(StateId s) const { return mask.at(s); }
};

/// 𝒯 = X ∪ {s : no support reachable from {s} meets X}. Works on any
/// validated model.
TerminalSet terminal_states(const Pomdp& model, const std::vector<StateId>& targets);

/// Graphviz rendering of the support MDP with the winning region filled.
std::string support_mdp_dot(const Pomdp& model, const ParityAnalysis& analysis);

}  // namespace revpomdp
