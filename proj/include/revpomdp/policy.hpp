#pragma once

#include <memory>
#include <optional>
#include <random>
#include <string_view>

#include "revpomdp/belief.hpp"
#include "revpomdp/model.hpp"

namespace revpomdp {

enum class PolicyKind { GridGreedy, SupportWitness, UniformReliable, UniformRandom, Scripted };

std::string_view to_string(PolicyKind kind);

/// Observation-based controller. The policy keeps whatever belief it needs
/// internally from the (action, signal) history it is shown.
class Policy {
public:
    virtual ~Policy() = default;

    virtual PolicyKind kind() const = 0;
    /// Starts a new episode from the given initial belief.
    virtual void reset(const ExactBelief& initial) = 0;
    /// Next action, or nullopt to halt the episode.
    virtual std::optional<ActionId> choose(std::mt19937_64& rng) = 0;
    virtual void observe(ActionId action, SignalId signal) = 0;
    /// Independent copy for another worker.
    virtual std::unique_ptr<Policy> clone() const = 0;
};

/// Plays every action uniformly at random.
std::unique_ptr<Policy> uniform_random_policy(const Pomdp& model);

/// Replays a fixed action sequence, then halts.
std::unique_ptr<Policy> scripted_policy(std::vector<ActionId> actions);

}  // namespace revpomdp
