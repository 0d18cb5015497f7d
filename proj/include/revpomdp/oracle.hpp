#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "revpomdp/belief.hpp"
#include "revpomdp/model.hpp"
#include "revpomdp/policy.hpp"
#include "revpomdp/priority.hpp"
#include "revpomdp/rational.hpp"

namespace revpomdp {

/// Exact v^T of belief-reachability at `query`: memoized depth-T recursion
/// over exact one-step outcomes, value 1 on Diracs in `targets`. Throws
/// ResourceLimitError past `node_limit` memo entries.
Rational exact_tstep_value(const Pomdp& model, const std::vector<StateId>& targets, std::uint64_t horizon,
                           const ExactBelief& query, std::size_t node_limit = 1'000'000);

/// Exact infinite-horizon belief-reachability values on the (finite) set of
/// exact beliefs reachable from some roots. Solved as a reachability MDP
/// over that belief graph, so it only exists when the graph is finite.
class ExactValueHandle {
public:
    struct Edge {
        SignalId signal;
        Rational prob;
        std::size_t node;
    };

    /// Throws ResourceLimitError when more than `node_limit` beliefs are
    /// reachable.
    static ExactValueHandle build(const Pomdp& model, std::vector<StateId> targets,
                                  const std::vector<ExactBelief>& roots, std::size_t node_limit = 2000);

    const Pomdp& model() const noexcept { return model_; }
    const std::vector<StateId>& targets() const noexcept { return targets_; }
    std::size_t size() const noexcept { return beliefs_.size(); }
    std::optional<std::size_t> find(const ExactBelief& belief) const;
    const ExactBelief& belief(std::size_t node) const { return beliefs_.at(node); }
    const Rational& value(std::size_t node) const { return values_.at(node); }
    bool is_target(std::size_t node) const { return target_.at(node); }
    const std::vector<Edge>& outcomes(std::size_t node, ActionId a) const;
    /// Σ_z P(z | b, a) · v(τ(b, a, z)).
    Rational expected_value(std::size_t node, ActionId a) const;
    std::optional<std::size_t> successor(std::size_t node, ActionId a, SignalId z) const;

private:
    Pomdp model_;
    std::vector<StateId> targets_;
    std::vector<ExactBelief> beliefs_;
    std::map<ExactBelief, std::size_t> index_;
    std::vector<bool> target_;
    std::vector<std::vector<std::vector<Edge>>> edges_;
    std::vector<Rational> values_;
};

/// Actions whose one-step expected value is within `tol` of the best one.
/// Throws std::out_of_range when `belief` is not covered by the handle.
std::vector<ActionId> reliable_actions(const ExactValueHandle& values, const ExactBelief& belief,
                                       const Rational& tol = Rational(0));

/// Same for approximate values given as a function on float beliefs.
std::vector<ActionId> reliable_actions(const Pomdp& model, const Belief& belief,
                                       const std::function<double(const Belief&)>& values, double tol);

/// Plays uniformly over reliable_actions(b, 0) at every belief.
std::unique_ptr<Policy> uniform_reliable_policy(std::shared_ptr<const ExactValueHandle> values);

enum class Predicate { BeliefReach, ParityProxy };

struct Objective {
    Predicate predicate = Predicate::BeliefReach;
    /// X for belief-reachability.
    std::vector<StateId> targets;
    /// Priorities for the parity proxy.
    std::optional<PriorityFn> priorities;
};

struct SimulationConfig {
    Objective objective;
    std::uint64_t cutoff = 0;
    std::uint64_t runs = 1;
    std::uint64_t seed = 0;
    /// States whose Diracs are timed in the histogram (𝒯); defaults to the
    /// belief-reachability targets.
    std::optional<std::vector<StateId>> hitting_set;
    unsigned threads = 1;
};

struct SimStats {
    std::uint64_t runs = 0;
    std::uint64_t successes = 0;
    std::uint64_t seed = 0;
    std::uint64_t cutoff = 0;
    /// histogram[t] runs first holding a Dirac on the hitting set at step t;
    /// the last bucket counts runs that never did.
    std::vector<std::uint64_t> hitting_histogram;

    double success_rate() const { return runs ? static_cast<double>(successes) / static_cast<double>(runs) : 0.0; }
    double standard_error() const;
    /// Runs that hit within `steps` steps.
    std::uint64_t hits_within(std::uint64_t steps) const;
    bool operator==(const SimStats&) const = default;
};

/// Monte Carlo evaluation of `policy`. Run r draws from a generator seeded
/// with (seed, r), so results do not depend on the thread count.
SimStats simulate(const Pomdp& model, const Policy& policy, const SimulationConfig& config);

/// "step,count" lines with a final "never" row.
std::string histogram_csv(const SimStats& stats);

}  // namespace revpomdp
