#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "revpomdp/belief.hpp"
#include "revpomdp/model.hpp"
#include "revpomdp/policy.hpp"
#include "revpomdp/qualitative.hpp"
#include "revpomdp/rational.hpp"

namespace revpomdp {

/// Parameters of the uniform-reliable stopping policy:
/// n = |S| + 2 and q = δ_min² (δ_min / |A|)^|S|.
struct StoppingParams {
    std::int64_t n = 0;
    Rational q;
};

StoppingParams stopping_parameters(const Pomdp& model);

struct HorizonPlan {
    Rational epsilon;
    /// ⌈log(ε/2) / log(1 − q)⌉: least m >= 1 with (1 − q)^m <= ε/2.
    std::uint64_t blocks = 0;
    std::uint64_t theoretical_horizon = 0;
    /// False when the powers were too large to compare exactly and the
    /// float estimate was kept.
    bool exactly_verified = true;

    std::uint64_t effective_horizon = 0;
    bool early_stop_enabled = false;
    bool stopped_early = false;
    double tolerance = 0.0;

    std::string stop_reason() const { return stopped_early ? "converged" : "horizon"; }
};

/// Accepts 0 < ε <= 1 (ε/2 < 1 keeps the horizon finite); throws
/// std::invalid_argument otherwise.
HorizonPlan horizon_for_accuracy(const StoppingParams& params, const Rational& epsilon);

/// k = ⌈(T + 1)|S| / ε⌉.
BigInt grid_resolution(std::uint64_t horizon, std::size_t num_states, const Rational& epsilon);

struct EngineLimits {
    std::uint64_t max_grid_points = 50'000'000;
    std::uint64_t max_horizon = 1'000'000;
};

/// Stop once the summed per-sweep increase over the last `window` sweeps
/// is below `tolerance`.
struct ConvergenceRule {
    std::uint64_t window = 1;
    double tolerance = 0.0;
};

struct GridPointHash {
    std::size_t operator()(const GridPoint& p) const noexcept;
};

/// Grid value iteration for T-step belief-reachability. Only grid points
/// reachable from the queried points under projected one-step dynamics are
/// materialized; this set is closed under the backup, so values there
/// coincide with a sweep over the whole grid.
class GridValueIteration {
public:
    struct Options {
        EngineLimits limits;
        /// Materialize only points within this many steps of a root.
        std::optional<std::uint64_t> depth_limit;
        /// Keep every table and per-sweep argmax (needed for policies).
        bool record_tables = false;
        unsigned threads = 1;
    };

    GridValueIteration(const Pomdp& model, std::vector<StateId> targets, std::int64_t k, Options options);

    const Grid& grid() const noexcept { return grid_; }
    const Pomdp& model() const noexcept { return model_; }
    const std::vector<bool>& target_states() const noexcept { return is_target_state_; }
    bool records_tables() const noexcept { return options_.record_tables; }
    std::size_t size() const noexcept { return points_.size(); }
    const GridPoint& point(std::size_t i) const { return points_[i]; }
    std::optional<std::size_t> find(const GridPoint& p) const;

    /// Adds the closure of `root`; returns its index. If tables were
    /// recorded, values of new points are filled in for every finished sweep.
    std::size_t materialize(const GridPoint& root);

    struct SweepOutcome {
        std::uint64_t sweeps = 0;
        bool converged = false;
    };

    /// Runs up to `horizon` sweeps from the base table.
    SweepOutcome run(std::uint64_t horizon, std::optional<ConvergenceRule> rule = std::nullopt);

    std::uint64_t sweeps() const noexcept { return sweeps_; }
    double value(std::size_t i) const { return current_[i]; }
    bool is_target(std::size_t i) const { return target_[i] != 0; }

    /// Requires record_tables. Argmax of the backup at sweep t (1-based).
    ActionId argmax(std::size_t i, std::uint64_t t) const;
    double recorded_value(std::size_t i, std::uint64_t t) const;
    /// Least sweep whose value at i is within 1e-12 of the final one.
    std::uint64_t settle_sweep(std::size_t i) const;

private:
    void expand(std::size_t i);
    double backup(std::size_t i, const std::vector<double>& previous, ActionId* best) const;
    void process_pending();
    void fill_recorded(std::size_t first);
    std::size_t intern(const GridPoint& p, std::uint64_t depth);

    Pomdp model_;
    std::vector<bool> is_target_state_;
    std::vector<std::vector<std::uint64_t>> int_weights_;
    Grid grid_;
    Options options_;

    bool integer_weights_ = false;
    std::uint64_t denominator_ = 1;

    std::vector<GridPoint> points_;
    std::unordered_map<GridPoint, std::size_t, GridPointHash> index_;
    std::vector<std::uint64_t> depth_;
    std::vector<char> target_;
    std::vector<char> expanded_;
    // Successor rows of point i, action a: [row_end_[i*A + a - 1] or row_begin_[i], row_end_[i*A + a]).
    std::vector<std::uint64_t> row_begin_;
    std::vector<std::uint64_t> row_end_;
    std::vector<std::uint32_t> succ_;
    std::vector<double> prob_;

    std::vector<double> current_;
    std::uint64_t sweeps_ = 0;
    std::vector<std::vector<double>> tables_;
    std::vector<std::vector<std::uint16_t>> argmax_;
};

/// Result of a grid computation at one query belief.
struct GridAnswer {
    double value = 0.0;
    std::int64_t k = 0;
    BigInt grid_cardinality;
    std::size_t materialized = 0;
    GridPoint query_point;
};

/// Approximates the T-step belief-reachability value at `query` within ε.
GridAnswer tstep_value(const Pomdp& model, const std::vector<StateId>& targets, std::uint64_t horizon,
                       const Rational& epsilon, const ExactBelief& query, const EngineLimits& limits = {});

struct ValueOptions {
    EngineLimits limits;
    bool early_stop = true;
    std::optional<std::uint64_t> horizon_override;
    std::optional<std::int64_t> k_override;
    bool record_tables = false;
    unsigned threads = 1;
};

struct ValueReport {
    double value = 0.0;
    HorizonPlan plan;
    StoppingParams stopping;
    std::int64_t k = 0;
    BigInt grid_cardinality;
    std::size_t materialized = 0;
    std::vector<StateId> targets;
    double seconds = 0.0;
    /// Present when tables were recorded.
    std::shared_ptr<GridValueIteration> engine;
};

/// Belief-reachability value at `query` within ε: the T-step value for the
/// horizon of horizon_for_accuracy at accuracy ε/2, optionally stopped
/// early on convergence.
ValueReport belief_reach_value(const Pomdp& model, const std::vector<StateId>& targets, const Rational& epsilon,
                               const ExactBelief& query, const ValueOptions& options = {});

/// Parity value: belief-reachability of the almost-sure winning states X.
ValueReport parity_value(const Pomdp& model, const PriorityFn& priorities, const Rational& epsilon,
                         const ExactBelief& query, const ValueOptions& options = {});

/// Reachability as belief-reachability: targets become absorbing and a
/// fresh probe action moves to a revealed ⊤ from a target and to ⊥
/// otherwise.
struct ProbeTransform {
    Pomdp model;
    StateId top = 0;
    StateId bottom = 0;
    ActionId probe = 0;
};

ProbeTransform reach_to_belief_reach(const Pomdp& model, const std::vector<StateId>& targets);

/// Reachability value of `targets` at `query`, through reach_to_belief_reach.
ValueReport reach_value(const Pomdp& model, const std::vector<StateId>& targets, const Rational& epsilon,
                        const ExactBelief& query, const ValueOptions& options = {});

/// Two-phase policy: greedy on the grid tables until a Dirac on a target,
/// then the support-based almost-sure parity witness (if given; otherwise
/// the episode halts there). `engine` must have recorded tables.
std::unique_ptr<Policy> extract_policy(const Pomdp& model, std::shared_ptr<GridValueIteration> engine,
                                       std::shared_ptr<const ParityAnalysis> witness);

/// Support-based witness policy on its own (phase two of extract_policy).
std::unique_ptr<Policy> support_witness_policy(const Pomdp& model, std::shared_ptr<const ParityAnalysis> witness);

}  // namespace revpomdp
