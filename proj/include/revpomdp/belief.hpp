#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "revpomdp/errors.hpp"
#include "revpomdp/model.hpp"
#include "revpomdp/rational.hpp"

namespace revpomdp {

/// Probability vector over states with its support (indices of positive
/// entries, ascending). `T` is double for grid work or Rational for the
/// exact oracle.
template <class T>
class BasicBelief {
public:
    BasicBelief() = default;
    explicit BasicBelief(std::vector<T> probs) : probs_(std::move(probs)) {
        for (std::size_t s = 0; s < probs_.size(); ++s)
            if (probs_[s] > 0) support_.push_back(s);
    }

    static BasicBelief dirac(std::size_t dimension, StateId s) {
        std::vector<T> p(dimension, T(0));
        p.at(s) = T(1);
        return BasicBelief(std::move(p));
    }

    std::size_t dimension() const noexcept { return probs_.size(); }
    const std::vector<T>& probs() const noexcept { return probs_; }
    const T& operator[](StateId s) const { return probs_[s]; }
    const std::vector<StateId>& support() const noexcept { return support_; }

    std::optional<StateId> dirac_state() const {
        if (support_.size() == 1) return support_.front();
        return std::nullopt;
    }

    /// Bit s set iff s is in the support; requires dimension <= 64.
    std::uint64_t support_mask() const {
        std::uint64_t mask = 0;
        for (StateId s : support_) mask |= std::uint64_t{1} << s;
        return mask;
    }

    bool operator==(const BasicBelief& other) const { return probs_ == other.probs_; }
    bool operator<(const BasicBelief& other) const { return probs_ < other.probs_; }

private:
    std::vector<T> probs_;
    std::vector<StateId> support_;
};

using Belief = BasicBelief<double>;
using ExactBelief = BasicBelief<Rational>;

/// The model's b₀.
ExactBelief initial_belief(const Pomdp& model);
Belief to_float(const ExactBelief& belief);

template <class T>
struct Outcome {
    SignalId signal;
    T prob;
    BasicBelief<T> posterior;
};

/// τ(b, a, z). Throws ZeroProbabilitySignalError if z has probability 0.
template <class T>
BasicBelief<T> update(const Pomdp& model, const BasicBelief<T>& belief, ActionId action, SignalId signal);

/// Every signal with positive probability under (b, a), ascending by signal,
/// with its probability and posterior.
template <class T>
std::vector<Outcome<T>> one_step_outcomes(const Pomdp& model, const BasicBelief<T>& belief, ActionId action);

/// Σ_s |b(s) − b′(s)|. Throws std::invalid_argument on dimension mismatch.
template <class T>
T l1_distance(const BasicBelief<T>& lhs, const BasicBelief<T>& rhs);

/// Support of τ(b, a, z) for any b with support `support`; 0 if z is
/// impossible. Requires |S| <= 64.
std::uint64_t support_update(const Pomdp& model, std::uint64_t support, ActionId action, SignalId signal);

/// Integer coordinates n(s) of a grid point, Σ n(s) = k.
using GridPoint = std::vector<std::int64_t>;

/// The k-uniform grid G_k over the simplex of a given dimension, enumerated
/// in lexicographic order of the coordinate vectors.
class Grid {
public:
    Grid(std::int64_t k, std::size_t dimension);

    std::int64_t k() const noexcept { return k_; }
    std::size_t dimension() const noexcept { return dimension_; }

    /// binomial(k + |S| − 1, |S| − 1), exact.
    BigInt cardinality() const;

    /// All points in enumeration order. Throws ResourceLimitError if the
    /// grid has more than `limit` points.
    std::vector<GridPoint> points(std::uint64_t limit = 50'000'000) const;

    /// Position of `point` in enumeration order, and its inverse.
    BigInt index_of(const GridPoint& point) const;
    GridPoint point_at(const BigInt& index) const;

    bool contains(const GridPoint& point) const;

    template <class T>
    BasicBelief<T> belief(const GridPoint& point) const;

private:
    std::int64_t k_;
    std::size_t dimension_;
};

Grid grid_points(std::int64_t k, std::size_t dimension);

/// Π_k: the same-support grid point at minimal L1 distance. Every support
/// coordinate starts at max(1, ⌊k·b(s)⌋); units are then added (or removed)
/// greedily by smallest marginal L1 cost, ties to the earlier state.
/// Throws GridResolutionError when k < |supp(b)|.
template <class T>
GridPoint project(const BasicBelief<T>& belief, const Grid& grid);

/// Π_k of the belief proportional to non-negative integer `weights`, in
/// exact integer arithmetic. Requires k < 2^40 and Σ weights < 2^62.
GridPoint project_weights(std::span<const std::uint64_t> weights, std::int64_t k);

}  // namespace revpomdp
