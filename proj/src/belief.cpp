#include "revpomdp/belief.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace revpomdp {

namespace {

template <class T>
T entry_prob(const KernelEntry& e) {
    if constexpr (std::is_same_v<T, double>)
        return e.weight;
    else
        return e.prob;
}

template <class T>
T magnitude(const T& x) {
    return x < 0 ? T(-x) : x;
}

/// Greedy apportionment shared by every projection path. `floor_of(s)` is
/// ⌊k·b(s)⌋ and `cost(s, n)` is proportional to |n − k·b(s)|.
template <class FloorFn, class CostFn>
GridPoint apportion(std::size_t dimension, const std::vector<StateId>& support, std::int64_t k, FloorFn floor_of,
                    CostFn cost) {
    if (support.empty()) throw std::invalid_argument("cannot project a belief with empty support");
    if (static_cast<std::int64_t>(support.size()) > k)
        throw GridResolutionError("grid resolution k=" + std::to_string(k) + " is below the support size " +
                                  std::to_string(support.size()) + "; use k >= " + std::to_string(support.size()));
    GridPoint counts(dimension, 0);
    std::int64_t sum = 0;
    for (StateId s : support) {
        counts[s] = std::max<std::int64_t>(1, floor_of(s));
        sum += counts[s];
    }
    while (sum < k) {
        std::optional<StateId> best;
        std::decay_t<decltype(cost(0, 0))> best_delta{};
        for (StateId s : support) {
            std::decay_t<decltype(cost(0, 0))> delta = cost(s, counts[s] + 1) - cost(s, counts[s]);
            if (!best || delta < best_delta) {
                best = s;
                best_delta = delta;
            }
        }
        ++counts[*best];
        ++sum;
    }
    while (sum > k) {
        std::optional<StateId> best;
        std::decay_t<decltype(cost(0, 0))> best_delta{};
        for (StateId s : support) {
            if (counts[s] <= 1) continue;
            std::decay_t<decltype(cost(0, 0))> delta = cost(s, counts[s] - 1) - cost(s, counts[s]);
            if (!best || delta < best_delta) {
                best = s;
                best_delta = delta;
            }
        }
        --counts[*best];
        --sum;
    }
    return counts;
}

}  // namespace

ExactBelief initial_belief(const Pomdp& model) { return ExactBelief(model.initial()); }

Belief to_float(const ExactBelief& belief) {
    std::vector<double> p;
    p.reserve(belief.dimension());
    for (const auto& x : belief.probs()) p.push_back(to_double(x));
    return Belief(std::move(p));
}

template <class T>
BasicBelief<T> update(const Pomdp& model, const BasicBelief<T>& belief, ActionId action, SignalId signal) {
    std::vector<T> next(model.num_states(), T(0));
    T total = 0;
    for (StateId s : belief.support()) {
        for (const auto& e : model.kernel(s, action)) {
            if (e.signal != signal) continue;
            const T p = belief[s] * entry_prob<T>(e);
            next[e.next] += p;
            total += p;
        }
    }
    if (!(total > 0))
        throw ZeroProbabilitySignalError("signal " + model.signal_name(signal) + " has probability 0 after action " +
                                         model.action_name(action));
    for (auto& x : next) x /= total;
    return BasicBelief<T>(std::move(next));
}

template <class T>
std::vector<Outcome<T>> one_step_outcomes(const Pomdp& model, const BasicBelief<T>& belief, ActionId action) {
    const std::size_t n = model.num_states();
    std::vector<std::vector<T>> joint(model.num_signals());
    std::vector<T> mass(model.num_signals(), T(0));
    for (StateId s : belief.support()) {
        for (const auto& e : model.kernel(s, action)) {
            auto& row = joint[e.signal];
            if (row.empty()) row.assign(n, T(0));
            const T p = belief[s] * entry_prob<T>(e);
            row[e.next] += p;
            mass[e.signal] += p;
        }
    }
    std::vector<Outcome<T>> out;
    for (SignalId z = 0; z < model.num_signals(); ++z) {
        if (!(mass[z] > 0)) continue;
        auto& row = joint[z];
        for (auto& x : row) x /= mass[z];
        out.push_back({z, mass[z], BasicBelief<T>(std::move(row))});
    }
    return out;
}

template <class T>
T l1_distance(const BasicBelief<T>& lhs, const BasicBelief<T>& rhs) {
    if (lhs.dimension() != rhs.dimension()) throw std::invalid_argument("l1_distance: dimension mismatch");
    T sum = 0;
    for (std::size_t s = 0; s < lhs.dimension(); ++s) sum += magnitude(T(lhs[s] - rhs[s]));
    return sum;
}

std::uint64_t support_update(const Pomdp& model, std::uint64_t support, ActionId action, SignalId signal) {
    std::uint64_t next = 0;
    for (StateId s = 0; s < model.num_states(); ++s) {
        if (!(support >> s & 1)) continue;
        for (const auto& e : model.kernel(s, action))
            if (e.signal == signal) next |= std::uint64_t{1} << e.next;
    }
    return next;
}

Grid::Grid(std::int64_t k, std::size_t dimension) : k_(k), dimension_(dimension) {
    if (k < 1) throw GridResolutionError("grid resolution k must be at least 1");
    if (dimension < 1) throw std::invalid_argument("grid dimension must be at least 1");
}

namespace {

BigInt binomial(const BigInt& n, std::size_t r) {
    BigInt result = 1;
    for (std::size_t i = 1; i <= r; ++i) result = result * (n - r + i) / i;
    return result;
}

/// Compositions of `total` into `parts` non-negative parts.
BigInt compositions(std::int64_t total, std::size_t parts) {
    if (parts == 0) return total == 0 ? 1 : 0;
    return binomial(BigInt(total) + parts - 1, parts - 1);
}

}  // namespace

BigInt Grid::cardinality() const { return compositions(k_, dimension_); }

std::vector<GridPoint> Grid::points(std::uint64_t limit) const {
    if (cardinality() > limit)
        throw ResourceLimitError("grid G_" + std::to_string(k_) + " has " + cardinality().str() +
                                 " points, above the limit " + std::to_string(limit));
    std::vector<GridPoint> out;
    GridPoint current(dimension_, 0);
    // Odometer over compositions in lexicographic order.
    current.back() = k_;
    while (true) {
        out.push_back(current);
        // Find the rightmost position i < last that can be incremented, i.e. with remaining mass after it.
        std::int64_t tail = current.back();
        std::size_t i = dimension_ - 1;
        bool advanced = false;
        while (i > 0) {
            --i;
            if (tail > 0) {
                ++current[i];
                std::fill(current.begin() + static_cast<std::ptrdiff_t>(i) + 1, current.end(), 0);
                std::int64_t used = 0;
                for (std::size_t j = 0; j <= i; ++j) used += current[j];
                current.back() = k_ - used;
                advanced = true;
                break;
            }
            tail += current[i];
        }
        if (!advanced) break;
    }
    return out;
}

BigInt Grid::index_of(const GridPoint& point) const {
    if (!contains(point)) throw std::invalid_argument("point is not on the grid");
    BigInt index = 0;
    std::int64_t remaining = k_;
    for (std::size_t i = 0; i + 1 < dimension_; ++i) {
        for (std::int64_t v = 0; v < point[i]; ++v) index += compositions(remaining - v, dimension_ - i - 1);
        remaining -= point[i];
    }
    return index;
}

GridPoint Grid::point_at(const BigInt& index) const {
    if (index < 0 || index >= cardinality()) throw std::out_of_range("grid index out of range");
    GridPoint point(dimension_, 0);
    BigInt rest = index;
    std::int64_t remaining = k_;
    for (std::size_t i = 0; i + 1 < dimension_; ++i) {
        std::int64_t v = 0;
        while (true) {
            BigInt block = compositions(remaining - v, dimension_ - i - 1);
            if (rest < block) break;
            rest -= block;
            ++v;
        }
        point[i] = v;
        remaining -= v;
    }
    point.back() = remaining;
    return point;
}

bool Grid::contains(const GridPoint& point) const {
    if (point.size() != dimension_) return false;
    std::int64_t sum = 0;
    for (auto c : point) {
        if (c < 0) return false;
        sum += c;
    }
    return sum == k_;
}

template <class T>
BasicBelief<T> Grid::belief(const GridPoint& point) const {
    std::vector<T> p;
    p.reserve(point.size());
    for (auto c : point) p.push_back(T(c) / T(k_));
    return BasicBelief<T>(std::move(p));
}

Grid grid_points(std::int64_t k, std::size_t dimension) { return Grid(k, dimension); }

template <class T>
GridPoint project(const BasicBelief<T>& belief, const Grid& grid) {
    if (belief.dimension() != grid.dimension()) throw std::invalid_argument("project: dimension mismatch");
    const std::int64_t k = grid.k();
    if constexpr (std::is_same_v<T, double>) {
        auto scaled = [&](StateId s) { return belief[s] * static_cast<double>(k); };
        return apportion(
            belief.dimension(), belief.support(), k,
            [&](StateId s) { return static_cast<std::int64_t>(std::floor(scaled(s))); },
            [&](StateId s, std::int64_t n) { return std::abs(static_cast<double>(n) - scaled(s)); });
    } else {
        auto scaled = [&](StateId s) { return Rational(belief[s] * Rational(k)); };
        return apportion(
            belief.dimension(), belief.support(), k,
            [&](StateId s) { return floor(scaled(s)).template convert_to<std::int64_t>(); },
            [&](StateId s, std::int64_t n) { return magnitude(Rational(Rational(n) - scaled(s))); });
    }
}

GridPoint project_weights(std::span<const std::uint64_t> weights, std::int64_t k) {
    using Wide = __int128;
    std::vector<StateId> support;
    Wide total = 0;
    for (std::size_t s = 0; s < weights.size(); ++s) {
        if (weights[s] > 0) support.push_back(s);
        total += weights[s];
    }
    if (k >= (std::int64_t{1} << 40) || total >= (Wide{1} << 62))
        throw std::invalid_argument("project_weights: operands too large for exact integer projection");
    // In units of 1/total: |n − k·w/total| · total = |n·total − k·w|.
    return apportion(
        weights.size(), support, k,
        [&](StateId s) { return static_cast<std::int64_t>(Wide(k) * weights[s] / total); },
        [&](StateId s, std::int64_t n) {
            const Wide d = Wide(n) * total - Wide(k) * weights[s];
            return d < 0 ? -d : d;
        });
}

template BasicBelief<double> update(const Pomdp&, const BasicBelief<double>&, ActionId, SignalId);
template BasicBelief<Rational> update(const Pomdp&, const BasicBelief<Rational>&, ActionId, SignalId);
template std::vector<Outcome<double>> one_step_outcomes(const Pomdp&, const BasicBelief<double>&, ActionId);
template std::vector<Outcome<Rational>> one_step_outcomes(const Pomdp&, const BasicBelief<Rational>&, ActionId);
template double l1_distance(const BasicBelief<double>&, const BasicBelief<double>&);
template Rational l1_distance(const BasicBelief<Rational>&, const BasicBelief<Rational>&);
template BasicBelief<double> Grid::belief(const GridPoint&) const;
template BasicBelief<Rational> Grid::belief(const GridPoint&) const;
template GridPoint project(const BasicBelief<double>&, const Grid&);
template GridPoint project(const BasicBelief<Rational>&, const Grid&);

}  // namespace revpomdp
