#include "revpomdp/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "revpomdp/errors.hpp"

namespace revpomdp {

FiniteMdp::FiniteMdp(std::size_t num_states, std::size_t num_actions)
    : num_states_(num_states), num_actions_(num_actions), rows_(num_states * num_actions) {}

void FiniteMdp::set_transition(std::size_t q, std::size_t a, std::vector<Successor> distribution) {
    if (q >= num_states_ || a >= num_actions_) throw std::out_of_range("FiniteMdp::set_transition");
    std::sort(distribution.begin(), distribution.end(),
              [](const Successor& x, const Successor& y) { return x.state < y.state; });
    std::vector<Successor> merged;
    for (auto& s : distribution) {
        if (s.state >= num_states_) throw std::out_of_range("FiniteMdp::set_transition: successor");
        if (!merged.empty() && merged.back().state == s.state)
            merged.back().prob += s.prob;
        else
            merged.push_back(std::move(s));
    }
    rows_[q * num_actions_ + a] = std::move(merged);
}

bool FiniteMdp::enabled(std::size_t q, std::size_t a) const {
    return rows_.at(q * num_actions_ + a).has_value();
}

std::span<const Successor> FiniteMdp::successors(std::size_t q, std::size_t a) const {
    const auto& row = rows_.at(q * num_actions_ + a);
    if (!row) return {};
    return *row;
}

std::vector<std::size_t> FiniteMdp::enabled_actions(std::size_t q) const {
    std::vector<std::size_t> out;
    for (std::size_t a = 0; a < num_actions_; ++a)
        if (enabled(q, a)) out.push_back(a);
    return out;
}

void FiniteMdp::set_state_name(std::size_t q, std::string name) {
    if (state_names_.size() < num_states_) state_names_.resize(num_states_);
    state_names_.at(q) = std::move(name);
}

void FiniteMdp::set_action_name(std::size_t a, std::string name) {
    if (action_names_.size() < num_actions_) action_names_.resize(num_actions_);
    action_names_.at(a) = std::move(name);
}

std::string FiniteMdp::state_name(std::size_t q) const {
    if (q < state_names_.size() && !state_names_[q].empty()) return state_names_[q];
    return "q" + std::to_string(q);
}

std::string FiniteMdp::action_name(std::size_t a) const {
    if (a < action_names_.size() && !action_names_[a].empty()) return action_names_[a];
    return "a" + std::to_string(a);
}

void FiniteMdp::validate() const {
    std::vector<Violation> violations;
    for (std::size_t q = 0; q < num_states_; ++q) {
        bool any = false;
        for (std::size_t a = 0; a < num_actions_; ++a) {
            if (!enabled(q, a)) continue;
            any = true;
            Rational sum = 0;
            for (const auto& s : successors(q, a)) {
                if (s.prob <= 0)
                    violations.push_back({"non-positive probability at (" + state_name(q) + "," + action_name(a) + ")",
                                          state_name(q), action_name(a)});
                sum += s.prob;
            }
            if (sum != 1)
                violations.push_back({"row sum " + to_string(sum) + " != 1 at (" + state_name(q) + "," +
                                          action_name(a) + ")",
                                      state_name(q), action_name(a)});
        }
        if (!any) violations.push_back({"no enabled action at " + state_name(q), state_name(q), std::nullopt});
    }
    if (!violations.empty()) throw ValidationError(std::move(violations));
}

std::vector<std::size_t> EndComponent::states() const {
    std::vector<std::size_t> out;
    out.reserve(choices.size());
    for (const auto& [q, _] : choices) out.push_back(q);
    return out;
}

std::vector<std::vector<std::size_t>> strongly_connected_components(
    const std::vector<std::vector<std::size_t>>& adjacency, const StateSet& active) {
    const std::size_t n = adjacency.size();
    constexpr std::size_t unvisited = static_cast<std::size_t>(-1);
    std::vector<std::size_t> index(n, unvisited), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack;
    std::vector<std::vector<std::size_t>> components;
    std::size_t counter = 0;

    // Iterative Tarjan: frames hold (vertex, next edge position).
    std::vector<std::pair<std::size_t, std::size_t>> frames;
    for (std::size_t root = 0; root < n; ++root) {
        if (!active[root] || index[root] != unvisited) continue;
        frames.emplace_back(root, 0);
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!frames.empty()) {
            auto& [v, pos] = frames.back();
            if (pos < adjacency[v].size()) {
                const std::size_t w = adjacency[v][pos++];
                if (!active[w]) continue;
                if (index[w] == unvisited) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    frames.emplace_back(w, 0);
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            const std::size_t done = v;
            frames.pop_back();
            if (!frames.empty()) {
                const std::size_t parent = frames.back().first;
                low[parent] = std::min(low[parent], low[done]);
            }
            if (low[done] == index[done]) {
                std::vector<std::size_t> component;
                std::size_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    component.push_back(w);
                } while (w != done);
                std::sort(component.begin(), component.end());
                components.push_back(std::move(component));
            }
        }
    }
    return components;
}

bool is_end_component(const FiniteMdp& mdp, const EndComponent& candidate) {
    if (candidate.choices.empty()) return false;
    StateSet inside(mdp.num_states(), false);
    for (const auto& [q, actions] : candidate.choices) {
        if (q >= mdp.num_states()) return false;
        inside[q] = true;
    }
    std::vector<std::vector<std::size_t>> adjacency(mdp.num_states());
    for (const auto& [q, actions] : candidate.choices) {
        if (actions.empty()) return false;
        for (std::size_t a : actions) {
            if (a >= mdp.num_actions() || !mdp.enabled(q, a)) return false;
            for (const auto& s : mdp.successors(q, a)) {
                if (!inside[s.state]) return false;  // closedness
                adjacency[q].push_back(s.state);
            }
        }
    }
    return strongly_connected_components(adjacency, inside).size() == 1;
}

std::vector<EndComponent> mec_decomposition(const FiniteMdp& mdp, const StateSet& within) {
    const std::size_t n = mdp.num_states();
    StateSet active = within.empty() ? StateSet(n, true) : within;
    std::vector<std::vector<std::size_t>> allowed(n);
    for (std::size_t q = 0; q < n; ++q)
        if (active[q]) allowed[q] = mdp.enabled_actions(q);

    std::vector<std::size_t> component(n, 0);
    std::vector<std::vector<std::size_t>> sccs;
    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<std::vector<std::size_t>> adjacency(n);
        for (std::size_t q = 0; q < n; ++q) {
            if (!active[q]) continue;
            for (std::size_t a : allowed[q])
                for (const auto& s : mdp.successors(q, a)) adjacency[q].push_back(s.state);
        }
        sccs = strongly_connected_components(adjacency, active);
        for (std::size_t c = 0; c < sccs.size(); ++c)
            for (std::size_t q : sccs[c]) component[q] = c;

        for (std::size_t q = 0; q < n; ++q) {
            if (!active[q]) continue;
            auto& acts = allowed[q];
            const auto before = acts.size();
            std::erase_if(acts, [&](std::size_t a) {
                for (const auto& s : mdp.successors(q, a))
                    if (!active[s.state] || component[s.state] != component[q]) return true;
                return false;
            });
            if (acts.size() != before) changed = true;
            if (acts.empty()) {
                active[q] = false;
                changed = true;
            }
        }
    }

    std::vector<EndComponent> result;
    for (const auto& scc : sccs) {
        EndComponent ec;
        for (std::size_t q : scc)
            if (active[q]) ec.choices.emplace(q, allowed[q]);
        if (!ec.choices.empty()) result.push_back(std::move(ec));
    }
    std::sort(result.begin(), result.end(), [](const EndComponent& x, const EndComponent& y) {
        return x.choices.begin()->first < y.choices.begin()->first;
    });
    return result;
}

QualitativeSolution almost_sure_reach(const FiniteMdp& mdp, const StateSet& target) {
    const std::size_t n = mdp.num_states();
    StateSet winning(n, true);
    std::vector<std::size_t> action_of(n, static_cast<std::size_t>(-1));

    auto stays_in = [&](std::size_t q, std::size_t a, const StateSet& set) {
        for (const auto& s : mdp.successors(q, a))
            if (!set[s.state]) return false;
        return true;
    };

    while (true) {
        // Positive-probability attractor to the target using only actions
        // that cannot leave the current candidate set.
        StateSet reach(n, false);
        std::fill(action_of.begin(), action_of.end(), static_cast<std::size_t>(-1));
        for (std::size_t q = 0; q < n; ++q)
            if (target[q] && winning[q]) reach[q] = true;
        bool grew = true;
        while (grew) {
            grew = false;
            for (std::size_t q = 0; q < n; ++q) {
                if (reach[q] || !winning[q]) continue;
                for (std::size_t a = 0; a < mdp.num_actions() && !reach[q]; ++a) {
                    if (!mdp.enabled(q, a) || !stays_in(q, a, winning)) continue;
                    for (const auto& s : mdp.successors(q, a)) {
                        if (reach[s.state]) {
                            reach[q] = true;
                            action_of[q] = a;
                            break;
                        }
                    }
                }
                grew = grew || reach[q];
            }
        }
        if (reach == winning) break;
        winning = std::move(reach);
    }

    MemorylessStrategy strategy;
    strategy.choices.resize(n);
    for (std::size_t q = 0; q < n; ++q) {
        if (!winning[q]) continue;
        if (action_of[q] != static_cast<std::size_t>(-1)) {
            strategy.choices[q] = {action_of[q]};
            continue;
        }
        // Target state: prefer an action that keeps the play in the winning set.
        const auto enabled = mdp.enabled_actions(q);
        auto it = std::find_if(enabled.begin(), enabled.end(), [&](std::size_t a) { return stays_in(q, a, winning); });
        if (it != enabled.end())
            strategy.choices[q] = {*it};
        else if (!enabled.empty())
            strategy.choices[q] = {enabled.front()};
    }
    return {std::move(winning), std::move(strategy)};
}

namespace {

/// Even end components keyed by owner: for each state in the union, the
/// action set of the end component with the least even priority owning it.
std::vector<std::vector<std::size_t>> even_component_choices(const FiniteMdp& mdp, const PriorityFn& priorities) {
    const std::size_t n = mdp.num_states();
    if (priorities.size() != n) throw std::invalid_argument("priority function does not match MDP size");
    std::vector<std::vector<std::size_t>> owner(n);
    for (unsigned c = 0; c <= priorities.max_priority; c += 2) {
        StateSet slice(n, false);
        for (std::size_t q = 0; q < n; ++q) slice[q] = priorities(q) >= c;
        for (const auto& mec : mec_decomposition(mdp, slice)) {
            const bool has_c = std::any_of(mec.choices.begin(), mec.choices.end(),
                                           [&](const auto& entry) { return priorities(entry.first) == c; });
            if (!has_c) continue;
            for (const auto& [q, actions] : mec.choices)
                if (owner[q].empty()) owner[q] = actions;
        }
    }
    return owner;
}

}  // namespace

StateSet even_end_component_states(const FiniteMdp& mdp, const PriorityFn& priorities) {
    const auto owner = even_component_choices(mdp, priorities);
    StateSet out(owner.size(), false);
    for (std::size_t q = 0; q < owner.size(); ++q) out[q] = !owner[q].empty();
    return out;
}

QualitativeSolution almost_sure_parity(const FiniteMdp& mdp, const PriorityFn& priorities) {
    const auto owner = even_component_choices(mdp, priorities);
    StateSet good(owner.size(), false);
    for (std::size_t q = 0; q < owner.size(); ++q) good[q] = !owner[q].empty();
    auto solution = almost_sure_reach(mdp, good);
    for (std::size_t q = 0; q < owner.size(); ++q)
        if (good[q]) solution.strategy.choices[q] = owner[q];
    return solution;
}

namespace {

StateSet can_reach(const FiniteMdp& mdp, const StateSet& target) {
    const std::size_t n = mdp.num_states();
    std::vector<std::vector<std::size_t>> predecessors(n);
    for (std::size_t q = 0; q < n; ++q)
        for (std::size_t a = 0; a < mdp.num_actions(); ++a)
            for (const auto& s : mdp.successors(q, a)) predecessors[s.state].push_back(q);
    StateSet seen = target;
    std::vector<std::size_t> frontier;
    for (std::size_t q = 0; q < n; ++q)
        if (seen[q]) frontier.push_back(q);
    while (!frontier.empty()) {
        const std::size_t q = frontier.back();
        frontier.pop_back();
        for (std::size_t p : predecessors[q])
            if (!seen[p]) {
                seen[p] = true;
                frontier.push_back(p);
            }
    }
    return seen;
}

/// Solves A x = b in place by Gauss-Jordan elimination with exact pivots.
std::vector<Rational> solve_linear(std::vector<std::vector<Rational>> a, std::vector<Rational> b) {
    const std::size_t m = b.size();
    for (std::size_t col = 0; col < m; ++col) {
        std::size_t pivot = col;
        while (pivot < m && a[pivot][col] == 0) ++pivot;
        if (pivot == m) throw std::runtime_error("singular system in exact reachability solve");
        std::swap(a[pivot], a[col]);
        std::swap(b[pivot], b[col]);
        const Rational inv = 1 / a[col][col];
        for (std::size_t j = col; j < m; ++j) a[col][j] *= inv;
        b[col] *= inv;
        for (std::size_t r = 0; r < m; ++r) {
            if (r == col || a[r][col] == 0) continue;
            const Rational factor = a[r][col];
            for (std::size_t j = col; j < m; ++j)
                if (a[col][j] != 0) a[r][j] -= factor * a[col][j];
            b[r] -= factor * b[col];
        }
    }
    return b;
}

ReachValues iterate_values(const FiniteMdp& mdp, const StateSet& zero, const StateSet& one, double tolerance) {
    const std::size_t n = mdp.num_states();
    std::vector<double> x(n, 0.0), next(n, 0.0);
    for (std::size_t q = 0; q < n; ++q) x[q] = one[q] ? 1.0 : 0.0;
    while (true) {
        double diff = 0.0;
        for (std::size_t q = 0; q < n; ++q) {
            if (zero[q] || one[q]) {
                next[q] = x[q];
                continue;
            }
            double best = 0.0;
            for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
                if (!mdp.enabled(q, a)) continue;
                double sum = 0.0;
                for (const auto& s : mdp.successors(q, a)) sum += to_double(s.prob) * x[s.state];
                best = std::max(best, sum);
            }
            next[q] = best;
            diff = std::max(diff, std::abs(next[q] - x[q]));
        }
        x.swap(next);
        if (diff < tolerance) break;
    }
    return {std::move(x), std::nullopt};
}

}  // namespace

ReachValues quantitative_reach(const FiniteMdp& mdp, const StateSet& target, const ReachOptions& options) {
    const std::size_t n = mdp.num_states();
    const StateSet reachable = can_reach(mdp, target);
    StateSet zero(n), one = almost_sure_reach(mdp, target).winning;
    for (std::size_t q = 0; q < n; ++q) zero[q] = !reachable[q];
    if (n > options.exact_state_limit) return iterate_values(mdp, zero, one, options.tolerance);

    // Quotient the undecided states by their maximal end components; the
    // quotient has no end components, so every policy is transient on it.
    StateSet rest(n, false);
    for (std::size_t q = 0; q < n; ++q) rest[q] = !zero[q] && !one[q];
    constexpr std::size_t none = static_cast<std::size_t>(-1);
    std::vector<std::size_t> node_of(n, none);
    std::vector<EndComponent> mecs = mec_decomposition(mdp, rest);
    std::size_t nodes = 0;
    for (const auto& mec : mecs) {
        for (const auto& [q, _] : mec.choices) node_of[q] = nodes;
        ++nodes;
    }
    std::vector<std::size_t> mec_of(n, none);
    for (std::size_t i = 0; i < mecs.size(); ++i)
        for (const auto& [q, _] : mecs[i].choices) mec_of[q] = i;
    for (std::size_t q = 0; q < n; ++q)
        if (rest[q] && node_of[q] == none) node_of[q] = nodes++;

    struct Choice {
        std::vector<std::pair<std::size_t, Rational>> to_nodes;
        Rational constant;
    };
    std::vector<std::vector<Choice>> choices(nodes);
    for (std::size_t q = 0; q < n; ++q) {
        if (!rest[q]) continue;
        for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
            if (!mdp.enabled(q, a)) continue;
            if (mec_of[q] != none) {
                const auto& internal = mecs[mec_of[q]].choices.at(q);
                if (std::find(internal.begin(), internal.end(), a) != internal.end()) continue;
            }
            Choice c;
            c.constant = 0;
            for (const auto& s : mdp.successors(q, a)) {
                if (one[s.state])
                    c.constant += s.prob;
                else if (rest[s.state])
                    c.to_nodes.emplace_back(node_of[s.state], s.prob);
            }
            choices[node_of[q]].push_back(std::move(c));
        }
    }

    std::vector<std::size_t> policy(nodes, 0);
    std::vector<Rational> x(nodes, Rational(0));
    while (true) {
        std::vector<std::vector<Rational>> a(nodes, std::vector<Rational>(nodes, Rational(0)));
        std::vector<Rational> b(nodes, Rational(0));
        for (std::size_t i = 0; i < nodes; ++i) {
            a[i][i] = 1;
            const auto& c = choices[i][policy[i]];
            for (const auto& [j, p] : c.to_nodes) a[i][j] -= p;
            b[i] = c.constant;
        }
        x = solve_linear(std::move(a), std::move(b));
        bool improved = false;
        for (std::size_t i = 0; i < nodes; ++i) {
            auto evaluate = [&](const Choice& c) {
                Rational v = c.constant;
                for (const auto& [j, p] : c.to_nodes) v += p * x[j];
                return v;
            };
            Rational current = evaluate(choices[i][policy[i]]);
            for (std::size_t k = 0; k < choices[i].size(); ++k) {
                Rational v = evaluate(choices[i][k]);
                if (v > current) {
                    current = v;
                    policy[i] = k;
                    improved = true;
                }
            }
        }
        if (!improved) break;
    }

    std::vector<Rational> exact(n, Rational(0));
    std::vector<double> values(n, 0.0);
    for (std::size_t q = 0; q < n; ++q) {
        if (one[q])
            exact[q] = 1;
        else if (rest[q])
            exact[q] = x[node_of[q]];
        values[q] = to_double(exact[q]);
    }
    return {std::move(values), std::move(exact)};
}

}  // namespace revpomdp
