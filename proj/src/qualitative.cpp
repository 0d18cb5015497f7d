#include "revpomdp/qualitative.hpp"

#include <algorithm>
#include <bit>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>

#include "revpomdp/belief.hpp"
#include "revpomdp/errors.hpp"
#include "revpomdp/modelio.hpp"

namespace revpomdp {

namespace {

constexpr std::size_t max_support_states = std::size_t{1} << 20;

/// Distinct successor supports of (u, a), in signal order of first occurrence.
std::vector<std::uint64_t> successor_supports(const Pomdp& model, std::uint64_t u, ActionId a) {
    std::vector<std::uint64_t> out;
    std::vector<bool> signal_seen(model.num_signals(), false);
    for (StateId s = 0; s < model.num_states(); ++s) {
        if (!(u >> s & 1)) continue;
        for (const auto& e : model.kernel(s, a)) signal_seen[e.signal] = true;
    }
    for (SignalId z = 0; z < model.num_signals(); ++z) {
        if (!signal_seen[z]) continue;
        const std::uint64_t next = support_update(model, u, a, z);
        if (std::find(out.begin(), out.end(), next) == out.end()) out.push_back(next);
    }
    return out;
}

SupportMdp explore(const Pomdp& model) {
    if (model.num_states() > 63)
        throw ResourceLimitError("support abstraction supports at most 63 states, model has " +
                                 std::to_string(model.num_states()));
    SupportMdp result;
    result.num_model_states = model.num_states();
    std::vector<std::uint64_t> frontier;
    auto intern = [&](std::uint64_t u) {
        auto [it, inserted] = result.index.emplace(u, result.supports.size());
        if (inserted) {
            if (result.supports.size() >= max_support_states)
                throw ResourceLimitError("support MDP exceeds " + std::to_string(max_support_states) + " states");
            result.supports.push_back(u);
            frontier.push_back(u);
        }
        return it->second;
    };
    const std::uint64_t initial = initial_belief(model).support_mask();
    result.initial = intern(initial);
    for (StateId s = 0; s < model.num_states(); ++s) intern(std::uint64_t{1} << s);

    std::vector<std::vector<std::vector<std::size_t>>> edges;  // [state][action] -> successors
    std::size_t processed = 0;
    while (processed < result.supports.size()) {
        const std::uint64_t u = result.supports[processed++];
        std::vector<std::vector<std::size_t>> by_action(model.num_actions());
        for (ActionId a = 0; a < model.num_actions(); ++a)
            for (std::uint64_t next : successor_supports(model, u, a)) by_action[a].push_back(intern(next));
        edges.push_back(std::move(by_action));
    }

    result.mdp = FiniteMdp(result.supports.size(), model.num_actions());
    for (ActionId a = 0; a < model.num_actions(); ++a) result.mdp.set_action_name(a, model.action_name(a));
    for (std::size_t i = 0; i < result.supports.size(); ++i) {
        result.mdp.set_state_name(i, result.label(model, i));
        for (ActionId a = 0; a < model.num_actions(); ++a) {
            const auto& targets = edges[i][a];
            std::vector<Successor> row;
            for (std::size_t j : targets) row.push_back({j, Rational(1, static_cast<long>(targets.size()))});
            result.mdp.set_transition(i, a, std::move(row));
        }
    }
    return result;
}

}  // namespace

std::optional<std::size_t> SupportMdp::find(std::uint64_t support) const {
    auto it = index.find(support);
    if (it == index.end()) return std::nullopt;
    return it->second;
}

std::string SupportMdp::label(const Pomdp& model, std::size_t i) const {
    std::string out = "{";
    bool first = true;
    for (StateId s = 0; s < model.num_states(); ++s) {
        if (!(supports[i] >> s & 1)) continue;
        if (!first) out += ",";
        out += model.state_name(s);
        first = false;
    }
    return out + "}";
}

SupportMdp build_support_mdp(const Pomdp& model) {
    require_revealing(model);
    return explore(model);
}

PriorityFn extend_priorities(const SupportMdp& support, const PriorityFn& priorities) {
    const unsigned d = priorities.max_priority;
    const unsigned padding = (d + 1) % 2 == 1 ? d + 1 : d + 2;
    std::vector<unsigned> values(support.supports.size(), padding);
    for (std::size_t i = 0; i < support.supports.size(); ++i) {
        if (!support.is_singleton(i)) continue;
        const auto s = static_cast<StateId>(std::countr_zero(support.supports[i]));
        values[i] = priorities(s);
    }
    PriorityFn out(std::move(values));
    out.max_priority = std::max(out.max_priority, d);
    return out;
}

bool ParityAnalysis::winning_support(std::uint64_t support_mask) const {
    auto i = support.find(support_mask);
    return i && solution.winning[*i];
}

namespace {

ParityAnalysis compute_parity_analysis(const Pomdp& model, const PriorityFn& priorities) {
    if (priorities.size() != model.num_states())
        throw std::invalid_argument("priority function does not cover every state");
    ParityAnalysis analysis;
    analysis.support = build_support_mdp(model);
    analysis.support_priorities = extend_priorities(analysis.support, priorities);
    analysis.solution = almost_sure_parity(analysis.support.mdp, analysis.support_priorities);
    for (StateId s = 0; s < model.num_states(); ++s)
        if (analysis.solution.winning[analysis.support.singleton(s)]) analysis.winning_states.push_back(s);
    return analysis;
}

struct AnalysisCache {
    std::mutex mutex;
    std::unordered_map<std::size_t, std::vector<std::pair<std::string, std::shared_ptr<const ParityAnalysis>>>> entries;
};

AnalysisCache& cache() {
    static AnalysisCache instance;
    return instance;
}

}  // namespace

std::shared_ptr<const ParityAnalysis> parity_analysis(const Pomdp& model, const PriorityFn& priorities) {
    std::string key = serialize_model(model);
    key += "#priorities:";
    for (unsigned p : priorities.values) key += std::to_string(p) + ",";
    const std::size_t hash = std::hash<std::string>{}(key);
    auto& c = cache();
    {
        std::lock_guard lock(c.mutex);
        for (const auto& [stored, analysis] : c.entries[hash])
            if (stored == key) return analysis;
    }
    auto analysis = std::make_shared<const ParityAnalysis>(compute_parity_analysis(model, priorities));
    std::lock_guard lock(c.mutex);
    c.entries[hash].emplace_back(std::move(key), analysis);
    return analysis;
}

std::vector<StateId> almost_sure_parity_states(const Pomdp& model, const PriorityFn& priorities) {
    return parity_analysis(model, priorities)->winning_states;
}

bool almost_sure_winning(const Pomdp& model, const PriorityFn& priorities) {
    const auto analysis = parity_analysis(model, priorities);
    return analysis->solution.winning[analysis->support.initial];
}

LimitSureVerdict limit_sure_winning(const Pomdp& model, const PriorityFn& priorities) {
    return {almost_sure_winning(model, priorities), true};
}

bool almost_sure_belief_reach(const Pomdp& model, const std::vector<StateId>& targets) {
    const SupportMdp support = build_support_mdp(model);
    StateSet goal(support.supports.size(), false);
    for (StateId s : targets) goal[support.singleton(s)] = true;
    return almost_sure_reach(support.mdp, goal).winning[support.initial];
}

TerminalSet terminal_states(const Pomdp& model, const std::vector<StateId>& targets) {
    TerminalSet result;
    result.mask.assign(model.num_states(), false);
    std::uint64_t target_mask = 0;
    for (StateId s : targets) target_mask |= std::uint64_t{1} << s;
    const SupportMdp support = explore(model);

    // Supports that can reach a support meeting X, by backward search.
    const std::size_t n = support.supports.size();
    std::vector<std::vector<std::size_t>> predecessors(n);
    for (std::size_t i = 0; i < n; ++i)
        for (ActionId a = 0; a < model.num_actions(); ++a)
            for (const auto& next : support.mdp.successors(i, a)) predecessors[next.state].push_back(i);
    StateSet reaches(n, false);
    std::vector<std::size_t> frontier;
    for (std::size_t i = 0; i < n; ++i)
        if (support.supports[i] & target_mask) {
            reaches[i] = true;
            frontier.push_back(i);
        }
    while (!frontier.empty()) {
        const std::size_t i = frontier.back();
        frontier.pop_back();
        for (std::size_t p : predecessors[i])
            if (!reaches[p]) {
                reaches[p] = true;
                frontier.push_back(p);
            }
    }
    for (StateId s = 0; s < model.num_states(); ++s) {
        const bool in_targets = target_mask >> s & 1;
        if (in_targets || !reaches[support.singleton(s)]) {
            result.mask[s] = true;
            result.states.push_back(s);
        }
    }
    return result;
}

std::string support_mdp_dot(const Pomdp& model, const ParityAnalysis& analysis) {
    const auto& support = analysis.support;
    std::ostringstream out;
    out << "digraph support_mdp {\n  rankdir=LR;\n  node [shape=box, style=filled];\n";
    for (std::size_t i = 0; i < support.supports.size(); ++i) {
        out << "  n" << i << " [label=\"" << support.label(model, i) << "\\np=" << analysis.support_priorities(i)
            << "\", fillcolor=\"" << (analysis.solution.winning[i] ? "palegreen" : "white") << "\""
            << (i == support.initial ? ", penwidth=2" : "") << "];\n";
    }
    for (std::size_t i = 0; i < support.supports.size(); ++i)
        for (ActionId a = 0; a < model.num_actions(); ++a)
            for (const auto& next : support.mdp.successors(i, a))
                out << "  n" << i << " -> n" << next.state << " [label=\"" << model.action_name(a) << "\"];\n";
    out << "}\n";
    return out.str();
}

}  // namespace revpomdp
