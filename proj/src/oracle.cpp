#include "revpomdp/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <thread>

#include "revpomdp/errors.hpp"
#include "revpomdp/mdp.hpp"

namespace revpomdp {

namespace {

std::vector<bool> target_mask(const Pomdp& model, const std::vector<StateId>& targets) {
    std::vector<bool> mask(model.num_states(), false);
    for (StateId s : targets) mask.at(s) = true;
    return mask;
}

bool dirac_on(const ExactBelief& b, const std::vector<bool>& mask) {
    const auto s = b.dirac_state();
    return s && mask[*s];
}

class TStepOracle {
public:
    TStepOracle(const Pomdp& model, const std::vector<StateId>& targets, std::size_t limit)
        : model_(model), mask_(target_mask(model, targets)), limit_(limit) {}

    Rational value(const ExactBelief& b, std::uint64_t remaining) {
        if (dirac_on(b, mask_)) return Rational(1);
        if (remaining == 0) return Rational(0);
        auto key = std::make_pair(b, remaining);
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;
        Rational best = 0;
        for (ActionId a = 0; a < model_.num_actions(); ++a) {
            Rational sum = 0;
            for (const auto& o : one_step_outcomes(model_, b, a)) sum += o.prob * value(o.posterior, remaining - 1);
            if (sum > best) best = sum;
        }
        if (memo_.size() >= limit_)
            throw ResourceLimitError("exact belief tree exceeds " + std::to_string(limit_) + " nodes");
        memo_.emplace(std::move(key), best);
        return best;
    }

private:
    const Pomdp& model_;
    std::vector<bool> mask_;
    std::size_t limit_;
    std::map<std::pair<ExactBelief, std::uint64_t>, Rational> memo_;
};

}  // namespace

Rational exact_tstep_value(const Pomdp& model, const std::vector<StateId>& targets, std::uint64_t horizon,
                           const ExactBelief& query, std::size_t node_limit) {
    if (query.dimension() != model.num_states()) throw std::invalid_argument("query belief has wrong dimension");
    TStepOracle oracle(model, targets, node_limit);
    return oracle.value(query, horizon);
}

ExactValueHandle ExactValueHandle::build(const Pomdp& model, std::vector<StateId> targets,
                                         const std::vector<ExactBelief>& roots, std::size_t node_limit) {
    ExactValueHandle h;
    h.model_ = model;
    std::sort(targets.begin(), targets.end());
    h.targets_ = std::move(targets);
    const auto mask = target_mask(model, h.targets_);

    auto intern = [&](const ExactBelief& b) {
        auto [it, inserted] = h.index_.emplace(b, h.beliefs_.size());
        if (inserted) {
            if (h.beliefs_.size() >= node_limit)
                throw ResourceLimitError("exact belief graph exceeds " + std::to_string(node_limit) + " nodes");
            h.beliefs_.push_back(b);
            h.target_.push_back(dirac_on(b, mask));
        }
        return it->second;
    };
    for (const auto& root : roots) {
        if (root.dimension() != model.num_states()) throw std::invalid_argument("root belief has wrong dimension");
        intern(root);
    }
    for (std::size_t i = 0; i < h.beliefs_.size(); ++i) {
        std::vector<std::vector<Edge>> by_action(model.num_actions());
        for (ActionId a = 0; a < model.num_actions(); ++a) {
            const ExactBelief current = h.beliefs_[i];
            for (auto& o : one_step_outcomes(model, current, a))
                by_action[a].push_back({o.signal, o.prob, intern(o.posterior)});
        }
        h.edges_.push_back(std::move(by_action));
    }

    const std::size_t n = h.beliefs_.size();
    FiniteMdp mdp(n, model.num_actions());
    StateSet goal(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        goal[i] = h.target_[i];
        for (ActionId a = 0; a < model.num_actions(); ++a) {
            std::vector<Successor> row;
            for (const auto& e : h.edges_[i][a]) row.push_back({e.node, e.prob});
            mdp.set_transition(i, a, std::move(row));
        }
    }
    ReachOptions options;
    options.exact_state_limit = n + 1;
    auto solved = quantitative_reach(mdp, goal, options);
    if (!solved.exact) throw std::logic_error("exact reachability solve did not run");
    h.values_ = std::move(*solved.exact);
    return h;
}

std::optional<std::size_t> ExactValueHandle::find(const ExactBelief& belief) const {
    auto it = index_.find(belief);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

const std::vector<ExactValueHandle::Edge>& ExactValueHandle::outcomes(std::size_t node, ActionId a) const {
    return edges_.at(node).at(a);
}

Rational ExactValueHandle::expected_value(std::size_t node, ActionId a) const {
    Rational sum = 0;
    for (const auto& e : outcomes(node, a)) sum += e.prob * values_[e.node];
    return sum;
}

std::optional<std::size_t> ExactValueHandle::successor(std::size_t node, ActionId a, SignalId z) const {
    for (const auto& e : outcomes(node, a))
        if (e.signal == z) return e.node;
    return std::nullopt;
}

namespace {

std::vector<ActionId> reliable_at(const ExactValueHandle& values, std::size_t node, const Rational& tol) {
    const std::size_t actions = values.model().num_actions();
    std::vector<Rational> expected;
    for (ActionId a = 0; a < actions; ++a) expected.push_back(values.expected_value(node, a));
    const Rational best = *std::max_element(expected.begin(), expected.end());
    std::vector<ActionId> out;
    for (ActionId a = 0; a < actions; ++a)
        if (best - expected[a] <= tol) out.push_back(a);
    return out;
}

}  // namespace

std::vector<ActionId> reliable_actions(const ExactValueHandle& values, const ExactBelief& belief, const Rational& tol) {
    const auto node = values.find(belief);
    if (!node) throw std::out_of_range("belief is not covered by the exact value handle");
    return reliable_at(values, *node, tol);
}

std::vector<ActionId> reliable_actions(const Pomdp& model, const Belief& belief,
                                       const std::function<double(const Belief&)>& values, double tol) {
    if (!values) throw std::invalid_argument("value handle unavailable");
    std::vector<double> expected;
    for (ActionId a = 0; a < model.num_actions(); ++a) {
        double sum = 0.0;
        for (const auto& o : one_step_outcomes(model, belief, a)) sum += o.prob * values(o.posterior);
        expected.push_back(sum);
    }
    const double best = *std::max_element(expected.begin(), expected.end());
    std::vector<ActionId> out;
    for (ActionId a = 0; a < model.num_actions(); ++a)
        if (best - expected[a] <= tol) out.push_back(a);
    return out;
}

namespace {

class UniformReliablePolicy final : public Policy {
public:
    explicit UniformReliablePolicy(std::shared_ptr<const ExactValueHandle> values) : values_(std::move(values)) {
        reliable_ = std::make_shared<std::vector<std::vector<ActionId>>>();
        for (std::size_t i = 0; i < values_->size(); ++i) reliable_->push_back(reliable_at(*values_, i, Rational(0)));
    }

    PolicyKind kind() const override { return PolicyKind::UniformReliable; }
    void reset(const ExactBelief& initial) override {
        node_ = values_->find(initial);
        if (!node_) throw std::out_of_range("initial belief is not covered by the exact value handle");
    }
    std::optional<ActionId> choose(std::mt19937_64& rng) override {
        const auto& choices = (*reliable_)[*node_];
        std::uniform_int_distribution<std::size_t> pick(0, choices.size() - 1);
        return choices[pick(rng)];
    }
    void observe(ActionId action, SignalId signal) override {
        node_ = values_->successor(*node_, action, signal);
        if (!node_) throw std::logic_error("observed signal has probability 0 under the exact belief");
    }
    std::unique_ptr<Policy> clone() const override { return std::make_unique<UniformReliablePolicy>(*this); }

private:
    std::shared_ptr<const ExactValueHandle> values_;
    std::shared_ptr<std::vector<std::vector<ActionId>>> reliable_;
    std::optional<std::size_t> node_;
};

struct Sampler {
    std::vector<double> initial;
    std::vector<std::vector<double>> rows;  // per (s, a), cumulative weights
};

std::size_t sample_index(const std::vector<double>& cumulative, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, cumulative.back());
    const double x = u(rng);
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

struct RunResult {
    bool success = false;
    std::optional<std::uint64_t> hit;
};

RunResult run_episode(const Pomdp& model, const Sampler& sampler, Policy& policy, const SimulationConfig& config,
                      const std::vector<bool>& target, const std::vector<bool>& hitting, std::mt19937_64& rng) {
    const ExactBelief b0 = initial_belief(model);
    policy.reset(b0);
    StateId state = sample_index(sampler.initial, rng);
    std::uint64_t support = b0.support_mask();
    const bool parity = config.objective.predicate == Predicate::ParityProxy;
    const std::uint64_t window_start = (config.cutoff + 1) / 2;
    std::optional<unsigned> window_min;

    RunResult result;
    for (std::uint64_t t = 0;; ++t) {
        const bool dirac = (support & (support - 1)) == 0;
        const auto dirac_state = static_cast<StateId>(std::countr_zero(support));
        if (dirac && hitting[dirac_state] && !result.hit) result.hit = t;
        if (!parity && dirac && target[dirac_state]) result.success = true;
        if (parity && t >= window_start) {
            const unsigned p = (*config.objective.priorities)(state);
            window_min = window_min ? std::min(*window_min, p) : p;
        }
        if (t == config.cutoff) break;
        if (!parity && result.success && result.hit) break;

        const auto action = policy.choose(rng);
        if (!action) {
            if (parity) return result;
            break;
        }
        const auto entries = model.kernel(state, *action);
        const auto& entry = entries[sample_index(sampler.rows[state * model.num_actions() + *action], rng)];
        state = entry.next;
        support = support_update(model, support, *action, entry.signal);
        policy.observe(*action, entry.signal);
    }
    if (parity) result.success = window_min && *window_min % 2 == 0;
    return result;
}

}  // namespace

std::unique_ptr<Policy> uniform_reliable_policy(std::shared_ptr<const ExactValueHandle> values) {
    if (!values) throw std::invalid_argument("value handle unavailable");
    return std::make_unique<UniformReliablePolicy>(std::move(values));
}

double SimStats::standard_error() const {
    if (runs == 0) return 0.0;
    const double p = success_rate();
    return std::sqrt(p * (1.0 - p) / static_cast<double>(runs));
}

std::uint64_t SimStats::hits_within(std::uint64_t steps) const {
    std::uint64_t total = 0;
    for (std::uint64_t t = 0; t + 1 < hitting_histogram.size() && t <= steps; ++t) total += hitting_histogram[t];
    return total;
}

SimStats simulate(const Pomdp& model, const Policy& policy, const SimulationConfig& config) {
    if (config.cutoff == 0) throw std::invalid_argument("simulation cutoff must be positive");
    if (config.runs == 0) throw std::invalid_argument("simulation needs at least one run");
    if (model.num_states() > 64) throw ResourceLimitError("simulation supports at most 64 states");
    if (config.objective.predicate == Predicate::ParityProxy) {
        if (!config.objective.priorities) throw std::invalid_argument("parity proxy needs priorities");
        if (config.objective.priorities->size() != model.num_states())
            throw std::invalid_argument("priority function does not cover every state");
    } else if (config.objective.predicate != Predicate::BeliefReach) {
        throw std::invalid_argument("unknown predicate");
    }

    Sampler sampler;
    double acc = 0.0;
    for (const auto& p : model.initial()) sampler.initial.push_back(acc += to_double(p));
    for (StateId s = 0; s < model.num_states(); ++s)
        for (ActionId a = 0; a < model.num_actions(); ++a) {
            std::vector<double> row;
            double sum = 0.0;
            for (const auto& e : model.kernel(s, a)) row.push_back(sum += e.weight);
            sampler.rows.push_back(std::move(row));
        }
    const auto target = target_mask(model, config.objective.targets);
    const auto hitting = target_mask(model, config.hitting_set.value_or(config.objective.targets));

    std::vector<RunResult> results(config.runs);
    auto work = [&](std::uint64_t first, std::uint64_t last) {
        auto local = policy.clone();
        for (std::uint64_t r = first; r < last; ++r) {
            std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                              static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(r >> 32)};
            std::mt19937_64 rng(seq);
            results[r] = run_episode(model, sampler, *local, config, target, hitting, rng);
        }
    };
    const unsigned threads = static_cast<unsigned>(std::clamp<std::uint64_t>(config.threads, 1, config.runs));
    if (threads == 1) {
        work(0, config.runs);
    } else {
        std::vector<std::jthread> pool;
        const std::uint64_t chunk = (config.runs + threads - 1) / threads;
        for (unsigned w = 0; w < threads; ++w)
            pool.emplace_back(work, std::min(config.runs, w * chunk), std::min(config.runs, (w + 1) * chunk));
    }

    SimStats stats;
    stats.runs = config.runs;
    stats.seed = config.seed;
    stats.cutoff = config.cutoff;
    stats.hitting_histogram.assign(config.cutoff + 2, 0);
    for (const auto& r : results) {
        if (r.success) ++stats.successes;
        ++stats.hitting_histogram[r.hit ? *r.hit : config.cutoff + 1];
    }
    return stats;
}

std::string histogram_csv(const SimStats& stats) {
    std::string out = "step,count\n";
    for (std::size_t t = 0; t + 1 < stats.hitting_histogram.size(); ++t)
        out += std::to_string(t) + "," + std::to_string(stats.hitting_histogram[t]) + "\n";
    out += "never," + std::to_string(stats.hitting_histogram.back()) + "\n";
    return out;
}

}  // namespace revpomdp
