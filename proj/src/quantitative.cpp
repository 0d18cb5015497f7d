#include "revpomdp/quantitative.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "revpomdp/errors.hpp"

namespace revpomdp {

StoppingParams stopping_parameters(const Pomdp& model) {
    require_revealing(model);
    const Rational d = delta_min(model).value;
    const auto states = static_cast<unsigned>(model.num_states());
    const Rational ratio = d / Rational(static_cast<long>(model.num_actions()));
    const BigInt num = boost::multiprecision::pow(numerator(ratio), states);
    const BigInt den = boost::multiprecision::pow(denominator(ratio), states);
    StoppingParams params;
    params.n = static_cast<std::int64_t>(model.num_states()) + 2;
    params.q = d * d * Rational(num, den);
    return params;
}

namespace {

/// (1 − q)^m <= c, exactly, with q = a/b and c = e/f: (b − a)^m · f <= e · b^m.
bool power_below(const BigInt& a, const BigInt& b, const BigInt& e, const BigInt& f, std::uint64_t m) {
    const auto exponent = static_cast<unsigned>(m);
    return boost::multiprecision::pow(BigInt(b - a), exponent) * f <= e * boost::multiprecision::pow(b, exponent);
}

}  // namespace

HorizonPlan horizon_for_accuracy(const StoppingParams& params, const Rational& epsilon) {
    if (!(epsilon > 0) || epsilon > 1) throw std::invalid_argument("epsilon must lie in (0, 1], got " + to_string(epsilon));
    if (params.n < 1) throw std::invalid_argument("stopping parameter n must be positive");
    if (!(params.q > 0) || params.q > 1) throw std::invalid_argument("stopping parameter q must lie in (0, 1]");

    HorizonPlan plan;
    plan.epsilon = epsilon;
    const Rational half = epsilon / 2;
    const BigInt a = numerator(params.q), b = denominator(params.q);
    const BigInt e = numerator(half), f = denominator(half);

    std::uint64_t m = 1;
    if (params.q < 1) {
        // log(1 − q) from logs of the parts, so tiny q does not underflow.
        const long double log_q = std::log(static_cast<long double>(to_double(params.q)));
        long double log1mq;
        if (std::isfinite(log_q) && params.q > Rational(1, 1000000)) {
            log1mq = std::log1p(-static_cast<long double>(to_double(params.q)));
        } else {
            const double bits_a = static_cast<double>(msb(a)), bits_b = static_cast<double>(msb(b));
            const long double q_log = std::isfinite(log_q) ? log_q : (bits_a - bits_b) * std::log(2.0L);
            log1mq = -std::exp(q_log);
        }
        const long double estimate = std::ceil(std::log(static_cast<long double>(to_double(half))) / log1mq);
        if (!(estimate < 9.0e18L / static_cast<long double>(params.n)))
            throw ResourceLimitError("theoretical horizon exceeds 64-bit range (q = " + to_string(params.q) + ")");
        m = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(estimate));

        // Exact verification when the powers stay within a few million bits.
        const double bits = static_cast<double>(m + 1) * static_cast<double>(msb(b) + 1);
        if (bits < 2.0e7) {
            while (m > 1 && power_below(a, b, e, f, m - 1)) --m;
            while (!power_below(a, b, e, f, m)) ++m;
        } else {
            plan.exactly_verified = false;
        }
    }
    plan.blocks = m;
    plan.theoretical_horizon = static_cast<std::uint64_t>(params.n) * m;
    plan.effective_horizon = plan.theoretical_horizon;
    return plan;
}

BigInt grid_resolution(std::uint64_t horizon, std::size_t num_states, const Rational& epsilon) {
    if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
    const Rational k = Rational(BigInt(horizon) + 1) * Rational(static_cast<long>(num_states)) / epsilon;
    return ceil(k);
}

std::size_t GridPointHash::operator()(const GridPoint& p) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto c : p) {
        h ^= static_cast<std::uint64_t>(c) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        h *= 0x100000001b3ULL;
    }
    return static_cast<std::size_t>(h);
}

namespace {

constexpr std::uint64_t max_weight_denominator = std::uint64_t{1} << 21;

struct Neumaier {
    double sum = 0.0, compensation = 0.0;
    void add(double x) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            compensation += (sum - t) + x;
        else
            compensation += (x - t) + sum;
        sum = t;
    }
    double value() const { return sum + compensation; }
};

}  // namespace

GridValueIteration::GridValueIteration(const Pomdp& model, std::vector<StateId> targets, std::int64_t k,
                                       Options options)
    : model_(model), is_target_state_(model.num_states(), false), grid_(k, model.num_states()),
      options_(options) {
    for (StateId s : targets) is_target_state_.at(s) = true;
    if (model_.num_actions() > std::numeric_limits<std::uint16_t>::max())
        throw ResourceLimitError("too many actions for the grid engine");

    BigInt common = 1;
    for (StateId s = 0; s < model_.num_states(); ++s)
        for (ActionId a = 0; a < model_.num_actions(); ++a)
            for (const auto& e : model_.kernel(s, a)) {
                common = boost::multiprecision::lcm(common, denominator(e.prob));
                if (common > max_weight_denominator) break;
            }
    integer_weights_ = common <= max_weight_denominator && k < (std::int64_t{1} << 40);
    if (integer_weights_) {
        denominator_ = common.convert_to<std::uint64_t>();
        int_weights_.resize(model_.num_states() * model_.num_actions());
        for (StateId s = 0; s < model_.num_states(); ++s)
            for (ActionId a = 0; a < model_.num_actions(); ++a)
                for (const auto& e : model_.kernel(s, a))
                    int_weights_[s * model_.num_actions() + a].push_back(
                        (e.prob * Rational(common)).convert_to<BigInt>().convert_to<std::uint64_t>());
    }
}

std::optional<std::size_t> GridValueIteration::find(const GridPoint& p) const {
    auto it = index_.find(p);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t GridValueIteration::intern(const GridPoint& p, std::uint64_t depth) {
    if (auto found = index_.find(p); found != index_.end()) return found->second;
    if (points_.size() >= options_.limits.max_grid_points)
        throw ResourceLimitError("grid closure exceeds " + std::to_string(options_.limits.max_grid_points) +
                                 " points (k = " + std::to_string(grid_.k()) + ", |G_k| = " +
                                 grid_.cardinality().str() + ")");
    const std::size_t index = points_.size();
    index_.emplace(p, index);
    points_.push_back(p);
    depth_.push_back(depth);
    std::size_t nonzero = 0;
    StateId last = 0;
    for (StateId s = 0; s < p.size(); ++s)
        if (p[s] > 0) {
            ++nonzero;
            last = s;
        }
    target_.push_back(nonzero == 1 && is_target_state_[last] ? 1 : 0);
    return index;
}

void GridValueIteration::expand(std::size_t i) {
    const GridPoint point = points_[i];
    const std::uint64_t depth = depth_[i];
    const std::size_t states = model_.num_states(), actions = model_.num_actions(), signals = model_.num_signals();
    const std::int64_t k = grid_.k();

    for (ActionId a = 0; a < actions; ++a) {
        if (integer_weights_) {
            std::vector<std::vector<std::uint64_t>> joint(signals);
            std::vector<std::uint64_t> mass(signals, 0);
            for (StateId s = 0; s < states; ++s) {
                if (point[s] == 0) continue;
                const auto entries = model_.kernel(s, a);
                const auto& weights = int_weights_[s * actions + a];
                for (std::size_t j = 0; j < entries.size(); ++j) {
                    auto& row = joint[entries[j].signal];
                    if (row.empty()) row.assign(states, 0);
                    const std::uint64_t w = static_cast<std::uint64_t>(point[s]) * weights[j];
                    row[entries[j].next] += w;
                    mass[entries[j].signal] += w;
                }
            }
            const double total = static_cast<double>(k) * static_cast<double>(denominator_);
            for (SignalId z = 0; z < signals; ++z) {
                if (mass[z] == 0) continue;
                const std::size_t next = intern(project_weights(joint[z], k), depth + 1);
                succ_.push_back(static_cast<std::uint32_t>(next));
                prob_.push_back(static_cast<double>(mass[z]) / total);
            }
        } else {
            const Belief belief = grid_.belief<double>(point);
            for (const auto& outcome : one_step_outcomes(model_, belief, a)) {
                const std::size_t next = intern(project(outcome.posterior, grid_), depth + 1);
                succ_.push_back(static_cast<std::uint32_t>(next));
                prob_.push_back(outcome.prob);
            }
        }
        row_end_.push_back(succ_.size());
    }
}

void GridValueIteration::process_pending() {
    while (row_begin_.size() < points_.size()) {
        const std::size_t i = row_begin_.size();
        row_begin_.push_back(succ_.size());
        const bool frontier = options_.depth_limit && depth_[i] >= *options_.depth_limit;
        if (target_[i] || frontier) {
            expanded_.push_back(0);
            for (ActionId a = 0; a < model_.num_actions(); ++a) row_end_.push_back(succ_.size());
        } else {
            expanded_.push_back(1);
            expand(i);
        }
    }
}

std::size_t GridValueIteration::materialize(const GridPoint& root) {
    if (!grid_.contains(root)) throw std::invalid_argument("materialize: point is not on the grid");
    if (sweeps_ > 0 && !options_.record_tables)
        throw std::logic_error("grid closure can only grow after sweeps when tables are recorded");
    const std::size_t first = points_.size();
    const std::size_t index = intern(root, 0);
    process_pending();
    if (points_.size() > first) fill_recorded(first);
    return index;
}

double GridValueIteration::backup(std::size_t i, const std::vector<double>& previous, ActionId* best) const {
    if (target_[i]) return 1.0;
    if (!expanded_[i]) return 0.0;
    const std::size_t actions = model_.num_actions();
    double best_value = -1.0;
    std::uint64_t begin = row_begin_[i];
    for (ActionId a = 0; a < actions; ++a) {
        const std::uint64_t end = row_end_[i * actions + a];
        Neumaier sum;
        for (std::uint64_t r = begin; r < end; ++r) sum.add(prob_[r] * previous[succ_[r]]);
        const double v = std::min(1.0, sum.value());
        if (v > best_value) {
            best_value = v;
            if (best) *best = a;
        }
        begin = end;
    }
    return best_value;
}

void GridValueIteration::fill_recorded(std::size_t first) {
    const std::size_t n = points_.size();
    if (tables_.empty()) {
        current_.resize(n);
        for (std::size_t i = first; i < n; ++i) current_[i] = target_[i] ? 1.0 : 0.0;
        return;
    }
    tables_[0].resize(n);
    for (std::size_t i = first; i < n; ++i) tables_[0][i] = target_[i] ? 1.0 : 0.0;
    for (std::uint64_t t = 1; t < tables_.size(); ++t) {
        tables_[t].resize(n);
        argmax_[t].resize(n);
        for (std::size_t i = first; i < n; ++i) {
            ActionId best = 0;
            tables_[t][i] = backup(i, tables_[t - 1], &best);
            argmax_[t][i] = static_cast<std::uint16_t>(best);
        }
    }
    current_ = tables_.back();
}

GridValueIteration::SweepOutcome GridValueIteration::run(std::uint64_t horizon, std::optional<ConvergenceRule> rule) {
    const std::size_t n = points_.size();
    if (sweeps_ == 0) {
        current_.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) current_[i] = target_[i] ? 1.0 : 0.0;
        if (options_.record_tables) {
            tables_.assign(1, current_);
            argmax_.assign(1, {});
        }
    }
    SweepOutcome outcome;
    std::vector<double> next(n);
    std::deque<double> increments;
    double window_sum = 0.0;
    const unsigned threads = n >= 100000 ? std::max(1u, options_.threads) : 1u;

    while (sweeps_ < horizon) {
        std::vector<std::uint16_t> chosen(options_.record_tables ? n : 0);
        std::vector<double> worker_increase(threads, 0.0);
        auto sweep_range = [&](unsigned worker, std::size_t lo, std::size_t hi) {
            double increase = 0.0;
            for (std::size_t i = lo; i < hi; ++i) {
                ActionId best = 0;
                next[i] = backup(i, current_, options_.record_tables ? &best : nullptr);
                if (options_.record_tables) chosen[i] = static_cast<std::uint16_t>(best);
                increase = std::max(increase, next[i] - current_[i]);
            }
            worker_increase[worker] = increase;
        };
        if (threads == 1) {
            sweep_range(0, 0, n);
        } else {
            std::vector<std::jthread> pool;
            const std::size_t chunk = (n + threads - 1) / threads;
            for (unsigned w = 0; w < threads; ++w)
                pool.emplace_back(sweep_range, w, std::min(n, w * chunk), std::min(n, (w + 1) * chunk));
        }
        current_.swap(next);
        ++sweeps_;
        ++outcome.sweeps;
        if (options_.record_tables) {
            tables_.push_back(current_);
            argmax_.push_back(std::move(chosen));
        }
        if (rule) {
            const double increase = *std::max_element(worker_increase.begin(), worker_increase.end());
            increments.push_back(increase);
            window_sum += increase;
            if (increments.size() > rule->window) {
                window_sum -= increments.front();
                increments.pop_front();
            }
            if (increments.size() == rule->window) {
                // Recompute to avoid drift from the running sum.
                window_sum = std::accumulate(increments.begin(), increments.end(), 0.0);
                if (window_sum < rule->tolerance) {
                    outcome.converged = true;
                    break;
                }
            }
        }
    }
    return outcome;
}

ActionId GridValueIteration::argmax(std::size_t i, std::uint64_t t) const {
    if (!options_.record_tables) throw std::logic_error("argmax requires recorded tables");
    if (t == 0 || t >= argmax_.size()) throw std::out_of_range("argmax: no sweep " + std::to_string(t));
    return argmax_[t][i];
}

double GridValueIteration::recorded_value(std::size_t i, std::uint64_t t) const {
    if (!options_.record_tables) throw std::logic_error("recorded_value requires recorded tables");
    return tables_.at(t).at(i);
}

std::uint64_t GridValueIteration::settle_sweep(std::size_t i) const {
    if (!options_.record_tables) throw std::logic_error("settle_sweep requires recorded tables");
    const double final_value = tables_.back()[i];
    for (std::uint64_t t = 0; t < tables_.size(); ++t)
        if (tables_[t][i] >= final_value - 1e-12) return t;
    return tables_.size() - 1;
}

namespace {

void require_epsilon(const Rational& epsilon) {
    if (!(epsilon > 0) || !(epsilon < 1))
        throw std::invalid_argument("epsilon must lie in (0, 1), got " + to_string(epsilon));
}

std::int64_t resolution_or_throw(const BigInt& k, const EngineLimits& limits) {
    (void)limits;
    if (k >= (BigInt(1) << 62))
        throw ResourceLimitError("grid resolution k = " + k.str() + " exceeds 2^62");
    return k.convert_to<std::int64_t>();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

GridAnswer tstep_value(const Pomdp& model, const std::vector<StateId>& targets, std::uint64_t horizon,
                       const Rational& epsilon, const ExactBelief& query, const EngineLimits& limits) {
    require_revealing(model);
    require_epsilon(epsilon);
    if (query.dimension() != model.num_states()) throw std::invalid_argument("query belief has wrong dimension");
    if (horizon > limits.max_horizon)
        throw ResourceLimitError("horizon T = " + std::to_string(horizon) + " exceeds the limit " +
                                 std::to_string(limits.max_horizon));
    const BigInt k_big = grid_resolution(horizon, model.num_states(), epsilon);
    const std::int64_t k = resolution_or_throw(k_big, limits);

    GridValueIteration::Options options;
    options.limits = limits;
    options.depth_limit = horizon;
    GridValueIteration engine(model, targets, k, options);
    GridAnswer answer;
    answer.query_point = project(query, engine.grid());
    const std::size_t root = engine.materialize(answer.query_point);
    engine.run(horizon);
    answer.value = engine.value(root);
    answer.k = k;
    answer.grid_cardinality = engine.grid().cardinality();
    answer.materialized = engine.size();
    return answer;
}

ValueReport belief_reach_value(const Pomdp& model, const std::vector<StateId>& targets, const Rational& epsilon,
                               const ExactBelief& query, const ValueOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    require_epsilon(epsilon);
    if (query.dimension() != model.num_states()) throw std::invalid_argument("query belief has wrong dimension");
    ValueReport report;
    report.stopping = stopping_parameters(model);
    report.plan = horizon_for_accuracy(report.stopping, epsilon);
    report.targets = targets;
    std::sort(report.targets.begin(), report.targets.end());

    const std::uint64_t horizon = options.horizon_override.value_or(report.plan.theoretical_horizon);
    report.plan.effective_horizon = horizon;
    report.plan.early_stop_enabled = options.early_stop;
    if (!options.early_stop && horizon > options.limits.max_horizon)
        throw ResourceLimitError("theoretical horizon T = " + std::to_string(horizon) + " exceeds the limit " +
                                 std::to_string(options.limits.max_horizon) + " sweeps");

    const Rational inner = epsilon / 2;
    const BigInt k_big = options.k_override ? BigInt(*options.k_override)
                                            : grid_resolution(horizon, model.num_states(), inner);
    report.k = resolution_or_throw(k_big, options.limits);

    GridValueIteration::Options engine_options;
    engine_options.limits = options.limits;
    engine_options.record_tables = options.record_tables;
    engine_options.threads = options.threads;
    auto engine = std::make_shared<GridValueIteration>(model, report.targets, report.k, engine_options);
    report.grid_cardinality = engine->grid().cardinality();
    const std::size_t root = engine->materialize(project(query, engine->grid()));

    std::optional<ConvergenceRule> rule;
    std::uint64_t budget = horizon;
    if (options.early_stop) {
        report.plan.tolerance = to_double(epsilon) / (4.0 * static_cast<double>(std::max<std::uint64_t>(1, horizon)));
        rule = ConvergenceRule{static_cast<std::uint64_t>(report.stopping.n), report.plan.tolerance};
        budget = std::min(horizon, options.limits.max_horizon);
    }
    const auto outcome = engine->run(budget, rule);
    if (options.early_stop && !outcome.converged && budget < horizon)
        throw ResourceLimitError("no convergence within " + std::to_string(budget) +
                                 " sweeps; theoretical horizon T = " + std::to_string(horizon));
    report.plan.stopped_early = outcome.converged && outcome.sweeps < horizon;
    report.plan.effective_horizon = outcome.sweeps;
    report.value = engine->value(root);
    report.materialized = engine->size();
    if (options.record_tables) report.engine = engine;
    report.seconds = seconds_since(start);
    return report;
}

ValueReport parity_value(const Pomdp& model, const PriorityFn& priorities, const Rational& epsilon,
                         const ExactBelief& query, const ValueOptions& options) {
    require_revealing(model);
    return belief_reach_value(model, almost_sure_parity_states(model, priorities), epsilon, query, options);
}

namespace {

std::string fresh_name(const std::vector<std::string>& taken, std::string base) {
    while (std::find(taken.begin(), taken.end(), base) != taken.end()) base += "'";
    return base;
}

}  // namespace

ProbeTransform reach_to_belief_reach(const Pomdp& model, const std::vector<StateId>& targets) {
    RawPomdp raw = model.to_raw();
    std::vector<bool> is_target(model.num_states(), false);
    for (StateId s : targets) is_target.at(s) = true;

    std::vector<std::string> names = raw.states;
    names.insert(names.end(), raw.signals.begin(), raw.signals.end());
    const std::string top = fresh_name(names, "⊤");
    names.push_back(top);
    const std::string bottom = fresh_name(names, "⊥");
    const std::string probe = fresh_name(raw.actions, "probe");

    std::vector<RawTransition> transitions;
    for (const auto& t : raw.transitions)
        if (!is_target[*model.find_state(t.from)]) transitions.push_back(t);
    for (StateId s = 0; s < model.num_states(); ++s) {
        if (!is_target[s]) continue;
        const std::string& name = model.state_name(s);
        if (std::find(raw.signals.begin(), raw.signals.end(), name) == raw.signals.end()) raw.signals.push_back(name);
        for (const auto& a : raw.actions) transitions.push_back({name, a, name, name, Rational(1)});
    }
    for (StateId s = 0; s < model.num_states(); ++s) {
        const std::string& sink = is_target[s] ? top : bottom;
        transitions.push_back({model.state_name(s), probe, sink, sink, Rational(1)});
    }
    raw.actions.push_back(probe);
    raw.states.push_back(top);
    raw.states.push_back(bottom);
    raw.signals.push_back(top);
    raw.signals.push_back(bottom);
    for (const auto& sink : {top, bottom})
        for (const auto& a : raw.actions) transitions.push_back({sink, a, sink, sink, Rational(1)});
    raw.transitions = std::move(transitions);
    raw.priorities.reset();
    raw.targets = std::vector<std::string>{top};

    ProbeTransform out{validate(raw), 0, 0, 0};
    out.top = *out.model.find_state(top);
    out.bottom = *out.model.find_state(bottom);
    out.probe = *out.model.find_action(probe);
    return out;
}

ValueReport reach_value(const Pomdp& model, const std::vector<StateId>& targets, const Rational& epsilon,
                        const ExactBelief& query, const ValueOptions& options) {
    require_revealing(model);
    const ProbeTransform transformed = reach_to_belief_reach(model, targets);
    std::vector<Rational> extended = query.probs();
    extended.resize(transformed.model.num_states(), Rational(0));
    return belief_reach_value(transformed.model, {transformed.top}, epsilon, ExactBelief(std::move(extended)),
                              options);
}

namespace {

std::optional<ActionId> witness_action(const ParityAnalysis& witness, std::uint64_t support, std::size_t actions,
                                       std::mt19937_64& rng) {
    const auto index = witness.support.find(support);
    if (index && witness.solution.strategy.defined(*index)) {
        const auto& choices = witness.solution.strategy.choices[*index];
        std::uniform_int_distribution<std::size_t> pick(0, choices.size() - 1);
        return choices[pick(rng)];
    }
    if (actions == 0) return std::nullopt;
    std::uniform_int_distribution<std::size_t> pick(0, actions - 1);
    return pick(rng);
}

class SupportWitnessPolicy final : public Policy {
public:
    SupportWitnessPolicy(Pomdp model, std::shared_ptr<const ParityAnalysis> witness)
        : model_(std::move(model)), witness_(std::move(witness)) {}

    PolicyKind kind() const override { return PolicyKind::SupportWitness; }
    void reset(const ExactBelief& initial) override { support_ = initial.support_mask(); }
    std::optional<ActionId> choose(std::mt19937_64& rng) override {
        return witness_action(*witness_, support_, model_.num_actions(), rng);
    }
    void observe(ActionId action, SignalId signal) override {
        support_ = support_update(model_, support_, action, signal);
    }
    std::unique_ptr<Policy> clone() const override { return std::make_unique<SupportWitnessPolicy>(*this); }

private:
    Pomdp model_;
    std::shared_ptr<const ParityAnalysis> witness_;
    std::uint64_t support_ = 0;
};

/// Shared engine plus the lock guarding closure growth.
struct SharedEngine {
    std::shared_ptr<GridValueIteration> engine;
    std::mutex mutex;
};

class GridGreedyPolicy final : public Policy {
public:
    GridGreedyPolicy(Pomdp model, std::shared_ptr<SharedEngine> shared, std::shared_ptr<const ParityAnalysis> witness)
        : model_(std::move(model)), shared_(std::move(shared)), witness_(std::move(witness)) {}

    PolicyKind kind() const override { return PolicyKind::GridGreedy; }

    void reset(const ExactBelief& initial) override {
        belief_ = to_float(initial);
        support_ = initial.support_mask();
        step_ = 0;
        switched_ = false;
    }

    std::optional<ActionId> choose(std::mt19937_64& rng) override {
        const auto& engine = *shared_->engine;
        if (!switched_ && (support_ & (support_ - 1)) == 0 &&
            engine.target_states()[static_cast<StateId>(std::countr_zero(support_))]) {
            if (!witness_) return std::nullopt;
            switched_ = true;
        }
        if (switched_) return witness_action(*witness_, support_, model_.num_actions(), rng);

        const GridPoint point = project(belief_, engine.grid());
        std::lock_guard lock(shared_->mutex);
        auto index = engine.find(point);
        if (!index) index = shared_->engine->materialize(point);
        const std::uint64_t horizon = engine.sweeps();
        if (horizon == 0) return ActionId{0};
        const std::uint64_t remaining = step_ < horizon ? horizon - step_ : horizon;
        const std::uint64_t sweep = std::max<std::uint64_t>(1, std::min(remaining, engine.settle_sweep(*index)));
        return engine.argmax(*index, sweep);
    }

    void observe(ActionId action, SignalId signal) override {
        support_ = support_update(model_, support_, action, signal);
        if (!switched_) belief_ = update(model_, belief_, action, signal);
        ++step_;
    }

    std::unique_ptr<Policy> clone() const override { return std::make_unique<GridGreedyPolicy>(*this); }

private:
    Pomdp model_;
    std::shared_ptr<SharedEngine> shared_;
    std::shared_ptr<const ParityAnalysis> witness_;
    Belief belief_;
    std::uint64_t support_ = 0;
    std::uint64_t step_ = 0;
    bool switched_ = false;
};

}  // namespace

std::unique_ptr<Policy> extract_policy(const Pomdp& model, std::shared_ptr<GridValueIteration> engine,
                                       std::shared_ptr<const ParityAnalysis> witness) {
    if (!engine || !engine->records_tables())
        throw std::invalid_argument("extract_policy needs an engine with recorded tables");
    if (model.num_states() > 64) throw ResourceLimitError("policy extraction supports at most 64 states");
    auto shared = std::make_shared<SharedEngine>();
    shared->engine = std::move(engine);
    return std::make_unique<GridGreedyPolicy>(model, std::move(shared), std::move(witness));
}

std::unique_ptr<Policy> support_witness_policy(const Pomdp& model, std::shared_ptr<const ParityAnalysis> witness) {
    if (!witness) throw std::invalid_argument("support_witness_policy needs a parity analysis");
    return std::make_unique<SupportWitnessPolicy>(model, std::move(witness));
}

}  // namespace revpomdp
