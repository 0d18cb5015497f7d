#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "revpomdp/errors.hpp"
#include "revpomdp/modelio.hpp"
#include "revpomdp/oracle.hpp"
#include "revpomdp/qualitative.hpp"
#include "revpomdp/quantitative.hpp"

using namespace revpomdp;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* schema = "revpomdp.run/1";

enum class ObjectiveKind { Parity, Reach, BeliefReach };

struct RunConfig {
    std::string command;
    std::string model_path;
    std::string objective = "parity";
    std::string epsilon = "0.05";
    std::optional<std::uint64_t> horizon;
    std::optional<std::int64_t> grid_k;
    std::uint64_t seed = 0;
    std::uint64_t runs = 1000;
    bool json = false;
    std::string emit_dot;
    std::uint64_t max_grid = EngineLimits{}.max_grid_points;
    std::uint64_t max_horizon = EngineLimits{}.max_horizon;
    unsigned threads = 1;
};

ObjectiveKind objective_kind(const std::string& name) {
    if (name == "parity") return ObjectiveKind::Parity;
    if (name == "reach") return ObjectiveKind::Reach;
    if (name == "belief-reach") return ObjectiveKind::BeliefReach;
    throw UsageError("unknown objective \"" + name + "\" (expected parity, reach or belief-reach)");
}

Rational epsilon_of(const RunConfig& config) {
    const auto eps = parse_rational(config.epsilon);
    if (!eps || !(*eps > 0) || !(*eps < 1)) throw UsageError("--epsilon must be a number in (0, 1), got " + config.epsilon);
    return *eps;
}

unsigned thread_cap() {
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("REVPOMDP_THREADS")) {
        try {
            const long cap = std::stol(env);
            if (cap < 1) throw std::invalid_argument("cap");
            threads = std::min<unsigned>(threads, static_cast<unsigned>(cap));
        } catch (const std::exception&) {
            throw UsageError(std::string("REVPOMDP_THREADS must be a positive integer, got \"") + env + "\"");
        }
    }
    return threads;
}

std::string fixed6(double x) {
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.6f", x);
    return buffer;
}

std::vector<std::string> state_names(const Pomdp& model, const std::vector<StateId>& states) {
    std::vector<std::string> out;
    for (StateId s : states) out.push_back(model.state_name(s));
    return out;
}

std::string set_text(const std::vector<std::string>& names) {
    std::string out = "{";
    for (std::size_t i = 0; i < names.size(); ++i) out += (i ? ", " : "") + names[i];
    return out + "}";
}

std::string yes_no(bool b) { return b ? "yes" : "no"; }

json header(const RunConfig& config, const Pomdp& model) {
    json j;
    j["schema"] = schema;
    j["command"] = config.command;
    j["model"] = {{"path", config.model_path},
                  {"states", model.num_states()},
                  {"actions", model.num_actions()},
                  {"signals", model.num_signals()}};
    return j;
}

void emit(const RunConfig& config, const json& record, const std::string& human) {
    if (config.json)
        std::cout << record.dump(2) << "\n";
    else
        std::cout << human;
}

std::string violation_text(const Pomdp& model, const RevealingViolation& v) {
    const std::string where = "(" + model.state_name(v.state) + "," + model.action_name(v.action) + ")";
    if (v.kind == RevealingViolation::Kind::Misleading)
        return where + " emits signal " + model.signal_name(*v.signal) + " on a transition to " +
               model.state_name(v.successor);
    return "successor " + model.state_name(v.successor) + " of " + where + " is never announced";
}

/// Priorities used for the support-MDP picture: the model's own for parity,
/// otherwise 0 on targets and 1 elsewhere.
PriorityFn dot_priorities(const Pomdp& model, ObjectiveKind kind) {
    if (kind == ObjectiveKind::Parity) return model.require_priorities();
    std::vector<unsigned> values(model.num_states(), 1);
    for (StateId s : model.require_targets()) values[s] = 0;
    return PriorityFn(values);
}

void write_dot(const RunConfig& config, const Pomdp& model, ObjectiveKind kind) {
    if (config.emit_dot.empty()) return;
    const auto analysis = parity_analysis(model, dot_priorities(model, kind));
    std::ofstream out(config.emit_dot);
    if (!out) throw UsageError("cannot write " + config.emit_dot);
    out << support_mdp_dot(model, *analysis);
}

int run_check(const RunConfig& config, const Pomdp& model) {
    const RevealingReport report = check_revealing(model);
    json j = header(config, model);
    std::ostringstream h;
    h << "model: " << config.model_path << " (" << model.num_states() << " states, " << model.num_actions()
      << " actions, " << model.num_signals() << " signals)\n";
    h << "valid: yes\n";
    h << "revealing: " << (report.revealing ? "true" : "false") << "\n";
    j["valid"] = true;
    j["revealing"] = report.revealing;
    j["claims_revealing"] = model.claims_revealing();
    json violations = json::array();
    for (const auto& v : report.violations) violations.push_back(violation_text(model, v));
    j["violations"] = violations;
    if (!report.revealing) {
        h << "violations: " << report.violations.size() << "\n";
        for (const auto& v : report.violations) h << "  " << violation_text(model, v) << "\n";
    }
    const Rational d = delta_min(model).value;
    j["delta_min"] = to_string(d);
    h << "delta_min: " << to_string(d) << "\n";
    if (report.revealing) {
        const StoppingParams p = stopping_parameters(model);
        j["stopping"] = {{"n", p.n}, {"q", to_string(p.q)}};
        h << "stopping: n=" << p.n << " q=" << to_string(p.q) << "\n";
    } else {
        j["stopping"] = nullptr;
    }
    emit(config, j, h.str());
    return 0;
}

int run_qual(const RunConfig& config, const Pomdp& model) {
    const ObjectiveKind kind = objective_kind(config.objective);
    require_revealing(model);
    json j = header(config, model);
    j["objective"] = config.objective;
    std::ostringstream h;
    h << "objective: " << config.objective << "\n";
    if (kind == ObjectiveKind::Parity) {
        const PriorityFn& priorities = model.require_priorities();
        const bool almost = almost_sure_winning(model, priorities);
        const LimitSureVerdict limit = limit_sure_winning(model, priorities);
        const auto X = state_names(model, almost_sure_parity_states(model, priorities));
        j["almost_sure"] = almost;
        j["limit_sure"] = limit.winning;
        j["limit_sure_via_coincidence"] = limit.via_coincidence;
        j["winning_states"] = X;
        h << "almost-sure: " << yes_no(almost) << "\n";
        h << "limit-sure: " << yes_no(limit.winning) << " (coincides with almost-sure on revealing models)\n";
        h << "X = " << set_text(X) << "\n";
    } else {
        const std::vector<StateId>& targets = model.require_targets();
        bool almost;
        if (kind == ObjectiveKind::BeliefReach) {
            almost = almost_sure_belief_reach(model, targets);
        } else {
            const ProbeTransform t = reach_to_belief_reach(model, targets);
            almost = almost_sure_belief_reach(t.model, {t.top});
        }
        const auto terminal = state_names(model, terminal_states(model, targets).states);
        j["almost_sure"] = almost;
        j["limit_sure"] = almost;
        j["targets"] = state_names(model, targets);
        j["terminal_states"] = terminal;
        h << "almost-sure: " << yes_no(almost) << "\n";
        h << "limit-sure: " << yes_no(almost) << "\n";
        h << "targets = " << set_text(state_names(model, targets)) << "\n";
        h << "terminal = " << set_text(terminal) << "\n";
    }
    write_dot(config, model, kind);
    emit(config, j, h.str());
    return 0;
}

ValueOptions value_options(const RunConfig& config, bool record_tables, bool horizon_override) {
    ValueOptions o;
    o.limits.max_grid_points = config.max_grid;
    o.limits.max_horizon = config.max_horizon;
    if (horizon_override) o.horizon_override = config.horizon;
    o.k_override = config.grid_k;
    o.record_tables = record_tables;
    o.threads = config.threads;
    return o;
}

struct Pipeline {
    ValueReport report;
    /// Model the engine ran on (the probe transform for reach).
    std::optional<Pomdp> transformed;
    std::vector<StateId> targets;
    std::shared_ptr<const ParityAnalysis> witness;
};

Pipeline run_pipeline(const RunConfig& config, const Pomdp& model, ObjectiveKind kind, const ValueOptions& options) {
    const Rational eps = epsilon_of(config);
    const ExactBelief query = initial_belief(model);
    Pipeline p;
    switch (kind) {
        case ObjectiveKind::Parity:
            p.witness = parity_analysis(model, model.require_priorities());
            p.report = parity_value(model, model.require_priorities(), eps, query, options);
            p.targets = p.report.targets;
            break;
        case ObjectiveKind::BeliefReach:
            p.report = belief_reach_value(model, model.require_targets(), eps, query, options);
            p.targets = p.report.targets;
            break;
        case ObjectiveKind::Reach: {
            require_revealing(model);
            ProbeTransform t = reach_to_belief_reach(model, model.require_targets());
            std::vector<Rational> extended = query.probs();
            extended.resize(t.model.num_states(), Rational(0));
            p.report = belief_reach_value(t.model, {t.top}, eps, ExactBelief(std::move(extended)), options);
            p.targets = {t.top};
            p.transformed = std::move(t.model);
            break;
        }
    }
    return p;
}

json plan_json(const ValueReport& r) {
    return {{"theoretical_horizon", r.plan.theoretical_horizon},
            {"blocks", r.plan.blocks},
            {"exactly_verified", r.plan.exactly_verified},
            {"effective_horizon", r.plan.effective_horizon},
            {"early_stop", r.plan.early_stop_enabled},
            {"tolerance", r.plan.tolerance},
            {"stop_reason", r.plan.stop_reason()}};
}

int run_value(const RunConfig& config, const Pomdp& model) {
    const ObjectiveKind kind = objective_kind(config.objective);
    const Pipeline p = run_pipeline(config, model, kind, value_options(config, false, true));
    const ValueReport& r = p.report;
    const Pomdp& engine_model = p.transformed ? *p.transformed : model;
    write_dot(config, model, kind);

    json j = header(config, model);
    j["objective"] = config.objective;
    j["epsilon"] = to_string(epsilon_of(config));
    j["query"] = "initial";
    j["targets"] = state_names(engine_model, p.targets);
    j["stopping"] = {{"n", r.stopping.n}, {"q", to_string(r.stopping.q)}};
    j["plan"] = plan_json(r);
    j["k"] = r.k;
    j["grid_cardinality"] = r.grid_cardinality.str();
    j["materialized"] = r.materialized;
    j["value"] = r.value;

    std::ostringstream h;
    h << "objective: " << config.objective << "\n";
    h << "targets: " << set_text(state_names(engine_model, p.targets)) << "\n";
    h << "epsilon: " << config.epsilon << "\n";
    h << "stopping: n=" << r.stopping.n << " q=" << to_string(r.stopping.q) << "\n";
    h << "theoretical horizon T: " << r.plan.theoretical_horizon
      << (r.plan.exactly_verified ? "" : " (float estimate)") << "\n";
    h << "effective horizon: " << r.plan.effective_horizon << " (" << r.plan.stop_reason() << ")\n";
    h << "grid: k=" << r.k << " |G_k|=" << r.grid_cardinality.str() << " materialized=" << r.materialized << "\n";
    h << "value: " << fixed6(r.value) << "\n";
    h << "time: " << fixed6(r.seconds) << " s\n";
    emit(config, j, h.str());
    return 0;
}

int run_simulate(const RunConfig& config, const Pomdp& model) {
    const ObjectiveKind kind = objective_kind(config.objective);
    if (config.runs < 1) throw UsageError("--runs must be at least 1");
    const Pipeline p = run_pipeline(config, model, kind, value_options(config, true, false));
    const Pomdp& engine_model = p.transformed ? *p.transformed : model;
    const auto policy = extract_policy(engine_model, p.report.engine, p.witness);

    SimulationConfig sim;
    sim.objective.targets = p.targets;
    if (kind == ObjectiveKind::Parity) {
        sim.objective.predicate = Predicate::ParityProxy;
        sim.objective.priorities = model.require_priorities();
        sim.hitting_set = p.targets;
    }
    sim.cutoff = config.horizon.value_or(200);
    sim.runs = config.runs;
    sim.seed = config.seed;
    sim.threads = config.threads;
    const SimStats s = simulate(engine_model, *policy, sim);

    json j = header(config, model);
    j["objective"] = config.objective;
    j["epsilon"] = to_string(epsilon_of(config));
    j["policy"] = std::string(to_string(policy->kind()));
    j["predicate"] = kind == ObjectiveKind::Parity ? "parity-proxy" : "belief-reach";
    j["value"] = p.report.value;
    j["plan"] = plan_json(p.report);
    j["runs"] = s.runs;
    j["successes"] = s.successes;
    j["success_rate"] = s.success_rate();
    j["standard_error"] = s.standard_error();
    j["seed"] = s.seed;
    j["cutoff"] = s.cutoff;
    j["hitting_histogram"] = s.hitting_histogram;

    std::ostringstream h;
    h << "objective: " << config.objective << "\n";
    h << "policy: " << to_string(policy->kind()) << "\n";
    h << "value: " << fixed6(p.report.value) << "\n";
    h << "runs: " << s.runs << " seed: " << s.seed << " cutoff: " << s.cutoff << "\n";
    h << "successes: " << s.successes << "\n";
    h << "success rate: " << fixed6(s.success_rate()) << " (standard error " << fixed6(s.standard_error()) << ")\n";
    h << "hit within cutoff: " << s.hits_within(s.cutoff) << "\n";
    emit(config, j, h.str());
    return 0;
}

int dispatch(const RunConfig& config) {
    const Pomdp model = load_model(config.model_path);
    if (config.command == "check") return run_check(config, model);
    if (config.command == "qual") return run_qual(config, model);
    if (config.command == "value") return run_value(config, model);
    return run_simulate(config, model);
}

int report_error(const std::string& message, int status) {
    std::cerr << "error: " << message << "\n";
    return status;
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig config;
    CLI::App app{"Analysis of revealing POMDPs"};
    app.require_subcommand(1);
    for (const char* name : {"check", "qual", "value", "simulate"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--model", config.model_path, "model document (JSON)")->required();
        sub->add_option("--objective", config.objective, "parity | reach | belief-reach");
        sub->add_option("--epsilon", config.epsilon, "accuracy in (0,1)");
        sub->add_option("--horizon", config.horizon, "horizon override (value) or cutoff (simulate)");
        sub->add_option("--grid-k", config.grid_k, "grid resolution override")->check(CLI::PositiveNumber);
        sub->add_option("--seed", config.seed, "simulation seed");
        sub->add_option("--runs", config.runs, "simulation runs");
        sub->add_flag("--json", config.json, "structured output");
        sub->add_option("--emit-dot", config.emit_dot, "write the support MDP as Graphviz");
        sub->add_option("--max-grid", config.max_grid, "ceiling on materialized grid points");
        sub->add_option("--max-horizon", config.max_horizon, "ceiling on value-iteration sweeps");
        sub->callback([&config, sub] { config.command = sub->get_name(); });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        config.threads = thread_cap();
        return dispatch(config);
    } catch (const ParseError& e) {
        return report_error(e.what(), 2);
    } catch (const ValidationError& e) {
        std::string message = e.what();
        for (const auto& v : e.violations()) message += "\n  " + v.message;
        return report_error(message, 2);
    } catch (const UsageError& e) {
        return report_error(e.what(), 2);
    } catch (const std::invalid_argument& e) {
        return report_error(e.what(), 2);
    } catch (const std::exception& e) {
        return report_error(e.what(), 1);
    }
}
