#include "revpomdp/policy.hpp"

namespace revpomdp {

std::string_view to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::GridGreedy: return "grid-greedy";
        case PolicyKind::SupportWitness: return "support-witness";
        case PolicyKind::UniformReliable: return "uniform-reliable";
        case PolicyKind::UniformRandom: return "uniform-random";
        case PolicyKind::Scripted: return "scripted";
    }
    return "unknown";
}

namespace {

class UniformRandomPolicy final : public Policy {
public:
    explicit UniformRandomPolicy(std::size_t actions) : actions_(actions) {}
    PolicyKind kind() const override { return PolicyKind::UniformRandom; }
    void reset(const ExactBelief&) override {}
    std::optional<ActionId> choose(std::mt19937_64& rng) override {
        std::uniform_int_distribution<std::size_t> pick(0, actions_ - 1);
        return pick(rng);
    }
    void observe(ActionId, SignalId) override {}
    std::unique_ptr<Policy> clone() const override { return std::make_unique<UniformRandomPolicy>(*this); }

private:
    std::size_t actions_;
};

class ScriptedPolicy final : public Policy {
public:
    explicit ScriptedPolicy(std::vector<ActionId> actions) : actions_(std::move(actions)) {}
    PolicyKind kind() const override { return PolicyKind::Scripted; }
    void reset(const ExactBelief&) override { position_ = 0; }
    std::optional<ActionId> choose(std::mt19937_64&) override {
        if (position_ >= actions_.size()) return std::nullopt;
        return actions_[position_];
    }
    void observe(ActionId, SignalId) override { ++position_; }
    std::unique_ptr<Policy> clone() const override { return std::make_unique<ScriptedPolicy>(*this); }

private:
    std::vector<ActionId> actions_;
    std::size_t position_ = 0;
};

}  // namespace

std::unique_ptr<Policy> uniform_random_policy(const Pomdp& model) {
    return std::make_unique<UniformRandomPolicy>(model.num_actions());
}

std::unique_ptr<Policy> scripted_policy(std::vector<ActionId> actions) {
    return std::make_unique<ScriptedPolicy>(std::move(actions));
}

}  // namespace revpomdp
