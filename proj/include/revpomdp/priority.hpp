#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace revpomdp {

/// Parity priorities, total on the state space; `max_priority` is d.
struct PriorityFn {
    std::vector<unsigned> values;
    unsigned max_priority = 0;

    PriorityFn() = default;
    explicit PriorityFn(std::vector<unsigned> v)
        : values(std::move(v)),
          max_priority(values.empty() ? 0u : *std::max_element(values.begin(), values.end())) {}

    unsigned operator()(std::size_t state) const { return values.at(state); }
    std::size_t size() const noexcept { return values.size(); }
    bool operator==(const PriorityFn&) const = default;
};

}  // namespace revpomdp
