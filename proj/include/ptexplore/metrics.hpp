#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ptexplore/exploration.hpp"

namespace ptexplore {

class MetricsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class OverlapDefinition {
    shared,      // fraction of the team map explored by >= 2 agents (lower is better)
    exclusive,   // fraction explored by exactly one agent (literal reading)
};

struct EpisodeMetrics {
    double er = 0.0;
    std::optional<std::size_t> cs85;
    std::optional<std::size_t> cs95;
    std::optional<double> mo85;
    std::optional<double> mo95;
    double rv = 0.0;
    std::size_t steps = 0;

    friend bool operator==(const EpisodeMetrics&, const EpisodeMetrics&) = default;
};

inline double overlap_fraction(std::size_t shared, std::size_t explored, OverlapDefinition def) {
    if (explored == 0) throw MetricsError("mutual overlap undefined: nothing explored");
    const double s = static_cast<double>(def == OverlapDefinition::shared ? shared : explored - shared);
    return s / static_cast<double>(explored);
}

inline double mutual_overlap(const ExplorationMask& mask, OverlapDefinition def = OverlapDefinition::shared) {
    return overlap_fraction(mask.shared_count(), mask.explored_count(), def);
}

/// Population standard deviation of per-agent cumulative rewards.
inline double reward_variance(std::span<const double> rewards) {
    if (rewards.empty()) throw MetricsError("reward_variance needs at least one agent");
    const double n = static_cast<double>(rewards.size());
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= n;
    double ss = 0.0;
    for (double r : rewards) ss += (r - mean) * (r - mean);
    return std::sqrt(ss / n);
}

/// Streams macro steps of one episode into ER/CS/MO/RV.
class MetricsTracker {
public:
    explicit MetricsTracker(std::size_t n_agents, OverlapDefinition def = OverlapDefinition::shared)
        : def_(def), cumulative_(n_agents, 0.0) {}

    void update(std::size_t tick, double coverage, std::size_t shared, std::size_t explored,
                std::span<const double> rewards) {
        if (tick != last_tick_ + 1) {
            throw MetricsError("out-of-order tick " + std::to_string(tick) + " after " + std::to_string(last_tick_));
        }
        if (rewards.size() != cumulative_.size()) throw MetricsError("reward vector size mismatch");
        last_tick_ = tick;
        m_.er = coverage;
        m_.steps = tick;
        for (std::size_t i = 0; i < rewards.size(); ++i) cumulative_[i] += rewards[i];
        if (!m_.cs85 && coverage >= 0.85) {
            m_.cs85 = tick;
            m_.mo85 = overlap_fraction(shared, explored, def_);
        }
        if (!m_.cs95 && coverage >= 0.95) {
            m_.cs95 = tick;
            m_.mo95 = overlap_fraction(shared, explored, def_);
        }
    }

    EpisodeMetrics finish() const {
        EpisodeMetrics m = m_;
        m.rv = cumulative_.empty() ? 0.0 : reward_variance(cumulative_);
        return m;
    }

    std::span<const double> cumulative_rewards() const { return cumulative_; }

private:
    OverlapDefinition def_;
    std::vector<double> cumulative_;
    EpisodeMetrics m_;
    std::size_t last_tick_ = 0;
};

} // namespace ptexplore
