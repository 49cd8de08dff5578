#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "ptexplore/world_map.hpp"

namespace ptexplore {

/// Fixed-size bitset keyed by free-point index.
class PointBitset {
public:
    PointBitset() = default;
    explicit PointBitset(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

    std::size_t size() const { return size_; }
    bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
    /// Sets bit i; returns true if it was previously clear.
    bool set(std::size_t i) {
        auto& w = words_[i >> 6];
        const std::uint64_t m = std::uint64_t{1} << (i & 63);
        const bool fresh = (w & m) == 0;
        w |= m;
        return fresh;
    }
    void clear() { std::fill(words_.begin(), words_.end(), 0); }
    std::size_t count() const {
        std::size_t n = 0;
        for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
        return n;
    }
    std::span<const std::uint64_t> words() const { return words_; }
    std::span<std::uint64_t> words() { return words_; }

    friend bool operator==(const PointBitset&, const PointBitset&) = default;

private:
    std::size_t size_ = 0;
    std::vector<std::uint64_t> words_;
};

struct MarkResult {
    std::size_t newly_by_agent = 0;
    std::size_t newly_global = 0;
};

/// Per-agent and team explored sets over a map's free points. Bits are only
/// ever set, never cleared, between resets.
class ExplorationMask {
public:
    ExplorationMask() = default;
    ExplorationMask(std::size_t n_agents, std::size_t n_free) : union_(n_free) {
        per_agent_.assign(n_agents, PointBitset(n_free));
    }

    std::size_t agent_count() const { return per_agent_.size(); }
    std::size_t point_count() const { return union_.size(); }
    const PointBitset& agent(std::size_t i) const { return per_agent_.at(i); }
    const PointBitset& team() const { return union_; }
    std::size_t explored_count() const { return explored_; }

    double coverage() const {
        return union_.size() == 0 ? 0.0 : static_cast<double>(explored_) / static_cast<double>(union_.size());
    }

    MarkResult mark(std::size_t agent, std::span<const PointIndex> points) {
        if (agent >= per_agent_.size()) throw std::out_of_range("mark_explored: agent index out of range");
        MarkResult r;
        auto& mine = per_agent_[agent];
        for (PointIndex p : points) {
            if (p >= union_.size()) throw std::out_of_range("mark_explored: point index out of range");
            if (mine.set(p)) ++r.newly_by_agent;
            if (union_.set(p)) ++r.newly_global;
        }
        explored_ += r.newly_global;
        return r;
    }

    void reset() {
        for (auto& m : per_agent_) m.clear();
        union_.clear();
        explored_ = 0;
    }

    /// Number of free points explored by two or more agents.
    std::size_t shared_count() const {
        std::size_t shared = 0;
        const std::size_t nw = union_.words().size();
        for (std::size_t w = 0; w < nw; ++w) {
            std::uint64_t once = 0;
            std::uint64_t twice = 0;
            for (const auto& m : per_agent_) {
                const std::uint64_t v = m.words()[w];
                twice |= once & v;
                once |= v;
            }
            shared += static_cast<std::size_t>(std::popcount(twice));
        }
        return shared;
    }

private:
    std::vector<PointBitset> per_agent_;
    PointBitset union_;
    std::size_t explored_ = 0;
};

inline MarkResult mark_explored(ExplorationMask& mask, std::size_t agent, std::span<const PointIndex> points) {
    return mask.mark(agent, points);
}

} // namespace ptexplore
