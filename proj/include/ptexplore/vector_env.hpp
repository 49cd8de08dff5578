#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <tbb/parallel_for.h>

#include "ptexplore/env.hpp"

namespace ptexplore {

/// Error from one environment of a batch; the others completed normally.
class BatchError : public std::runtime_error {
public:
    BatchError(std::size_t env_index, const std::string& what)
        : std::runtime_error("env " + std::to_string(env_index) + ": " + what), env_index_(env_index) {}
    std::size_t env_index() const { return env_index_; }

private:
    std::size_t env_index_;
};

/// Per-env result of a batched call: an outcome or the error it raised.
struct BatchSlot {
    std::optional<StepOutcome> outcome;
    std::string error;
    bool ok() const { return outcome.has_value(); }
};

/// M independent environments stepped together. Whole environments are
/// distributed across worker threads; results are returned in env order and
/// equal M sequential calls.
class VectorEnv {
public:
    VectorEnv(const EnvConfig& cfg, std::size_t count, bool parallel = true) : parallel_(parallel) {
        auto map = prepare_map(cfg);
        for (std::size_t i = 0; i < count; ++i) envs_.push_back(std::make_unique<Env>(cfg, map));
    }

    VectorEnv(const EnvConfig& cfg, std::shared_ptr<const WorldMap> map, std::size_t count, bool parallel = true)
        : parallel_(parallel) {
        for (std::size_t i = 0; i < count; ++i) envs_.push_back(std::make_unique<Env>(cfg, map));
    }

    std::size_t size() const { return envs_.size(); }
    Env& env(std::size_t i) { return *envs_.at(i); }
    const Env& env(std::size_t i) const { return *envs_.at(i); }
    void set_parallel(bool on) { parallel_ = on; }

    std::vector<BatchSlot> try_reset(std::span<const std::uint64_t> seeds) {
        if (seeds.size() != envs_.size()) throw std::invalid_argument("one seed per environment required");
        return run([&](std::size_t i) { return envs_[i]->reset(seeds[i]); });
    }

    std::vector<BatchSlot> try_step(std::span<const std::vector<Goal>> goals) {
        if (goals.size() != envs_.size()) throw std::invalid_argument("one goal set per environment required");
        return run([&](std::size_t i) { return envs_[i]->step(goals[i]); });
    }

    std::vector<StepOutcome> reset(std::span<const std::uint64_t> seeds) { return unwrap(try_reset(seeds)); }
    std::vector<StepOutcome> step(std::span<const std::vector<Goal>> goals) { return unwrap(try_step(goals)); }

private:
    template <typename Fn>
    std::vector<BatchSlot> run(Fn&& fn) {
        std::vector<BatchSlot> slots(envs_.size());
        auto one = [&](std::size_t i) {
            try {
                slots[i].outcome = fn(i);
            } catch (const std::exception& e) {
                slots[i].error = e.what();
            }
        };
        if (parallel_ && envs_.size() > 1) {
            tbb::parallel_for(std::size_t{0}, envs_.size(), one);
        } else {
            for (std::size_t i = 0; i < envs_.size(); ++i) one(i);
        }
        return slots;
    }

    static std::vector<StepOutcome> unwrap(std::vector<BatchSlot> slots) {
        std::vector<StepOutcome> out;
        out.reserve(slots.size());
        for (std::size_t i = 0; i < slots.size(); ++i) {
            if (!slots[i].ok()) throw BatchError(i, slots[i].error);
            out.push_back(std::move(*slots[i].outcome));
        }
        return out;
    }

    std::vector<std::unique_ptr<Env>> envs_;
    bool parallel_ = true;
};

} // namespace ptexplore
