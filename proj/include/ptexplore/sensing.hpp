#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "ptexplore/dynamics.hpp"
#include "ptexplore/world_map.hpp"

namespace ptexplore {

struct RadarConfig {
    double detection_range = 20.0;
    double alpha1 = 1e-3;  // cosine tolerance of the occlusion cone
    double alpha2 = 1e-6;  // range margin, metres
    std::size_t max_returns = 4096;
    /// Use `|P_f| - |P_o| < alpha2` instead of the physical `> alpha2`.
    bool paper_literal_inequality = false;

    bool valid() const {
        return detection_range > 0.0 && alpha1 > 0.0 && alpha1 < 1.0 && alpha2 >= 0.0 && max_returns > 0;
    }
};

struct SensedPoints {
    std::size_t agent = 0;
    std::vector<PointIndex> visible_free;
    std::vector<PointIndex> in_range_obstacles;
    std::size_t tick = 0;

    friend bool operator==(const SensedPoints&, const SensedPoints&) = default;
};

/// The occlusion predicate on precomputed robot-relative vectors and norms.
/// A free point is hidden by an obstacle when the two are nearly collinear
/// from the robot and the obstacle is nearer by more than alpha2.
inline bool occludes(Vec2 pf, double nf, Vec2 po, double no, const RadarConfig& cfg) {
    const double cosine = dot(pf, po) / (nf * no);
    if (!(cosine > 1.0 - cfg.alpha1)) return false;
    return cfg.paper_literal_inequality ? (nf - no < cfg.alpha2) : (nf - no > cfg.alpha2);
}

/// Removes free candidates masked by obstacles. Obstacles are bucketed by
/// polar angle so each candidate only tests nearby sectors; output is the
/// ascending list of surviving candidate indices.
namespace detail {

// Polynomial atan2, absolute error below 2e-5 rad. Only used for bucketing.
inline double approx_atan2(double y, double x) {
    const double ax = std::abs(x);
    const double ay = std::abs(y);
    const double hi = std::max(ax, ay);
    if (hi == 0.0) return 0.0;
    const double z = std::min(ax, ay) / hi;
    const double z2 = z * z;
    double a = z * (0.9998660 + z2 * (-0.3302995 + z2 * (0.1801410 + z2 * (-0.0851330 + z2 * 0.0208351))));
    if (ay > ax) a = std::numbers::pi / 2 - a;
    if (x < 0.0) a = std::numbers::pi - a;
    return y < 0.0 ? -a : a;
}

} // namespace detail

class OcclusionFilter {
public:
    explicit OcclusionFilter(const RadarConfig& cfg) : cfg_(cfg) {
        constexpr double two_pi = 2.0 * std::numbers::pi;
        sectors_ = static_cast<std::size_t>(std::ceil(two_pi / std::sqrt(2.0 * cfg.alpha1)));
        sectors_ = std::max<std::size_t>(sectors_, 1);
        sector_width_ = two_pi / static_cast<double>(sectors_);
        // Widest angle passing the cone test, plus slack for the approximate angle.
        const double cone = std::acos(1.0 - cfg.alpha1);
        span_ = static_cast<std::size_t>(std::floor(cone / sector_width_)) + 2;
        if (2 * span_ + 1 >= sectors_) span_ = sectors_; // degenerate: scan everything
        bucket_start_.assign(sectors_ + 1, 0);
    }

    void operator()(Vec2 robot, std::span<const Vec2> free_points, std::span<const PointIndex> candidates,
                    std::span<const Vec2> obstacle_points, std::span<const PointIndex> obstacles,
                    std::vector<PointIndex>& out) {
        out.clear();
        if (obstacles.empty()) {
            out.assign(candidates.begin(), candidates.end());
            std::sort(out.begin(), out.end());
            return;
        }
        bucket_obstacles(robot, obstacle_points, obstacles);
        for (PointIndex idx : candidates) {
            const Vec2 pf = free_points[idx] - robot;
            const double nf = norm(pf);
            if (nf == 0.0 || !hidden(pf, nf)) out.push_back(idx);
        }
        std::sort(out.begin(), out.end());
    }

private:
    struct Entry {
        Vec2 rel;
        double norm;
    };

    std::size_t sector_of(Vec2 rel) const {
        const double a = detail::approx_atan2(rel.y, rel.x) + std::numbers::pi;
        auto s = static_cast<std::size_t>(a / sector_width_);
        return s >= sectors_ ? sectors_ - 1 : s;
    }

    void bucket_obstacles(Vec2 robot, std::span<const Vec2> obstacle_points, std::span<const PointIndex> obstacles) {
        std::fill(bucket_start_.begin(), bucket_start_.end(), 0);
        rel_.clear();
        sector_tmp_.clear();
        for (PointIndex idx : obstacles) {
            const Vec2 po = obstacle_points[idx] - robot;
            const double no = norm(po);
            if (no == 0.0) continue; // cone undefined; never occludes
            rel_.push_back({po, no});
            sector_tmp_.push_back(sector_of(po));
            ++bucket_start_[sector_tmp_.back() + 1];
        }
        for (std::size_t s = 1; s <= sectors_; ++s) bucket_start_[s] += bucket_start_[s - 1];
        entries_.resize(rel_.size());
        fill_pos_.assign(bucket_start_.begin(), bucket_start_.end() - 1);
        for (std::size_t k = 0; k < rel_.size(); ++k) entries_[fill_pos_[sector_tmp_[k]]++] = rel_[k];
    }

    bool hidden(Vec2 pf, double nf) const {
        auto test_bucket = [&](std::size_t s) {
            for (std::size_t k = bucket_start_[s]; k < bucket_start_[s + 1]; ++k) {
                if (occludes(pf, nf, entries_[k].rel, entries_[k].norm, cfg_)) return true;
            }
            return false;
        };
        if (span_ >= sectors_) {
            for (std::size_t s = 0; s < sectors_; ++s) {
                if (test_bucket(s)) return true;
            }
            return false;
        }
        const std::size_t home = sector_of(pf);
        for (std::size_t d = 0; d <= 2 * span_; ++d) {
            const std::size_t s = (home + sectors_ + d - span_) % sectors_;
            if (test_bucket(s)) return true;
        }
        return false;
    }

    RadarConfig cfg_;
    std::size_t sectors_ = 1;
    double sector_width_ = 0.0;
    std::size_t span_ = 0;
    std::vector<std::size_t> bucket_start_;
    std::vector<std::size_t> fill_pos_;
    std::vector<Entry> rel_;
    std::vector<std::size_t> sector_tmp_;
    std::vector<Entry> entries_;
};

inline std::vector<PointIndex> occlusion_filter(Vec2 robot, std::span<const Vec2> free_points,
                                                std::span<const PointIndex> candidates,
                                                std::span<const Vec2> obstacle_points,
                                                std::span<const PointIndex> obstacles, const RadarConfig& cfg) {
    OcclusionFilter filter(cfg);
    std::vector<PointIndex> out;
    filter(robot, free_points, candidates, obstacle_points, obstacles, out);
    return out;
}

/// Reusable per-agent sensing state; avoids reallocating scratch buffers.
class Radar {
public:
    explicit Radar(const RadarConfig& cfg) : cfg_(cfg), filter_(cfg) {}

    const RadarConfig& config() const { return cfg_; }

    void sense(const AgentState& robot, const WorldMap& map, SensedPoints& out) {
        const Vec2 pos = robot.position();
        map.index(PointKind::free).query_into(pos, cfg_.detection_range, candidates_, false);
        map.index(PointKind::obstacle).query_into(pos, cfg_.detection_range, out.in_range_obstacles);
        filter_(pos, map.free_points(), candidates_, map.obstacle_points(), out.in_range_obstacles, out.visible_free);
        if (out.visible_free.size() > cfg_.max_returns) keep_nearest(pos, map.free_points(), out.visible_free);
    }

private:
    void keep_nearest(Vec2 pos, std::span<const Vec2> pts, std::vector<PointIndex>& visible) const {
        auto closer = [&](PointIndex a, PointIndex b) {
            const double da = distance_sq(pts[a], pos);
            const double db = distance_sq(pts[b], pos);
            return da < db || (da == db && a < b);
        };
        std::nth_element(visible.begin(), visible.begin() + static_cast<std::ptrdiff_t>(cfg_.max_returns),
                         visible.end(), closer);
        visible.resize(cfg_.max_returns);
        std::sort(visible.begin(), visible.end());
    }

    RadarConfig cfg_;
    OcclusionFilter filter_;
    std::vector<PointIndex> candidates_;
};

inline SensedPoints sense(const AgentState& robot, const WorldMap& map, const RadarConfig& cfg) {
    Radar radar(cfg);
    SensedPoints out;
    radar.sense(robot, map, out);
    return out;
}

} // namespace ptexplore
