#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ptexplore/geometry.hpp"

namespace ptexplore {

using PointIndex = std::uint32_t;

class MapError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Uniform grid over a static point set. Answers fixed-radius queries with
/// results identical to a linear scan using the same `distance_sq <= r*r`
/// predicate.
class SpatialIndex {
public:
    static constexpr std::size_t kMaxCells = std::size_t{1} << 22;

    SpatialIndex() = default;

    SpatialIndex(std::span<const Vec2> points, const Bounds& bounds, double cell_size)
        : points_(points.begin(), points.end()), origin_{bounds.xmin, bounds.ymin} {
        cell_ = cell_size > 0.0 ? cell_size : 1.0;
        auto dims = [&] {
            nx_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(bounds.width() / cell_)));
            ny_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(bounds.height() / cell_)));
        };
        dims();
        while (nx_ * ny_ > kMaxCells) {
            cell_ *= 2.0;
            dims();
        }
        std::vector<std::uint32_t> counts(nx_ * ny_ + 1, 0);
        std::vector<std::uint32_t> cell_of(points_.size());
        for (std::size_t i = 0; i < points_.size(); ++i) {
            cell_of[i] = static_cast<std::uint32_t>(cell_index(points_[i]));
            ++counts[cell_of[i] + 1];
        }
        for (std::size_t c = 1; c < counts.size(); ++c) counts[c] += counts[c - 1];
        start_ = counts;
        items_.resize(points_.size());
        for (std::size_t i = 0; i < points_.size(); ++i) {
            items_[counts[cell_of[i]]++] = static_cast<PointIndex>(i);
        }
        // Coordinates in cell order keep the scan loops contiguous.
        sorted_.resize(points_.size());
        for (std::size_t k = 0; k < items_.size(); ++k) sorted_[k] = points_[items_[k]];
    }

    double cell_size() const { return cell_; }
    std::span<const Vec2> points() const { return points_; }

    /// Indices within `radius` of `center`, ascending.
    std::vector<PointIndex> query(Vec2 center, double radius) const {
        std::vector<PointIndex> out;
        query_into(center, radius, out);
        return out;
    }

    /// With `sorted` false the order is by cell, still deterministic.
    void query_into(Vec2 center, double radius, std::vector<PointIndex>& out, bool sorted = true) const {
        out.clear();
        if (points_.empty() || !(radius >= 0.0)) return;
        const double r2 = radius * radius;
        for_cells(center, radius, [&](std::size_t cell) {
            for (std::uint32_t k = start_[cell]; k < start_[cell + 1]; ++k) {
                if (distance_sq(sorted_[k], center) <= r2) out.push_back(items_[k]);
            }
            return true;
        });
        if (sorted) std::sort(out.begin(), out.end());
    }

    /// True iff some point lies within `radius` of `center`.
    bool any_within(Vec2 center, double radius) const {
        if (points_.empty()) return false;
        const double r2 = radius * radius;
        bool found = false;
        for_cells(center, radius, [&](std::size_t cell) {
            for (std::uint32_t k = start_[cell]; k < start_[cell + 1]; ++k) {
                if (distance_sq(sorted_[k], center) <= r2) {
                    found = true;
                    return false;
                }
            }
            return true;
        });
        return found;
    }

    /// Squared distance to the nearest point no farther than `max_radius`;
    /// +inf when none is that close.
    double nearest_sq_within(Vec2 center, double max_radius) const {
        double best = std::numeric_limits<double>::infinity();
        if (points_.empty()) return best;
        const double r2 = max_radius * max_radius;
        for_cells(center, max_radius, [&](std::size_t cell) {
            for (std::uint32_t k = start_[cell]; k < start_[cell + 1]; ++k) {
                const double d2 = distance_sq(sorted_[k], center);
                if (d2 <= r2 && d2 < best) best = d2;
            }
            return true;
        });
        return best;
    }

private:
    std::size_t clamp_axis(double v, double origin, std::size_t n) const {
        const double f = std::floor((v - origin) / cell_);
        if (!(f > 0.0)) return 0;
        if (f >= static_cast<double>(n - 1)) return n - 1;
        return static_cast<std::size_t>(f);
    }

    std::size_t cell_index(Vec2 p) const {
        return clamp_axis(p.y, origin_.y, ny_) * nx_ + clamp_axis(p.x, origin_.x, nx_);
    }

    template <typename Fn>
    void for_cells(Vec2 center, double radius, Fn&& fn) const {
        const std::size_t x0 = clamp_axis(center.x - radius, origin_.x, nx_);
        const std::size_t x1 = clamp_axis(center.x + radius, origin_.x, nx_);
        const std::size_t y0 = clamp_axis(center.y - radius, origin_.y, ny_);
        const std::size_t y1 = clamp_axis(center.y + radius, origin_.y, ny_);
        for (std::size_t y = y0; y <= y1; ++y) {
            for (std::size_t x = x0; x <= x1; ++x) {
                if (!fn(y * nx_ + x)) return;
            }
        }
    }

    std::vector<Vec2> points_;
    Vec2 origin_{};
    double cell_ = 1.0;
    std::size_t nx_ = 1;
    std::size_t ny_ = 1;
    std::vector<std::uint32_t> start_{0, 0};
    std::vector<PointIndex> items_;
    std::vector<Vec2> sorted_;
};

enum class PointKind { free, obstacle };

struct MapLimits {
    std::size_t max_points = 5'000'000;
    /// Spatial index cell; values <= resolution fall back to resolution.
    double index_cell = 0.0;
};

/// Immutable point-cloud scene. Point indices are file-order array positions
/// and never change after construction.
class WorldMap {
public:
    WorldMap(std::string name, double resolution, Bounds bounds, std::vector<Vec2> free_points,
             std::vector<Vec2> obstacle_points, MapLimits limits = {})
        : name_(std::move(name)),
          resolution_(resolution),
          bounds_(bounds),
          free_(std::move(free_points)),
          obstacles_(std::move(obstacle_points)) {
        if (!(resolution_ > 0.0) || !std::isfinite(resolution_)) throw MapError("resolution must be positive");
        if (!(bounds_.xmax > bounds_.xmin) || !(bounds_.ymax > bounds_.ymin)) {
            throw MapError("bounds must have positive extent");
        }
        if (free_.empty()) throw MapError("no free space");
        if (free_.size() + obstacles_.size() > limits.max_points) {
            throw MapError("point count " + std::to_string(free_.size() + obstacles_.size()) +
                           " exceeds limit " + std::to_string(limits.max_points));
        }
        for (std::size_t i = 0; i < free_.size(); ++i) {
            if (!bounds_.contains(free_[i])) throw MapError("free point " + std::to_string(i) + " outside bounds");
        }
        for (std::size_t i = 0; i < obstacles_.size(); ++i) {
            if (!bounds_.contains(obstacles_[i])) {
                throw MapError("obstacle point " + std::to_string(i) + " outside bounds");
            }
        }
        index_cell_ = std::max(resolution_, limits.index_cell);
        free_index_ = SpatialIndex(free_, bounds_, index_cell_);
        obstacle_index_ = SpatialIndex(obstacles_, bounds_, index_cell_);

        // Overlap: a free point strictly closer than resolution/2 to an obstacle point.
        const double half2 = 0.25 * resolution_ * resolution_;
        for (std::size_t i = 0; i < free_.size(); ++i) {
            if (obstacle_index_.nearest_sq_within(free_[i], 0.5 * resolution_) < half2) {
                throw MapError("free point " + std::to_string(i) + " overlaps an obstacle point");
            }
        }
    }

    /// Same scene with a different spatial index cell size.
    WorldMap with_index_cell(double cell) const {
        WorldMap copy = *this;
        copy.index_cell_ = std::max(resolution_, cell);
        copy.free_index_ = SpatialIndex(copy.free_, copy.bounds_, copy.index_cell_);
        copy.obstacle_index_ = SpatialIndex(copy.obstacles_, copy.bounds_, copy.index_cell_);
        return copy;
    }

    const std::string& name() const { return name_; }
    double resolution() const { return resolution_; }
    const Bounds& bounds() const { return bounds_; }
    std::span<const Vec2> free_points() const { return free_; }
    std::span<const Vec2> obstacle_points() const { return obstacles_; }
    std::span<const Vec2> points(PointKind kind) const { return kind == PointKind::free ? free_points() : obstacle_points(); }
    const SpatialIndex& index(PointKind kind) const { return kind == PointKind::free ? free_index_ : obstacle_index_; }
    double index_cell() const { return index_cell_; }

    friend bool operator==(const WorldMap& a, const WorldMap& b) {
        return a.name_ == b.name_ && a.resolution_ == b.resolution_ && a.bounds_ == b.bounds_ &&
               a.free_ == b.free_ && a.obstacles_ == b.obstacles_;
    }

private:
    std::string name_;
    double resolution_;
    Bounds bounds_;
    std::vector<Vec2> free_;
    std::vector<Vec2> obstacles_;
    double index_cell_ = 0.0;
    SpatialIndex free_index_;
    SpatialIndex obstacle_index_;
};

/// Indices of `kind` points within Euclidean distance `radius` of `center`,
/// ascending. `radius` must be positive.
inline std::vector<PointIndex> range_query(const WorldMap& map, Vec2 center, double radius, PointKind kind) {
    if (!(radius > 0.0)) throw MapError("range_query radius must be positive");
    return map.index(kind).query(center, radius);
}

} // namespace ptexplore
