#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <tuple>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ptexplore/map_io.hpp"
#include "ptexplore/rng.hpp"
#include "ptexplore/world_map.hpp"

namespace ptexplore {

class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ScenarioKind { random_obstacle, maze, ingested };

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::random_obstacle;
    std::uint64_t seed = 0;
    double size = 125.0;
    double resolution = 1.0;
    double obstacle_density = 0.15; // random_obstacle
    std::size_t cell_count = 10;    // maze
    double corridor_width = 4.0;    // maze, metres
    double footprint_radius = 0.5;  // agent the map is generated for

    void check() const {
        if (!(size > 0.0)) throw ScenarioError("size must be positive");
        if (!(resolution > 0.0)) throw ScenarioError("resolution must be positive");
        if (!(obstacle_density >= 0.0 && obstacle_density < 0.5)) {
            throw ScenarioError("obstacle_density must be in [0, 0.5)");
        }
        if (kind == ScenarioKind::maze) {
            if (cell_count < 2) throw ScenarioError("maze needs cell_count >= 2");
            if (corridor_width < 4.0 * footprint_radius) {
                throw ScenarioError("corridor_width must be at least twice the footprint diameter");
            }
        }
    }
};

// ---------------------------------------------------------------------------
// Validation

struct ValidationReport {
    std::size_t free_points = 0;
    std::size_t obstacle_points = 0;
    std::size_t component_count = 0;
    double largest_component_fraction = 0.0;
    double disc_reachable_fraction = 0.0;
    double min_corridor_width = 0.0; // 2 x smallest free-point clearance
    double max_corridor_width = 0.0; // 2 x largest free-point clearance
    double footprint_radius = 0.0;
    bool valid = false;

    std::string to_text() const {
        std::ostringstream os;
        os << "valid " << (valid ? "true" : "false") << '\n'
           << "free_points " << free_points << '\n'
           << "obstacle_points " << obstacle_points << '\n'
           << "components " << component_count << '\n'
           << "largest_component_fraction " << detail::format_double(largest_component_fraction) << '\n'
           << "disc_reachable_fraction " << detail::format_double(disc_reachable_fraction) << '\n'
           << "min_corridor_width " << detail::format_double(min_corridor_width) << '\n'
           << "max_corridor_width " << detail::format_double(max_corridor_width) << '\n'
           << "footprint_radius " << detail::format_double(footprint_radius) << '\n';
        return os.str();
    }
};

namespace detail {

/// Connected-component labels over `subset` of free points, adjacency being
/// distance <= 1.5 x resolution (8-neighbourhood on a lattice). Labels are
/// assigned in order of the lowest member index; returns component sizes.
inline std::vector<std::size_t> label_components(const WorldMap& map, const std::vector<char>& subset,
                                                 std::vector<std::int64_t>& label) {
    const auto pts = map.free_points();
    const auto& index = map.index(PointKind::free);
    const double link = 1.5 * map.resolution();
    label.assign(pts.size(), -1);
    std::vector<std::size_t> sizes;
    std::vector<PointIndex> stack;
    std::vector<PointIndex> near;
    for (std::size_t seed = 0; seed < pts.size(); ++seed) {
        if (!subset[seed] || label[seed] >= 0) continue;
        const auto id = static_cast<std::int64_t>(sizes.size());
        sizes.push_back(0);
        label[seed] = id;
        stack.assign(1, static_cast<PointIndex>(seed));
        while (!stack.empty()) {
            const PointIndex cur = stack.back();
            stack.pop_back();
            ++sizes.back();
            index.query_into(pts[cur], link, near);
            for (PointIndex nb : near) {
                if (subset[nb] && label[nb] < 0) {
                    label[nb] = id;
                    stack.push_back(nb);
                }
            }
        }
    }
    return sizes;
}

inline double clearance_sq(const WorldMap& map, Vec2 p) {
    const auto& obs = map.index(PointKind::obstacle);
    if (map.obstacle_points().empty()) return std::numeric_limits<double>::infinity();
    double r = 2.0 * map.resolution();
    const double limit = 2.0 * map.bounds().diagonal() + r;
    while (true) {
        const double d2 = obs.nearest_sq_within(p, r);
        if (std::isfinite(d2) || r > limit) return d2;
        r *= 2.0;
    }
}

} // namespace detail

inline ValidationReport validate_map(const WorldMap& map, double footprint_radius) {
    ValidationReport rep;
    const auto pts = map.free_points();
    rep.free_points = pts.size();
    rep.obstacle_points = map.obstacle_points().size();
    rep.footprint_radius = footprint_radius;

    std::vector<std::int64_t> label;
    const std::vector<char> all(pts.size(), 1);
    const auto sizes = detail::label_components(map, all, label);
    rep.component_count = sizes.size();
    const std::size_t largest = sizes.empty() ? 0 : *std::max_element(sizes.begin(), sizes.end());
    rep.largest_component_fraction = pts.empty() ? 0.0 : static_cast<double>(largest) / static_cast<double>(pts.size());

    std::vector<double> clear(pts.size());
    double min_c = std::numeric_limits<double>::infinity();
    double max_c = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        clear[i] = std::sqrt(detail::clearance_sq(map, pts[i]));
        min_c = std::min(min_c, clear[i]);
        max_c = std::max(max_c, clear[i]);
    }
    // Without obstacles the width is bounded by the map itself.
    const double cap = map.bounds().diagonal();
    rep.min_corridor_width = 2.0 * std::min(min_c, cap);
    rep.max_corridor_width = 2.0 * std::min(max_c, cap);

    // Disc centres: free points where the footprint touches no obstacle.
    std::vector<char> feasible(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) feasible[i] = clear[i] > footprint_radius;
    std::vector<std::int64_t> disc_label;
    const auto disc_sizes = detail::label_components(map, feasible, disc_label);
    if (!disc_sizes.empty()) {
        const auto best = static_cast<std::int64_t>(
            std::max_element(disc_sizes.begin(), disc_sizes.end()) - disc_sizes.begin());
        std::size_t covered = 0;
        std::vector<PointIndex> near;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (disc_label[i] == best) {
                ++covered;
                continue;
            }
            map.index(PointKind::free).query_into(pts[i], footprint_radius, near);
            for (PointIndex nb : near) {
                if (disc_label[nb] == best) {
                    ++covered;
                    break;
                }
            }
        }
        rep.disc_reachable_fraction = static_cast<double>(covered) / static_cast<double>(pts.size());
    }
    rep.valid = rep.largest_component_fraction >= 0.99 && rep.max_corridor_width >= 2.0 * footprint_radius;
    return rep;
}

// ---------------------------------------------------------------------------
// Lattice helpers shared by the procedural generators

namespace detail {

/// Square lattice of n x n points at cell centres; true = obstacle.
class Lattice {
public:
    Lattice(std::size_t n, double resolution) : n_(n), res_(resolution), cells_(n * n, 0) {}

    std::size_t n() const { return n_; }
    bool inside(std::int64_t x, std::int64_t y) const {
        return x >= 0 && y >= 0 && x < static_cast<std::int64_t>(n_) && y < static_cast<std::int64_t>(n_);
    }
    bool blocked(std::int64_t x, std::int64_t y) const { return cells_[idx(x, y)] != 0; }
    void block(std::int64_t x, std::int64_t y) {
        if (inside(x, y)) cells_[idx(x, y)] = 1;
    }
    void open(std::int64_t x, std::int64_t y) {
        if (inside(x, y)) cells_[idx(x, y)] = 0;
    }
    void fill(std::uint8_t v) { std::fill(cells_.begin(), cells_.end(), v); }
    std::size_t blocked_count() const { return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), 1)); }

    /// Any obstacle in [x0,x1] x [y0,y1] (clipped)?
    bool any_blocked(std::int64_t x0, std::int64_t y0, std::int64_t x1, std::int64_t y1) const {
        for (std::int64_t y = std::max<std::int64_t>(y0, 0); y <= std::min<std::int64_t>(y1, n_ - 1); ++y) {
            for (std::int64_t x = std::max<std::int64_t>(x0, 0); x <= std::min<std::int64_t>(x1, n_ - 1); ++x) {
                if (blocked(x, y)) return true;
            }
        }
        return false;
    }

    /// 4-connected free components; true when all free cells form one.
    bool free_connected() const {
        std::vector<char> seen(cells_.size(), 0);
        std::size_t start = cells_.size();
        std::size_t free_total = 0;
        for (std::size_t i = 0; i < cells_.size(); ++i) {
            if (!cells_[i]) {
                ++free_total;
                if (start == cells_.size()) start = i;
            }
        }
        if (free_total == 0) return false;
        std::vector<std::size_t> stack{start};
        seen[start] = 1;
        std::size_t reached = 0;
        while (!stack.empty()) {
            const std::size_t c = stack.back();
            stack.pop_back();
            ++reached;
            const auto x = static_cast<std::int64_t>(c % n_);
            const auto y = static_cast<std::int64_t>(c / n_);
            const std::int64_t dx[] = {1, -1, 0, 0};
            const std::int64_t dy[] = {0, 0, 1, -1};
            for (int k = 0; k < 4; ++k) {
                const std::int64_t nx = x + dx[k];
                const std::int64_t ny = y + dy[k];
                if (!inside(nx, ny)) continue;
                const std::size_t j = idx(nx, ny);
                if (!cells_[j] && !seen[j]) {
                    seen[j] = 1;
                    stack.push_back(j);
                }
            }
        }
        return reached == free_total;
    }

    WorldMap to_map(std::string name) const {
        std::vector<Vec2> free_pts;
        std::vector<Vec2> obst_pts;
        for (std::size_t y = 0; y < n_; ++y) {
            for (std::size_t x = 0; x < n_; ++x) {
                const Vec2 p{(static_cast<double>(x) + 0.5) * res_, (static_cast<double>(y) + 0.5) * res_};
                (cells_[y * n_ + x] ? obst_pts : free_pts).push_back(p);
            }
        }
        const double extent = static_cast<double>(n_) * res_;
        return WorldMap(std::move(name), res_, Bounds{0.0, 0.0, extent, extent}, std::move(free_pts),
                        std::move(obst_pts));
    }

private:
    std::size_t idx(std::int64_t x, std::int64_t y) const {
        return static_cast<std::size_t>(y) * n_ + static_cast<std::size_t>(x);
    }

    std::size_t n_;
    double res_;
    std::vector<std::uint8_t> cells_;
};

inline std::size_t lattice_points(double size, double resolution) {
    const auto n = static_cast<std::size_t>(std::llround(size / resolution));
    if (n < 3) throw ScenarioError("map too small for its resolution");
    return n;
}

struct Rect {
    std::int64_t x0, y0, x1, y1; // inclusive
};

} // namespace detail

// ---------------------------------------------------------------------------
// Random obstacle scenario

namespace detail {

class RandomObstacleBuilder {
public:
    RandomObstacleBuilder(const ScenarioSpec& spec, std::uint64_t stream)
        : spec_(spec), rng_(mix_seed(spec.seed, stream)), lat_(lattice_points(spec.size, spec.resolution),
                                                               spec.resolution) {
        n_ = static_cast<std::int64_t>(lat_.n());
        margin_ = cells(2.0);
        for (std::int64_t i = 0; i < n_; ++i) {
            lat_.block(i, 0);
            lat_.block(i, n_ - 1);
            lat_.block(0, i);
            lat_.block(n_ - 1, i);
        }
    }

    std::optional<WorldMap> build() {
        const double area_scale = (spec_.size / 125.0) * (spec_.size / 125.0);
        const auto per_motif = std::max<std::int64_t>(1, std::llround(2.0 * area_scale));
        for (std::int64_t k = 0; k < per_motif; ++k) {
            place_motif([&] { return corridor(); });
            place_motif([&] { return corner_loop(); });
            place_motif([&] { return rooms(); });
        }
        if (!scatter_obstacles()) return std::nullopt;
        if (!lat_.free_connected()) return std::nullopt;
        return lat_.to_map("random_obstacle_" + std::to_string(spec_.seed));
    }

private:
    struct Shape {
        std::vector<std::pair<std::int64_t, std::int64_t>> wall;
        Rect box;
    };

    std::int64_t cells(double metres) const {
        return std::max<std::int64_t>(1, std::llround(metres / spec_.resolution));
    }

    std::int64_t cells_between(double lo, double hi) {
        const double cap = spec_.size / 3.0;
        return cells(rng_.uniform(std::min(lo, cap), std::min(hi, cap)));
    }

    template <typename Make>
    void place_motif(Make&& make) {
        for (int attempt = 0; attempt < 100; ++attempt) {
            Shape s = make();
            const std::int64_t w = s.box.x1 - s.box.x0;
            const std::int64_t h = s.box.y1 - s.box.y0;
            const std::int64_t lo = 1 + margin_;
            const std::int64_t hi_x = n_ - 2 - margin_ - w;
            const std::int64_t hi_y = n_ - 2 - margin_ - h;
            if (hi_x < lo || hi_y < lo) continue;
            const std::int64_t ox = rng_.range(lo, hi_x) - s.box.x0;
            const std::int64_t oy = rng_.range(lo, hi_y) - s.box.y0;
            const Rect placed{s.box.x0 + ox, s.box.y0 + oy, s.box.x1 + ox, s.box.y1 + oy};
            if (reserved_overlap(placed)) continue;
            for (auto [x, y] : s.wall) lat_.block(x + ox, y + oy);
            reserved_.push_back(placed);
            return;
        }
    }

    bool reserved_overlap(const Rect& r) const {
        const Rect grown{r.x0 - margin_, r.y0 - margin_, r.x1 + margin_, r.y1 + margin_};
        for (const auto& o : reserved_) {
            if (grown.x0 <= o.x1 && o.x0 <= grown.x1 && grown.y0 <= o.y1 && o.y0 <= grown.y1) return true;
        }
        return lat_.any_blocked(grown.x0, grown.y0, grown.x1, grown.y1);
    }

    // Random orientation of a shape drawn in a local frame.
    Shape orient(Shape s) {
        const bool swap_xy = rng_.coin();
        const bool flip_x = rng_.coin();
        const bool flip_y = rng_.coin();
        std::int64_t w = s.box.x1;
        std::int64_t h = s.box.y1;
        for (auto& [x, y] : s.wall) {
            if (flip_x) x = w - x;
            if (flip_y) y = h - y;
            if (swap_xy) std::swap(x, y);
        }
        if (swap_xy) std::swap(w, h);
        s.box = {0, 0, w, h};
        return s;
    }

    static void hline(Shape& s, std::int64_t x0, std::int64_t x1, std::int64_t y) {
        for (std::int64_t x = x0; x <= x1; ++x) s.wall.emplace_back(x, y);
    }
    static void vline(Shape& s, std::int64_t x, std::int64_t y0, std::int64_t y1) {
        for (std::int64_t y = y0; y <= y1; ++y) s.wall.emplace_back(x, y);
    }

    // Narrow corridor: two parallel walls.
    Shape corridor() {
        Shape s;
        const std::int64_t len = cells_between(15.0, 30.0);
        const std::int64_t gap = cells_between(3.0, 6.0);
        hline(s, 0, len, 0);
        hline(s, 0, len, gap + 1);
        s.box = {0, 0, len, gap + 1};
        return orient(std::move(s));
    }

    // Corner loop: nested L-shaped walls bounding an L-shaped passage.
    Shape corner_loop() {
        Shape s;
        const std::int64_t a = cells_between(10.0, 20.0);
        const std::int64_t b = cells_between(10.0, 20.0);
        const std::int64_t gap = cells_between(3.0, 5.0);
        hline(s, 0, a, 0);
        vline(s, 0, 0, b);
        if (a > gap + 2 && b > gap + 2) {
            hline(s, gap + 1, a, gap + 1);
            vline(s, gap + 1, gap + 1, b);
        }
        s.box = {0, 0, a, b};
        return orient(std::move(s));
    }

    // Multi-room block: rectangle split by a partition, doors in both.
    Shape rooms() {
        Shape s;
        const std::int64_t w = cells_between(14.0, 25.0);
        const std::int64_t h = cells_between(10.0, 20.0);
        const std::int64_t door = cells_between(3.0, 4.0);
        const std::int64_t split = w / 2;
        std::vector<std::pair<std::int64_t, std::int64_t>> gaps; // wall cells to leave open
        auto door_in = [&](bool horizontal, std::int64_t fixed, std::int64_t lo, std::int64_t hi) {
            if (hi - lo < door + 2) return;
            const std::int64_t start = rng_.range(lo + 1, hi - door - 1);
            for (std::int64_t k = start; k < start + door; ++k) {
                gaps.emplace_back(horizontal ? k : fixed, horizontal ? fixed : k);
            }
        };
        hline(s, 0, w, 0);
        hline(s, 0, w, h);
        vline(s, 0, 0, h);
        vline(s, w, 0, h);
        vline(s, split, 0, h);
        door_in(false, split, 0, h);
        // One door per room guarantees both are reachable; the second is optional.
        door_in(true, rng_.coin() ? 0 : h, 0, split);
        if (rng_.coin()) door_in(true, rng_.coin() ? 0 : h, split, w);
        else door_in(false, w, 0, h);
        std::erase_if(s.wall, [&](const auto& c) { return std::find(gaps.begin(), gaps.end(), c) != gaps.end(); });
        s.box = {0, 0, w, h};
        return orient(std::move(s));
    }

    bool scatter_obstacles() {
        const double total = static_cast<double>(n_ * n_);
        // One free cell between obstacle points already keeps free space connected;
        // widen it until the gap passes the footprint.
        const auto ring = std::max<std::int64_t>(
            1, static_cast<std::int64_t>(std::ceil(2.0 * spec_.footprint_radius / spec_.resolution - 1e-9)));
        std::size_t blocked = lat_.blocked_count();
        std::size_t failures = 0;
        while (static_cast<double>(blocked) / total < spec_.obstacle_density) {
            if (failures > 20000) return false;
            std::vector<std::pair<std::int64_t, std::int64_t>> shape;
            if (rng_.coin()) {
                const std::int64_t w = cells_between(1.0, 4.0);
                const std::int64_t h = cells_between(1.0, 4.0);
                for (std::int64_t y = 0; y < h; ++y) {
                    for (std::int64_t x = 0; x < w; ++x) shape.emplace_back(x, y);
                }
            } else {
                const double radius = rng_.uniform(0.5, 2.0) / spec_.resolution;
                const auto r = static_cast<std::int64_t>(std::ceil(radius));
                for (std::int64_t y = -r; y <= r; ++y) {
                    for (std::int64_t x = -r; x <= r; ++x) {
                        const double dx = static_cast<double>(x);
                        const double dy = static_cast<double>(y);
                        if (dx * dx + dy * dy <= radius * radius) shape.emplace_back(x + r, y + r);
                    }
                }
            }
            std::int64_t w = 0;
            std::int64_t h = 0;
            for (auto [x, y] : shape) {
                w = std::max(w, x);
                h = std::max(h, y);
            }
            const std::int64_t ox = rng_.range(1, std::max<std::int64_t>(1, n_ - 2 - w));
            const std::int64_t oy = rng_.range(1, std::max<std::int64_t>(1, n_ - 2 - h));
            // A clear ring around an isolated obstacle keeps free space connected.
            if (lat_.any_blocked(ox - ring, oy - ring, ox + w + ring, oy + h + ring)) {
                ++failures;
                continue;
            }
            for (auto [x, y] : shape) lat_.block(x + ox, y + oy);
            blocked = lat_.blocked_count();
        }
        return true;
    }

    ScenarioSpec spec_;
    Rng rng_;
    Lattice lat_;
    std::int64_t n_ = 0;
    std::int64_t margin_ = 2;
    std::vector<detail::Rect> reserved_;
};

} // namespace detail

inline WorldMap gen_random_obstacle(const ScenarioSpec& spec) {
    if (spec.kind != ScenarioKind::random_obstacle) throw ScenarioError("spec kind is not random_obstacle");
    spec.check();
    for (std::uint64_t attempt = 0; attempt < 8; ++attempt) {
        detail::RandomObstacleBuilder builder(spec, attempt);
        auto map = builder.build();
        if (map && validate_map(*map, spec.footprint_radius).valid) return std::move(*map);
    }
    throw ScenarioError("obstacle density " + detail::format_double(spec.obstacle_density) +
                        " unreachable without disconnecting free space");
}

// ---------------------------------------------------------------------------
// Maze scenario

struct MazePassage {
    std::size_t a = 0; // cell id = row * cells + col, a < b
    std::size_t b = 0;
    friend bool operator==(const MazePassage&, const MazePassage&) = default;
};

namespace detail {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (rank_[a] < rank_[b]) std::swap(a, b);
        parent_[b] = a;
        if (rank_[a] == rank_[b]) ++rank_[a];
        return true;
    }

private:
    std::vector<std::size_t> parent_;
    std::vector<std::uint8_t> rank_;
};

} // namespace detail

/// Randomized Kruskal over a cells x cells lattice. After the spanning tree
/// is built, dead ends of a single cell hanging off a junction are re-rolled:
/// the leaf is reattached to a neighbouring leaf when one exists, which
/// lengthens the dead end while keeping the passage graph a spanning tree.
inline std::vector<MazePassage> kruskal_maze(std::size_t cells, std::uint64_t seed, int refine_passes = 3) {
    if (cells < 2) throw ScenarioError("maze needs cell_count >= 2");
    const std::size_t count = cells * cells;
    std::vector<MazePassage> walls;
    for (std::size_t r = 0; r < cells; ++r) {
        for (std::size_t c = 0; c < cells; ++c) {
            const std::size_t id = r * cells + c;
            if (c + 1 < cells) walls.push_back({id, id + 1});
            if (r + 1 < cells) walls.push_back({id, id + cells});
        }
    }
    Rng rng(mix_seed(seed, 0x6d617a65));
    rng.shuffle(std::span<MazePassage>(walls));
    detail::DisjointSets sets(count);
    std::vector<MazePassage> carved;
    carved.reserve(count - 1);
    for (const auto& w : walls) {
        if (sets.unite(w.a, w.b)) carved.push_back(w);
    }

    auto lattice_neighbours = [&](std::size_t id) {
        std::vector<std::size_t> out;
        const std::size_t r = id / cells;
        const std::size_t c = id % cells;
        if (c > 0) out.push_back(id - 1);
        if (c + 1 < cells) out.push_back(id + 1);
        if (r > 0) out.push_back(id - cells);
        if (r + 1 < cells) out.push_back(id + cells);
        return out;
    };
    for (int pass = 0; pass < refine_passes; ++pass) {
        std::vector<std::size_t> degree(count, 0);
        for (const auto& p : carved) {
            ++degree[p.a];
            ++degree[p.b];
        }
        bool changed = false;
        std::vector<std::size_t> order(count);
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t leaf : order) {
            if (degree[leaf] != 1) continue;
            auto it = std::find_if(carved.begin(), carved.end(),
                                   [&](const MazePassage& p) { return p.a == leaf || p.b == leaf; });
            const std::size_t parent = it->a == leaf ? it->b : it->a;
            if (degree[parent] < 3) continue; // already part of a longer dead end
            for (std::size_t nb : lattice_neighbours(leaf)) {
                if (nb == parent || degree[nb] != 1) continue;
                // Attach the leaf to another leaf: still a tree, dead end now >= 2 cells.
                --degree[parent];
                ++degree[nb];
                *it = MazePassage{std::min(leaf, nb), std::max(leaf, nb)};
                changed = true;
                break;
            }
        }
        if (!changed) break;
    }
    return carved;
}

struct MazeGeometry {
    std::size_t lattice = 0;  // points per side
    std::size_t pitch = 0;    // lattice points per maze cell
    std::size_t corridor = 0; // lattice points across a corridor
    std::size_t offset = 0;   // wall points before a cell's corridor
};

inline MazeGeometry maze_geometry(const ScenarioSpec& spec) {
    MazeGeometry g;
    g.lattice = detail::lattice_points(spec.size, spec.resolution);
    g.pitch = g.lattice / spec.cell_count;
    g.corridor = static_cast<std::size_t>(std::llround(spec.corridor_width / spec.resolution));
    if (g.corridor == 0 || g.pitch < g.corridor + 2) {
        throw ScenarioError("corridor_width too large for cell pitch");
    }
    g.offset = (g.pitch - g.corridor) / 2;
    return g;
}

inline WorldMap gen_maze(const ScenarioSpec& spec) {
    if (spec.kind != ScenarioKind::maze) throw ScenarioError("spec kind is not maze");
    spec.check();
    const MazeGeometry g = maze_geometry(spec);
    const auto passages = kruskal_maze(spec.cell_count, spec.seed);
    detail::Lattice lat(g.lattice, spec.resolution);
    lat.fill(1);
    auto carve = [&](std::size_t x0, std::size_t y0, std::size_t x1, std::size_t y1) {
        for (std::size_t y = y0; y < y1; ++y) {
            for (std::size_t x = x0; x < x1; ++x) lat.open(static_cast<std::int64_t>(x), static_cast<std::int64_t>(y));
        }
    };
    const std::size_t n = spec.cell_count;
    for (std::size_t id = 0; id < n * n; ++id) {
        const std::size_t x = (id % n) * g.pitch + g.offset;
        const std::size_t y = (id / n) * g.pitch + g.offset;
        carve(x, y, x + g.corridor, y + g.corridor);
    }
    for (const auto& p : passages) {
        const std::size_t ax = (p.a % n) * g.pitch + g.offset;
        const std::size_t ay = (p.a / n) * g.pitch + g.offset;
        if (p.b == p.a + 1) {
            carve(ax + g.corridor, ay, ax + g.pitch, ay + g.corridor);
        } else {
            carve(ax, ay + g.corridor, ax + g.corridor, ay + g.pitch);
        }
    }
    return lat.to_map("maze_" + std::to_string(spec.seed));
}

inline WorldMap generate(const ScenarioSpec& spec) {
    switch (spec.kind) {
    case ScenarioKind::random_obstacle:
        return gen_random_obstacle(spec);
    case ScenarioKind::maze:
        return gen_maze(spec);
    case ScenarioKind::ingested:
        break;
    }
    throw ScenarioError("ingested scenarios are loaded from files, not generated");
}

// ---------------------------------------------------------------------------
// Point-cloud ingestion

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

struct IngestOptions {
    double resolution = 0.1;
    double z_lo = -std::numeric_limits<double>::infinity();
    double z_hi = std::numeric_limits<double>::infinity();
    double height_threshold = 0.3; // z-extent above which a column is an obstacle
    double footprint_radius = 0.5;
    std::string name = "ingested";
};

inline std::vector<Vec3> read_point_cloud(std::istream& in) {
    std::vector<Vec3> pts;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto tok = detail::split_ws(line);
        if (tok.empty() || tok[0].front() == '#') continue;
        Vec3 p;
        if (tok.size() < 3 || !detail::parse_double(tok[0], p.x) || !detail::parse_double(tok[1], p.y) ||
            !detail::parse_double(tok[2], p.z)) {
            throw ScenarioError("parse error at line " + std::to_string(line_no) + ": expected 'x y z [attrs]'");
        }
        pts.push_back(p);
    }
    return pts;
}

/// Projects a 3D cloud onto the plane, one point per resolution cell at the
/// cell centre. A cell whose z-extent inside the band exceeds the height
/// threshold is an obstacle; otherwise free. Free cells outside the largest
/// 8-connected free component are dropped.
inline WorldMap ingest_points(std::span<const Vec3> cloud, const IngestOptions& opt) {
    if (!(opt.resolution > 0.0)) throw ScenarioError("resolution must be positive");
    struct Column {
        double zmin = std::numeric_limits<double>::infinity();
        double zmax = -std::numeric_limits<double>::infinity();
    };
    auto key = [](std::int64_t x, std::int64_t y) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) << 32) |
               static_cast<std::uint32_t>(y);
    };
    std::unordered_map<std::uint64_t, Column> columns;
    std::vector<std::pair<std::int64_t, std::int64_t>> cells;
    for (const auto& p : cloud) {
        if (p.z < opt.z_lo || p.z > opt.z_hi) continue;
        const auto cx = static_cast<std::int64_t>(std::floor(p.x / opt.resolution));
        const auto cy = static_cast<std::int64_t>(std::floor(p.y / opt.resolution));
        auto [it, fresh] = columns.try_emplace(key(cx, cy));
        if (fresh) cells.emplace_back(cx, cy);
        it->second.zmin = std::min(it->second.zmin, p.z);
        it->second.zmax = std::max(it->second.zmax, p.z);
    }
    if (cells.empty()) throw ScenarioError("empty result after z-band filtering");
    std::sort(cells.begin(), cells.end(), [](auto a, auto b) { return std::tie(a.second, a.first) < std::tie(b.second, b.first); });

    auto is_free = [&](std::int64_t x, std::int64_t y) {
        auto it = columns.find(key(x, y));
        return it != columns.end() && it->second.zmax - it->second.zmin <= opt.height_threshold;
    };
    // Largest 8-connected free component.
    std::unordered_map<std::uint64_t, std::size_t> comp;
    std::vector<std::size_t> comp_size;
    for (auto [x, y] : cells) {
        if (!is_free(x, y) || comp.count(key(x, y))) continue;
        const std::size_t id = comp_size.size();
        comp_size.push_back(0);
        std::vector<std::pair<std::int64_t, std::int64_t>> stack{{x, y}};
        comp[key(x, y)] = id;
        while (!stack.empty()) {
            auto [cx, cy] = stack.back();
            stack.pop_back();
            ++comp_size[id];
            for (std::int64_t dy = -1; dy <= 1; ++dy) {
                for (std::int64_t dx = -1; dx <= 1; ++dx) {
                    if ((dx || dy) && is_free(cx + dx, cy + dy) && !comp.count(key(cx + dx, cy + dy))) {
                        comp[key(cx + dx, cy + dy)] = id;
                        stack.emplace_back(cx + dx, cy + dy);
                    }
                }
            }
        }
    }
    if (comp_size.empty()) throw ScenarioError("empty result: no free space after classification");
    const std::size_t keep = static_cast<std::size_t>(std::max_element(comp_size.begin(), comp_size.end()) - comp_size.begin());

    std::vector<Vec2> free_pts;
    std::vector<Vec2> obst_pts;
    std::int64_t xmin = std::numeric_limits<std::int64_t>::max(), ymin = xmin;
    std::int64_t xmax = std::numeric_limits<std::int64_t>::min(), ymax = xmax;
    for (auto [x, y] : cells) {
        const Vec2 centre{(static_cast<double>(x) + 0.5) * opt.resolution, (static_cast<double>(y) + 0.5) * opt.resolution};
        if (is_free(x, y)) {
            if (comp[key(x, y)] != keep) continue;
            free_pts.push_back(centre);
        } else {
            obst_pts.push_back(centre);
        }
        xmin = std::min(xmin, x);
        ymin = std::min(ymin, y);
        xmax = std::max(xmax, x);
        ymax = std::max(ymax, y);
    }
    const Bounds b{static_cast<double>(xmin) * opt.resolution, static_cast<double>(ymin) * opt.resolution,
                   static_cast<double>(xmax + 1) * opt.resolution, static_cast<double>(ymax + 1) * opt.resolution};
    WorldMap map(opt.name, opt.resolution, b, std::move(free_pts), std::move(obst_pts));
    const auto rep = validate_map(map, opt.footprint_radius);
    if (!rep.valid) throw ScenarioError("ingested map fails validation:\n" + rep.to_text());
    return map;
}

inline WorldMap ingest_cloud(const std::filesystem::path& path, const IngestOptions& opt) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open point file " + path.string());
    const auto cloud = read_point_cloud(in);
    IngestOptions o = opt;
    if (o.name == "ingested") o.name = path.stem().string();
    return ingest_points(cloud, o);
}

} // namespace ptexplore
