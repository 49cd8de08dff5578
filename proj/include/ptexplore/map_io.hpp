#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ptexplore/world_map.hpp"

namespace ptexplore {

// .mxm text format:
//   MAEXP 1
//   NAME <string>
//   RESOLUTION <float>
//   BOUNDS <xmin> <ymin> <xmax> <ymax>
//   FREE <count>       followed by count "<x> <y>" lines
//   OBSTACLE <count>   followed by count "<x> <y>" lines
// Doubles are written in shortest round-trip form, so save/load is exact.

namespace detail {

inline std::string format_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

inline bool parse_double(std::string_view tok, double& out) {
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return ec == std::errc{} && ptr == tok.data() + tok.size();
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    std::string next(const char* what) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (split_ws(line).empty()) continue;
            return line;
        }
        fail(std::string("unexpected end of file, expected ") + what);
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw MapError("parse error at line " + std::to_string(line_no_) + ": " + msg);
    }

private:
    std::istream& in_;
    std::size_t line_no_ = 0;
};

inline std::size_t parse_count(LineReader& r, const std::string& line, std::string_view keyword) {
    auto tok = split_ws(line);
    if (tok.size() != 2 || tok[0] != keyword) r.fail("expected '" + std::string(keyword) + " <count>'");
    std::size_t n = 0;
    auto [ptr, ec] = std::from_chars(tok[1].data(), tok[1].data() + tok[1].size(), n);
    if (ec != std::errc{} || ptr != tok[1].data() + tok[1].size()) r.fail("bad count");
    return n;
}

inline std::vector<Vec2> parse_points(LineReader& r, std::size_t n) {
    std::vector<Vec2> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::string line = r.next("point");
        auto tok = split_ws(line);
        Vec2 p;
        if (tok.size() != 2 || !parse_double(tok[0], p.x) || !parse_double(tok[1], p.y)) {
            r.fail("malformed point line");
        }
        pts.push_back(p);
    }
    return pts;
}

} // namespace detail

inline WorldMap read_map(std::istream& in, MapLimits limits = {}) {
    detail::LineReader r(in);
    {
        const std::string line = r.next("header");
        auto tok = detail::split_ws(line);
        if (tok.size() != 2 || tok[0] != "MAEXP" || tok[1] != "1") r.fail("expected 'MAEXP 1'");
    }
    std::string name;
    {
        std::string line = r.next("NAME");
        auto pos = line.find_first_not_of(" \t");
        if (line.compare(pos, 4, "NAME") != 0) r.fail("expected NAME");
        pos = line.find_first_not_of(" \t", pos + 4);
        name = pos == std::string::npos ? "" : line.substr(pos);
        while (!name.empty() && (name.back() == '\r' || name.back() == ' ')) name.pop_back();
    }
    double resolution = 0.0;
    {
        const std::string line = r.next("RESOLUTION");
        auto tok = detail::split_ws(line);
        if (tok.size() != 2 || tok[0] != "RESOLUTION" || !detail::parse_double(tok[1], resolution)) {
            r.fail("expected 'RESOLUTION <float>'");
        }
    }
    Bounds b;
    {
        const std::string line = r.next("BOUNDS");
        auto tok = detail::split_ws(line);
        if (tok.size() != 5 || tok[0] != "BOUNDS" || !detail::parse_double(tok[1], b.xmin) ||
            !detail::parse_double(tok[2], b.ymin) || !detail::parse_double(tok[3], b.xmax) ||
            !detail::parse_double(tok[4], b.ymax)) {
            r.fail("expected 'BOUNDS <xmin> <ymin> <xmax> <ymax>'");
        }
    }
    auto free_pts = detail::parse_points(r, detail::parse_count(r, r.next("FREE"), "FREE"));
    auto obst_pts = detail::parse_points(r, detail::parse_count(r, r.next("OBSTACLE"), "OBSTACLE"));
    return WorldMap(std::move(name), resolution, b, std::move(free_pts), std::move(obst_pts), limits);
}

inline WorldMap load_map(const std::filesystem::path& path, MapLimits limits = {}) {
    std::ifstream in(path);
    if (!in) throw MapError("cannot open map file " + path.string());
    return read_map(in, limits);
}

inline void write_map(const WorldMap& map, std::ostream& out) {
    using detail::format_double;
    out << "MAEXP 1\n";
    out << "NAME " << map.name() << '\n';
    out << "RESOLUTION " << format_double(map.resolution()) << '\n';
    const auto& b = map.bounds();
    out << "BOUNDS " << format_double(b.xmin) << ' ' << format_double(b.ymin) << ' ' << format_double(b.xmax)
        << ' ' << format_double(b.ymax) << '\n';
    out << "FREE " << map.free_points().size() << '\n';
    for (const auto& p : map.free_points()) out << format_double(p.x) << ' ' << format_double(p.y) << '\n';
    out << "OBSTACLE " << map.obstacle_points().size() << '\n';
    for (const auto& p : map.obstacle_points()) out << format_double(p.x) << ' ' << format_double(p.y) << '\n';
}

inline std::string map_to_string(const WorldMap& map) {
    std::ostringstream os;
    write_map(map, os);
    return os.str();
}

inline void save_map(const WorldMap& map, const std::filesystem::path& path) {
    if (map.name().find('\n') != std::string::npos) throw MapError("map name must be a single line");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw MapError("cannot write map file " + path.string());
    write_map(map, out);
    out.flush();
    if (!out) throw MapError("I/O error writing " + path.string());
}

} // namespace ptexplore
