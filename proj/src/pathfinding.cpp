#include "spa/pathfinding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace spa {

NavGrid::NavGrid(const WorldGeometry& world, double cell, double clearance) : origin_(world.min), cell_(cell) {
    w_ = std::max(1, static_cast<int>(std::ceil((world.max.x - world.min.x) / cell)));
    h_ = std::max(1, static_cast<int>(std::ceil((world.max.y - world.min.y) / cell)));
    blocked_.assign(static_cast<std::size_t>(w_) * static_cast<std::size_t>(h_), 0);
    for (const auto& poly : world.obstacles) {
        double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
        for (auto v : poly) {
            x0 = std::min(x0, v.x);
            y0 = std::min(y0, v.y);
            x1 = std::max(x1, v.x);
            y1 = std::max(y1, v.y);
        }
        auto [cx0, cy0] = cell_of({x0 - clearance - cell, y0 - clearance - cell});
        auto [cx1, cy1] = cell_of({x1 + clearance + cell, y1 + clearance + cell});
        for (int cy = std::max(0, cy0); cy <= std::min(h_ - 1, cy1); ++cy)
            for (int cx = std::max(0, cx0); cx <= std::min(w_ - 1, cx1); ++cx)
                if (distance_to_polygon(center(cx, cy), poly) <= clearance) blocked_[index(cx, cy)] = 1;
    }
}

std::pair<int, int> NavGrid::cell_of(Vec2 p) const {
    return {static_cast<int>(std::floor((p.x - origin_.x) / cell_)),
            static_cast<int>(std::floor((p.y - origin_.y) / cell_))};
}

Vec2 NavGrid::center(int cx, int cy) const {
    return {origin_.x + (cx + 0.5) * cell_, origin_.y + (cy + 0.5) * cell_};
}

bool NavGrid::cell_free(int cx, int cy) const {
    return cx >= 0 && cy >= 0 && cx < w_ && cy < h_ && !blocked_[index(cx, cy)];
}

bool NavGrid::free(Vec2 p) const {
    auto [cx, cy] = cell_of(p);
    return cell_free(cx, cy);
}

bool NavGrid::line_free(Vec2 a, Vec2 b) const {
    const double len = distance(a, b);
    const int steps = std::max(1, static_cast<int>(std::ceil(len / (cell_ * 0.5))));
    for (int i = 0; i <= steps; ++i) {
        const double t = double(i) / steps;
        if (!free(a + (b - a) * t)) return false;
    }
    return true;
}

std::optional<Vec2> NavGrid::nearest_free(Vec2 p, double max_radius) const {
    if (free(p)) return p;
    auto [px, py] = cell_of(p);
    const int r = static_cast<int>(std::ceil(max_radius / cell_));
    std::optional<Vec2> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
            if (!cell_free(px + dx, py + dy)) continue;
            const Vec2 c = center(px + dx, py + dy);
            const double d = distance(c, p);
            if (d < best_d && d <= max_radius) {
                best_d = d;
                best = c;
            }
        }
    return best;
}

std::optional<std::vector<Vec2>> NavGrid::path(Vec2 from, Vec2 to) const {
    if (!free(to)) return std::nullopt;
    Vec2 start = from;
    if (!free(start)) {
        auto s = nearest_free(from);
        if (!s) return std::nullopt;
        start = *s;
    }
    if (line_free(start, to)) {
        std::vector<Vec2> out{from};
        if (!(start == from)) out.push_back(start);
        out.push_back(to);
        return out;
    }
    auto [sx, sy] = cell_of(start);
    auto [gx, gy] = cell_of(to);
    const int n = w_ * h_;
    std::vector<double> g(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    std::vector<int> parent(static_cast<std::size_t>(n), -1);
    std::vector<std::uint8_t> closed(static_cast<std::size_t>(n), 0);
    auto h = [&](int cx, int cy) {
        const double dx = std::abs(cx - gx), dy = std::abs(cy - gy);
        return (dx + dy) + (std::sqrt(2.0) - 2.0) * std::min(dx, dy);
    };
    using Node = std::tuple<double, int>;  // f, index; ties by index keep it deterministic
    std::priority_queue<Node, std::vector<Node>, std::greater<>> open;
    const int s = index(sx, sy), goal = index(gx, gy);
    g[s] = 0.0;
    open.emplace(h(sx, sy), s);
    while (!open.empty()) {
        auto [f, cur] = open.top();
        open.pop();
        if (closed[cur]) continue;
        closed[cur] = 1;
        if (cur == goal) break;
        const int cx = cur % w_, cy = cur / w_;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (!dx && !dy) continue;
                const int nx = cx + dx, ny = cy + dy;
                if (!cell_free(nx, ny)) continue;
                if (dx && dy && (!cell_free(cx + dx, cy) || !cell_free(cx, cy + dy))) continue;  // no corner cutting
                const int ni = index(nx, ny);
                const double ng = g[cur] + ((dx && dy) ? std::sqrt(2.0) : 1.0);
                if (ng < g[ni]) {
                    g[ni] = ng;
                    parent[ni] = cur;
                    open.emplace(ng + h(nx, ny), ni);
                }
            }
    }
    if (!closed[goal]) return std::nullopt;
    std::vector<Vec2> cells;
    for (int c = goal; c != -1; c = parent[c]) cells.push_back(center(c % w_, c / w_));
    std::reverse(cells.begin(), cells.end());
    cells.front() = start;
    cells.back() = to;
    // String pulling: keep only corners the straight line cannot skip.
    std::vector<Vec2> out{from};
    if (!(start == from)) out.push_back(start);
    std::size_t anchor = 0;
    while (anchor + 1 < cells.size()) {
        std::size_t far = anchor + 1;
        for (std::size_t k = cells.size() - 1; k > anchor + 1; --k)
            if (line_free(cells[anchor], cells[k])) {
                far = k;
                break;
            }
        out.push_back(cells[far]);
        anchor = far;
    }
    return out;
}

std::optional<std::vector<Vec2>> NavGrid::path_to_region(Vec2 from, const Polygon& region) const {
    Vec2 goal = centroid(region);
    if (!free(goal) || !point_in_polygon(goal, region)) {
        std::optional<Vec2> best;
        double best_d = std::numeric_limits<double>::infinity();
        for (int cy = 0; cy < h_; ++cy)
            for (int cx = 0; cx < w_; ++cx) {
                const Vec2 c = center(cx, cy);
                if (!cell_free(cx, cy) || !point_in_polygon(c, region)) continue;
                const double d = distance(c, goal);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
        if (!best) return std::nullopt;
        goal = *best;
    }
    return path(from, goal);
}

}  // namespace spa
